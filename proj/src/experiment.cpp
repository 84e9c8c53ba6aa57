#include "kolmo/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "kolmo/bounds.hpp"
#include "kolmo/drift.hpp"
#include "kolmo/kolmo_gauss.hpp"
#include "kolmo/registry.hpp"
#include "kolmo/verify.hpp"
#include "kolmo/wiener.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace kolmo::experiment {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_long(long v) { return std::to_string(v); }

// Linear columns degrade to a marker once the value leaves double range.
std::string fmt_linear(double value, double log_value) {
  if (!std::isfinite(value) || std::abs(log_value) > 700.0) return "OVERFLOW";
  return fmt(value);
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += fmt(v[i]);
  }
  return out;
}

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw ConfigError("cannot open output file: " + path.string());
    out_ << "# schema=1\n";
    write_row(header);
  }

  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

double get_double(const json& j, const std::string& key) {
  require(j.contains(key), "missing field: " + key);
  require(j.at(key).is_number(), "field must be a number: " + key);
  return j.at(key).get<double>();
}

double get_double_or(const json& j, const std::string& key, double dflt) {
  if (!j.contains(key)) return dflt;
  require(j.at(key).is_number(), "field must be a number: " + key);
  return j.at(key).get<double>();
}

long get_long(const json& j, const std::string& key) {
  require(j.contains(key), "missing field: " + key);
  require(j.at(key).is_number_integer(), "field must be an integer: " + key);
  return j.at(key).get<long>();
}

long get_long_or(const json& j, const std::string& key, long dflt) {
  if (!j.contains(key)) return dflt;
  require(j.at(key).is_number_integer(), "field must be an integer: " + key);
  return j.at(key).get<long>();
}

std::string get_string_or(const json& j, const std::string& key,
                          const std::string& dflt) {
  if (!j.contains(key)) return dflt;
  require(j.at(key).is_string(), "field must be a string: " + key);
  return j.at(key).get<std::string>();
}

// Scalars promote to one-element lists so grids and single values share a
// config shape.
std::vector<double> number_list(const json& j, const std::string& key) {
  require(j.contains(key), "missing field: " + key);
  const json& v = j.at(key);
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array()) {
    for (const auto& e : v) {
      require(e.is_number(), "list entries must be numbers: " + key);
      out.push_back(e.get<double>());
    }
  } else {
    throw ConfigError("field must be a number or list: " + key);
  }
  require(!out.empty(), "empty parameter list: " + key);
  return out;
}

std::vector<double> vector_field(const json& j, const std::string& key) {
  require(j.contains(key), "missing field: " + key);
  // A bare number is accepted as a one-entry vector.
  if (j.at(key).is_number()) return {j.at(key).get<double>()};
  require(j.at(key).is_array(), "field must be a list: " + key);
  std::vector<double> out;
  for (const auto& e : j.at(key)) {
    require(e.is_number(), "vector entries must be numbers: " + key);
    out.push_back(e.get<double>());
  }
  return out;
}

gauss::State parse_state(const json& j, const std::string& what) {
  require(j.is_object(), what + " must be an object with p and xi");
  gauss::State s;
  s.p = vector_field(j, "p");
  s.xi = vector_field(j, "xi");
  require(s.p.size() == s.xi.size(), what + ": p and xi lengths differ");
  require(!s.p.empty(), what + ": empty state");
  return s;
}

bounds::DriftState parse_drift_state(const json& j, const std::string& what) {
  require(j.is_object(), what + " must be an object with p and xi");
  bounds::DriftState s;
  s.p = vector_field(j, "p");
  s.xi = vector_field(j, "xi");
  require(!s.p.empty(), what + ": empty position block");
  return s;
}

gauss::Shift parse_shift(const json& j) {
  require(j.is_object(), "shift must be an object with h and k");
  gauss::Shift s;
  s.h = vector_field(j, "h");
  s.k = vector_field(j, "k");
  require(s.h.size() == s.k.size(), "shift: h and k lengths differ");
  require(!s.h.empty(), "shift: empty");
  return s;
}

drift::ProfilePtr parse_profile(const json& j) {
  require(j.is_object() && j.contains("type"), "profile needs a type");
  const std::string type = j.at("type").get<std::string>();
  if (type == "identity") return drift::identity_profile();
  if (type == "affine") return drift::affine_profile(get_double(j, "c"));
  if (type == "affine_tanh") {
    return drift::affine_tanh_profile(get_double(j, "a"), get_double(j, "b"));
  }
  if (type == "log_perturbed") {
    return drift::log_perturbed_profile(get_double(j, "amp"),
                                        get_double(j, "eps"));
  }
  if (type == "power_perturbed") {
    return drift::power_perturbed_profile(
        get_double(j, "amp"), get_double(j, "eps"), get_double(j, "p"));
  }
  throw ConfigError("unknown profile type: " + type);
}

drift::DriftSpec parse_drift(const json& j, int n_components) {
  if (j.is_string()) {
    return drift::make_builtin(j.get<std::string>(), n_components);
  }
  require(j.is_object(), "drift must be a builtin name or an object");
  drift::DriftSpec spec;
  const std::string kind = get_string_or(j, "kind", "finite");
  if (kind == "finite") {
    spec.kind = drift::TargetKind::Finite;
  } else if (kind == "sequence") {
    spec.kind = drift::TargetKind::Sequence;
  } else {
    throw ConfigError("unknown drift kind: " + kind);
  }
  spec.name = get_string_or(j, "name", "custom");
  require(j.contains("components") && j.at("components").is_array() &&
              !j.at("components").empty(),
          "drift needs a non-empty components list");
  for (const auto& cj : j.at("components")) {
    std::vector<int> indices;
    require(cj.contains("indices") && cj.at("indices").is_array(),
            "component needs an indices list");
    for (const auto& e : cj.at("indices")) {
      require(e.is_number_integer(), "component indices must be integers");
      indices.push_back(e.get<int>());
    }
    drift::ProfilePtr profile = parse_profile(cj.at("profile"));
    if (cj.contains("m") || cj.contains("M")) {
      spec.components.push_back(drift::declared_component(
          std::move(indices), std::move(profile), get_double(cj, "m"),
          get_double(cj, "M")));
    } else {
      spec.components.push_back(
          drift::certified_component(std::move(indices), std::move(profile)));
    }
  }
  return spec;
}

std::vector<std::string> report_header() {
  return {"statistical", "lhs",        "lhs_log",   "lhs_ci", "lhs_ci_log",
          "rhs",         "rhs_log",    "rhs_ci",    "rhs_ci_log",
          "margin",      "log_margin", "verdict",   "samples", "seed"};
}

std::vector<std::string> report_cells(const verify::InequalityReport& r) {
  std::vector<std::string> cells;
  cells.push_back(r.statistical ? "1" : "0");
  cells.push_back(fmt_linear(r.lhs.value, r.lhs.log_value));
  cells.push_back(fmt(r.lhs.log_value));
  cells.push_back(fmt_linear(r.lhs.ci, r.lhs.log_value));
  cells.push_back(fmt(r.lhs.ci_log));
  cells.push_back(fmt_linear(r.rhs.value, r.rhs.log_value));
  cells.push_back(fmt(r.rhs.log_value));
  cells.push_back(fmt_linear(r.rhs.ci, r.rhs.log_value));
  cells.push_back(fmt(r.rhs.ci_log));
  const bool linear_ok = std::isfinite(r.lhs.value) &&
                         std::isfinite(r.rhs.value) &&
                         std::abs(r.lhs.log_value) <= 700.0 &&
                         std::abs(r.rhs.log_value) <= 700.0;
  cells.push_back(linear_ok ? fmt(r.margin()) : "OVERFLOW");
  cells.push_back(fmt(r.log_margin()));
  cells.push_back(verify::to_string(r.verdict));
  cells.push_back(fmt_long(r.samples()));
  cells.push_back(std::to_string(r.seed));
  return cells;
}

struct Ctx {
  std::uint64_t seed = 0;
  int workers = 1;
  fs::path out_dir;
  std::vector<verify::Verdict> verdicts;
  json extra;  // kind-specific manifest additions
};

void note_verdict(Ctx& ctx, const verify::InequalityReport& r) {
  ctx.verdicts.push_back(r.verdict);
}

// ---- simulate ----

std::vector<std::string> simulate_header(const json& cfg) {
  if (get_string_or(cfg, "mode", "paths") == "moments") {
    return {"coordinate", "samples", "mean_b",  "mean_int",
            "var_b",      "cov_b_int", "var_int"};
  }
  return {"replicate", "block", "index", "time", "value"};
}

void run_simulate(Ctx& ctx, const json& cfg, Csv& csv) {
  const std::string mode = get_string_or(cfg, "mode", "paths");
  if (mode == "moments") {
    const double t = get_double(cfg, "t");
    verify::McOptions opt;
    opt.samples = get_long(cfg, "samples");
    require(opt.samples > 0, "samples must be positive");
    opt.workers = ctx.workers;
    opt.seed = ctx.seed;
    gauss::State start = cfg.contains("start")
                             ? parse_state(cfg.at("start"), "start")
                             : gauss::zero_state(1);
    const auto summary = verify::exact_pair_moments(t, start, opt);
    for (std::size_t i = 0; i < summary.per_coord.size(); ++i) {
      const auto& m = summary.per_coord[i];
      csv.write_row({std::to_string(i + 1), fmt_long(opt.samples),
                     fmt(m.mean_x()), fmt(m.mean_y()), fmt(m.var_x()),
                     fmt(m.cov_xy()), fmt(m.var_y())});
    }
    return;
  }
  require(mode == "paths", "unknown simulate mode: " + mode);
  const int coords = static_cast<int>(get_long(cfg, "coords"));
  require(coords >= 1, "coords must be positive");
  const double T = get_double(cfg, "T");
  const int steps = static_cast<int>(get_long(cfg, "steps"));
  require(steps >= 1, "steps must be positive");
  const long replicates = get_long_or(cfg, "replicates", 1);
  require(replicates >= 1, "replicates must be positive");
  const std::vector<double> times = wiener::uniform_grid(T, steps);

  if (cfg.contains("drift")) {
    const drift::DriftSpec spec = parse_drift(
        cfg.at("drift"), static_cast<int>(get_long_or(cfg, "n_components",
                                                      coords)));
    drift::DriftShift shift;
    if (cfg.contains("shift_h")) shift.h = vector_field(cfg, "shift_h");
    if (cfg.contains("shift_k")) shift.k = vector_field(cfg, "shift_k");
    const drift::DriftShift* sp =
        (shift.h.empty() && shift.k.empty()) ? nullptr : &shift;
    for (long rep = 0; rep < replicates; ++rep) {
      const drift::GeneralizedPath y = drift::simulate_y(
          spec, sp, times, coords, ctx.seed, static_cast<std::uint64_t>(rep));
      for (int i = 0; i < y.base.n_coords(); ++i) {
        for (int l = 0; l < y.base.n_times(); ++l) {
          csv.write_row({fmt_long(rep), "b", std::to_string(i + 1),
                         fmt(times[static_cast<std::size_t>(l)]),
                         fmt(y.base.coords[static_cast<std::size_t>(i)]
                                          [static_cast<std::size_t>(l)])});
        }
      }
      for (std::size_t j = 0; j < y.integral.size(); ++j) {
        for (int l = 0; l < y.base.n_times(); ++l) {
          csv.write_row({fmt_long(rep), "int", std::to_string(j + 1),
                         fmt(times[static_cast<std::size_t>(l)]),
                         fmt(y.integral[j][static_cast<std::size_t>(l)])});
        }
      }
    }
    return;
  }
  for (long rep = 0; rep < replicates; ++rep) {
    const wiener::PathGrid path = wiener::sample_brownian(
        times, coords, ctx.seed, static_cast<std::uint64_t>(rep));
    for (int i = 0; i < coords; ++i) {
      for (int l = 0; l < path.n_times(); ++l) {
        csv.write_row({fmt_long(rep), "b", std::to_string(i + 1),
                       fmt(times[static_cast<std::size_t>(l)]),
                       fmt(path.coords[static_cast<std::size_t>(i)]
                                      [static_cast<std::size_t>(l)])});
      }
    }
    // One integral block per coordinate, so the standard layout matches the
    // drift layout with the identity profile.
    for (int i = 0; i < coords; ++i) {
      const auto integral = wiener::trapezoid_integral(
          times, path.coords[static_cast<std::size_t>(i)]);
      for (int l = 0; l < path.n_times(); ++l) {
        csv.write_row({fmt_long(rep), "int", std::to_string(i + 1),
                       fmt(times[static_cast<std::size_t>(l)]),
                       fmt(integral[static_cast<std::size_t>(l)])});
      }
    }
  }
}

// ---- kernel ----

std::vector<std::string> kernel_header() {
  return {"t", "p", "xi", "log_density", "density"};
}

std::vector<double> grid_axis(const json& g, const std::string& prefix) {
  const double lo = get_double(g, prefix + "_min");
  const double hi = get_double(g, prefix + "_max");
  const int count = static_cast<int>(get_long(g, prefix + "_count"));
  require(count >= 1, prefix + "_count must be positive");
  require(hi >= lo, prefix + " range inverted");
  std::vector<double> out;
  if (count == 1) {
    out.push_back(lo);
    return out;
  }
  for (int i = 0; i < count; ++i) {
    out.push_back(lo + (hi - lo) * static_cast<double>(i) /
                           static_cast<double>(count - 1));
  }
  return out;
}

void run_kernel(Ctx& ctx, const json& cfg, Csv& csv) {
  (void)ctx;
  const std::vector<double> ts = number_list(cfg, "t");
  const gauss::State start = cfg.contains("start")
                                 ? parse_state(cfg.at("start"), "start")
                                 : gauss::zero_state(1);
  require(start.dim() == 1, "kernel grid covers one coordinate");
  require(cfg.contains("grid"), "missing field: grid");
  const json& g = cfg.at("grid");
  const std::vector<double> ps = grid_axis(g, "p");
  const std::vector<double> xis = grid_axis(g, "xi");
  for (const double t : ts) {
    require(t > 0, "t must be positive");
    for (const double p : ps) {
      for (const double xi : xis) {
        gauss::State end;
        end.p = {p};
        end.xi = {xi};
        const double lg = gauss::heat_kernel_log_density(t, start, end);
        csv.write_row({fmt(t), fmt(p), fmt(xi), fmt(lg),
                       fmt_linear(std::abs(lg) > 700.0
                                      ? std::numeric_limits<double>::infinity()
                                      : std::exp(lg),
                                  lg)});
      }
    }
  }
}

// ---- verify-wang ----

std::vector<std::string> wang_header() {
  std::vector<std::string> h = {"function", "alpha", "t",
                                "x_p",      "x_xi",  "y_p",
                                "y_xi",     "method"};
  const auto tail = report_header();
  h.insert(h.end(), tail.begin(), tail.end());
  return h;
}

std::vector<std::string> function_list(const json& cfg) {
  std::vector<std::string> names;
  if (cfg.contains("functions")) {
    require(cfg.at("functions").is_array(), "functions must be a list");
    for (const auto& e : cfg.at("functions")) {
      names.push_back(e.get<std::string>());
    }
  } else if (cfg.contains("function")) {
    names.push_back(cfg.at("function").get<std::string>());
  }
  require(!names.empty(), "no test functions given");
  for (const auto& n : names) registry::find(n);  // validates the names
  return names;
}

void run_verify_wang(Ctx& ctx, const json& cfg, Csv& csv) {
  const std::string method = get_string_or(cfg, "method", "quadrature");
  const auto names = function_list(cfg);
  const auto alphas = number_list(cfg, "alpha");
  const auto ts = number_list(cfg, "t");
  require(cfg.contains("pairs") && cfg.at("pairs").is_array() &&
              !cfg.at("pairs").empty(),
          "verify-wang needs a non-empty pairs list");

  if (method == "drift-mc") {
    const drift::DriftSpec spec = parse_drift(
        cfg.at("drift"),
        static_cast<int>(get_long_or(cfg, "n_components", 0)));
    const drift::AssumptionMode mode = drift::assumption_mode_from_string(
        get_string_or(cfg, "mode", "uniform"));
    const int n_coords = static_cast<int>(
        get_long_or(cfg, "n_coords", spec.max_index()));
    verify::McOptions opt;
    opt.samples = get_long_or(cfg, "samples", 100000);
    opt.grid_steps = static_cast<int>(get_long_or(cfg, "grid_steps", 256));
    opt.workers = ctx.workers;
    opt.seed = ctx.seed;

    std::vector<std::pair<bounds::DriftState, bounds::DriftState>> pairs;
    for (const auto& pj : cfg.at("pairs")) {
      pairs.emplace_back(parse_drift_state(pj.at("x"), "pair x"),
                         parse_drift_state(pj.at("y"), "pair y"));
    }
    // One endpoint ensemble per distinct (t, start position); integral
    // starts shift additively so they do not enter the key.
    std::map<std::string, verify::EndpointEnsemble> cache;
    auto ensemble_for = [&](double t, const std::vector<double>& p0)
        -> const verify::EndpointEnsemble& {
      std::string key = fmt(t) + "|" + join(p0);
      auto it = cache.find(key);
      if (it == cache.end()) {
        it = cache
                 .emplace(std::move(key),
                          verify::simulate_drift_ensemble(spec, t, p0,
                                                          n_coords, opt))
                 .first;
      }
      return it->second;
    };
    for (const auto& name : names) {
      const auto& f = registry::find(name);
      for (const double alpha : alphas) {
        for (const double t : ts) {
          for (const auto& [x, y] : pairs) {
            const auto& ens_x = ensemble_for(t, x.p);
            const auto& ens_y = ensemble_for(t, y.p);
            const auto r = verify::check_wang_drift(
                f, alpha, t, x, y, spec, mode, ens_x, ens_y, ctx.seed);
            std::vector<std::string> row = {name,      fmt(alpha), fmt(t),
                                            join(x.p), join(x.xi), join(y.p),
                                            join(y.xi), method};
            const auto tail = report_cells(r);
            row.insert(row.end(), tail.begin(), tail.end());
            csv.write_row(row);
            note_verdict(ctx, r);
          }
        }
      }
    }
    return;
  }

  require(method == "quadrature" || method == "mc",
          "unknown verify-wang method: " + method);
  std::vector<std::pair<gauss::State, gauss::State>> pairs;
  for (const auto& pj : cfg.at("pairs")) {
    pairs.emplace_back(parse_state(pj.at("x"), "pair x"),
                       parse_state(pj.at("y"), "pair y"));
  }
  verify::McOptions opt;
  opt.samples = get_long_or(cfg, "samples", 100000);
  opt.workers = ctx.workers;
  opt.seed = ctx.seed;
  const double abs_tol = get_double_or(cfg, "abs_tol", 1e-10);
  for (const auto& name : names) {
    const auto& f = registry::find(name);
    for (const double alpha : alphas) {
      for (const double t : ts) {
        for (const auto& [x, y] : pairs) {
          const auto r =
              method == "quadrature"
                  ? verify::check_wang_quadrature(f, alpha, t, x, y, abs_tol)
                  : verify::check_wang_mc(f, alpha, t, x, y, opt);
          std::vector<std::string> row = {name,      fmt(alpha), fmt(t),
                                          join(x.p), join(x.xi), join(y.p),
                                          join(y.xi), method};
          const auto tail = report_cells(r);
          row.insert(row.end(), tail.begin(), tail.end());
          csv.write_row(row);
          note_verdict(ctx, r);
        }
      }
    }
  }
}

// ---- verify-rlsi ----

std::vector<std::string> rlsi_header() {
  std::vector<std::string> h = {"function", "t", "x_p", "x_xi"};
  const auto tail = report_header();
  h.insert(h.end(), tail.begin(), tail.end());
  return h;
}

void run_verify_rlsi(Ctx& ctx, const json& cfg, Csv& csv) {
  const auto names = function_list(cfg);
  for (const auto& n : names) {
    require(registry::find(n).strictly_positive,
            "verify-rlsi needs strictly positive functions: " + n);
  }
  const auto ts = number_list(cfg, "t");
  require(cfg.contains("points") && cfg.at("points").is_array() &&
              !cfg.at("points").empty(),
          "verify-rlsi needs a non-empty points list");
  std::vector<gauss::State> points;
  for (const auto& pj : cfg.at("points")) {
    points.push_back(parse_state(pj, "point"));
  }
  verify::RlsiOptions opt;
  opt.m = get_double_or(cfg, "m", 1.0);
  opt.M = get_double_or(cfg, "M", 1.0);
  if (cfg.contains("generalized")) {
    require(cfg.at("generalized").is_boolean(), "generalized must be boolean");
    opt.generalized = cfg.at("generalized").get<bool>();
  }
  for (const auto& name : names) {
    const auto& f = registry::find(name);
    for (const double t : ts) {
      for (const auto& x : points) {
        const auto r = verify::check_rlsi(f, t, x, opt);
        std::vector<std::string> row = {name, fmt(t), join(x.p), join(x.xi)};
        const auto tail = report_cells(r);
        row.insert(row.end(), tail.begin(), tail.end());
        csv.write_row(row);
        note_verdict(ctx, r);
      }
    }
  }
}

// ---- verify-rn ----

std::vector<std::string> rn_header() {
  std::vector<std::string> h = {"q", "t", "h", "k", "style", "method"};
  const auto tail = report_header();
  h.insert(h.end(), tail.begin(), tail.end());
  return h;
}

void run_verify_rn(Ctx& ctx, const json& cfg, Csv& csv) {
  const auto qs = number_list(cfg, "q");
  const auto ts = number_list(cfg, "t");
  require(cfg.contains("shifts") && cfg.at("shifts").is_array() &&
              !cfg.at("shifts").empty(),
          "verify-rn needs a non-empty shifts list");
  std::vector<gauss::Shift> shifts;
  for (const auto& sj : cfg.at("shifts")) shifts.push_back(parse_shift(sj));
  require(cfg.contains("styles") && cfg.at("styles").is_array() &&
              !cfg.at("styles").empty(),
          "verify-rn needs a non-empty styles list");
  std::vector<bounds::RnStyle> styles;
  for (const auto& sj : cfg.at("styles")) {
    try {
      styles.push_back(bounds::rn_style_from_string(sj.get<std::string>()));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  const std::string method = get_string_or(cfg, "method", "exact");
  require(method == "exact" || method == "mc",
          "unknown verify-rn method: " + method);
  drift::DriftSpec spec;
  const drift::DriftSpec* spec_ptr = nullptr;
  if (cfg.contains("drift")) {
    spec = parse_drift(cfg.at("drift"),
                       static_cast<int>(get_long_or(cfg, "n_components", 256)));
    spec_ptr = &spec;
  }
  verify::McOptions opt;
  opt.samples = get_long_or(cfg, "samples", 100000);
  opt.workers = ctx.workers;
  opt.seed = ctx.seed;
  for (const double q : qs) {
    for (const double t : ts) {
      for (const auto& shift : shifts) {
        const auto reports =
            method == "exact"
                ? verify::check_rn_bounds(q, t, shift, styles, spec_ptr)
                : verify::check_rn_bounds_mc(q, t, shift, styles, opt,
                                             spec_ptr);
        for (std::size_t si = 0; si < reports.size(); ++si) {
          std::vector<std::string> row = {
              fmt(q),     fmt(t), join(shift.h), join(shift.k),
              bounds::to_string(styles[si]), method};
          const auto tail = report_cells(reports[si]);
          row.insert(row.end(), tail.begin(), tail.end());
          csv.write_row(row);
          note_verdict(ctx, reports[si]);
        }
      }
    }
  }
}

// ---- convergence ----

std::vector<std::string> convergence_header() {
  return {"rank", "replicates", "mean_error", "max_error",
          "se",   "mean_sq_error", "envelope"};
}

void run_convergence(Ctx& ctx, const json& cfg, Csv& csv) {
  verify::ConvergenceOptions opt;
  const std::string target = get_string_or(cfg, "target", "standard");
  drift::DriftSpec spec;
  if (target == "standard") {
    opt.target = verify::ConvergenceTarget::Standard;
  } else {
    opt.target = target == "finite" ? verify::ConvergenceTarget::Finite
                                    : verify::ConvergenceTarget::Sequence;
    require(target == "finite" || target == "sequence",
            "unknown convergence target: " + target);
    require(cfg.contains("drift"), "convergence target needs a drift");
    spec = parse_drift(cfg.at("drift"),
                       static_cast<int>(get_long_or(cfg, "n_components", 256)));
    opt.spec = &spec;
  }
  opt.n_coords = static_cast<int>(get_long_or(cfg, "coords", 256));
  opt.T = get_double_or(cfg, "T", 1.0);
  opt.grid_steps = static_cast<int>(get_long_or(cfg, "grid_steps", 64));
  opt.replicates = static_cast<int>(get_long_or(cfg, "replicates", 100));
  opt.seed = ctx.seed;
  opt.workers = ctx.workers;
  require(cfg.contains("ranks") && cfg.at("ranks").is_array() &&
              !cfg.at("ranks").empty(),
          "convergence needs a non-empty ranks list");
  std::vector<int> ranks;
  for (const auto& e : cfg.at("ranks")) {
    require(e.is_number_integer(), "ranks must be integers");
    ranks.push_back(e.get<int>());
  }
  const auto study = verify::convergence_study(ranks, opt);
  for (const auto& rec : study.records) {
    csv.write_row({std::to_string(rec.rank), std::to_string(rec.replicates),
                   fmt(rec.mean_error), fmt(rec.max_error), fmt(rec.se),
                   fmt(rec.mean_sq_error), fmt(rec.envelope)});
  }
  ctx.extra["trend_ok"] = study.trend_ok;
}

// ---- dispatch ----

std::string data_kind(const json& cfg) {
  require(cfg.contains("kind") && cfg.at("kind").is_string(),
          "config needs a kind");
  std::string kind = cfg.at("kind").get<std::string>();
  if (kind == "sweep") {
    require(cfg.contains("base") && cfg.at("base").is_object(),
            "sweep needs a base config");
    return data_kind(cfg.at("base"));
  }
  return kind;
}

std::vector<std::string> header_for(const std::string& kind, const json& cfg) {
  if (kind == "simulate") return simulate_header(cfg);
  if (kind == "kernel") return kernel_header();
  if (kind == "verify-wang") return wang_header();
  if (kind == "verify-rlsi") return rlsi_header();
  if (kind == "verify-rn") return rn_header();
  if (kind == "convergence") return convergence_header();
  throw ConfigError("unknown experiment kind: " + kind);
}

void dispatch(Ctx& ctx, const json& cfg, Csv& csv) {
  const std::string kind = cfg.at("kind").get<std::string>();
  if (kind == "simulate") return run_simulate(ctx, cfg, csv);
  if (kind == "kernel") return run_kernel(ctx, cfg, csv);
  if (kind == "verify-wang") return run_verify_wang(ctx, cfg, csv);
  if (kind == "verify-rlsi") return run_verify_rlsi(ctx, cfg, csv);
  if (kind == "verify-rn") return run_verify_rn(ctx, cfg, csv);
  if (kind == "convergence") return run_convergence(ctx, cfg, csv);
  if (kind == "sweep") {
    const json& base = cfg.at("base");
    require(cfg.contains("grid") && cfg.at("grid").is_object() &&
                !cfg.at("grid").empty(),
            "sweep needs a non-empty grid object");
    // Cross product over the grid fields (alphabetical field order), each
    // assignment patched over the base config.
    std::vector<json> combos{json::object()};
    for (const auto& [field, values] : cfg.at("grid").items()) {
      require(values.is_array() && !values.empty(),
              "sweep grid entries must be non-empty lists");
      std::vector<json> next;
      for (const auto& combo : combos) {
        for (const auto& v : values) {
          json c = combo;
          c[field] = v;
          next.push_back(std::move(c));
        }
      }
      combos = std::move(next);
    }
    for (const auto& combo : combos) {
      json patched = base;
      for (const auto& [field, v] : combo.items()) patched[field] = v;
      dispatch(ctx, patched, csv);
    }
    return;
  }
  throw ConfigError("unknown experiment kind: " + kind);
}

std::uint64_t parse_seed_text(const std::string& text) {
  if (text.empty()) throw ConfigError("empty seed value");
  std::uint64_t value = 0;
  for (const char c : text) {
    if (c < '0' || c > '9') throw ConfigError("seed must be decimal: " + text);
    const std::uint64_t digit = static_cast<std::uint64_t>(c - '0');
    if (value > (UINT64_MAX - digit) / 10) {
      throw ConfigError("seed out of range: " + text);
    }
    value = value * 10 + digit;
  }
  return value;
}

RunResult run_impl(json cfg, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  require(cfg.is_object(), "config must be a JSON object");
  const std::string own_kind = [&] {
    require(cfg.contains("kind") && cfg.at("kind").is_string(),
            "config needs a kind");
    return cfg.at("kind").get<std::string>();
  }();
  const std::string kind = data_kind(cfg);
  if (!opt.expected_kind.empty() && kind != opt.expected_kind) {
    throw ConfigError("config kind '" + kind + "' does not match subcommand '" +
                      opt.expected_kind + "'");
  }

  Ctx ctx;
  if (opt.seed_override) {
    ctx.seed = *opt.seed_override;
  } else if (opt.env_seed) {
    ctx.seed = parse_seed_text(*opt.env_seed);
  } else {
    require(cfg.contains("seed"), "seed is mandatory");
    require(cfg.at("seed").is_number_integer() &&
                cfg.at("seed").get<std::int64_t>() >= 0,
            "seed must be a nonnegative integer");
    ctx.seed = cfg.at("seed").get<std::uint64_t>();
  }
  int workers = 1;
  if (opt.workers_override) {
    workers = *opt.workers_override;
  } else if (cfg.contains("workers")) {
    require(cfg.at("workers").is_number_integer(),
            "workers must be an integer");
    workers = cfg.at("workers").get<int>();
  }
  require(workers >= 1 && workers <= 1024, "workers out of range");
  ctx.workers = workers;
  std::string out = get_string_or(cfg, "out", ".");
  if (opt.out_override) out = *opt.out_override;
  ctx.out_dir = out;
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);

  // Effective values go into the echo so a rerun from the manifest
  // reproduces the run without the original command line.
  cfg["seed"] = ctx.seed;
  cfg["workers"] = ctx.workers;
  cfg["out"] = out;

  const fs::path csv_path = ctx.out_dir / (kind + ".csv");
  {
    Csv csv(csv_path, header_for(kind, own_kind == "sweep"
                                           ? cfg.at("base")
                                           : cfg));
    try {
      dispatch(ctx, cfg, csv);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }

  RunResult result;
  result.kind = kind;
  result.outputs.push_back(csv_path.string());
  bool any_violated = false;
  bool any_inconclusive = false;
  for (const auto v : ctx.verdicts) {
    any_violated = any_violated || v == verify::Verdict::Violated;
    any_inconclusive = any_inconclusive || v == verify::Verdict::Inconclusive;
  }
  result.exit_status = any_violated ? 2 : (any_inconclusive ? 3 : 0);

  const auto t1 = std::chrono::steady_clock::now();
  json manifest;
  manifest["schema"] = 1;
  manifest["version"] = kToolVersion;
  manifest["kind"] = kind;
  manifest["seed"] = ctx.seed;
  manifest["workers"] = ctx.workers;
  manifest["wall_time_s"] =
      std::chrono::duration<double>(t1 - t0).count();
  manifest["config"] = cfg;
  manifest["exit_status"] = result.exit_status;
  for (const auto& [key, value] : ctx.extra.items()) manifest[key] = value;
  // Relative names keep the directory relocatable; the manifest names
  // itself last.
  json outputs_json = json::array();
  outputs_json.push_back(kind + ".csv");
  outputs_json.push_back("manifest.json");
  manifest["outputs"] = outputs_json;
  const fs::path manifest_path = ctx.out_dir / "manifest.json";
  {
    std::ofstream mf(manifest_path);
    if (!mf) {
      throw ConfigError("cannot write manifest: " + manifest_path.string());
    }
    mf << manifest.dump(2) << '\n';
  }
  result.outputs.push_back(manifest_path.string());
  return result;
}

}  // namespace

RunResult run_file(const std::string& config_path, const RunOptions& opt) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot read config: " + config_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return run_json_text(ss.str(), opt);
}

RunResult run_json_text(const std::string& json_text, const RunOptions& opt) {
  json cfg;
  try {
    cfg = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  return run_impl(std::move(cfg), opt);
}

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read report: " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "# schema=1") {
    throw ConfigError("unexpected report schema in " + path.string());
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw ConfigError("empty report: " + path.string());
  return rows;
}

std::size_t column_of(const std::vector<std::string>& header,
                      const std::string& name, const fs::path& path) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ConfigError("column '" + name + "' missing in " + path.string());
}

}  // namespace

std::vector<std::string> emit_plotdata(
    const std::string& manifest_or_dir,
    const std::optional<std::string>& out_dir) {
  fs::path manifest_path = manifest_or_dir;
  if (fs::is_directory(manifest_path)) manifest_path /= "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("cannot read manifest: " + manifest_path.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest parse: ") + e.what());
  }
  require(manifest.contains("kind") && manifest.contains("outputs"),
          "manifest lacks kind/outputs");
  const std::string kind = manifest.at("kind").get<std::string>();
  fs::path csv_path;
  for (const auto& o : manifest.at("outputs")) {
    const fs::path p = o.get<std::string>();
    if (p.extension() == ".csv") csv_path = p;
  }
  require(!csv_path.empty(), "manifest lists no CSV output");
  if (csv_path.is_relative()) {
    // Outputs are recorded as written; resolve next to the manifest if the
    // working directory has moved since.
    if (!fs::exists(csv_path)) {
      csv_path = manifest_path.parent_path() / csv_path.filename();
    }
  }
  const fs::path dest =
      out_dir ? fs::path(*out_dir) : manifest_path.parent_path();
  std::error_code ec;
  fs::create_directories(dest, ec);

  const auto rows = read_csv(csv_path);
  const auto& header = rows.front();
  std::vector<std::string> written;

  if (kind == "convergence") {
    const std::size_t c_rank = column_of(header, "rank", csv_path);
    const std::size_t c_mean = column_of(header, "mean_error", csv_path);
    const std::size_t c_se = column_of(header, "se", csv_path);
    const fs::path out = dest / "convergence.dat";
    std::ofstream f(out);
    f << "# rank mean_error se\n";
    for (std::size_t i = 1; i < rows.size(); ++i) {
      f << rows[i][c_rank] << ' ' << rows[i][c_mean] << ' ' << rows[i][c_se]
        << '\n';
    }
    written.push_back(out.string());
    return written;
  }
  if (kind == "verify-rn") {
    const std::size_t c_q = column_of(header, "q", csv_path);
    const std::size_t c_style = column_of(header, "style", csv_path);
    const std::size_t c_lhs = column_of(header, "lhs_log", csv_path);
    const std::size_t c_rhs = column_of(header, "rhs_log", csv_path);
    const std::size_t c_margin = column_of(header, "log_margin", csv_path);
    std::map<std::string, std::ofstream> files;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const std::string& style = rows[i][c_style];
      auto it = files.find(style);
      if (it == files.end()) {
        const fs::path out = dest / ("rn_" + style + ".dat");
        it = files.emplace(style, std::ofstream(out)).first;
        it->second << "# q lhs_log rhs_log log_margin\n";
        written.push_back(out.string());
      }
      it->second << rows[i][c_q] << ' ' << rows[i][c_lhs] << ' '
                 << rows[i][c_rhs] << ' ' << rows[i][c_margin] << '\n';
    }
    return written;
  }
  if (kind == "kernel") {
    const std::size_t c_p = column_of(header, "p", csv_path);
    const std::size_t c_xi = column_of(header, "xi", csv_path);
    const std::size_t c_d = column_of(header, "density", csv_path);
    const fs::path out = dest / "kernel.dat";
    std::ofstream f(out);
    f << "# p xi density\n";
    for (std::size_t i = 1; i < rows.size(); ++i) {
      f << rows[i][c_p] << ' ' << rows[i][c_xi] << ' ' << rows[i][c_d] << '\n';
    }
    written.push_back(out.string());
    return written;
  }
  throw ConfigError("plotdata does not support kind: " + kind);
}

}  // namespace kolmo::experiment
