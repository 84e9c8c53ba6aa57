// Acceptance suite: one self-contained scenario per criterion, each printing
// a single [PASS]/[FAIL] line. Scenarios are numbered stable identifiers so
// CI logs stay comparable across revisions.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kolmo/bounds.hpp"
#include "kolmo/experiment.hpp"
#include "kolmo/kolmo_gauss.hpp"
#include "kolmo/quadrature.hpp"
#include "kolmo/registry.hpp"
#include "kolmo/verify.hpp"
#include "kolmo/wiener.hpp"

namespace fs = std::filesystem;
using namespace kolmo;

namespace {

constexpr std::uint64_t kSeed = 20260822;

struct Checker {
  std::vector<std::string> failures;

  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  template <typename... Args>
  void requiref(bool ok, const char* fmt, Args... args) {
    if (ok) return;
    char buf[512];
    std::snprintf(buf, sizeof(buf), fmt, args...);
    failures.emplace_back(buf);
  }
};

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("kolmo_accept_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) cells.push_back(cell);
  return cells;
}

// Rows of a schema-1 CSV as maps keyed by header name.
std::vector<std::map<std::string, std::string>> read_rows(
    const fs::path& path) {
  std::istringstream in(slurp(path));
  std::string line;
  std::vector<std::map<std::string, std::string>> rows;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (header.empty()) {
      header = cells;
      continue;
    }
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) {
      row[header[i]] = cells[i];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

int run_cli(const std::string& cli, const std::string& args) {
  const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  if (rc == -1 || !WIFEXITED(rc)) return -1;
  return WEXITSTATUS(rc);
}

// ---------------------------------------------------------------------------
// 1. Kernel exactness: closed form at the origin, unit mass, and pointwise
//    agreement with the assembled bivariate normal.

Checker criterion1() {
  Checker c;
  const auto zero = gauss::zero_state(1);

  const double origin = gauss::heat_kernel_density(1.0, zero, zero);
  const double expected = std::sqrt(3.0) / std::acos(-1.0);
  c.requiref(std::abs(origin - expected) <= 1e-12,
             "density at origin %.17g vs %.17g", origin, expected);

  const auto mass = quad::integrate2(
      [&](double p, double xi) {
        gauss::State end;
        end.p = {p};
        end.xi = {xi};
        return gauss::heat_kernel_density(1.0, zero, end);
      },
      -8.0, 8.0, -5.0, 5.0, 1e-9);
  c.require(mass.converged, "mass quadrature did not converge");
  c.requiref(std::abs(mass.value - 1.0) <= 1e-6, "mass %.12g", mass.value);

  // Reference: generic bivariate normal with covariance [[1,1/2],[1/2,1/3]].
  const double var_b = 1.0, cov = 0.5, var_int = 1.0 / 3.0;
  const double det = var_b * var_int - cov * cov;
  std::mt19937_64 gen(kSeed);
  std::uniform_real_distribution<double> up(-6.0, 6.0), uxi(-4.0, 4.0);
  int bad = 0;
  for (int i = 0; i < 10000; ++i) {
    const double p = up(gen), xi = uxi(gen);
    gauss::State end;
    end.p = {p};
    end.xi = {xi};
    const double dens = gauss::heat_kernel_density(1.0, zero, end);
    const double qf =
        (var_int * p * p - 2.0 * cov * p * xi + var_b * xi * xi) / det;
    const double ref = std::exp(-std::log(2.0 * std::acos(-1.0)) -
                                0.5 * std::log(det) - 0.5 * qf);
    if (std::abs(dens - ref) > 1e-10 * ref) bad += 1;
  }
  c.requiref(bad == 0, "%d of 10000 points off the reference normal", bad);
  return c;
}

// ---------------------------------------------------------------------------
// 2. Sampling exactness: moments of a million exact draws against the known
//    covariance and the shifted mean, within three standard errors.

Checker criterion2() {
  Checker c;
  gauss::State start;
  start.p = {0.3};
  start.xi = {-0.2};
  verify::McOptions opt;
  opt.samples = 1000000;
  opt.seed = kSeed;
  opt.workers = 8;
  const auto summary = verify::exact_pair_moments(1.0, start, opt);
  const auto& m = summary.per_coord.at(0);
  const double n = 1e6;
  const double var_b = 1.0, var_int = 1.0 / 3.0, cov = 0.5;

  const double se_mean_b = std::sqrt(var_b / n);
  const double se_mean_int = std::sqrt(var_int / n);
  const double se_var_b = var_b * std::sqrt(2.0 / n);
  const double se_var_int = var_int * std::sqrt(2.0 / n);
  const double se_cov = std::sqrt((var_b * var_int + cov * cov) / n);

  c.requiref(std::abs(m.mean_x() - 0.3) <= 3 * se_mean_b, "mean_b %.6g",
             m.mean_x());
  c.requiref(std::abs(m.mean_y() - 0.1) <= 3 * se_mean_int, "mean_int %.6g",
             m.mean_y());
  c.requiref(std::abs(m.var_x() - var_b) <= 3 * se_var_b, "var_b %.6g",
             m.var_x());
  c.requiref(std::abs(m.var_y() - var_int) <= 3 * se_var_int, "var_int %.6g",
             m.var_y());
  c.requiref(std::abs(m.cov_xy() - cov) <= 3 * se_cov, "cov %.6g", m.cov_xy());
  return c;
}

// ---------------------------------------------------------------------------
// 3. Density-ratio algebra: the two closed-form routes agree to 1e-12 and the
//    MC estimate of the L^q norm stays inside its own confidence interval.

Checker criterion3() {
  Checker c;
  verify::McOptions opt;
  opt.samples = 1000000;
  opt.seed = kSeed;
  opt.workers = 8;
  const std::vector<std::pair<double, double>> shifts = {
      {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
  for (double q : {1.5, 2.0, 3.0, 4.0}) {
    for (double t : {0.5, 1.0, 2.0}) {
      for (const auto& [h, k] : shifts) {
        gauss::Shift shift;
        shift.h = {h};
        shift.k = {k};
        const double direct = gauss::lq_log_norm_exact(t, shift, q);
        const double via_form = gauss::lq_log_norm_quadratic(t, shift, q);
        c.requiref(std::abs(direct - via_form) <= 1e-12,
                   "routes differ %.3e at q=%g t=%g h=%g k=%g",
                   std::abs(direct - via_form), q, t, h, k);
        const auto est = verify::estimate_rn_lq_norm_mc(q, t, shift, opt);
        c.requiref(std::abs(est.log_value - direct) <= est.ci_log,
                   "MC off closed form at q=%g t=%g h=%g k=%g", q, t, h, k);
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// 4. Change-of-measure consistency: unit mean, second moment exp(|gamma|^2),
//    endpoint identities of the shift direction.

Checker criterion4() {
  Checker c;
  gauss::Shift shift;
  shift.h = {1.0};
  shift.k = {0.0};
  const double t = 1.0;

  const auto g = bounds::girsanov_coefficients(t, shift);
  c.requiref(std::abs(g.gamma_norm_sq - 4.0) <= 1e-12, "|gamma|^2 %.17g",
             g.gamma_norm_sq);
  const auto at_t = bounds::girsanov_gamma_at(g, t);
  const auto int_t = bounds::girsanov_gamma_integral(g, t);
  c.requiref(std::abs(at_t.at(0) + shift.h[0]) <= 1e-12, "gamma(t) %.17g",
             at_t.at(0));
  c.requiref(std::abs(int_t.at(0) + (t * shift.h[0] + shift.k[0])) <= 1e-12,
             "int gamma %.17g", int_t.at(0));

  verify::McOptions opt;
  opt.samples = 1000000;
  opt.seed = kSeed;
  opt.workers = 8;
  const auto first = verify::estimate_girsanov_moment(1.0, t, shift, opt);
  c.requiref(std::abs(first.value - 1.0) <= first.ci,
             "E[J] = %.6g +- %.3g excludes 1", first.value, first.ci);
  const auto second = verify::estimate_girsanov_moment(2.0, t, shift, opt);
  const double target = std::exp(4.0);
  c.requiref(std::abs(second.value - target) <= second.ci,
             "E[J^2] = %.6g +- %.3g excludes %.6g", second.value, second.ci,
             target);
  return c;
}

// ---------------------------------------------------------------------------
// 5. Bound domination: the distance-style bound never drops below the exact
//    norm anywhere on a random parameter grid.

Checker criterion5() {
  Checker c;
  std::mt19937_64 gen(kSeed);
  std::uniform_real_distribution<double> uq(1.05, 4.5), ut(0.1, 2.1),
      ushift(-2.0, 2.0);
  std::uniform_int_distribution<int> ud(1, 3);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const double q = uq(gen), t = ut(gen);
    const int d = ud(gen);
    gauss::Shift shift;
    for (int j = 0; j < d; ++j) {
      shift.h.push_back(ushift(gen));
      shift.k.push_back(ushift(gen));
    }
    const auto bound =
        bounds::rn_bound(bounds::RnStyle::Hypoelliptic, q, t, shift);
    const double exact = gauss::lq_log_norm_exact(t, shift, q);
    if (bound.log_value < exact - 1e-12) violations += 1;
  }
  c.requiref(violations == 0, "%d of 1000 grid points violated", violations);
  return c;
}

// ---------------------------------------------------------------------------
// 6. Two-point comparisons by quadrature across the whole registry: 10
//    functions x 3 exponents x 2 times x 5 point pairs, all HOLDS.

Checker criterion6() {
  Checker c;
  struct Pair {
    gauss::State x, y;
  };
  auto mk = [](double px, double xix, double py, double xiy) {
    Pair pr;
    pr.x.p = {px};
    pr.x.xi = {xix};
    pr.y.p = {py};
    pr.y.xi = {xiy};
    return pr;
  };
  // Every pair keeps |x - y| <= 2; the first is the same-point case.
  const std::vector<Pair> pairs = {
      mk(0.0, 0.0, 0.0, 0.0), mk(1.0, 0.0, 0.0, 0.0), mk(0.0, 0.5, 0.0, 0.0),
      mk(0.7, -0.5, -0.3, 0.2), mk(-1.0, 0.3, 0.6, -0.4)};
  int checks = 0;
  for (const auto& f : registry::all()) {
    for (double alpha : {1.5, 2.0, 4.0}) {
      for (double t : {0.5, 1.0}) {
        for (const auto& pr : pairs) {
          const auto report =
              verify::check_wang_quadrature(f, alpha, t, pr.x, pr.y);
          checks += 1;
          c.requiref(report.verdict == verify::Verdict::Holds,
                     "%s at alpha=%g t=%g pair %d: %s", f.name.c_str(), alpha,
                     t, checks % 5, verify::to_string(report.verdict).c_str());
        }
      }
    }
  }
  c.requiref(checks == 300, "expected 300 checks, ran %d", checks);
  return c;
}

// ---------------------------------------------------------------------------
// 7. Gradient-entropy comparison by quadrature for every strictly positive
//    registry function at three base points and two times.

Checker criterion7() {
  Checker c;
  std::vector<gauss::State> points(3, gauss::zero_state(1));
  points[1].p = {1.0};
  points[2].xi = {1.0};
  int positive = 0;
  for (const auto& f : registry::all()) {
    if (!f.strictly_positive) continue;
    positive += 1;
    for (double t : {0.5, 1.0}) {
      for (const auto& x : points) {
        const auto report = verify::check_rlsi(f, t, x);
        c.requiref(report.verdict == verify::Verdict::Holds,
                   "%s at t=%g x=(%g,%g): %s margin %.3e", f.name.c_str(), t,
                   x.p[0], x.xi[0], verify::to_string(report.verdict).c_str(),
                   report.margin());
      }
    }
  }
  c.requiref(positive == 9, "expected 9 strictly positive functions, got %d",
             positive);
  return c;
}

// ---------------------------------------------------------------------------
// 8. Nonlinear drift: the validator certifies the declared slope window at
//    ten thousand probes, and twenty MC comparisons produce no violation.

Checker criterion8() {
  Checker c;
  const auto spec = drift::make_builtin("tanh-single");

  const auto validation =
      drift::validate_assumption(spec, drift::AssumptionMode::Uniform, 1,
                                 10000, kSeed);
  c.requiref(validation.verdict == drift::ValidationVerdict::Pass,
             "validator verdict %s",
             drift::to_string(validation.verdict).c_str());
  for (const auto& comp : validation.components) {
    c.requiref(comp.ok, "component %d window [%g,%g] observed [%g,%g]",
               comp.component, comp.declared_lo, comp.declared_hi,
               comp.observed_lo, comp.observed_hi);
  }

  verify::McOptions opt;
  opt.samples = 1000000;
  opt.seed = kSeed;
  opt.workers = 8;
  opt.grid_steps = 256;
  const std::vector<double> origin = {0.0};
  const std::vector<double> off = {0.4};
  const auto ens_origin =
      verify::simulate_drift_ensemble(spec, 1.0, origin, 1, opt);
  const auto ens_off = verify::simulate_drift_ensemble(spec, 1.0, off, 1, opt);

  const bounds::DriftState at_origin{{0.0}, {0.0}};
  const bounds::DriftState at_off{{0.4}, {0.1}};
  const std::vector<const char*> names = {"gauss_bell", "rational_bell",
                                          "logistic", "raised_cos",
                                          "sech_prod"};
  int configs = 0, violated = 0;
  for (const char* name : names) {
    const auto& f = registry::find(name);
    for (double alpha : {2.0, 4.0}) {
      const auto same = verify::check_wang_drift(
          f, alpha, 1.0, at_origin, at_origin, spec,
          drift::AssumptionMode::Uniform, ens_origin, ens_origin, kSeed);
      const auto cross = verify::check_wang_drift(
          f, alpha, 1.0, at_off, at_origin, spec,
          drift::AssumptionMode::Uniform, ens_off, ens_origin, kSeed);
      configs += 2;
      if (same.verdict == verify::Verdict::Violated) violated += 1;
      if (cross.verdict == verify::Verdict::Violated) violated += 1;
    }
  }
  c.requiref(configs == 20, "expected 20 configurations, ran %d", configs);
  c.requiref(violated == 0, "%d of %d configurations violated", violated,
             configs);
  return c;
}

// ---------------------------------------------------------------------------
// 9. Truncation convergence: monotone trend across doubling ranks and mean
//    squared error within a factor 4 of the tail-sum envelope.

Checker criterion9() {
  Checker c;
  std::vector<int> ranks;
  for (int r = 2; r <= 256; r *= 2) ranks.push_back(r);
  verify::ConvergenceOptions opt;
  opt.n_coords = 256;
  opt.T = 1.0;
  opt.replicates = 100;
  opt.seed = kSeed;
  opt.workers = 8;
  const auto study = verify::convergence_study(ranks, opt);
  c.require(study.trend_ok, "monotone trend test failed");
  c.requiref(study.records.size() == ranks.size(), "got %zu records",
             study.records.size());
  for (const auto& rec : study.records) {
    if (rec.envelope > 0.0) {
      c.requiref(rec.mean_sq_error <= 4.0 * rec.envelope,
                 "rank %d MSE %.4g above 4x envelope %.4g", rec.rank,
                 rec.mean_sq_error, rec.envelope);
      c.requiref(rec.mean_sq_error >= rec.envelope / 4.0,
                 "rank %d MSE %.4g below envelope/4 %.4g", rec.rank,
                 rec.mean_sq_error, rec.envelope);
    } else {
      // Full rank: the coupled difference must vanish identically.
      c.requiref(rec.mean_sq_error == 0.0 && rec.max_error == 0.0,
                 "rank %d nonzero error with empty tail", rec.rank);
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// 10. Discrepancy surfacing through the CLI: the q = 4 sweep row for the
//     identity-profile style must read VIOLATED with the known log values,
//     and the process must exit with status 2.

Checker criterion10(const std::string& cli) {
  Checker c;
  if (cli.empty()) {
    c.require(false, "--cli path required for this criterion");
    return c;
  }
  const auto dir = fresh_dir("crit10");
  const fs::path cfg = dir / "config.json";
  write_text(cfg, R"({
    "kind": "verify-rn", "seed": 20260822,
    "q": [1.5, 2.0, 3.0, 4.0], "t": 1.0,
    "shifts": [{"h": 0.0, "k": 1.0}],
    "styles": ["exact", "identity", "hypoelliptic"]
  })");
  const int rc = run_cli(cli, "verify-rn --config " + cfg.string() +
                                  " --out " + dir.string());
  c.requiref(rc == 2, "exit status %d, expected 2", rc);

  const auto rows = read_rows(dir / "verify-rn.csv");
  c.requiref(rows.size() == 12, "got %zu rows", rows.size());
  bool found = false;
  for (const auto& row : rows) {
    if (row.at("style") != "identity" || std::stod(row.at("q")) != 4.0) {
      continue;
    }
    found = true;
    const double lhs_log = std::stod(row.at("lhs_log"));
    const double rhs_log = std::stod(row.at("rhs_log"));
    c.requiref(std::abs(lhs_log - 18.0) <= 1e-9, "lhs_log %.12g", lhs_log);
    c.requiref(std::abs(rhs_log - 15.0) <= 1e-9, "rhs_log %.12g", rhs_log);
    c.require(row.at("verdict") == "VIOLATED",
              "verdict " + row.at("verdict"));
  }
  c.require(found, "no q=4 identity row in the sweep output");
  return c;
}

// ---------------------------------------------------------------------------
// 11. Reproducibility: the shaped runs behind criteria 2, 3, and 8 produce
//     byte-identical CSV tables for workers 1, 4, and 16, and the CLI path
//     simulator does the same.

Checker criterion11(const std::string& cli) {
  Checker c;
  struct Shaped {
    const char* tag;
    const char* kind;
    std::string config;
  };
  const std::vector<Shaped> shaped = {
      {"moments", "simulate", R"({
        "kind": "simulate", "mode": "moments", "seed": 101,
        "t": 1.0, "samples": 1000000,
        "start": {"p": [0.3], "xi": [-0.2]}
      })"},
      {"rn", "verify-rn", R"({
        "kind": "verify-rn", "seed": 102, "method": "mc",
        "samples": 1000000,
        "q": [1.5, 2.0, 3.0, 4.0], "t": [0.5, 1.0, 2.0],
        "shifts": [{"h": 1.0, "k": 0.0}, {"h": 0.0, "k": 1.0},
                    {"h": 1.0, "k": 1.0}],
        "styles": ["hypoelliptic"]
      })"},
      {"drift", "verify-wang", R"({
        "kind": "verify-wang", "seed": 103, "method": "drift-mc",
        "drift": "tanh-single", "mode": "uniform",
        "functions": ["gauss_bell", "rational_bell", "logistic",
                       "raised_cos", "sech_prod"],
        "alpha": [2.0, 4.0], "t": 1.0,
        "samples": 1000000, "grid_steps": 256,
        "pairs": [
          {"x": {"p": [0.4], "xi": [0.1]}, "y": {"p": [0.0], "xi": [0.0]}},
          {"x": {"p": [0.0], "xi": [0.0]}, "y": {"p": [0.0], "xi": [0.0]}}
        ]
      })"}};

  for (const auto& s : shaped) {
    std::string reference;
    for (int workers : {1, 4, 16}) {
      const auto dir =
          fresh_dir(std::string("crit11_") + s.tag + "_" +
                    std::to_string(workers));
      experiment::RunOptions opt;
      opt.out_override = dir.string();
      opt.expected_kind = s.kind;
      opt.workers_override = workers;
      experiment::run_json_text(s.config, opt);
      const auto text = slurp(dir / (std::string(s.kind) + ".csv"));
      c.requiref(!text.empty(), "%s: empty CSV at workers=%d", s.tag, workers);
      if (reference.empty()) {
        reference = text;
      } else {
        c.requiref(text == reference, "%s: CSV differs at workers=%d", s.tag,
                   workers);
      }
    }
  }

  if (cli.empty()) {
    c.require(false, "--cli path required for this criterion");
    return c;
  }
  const std::string paths_cfg = R"({
    "kind": "simulate", "mode": "paths", "seed": 104,
    "coords": 4, "T": 1.0, "steps": 1024, "replicates": 2
  })";
  std::string reference;
  for (int workers : {1, 4}) {
    const auto dir = fresh_dir("crit11_cli_" + std::to_string(workers));
    const fs::path cfg = dir / "config.json";
    write_text(cfg, paths_cfg);
    const int rc =
        run_cli(cli, "simulate --config " + cfg.string() + " --workers " +
                         std::to_string(workers) + " --out " + dir.string());
    c.requiref(rc == 0, "CLI exit %d at workers=%d", rc, workers);
    const auto text = slurp(dir / "simulate.csv");
    if (reference.empty()) {
      reference = text;
    } else {
      c.requiref(text == reference, "CLI CSV differs at workers=%d", workers);
    }
  }
  return c;
}

const char* kLabels[] = {
    "",
    "kernel exactness",
    "sampling exactness",
    "density-ratio algebra",
    "change-of-measure consistency",
    "bound domination",
    "two-point comparisons, standard case",
    "gradient-entropy comparison, standard case",
    "nonlinear drift certification",
    "truncation convergence",
    "discrepancy surfacing",
    "worker-count reproducibility",
};

const double kBudgetSeconds[] = {0, 10, 30, 300, 60, 5, 300, 120, 600, 300,
                                 60, 600};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance scenarios"};
  int criterion = 0;
  std::string cli;
  app.add_option("--criterion", criterion, "scenario number (1-11)")
      ->required()
      ->check(CLI::Range(1, 11));
  app.add_option("--cli", cli, "path to the command-line binary");
  CLI11_PARSE(app, argc, argv);

  const auto start = std::chrono::steady_clock::now();
  Checker c;
  switch (criterion) {
    case 1: c = criterion1(); break;
    case 2: c = criterion2(); break;
    case 3: c = criterion3(); break;
    case 4: c = criterion4(); break;
    case 5: c = criterion5(); break;
    case 6: c = criterion6(); break;
    case 7: c = criterion7(); break;
    case 8: c = criterion8(); break;
    case 9: c = criterion9(); break;
    case 10: c = criterion10(cli); break;
    case 11: c = criterion11(cli); break;
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (elapsed > kBudgetSeconds[criterion]) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "runtime %.1fs over budget %.0fs", elapsed,
                  kBudgetSeconds[criterion]);
    c.failures.emplace_back(buf);
  }

  if (c.failures.empty()) {
    std::printf("[PASS] criterion %d: %s (%.1fs)\n", criterion,
                kLabels[criterion], elapsed);
    return 0;
  }
  std::printf("[FAIL] criterion %d: %s (%.1fs)\n", criterion,
              kLabels[criterion], elapsed);
  for (const auto& f : c.failures) {
    std::printf("       %s\n", f.c_str());
  }
  return 1;
}
