#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kolmo::experiment {

inline constexpr const char* kToolVersion = "1.0.0";

// Input-side failures (bad config, unreadable files, schema mismatches).
// The CLI maps these to exit status 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::optional<std::uint64_t> seed_override;  // command-line seed
  std::optional<std::string> env_seed;         // environment value, if set
  std::optional<int> workers_override;
  std::optional<std::string> out_override;
  // Subcommand name; the config kind must match it (a sweep matches its
  // base kind). Empty accepts any kind.
  std::string expected_kind;
};

struct RunResult {
  // 0 no check violated, 2 some check violated, 3 inconclusive only.
  int exit_status = 0;
  std::string kind;
  std::vector<std::string> outputs;  // files written, manifest last
};

// Parses, validates, runs, and writes one CSV per experiment plus a JSON
// manifest (config echo with effective seed/workers, tool version, wall
// time, outputs, exit status). Re-running the echoed config reproduces the
// CSV numeric fields bitwise for any worker count.
RunResult run_file(const std::string& config_path, const RunOptions& opt);
RunResult run_json_text(const std::string& json_text, const RunOptions& opt);

// Reads the manifest in `manifest_or_dir` (a manifest path or a directory
// holding manifest.json) and writes gnuplot-ready columnar .dat files next
// to it or into `out_dir` when given. Supported kinds: convergence, verify-rn,
// kernel.
std::vector<std::string> emit_plotdata(const std::string& manifest_or_dir,
                                       const std::optional<std::string>& out_dir);

}  // namespace kolmo::experiment
