#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "sign/config.hpp"

namespace sign {

// Stable exit codes; every error path has its own (see README).
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config_invalid = 2;  // unreadable/unparseable config or spec
inline constexpr int run_aborted = 3;
inline constexpr int report_empty = 4;
inline constexpr int sweep_failures = 5;
inline constexpr int usage = 64;
} // namespace exit_code

// Named validation errors map to their own exit codes (10..26).
int exit_code_for(const std::string& config_error_code);

// A sweep: the cross-product of grid values over a base config, with
// per-condition overrides. NL cells always run with memory_window 0.
struct SweepSpec {
    nlohmann::json base;
    std::vector<std::string> conditions;
    std::vector<int> n_agents;
    std::vector<int> memory_windows;
    std::vector<double> alphas;
    std::vector<std::uint64_t> seeds;
    std::map<std::string, nlohmann::json> condition_overrides;
    std::string output_dir;
};

SweepSpec load_sweep_spec(const std::string& path);

struct SweepCell {
    GameConfig config;
    std::string file_name; // condition_N_K_alpha_seed.jsonl
};

// Expands the grid (respecting NL => K = 0) into validated per-run configs.
std::vector<SweepCell> expand_cells(const SweepSpec& spec);

// `sign run <config>`: one run, streamed to a JSON-lines log.
int cmd_run(const std::string& config_path, const std::string& output_path, std::ostream& out,
            std::ostream& err);

// `sign sweep <spec>`: every (cell, seed) once; completed logs are skipped,
// failures recorded and reported at exit. `output_dir_override` redirects
// the spec's output directory when nonempty.
int cmd_sweep(const std::string& spec_path, int parallelism, std::ostream& out, std::ostream& err,
              const std::string& output_dir_override = "");

enum class ReportKind { table1, curves, tokens };

// `sign report <dir> --kind ...`: CSV summaries over a directory of logs.
int cmd_report(const std::string& log_dir, ReportKind kind, const std::vector<double>& thresholds,
               std::ostream& out, std::ostream& err);

} // namespace sign
