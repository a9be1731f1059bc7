#include "sign/commands.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "sign/engine.hpp"
#include "sign/errors.hpp"
#include "sign/metrics.hpp"
#include "sign/runlog_io.hpp"

namespace sign {

namespace {

using nlohmann::json;

const std::map<std::string, int> kValidationExitCodes = {
    {"lexicon-too-small", 10},      {"n-too-small", 11},
    {"odd-n-full-matching", 12},    {"rounds-too-small", 13},
    {"memory-window-negative", 14}, {"nl-requires-k0", 15},
    {"memory-window-required", 16}, {"alpha-out-of-range", 17},
    {"roster-size-mismatch", 18},   {"mock-prob-out-of-range", 19},
    {"verbosity-too-small", 20},    {"script-empty", 21},
    {"script-name-out-of-range", 22}, {"endpoint-base-url-empty", 23},
    {"endpoint-timeout-invalid", 24}, {"endpoint-retries-negative", 25},
    {"template-missing", 26},
};

std::string json_number(double v) { return json(v).dump(); }

// Deep merge: override's fields win, objects merge recursively.
json merge_json(json base, const json& override_obj) {
    if (!override_obj.is_object() || !base.is_object()) {
        return override_obj;
    }
    for (const auto& [key, value] : override_obj.items()) {
        if (base.contains(key)) {
            base[key] = merge_json(base[key], value);
        } else {
            base[key] = value;
        }
    }
    return base;
}

std::string cell_file_name(const GameConfig& cfg) {
    std::ostringstream name;
    name << to_string(cfg.condition) << '_' << cfg.n_agents << '_' << cfg.memory_window << '_'
         << json_number(cfg.lose_shift_alpha) << '_' << cfg.seed << ".jsonl";
    return name.str();
}

std::vector<RunLog> load_completed_logs(const std::filesystem::path& dir, std::ostream& err) {
    std::vector<std::filesystem::path> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
            paths.push_back(entry.path());
        }
    }
    std::sort(paths.begin(), paths.end());

    std::vector<RunLog> logs;
    for (const auto& path : paths) {
        try {
            RunLog log = read_runlog(path);
            if (log.status != RunStatus::completed) {
                err << "skipping aborted log " << path.string() << "\n";
                continue;
            }
            logs.push_back(std::move(log));
        } catch (const ConfigError& e) {
            err << "skipping unreadable log " << path.string() << ": " << e.what() << "\n";
        }
    }
    return logs;
}

int run_one(const GameConfig& cfg, const std::filesystem::path& log_path, std::ostream& out) {
    RunLogWriter writer(log_path, cfg);
    RunLog log = run_game(cfg, [&](const RoundEvent& ev) { writer.append(ev); });
    writer.finish(log);

    out << "log: " << log_path.string() << "\n";
    out << "status: " << to_string(log.status);
    if (log.status == RunStatus::aborted) {
        out << " (" << log.abort_reason << ")";
    }
    out << "\n";
    out << "final agreement: " << log.final_agreement() << " ("
        << to_string(cfg.agreement_metric) << ")\n";
    out << "total tokens: " << log.total_tokens << "\n";
    return log.status == RunStatus::completed ? exit_code::ok : exit_code::run_aborted;
}

} // namespace

int exit_code_for(const std::string& config_error_code) {
    auto it = kValidationExitCodes.find(config_error_code);
    return it == kValidationExitCodes.end() ? exit_code::config_invalid : it->second;
}

SweepSpec load_sweep_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("sweep-unreadable", "cannot open sweep spec " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("sweep-parse", std::string("invalid JSON in ") + path + ": " + e.what());
    }

    SweepSpec spec;
    try {
        spec.base = j.at("base");
        spec.output_dir = j.at("output_dir").get<std::string>();
        const json& grid = j.at("grid");
        spec.conditions = grid.at("condition").get<std::vector<std::string>>();
        spec.seeds = grid.at("seed").get<std::vector<std::uint64_t>>();
        auto grid_or_base = [&](const char* key, auto fallback) {
            using T = decltype(fallback);
            if (grid.contains(key)) return grid.at(key).get<std::vector<T>>();
            return std::vector<T>{spec.base.at(key).get<T>()};
        };
        spec.n_agents = grid_or_base("n_agents", int{});
        spec.memory_windows = grid_or_base("memory_window", int{});
        spec.alphas = grid_or_base("lose_shift_alpha", double{});
        if (j.contains("condition_overrides")) {
            for (const auto& [condition, override_obj] : j.at("condition_overrides").items()) {
                spec.condition_overrides[condition] = override_obj;
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError("sweep-parse", std::string("bad sweep spec ") + path + ": " + e.what());
    }
    if (spec.conditions.empty() || spec.seeds.empty()) {
        throw ConfigError("sweep-parse", "sweep spec needs nonempty condition and seed lists");
    }
    return spec;
}

std::vector<SweepCell> expand_cells(const SweepSpec& spec) {
    std::vector<SweepCell> cells;
    for (const auto& condition : spec.conditions) {
        json cell_base = spec.base;
        if (auto it = spec.condition_overrides.find(condition);
            it != spec.condition_overrides.end()) {
            cell_base = merge_json(cell_base, it->second);
        }
        // NL keeps no memory; other conditions take each K in the grid.
        std::vector<int> windows = condition == "NL" ? std::vector<int>{0} : spec.memory_windows;
        for (int n : spec.n_agents) {
            for (int k : windows) {
                for (double alpha : spec.alphas) {
                    for (std::uint64_t seed : spec.seeds) {
                        json cell = cell_base;
                        cell["condition"] = condition;
                        cell["n_agents"] = n;
                        cell["memory_window"] = k;
                        cell["lose_shift_alpha"] = alpha;
                        cell["seed"] = seed;
                        GameConfig cfg = validate_config(config_from_json(cell));
                        cells.push_back({cfg, cell_file_name(cfg)});
                    }
                }
            }
        }
    }
    return cells;
}

int cmd_run(const std::string& config_path, const std::string& output_path, std::ostream& out,
            std::ostream& err) {
    GameConfig cfg;
    try {
        cfg = validate_config(load_config_file(config_path));
    } catch (const ConfigError& e) {
        err << "invalid config: " << e.what() << "\n";
        return exit_code_for(e.code());
    }

    std::filesystem::path log_path(output_path);
    if (output_path.empty()) {
        log_path = std::filesystem::path(config_path).stem().string() + ".jsonl";
    }
    try {
        return run_one(cfg, log_path, out);
    } catch (const ConfigError& e) {
        err << e.what() << "\n";
        return exit_code_for(e.code());
    }
}

int cmd_sweep(const std::string& spec_path, int parallelism, std::ostream& out, std::ostream& err,
              const std::string& output_dir_override) {
    SweepSpec spec;
    std::vector<SweepCell> cells;
    try {
        spec = load_sweep_spec(spec_path);
        if (!output_dir_override.empty()) {
            spec.output_dir = output_dir_override;
        }
        cells = expand_cells(spec);
    } catch (const ConfigError& e) {
        err << "invalid sweep spec: " << e.what() << "\n";
        return exit_code_for(e.code());
    }

    const std::filesystem::path dir(spec.output_dir);
    std::filesystem::create_directories(dir);

    struct CellResult {
        std::string file_name;
        std::string status; // "done", "skipped", or an error message
    };
    std::vector<CellResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    parallelism = std::max(1, parallelism);

    auto worker = [&]() {
        for (;;) {
            std::size_t idx = next.fetch_add(1);
            if (idx >= cells.size()) return;
            const SweepCell& cell = cells[idx];
            const std::filesystem::path log_path = dir / cell.file_name;
            CellResult& result = results[idx];
            result.file_name = cell.file_name;
            if (runlog_is_completed(log_path)) {
                result.status = "skipped";
                continue;
            }
            try {
                RunLogWriter writer(log_path, cell.config);
                RunLog log = run_game(cell.config, [&](const RoundEvent& ev) { writer.append(ev); });
                writer.finish(log);
                result.status = log.status == RunStatus::completed
                                    ? "done"
                                    : "aborted: " + log.abort_reason;
            } catch (const std::exception& e) {
                result.status = std::string("failed: ") + e.what();
            }
        }
    };

    std::vector<std::thread> threads;
    for (int i = 0; i < std::min<int>(parallelism, static_cast<int>(cells.size())); ++i) {
        threads.emplace_back(worker);
    }
    for (auto& t : threads) t.join();

    int failures = 0;
    for (const auto& result : results) {
        out << result.file_name << ": " << result.status << "\n";
        if (result.status != "done" && result.status != "skipped") ++failures;
    }
    out << cells.size() << " cells, " << failures << " failures\n";
    if (failures > 0) {
        err << failures << " sweep cell(s) failed\n";
        return exit_code::sweep_failures;
    }
    return exit_code::ok;
}

int cmd_report(const std::string& log_dir, ReportKind kind, const std::vector<double>& thresholds,
               std::ostream& out, std::ostream& err) {
    const std::filesystem::path dir(log_dir);
    if (!std::filesystem::is_directory(dir)) {
        err << "not a directory: " << log_dir << "\n";
        return exit_code::report_empty;
    }
    std::vector<RunLog> logs = load_completed_logs(dir, err);
    if (logs.empty()) {
        err << "no completed run logs in " << log_dir << "\n";
        return exit_code::report_empty;
    }

    auto write_file = [&](const std::filesystem::path& path, auto&& writer) {
        std::ofstream file(path, std::ios::trunc);
        if (!file) {
            throw ConfigError("report-unwritable", "cannot write " + path.string());
        }
        writer(file);
        out << "wrote " << path.string() << "\n";
    };

    try {
        switch (kind) {
        case ReportKind::table1:
            write_file(dir / "table1.csv",
                       [&](std::ostream& f) { write_table1_csv(f, logs); });
            write_file(dir / "summary.csv",
                       [&](std::ostream& f) { write_summary_csv(f, logs); });
            break;
        case ReportKind::curves: {
            std::map<CellKey, std::vector<RunLog>> groups;
            for (auto& log : logs) {
                groups[{to_string(log.config.condition), log.config.n_agents,
                        log.config.memory_window, log.config.lose_shift_alpha}]
                    .push_back(std::move(log));
            }
            for (const auto& [key, group] : groups) {
                std::ostringstream name;
                name << "curve_" << key.condition << '_' << key.n_agents << '_'
                     << key.memory_window << '_' << json(key.alpha).dump() << ".csv";
                write_file(dir / name.str(),
                           [&](std::ostream& f) { write_curve_csv(f, group); });
            }
            break;
        }
        case ReportKind::tokens:
            write_file(dir / "tokens.csv",
                       [&](std::ostream& f) { write_tokens_csv(f, logs, thresholds); });
            break;
        }
    } catch (const ConfigError& e) {
        err << e.what() << "\n";
        return exit_code_for(e.code());
    }
    return exit_code::ok;
}

} // namespace sign
