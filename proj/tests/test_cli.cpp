#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

#include "sign/commands.hpp"
#include "sign/engine.hpp"
#include "sign/runlog_io.hpp"

using namespace sign;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;

    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("sign_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

json base_mock_config(int n = 6, int rounds = 40) {
    return json{{"n_agents", n},
                {"lexicon_size", 12},
                {"rounds", rounds},
                {"memory_window", 5},
                {"lose_shift_alpha", 0.75},
                {"condition", "SCHEMA"},
                {"pairing_mode", "single_pair"},
                {"adoption_mode", "bilateral_independent"},
                {"fallback_mode", "random_name"},
                {"agreement_metric", "pairwise"},
                {"token_accounting", "output_only"},
                {"seed", 1},
                {"roster", json::array({json{{"kind", "mock"},
                                             {"count", "all"},
                                             {"compliance_prob", 0.9},
                                             {"verbosity_tokens", 8},
                                             {"noise_mentions_name_prob", 0.5}}})}};
}

json small_sweep_spec(const fs::path& out_dir) {
    return json{{"output_dir", out_dir.string()},
                {"base", base_mock_config()},
                {"grid", json{{"condition", json::array({"NL", "SCHEMA"})},
                              {"n_agents", json::array({6})},
                              {"memory_window", json::array({5})},
                              {"lose_shift_alpha", json::array({0.5, 0.75})},
                              {"seed", json::array({1, 2})}}},
                {"condition_overrides",
                 json{{"NL",
                       json{{"roster", json::array({json{{"kind", "mock"},
                                                         {"count", "all"},
                                                         {"compliance_prob", 1.0},
                                                         {"verbosity_tokens", 10},
                                                         {"noise_mentions_name_prob", 0.0}}})}}}}}};
}

fs::path write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2);
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
    std::map<std::string, std::string> contents;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) {
            contents[entry.path().filename().string()] = slurp(entry.path());
        }
    }
    return contents;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("cmd_run: happy path writes a completed log and reports agreement") {
    TempDir tmp("run");
    fs::path config_path = write_json(tmp.path / "run.json", base_mock_config());
    fs::path log_path = tmp.path / "run.jsonl";

    std::ostringstream out, err;
    int rc = cmd_run(config_path.string(), log_path.string(), out, err);
    CHECK(rc == exit_code::ok);
    REQUIRE(fs::exists(log_path));
    RunLog log = read_runlog(log_path);
    CHECK(log.status == RunStatus::completed);
    CHECK(log.events.size() == 40);
    CHECK(out.str().find("final agreement:") != std::string::npos);
    CHECK(out.str().find("total tokens:") != std::string::npos);
}

TEST_CASE("cmd_run: named validation errors surface as their exit codes") {
    TempDir tmp("badrun");
    json bad = base_mock_config();
    bad["lose_shift_alpha"] = 1.2;
    fs::path config_path = write_json(tmp.path / "bad.json", bad);

    std::ostringstream out, err;
    int rc = cmd_run(config_path.string(), (tmp.path / "x.jsonl").string(), out, err);
    CHECK(rc == exit_code_for("alpha-out-of-range"));
    CHECK(rc == 17);
    CHECK(err.str().find("alpha-out-of-range") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp.path / "x.jsonl"));
}

TEST_CASE("cmd_run: unreadable config is its own failure") {
    std::ostringstream out, err;
    CHECK(cmd_run("/nonexistent.json", "", out, err) == exit_code::config_invalid);
}

TEST_CASE("cmd_run: a run aborted mid-flight keeps its partial log") {
    TempDir tmp("abort");
    json cfg = base_mock_config(2, 10);
    cfg["roster"] = json::array(
        {json{{"kind", "scripted"}, {"count", "all"}, {"script", json::array({1, 2, 1})}}});
    fs::path config_path = write_json(tmp.path / "abort.json", cfg);
    fs::path log_path = tmp.path / "abort.jsonl";

    std::ostringstream out, err;
    int rc = cmd_run(config_path.string(), log_path.string(), out, err);
    CHECK(rc == exit_code::run_aborted);
    RunLog log = read_runlog(log_path);
    CHECK(log.status == RunStatus::aborted);
    CHECK(log.events.size() == 3);
}

TEST_CASE("expand_cells: the paper grid yields 90 runs") {
    json spec_json = json{
        {"output_dir", "unused"},
        {"base", base_mock_config(12, 10)},
        {"grid", json{{"condition", json::array({"NL", "NL_SW", "SCHEMA"})},
                      {"n_agents", json::array({12, 24})},
                      {"memory_window", json::array({5, 10})},
                      {"lose_shift_alpha", json::array({0.5, 0.75, 0.99})},
                      {"seed", json::array({1, 2, 3})}}}};
    TempDir tmp("grid");
    fs::path spec_path = write_json(tmp.path / "grid.json", spec_json);
    auto cells = expand_cells(load_sweep_spec(spec_path.string()));

    // Independent count: conditions with memory get the full cross-product,
    // NL collapses the memory axis to K=0.
    const int with_memory = 2 * 2 * 2 * 3 * 3;
    const int nl = 2 * 1 * 3 * 3;
    CHECK(cells.size() == static_cast<std::size_t>(with_memory + nl));

    std::set<std::string> names;
    for (const auto& cell : cells) {
        names.insert(cell.file_name);
        if (cell.config.condition == Condition::NL) {
            CHECK(cell.config.memory_window == 0);
        }
    }
    CHECK(names.size() == cells.size()); // one file per (cell, seed)
    CHECK(names.count("SCHEMA_12_5_0.75_1.jsonl") == 1);
    CHECK(names.count("NL_24_0_0.99_3.jsonl") == 1);
}

TEST_CASE("cmd_sweep: runs every cell, resumes, and parallelism changes nothing") {
    TempDir tmp("sweep");
    fs::path serial_dir = tmp.path / "serial";
    fs::path parallel_dir = tmp.path / "parallel";
    fs::path spec_path = write_json(tmp.path / "spec.json", small_sweep_spec(serial_dir));

    std::ostringstream out1, err1;
    REQUIRE(cmd_sweep(spec_path.string(), 1, out1, err1) == exit_code::ok);
    auto serial = dir_contents(serial_dir);
    CHECK(serial.size() == 8); // 2 conditions x 2 alphas x 2 seeds

    // Re-running skips every completed cell and rewrites nothing.
    std::ostringstream out2, err2;
    REQUIRE(cmd_sweep(spec_path.string(), 1, out2, err2) == exit_code::ok);
    CHECK(dir_contents(serial_dir) == serial);
    CHECK(out2.str().find("skipped") != std::string::npos);
    CHECK(out2.str().find("done") == std::string::npos);

    // A 4-way parallel sweep produces byte-identical files.
    std::ostringstream out3, err3;
    REQUIRE(cmd_sweep(spec_path.string(), 4, out3, err3, parallel_dir.string()) ==
            exit_code::ok);
    CHECK(dir_contents(parallel_dir) == serial);
}

TEST_CASE("cmd_report: table1, curves and tokens CSVs from a sweep directory") {
    TempDir tmp("report");
    fs::path dir = tmp.path / "logs";
    fs::path spec_path = write_json(tmp.path / "spec.json", small_sweep_spec(dir));
    std::ostringstream out, err;
    REQUIRE(cmd_sweep(spec_path.string(), 2, out, err) == exit_code::ok);

    std::ostringstream rout, rerr;
    REQUIRE(cmd_report(dir.string(), ReportKind::table1, {}, rout, rerr) == exit_code::ok);
    REQUIRE(fs::exists(dir / "table1.csv"));
    REQUIRE(fs::exists(dir / "summary.csv"));
    std::string table1 = slurp(dir / "table1.csv");
    CHECK(table1.find("N,K,NL,NL_SW,SCHEMA") == 0);
    CHECK(table1.find("6,0,") != std::string::npos);  // NL row
    CHECK(table1.find("6,5,-") != std::string::npos); // SCHEMA row, NL column dashed
    std::string summary = slurp(dir / "summary.csv");
    CHECK(summary.find("condition,N,K,alpha,metric,mean,std,n_seeds") == 0);
    CHECK(summary.find("SCHEMA,6,5,0.75,pairwise,") != std::string::npos);

    REQUIRE(cmd_report(dir.string(), ReportKind::tokens, {0.5, 0.6, 0.7}, rout, rerr) ==
            exit_code::ok);
    std::string tokens = slurp(dir / "tokens.csv");
    CHECK(tokens.find("condition,threshold,mean_tokens,n_reached,n_runs") == 0);
    CHECK(tokens.find("NL,0.5,") != std::string::npos);

    REQUIRE(cmd_report(dir.string(), ReportKind::curves, {}, rout, rerr) == exit_code::ok);
    CHECK(fs::exists(dir / "curve_SCHEMA_6_5_0.75.csv"));
    CHECK(fs::exists(dir / "curve_NL_6_0_0.5.csv"));

    // Reports are deterministic byte-for-byte.
    std::string before = slurp(dir / "table1.csv");
    REQUIRE(cmd_report(dir.string(), ReportKind::table1, {}, rout, rerr) == exit_code::ok);
    CHECK(slurp(dir / "table1.csv") == before);
}

TEST_CASE("cmd_report: an empty directory is an error") {
    TempDir tmp("empty");
    std::ostringstream out, err;
    CHECK(cmd_report(tmp.path.string(), ReportKind::table1, {}, out, err) ==
          exit_code::report_empty);
    CHECK(cmd_report((tmp.path / "missing").string(), ReportKind::table1, {}, out, err) ==
          exit_code::report_empty);
}

TEST_CASE("shipped recipe configs parse and expand") {
    const fs::path configs = fs::path(SIGN_REPO_DIR) / "configs";
    auto desk = load_sweep_spec((configs / "desk-mock.json").string());
    CHECK(expand_cells(desk).size() == 9); // 3 conditions x 3 seeds

    auto grid = load_sweep_spec((configs / "paper-grid.json").string());
    CHECK(expand_cells(grid).size() == 90);

    auto mixed = load_sweep_spec((configs / "mixed-roster.json").string());
    auto mixed_cells = expand_cells(mixed);
    CHECK(mixed_cells.size() == 9);
    for (const auto& cell : mixed_cells) {
        CHECK(cell.config.rounds == 100);
        int phi = 0, llama = 0;
        for (const auto& entry : cell.config.roster) {
            REQUIRE(entry.kind == RosterEntry::Kind::llm);
            if (entry.endpoint.model_name.find("phi") != std::string::npos) ++phi;
            if (entry.endpoint.model_name.find("llama") != std::string::npos) ++llama;
        }
        CHECK(phi == 6);
        CHECK(llama == 6);
    }
}

} // TEST_SUITE
