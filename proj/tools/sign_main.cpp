#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sign/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"SIGN: schema-induced naming game simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_path;
    auto* run = app.add_subcommand("run", "Execute one game from a config file");
    run->add_option("config", config_path, "Run config (JSON)")->required();
    run->add_option("--out", output_path, "Log file path (default: <config stem>.jsonl)");

    std::string spec_path;
    int parallelism = 1;
    std::string out_dir;
    auto* sweep = app.add_subcommand("sweep", "Run a grid of configurations");
    sweep->add_option("spec", spec_path, "Sweep spec (JSON)")->required();
    sweep->add_option("--parallelism", parallelism, "Concurrent runs")->default_val(1);
    sweep->add_option("--out-dir", out_dir, "Override the spec's output directory");

    std::string log_dir;
    std::string kind_name = "table1";
    std::vector<double> thresholds = {0.5, 0.6, 0.7};
    auto* report = app.add_subcommand("report", "Summarize a directory of run logs into CSVs");
    report->add_option("dir", log_dir, "Directory of .jsonl run logs")->required();
    report->add_option("--kind", kind_name, "table1|curves|tokens")
        ->check(CLI::IsMember({"table1", "curves", "tokens"}));
    report->add_option("--thresholds", thresholds, "Agreement thresholds for --kind tokens");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? sign::exit_code::ok : sign::exit_code::usage;
    }

    if (run->parsed()) {
        return sign::cmd_run(config_path, output_path, std::cout, std::cerr);
    }
    if (sweep->parsed()) {
        return sign::cmd_sweep(spec_path, parallelism, std::cout, std::cerr, out_dir);
    }
    sign::ReportKind kind = sign::ReportKind::table1;
    if (kind_name == "curves") kind = sign::ReportKind::curves;
    if (kind_name == "tokens") kind = sign::ReportKind::tokens;
    return sign::cmd_report(log_dir, kind, thresholds, std::cout, std::cerr);
}
