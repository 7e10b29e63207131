// gcalc: config-driven experiments for sublinear-expectation calculus.
//
//   gcalc gheat|simulate|verify|example --config <path> [--out <dir>] [--seed <u64>]
//
// Exit codes: 0 success (verify: thresholds hold), 2 verify falsified the
// functional, 1 any error. GCALC_THREADS caps worker threads.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gcalc/commands.hpp"

namespace {

struct Cli {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, Cli& cli) {
    cmd->add_option("--config", cli.config_path, "JSON configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", cli.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", cli.seed, "seed (overrides config)")
        ->each([&cli](const std::string&) { cli.seed_set = true; });
}

gcalc::ExperimentConfig load(const Cli& cli) {
    gcalc::ExperimentConfig cfg = gcalc::load_config(cli.config_path);
    if (!cli.out_dir.empty()) cfg.output_dir = cli.out_dir;
    if (cli.seed_set) cfg.seed = cli.seed;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical toolkit for sublinear-expectation calculus"};
    app.require_subcommand(1);

    Cli cli;
    CLI::App* gheat = app.add_subcommand("gheat", "backward solve for a terminal payoff");
    CLI::App* simulate = app.add_subcommand("simulate", "worst-case Monte Carlo estimate");
    CLI::App* verify = app.add_subcommand("verify", "check path independence of a functional");
    CLI::App* example = app.add_subcommand("example", "build an operator-harmonic profile");
    for (CLI::App* cmd : {gheat, simulate, verify, example}) add_common(cmd, cli);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exits 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        gcalc::ExperimentConfig cfg = load(cli);
        if (gheat->parsed()) return gcalc::run_gheat(cfg);
        if (simulate->parsed()) return gcalc::run_simulate(cfg);
        if (verify->parsed()) return gcalc::run_verify(cfg);
        return gcalc::run_example(cfg);
    } catch (const std::exception& e) {
        std::cerr << "gcalc: " << e.what() << "\n";
        return 1;
    }
}
