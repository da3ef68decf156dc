// ostrovsky: command-line front end.
//
// Exit codes: 0 success, 1 configuration or input error, 2 blowup detected,
// 3 a numerical check failed (no fit, non-contracting Picard map, conservation
// or quadrature tolerance missed, non-finite ratio).

#include "ostrovsky/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Common {
    std::string config;
    std::string out = "ostrovsky_out";
    int jobs = 1;
    std::uint64_t seed = 0;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& description, Common& common, bool needs_config) {
    auto* sub = app.add_subcommand(name, description);
    auto* cfg = sub->add_option("--config", common.config, "INI config, or a manifest.json from an earlier run")->check(CLI::ExistingFile);
    if (needs_config) cfg->required();
    sub->add_option("--out", common.out, "output directory")->capture_default_str();
    sub->add_option("--jobs", common.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--seed", common.seed, "random seed for the probes");
    return sub;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pseudospectral lab for the generalized Ostrovsky equation"};
    app.set_version_flag("--version", OSTROVSKY_VERSION);
    app.require_subcommand(1);

    Common common;
    std::string which;
    int draws = 0;
    std::string snapshot;

    add_command(app, "solve", "evolve initial data, write snapshots and traces.csv", common, true);
    add_command(app, "sweep-gamma", "weak-rotation limit sweep, write rate.csv, rate.json and rate.svg", common, true);
    add_command(app, "probe-kernel", "sample the oscillatory kernel, write kernel_regions.csv and kernel.json", common, false);
    auto* est = add_command(app, "probe-estimates", "random-data ratio ensembles, write ratios_<tag>.csv and .json", common, false);
    est->add_option("--which", which, "estimate tag: " + ostrovsky::valid_estimate_tags());
    est->add_option("--draws", draws, "number of draws")->check(CLI::PositiveNumber);
    add_command(app, "picard-check", "Duhamel-Picard iteration with a stepper cross-check, write picard.json", common, true);
    auto* inv = add_command(app, "invariants", "conservation suite on a snapshot, write invariants.json", common, false);
    inv->add_option("--snapshot", snapshot, "field snapshot file")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ostrovsky::cli::kConfigError;
    }

    ostrovsky::cli::RunOptions opt;
    CLI::App* sub = app.get_subcommands().front();
    opt.command = sub->get_name();
    if (!common.config.empty()) opt.config = common.config;
    opt.out = common.out;
    opt.jobs = common.jobs;
    if (sub->count("--seed") > 0) opt.seed = common.seed;
    if (opt.command == "probe-estimates") {
        if (est->count("--which") > 0) opt.which = which;
        if (est->count("--draws") > 0) opt.draws = draws;
    }
    if (opt.command == "invariants" && inv->count("--snapshot") > 0) opt.snapshot = snapshot;
    return ostrovsky::cli::run(opt);
}
