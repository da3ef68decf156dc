#pragma once

// Command implementations behind the ostrovsky executable. Each command reads
// its settings from an io::Config, writes its artifacts and a manifest.json
// into the output directory and returns a process exit code.

#include "ostrovsky/errors.hpp"
#include "ostrovsky/estimates.hpp"
#include "ostrovsky/io.hpp"
#include "ostrovsky/kernel.hpp"
#include "ostrovsky/limit.hpp"
#include "ostrovsky/solver.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#ifndef OSTROVSKY_VERSION
#define OSTROVSKY_VERSION "0.0.0"
#endif

namespace ostrovsky::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kSuccess = 0, kConfigError = 1, kBlowup = 2, kCheckFailed = 3 };

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"solve", "sweep-gamma", "probe-kernel", "probe-estimates", "picard-check", "invariants"};
    return names;
}

struct RunOptions {
    std::string command;
    std::optional<fs::path> config;
    fs::path out = "ostrovsky_out";
    int jobs = 1;
    std::optional<std::uint64_t> seed;
    /// probe-estimates --which / --draws
    std::optional<std::string> which;
    std::optional<int> draws;
    /// invariants --snapshot
    std::optional<fs::path> snapshot;
};

/// What a command leaves behind for the manifest.
struct CommandResult {
    int exit_code = kSuccess;
    std::optional<std::uint64_t> seed;
    nlohmann::json counts = nlohmann::json::object();
};

// ---------------------------------------------------------------------------
// Config readers

/// The sweep sets gamma per point and does not read it.
inline SolverConfig read_solver(io::Config& c, bool read_gamma = true) {
    SolverConfig s;
    s.beta = c.get_double("equation.beta");
    if (read_gamma) s.gamma = c.get_double("equation.gamma");
    s.k = c.get_int("equation.k");
    s.nonlinear = c.get_bool("equation.nonlinear", true);
    s.grid = Grid(c.get_int("grid.n"), c.get_double("grid.L"));
    s.dt = c.get_double("time.dt");
    s.t_end = c.get_double("time.t_end");
    s.integrator = integrator_from_string(c.get_string("time.integrator", "ifrk4"));
    s.cfl_safety = c.get_double("time.cfl_safety", 0.5);
    return s;
}

/// Profiles: gaussian, soliton, snapshot, zero.
inline Field read_initial(io::Config& c, const SolverConfig& s) {
    const std::string profile = c.get_string("initial.profile", "gaussian");
    const Grid& g = s.grid;
    Field u = Field::zero(g);
    if (profile == "gaussian") {
        const double amplitude = c.get_double("initial.amplitude", 1.0);
        const double width = c.get_double("initial.width", 1.5);
        const double center = c.get_double("initial.center", 0.5 * g.length());
        u = gaussian_bump(g, amplitude, width, center, s.k);
    } else if (profile == "soliton") {
        const auto sol = soliton_initial_data(c.get_double("initial.speed", 1.0), s.k, s.beta, g);
        u = s.gamma == 0.0 ? sol.profile : sol.field;
    } else if (profile == "snapshot") {
        const auto snap = io::read_snapshot(c.get_string("initial.path"));
        if (snap.header.n != g.size() || snap.header.length != g.length())
            throw ConfigurationError("snapshot grid (" + std::to_string(snap.header.n) + ", " + io::format_double(snap.header.length) +
                                     ") differs from the configured grid");
        u = snap.field();
    } else if (profile != "zero") {
        throw ConfigurationError("initial.profile: unknown profile '" + profile + "' (expected gaussian, soliton, snapshot or zero)");
    }
    if (c.has("initial.h1_norm")) {
        const double target = c.get_double("initial.h1_norm");
        const double h1 = h_s_norm(u, 1.0);
        if (h1 > 0.0) u *= target / h1;
    }
    return u;
}

inline io::CsvTable trace_table(const Trajectory& t) {
    io::CsvTable csv({"t", "l2", "hamiltonian", "hs", "xs"});
    for (std::size_t i = 0; i < t.size(); ++i)
        csv.row().add(t.times[i]).add(t.l2[i]).add(t.hamiltonian[i]).add(t.hs[i]).add(t.xs[i]);
    return csv;
}

inline void write_json(const fs::path& path, const nlohmann::json& j) { io::write_text(path, j.dump(2) + "\n"); }

/// nlohmann writes NaN and infinity as null; keep them readable.
inline nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

// ---------------------------------------------------------------------------
// solve

inline CommandResult cmd_solve(io::Config& c, const RunOptions& opt) {
    const SolverConfig s = read_solver(c);
    const int every = c.get_int("time.snapshot_every", 10);
    const double trace_s = c.get_double("time.trace_s", 2.0);
    const bool snapshots = c.get_bool("output.snapshots", true);
    const Field u0 = read_initial(c, s);

    CommandResult r;
    r.counts["steps"] = s.step_count();
    const fs::path snap_dir = opt.out / "snapshots";
    fs::remove_all(snap_dir);

    auto write_outputs = [&](const Trajectory& t) {
        trace_table(t).write(opt.out / "traces.csv");
        if (snapshots)
            for (std::size_t i = 0; i < t.size(); ++i) {
                char name[32];
                std::snprintf(name, sizeof name, "u_%05zu.txt", i);
                io::write_snapshot(snap_dir / name, {s.grid.size(), s.grid.length(), s.beta, s.gamma, s.k, t.times[i]},
                                   t.fields[i].samples());
            }
        r.counts["snapshots"] = t.size();
    };

    try {
        const Trajectory t = evolve(u0, s, every, trace_s);
        write_outputs(t);
        write_json(opt.out / "solve.json", {{"l2_drift", number(Trajectory::relative_drift(t.l2))},
                                            {"hamiltonian_drift", number(Trajectory::relative_drift(t.hamiltonian))},
                                            {"final_time", t.times.back()},
                                            {"snapshots", t.size()}});
        io::logger()->info("solve: {} steps, {} snapshots", s.step_count(), t.size());
    } catch (const BlowupDetected& e) {
        if (e.partial()) write_outputs(*e.partial());
        write_json(opt.out / "solve.json", {{"blowup", true}, {"step", e.step()}, {"time", e.time()}, {"reason", e.what()}});
        io::logger()->error("{}", e.what());
        r.exit_code = kBlowup;
    }
    return r;
}

// ---------------------------------------------------------------------------
// sweep-gamma

inline CommandResult cmd_sweep_gamma(io::Config& c, const RunOptions& opt) {
    SweepConfig sw;
    sw.solver = read_solver(c, false);
    sw.snapshot_every = c.get_int("time.snapshot_every", 10);
    sw.gammas = c.get_doubles("sweep.gammas", sw.gammas);
    sw.t_compare = c.get_double("sweep.t_compare", sw.solver.t_end);
    sw.s = c.get_double("sweep.s", 2.0);
    sw.reference_gamma = c.get_double("sweep.reference_gamma", 0.0);
    sw.jobs = opt.jobs;
    const Field u0 = read_initial(c, sw.solver);

    const RateReport rep = rotation_limit_sweep(sw, u0);
    CommandResult r;
    r.counts["runs"] = sw.gammas.size() + 2;
    r.counts["steps_per_run"] = sw.solver.step_count();

    io::CsvTable csv({"gamma", "error", "floor_flag"});
    nlohmann::json points = nlohmann::json::array();
    io::PlotSeries measured{"e(gamma)", {}, {}, "#1f77b4"};
    io::PlotSeries fitted{"fit", {}, {}, "#d62728", false};
    for (const auto& p : rep.points) {
        csv.row().add(p.gamma).add(p.error).add(p.floor_limited);
        measured.x.push_back(p.gamma);
        measured.y.push_back(p.error);
        points.push_back({{"gamma", p.gamma},
                          {"error", number(p.error)},
                          {"floor_limited", p.floor_limited},
                          {"failed", p.failed},
                          {"failure", p.failure},
                          {"gronwall_constant", number(p.gronwall.constant)},
                          {"gronwall_envelope_holds", p.gronwall.envelope_holds},
                          {"growth_constant", number(p.growth.constant)},
                          {"l2_drift", number(p.l2_drift)},
                          {"hamiltonian_drift", number(p.hamiltonian_drift)}});
        if (std::isfinite(rep.fit.slope)) {
            fitted.x.push_back(p.gamma);
            fitted.y.push_back(std::exp(rep.fit.intercept + rep.fit.slope * std::log(p.gamma)));
        }
    }
    csv.write(opt.out / "rate.csv");
    write_json(opt.out / "rate.json", {{"slope", number(rep.fit.slope)},
                                       {"intercept", number(rep.fit.intercept)},
                                       {"residual", number(rep.fit.residual)},
                                       {"fit_points", rep.fit.points},
                                       {"self_error", number(rep.self_error)},
                                       {"max_error_ratio", number(rep.max_error_ratio)},
                                       {"min_error_ratio", number(rep.min_error_ratio)},
                                       {"gronwall_spread", number(rep.gronwall_spread)},
                                       {"growth_spread", number(rep.growth_spread)},
                                       {"monotonicity_excess", number(monotonicity_excess(rep))},
                                       {"points", points}});
    io::write_text(opt.out / "rate.svg",
                   io::svg_loglog({"rotation limit", "gamma", "||u_gamma(T) - u_0(T)||", {measured, fitted}}));
    io::logger()->info("sweep-gamma: slope {} over {} points", rep.fit.slope, rep.fit.points);
    if (!std::isfinite(rep.fit.slope)) {
        io::logger()->error("sweep-gamma: no fit (every point failed or sits on the discretization floor)");
        r.exit_code = kCheckFailed;
    }
    return r;
}

// ---------------------------------------------------------------------------
// probe-kernel

inline CommandResult cmd_probe_kernel(io::Config& c, const RunOptions& opt) {
    KernelSpec spec;
    spec.beta = c.get_double("equation.beta", -1.0);
    spec.gamma = c.get_double("equation.gamma", 1.0);
    spec.a = c.get_double("kernel.a", 16.0);
    spec.tolerance = c.get_double("kernel.tolerance", 1e-9);
    const auto blocks = c.get_doubles("kernel.N", {16.0});
    const int samples = c.get_int("kernel.samples", 40);
    DecayOptions dec;
    dec.seed = c.get_u64("kernel.seed", 1);
    dec.x_scaled_max = c.get_double("kernel.x_scaled_max", dec.x_scaled_max);
    dec.t_scaled_max = c.get_double("kernel.t_scaled_max", dec.t_scaled_max);
    dec.fit_rays = c.get_bool("kernel.fit_rays", true);
    dec.ray_etas = c.get_doubles("kernel.ray_etas", dec.ray_etas);
    dec.ray_samples = c.get_int("kernel.ray_samples", dec.ray_samples);
    dec.ray_bins = c.get_int("kernel.ray_bins", dec.ray_bins);
    dec.jobs = opt.jobs;
    const bool mixed = c.get_bool("kernel.mixed_norm", true);
    const double gamma_exp = c.get_double("kernel.gamma_exp", 8.0);
    MixedNormOptions mn;
    mn.x_scaled = c.get_double("kernel.x_box", mn.x_scaled);
    mn.t_scaled = c.get_double("kernel.t_box", mn.t_scaled);
    mn.jobs = opt.jobs;

    CommandResult r;
    r.seed = dec.seed;
    io::CsvTable csv({"region", "x", "t", "absK", "bound", "ratio", "N"});
    nlohmann::json summary = {{"blocks", nlohmann::json::array()}};
    io::LogLogPlot plot{"kernel envelope along stationary rays", "t", "|K|", {}};
    const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    bool ok = true;
    std::vector<double> c2, mixed_ratios;
    for (double N : blocks) {
        spec.N = N;
        const RegionReport rep = region_decay_check(spec, samples, dec);
        ok = ok && rep.ok();
        for (const auto& sm : rep.samples)
            csv.row().add(to_string(sm.region)).add(sm.x).add(sm.t).add(sm.abs_k).add(sm.bound).add(sm.ratio).add(N);
        nlohmann::json block = {{"N", N}, {"omega3_exponent", number(rep.omega3_exponent)}, {"max_imag", number(rep.max_imag)}, {"ok", rep.ok()}};
        for (const auto& st : rep.stats)
            block["regions"].push_back({{"region", to_string(st.region)},
                                        {"samples", st.samples},
                                        {"skipped", st.skipped},
                                        {"constant", number(st.constant)},
                                        {"finite", st.finite}});
        c2.push_back(rep.stats[1].constant);
        for (std::size_t i = 0; i < rep.rays.size(); ++i) {
            const auto& ray = rep.rays[i];
            block["rays"].push_back({{"eta", ray.eta}, {"velocity", ray.velocity}, {"slope", number(ray.slope)}});
            if (blocks.size() == 1)
                plot.series.push_back({"eta = " + io::format_double(ray.eta), ray.t, ray.envelope, colours[i % 6]});
        }
        if (mixed) {
            const auto m = kernel_mixed_norm(spec, gamma_exp, mn);
            block["mixed_norm"] = {{"gamma_exp", gamma_exp}, {"norm", m.norm}, {"ratio", m.ratio}, {"tail_fraction", m.tail_fraction},
                                   {"x_box", m.x_box}, {"t_box", m.t_box}, {"n_x", m.n_x}, {"n_t", m.n_t}};
            mixed_ratios.push_back(m.ratio);
        }
        summary["blocks"].push_back(block);
        io::logger()->info("probe-kernel: N = {} exponent {}", N, rep.omega3_exponent);
    }
    summary["omega2_spread"] = number(detail::spread(c2));
    if (mixed) summary["mixed_norm_spread"] = number(detail::spread(mixed_ratios));
    summary["ok"] = ok;
    csv.write(opt.out / "kernel_regions.csv");
    write_json(opt.out / "kernel.json", summary);
    if (!plot.series.empty()) io::write_text(opt.out / "kernel_rays.svg", io::svg_loglog(plot));
    r.counts["samples"] = csv.size();
    r.counts["blocks"] = blocks.size();
    if (!ok) r.exit_code = kCheckFailed;
    return r;
}

// ---------------------------------------------------------------------------
// probe-estimates

inline DataLaw read_law(io::Config& c, const DataLaw& fallback) {
    const std::string fallback_name = std::holds_alternative<law::GaussianSpectrum>(fallback) ? "gaussian"
                                      : std::holds_alternative<law::BandLimited>(fallback)    ? "band"
                                                                                              : "low";
    const std::string name = c.get_string("estimates.law", fallback_name);
    if (name == "gaussian") {
        const auto d = name == fallback_name ? std::get<law::GaussianSpectrum>(fallback) : law::GaussianSpectrum{};
        return law::GaussianSpectrum{c.get_double("estimates.law_width", d.relative_width), c.get_double("estimates.law_floor", d.floor)};
    }
    if (name == "band") {
        const double d = name == fallback_name ? std::get<law::BandLimited>(fallback).N : 1.0;
        return law::BandLimited{c.get_double("estimates.law_N", d)};
    }
    if (name == "low") {
        const double d = name == fallback_name ? std::get<law::LowFrequency>(fallback).M : 1.0;
        return law::LowFrequency{c.get_double("estimates.law_M", d)};
    }
    throw ConfigurationError("estimates.law: unknown law '" + name + "' (expected gaussian, band or low)");
}

inline void write_ratios(const RatioReport& rep, const fs::path& out) {
    io::CsvTable csv({"level", "n", "length", "t_window", "draw", "lhs", "rhs", "ratio", "skipped"});
    for (const auto& lv : rep.levels)
        for (const auto& d : lv.draws)
            csv.row().add(lv.label).add(lv.n).add(lv.length).add(lv.t_window).add(d.draw).add(d.lhs).add(d.rhs).add(d.ratio).add(d.skipped);
    csv.write(out / ("ratios_" + rep.tag + ".csv"));
    nlohmann::json j = rep;
    j["finite"] = rep.finite();
    j["stable"] = rep.stable();
    j["refinement_factor"] = number(rep.refinement_factor);
    j["max_ratio"] = number(rep.max_ratio);
    write_json(out / ("ratios_" + rep.tag + ".json"), j);
}

inline CommandResult cmd_probe_estimates(io::Config& c, const RunOptions& opt) {
    const EstimateTag tag = estimate_tag_from_string(c.get_string("estimates.which"));
    CommandResult r;
    RatioReport rep;
    if (tag == EstimateTag::multilinear_303) {
        MultilinearOptions m;
        m.k = c.get_int("estimates.k", m.k);
        m.n = c.get_int("estimates.lattice_n", m.n);
        m.xi_box = c.get_double("estimates.xi_box", m.xi_box);
        m.tau_box = c.get_double("estimates.tau_box", m.tau_box);
        m.eps = c.get_double("estimates.eps", m.eps);
        m.b = c.get_double("estimates.b", m.b);
        m.beta = c.get_double("estimates.beta", m.beta);
        m.gamma = c.get_double("estimates.gamma", m.gamma);
        m.s = c.get_double("estimates.s", m.resolved_s());
        m.n_draws = c.get_int("estimates.draws", m.n_draws);
        m.seed = c.get_u64("estimates.seed", m.seed);
        m.jobs = opt.jobs;
        r.seed = m.seed;
        rep = multilinear_ratio(m);
        r.counts["draws"] = m.n_draws;
    } else {
        EstimateParams p;
        p.beta = c.get_double("estimates.beta", p.beta);
        p.gamma = c.get_double("estimates.gamma", p.gamma);
        p.eps = c.get_double("estimates.eps", p.eps);
        p.b = c.get_double("estimates.b", p.b);
        p.a = c.get_double("estimates.a", p.a);
        p.bilinear_s = c.get_double("estimates.s", p.bilinear_s);
        Ensemble e = default_ensemble(tag, p);
        e.law = read_law(c, e.law);
        e.n = c.get_int("estimates.n", e.n);
        e.length = c.get_double("estimates.L", e.length);
        e.t_window = c.get_double("estimates.t_window", e.t_window);
        e.grid_doublings = c.get_int("estimates.grid_doublings", e.grid_doublings);
        e.window_doubling = c.get_bool("estimates.window_doubling", e.window_doubling);
        e.n_draws = c.get_int("estimates.draws", e.n_draws);
        e.seed = c.get_u64("estimates.seed", e.seed);
        e.jobs = opt.jobs;
        r.seed = e.seed;
        rep = linear_ensemble_report(tag, e);
        r.counts["draws"] = e.n_draws;
    }
    r.counts["levels"] = rep.levels.size();
    write_ratios(rep, opt.out);
    io::logger()->info("probe-estimates {}: max ratio {}, refinement factor {}, skipped {}", rep.tag, rep.max_ratio,
                       rep.refinement_factor, rep.skipped);
    if (!rep.finite()) r.exit_code = kCheckFailed;
    return r;
}

// ---------------------------------------------------------------------------
// picard-check

inline CommandResult cmd_picard_check(io::Config& c, const RunOptions& opt) {
    SolverConfig s = read_solver(c);
    const Field u0 = read_initial(c, s);
    const double delta = c.get_double("picard.delta", 0.05);
    const int iterations = c.get_int("picard.iterations", 30);
    const double tolerance = c.get_double("picard.tolerance", 1e-10);
    const bool compare = c.get_bool("picard.compare", true);

    CommandResult r;
    nlohmann::json j;
    try {
        const PicardResult p = picard_iterate(u0, s, delta, iterations, tolerance);
        j = {{"converged", p.converged},
             {"iterations", p.iterations},
             {"fixed_point", p.converged},
             {"fixed_point_iteration", p.converged ? nlohmann::json(p.iterations) : nlohmann::json(nullptr)},
             {"differences", p.differences},
             {"ratios", p.ratios},
             {"time_steps", p.times.size() - 1}};
        double worst_ratio = 0.0;
        for (double q : p.ratios) worst_ratio = std::max(worst_ratio, q);
        j["max_ratio"] = worst_ratio;
        if (compare) {
            SolverConfig sc = s;
            sc.t_end = delta;
            sc.dt = delta / static_cast<double>(p.times.size() - 1);
            const auto t = evolve(u0, sc, static_cast<int>(p.times.size() - 1));
            j["stepper_difference"] = (p.iterate.back() - t.fields.back()).l2_norm();
        }
        r.counts["iterations"] = p.iterations;
        if (!p.converged) r.exit_code = kCheckFailed;
        io::logger()->info("picard-check: {} after {} iterations", p.converged ? "converged" : "not converged", p.iterations);
    } catch (const ContractionFailure& e) {
        j = {{"converged", false}, {"fixed_point", false}, {"failure", e.what()}};
        io::logger()->error("{}", e.what());
        r.exit_code = kCheckFailed;
    }
    write_json(opt.out / "picard.json", j);
    return r;
}

// ---------------------------------------------------------------------------
// invariants

inline CommandResult cmd_invariants(io::Config& c, const RunOptions& opt) {
    const auto snap = io::read_snapshot(c.get_string("invariants.snapshot"));
    SolverConfig s;
    s.beta = snap.header.beta;
    s.gamma = snap.header.gamma;
    s.k = snap.header.k;
    s.grid = Grid(snap.header.n, snap.header.length);
    s.dt = c.get_double("time.dt", 1e-3);
    s.t_end = c.get_double("time.t_end", 1.0);
    s.integrator = integrator_from_string(c.get_string("time.integrator", "ifrk4"));
    s.cfl_safety = c.get_double("time.cfl_safety", 0.5);
    const int every = c.get_int("time.snapshot_every", 10);
    const double l2_tol = c.get_double("invariants.l2_tolerance", 1e-8);
    const double h_tol = c.get_double("invariants.hamiltonian_tolerance", 1e-6);
    const Field u0 = snap.field();

    CommandResult r;
    r.counts["steps"] = s.step_count();
    try {
        const Trajectory t = evolve(u0, s, every);
        double mean_defect = 0.0;
        for (const auto& f : t.fields) mean_defect = std::max(mean_defect, std::abs(f.mean() - u0.mean()));
        const double l2 = Trajectory::relative_drift(t.l2);
        const double h = Trajectory::relative_drift(t.hamiltonian);
        const bool pass = l2 < l2_tol && h < h_tol;
        trace_table(t).write(opt.out / "traces.csv");
        write_json(opt.out / "invariants.json", {{"l2_drift", number(l2)},
                                                 {"hamiltonian_drift", number(h)},
                                                 {"mean_defect", number(mean_defect)},
                                                 {"l2_tolerance", l2_tol},
                                                 {"hamiltonian_tolerance", h_tol},
                                                 {"pass", pass}});
        io::logger()->info("invariants: L2 drift {}, Hamiltonian drift {}", l2, h);
        if (!pass) r.exit_code = kCheckFailed;
    } catch (const BlowupDetected& e) {
        write_json(opt.out / "invariants.json", {{"blowup", true}, {"reason", e.what()}, {"pass", false}});
        io::logger()->error("{}", e.what());
        r.exit_code = kBlowup;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Driver

/// Loads the config (INI, or a previous manifest.json), applies flag overrides,
/// runs the command and writes manifest.json. Never throws.
inline int run(const RunOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    auto log = io::logger();
    io::Config config;
    CommandResult result;
    std::string error;
    bool output_ready = false;
    try {
        nlohmann::json previous;
        if (opt.config) {
            config = io::Config::load(*opt.config, &previous);
            if (previous.contains("command") && previous["command"] != opt.command)
                throw ConfigurationError("manifest was written by '" + previous["command"].get<std::string>() + "', not '" + opt.command + "'");
        }
        if (opt.jobs < 1) throw ConfigurationError("--jobs must be >= 1");
        const std::string seed_key = opt.command == "probe-kernel" ? "kernel.seed" : "estimates.seed";
        if (opt.seed) config.set(seed_key, std::to_string(*opt.seed));
        if (opt.which) config.set("estimates.which", *opt.which);
        if (opt.draws) config.set("estimates.draws", std::to_string(*opt.draws));
        if (opt.snapshot) config.set("invariants.snapshot", opt.snapshot->string());
        fs::create_directories(opt.out);
        output_ready = true;

        if (opt.command == "solve") result = cmd_solve(config, opt);
        else if (opt.command == "sweep-gamma") result = cmd_sweep_gamma(config, opt);
        else if (opt.command == "probe-kernel") result = cmd_probe_kernel(config, opt);
        else if (opt.command == "probe-estimates") result = cmd_probe_estimates(config, opt);
        else if (opt.command == "picard-check") result = cmd_picard_check(config, opt);
        else if (opt.command == "invariants") result = cmd_invariants(config, opt);
        else throw ConfigurationError("unknown command '" + opt.command + "'");
        for (const auto& key : config.unused_keys()) log->warn("config key '{}' was not used by {}", key, opt.command);
    } catch (const BlowupDetected& e) {
        error = e.what();
        result.exit_code = kBlowup;
    } catch (const ContractionFailure& e) {
        error = e.what();
        result.exit_code = kCheckFailed;
    } catch (const AccuracyError& e) {
        error = e.what();
        result.exit_code = kCheckFailed;
    } catch (const BoxTooSmall& e) {
        error = e.what();
        result.exit_code = kCheckFailed;
    } catch (const NonfiniteValue& e) {
        error = e.what();
        result.exit_code = kCheckFailed;
    } catch (const std::exception& e) {
        error = e.what();
        result.exit_code = kConfigError;
    }
    if (!error.empty()) log->error("{}: {}", opt.command, error);

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (output_ready) {
        nlohmann::json manifest = {{"command", opt.command},
                                   {"version", OSTROVSKY_VERSION},
                                   {"config", config.resolved()},
                                   {"seed", result.seed ? nlohmann::json(*result.seed) : nlohmann::json(nullptr)},
                                   {"jobs", opt.jobs},
                                   {"out", opt.out.string()},
                                   {"wall_clock_seconds", seconds},
                                   {"counts", result.counts},
                                   {"exit_code", result.exit_code}};
        if (!error.empty()) manifest["error"] = error;
        try {
            write_json(opt.out / "manifest.json", manifest);
        } catch (const std::exception& e) {
            log->error("cannot write manifest: {}", e.what());
            if (result.exit_code == kSuccess) result.exit_code = kConfigError;
        }
    }
    return result.exit_code;
}

}  // namespace ostrovsky::cli
