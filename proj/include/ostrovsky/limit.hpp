#pragma once

// Weak-rotation limit: solutions at small gamma against the gamma = 0 (gKdV)
// solution from the same data. e(gamma) = ||u^gamma(T) - v(T)||_{L2} should scale
// linearly in gamma, and the Gronwall constant bounding d/dt ||u - v|| should not
// depend on gamma.

#include "ostrovsky/errors.hpp"
#include "ostrovsky/norms.hpp"
#include "ostrovsky/parallel.hpp"
#include "ostrovsky/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace ostrovsky {

struct LineFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    /// root-mean-square residual
    double residual = std::numeric_limits<double>::quiet_NaN();
    int points = 0;
};

/// Least-squares line through (x_i, y_i); needs at least two distinct x.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit f;
    f.points = static_cast<int>(x.size());
    if (x.size() < 2 || x.size() != y.size()) return f;
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        rr += r * r;
    }
    f.residual = std::sqrt(rr / n);
    return f;
}

/// Time derivative of samples on a uniform lattice: centered inside, one-sided
/// second order at the ends.
inline std::vector<double> lattice_derivative(const std::vector<double>& q, double h) {
    const std::size_t n = q.size();
    std::vector<double> d(n, 0.0);
    if (n < 3) {
        if (n == 2) d[0] = d[1] = (q[1] - q[0]) / h;
        return d;
    }
    d[0] = (-3.0 * q[0] + 4.0 * q[1] - q[2]) / (2.0 * h);
    d[n - 1] = (3.0 * q[n - 1] - 4.0 * q[n - 2] + q[n - 3]) / (2.0 * h);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (q[i + 1] - q[i - 1]) / (2.0 * h);
    return d;
}

/// Uniform snapshot spacing of a trajectory.
inline double lattice_step(const Trajectory& t) {
    if (t.size() < 2) throw LatticeMismatch("trajectory has fewer than two snapshots");
    const double h = t.times[1] - t.times[0];
    for (std::size_t i = 1; i < t.size(); ++i)
        if (std::abs((t.times[i] - t.times[i - 1]) - h) > 1e-9 * h)
            throw LatticeMismatch("snapshot times are not uniformly spaced");
    return h;
}

// ---------------------------------------------------------------------------
// Gronwall consistency

struct GronwallReport {
    double gamma = 0.0;
    /// smallest C with d/dt||w|| <= C (M^k ||w|| + gamma S) on the lattice
    double constant = 0.0;
    /// M = sup_t (||u||_{X_s} + ||v||_{X_s})
    double m = 0.0;
    /// S = sup_t ||u||_{X_s}
    double s_sup = 0.0;
    std::vector<double> times;
    std::vector<double> w;
    std::vector<double> dw;
    std::vector<double> envelope;
    /// max_t (||w|| - envelope) / max(envelope, tiny); <= 0 means the envelope holds
    double envelope_excess = 0.0;
    bool envelope_holds = true;
};

/// Checks d/dt ||w||_{L2} <= C M^k ||w|| + C gamma S on the common lattice of `u`
/// (rotation gamma) and `v` (reference), w = u - v, and the integrated bound
/// ||w(t)|| <= ||w(0)|| e^{At} + (B/A)(e^{At} - 1), A = C M^k, B = C gamma S.
inline GronwallReport gronwall_consistency_check(const Trajectory& u, const Trajectory& v, double gamma, int k,
                                                 double s = 2.0) {
    if (u.size() != v.size()) throw LatticeMismatch("trajectories carry different snapshot counts");
    for (std::size_t i = 0; i < u.size(); ++i)
        if (std::abs(u.times[i] - v.times[i]) > 1e-12 * std::max(1.0, std::abs(u.times[i])))
            throw LatticeMismatch("snapshot times differ");
    const double h = lattice_step(u);

    GronwallReport r;
    r.gamma = gamma;
    r.times = u.times;
    for (std::size_t i = 0; i < u.size(); ++i) {
        r.w.push_back((u.fields[i] - v.fields[i]).l2_norm());
        const double xu = x_s_norm(u.fields[i], s);
        const double xv = x_s_norm(v.fields[i], s);
        r.m = std::max(r.m, xu + xv);
        r.s_sup = std::max(r.s_sup, xu);
    }
    r.dw = lattice_derivative(r.w, h);
    const double mk = std::pow(r.m, k);
    double wmax = 0.0;
    for (double x : r.w) wmax = std::max(wmax, x);
    // differences of ||w|| below this are roundoff
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(wmax, r.m) / h;
    for (std::size_t i = 0; i < r.w.size(); ++i) {
        if (r.dw[i] <= floor) continue;
        const double denom = mk * r.w[i] + gamma * r.s_sup;
        if (denom > 0.0) r.constant = std::max(r.constant, r.dw[i] / denom);
    }
    const double A = r.constant * mk;
    const double B = r.constant * gamma * r.s_sup;
    for (std::size_t i = 0; i < r.w.size(); ++i) {
        const double t = r.times[i] - r.times.front();
        const double growth = A > 0.0 ? std::expm1(A * t) / A : t;
        const double env = r.w.front() * std::exp(A * t) + B * growth;
        r.envelope.push_back(env);
        const double excess = (r.w[i] - env) / std::max(env, std::numeric_limits<double>::min());
        if (r.w[i] > env) r.envelope_excess = std::max(r.envelope_excess, excess);
    }
    // the lattice derivative is second order, so allow its truncation error
    r.envelope_holds = r.envelope_excess <= 1e-3;
    return r;
}

// ---------------------------------------------------------------------------
// X_s growth

struct XsGrowthReport {
    double s = 2.0;
    std::vector<double> times;
    std::vector<double> xs;
    /// smallest C0 with d/dt ||u||_{X_s} <= C0 ||u||_{X_s}^{k+1} on the lattice
    double constant = 0.0;
    double max_over_initial = 1.0;
    bool bounded = true;
};

inline XsGrowthReport xs_growth_monitor(const Trajectory& traj, double s, int k) {
    XsGrowthReport r;
    r.s = s;
    r.times = traj.times;
    for (const auto& f : traj.fields) {
        const double x = x_s_norm(f, s);
        if (!std::isfinite(x)) r.bounded = false;
        r.xs.push_back(x);
    }
    if (traj.size() >= 2) {
        const double h = lattice_step(traj);
        const auto d = lattice_derivative(r.xs, h);
        for (std::size_t i = 0; i < r.xs.size(); ++i) {
            const double floor = 64.0 * std::numeric_limits<double>::epsilon() * r.xs[i] / h;
            if (d[i] > floor && r.xs[i] > 0.0) r.constant = std::max(r.constant, d[i] / std::pow(r.xs[i], k + 1));
        }
    }
    if (!r.xs.empty() && r.xs.front() > 0.0) {
        for (double x : r.xs) r.max_over_initial = std::max(r.max_over_initial, x / r.xs.front());
        r.bounded = r.bounded && r.max_over_initial < 10.0;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepConfig {
    std::vector<double> gammas{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
    /// gamma is overridden per point; t_end is the run length
    SolverConfig solver;
    double t_compare = 0.5;
    double s = 2.0;
    int snapshot_every = 10;
    /// rotation of the reference run: 0 is gKdV
    double reference_gamma = 0.0;
    int jobs = 1;

    void validate() const {
        if (gammas.empty()) throw ConfigurationError("gamma list is empty");
        for (double g : gammas)
            if (!(g > 0.0)) throw ConfigurationError("sweep gammas must be positive");
        for (std::size_t i = 0; i < gammas.size(); ++i)
            for (std::size_t j = i + 1; j < gammas.size(); ++j)
                if (gammas[i] == gammas[j]) throw ConfigurationError("sweep gammas must be distinct");
        if (!(t_compare > 0.0) || t_compare > solver.t_end + 1e-12)
            throw ConfigurationError("t_compare must lie in (0, t_end]");
        if (snapshot_every <= 0) throw ConfigurationError("snapshot_every must be positive");
        if (!(reference_gamma >= 0.0)) throw ConfigurationError("reference gamma must be non-negative");
    }
};

struct SweepPoint {
    double gamma = 0.0;
    double error = std::numeric_limits<double>::quiet_NaN();
    /// ||u^gamma(T) - v(T)||_{H^s}, recorded only
    double hs_difference = std::numeric_limits<double>::quiet_NaN();
    bool floor_limited = false;
    bool failed = false;
    std::string failure;
    double l2_drift = 0.0;
    double hamiltonian_drift = 0.0;
    std::vector<double> xs;
    GronwallReport gronwall;
    XsGrowthReport growth;
};

struct RateReport {
    /// ordered by decreasing gamma
    std::vector<SweepPoint> points;
    std::vector<double> reference_xs;
    std::vector<double> times;
    /// ||v_dt(T) - v_{dt/2}(T)||, the discretization floor
    double self_error = 0.0;
    LineFit fit;
    /// e(gamma) / gamma over fitted points
    double max_error_ratio = std::numeric_limits<double>::quiet_NaN();
    double min_error_ratio = std::numeric_limits<double>::quiet_NaN();
    /// max C* / min C* over fitted points
    double gronwall_spread = std::numeric_limits<double>::quiet_NaN();
    double growth_spread = std::numeric_limits<double>::quiet_NaN();

    bool floor_limited() const {
        return std::any_of(points.begin(), points.end(), [](const SweepPoint& p) { return p.floor_limited; });
    }
};

namespace detail {

inline std::size_t snapshot_index(const Trajectory& t, double time) {
    for (std::size_t i = 0; i < t.size(); ++i)
        if (std::abs(t.times[i] - time) <= 1e-9 * std::max(1.0, time)) return i;
    throw ConfigurationError("t_compare does not fall on the snapshot lattice");
}

inline double spread(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Solves once at the reference rotation and once per gamma from identical data,
/// then fits log e against log gamma over points above the discretization floor.
inline RateReport rotation_limit_sweep(const SweepConfig& cfg, const Field& u0) {
    cfg.validate();
    if (!u0.is_mean_zero()) throw MeanZeroViolation(u0.mean());
    std::vector<double> gammas = cfg.gammas;
    std::sort(gammas.begin(), gammas.end(), std::greater<>());

    SolverConfig ref_cfg = cfg.solver;
    ref_cfg.gamma = cfg.reference_gamma;
    SolverConfig half_cfg = ref_cfg;
    half_cfg.dt = ref_cfg.dt / 2;

    // index 0: reference, 1: reference at dt/2, 2..: sweep points
    const std::size_t jobs_total = gammas.size() + 2;
    std::vector<std::optional<Trajectory>> runs(jobs_total);
    std::vector<std::string> failures(jobs_total);
    parallel_for(jobs_total, cfg.jobs, [&](std::size_t j) {
        SolverConfig c = j == 0 ? ref_cfg : j == 1 ? half_cfg : cfg.solver;
        int every = cfg.snapshot_every;
        if (j == 1) every *= 2;
        if (j >= 2) c.gamma = gammas[j - 2];
        try {
            runs[j] = evolve(u0, c, every, cfg.s);
        } catch (const BlowupDetected& e) {
            failures[j] = e.what();
        }
    });
    if (!runs[0] || !runs[1]) throw BlowupDetected(0, 0.0, "reference run failed: " + failures[0] + failures[1]);

    RateReport report;
    const Trajectory& ref = *runs[0];
    const std::size_t ic = detail::snapshot_index(ref, cfg.t_compare);
    report.times = ref.times;
    report.reference_xs = ref.xs;
    report.self_error = (ref.fields[ic] - runs[1]->fields[detail::snapshot_index(*runs[1], cfg.t_compare)]).l2_norm();

    std::vector<double> lx, ly, ratios, gronwall, growth;
    for (std::size_t p = 0; p < gammas.size(); ++p) {
        SweepPoint pt;
        pt.gamma = gammas[p];
        const auto& run = runs[p + 2];
        if (!run) {
            pt.failed = true;
            pt.failure = failures[p + 2];
            report.points.push_back(std::move(pt));
            continue;
        }
        pt.l2_drift = Trajectory::relative_drift(run->l2);
        pt.hamiltonian_drift = Trajectory::relative_drift(run->hamiltonian);
        pt.xs = run->xs;
        const Field diff = run->fields[ic] - ref.fields[ic];
        pt.error = diff.l2_norm();
        pt.hs_difference = h_s_norm(diff, cfg.s);
        pt.gronwall = gronwall_consistency_check(*run, ref, std::abs(pt.gamma - cfg.reference_gamma), cfg.solver.k, cfg.s);
        pt.growth = xs_growth_monitor(*run, cfg.s, cfg.solver.k);
        const double t_end = cfg.solver.t_end;
        if (pt.l2_drift > 1e-8 * t_end || pt.hamiltonian_drift > 1e-6 * t_end) {
            pt.failed = true;
            pt.failure = "conservation check failed";
        }
        pt.floor_limited = !(pt.error > 10.0 * report.self_error);
        if (!pt.failed && !pt.floor_limited) {
            lx.push_back(std::log(pt.gamma));
            ly.push_back(std::log(pt.error));
            ratios.push_back(pt.error / pt.gamma);
            gronwall.push_back(pt.gronwall.constant);
            growth.push_back(pt.growth.constant);
        }
        report.points.push_back(std::move(pt));
    }
    report.fit = fit_line(lx, ly);
    if (!ratios.empty()) {
        report.max_error_ratio = *std::max_element(ratios.begin(), ratios.end());
        report.min_error_ratio = *std::min_element(ratios.begin(), ratios.end());
    }
    report.gronwall_spread = detail::spread(gronwall);
    report.growth_spread = detail::spread(growth);
    return report;
}

/// Largest relative increase e(gamma_{i+1}) / e(gamma_i) - 1 between adjacent points
/// ordered by decreasing gamma; <= 0.05 means monotone within 5% slack.
inline double monotonicity_excess(const RateReport& r) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < r.points.size(); ++i) {
        const auto& a = r.points[i - 1];
        const auto& b = r.points[i];
        if (a.failed || b.failed) continue;
        worst = std::max(worst, b.error / a.error - 1.0);
    }
    return worst;
}

}  // namespace ostrovsky
