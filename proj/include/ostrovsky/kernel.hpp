#pragma once

// The dyadic kernel
//     K(x, t) = int exp(-i t phi(xi) + i x xi) chi_[N,4N](|xi|) dxi
// by oscillation-adaptive Gauss-Kronrod panels, its decay in the regions
//     O1: |x| <= 1/N,  O2: |x| > 1/N, |x| >= 4000 a N^2 t,  O3: |x| > 1/N, |x| < 4000 a N^2 t,
// and the mixed norm ||K||_{L^{g/2}_x L^inf_t} via a Fourier lattice in xi.

#include "ostrovsky/errors.hpp"
#include "ostrovsky/fft.hpp"
#include "ostrovsky/limit.hpp"
#include "ostrovsky/parallel.hpp"
#include "ostrovsky/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <string>
#include <vector>

namespace ostrovsky {

struct KernelSpec {
    /// lower edge of the block [N, 4N]
    double N = 16.0;
    double beta = -1.0;
    double gamma = 1.0;
    /// absolute quadrature tolerance
    double tolerance = 1e-9;
    /// frequency threshold entering the O2/O3 boundary
    double a = 16.0;
    std::size_t max_panels = std::size_t{1} << 23;

    void validate() const {
        if (!(N > 0.0)) throw ConfigurationError("kernel block edge N must be positive");
        if (!(tolerance > 0.0)) throw ConfigurationError("kernel tolerance must be positive");
        if (!(a > 0.0)) throw ConfigurationError("threshold a must be positive");
    }
};

struct KernelValue {
    cplx value;
    double error = 0.0;
    std::size_t panels = 0;
};

namespace detail {

// 15-point Kronrod abscissae on [-1, 1] (nonnegative half) with Kronrod and embedded Gauss weights.
inline constexpr std::array<double, 8> kXgk = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                               0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                               0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                               0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                               0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                               0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                               0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                              0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct KernelPhase {
    double x, t, beta, gamma;

    cplx integrand(double xi) const {
        constexpr long double two_pi = 6.283185307179586476925286766559L;
        const long double phi = static_cast<long double>(beta) * xi * xi * xi + static_cast<long double>(gamma) / xi;
        const long double theta = std::fmod(static_cast<long double>(x) * xi - static_cast<long double>(t) * phi, two_pi);
        return std::polar(1.0, static_cast<double>(theta));
    }

    /// |d/dxi (x xi - t phi(xi))|
    double rate(double xi) const { return std::abs(x - t * (3.0 * beta * xi * xi - gamma / (xi * xi))); }
};

struct Panel {
    double lo, hi;
    cplx value;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

inline Panel gk15(const KernelPhase& f, double lo, double hi) {
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    const cplx fc = f.integrand(c);
    cplx kron = fc * kWgk[7];
    cplx gauss = fc * kWg[3];
    for (int i = 0; i < 7; ++i) {
        const cplx s = f.integrand(c - h * kXgk[i]) + f.integrand(c + h * kXgk[i]);
        kron += kWgk[i] * s;
        if (i % 2 == 1) gauss += kWg[i / 2] * s;
    }
    return {lo, hi, kron * h, std::abs((kron - gauss) * h)};
}

/// Panels on [lo, hi] no wider than a quarter of the local oscillation wavelength.
inline std::vector<Panel> initial_panels(const KernelPhase& f, double lo, double hi, std::size_t budget) {
    std::vector<Panel> out;
    const double span = hi - lo;
    auto width_at = [&](double xi) {
        const double r = f.rate(xi);
        const double quarter = r > 0.0 ? 0.5 * std::numbers::pi / r : span;
        return std::min(quarter, span / 4.0);
    };
    double a = lo;
    while (a < hi) {
        double h = width_at(a);
        h = std::min(h, width_at(std::min(hi, a + h)));
        const double b = std::min(hi, a + h);
        out.push_back(gk15(f, a, b));
        if (out.size() > budget) throw AccuracyError("kernel quadrature exceeded its panel budget", std::numeric_limits<double>::infinity());
        a = b;
    }
    return out;
}

}  // namespace detail

/// K(x, t) with an error estimate from the embedded Gauss rule; panels are bisected
/// where the estimate is largest until the total meets spec.tolerance.
inline KernelValue kernel_quadrature(double x, double t, const KernelSpec& spec) {
    spec.validate();
    if (!(t >= 0.0)) throw DomainError("kernel time must be non-negative");
    const detail::KernelPhase f{x, t, spec.beta, spec.gamma};
    std::vector<detail::Panel> panels = detail::initial_panels(f, spec.N, 4.0 * spec.N, spec.max_panels);
    {
        auto neg = detail::initial_panels(f, -4.0 * spec.N, -spec.N, spec.max_panels);
        panels.insert(panels.end(), neg.begin(), neg.end());
    }
    double total_error = 0.0;
    for (const auto& p : panels) total_error += p.error;
    std::priority_queue<detail::Panel> heap(panels.begin(), panels.end());
    while (total_error > spec.tolerance) {
        if (heap.size() >= spec.max_panels)
            throw AccuracyError("kernel quadrature tolerance not reached within the panel budget", total_error);
        const auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.lo + worst.hi);
        const auto left = detail::gk15(f, worst.lo, mid);
        const auto right = detail::gk15(f, mid, worst.hi);
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    KernelValue out;
    out.panels = heap.size();
    out.error = total_error;
    // sum in a fixed order so the result does not depend on heap layout
    std::vector<detail::Panel> all;
    all.reserve(heap.size());
    while (!heap.empty()) {
        all.push_back(heap.top());
        heap.pop();
    }
    std::sort(all.begin(), all.end(), [](const auto& p, const auto& q) { return p.lo < q.lo; });
    for (const auto& p : all) out.value += p.value;
    return out;
}

inline cplx kernel_eval(double x, double t, const KernelSpec& spec) { return kernel_quadrature(x, t, spec).value; }

/// 2 (sin(4Nx) - sin(Nx)) / x, the kernel at t = 0.
inline double kernel_at_zero_time(double x, double N) {
    if (x == 0.0) return 6.0 * N;
    return 2.0 * (std::sin(4.0 * N * x) - std::sin(N * x)) / x;
}

// ---------------------------------------------------------------------------
// Regions

enum class Region { omega1 = 0, omega2 = 1, omega3 = 2 };

inline const char* to_string(Region r) {
    switch (r) {
        case Region::omega1: return "omega1";
        case Region::omega2: return "omega2";
        default: return "omega3";
    }
}

inline Region classify(double x, double t, const KernelSpec& spec) {
    if (!(t > 0.0)) throw DomainError("regions partition t > 0 only");
    const double ax = std::abs(x);
    if (ax <= 1.0 / spec.N) return Region::omega1;
    if (ax >= 4000.0 * spec.a * spec.N * spec.N * t) return Region::omega2;
    return Region::omega3;
}

/// Pointwise bound of the region: C N, N^{-1} x^{-2}, t^{-1/3} (constants dropped).
inline double region_bound(Region r, double x, double t, double N) {
    switch (r) {
        case Region::omega1: return 6.0 * N;
        case Region::omega2: return 1.0 / (N * x * x);
        default: return std::pow(t, -1.0 / 3.0);
    }
}

struct RegionSample {
    Region region = Region::omega1;
    double x = 0.0;
    double t = 0.0;
    double abs_k = 0.0;
    double imag = 0.0;
    double bound = 0.0;
    double ratio = 0.0;
};

struct RegionStats {
    Region region = Region::omega1;
    int samples = 0;
    int skipped = 0;
    /// sup |K| / bound
    double constant = 0.0;
    bool finite = true;
    bool skip_ok() const { return skipped * 10 <= samples + skipped; }
};

struct RayFit {
    /// ray x = velocity * t, velocity = phi'(eta N)
    double eta = 0.0;
    double velocity = 0.0;
    double slope = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> t;
    std::vector<double> envelope;
};

/// Sampling boxes in the scaled variables X = N x, T = N^3 t, in which the
/// cubic part of the phase no longer depends on N.
struct DecayOptions {
    double x_scaled_max = 100.0;
    /// O3 time range in N^3 t
    double t_scaled_max = 1000.0;
    /// O2 samples span this many decades below the O2/O3 boundary
    double omega2_decades = 4.0;
    /// exponent fit along rays through stationary points
    std::vector<double> ray_etas{1.25, 2.0, 3.0, 3.75};
    int ray_samples = 120;
    int ray_bins = 12;
    double ray_t_max = 2.0;
    bool fit_rays = true;
    std::uint64_t seed = 1;
    int jobs = 1;
};

struct RegionReport {
    double N = 0.0;
    std::vector<RegionSample> samples;
    std::array<RegionStats, 3> stats{};
    std::vector<RayFit> rays;
    /// largest fitted ray slope (the least decay observed)
    double omega3_exponent = std::numeric_limits<double>::quiet_NaN();
    /// max over samples of |Im K| / max(1, |K|)
    double max_imag = 0.0;

    bool ok() const {
        for (const auto& s : stats)
            if (!s.finite || !s.skip_ok()) return false;
        return true;
    }
};

namespace detail {

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

/// Slope of the log-binned maxima of |K| against log t along one ray.
inline RayFit fit_ray(const KernelSpec& spec, double eta, const DecayOptions& opt) {
    RayFit fit;
    fit.eta = eta;
    const double xi = eta * spec.N;
    fit.velocity = 3.0 * spec.beta * xi * xi - spec.gamma / (xi * xi);
    // enter O3 well past |x| = 1/N
    const double t_lo = 4.0 / (spec.N * std::abs(fit.velocity));
    const double t_hi = opt.ray_t_max;
    if (!(t_hi > t_lo)) return fit;
    std::vector<double> abs_k(opt.ray_samples), ts(opt.ray_samples);
    for (int i = 0; i < opt.ray_samples; ++i) {
        ts[i] = t_lo * std::pow(t_hi / t_lo, (i + 0.5) / opt.ray_samples);
        abs_k[i] = std::abs(kernel_eval(fit.velocity * ts[i], ts[i], spec));
    }
    std::vector<double> lx, ly;
    const int per_bin = std::max(1, opt.ray_samples / opt.ray_bins);
    for (int b = 0; b * per_bin < opt.ray_samples; ++b) {
        double best = 0.0, tb = 0.0;
        const int end = std::min(opt.ray_samples, (b + 1) * per_bin);
        for (int i = b * per_bin; i < end; ++i) best = std::max(best, abs_k[i]);
        tb = std::sqrt(ts[b * per_bin] * ts[end - 1]);
        if (best > 0.0) {
            fit.t.push_back(tb);
            fit.envelope.push_back(best);
            lx.push_back(std::log(tb));
            ly.push_back(std::log(best));
        }
    }
    fit.slope = fit_line(lx, ly).slope;
    return fit;
}

}  // namespace detail

/// Samples each region log-uniformly in the scaled boxes and records sup |K| / bound;
/// optionally fits the decay exponent of |K| along rays through stationary points.
inline RegionReport region_decay_check(const KernelSpec& spec, int samples_per_region, const DecayOptions& opt = {}) {
    spec.validate();
    if (samples_per_region <= 0) throw ConfigurationError("samples_per_region must be positive");
    const double N = spec.N;
    const double boundary = 4000.0 * spec.a;  // O2/O3 boundary in scaled variables: X = boundary * T

    // draw the sample points deterministically up front
    std::vector<RegionSample> pts(3 * static_cast<std::size_t>(samples_per_region));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::mt19937_64 rng(draw_seed(opt.seed, i));
        const int region = static_cast<int>(i) / samples_per_region;
        const double sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
        double X = 0.0, T = 0.0;
        if (region == 0) {
            X = detail::log_uniform(rng, 1e-3, 1.0);
            T = detail::log_uniform(rng, 1e-6, opt.t_scaled_max);
        } else if (region == 1) {
            X = detail::log_uniform(rng, 1.0 * (1.0 + 1e-9), opt.x_scaled_max);
            const double t_edge = X / boundary;
            T = detail::log_uniform(rng, t_edge * std::pow(10.0, -opt.omega2_decades), t_edge);
        } else {
            X = detail::log_uniform(rng, 1.0 * (1.0 + 1e-9), opt.x_scaled_max);
            T = detail::log_uniform(rng, X / boundary * (1.0 + 1e-9), opt.t_scaled_max);
        }
        pts[i].x = sign * X / N;
        pts[i].t = T / (N * N * N);
        pts[i].region = classify(pts[i].x, pts[i].t, spec);
    }

    std::vector<char> skipped(pts.size(), 0);
    parallel_for(pts.size(), opt.jobs, [&](std::size_t i) {
        auto& p = pts[i];
        try {
            const cplx k = kernel_eval(p.x, p.t, spec);
            p.abs_k = std::abs(k);
            p.imag = std::abs(k.imag());
            p.bound = region_bound(p.region, p.x, p.t, N);
            p.ratio = p.abs_k / p.bound;
        } catch (const AccuracyError&) {
            skipped[i] = 1;
        }
    });

    RegionReport report;
    report.N = N;
    for (int r = 0; r < 3; ++r) report.stats[r].region = static_cast<Region>(r);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        auto& st = report.stats[static_cast<int>(pts[i].region)];
        if (skipped[i]) {
            ++st.skipped;
            continue;
        }
        ++st.samples;
        st.constant = std::max(st.constant, pts[i].ratio);
        if (!std::isfinite(pts[i].ratio)) st.finite = false;
        report.max_imag = std::max(report.max_imag, pts[i].imag / std::max(1.0, pts[i].abs_k));
        report.samples.push_back(pts[i]);
    }

    if (opt.fit_rays && !opt.ray_etas.empty()) {
        report.rays.resize(opt.ray_etas.size());
        parallel_for(opt.ray_etas.size(), opt.jobs,
                     [&](std::size_t i) { report.rays[i] = detail::fit_ray(spec, opt.ray_etas[i], opt); });
        double worst = -std::numeric_limits<double>::infinity();
        for (const auto& r : report.rays)
            if (std::isfinite(r.slope)) worst = std::max(worst, r.slope);
        if (std::isfinite(worst)) report.omega3_exponent = worst;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Mixed norm

struct MixedNormOptions {
    /// half-width of the x box in units of 1/N
    double x_scaled = 400.0;
    /// time box [0, T] in units of N^{-3}
    double t_scaled = 40.0;
    /// time step in units of N^{-3}
    double dt_scaled = 0.005;
    /// x-lattice points per xi-lattice point over [-4N, 4N]
    int oversample = 2;
    double tail_limit = 0.01;
    int jobs = 1;
};

struct MixedNormResult {
    double N = 0.0;
    double gamma_exp = 0.0;
    /// ||K||_{L^{g/2}_x L^inf_t} over the box
    double norm = 0.0;
    /// norm / N^{(g - 2) / g}
    double ratio = 0.0;
    /// estimated share of the L^{g/2} integral lying outside |x| <= X
    double tail_fraction = 0.0;
    double x_box = 0.0;
    double t_box = 0.0;
    int n_x = 0;
    int n_t = 0;
};

struct SupProfile {
    /// lattice spacing in x
    double hx = 0.0;
    /// sup_t |K(x_p, t)| for x_p = p hx, p = -p_max .. p_max
    std::vector<double> sup;
    int p_max = 0;
    int n_x = 0;
    int n_t = 0;
    double x_box = 0.0;
    double t_box = 0.0;
};

/// The xi integral becomes a trapezoid sum on the lattice xi_j = j N / m (half
/// weights at the block ends); by Poisson summation this is exactly the L-periodic
/// sum of K with L = 2 pi m / N, which is evaluated for all x at once by FFT.
inline SupProfile kernel_sup_profile(const KernelSpec& spec, const MixedNormOptions& opt) {
    spec.validate();
    const double N = spec.N;
    const double X = opt.x_scaled / N;
    const double T = opt.t_scaled / (N * N * N);
    // K decays only like |x|^{-1/2} inside the stationary window |x| <= T max|phi'|;
    // the period keeps every image of the box outside that window
    const double speed = std::max(std::abs(phase_derivative(spec.beta, spec.gamma, N)),
                                  std::abs(phase_derivative(spec.beta, spec.gamma, 4.0 * N)));
    const double period = 2.0 * X + 2.0 * speed * T;
    const int m = static_cast<int>(std::ceil(period * N / (2.0 * std::numbers::pi)));
    const double L = 2.0 * std::numbers::pi * m / N;
    const double dxi = N / m;
    int n_x = 1;
    while (n_x < opt.oversample * 8 * m + 2) n_x *= 2;
    const int n_t = static_cast<int>(std::ceil(opt.t_scaled / opt.dt_scaled));
    const double dt = T / n_t;

    // lattice points j in [m, 4m] and their mirrors
    std::vector<int> slots;
    std::vector<double> wts, phis;
    for (int j = m; j <= 4 * m; ++j) {
        const double w = (j == m || j == 4 * m) ? 0.5 : 1.0;
        for (int sgn : {1, -1}) {
            slots.push_back(((sgn * j) % n_x + n_x) % n_x);
            wts.push_back(w * dxi);
            phis.push_back(phase_value(spec.beta, spec.gamma, sgn * j * dxi));
        }
    }
    SupProfile out;
    out.hx = L / n_x;
    out.p_max = static_cast<int>(std::floor(X / out.hx));
    out.n_x = n_x;
    out.n_t = n_t + 1;
    out.x_box = X;
    out.t_box = T;
    const int n_keep = 2 * out.p_max + 1;
    const int p_max = out.p_max;

    const int workers = resolve_jobs(opt.jobs);
    std::vector<std::vector<double>> partial(workers, std::vector<double>(n_keep, 0.0));
    parallel_for(static_cast<std::size_t>(workers), workers, [&](std::size_t w) {
        std::vector<cplx> buf(n_x);
        auto& sup = partial[w];
        for (int l = static_cast<int>(w); l <= n_t; l += workers) {
            const double t = l * dt;
            std::fill(buf.begin(), buf.end(), cplx(0.0));
            for (std::size_t q = 0; q < slots.size(); ++q) buf[slots[q]] += wts[q] * detail::unit_phase(-t, phis[q]);
            const auto k = fft::backward(buf);
            for (int p = -p_max; p <= p_max; ++p) {
                const double v = std::abs(k[((p % n_x) + n_x) % n_x]);
                sup[p + p_max] = std::max(sup[p + p_max], v);
            }
        }
    });
    out.sup.assign(n_keep, 0.0);
    for (const auto& s : partial)
        for (int i = 0; i < n_keep; ++i) out.sup[i] = std::max(out.sup[i], s[i]);
    return out;
}

inline MixedNormResult kernel_mixed_norm(const KernelSpec& spec, double gamma_exp, const MixedNormOptions& opt = {}) {
    if (!(gamma_exp >= 7.0)) throw DomainError("mixed-norm exponent must be >= 7");
    const auto prof = kernel_sup_profile(spec, opt);
    const double q = 0.5 * gamma_exp;
    const double X = prof.x_box;
    double integral = 0.0;
    for (double v : prof.sup) integral += std::pow(v, q) * prof.hx;

    // tail: power law c |x|^{-alpha} fitted on the outer shell X/2 < |x| <= X of each side
    double tail = 0.0;
    for (int side : {1, -1}) {
        std::vector<double> lx, ly;
        const int bins = 8;
        for (int b = 0; b < bins; ++b) {
            const double lo = 0.5 * X * std::pow(2.0, static_cast<double>(b) / bins);
            const double hi = 0.5 * X * std::pow(2.0, static_cast<double>(b + 1) / bins);
            double acc = 0.0;
            int cnt = 0;
            for (int p = 1; p <= prof.p_max; ++p) {
                const double x = p * prof.hx;
                if (x <= lo || x > hi) continue;
                acc += std::pow(prof.sup[side * p + prof.p_max], q);
                ++cnt;
            }
            if (cnt > 0 && acc > 0.0) {
                lx.push_back(std::log(std::sqrt(lo * hi)));
                ly.push_back(std::log(acc / cnt));
            }
        }
        const auto fit = fit_line(lx, ly);
        const double alpha = -fit.slope;
        tail += alpha > 1.0 ? std::exp(fit.intercept) * std::pow(X, 1.0 - alpha) / (alpha - 1.0)
                            : std::numeric_limits<double>::infinity();
    }

    MixedNormResult r;
    r.N = spec.N;
    r.gamma_exp = gamma_exp;
    r.norm = std::pow(integral, 1.0 / q);
    r.ratio = r.norm / std::pow(spec.N, (gamma_exp - 2.0) / gamma_exp);
    r.tail_fraction = std::isfinite(tail) ? tail / (integral + tail) : 1.0;
    r.x_box = X;
    r.t_box = prof.t_box;
    r.n_x = prof.n_x;
    r.n_t = prof.n_t;
    if (r.tail_fraction > opt.tail_limit)
        throw BoxTooSmall("estimated tail share " + std::to_string(r.tail_fraction) + " exceeds the limit " +
                          std::to_string(opt.tail_limit));
    return r;
}

}  // namespace ostrovsky
