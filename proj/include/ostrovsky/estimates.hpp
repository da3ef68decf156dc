#pragma once

// Ensemble probes of the linear, bilinear and multilinear estimates. Each probe
// draws data from a seeded law, evaluates LHS and RHS per draw, and compares the
// largest ratio across one grid doubling and one window doubling.

#include "ostrovsky/errors.hpp"
#include "ostrovsky/fft.hpp"
#include "ostrovsky/norms.hpp"
#include "ostrovsky/parallel.hpp"
#include "ostrovsky/spectral.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ostrovsky {

// ---------------------------------------------------------------------------
// Tags

enum class EstimateTag {
    strichartz_203,
    smoothing_205,
    smoothing_208,
    maximal_209,
    bilinear_2027,
    linfty_2055,
    linfty_2057,
    linfty_2060,
    multilinear_303,
};

inline constexpr std::array<std::pair<EstimateTag, const char*>, 9> kEstimateTags{{
    {EstimateTag::strichartz_203, "2.03"},
    {EstimateTag::smoothing_205, "2.05"},
    {EstimateTag::smoothing_208, "2.08"},
    {EstimateTag::maximal_209, "2.09"},
    {EstimateTag::bilinear_2027, "2.027"},
    {EstimateTag::linfty_2055, "2.055"},
    {EstimateTag::linfty_2057, "2.057"},
    {EstimateTag::linfty_2060, "2.060"},
    {EstimateTag::multilinear_303, "3.03"},
}};

inline std::string to_string(EstimateTag tag) {
    for (const auto& [t, name] : kEstimateTags)
        if (t == tag) return name;
    return "?";
}

inline std::string valid_estimate_tags() {
    std::string out;
    for (const auto& [t, name] : kEstimateTags) out += (out.empty() ? "" : ", ") + std::string(name);
    return out;
}

inline EstimateTag estimate_tag_from_string(const std::string& s) {
    for (const auto& [t, name] : kEstimateTags)
        if (s == name) return t;
    throw ConfigurationError("unknown estimate tag '" + s + "'; valid tags: " + valid_estimate_tags());
}

// ---------------------------------------------------------------------------
// Data laws

namespace law {
/// Coefficients ~ exp(-xi^2 / (2 w^2)) with w = relative_width * (grid Nyquist
/// wavenumber), cut where the envelope drops below 1e-16 and below |xi| = floor.
struct GaussianSpectrum {
    double relative_width = 0.1;
    double floor = 0.0;
};
/// Flat spectrum on N <= |xi| <= 4N.
struct BandLimited {
    double N = 1.0;
};
/// Flat spectrum on 0 < |xi| < M.
struct LowFrequency {
    double M = 1.0;
};
}  // namespace law

using DataLaw = std::variant<law::GaussianSpectrum, law::BandLimited, law::LowFrequency>;

inline constexpr double kGaussianTail = 1e-16;

inline std::string to_string(const DataLaw& law) {
    char buf[96];
    if (const auto* g = std::get_if<law::GaussianSpectrum>(&law))
        std::snprintf(buf, sizeof buf, "gaussian_spectrum(%.17g, floor %.17g)", g->relative_width, g->floor);
    else if (const auto* b = std::get_if<law::BandLimited>(&law))
        std::snprintf(buf, sizeof buf, "band_limited(%.17g)", b->N);
    else
        std::snprintf(buf, sizeof buf, "low_frequency(%.17g)", std::get<law::LowFrequency>(law).M);
    return buf;
}

/// Largest |xi| the law can carry on `grid`.
inline double law_max_wavenumber(const DataLaw& law, const Grid& grid) {
    if (const auto* g = std::get_if<law::GaussianSpectrum>(&law)) {
        const double w = g->relative_width * grid.max_wavenumber();
        return std::min(grid.max_wavenumber(), w * std::sqrt(-2.0 * std::log(kGaussianTail)));
    }
    if (const auto* b = std::get_if<law::BandLimited>(&law)) return 4.0 * b->N;
    return std::get<law::LowFrequency>(law).M;
}

/// Spectral envelope at wavenumber xi (zero outside the support and at xi = 0).
inline double law_envelope(const DataLaw& law, const Grid& grid, double xi) {
    const double a = std::abs(xi);
    if (a == 0.0) return 0.0;
    if (const auto* g = std::get_if<law::GaussianSpectrum>(&law)) {
        if (a < g->floor || a > law_max_wavenumber(law, grid)) return 0.0;
        const double w = g->relative_width * grid.max_wavenumber();
        return std::exp(-0.5 * (a / w) * (a / w));
    }
    if (const auto* b = std::get_if<law::BandLimited>(&law)) return a >= b->N && a <= 4.0 * b->N ? 1.0 : 0.0;
    return a < std::get<law::LowFrequency>(law).M ? 1.0 : 0.0;
}

namespace detail {

inline double unit_uniform(std::uint64_t key) {
    return (static_cast<double>(key >> 11) + 0.5) * 0x1.0p-53;
}

/// Two independent standard normals from one key (Box-Muller).
inline std::pair<double, double> normal_pair(std::uint64_t key) {
    const double r = std::sqrt(-2.0 * std::log(unit_uniform(draw_seed(key, 0))));
    const double th = 2.0 * std::numbers::pi * unit_uniform(draw_seed(key, 1));
    return {r * std::cos(th), r * std::sin(th)};
}

}  // namespace detail

/// One draw of the law on `grid`. Mode j uses the key draw_seed(draw_key, j), so
/// grids sharing a mode share its random value. Real, mean-zero, no Nyquist content.
inline Field draw_field(const DataLaw& law, const Grid& grid, std::uint64_t draw_key) {
    std::vector<cplx> c(grid.size());
    for (int k = 1; k < grid.nyquist_slot(); ++k) {
        const double env = law_envelope(law, grid, grid.wavenumber(k));
        if (env == 0.0) continue;
        const auto [g1, g2] = detail::normal_pair(draw_seed(draw_key, static_cast<std::uint64_t>(k)));
        c[k] = env * cplx(g1, g2) / std::numbers::sqrt2;
        c[grid.size() - k] = std::conj(c[k]);
    }
    return Field(grid, std::move(c));
}

// ---------------------------------------------------------------------------
// Configuration

struct EstimateParams {
    double beta = -1.0;
    double gamma = 1.0;
    double eps = 1e-3;
    double b = 0.5 + 1.0 / 48.0;
    /// Threshold of P^a and of the low/high-frequency split.
    double a = 1.0;
    /// Weight exponent of the bilinear operator I^s.
    double bilinear_s = 0.5;

    double s1() const { return 0.25 + eps; }

    void validate() const {
        if (!std::isfinite(beta) || beta == 0.0) throw ConfigurationError("beta must be finite and nonzero");
        if (!std::isfinite(gamma)) throw ConfigurationError("gamma must be finite");
        if (!(eps > 0.0 && eps <= 1e-3)) throw ConfigurationError("eps must lie in (0, 1e-3]");
        if (!(b > 0.5 && b < 1.0)) throw ConfigurationError("b must lie in (1/2, 1)");
        if (!(a > 0.0)) throw ConfigurationError("frequency threshold a must be positive");
        if (!(bilinear_s >= 0.0 && bilinear_s <= 0.5)) throw ConfigurationError("bilinear s must lie in [0, 1/2]");
    }
};

struct Ensemble {
    std::uint64_t seed = 1;
    int n_draws = 100;
    DataLaw law = law::GaussianSpectrum{};
    /// Spatial points; 0 sizes the grid from a compactly supported law.
    int n = 512;
    double length = 64.0 * std::numbers::pi;
    double t_window = 4.0;
    EstimateParams params;
    int grid_doublings = 1;
    bool window_doubling = true;
    int jobs = 1;

    void validate() const {
        params.validate();
        if (n_draws < 1) throw ConfigurationError("draw count must be positive");
        if (!(length > 0.0) || !std::isfinite(length)) throw ConfigurationError("length must be positive");
        if (!(t_window > 0.0) || !std::isfinite(t_window)) throw ConfigurationError("time window must be positive");
        if (n < 0 || (n > 0 && (n < 8 || n % 2 != 0))) throw ConfigurationError("grid size must be 0 or an even number >= 8");
        if (grid_doublings < 0 || grid_doublings > 3) throw ConfigurationError("grid doublings must lie in [0, 3]");
        if (const auto* g = std::get_if<law::GaussianSpectrum>(&law)) {
            if (!(g->relative_width > 0.0)) throw ConfigurationError("gaussian width must be positive");
            if (!(g->floor >= 0.0)) throw ConfigurationError("gaussian floor must be nonnegative");
            if (n == 0) throw ConfigurationError("a gaussian-spectrum law needs an explicit grid size");
        } else if (const auto* b = std::get_if<law::BandLimited>(&law)) {
            if (!(b->N > 0.0)) throw ConfigurationError("block frequency N must be positive");
        } else if (!(std::get<law::LowFrequency>(law).M > 0.0)) {
            throw ConfigurationError("low-frequency cutoff M must be positive");
        }
    }
};

/// Rejects a law whose support does not match the estimate's frequency support.
inline void check_support(EstimateTag tag, const DataLaw& law, const EstimateParams& p) {
    const auto* low = std::get_if<law::LowFrequency>(&law);
    const auto* band = std::get_if<law::BandLimited>(&law);
    const auto* gauss = std::get_if<law::GaussianSpectrum>(&law);
    switch (tag) {
        case EstimateTag::maximal_209:
            if (!low || low->M > 1.0) throw ConfigurationError("2.09 needs low_frequency data with M <= 1");
            break;
        case EstimateTag::linfty_2057:
            if (!low || low->M > p.a) throw ConfigurationError("2.057 needs low_frequency data with M <= a");
            break;
        case EstimateTag::linfty_2055:
            if (!band) throw ConfigurationError("2.055 needs band_limited data");
            break;
        case EstimateTag::linfty_2060:
            if (!((gauss && gauss->floor >= p.a) || (band && band->N >= p.a)))
                throw ConfigurationError("2.060 needs data supported in |xi| >= a");
            break;
        case EstimateTag::multilinear_303:
            throw ConfigurationError("3.03 is probed on space-time lattices, not on a data law");
        default:
            break;
    }
}

// ---------------------------------------------------------------------------
// Sampling levels

struct Level {
    std::string label;
    Grid grid;
    double t_window;
    int n_t;
};

inline int next_pow2(double v) {
    int p = 1;
    while (p < v) p *= 2;
    return p;
}

/// Grid size for a compactly supported law: Nyquist index at least twice the top mode.
inline int auto_grid_size(const DataLaw& law, double length) {
    const Grid probe(8, length);
    const double top = law_max_wavenumber(law, probe) * length / (2.0 * std::numbers::pi);
    return next_pow2(std::max(64.0, 4.0 * (std::floor(top + 1e-9) + 1.0)));
}

/// Largest |phi| over the modes the law can excite on `grid`.
inline double phase_bound(const DataLaw& law, const Grid& grid, double beta, double gamma) {
    double m = 0.0;
    for (int k = 1; k < grid.nyquist_slot(); ++k) {
        const double xi = grid.wavenumber(k);
        if (law_envelope(law, grid, xi) > 0.0) m = std::max(m, std::abs(phase_value(beta, gamma, xi)));
    }
    return m;
}

/// Time samples: at least 2 T phi_max / pi (four per period of the fastest phase).
inline int time_samples(double t_window, double phase_max) {
    return next_pow2(std::max(64.0, 2.0 * t_window * phase_max / std::numbers::pi));
}

/// Base level, then `grid_doublings` doubled grids, then the doubled window.
/// Gaussian laws double n at fixed length, so their bandwidth doubles with the
/// grid; compactly supported laws double n and length, which halves the spectral
/// spacing at fixed support.
inline std::vector<Level> refinement_levels(const Ensemble& e, double phase_factor = 1.0) {
    const bool gaussian = std::holds_alternative<law::GaussianSpectrum>(e.law);
    const int n0 = e.n > 0 ? e.n : auto_grid_size(e.law, e.length);
    auto make = [&](std::string label, int n, double length, double t_window) {
        const Grid g(n, length);
        const double phi = phase_factor * phase_bound(e.law, g, e.params.beta, e.params.gamma);
        return Level{std::move(label), g, t_window, time_samples(t_window, phi)};
    };
    std::vector<Level> out{make("base", n0, e.length, e.t_window)};
    for (int d = 1; d <= e.grid_doublings; ++d) {
        const int f = 1 << d;
        out.push_back(make("grid x" + std::to_string(f), n0 * f, gaussian ? e.length : e.length * f, e.t_window));
    }
    if (e.window_doubling) out.push_back(make("window x2", n0, e.length, 2.0 * e.t_window));
    return out;
}

// ---------------------------------------------------------------------------
// Streaming space-time evaluation

/// Mixed Lebesgue norm accumulated one time slice at a time; same conventions
/// and summation order as mixed_norm.
class MixedNormAccumulator {
public:
    MixedNormAccumulator(int n_x, double dx, double dt, double p, double q, Order order)
        : dx_(dx), dt_(dt), p_(p), q_(q), order_(order) {
        if (!(p >= 1.0) || !(q >= 1.0)) throw DomainError("mixed norm exponents must be >= 1");
        if (order == Order::x_outer) per_x_.assign(n_x, 0.0);
    }

    void add_slice(std::span<const double> row) {
        if (order_ == Order::x_outer) {
            for (std::size_t m = 0; m < row.size(); ++m) per_x_[m] = detail::accumulate_power(per_x_[m], row[m], q_);
        } else {
            double inner = 0.0;
            for (double v : row) inner = detail::accumulate_power(inner, v, q_);
            outer_ = detail::accumulate_power(outer_, detail::finish_power(inner, q_, dx_), p_);
        }
    }

    double result() const {
        if (order_ == Order::t_outer) return detail::finish_power(outer_, p_, dt_);
        double outer = 0.0;
        for (double acc : per_x_) outer = detail::accumulate_power(outer, detail::finish_power(acc, q_, dt_), p_);
        return detail::finish_power(outer, p_, dx_);
    }

private:
    double dx_, dt_, p_, q_;
    Order order_;
    std::vector<double> per_x_;
    double outer_ = 0.0;
};

/// Calls sink(l, samples) with the samples of profile(t_l) (U(t_l) u0)(x) for
/// every time slot of `level`. Phases advance by recurrence, re-anchored every
/// 32 steps.
template <class Sink>
void stream_propagated(const Field& u0, const Level& level, double beta, double gamma,
                       const std::function<double(double)>& profile, Sink&& sink) {
    const Grid& g = level.grid;
    const PhaseSymbol phi(beta, gamma, g);
    const double dt = level.t_window / level.n_t;
    std::vector<int> slots;
    for (int k = 1; k < g.nyquist_slot(); ++k)
        if (u0.coefficients()[k] != cplx(0.0)) slots.push_back(k);
    std::vector<cplx> z(slots.size()), step(slots.size());
    for (std::size_t i = 0; i < slots.size(); ++i) step[i] = ostrovsky::detail::unit_phase(-dt, phi.values()[slots[i]]);
    std::vector<cplx> c(g.size());
    const double c0 = u0.coefficients()[0].real();
    for (int l = 0; l < level.n_t; ++l) {
        const double t = l * dt;
        const double w = profile ? profile(t) : 1.0;
        for (std::size_t i = 0; i < slots.size(); ++i)
            z[i] = l % 32 == 0 ? ostrovsky::detail::unit_phase(-t, phi.values()[slots[i]]) : z[i] * step[i];
        c[0] = w * c0;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            const int k = slots[i];
            c[k] = w * u0.coefficients()[k] * z[i];
            c[g.size() - k] = std::conj(c[k]);
        }
        const auto row = inverse_transform(g, c);
        sink(l, std::span<const double>(row));
    }
}

/// psi centred in a window of length T.
inline std::function<double(double)> centred_cutoff(double t_window) {
    return [t_window](double t) { return time_cutoff(t - 0.5 * t_window); };
}

/// ||psi||_{H^b} on the level's time lattice, read off the modulated X_{0,b}
/// norm of psi(t) U(t) cos(x).
inline double cutoff_xsb_factor(const Level& level, double b, double beta, double gamma) {
    const Grid g(8, 2.0 * std::numbers::pi);
    std::vector<cplx> c(g.size());
    c[1] = c[g.size() - 1] = 0.5;
    const Field u(g, std::move(c));
    const auto stf = SpaceTimeField::propagated(u, beta, gamma, level.t_window, level.n_t, centred_cutoff(level.t_window));
    return xsb_norm_modulated(stf, 0.0, b, PhaseSymbol(beta, gamma, g)) / u.l2_norm();
}

struct EstimatePair {
    double lhs = 0.0;
    double rhs = 0.0;
};

/// LHS and RHS of a linear estimate for the datum u0. The X_{0,b} variants use
/// u = psi(t) U(t) u0, whose X_{0,b} norm is ||psi||_{H^b} ||u0||_{L2}.
/// `hb` is cutoff_xsb_factor(level, ...), passed in so draws can share it.
inline EstimatePair linear_pair(EstimateTag tag, const Field& u0, const Level& level, const Ensemble& e, double hb) {
    const auto& p = e.params;
    const Grid& g = level.grid;
    const double dt = level.t_window / level.n_t;
    const auto psi = centred_cutoff(level.t_window);
    const auto psi2 = [psi](double t) { return psi(t) * psi(t); };
    Field data = u0;
    std::function<double(double)> profile = psi;
    double pn = 2.0, qn = 2.0;
    Order order = Order::t_outer;
    double rhs = hb * u0.l2_norm();
    switch (tag) {
        case EstimateTag::strichartz_203:
            profile = nullptr;
            pn = qn = 8.0;
            rhs = u0.l2_norm();
            break;
        case EstimateTag::smoothing_205:
            data = apply_multiplier(apply_multiplier(u0, multiplier::HighPass{p.a}), multiplier::FractionalD{1.0 / 6.0});
            pn = qn = 6.0;
            break;
        case EstimateTag::smoothing_208:
            data = apply_multiplier(apply_multiplier(u0, multiplier::HighPass{p.a}), multiplier::FractionalD{1.0});
            pn = kInfinity;
            qn = 2.0;
            order = Order::x_outer;
            break;
        case EstimateTag::maximal_209: {
            const double M = std::get<law::LowFrequency>(e.law).M;
            data = apply_multiplier(apply_multiplier(u0, multiplier::LowPass{M}), multiplier::FractionalD{p.s1()});
            profile = psi2;
            pn = 2.0;
            qn = kInfinity;
            order = Order::x_outer;
            break;
        }
        case EstimateTag::linfty_2055: {
            const double N = std::get<law::BandLimited>(e.law).N;
            profile = psi2;
            pn = qn = kInfinity;
            rhs *= std::pow(N, 0.25 - p.eps);
            break;
        }
        case EstimateTag::linfty_2057:
            profile = psi2;
            pn = 2.0 / (1.0 - 2.0 * p.eps);
            qn = kInfinity;
            order = Order::x_outer;
            rhs = hb * apply_multiplier(u0, multiplier::FractionalD{-0.25}).l2_norm();
            break;
        case EstimateTag::linfty_2060:
            data = apply_multiplier(apply_multiplier(u0, multiplier::HighPass{p.a}),
                                    multiplier::FractionalD{-0.5 - 4.0 * p.eps});
            pn = qn = kInfinity;
            break;
        default:
            throw ConfigurationError("tag " + to_string(tag) + " is not a linear estimate");
    }
    MixedNormAccumulator acc(g.size(), g.dx(), dt, pn, qn, order);
    stream_propagated(data, level, p.beta, p.gamma, profile, [&](int, std::span<const double> row) { acc.add_slice(row); });
    return {acc.result(), rhs};
}

// ---------------------------------------------------------------------------
// Bilinear operator I^s

/// || I^s(U(t) f1, U(t) f2) ||_{L2_{xt}} on [0, L) x [0, T) against ||f1|| ||f2||.
/// I^s has coefficients sum_{j1 + j2 = j} |phi'(xi_j1) - phi'(xi_j2)|^s c1_j1 c2_j2,
/// summed without wrap-around; zero modes are excluded.
inline EstimatePair bilinear_pair(const Field& f1, const Field& f2, const Level& level, double s, double beta, double gamma) {
    const Grid& g = f1.grid();
    if (f2.grid().size() != g.size() || f2.grid().length() != g.length()) throw LatticeMismatch("bilinear inputs on different grids");
    if (!f1.is_mean_zero() || !f2.is_mean_zero()) throw MeanZeroViolation(f1.is_mean_zero() ? f2.mean() : f1.mean());
    struct Mode {
        int j;
        cplx c;
        double phi;
        double dphi;
    };
    auto modes = [&](const Field& f) {
        std::vector<Mode> out;
        for (int k = 1; k < g.size(); ++k) {
            if (k == g.nyquist_slot() || f.coefficients()[k] == cplx(0.0)) continue;
            const double xi = g.wavenumber(k);
            out.push_back({g.mode(k), f.coefficients()[k], phase_value(beta, gamma, xi), phase_derivative(beta, gamma, xi)});
        }
        return out;
    };
    const auto m1 = modes(f1), m2 = modes(f2);
    int jmax = 0;
    for (const auto& m : m1) jmax = std::max(jmax, std::abs(m.j));
    int jmax2 = 0;
    for (const auto& m : m2) jmax2 = std::max(jmax2, std::abs(m.j));
    const int offset = jmax + jmax2;
    std::vector<double> w(m1.size() * m2.size());
    for (std::size_t p = 0; p < m1.size(); ++p)
        for (std::size_t q = 0; q < m2.size(); ++q)
            w[p * m2.size() + q] = std::pow(std::abs(m1[p].dphi - m2[q].dphi), s);
    const double dt = level.t_window / level.n_t;
    std::vector<cplx> a(m1.size()), bq(m2.size()), out(2 * offset + 1);
    double total = 0.0;
    for (int l = 0; l < level.n_t; ++l) {
        const double t = l * dt;
        for (std::size_t p = 0; p < m1.size(); ++p) a[p] = m1[p].c * ostrovsky::detail::unit_phase(-t, m1[p].phi);
        for (std::size_t q = 0; q < m2.size(); ++q) bq[q] = m2[q].c * ostrovsky::detail::unit_phase(-t, m2[q].phi);
        std::fill(out.begin(), out.end(), cplx(0.0));
        for (std::size_t p = 0; p < m1.size(); ++p) {
            const double* wr = &w[p * m2.size()];
            for (std::size_t q = 0; q < m2.size(); ++q) out[m1[p].j + m2[q].j + offset] += wr[q] * a[p] * bq[q];
        }
        double slice = 0.0;
        for (const auto& z : out) slice += std::norm(z);
        total += g.length() * slice * dt;
    }
    return {std::sqrt(total), f1.l2_norm() * f2.l2_norm()};
}

// ---------------------------------------------------------------------------
// Reports

struct DrawRatio {
    std::uint64_t draw = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
    bool skipped = false;
};

struct RatioLevel {
    std::string label;
    int n = 0;
    double length = 0.0;
    double t_window = 0.0;
    int n_t = 0;
    std::vector<DrawRatio> draws;
    double max_ratio = 0.0;
    int skipped = 0;
};

struct RatioReport {
    std::string tag;
    std::vector<RatioLevel> levels;
    /// Largest ratio on the base level.
    double max_ratio = 0.0;
    /// Largest over smallest per-level maximum.
    double refinement_factor = 1.0;
    /// Draws with RHS = 0 on the base level.
    int skipped = 0;
    /// Every grid doubling raised the maximum by more than 1.5x.
    bool monotone_growth = false;

    bool finite() const {
        for (const auto& lv : levels)
            for (const auto& d : lv.draws)
                if (!d.skipped && !(std::isfinite(d.ratio) && d.ratio >= 0.0)) return false;
        return true;
    }
    bool stable(double limit = 4.0) const { return finite() && refinement_factor <= limit; }
};

inline void summarize_level(RatioLevel& lv) {
    lv.max_ratio = 0.0;
    lv.skipped = 0;
    for (const auto& d : lv.draws) {
        if (d.skipped) {
            ++lv.skipped;
            continue;
        }
        lv.max_ratio = std::max(lv.max_ratio, d.ratio);
    }
}

inline void summarize_report(RatioReport& r) {
    double hi = 0.0, lo = std::numeric_limits<double>::infinity();
    for (auto& lv : r.levels) {
        summarize_level(lv);
        if (lv.skipped == static_cast<int>(lv.draws.size())) continue;
        hi = std::max(hi, lv.max_ratio);
        lo = std::min(lo, lv.max_ratio);
    }
    r.max_ratio = r.levels.empty() ? 0.0 : r.levels.front().max_ratio;
    r.skipped = r.levels.empty() ? 0 : r.levels.front().skipped;
    r.refinement_factor = lo > 0.0 && std::isfinite(lo) ? hi / lo : (hi == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
    std::vector<double> chain;
    for (const auto& lv : r.levels)
        if (lv.label == "base" || lv.label.rfind("grid", 0) == 0 || lv.label.rfind("lattice", 0) == 0) chain.push_back(lv.max_ratio);
    r.monotone_growth = chain.size() >= 2;
    for (std::size_t i = 1; i < chain.size(); ++i)
        if (!(chain[i] > 1.5 * chain[i - 1])) r.monotone_growth = false;
}

inline DrawRatio make_ratio(std::uint64_t draw, const EstimatePair& p) {
    DrawRatio d{draw, p.lhs, p.rhs, 0.0, p.rhs == 0.0};
    if (!d.skipped) d.ratio = p.lhs / p.rhs;
    return d;
}

inline void to_json(nlohmann::json& j, const RatioReport& r) {
    j = nlohmann::json{{"tag", r.tag},
                       {"max_ratio", r.max_ratio},
                       {"refinement_factor", r.refinement_factor},
                       {"skipped", r.skipped},
                       {"monotone_growth", r.monotone_growth},
                       {"levels", nlohmann::json::array()}};
    for (const auto& lv : r.levels)
        j["levels"].push_back({{"label", lv.label}, {"n", lv.n}, {"length", lv.length}, {"t_window", lv.t_window},
                               {"n_t", lv.n_t}, {"max_ratio", lv.max_ratio}, {"skipped", lv.skipped}});
}

// ---------------------------------------------------------------------------
// Ensemble probes

/// Runs every draw of the ensemble on every refinement level.
inline RatioReport linear_ensemble_report(EstimateTag tag, const Ensemble& e) {
    e.validate();
    const bool bilinear = tag == EstimateTag::bilinear_2027;
    if (!bilinear) check_support(tag, e.law, e.params);
    RatioReport report;
    report.tag = to_string(tag);
    for (const auto& level : refinement_levels(e, bilinear ? 2.0 : 1.0)) {
        RatioLevel lv{level.label, level.grid.size(), level.grid.length(), level.t_window, level.n_t, {}, 0.0, 0};
        lv.draws.resize(e.n_draws);
        const double hb = bilinear ? 0.0 : cutoff_xsb_factor(level, e.params.b, e.params.beta, e.params.gamma);
        parallel_for(static_cast<std::size_t>(e.n_draws), e.jobs, [&](std::size_t i) {
            const std::uint64_t key = draw_seed(e.seed, i);
            EstimatePair pair;
            if (bilinear) {
                const auto f1 = draw_field(e.law, level.grid, draw_seed(key, 0x5eed0001));
                const auto f2 = draw_field(e.law, level.grid, draw_seed(key, 0x5eed0002));
                pair = bilinear_pair(f1, f2, level, e.params.bilinear_s, e.params.beta, e.params.gamma);
            } else {
                pair = linear_pair(tag, draw_field(e.law, level.grid, key), level, e, hb);
            }
            lv.draws[i] = make_ratio(i, pair);
        });
        report.levels.push_back(std::move(lv));
    }
    summarize_report(report);
    return report;
}

/// Strichartz, smoothing and maximal estimates: which in {2.03, 2.05, 2.08, 2.09}.
inline RatioReport strichartz_ratio(const Ensemble& e, EstimateTag which) {
    if (which != EstimateTag::strichartz_203 && which != EstimateTag::smoothing_205 &&
        which != EstimateTag::smoothing_208 && which != EstimateTag::maximal_209)
        throw ConfigurationError("strichartz_ratio takes 2.03, 2.05, 2.08 or 2.09");
    return linear_ensemble_report(which, e);
}

/// Pointwise bounds: which in {2.055, 2.057, 2.060}. The 2.055 ratio is
/// normalized by N^{1/4 - eps}.
inline RatioReport linfty_bounds_ratio(const Ensemble& e, EstimateTag which) {
    if (which != EstimateTag::linfty_2055 && which != EstimateTag::linfty_2057 && which != EstimateTag::linfty_2060)
        throw ConfigurationError("linfty_bounds_ratio takes 2.055, 2.057 or 2.060");
    return linear_ensemble_report(which, e);
}

/// I^s smoothing with the weight exponent s in [0, 1/2].
inline RatioReport bilinear_ratio(Ensemble e, double s) {
    e.params.bilinear_s = s;
    return linear_ensemble_report(EstimateTag::bilinear_2027, e);
}

// ---------------------------------------------------------------------------
// Multilinear estimate on space-time lattices

/// Nonnegative samples on an n x n lattice, row-major [xi][tau].
struct Lattice {
    int n = 0;
    std::vector<double> values;

    double at(int i, int l) const { return values[static_cast<std::size_t>(i) * n + l]; }
    double& at(int i, int l) { return values[static_cast<std::size_t>(i) * n + l]; }

    /// Piecewise-constant refinement: every cell split into 2 x 2 with its value.
    Lattice refined() const {
        Lattice r{2 * n, std::vector<double>(static_cast<std::size_t>(4) * n * n)};
        for (int i = 0; i < r.n; ++i)
            for (int l = 0; l < r.n; ++l) r.at(i, l) = at(i / 2, l / 2);
        return r;
    }
};

inline constexpr int kMaxLatticeSide = 256;

struct MultilinearOptions {
    int k = 5;
    int n = 64;
    /// Input lattices cover |xi| < xi_box, |tau| < tau_box.
    double xi_box = 4.0;
    double tau_box = 80.0;
    /// Defaults to 1/2 - 2/k + 2 eps.
    std::optional<double> s;
    double b = 0.5 + 1.0 / 48.0;
    double eps = 1e-3;
    double beta = -1.0;
    double gamma = 1.0;
    int n_draws = 20;
    std::uint64_t seed = 1;
    int jobs = 1;

    double resolved_s() const { return s ? *s : 0.5 - 2.0 / k + 2.0 * eps; }

    void validate() const {
        if (k < 5) throw ConfigurationError("multilinear estimate needs k >= 5");
        if (n < 2 || n % 2 != 0) throw ConfigurationError("lattice side must be even and >= 2");
        if (n > kMaxLatticeSide) throw SizeError("lattice side above 256 per factor");
        if (!(xi_box > 0.0) || !(tau_box > 0.0)) throw ConfigurationError("lattice boxes must be positive");
        if (!(b > 0.5)) throw ConfigurationError("b must exceed 1/2");
        if (!(eps > 0.0 && eps <= 1e-3)) throw ConfigurationError("eps must lie in (0, 1e-3]");
        if (n_draws < 1) throw ConfigurationError("draw count must be positive");
    }
};

/// Input lattice point i of n: (i - (n - 1) / 2) * spacing, never zero.
inline double input_point(int i, int n, double spacing) { return (i - 0.5 * (n - 1)) * spacing; }

/// Output lattice: sums of k + 1 input indices S0 + m, m in [0, n), centred on zero.
inline int output_origin(int k, int n) { return k * (n - 1) / 2; }

inline double output_point(int m, int k, int n, double spacing) {
    return (output_origin(k, n) + m - 0.5 * (k + 1) * (n - 1)) * spacing;
}

/// LHS of the weighted (k+2)-linear form and the product of L2 norms.
/// factors[0] is the output function f, factors[1..k+1] the inputs f_j.
inline EstimatePair multilinear_pair(const std::vector<Lattice>& factors, const MultilinearOptions& opt) {
    if (opt.k < 1) throw ConfigurationError("multilinear estimate needs k >= 1");
    if (static_cast<int>(factors.size()) != opt.k + 2) throw ConfigurationError("multilinear form needs k + 2 factors");
    const int n = factors.front().n;
    if (n > kMaxLatticeSide) throw SizeError("lattice side above 256 per factor");
    for (const auto& f : factors) {
        if (f.n != n || f.values.size() != static_cast<std::size_t>(n) * n) throw LatticeMismatch("lattice sides differ");
        for (double v : f.values)
            if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("multilinear factors must be finite and nonnegative");
    }
    const int k = opt.k;
    const double s = opt.resolved_s();
    const double dxi = 2.0 * opt.xi_box / n;
    const double dtau = 2.0 * opt.tau_box / n;
    const double cell = dxi * dtau;
    auto phi = [&](double xi) { return xi == 0.0 ? 0.0 : phase_value(opt.beta, opt.gamma, xi); };

    const int P = next_pow2((k + 1) * (n - 1) + 1);
    const std::size_t PP = static_cast<std::size_t>(P) * P;
    std::vector<cplx> prod;
    for (int j = 1; j <= k + 1; ++j) {
        std::vector<cplx> buf(PP);
        for (int i = 0; i < n; ++i) {
            const double xi = input_point(i, n, dxi);
            const double wx = std::pow(bracket(xi), -s);
            for (int l = 0; l < n; ++l) {
                const double tau = input_point(l, n, dtau);
                buf[static_cast<std::size_t>(i) * P + l] = factors[j].at(i, l) * wx * std::pow(bracket(tau + phi(xi)), -opt.b);
            }
        }
        auto spec = fft::forward_2d(buf, P, P);
        if (prod.empty()) {
            prod = std::move(spec);
        } else {
            for (std::size_t q = 0; q < PP; ++q) prod[q] *= spec[q];
        }
    }
    const auto conv = fft::backward_2d(prod, P, P);
    const double inv = 1.0 / static_cast<double>(PP);
    const int S0 = output_origin(k, n);
    const double bout = 0.5 - opt.eps / 12.0;
    double lhs = 0.0;
    for (int m = 0; m < n; ++m) {
        const double xi = output_point(m, k, n, dxi);
        const double wx = std::abs(xi) * std::pow(bracket(xi), s);
        if (wx == 0.0) continue;
        for (int r = 0; r < n; ++r) {
            const double f = factors[0].at(m, r);
            if (f == 0.0) continue;
            const double tau = output_point(r, k, n, dtau);
            const double g = conv[static_cast<std::size_t>(S0 + m) * P + (S0 + r)].real() * inv;
            lhs += wx * std::pow(bracket(tau + phi(xi)), -bout) * f * g;
        }
    }
    lhs *= std::pow(cell, k + 1);
    double rhs = 1.0;
    for (const auto& f : factors) {
        double acc = 0.0;
        for (double v : f.values) acc += v * v;
        rhs *= std::sqrt(acc * cell);
    }
    return {lhs, rhs};
}

/// Uniform [0, 1) cell values keyed by (draw key, cell index).
inline Lattice draw_lattice(int n, std::uint64_t key) {
    Lattice f{n, std::vector<double>(static_cast<std::size_t>(n) * n)};
    for (std::size_t q = 0; q < f.values.size(); ++q) f.values[q] = detail::unit_uniform(draw_seed(key, q));
    return f;
}

/// Ratio ensemble on the base lattice and on its piecewise-constant refinement.
inline RatioReport multilinear_ratio(const MultilinearOptions& opt) {
    opt.validate();
    RatioReport report;
    report.tag = to_string(EstimateTag::multilinear_303);
    for (int level = 0; level < 2; ++level) {
        const int n = opt.n << level;
        if (n > kMaxLatticeSide) throw SizeError("refined lattice side above 256 per factor");
        RatioLevel lv{level == 0 ? "base" : "lattice x2", n, 2.0 * opt.xi_box, 2.0 * opt.tau_box, n, {}, 0.0, 0};
        lv.draws.resize(opt.n_draws);
        parallel_for(static_cast<std::size_t>(opt.n_draws), opt.jobs, [&](std::size_t i) {
            const std::uint64_t key = draw_seed(opt.seed, i);
            std::vector<Lattice> factors;
            for (int j = 0; j < opt.k + 2; ++j) {
                auto f = draw_lattice(opt.n, draw_seed(key, static_cast<std::uint64_t>(j)));
                factors.push_back(level == 0 ? std::move(f) : f.refined());
            }
            lv.draws[i] = make_ratio(i, multilinear_pair(factors, opt));
        });
        report.levels.push_back(std::move(lv));
    }
    summarize_report(report);
    return report;
}

// ---------------------------------------------------------------------------
// Defaults per tag

/// Geometry and law used when a probe is run without overrides. Laws tied to
/// the threshold follow params.a.
inline Ensemble default_ensemble(EstimateTag tag, const EstimateParams& params = {}) {
    Ensemble e;
    e.params = params;
    const double two_pi = 2.0 * std::numbers::pi;
    switch (tag) {
        case EstimateTag::strichartz_203:
            e.law = law::GaussianSpectrum{0.1, 0.0};
            e.n = 512;
            e.length = two_pi * 32.0;
            break;
        case EstimateTag::smoothing_205:
        case EstimateTag::smoothing_208:
        case EstimateTag::linfty_2060:
            e.law = law::GaussianSpectrum{0.1, e.params.a};
            e.n = 512;
            e.length = two_pi * 32.0;
            break;
        case EstimateTag::maximal_209:
            e.law = law::LowFrequency{0.5};
            e.n = 0;
            e.length = two_pi * 64.0;
            break;
        case EstimateTag::linfty_2057:
            e.law = law::LowFrequency{e.params.a};
            e.n = 0;
            e.length = two_pi * 64.0;
            break;
        case EstimateTag::linfty_2055:
            e.law = law::BandLimited{e.params.a};
            e.n = 0;
            e.length = two_pi * 8.0;
            break;
        case EstimateTag::bilinear_2027:
            e.law = law::BandLimited{1.0};
            e.n = 0;
            e.length = two_pi * 16.0;
            break;
        case EstimateTag::multilinear_303:
            throw ConfigurationError("3.03 uses MultilinearOptions");
    }
    return e;
}

}  // namespace ostrovsky
