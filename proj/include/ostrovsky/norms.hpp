#pragma once

// Sobolev, X_s, mixed Lebesgue and Bourgain-space norms on the periodic lattice.
// Continuum integrals become Riemann sums with cell measures dx and dt; spectral
// sums carry the factor L (and T for space-time tables) so that Parseval holds.

#include "ostrovsky/errors.hpp"
#include "ostrovsky/fft.hpp"
#include "ostrovsky/spectral.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace ostrovsky {

inline double bracket(double v) { return 1.0 + std::abs(v); }

// ---------------------------------------------------------------------------
// Smooth time cutoff psi: 1 on |t| <= 1, 0 on |t| >= 2, C^2 in between.

/// Transition profile on [0, 1]: s - sin(2 pi s) / (2 pi). Its first and second
/// derivatives vanish at both ends.
inline double cutoff_transition(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return s - std::sin(2.0 * std::numbers::pi * s) / (2.0 * std::numbers::pi);
}

inline double time_cutoff(double t) {
    const double a = std::abs(t);
    if (a <= 1.0) return 1.0;
    if (a >= 2.0) return 0.0;
    return 1.0 - cutoff_transition(a - 1.0);
}

/// psi_delta(t) = psi(t / delta).
inline double time_cutoff(double t, double delta) { return time_cutoff(t / delta); }

// ---------------------------------------------------------------------------
// One-dimensional norms

/// (L sum_j <xi_j>^{2s} |c_j|^2)^{1/2}
inline double h_s_norm(const Field& f, double s) {
    const Grid& g = f.grid();
    double acc = 0.0;
    for (int k = 0; k < g.size(); ++k) acc += std::pow(bracket(g.wavenumber(k)), 2.0 * s) * std::norm(f.coefficients()[k]);
    return std::sqrt(g.length() * acc);
}

/// Coefficients c_j / xi_j (zero mode dropped), the spectral side of F^{-1}(F f / xi).
inline Field divide_by_wavenumber(const Field& f) {
    const Grid& g = f.grid();
    std::vector<cplx> out(g.size());
    for (int k = 1; k < g.size(); ++k) out[k] = f.coefficients()[k] / g.wavenumber(k);
    return Field(g, std::move(out));
}

/// ||f||_{H^s} + ||F^{-1}(F f / xi)||_{H^s}; needs a mean-zero field.
inline double x_s_norm(const Field& f, double s) {
    if (!f.is_mean_zero()) throw MeanZeroViolation(f.mean());
    return h_s_norm(f, s) + h_s_norm(divide_by_wavenumber(f), s);
}

// ---------------------------------------------------------------------------
// Space-time fields

/// Real samples u(x_m, t_l) on [0, L) x [0, T_win), stored time-major.
class SpaceTimeField {
public:
    SpaceTimeField(Grid grid, double t_window, int n_t, std::vector<double> values)
        : grid_(grid), t_window_(t_window), n_t_(n_t), values_(std::move(values)) {
        if (n_t < 2 || n_t % 2 != 0) throw ConfigurationError("time sample count must be even and >= 2");
        if (!(t_window > 0.0)) throw ConfigurationError("time window must be positive");
        if (values_.size() != static_cast<std::size_t>(n_t) * grid_.size())
            throw ConfigurationError("space-time value count mismatch");
    }

    /// u(x, t) = profile(t) * (U(t) u0)(x) with U the free propagator.
    static SpaceTimeField propagated(const Field& u0, double beta, double gamma, double t_window, int n_t,
                                     const std::function<double(double)>& profile) {
        const Grid& g = u0.grid();
        const PhaseSymbol phi(beta, gamma, g);
        std::vector<double> values(static_cast<std::size_t>(n_t) * g.size());
        std::vector<cplx> c(g.size());
        for (int l = 0; l < n_t; ++l) {
            const double t = l * t_window / n_t;
            const double w = profile ? profile(t) : 1.0;
            for (int k = 0; k < g.size(); ++k)
                c[k] = k == g.nyquist_slot() ? cplx(0.0) : w * u0.coefficients()[k] * detail::unit_phase(-t, phi.values()[k]);
            const auto row = inverse_transform(g, c);
            std::copy(row.begin(), row.end(), values.begin() + static_cast<std::ptrdiff_t>(l) * g.size());
        }
        return SpaceTimeField(g, t_window, n_t, std::move(values));
    }

    const Grid& grid() const noexcept { return grid_; }
    double t_window() const noexcept { return t_window_; }
    int n_t() const noexcept { return n_t_; }
    double dt() const noexcept { return t_window_ / n_t_; }
    double time(int l) const noexcept { return l * dt(); }
    std::span<const double> values() const noexcept { return values_; }
    double at(int l, int m) const { return values_[static_cast<std::size_t>(l) * grid_.size() + m]; }
    std::span<const double> slice(int l) const {
        return std::span<const double>(values_).subspan(static_cast<std::size_t>(l) * grid_.size(), grid_.size());
    }

    /// Temporal frequency housed in time slot `slot` (2 pi l / T_win, same slot layout as space).
    double temporal_frequency(int slot) const noexcept {
        const int l = slot <= n_t_ / 2 ? slot : slot - n_t_;
        return 2.0 * std::numbers::pi * l / t_window_;
    }

    /// F u(xi_j, tau_l) = (1 / (n n_t)) sum u exp(-i xi x - i tau t), layout [time slot][space slot].
    std::vector<cplx> spectral_table() const {
        std::vector<cplx> buf(values_.begin(), values_.end());
        auto out = fft::forward_2d(buf, n_t_, grid_.size());
        const double inv = 1.0 / (static_cast<double>(n_t_) * grid_.size());
        for (auto& z : out) z *= inv;
        return out;
    }

    /// Per-slice spatial coefficients c_j(t_l), layout [time][space slot].
    std::vector<cplx> spatial_coefficients() const {
        const int n = grid_.size();
        std::vector<cplx> out(values_.size());
        for (int l = 0; l < n_t_; ++l) {
            const auto c = forward_transform(grid_, slice(l));
            std::copy(c.begin(), c.end(), out.begin() + static_cast<std::ptrdiff_t>(l) * n);
        }
        return out;
    }

    /// Apply a spatial multiplier to every time slice.
    SpaceTimeField map_slices(const std::function<Field(const Field&)>& op) const {
        std::vector<double> out(values_.size());
        for (int l = 0; l < n_t_; ++l) {
            const auto r = op(Field::from_samples(grid_, slice(l))).samples();
            std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(l) * grid_.size());
        }
        return SpaceTimeField(grid_, t_window_, n_t_, std::move(out));
    }

private:
    Grid grid_;
    double t_window_;
    int n_t_;
    std::vector<double> values_;
};

/// <sigma>_{jl} = 1 + |tau_l + phi(xi_j)|, layout [time slot][space slot].
struct ModulationWeight {
    int n = 0;
    int n_t = 0;
    std::vector<double> values;

    static ModulationWeight build(const SpaceTimeField& stf, const PhaseSymbol& phi) {
        ModulationWeight w{stf.grid().size(), stf.n_t(), {}};
        w.values.resize(static_cast<std::size_t>(w.n) * w.n_t);
        for (int l = 0; l < w.n_t; ++l)
            for (int k = 0; k < w.n; ++k)
                w.values[static_cast<std::size_t>(l) * w.n + k] = bracket(stf.temporal_frequency(l) + phi.values()[k]);
        return w;
    }
};

enum class Order { x_outer, t_outer };

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

namespace detail {

/// |v|^p, by repeated squaring for even integer p up to 8.
inline double abs_power(double v, double p) {
    if (p == 2.0) return v * v;
    if (p == 4.0) return (v * v) * (v * v);
    if (p == 6.0) return (v * v) * (v * v) * (v * v);
    if (p == 8.0) {
        const double q = (v * v) * (v * v);
        return q * q;
    }
    return std::pow(std::abs(v), p);
}

inline double accumulate_power(double acc, double v, double p) {
    return std::isinf(p) ? std::max(acc, std::abs(v)) : acc + abs_power(v, p);
}

inline double finish_power(double acc, double p, double measure) {
    return std::isinf(p) ? acc : std::pow(acc * measure, 1.0 / p);
}

}  // namespace detail

/// ||f||_{L^p_outer L^q_inner}: `p` is the exponent of the outer variable
/// (x for Order::x_outer, t for Order::t_outer) and `q` of the inner one.
inline double mixed_norm(const SpaceTimeField& stf, double p, double q, Order order) {
    if (!(p >= 1.0) || !(q >= 1.0)) throw DomainError("mixed norm exponents must be >= 1");
    const int n = stf.grid().size();
    const int nt = stf.n_t();
    const double dx = stf.grid().dx();
    const double dt = stf.dt();
    const bool x_out = order == Order::x_outer;
    const int n_outer = x_out ? n : nt;
    const int n_inner = x_out ? nt : n;
    const double d_outer = x_out ? dx : dt;
    const double d_inner = x_out ? dt : dx;
    double outer = 0.0;
    for (int o = 0; o < n_outer; ++o) {
        double inner = 0.0;
        for (int i = 0; i < n_inner; ++i) {
            const double v = x_out ? stf.at(i, o) : stf.at(o, i);
            inner = detail::accumulate_power(inner, v, q);
        }
        outer = detail::accumulate_power(outer, detail::finish_power(inner, q, d_inner), p);
    }
    return detail::finish_power(outer, p, d_outer);
}

/// (L T sum <xi>^{2s} <sigma>^{2b} |F u|^2)^{1/2} on the lattice tau_l = 2 pi l / T.
/// Meaningful when the time lattice resolves every phi(xi_j) carried by the field.
inline double xsb_norm(const SpaceTimeField& stf, double s, double b, const PhaseSymbol& phi) {
    const Grid& g = stf.grid();
    const auto table = stf.spectral_table();
    const auto weight = ModulationWeight::build(stf, phi);
    double acc = 0.0;
    for (int l = 0; l < stf.n_t(); ++l)
        for (int k = 0; k < g.size(); ++k) {
            const std::size_t i = static_cast<std::size_t>(l) * g.size() + k;
            acc += std::pow(bracket(g.wavenumber(k)), 2.0 * s) * std::pow(weight.values[i], 2.0 * b) * std::norm(table[i]);
        }
    return std::sqrt(g.length() * stf.t_window() * acc);
}

/// X_{s,b} norm evaluated in the modulation frame: each spatial mode is
/// demodulated by exp(+i t phi_j) before the temporal transform, so the lattice
/// frequency is sigma itself. Agrees with xsb_norm when the time lattice resolves
/// the field, and stays well conditioned when it does not.
inline double xsb_norm_modulated(const SpaceTimeField& stf, double s, double b, const PhaseSymbol& phi) {
    const Grid& g = stf.grid();
    const int n = g.size();
    const int nt = stf.n_t();
    const auto coeffs = stf.spatial_coefficients();
    double acc = 0.0;
    std::vector<cplx> series(nt);
    for (int k = 0; k < n; ++k) {
        for (int l = 0; l < nt; ++l)
            series[l] = coeffs[static_cast<std::size_t>(l) * n + k] * detail::unit_phase(stf.time(l), phi.values()[k]);
        const auto spec = fft::forward(series);
        const double wx = std::pow(bracket(g.wavenumber(k)), 2.0 * s);
        for (int l = 0; l < nt; ++l)
            acc += wx * std::pow(bracket(stf.temporal_frequency(l)), 2.0 * b) * std::norm(spec[l] / static_cast<double>(nt));
    }
    return std::sqrt(g.length() * stf.t_window() * acc);
}

/// ||u||_{X_{s,b}} + ||d_x^{-1} u||_{X_{s,b}}; every time slice must be mean-zero.
inline double xsb_tilde_norm(const SpaceTimeField& stf, double s, double b, const PhaseSymbol& phi) {
    const auto anti = stf.map_slices([](const Field& f) { return apply_multiplier(f, multiplier::Derivative{-1}); });
    return xsb_norm(stf, s, b, phi) + xsb_norm(anti, s, b, phi);
}

/// ||psi||_{H^b_t}^2 = (1/2pi) int <lambda>^{2b} |psi^(lambda)|^2 dlambda, by a fine periodic DFT.
inline double cutoff_hb_norm(double b, int n_samples = 1 << 14, double window = 16.0) {
    std::vector<cplx> buf(n_samples);
    for (int l = 0; l < n_samples; ++l) buf[l] = time_cutoff(l * window / n_samples - window / 2);
    const auto spec = fft::forward(buf);
    double acc = 0.0;
    for (int l = 0; l < n_samples; ++l) {
        const int m = l <= n_samples / 2 ? l : l - n_samples;
        const double lam = 2.0 * std::numbers::pi * m / window;
        acc += std::pow(bracket(lam), 2.0 * b) * std::norm(spec[l] / static_cast<double>(n_samples));
    }
    return std::sqrt(window * acc);
}

// ---------------------------------------------------------------------------
// Serialized norm report

struct NormRecord {
    std::string norm;
    double s = 0.0;
    double b = 0.0;
    double value = 0.0;
};

inline void to_json(nlohmann::json& j, const NormRecord& r) {
    j = nlohmann::json{{"norm", r.norm}, {"s", r.s}, {"b", r.b}, {"value", r.value}};
}

inline void from_json(const nlohmann::json& j, NormRecord& r) {
    j.at("norm").get_to(r.norm);
    j.at("s").get_to(r.s);
    j.at("b").get_to(r.b);
    j.at("value").get_to(r.value);
}

}  // namespace ostrovsky
