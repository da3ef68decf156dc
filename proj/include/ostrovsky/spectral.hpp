#pragma once

// Periodic spectral representation of a real field on [0, L) and the Fourier
// multipliers of the generalized Ostrovsky equation.
//
// Coefficient convention: c_j = (1/n) sum_m u(x_m) exp(-i xi_j x_m), so that
// sum_m |u(x_m)|^2 dx = L sum_j |c_j|^2. Coefficients are stored in FFT slot
// order (slot s holds mode j = s for s <= n/2 and j = s - n otherwise).

#include "ostrovsky/errors.hpp"
#include "ostrovsky/fft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace ostrovsky {

using cplx = std::complex<double>;

/// Tolerance (relative to the rms coefficient) below which a zero mode counts as zero.
inline constexpr double kMeanZeroTolerance = 1e-12;

class Grid {
public:
    Grid(int n_points, double length) : n_(n_points), length_(length) {
        if (n_points < 8 || n_points % 2 != 0)
            throw ConfigurationError("grid size must be even and >= 8, got " + std::to_string(n_points));
        if (!(length > 0.0) || !std::isfinite(length))
            throw ConfigurationError("grid length must be positive and finite");
    }

    int size() const noexcept { return n_; }
    double length() const noexcept { return length_; }
    double dx() const noexcept { return length_ / n_; }
    int nyquist_slot() const noexcept { return n_ / 2; }

    /// Signed mode number housed in FFT slot `slot`.
    int mode(int slot) const noexcept { return slot <= n_ / 2 ? slot : slot - n_; }
    /// FFT slot housing mode j, for -n/2 < j <= n/2.
    int slot(int j) const noexcept { return j >= 0 ? j : j + n_; }

    double wavenumber(int slot) const noexcept {
        return 2.0 * std::numbers::pi * mode(slot) / length_;
    }

    double point(int m) const noexcept { return m * dx(); }

    std::vector<double> points() const {
        std::vector<double> x(n_);
        for (int m = 0; m < n_; ++m) x[m] = point(m);
        return x;
    }

    /// Largest |xi| represented on the grid.
    double max_wavenumber() const noexcept { return std::numbers::pi * n_ / length_; }

    bool operator==(const Grid&) const = default;

private:
    int n_;
    double length_;
};

/// c_j from real samples.
inline std::vector<cplx> forward_transform(const Grid& grid, std::span<const double> samples) {
    const int n = grid.size();
    if (static_cast<int>(samples.size()) != n)
        throw ConfigurationError("sample count does not match grid size");
    std::vector<cplx> buf(samples.begin(), samples.end());
    auto out = fft::forward(buf);
    const double inv_n = 1.0 / n;
    for (auto& c : out) c *= inv_n;
    // exact realness of the self-conjugate modes
    out[0] = out[0].real();
    out[grid.nyquist_slot()] = out[grid.nyquist_slot()].real();
    return out;
}

/// Real samples from c_j; the imaginary residue of a conjugate-symmetric table is dropped.
inline std::vector<double> inverse_transform(const Grid& grid, std::span<const cplx> coeffs) {
    if (static_cast<int>(coeffs.size()) != grid.size())
        throw ConfigurationError("coefficient count does not match grid size");
    const auto out = fft::backward(coeffs);
    std::vector<double> samples(out.size());
    std::transform(out.begin(), out.end(), samples.begin(), [](const cplx& z) { return z.real(); });
    return samples;
}

/// A real field held by its spectral coefficients.
class Field {
public:
    Field(Grid grid, std::vector<cplx> coeffs) : grid_(grid), coeffs_(std::move(coeffs)) {
        if (static_cast<int>(coeffs_.size()) != grid_.size())
            throw ConfigurationError("coefficient count does not match grid size");
    }

    static Field zero(const Grid& grid) { return Field(grid, std::vector<cplx>(grid.size())); }

    static Field from_samples(const Grid& grid, std::span<const double> samples) {
        return Field(grid, forward_transform(grid, samples));
    }

    template <class F>
        requires std::is_invocable_r_v<double, F, double>
    static Field from_function(const Grid& grid, F&& f) {
        std::vector<double> u(grid.size());
        for (int m = 0; m < grid.size(); ++m) u[m] = f(grid.point(m));
        return from_samples(grid, u);
    }

    const Grid& grid() const noexcept { return grid_; }
    std::span<const cplx> coefficients() const noexcept { return coeffs_; }
    std::vector<cplx>& mutable_coefficients() noexcept { return coeffs_; }
    cplx coefficient(int mode) const { return coeffs_[grid_.slot(mode)]; }

    std::vector<double> samples() const { return inverse_transform(grid_, coeffs_); }

    double mean() const noexcept { return coeffs_[0].real(); }

    /// sqrt(sum_j |c_j|^2), i.e. the L2 norm divided by sqrt(L).
    double rms() const noexcept {
        double acc = 0.0;
        for (const auto& c : coeffs_) acc += std::norm(c);
        return std::sqrt(acc);
    }

    double l2_norm() const noexcept { return std::sqrt(grid_.length()) * rms(); }

    bool is_mean_zero() const noexcept {
        return std::abs(coeffs_[0]) <= kMeanZeroTolerance * rms();
    }

    Field& operator+=(const Field& other) {
        for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
        return *this;
    }
    Field& operator-=(const Field& other) {
        for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
        return *this;
    }
    Field& operator*=(double a) {
        for (auto& c : coeffs_) c *= a;
        return *this;
    }
    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(double a, Field f) { return f *= a; }

private:
    Grid grid_;
    std::vector<cplx> coeffs_;
};

// ---------------------------------------------------------------------------
// Dispersion relation

/// phi(xi) = beta xi^3 + gamma / xi.
inline double phase_value(double beta, double gamma, double xi) {
    if (xi == 0.0) throw DomainError("phase function is singular at xi = 0");
    return beta * xi * xi * xi + gamma / xi;
}

/// phi'(xi) = 3 beta xi^2 - gamma / xi^2.
inline double phase_derivative(double beta, double gamma, double xi) {
    if (xi == 0.0) throw DomainError("phase derivative is singular at xi = 0");
    return 3.0 * beta * xi * xi - gamma / (xi * xi);
}

/// The dispersion symbol tabulated on a grid. phi_0 := 0; the Nyquist slot uses +xi_{n/2}.
class PhaseSymbol {
public:
    PhaseSymbol(double beta, double gamma, const Grid& grid) : beta_(beta), gamma_(gamma), values_(grid.size()) {
        for (int s = 0; s < grid.size(); ++s) {
            const double xi = grid.wavenumber(s);
            if (s == 0) {
                values_[s] = 0.0;
            } else if (gamma == 0.0) {
                values_[s] = beta * xi * xi * xi;
            } else {
                values_[s] = phase_value(beta, gamma, xi);
            }
        }
    }

    double beta() const noexcept { return beta_; }
    double gamma() const noexcept { return gamma_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator()(double xi) const { return phase_value(beta_, gamma_, xi); }

private:
    double beta_;
    double gamma_;
    std::vector<double> values_;
};

/// The frequency threshold a = 2^[A], with [A] the largest integer strictly below
/// A = max{1, |6g/7b|^(1/4), |g/3b|^(1/2), |g/b|, 100|b|, 100|g|}.
inline double default_frequency_threshold(double beta, double gamma) {
    if (beta == 0.0) throw DomainError("frequency threshold needs beta != 0");
    const double A = std::max({1.0, std::pow(std::abs(6.0 * gamma / (7.0 * beta)), 0.25),
                               std::sqrt(std::abs(gamma / (3.0 * beta))), std::abs(gamma / beta),
                               100.0 * std::abs(beta), 100.0 * std::abs(gamma)});
    const double floor_below = std::ceil(A) - 1.0;
    return std::ldexp(1.0, static_cast<int>(floor_below));
}

// ---------------------------------------------------------------------------
// Multipliers

namespace multiplier {
/// (i xi)^order; negative orders need mean-zero input.
struct Derivative {
    int order;
};
/// |xi|^alpha (zero at xi = 0 unless alpha == 0).
struct FractionalD {
    double alpha;
};
/// <xi>^alpha with <xi> = 1 + |xi|.
struct FractionalJ {
    double alpha;
};
/// P_N: keeps |xi| < N.
struct LowPass {
    double cutoff;
};
/// P^N: keeps |xi| >= N.
struct HighPass {
    double cutoff;
};
/// U(t) = exp(-i t phi(xi)).
struct Propagator {
    double t;
    double beta;
    double gamma;
};
}  // namespace multiplier

using MultiplierSpec = std::variant<multiplier::Derivative, multiplier::FractionalD, multiplier::FractionalJ,
                                    multiplier::LowPass, multiplier::HighPass, multiplier::Propagator>;

namespace detail {

inline cplx ipow(cplx z, int m) {
    cplx r = 1.0;
    for (int i = 0; i < m; ++i) r *= z;
    return r;
}

/// exp(i t phi) with the product t phi formed and reduced mod 2 pi in extended
/// precision, so that U(t1) U(t2) and U(t1 + t2) agree to working precision.
inline cplx unit_phase(double t, double phi) {
    constexpr long double two_pi = 6.283185307179586476925286766559L;
    const long double a = std::fmod(static_cast<long double>(t) * static_cast<long double>(phi), two_pi);
    return std::polar(1.0, static_cast<double>(a));
}

/// Symbol value at FFT slot `slot`. Odd-symmetric symbols vanish on the Nyquist slot.
inline cplx symbol_at(const MultiplierSpec& spec, const Grid& grid, int slot) {
    const double xi = grid.wavenumber(slot);
    const bool nyquist = slot == grid.nyquist_slot();
    return std::visit(
        [&](const auto& m) -> cplx {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, multiplier::Derivative>) {
                if (m.order == 0) return 1.0;
                if (slot == 0) return 0.0;
                if (nyquist && (m.order % 2 != 0)) return 0.0;
                const cplx ixi(0.0, xi);
                return m.order > 0 ? ipow(ixi, m.order) : 1.0 / ipow(ixi, -m.order);
            } else if constexpr (std::is_same_v<T, multiplier::FractionalD>) {
                if (xi == 0.0) return m.alpha == 0.0 ? 1.0 : 0.0;
                return std::pow(std::abs(xi), m.alpha);
            } else if constexpr (std::is_same_v<T, multiplier::FractionalJ>) {
                return std::pow(1.0 + std::abs(xi), m.alpha);
            } else if constexpr (std::is_same_v<T, multiplier::LowPass>) {
                return std::abs(xi) < m.cutoff ? 1.0 : 0.0;
            } else if constexpr (std::is_same_v<T, multiplier::HighPass>) {
                return std::abs(xi) >= m.cutoff ? 1.0 : 0.0;
            } else {
                if (slot == 0) return 1.0;
                if (nyquist) return 0.0;
                const double phi = m.gamma == 0.0 ? m.beta * xi * xi * xi : phase_value(m.beta, m.gamma, xi);
                return unit_phase(-m.t, phi);
            }
        },
        spec);
}

inline bool needs_mean_zero(const MultiplierSpec& spec) {
    if (const auto* d = std::get_if<multiplier::Derivative>(&spec)) return d->order < 0;
    return false;
}

}  // namespace detail

inline Field apply_multiplier(const Field& field, const MultiplierSpec& spec) {
    if (detail::needs_mean_zero(spec) && !field.is_mean_zero()) throw MeanZeroViolation(field.mean());
    const Grid& g = field.grid();
    std::vector<cplx> out(field.coefficients().begin(), field.coefficients().end());
    for (int s = 0; s < g.size(); ++s) out[s] *= detail::symbol_at(spec, g, s);
    return Field(g, std::move(out));
}

inline Field project_zero_mean(const Field& field) {
    std::vector<cplx> out(field.coefficients().begin(), field.coefficients().end());
    out[0] = 0.0;
    return Field(field.grid(), std::move(out));
}

/// Highest retained |j| for a degree-p product: floor(2 (n/2) / (p + 1)).
inline int dealias_cutoff(int n_points, int product_degree) {
    if (product_degree < 2) throw DomainError("dealias product degree must be >= 2");
    return (2 * (n_points / 2)) / (product_degree + 1);
}

inline void dealias_in_place(std::span<cplx> coeffs, const Grid& grid, int product_degree) {
    const int cutoff = dealias_cutoff(grid.size(), product_degree);
    for (int s = 0; s < grid.size(); ++s)
        if (std::abs(grid.mode(s)) > cutoff) coeffs[s] = 0.0;
}

inline Field dealias(const Field& field, int product_degree) {
    std::vector<cplx> out(field.coefficients().begin(), field.coefficients().end());
    dealias_in_place(out, field.grid(), product_degree);
    return Field(field.grid(), std::move(out));
}

/// Shift a field by `shift` in x: u(x) -> u(x - shift). Nyquist content is dropped.
inline Field translate(const Field& field, double shift) {
    const Grid& g = field.grid();
    std::vector<cplx> out(field.coefficients().begin(), field.coefficients().end());
    for (int s = 1; s < g.size(); ++s)
        out[s] = s == g.nyquist_slot() ? cplx(0.0) : out[s] * detail::unit_phase(-shift, g.wavenumber(s));
    return Field(g, std::move(out));
}

}  // namespace ostrovsky
