#pragma once

// Time evolution of
//     u_t - beta u_xxx - gamma d_x^{-1} u + (u^{k+1})_x / (k+1) = 0
// on the periodic grid. The linear part is advanced exactly through the factor
// exp(-i phi dt); the nonlinear part by integrating-factor RK4 (or Strang
// splitting). The Duhamel-Picard iteration gives an independent short-time solution.

#include "ostrovsky/errors.hpp"
#include "ostrovsky/fft.hpp"
#include "ostrovsky/norms.hpp"
#include "ostrovsky/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ostrovsky {

enum class Integrator { ifrk4, split_step };

inline std::string to_string(Integrator i) { return i == Integrator::ifrk4 ? "ifrk4" : "split_step"; }

inline Integrator integrator_from_string(const std::string& s) {
    if (s == "ifrk4") return Integrator::ifrk4;
    if (s == "split_step") return Integrator::split_step;
    throw ConfigurationError("unknown integrator '" + s + "' (expected ifrk4 or split_step)");
}

struct SolverConfig {
    double beta = -1.0;
    double gamma = 1.0;
    int k = 5;
    double dt = 1e-3;
    double t_end = 1.0;
    Grid grid{256, 40.0};
    Integrator integrator = Integrator::ifrk4;
    double cfl_safety = 0.5;
    /// Switch for the (u^{k+1})_x term; off gives the free propagator.
    bool nonlinear = true;

    /// The well-posedness theory covers k >= 5; smaller k still runs.
    bool in_wellposed_range() const noexcept { return k >= 5; }

    /// Checks the parameter invariants; with `u0` also the step-size bound
    /// dt <= cfl_safety * dx / max(1, max|u0|)^k (nonlinear runs only: the
    /// linear part is exact for any dt).
    void validate(const Field* u0 = nullptr) const {
        if (!(beta < 0.0)) throw ConfigurationError("beta must be negative");
        if (!(gamma >= 0.0)) throw ConfigurationError("gamma must be non-negative");
        if (k < 1) throw ConfigurationError("k must be >= 1");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigurationError("dt must be positive");
        if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigurationError("t_end must be positive");
        if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw ConfigurationError("cfl_safety must lie in (0, 1]");
        if (u0 != nullptr) {
            if (!(u0->grid() == grid)) throw ConfigurationError("initial data lives on a different grid");
            if (!nonlinear) return;
            const auto s = u0->samples();
            double umax = 0.0;
            for (double v : s) umax = std::max(umax, std::abs(v));
            const double bound = cfl_safety * grid.dx() / std::pow(std::max(1.0, umax), k);
            if (dt > bound)
                throw ConfigurationError("dt = " + std::to_string(dt) + " exceeds the step bound " + std::to_string(bound));
        }
    }

    std::int64_t step_count() const {
        const double ratio = t_end / dt;
        const auto steps = static_cast<std::int64_t>(std::llround(ratio));
        if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio))
            throw ConfigurationError("t_end must be an integer multiple of dt");
        return steps;
    }
};

// ---------------------------------------------------------------------------
// Nonlinear term

/// -(1/(k+1)) d_x P[u^{k+1}] on coefficient arrays, P the sharp dealias at degree k+1.
class NonlinearTerm {
public:
    NonlinearTerm(const Grid& grid, int k) : grid_(grid), k_(k), derivative_(grid.size()) {
        if (k < 1) throw ConfigurationError("k must be >= 1");
        const int cutoff = dealias_cutoff(grid.size(), k + 1);
        const double scale = -1.0 / (k + 1);
        for (int s = 0; s < grid.size(); ++s) {
            const bool keep = s != 0 && s != grid.nyquist_slot() && std::abs(grid.mode(s)) <= cutoff;
            derivative_[s] = keep ? cplx(0.0, scale * grid.wavenumber(s)) : cplx(0.0);
        }
    }

    void operator()(std::span<const cplx> u, std::span<cplx> out) const {
        const int n = grid_.size();
        auto phys = fft::backward(u);
        for (auto& z : phys) {
            const double v = z.real();
            double p = v;
            for (int i = 0; i < k_; ++i) p *= v;
            if (!std::isfinite(p)) throw NonfiniteValue("nonfinite value in the pointwise power u^(k+1)");
            z = p;
        }
        const auto spec = fft::forward(phys);
        const double inv_n = 1.0 / n;
        for (int s = 0; s < n; ++s) out[s] = derivative_[s] * spec[s] * inv_n;
    }

    int k() const noexcept { return k_; }

private:
    Grid grid_;
    int k_;
    std::vector<cplx> derivative_;
};

/// -(1/(k+1)) (u^{k+1})_x, dealiased and mean-zero.
inline Field nonlinear_term(const Field& u, int k) {
    if (!u.is_mean_zero()) throw MeanZeroViolation(u.mean());
    const NonlinearTerm term(u.grid(), k);
    std::vector<cplx> out(u.grid().size());
    term(u.coefficients(), out);
    return Field(u.grid(), std::move(out));
}

// ---------------------------------------------------------------------------
// Conserved quantities

/// H[u] = int [ -(beta/2) u_x^2 - (gamma/2) (d_x^{-1} u)^2 - u^{k+2} / ((k+1)(k+2)) ] dx.
/// With gamma = 0 the antiderivative is not evaluated.
inline double hamiltonian(const Field& u, double beta, double gamma, int k) {
    const Grid& g = u.grid();
    double grad = 0.0;
    double anti = 0.0;
    for (int s = 1; s < g.size(); ++s) {
        if (s == g.nyquist_slot()) continue;
        const double xi = g.wavenumber(s);
        const double c2 = std::norm(u.coefficients()[s]);
        grad += xi * xi * c2;
        if (gamma != 0.0) anti += c2 / (xi * xi);
    }
    grad *= g.length();
    anti *= g.length();
    double potential = 0.0;
    for (double v : u.samples()) potential += std::pow(v, k + 2);
    potential *= g.dx();
    return -0.5 * beta * grad - 0.5 * gamma * anti - potential / ((k + 1.0) * (k + 2.0));
}

// ---------------------------------------------------------------------------
// Stepping

/// Precomputed propagator factors plus scratch space for one configuration.
class Stepper {
public:
    explicit Stepper(const SolverConfig& cfg)
        : cfg_(cfg), nonlinear_(cfg.grid, cfg.k), half_(cfg.grid.size()), full_(cfg.grid.size()) {
        const PhaseSymbol phi(cfg.beta, cfg.gamma, cfg.grid);
        for (int s = 0; s < cfg.grid.size(); ++s) {
            if (s == cfg.grid.nyquist_slot()) {
                half_[s] = full_[s] = 0.0;
                continue;
            }
            half_[s] = detail::unit_phase(-0.5 * cfg.dt, phi.values()[s]);
            full_[s] = detail::unit_phase(-cfg.dt, phi.values()[s]);
        }
        const std::size_t n = cfg.grid.size();
        for (auto* v : {&k1_, &k2_, &k3_, &k4_, &tmp_}) v->resize(n);
    }

    void advance(std::vector<cplx>& u) {
        if (!cfg_.nonlinear) {
            for (std::size_t i = 0; i < u.size(); ++i) u[i] *= full_[i];
            return;
        }
        if (cfg_.integrator == Integrator::ifrk4)
            advance_ifrk4(u);
        else
            advance_split(u);
    }

private:
    void rhs(std::span<const cplx> u, std::vector<cplx>& out) {
        nonlinear_(u, out);
        for (auto& z : out) z *= cfg_.dt;
    }

    // Lawson's integrating-factor RK4.
    void advance_ifrk4(std::vector<cplx>& u) {
        const std::size_t n = u.size();
        rhs(u, k1_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = half_[i] * (u[i] + 0.5 * k1_[i]);
        rhs(tmp_, k2_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = half_[i] * u[i] + 0.5 * k2_[i];
        rhs(tmp_, k3_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = full_[i] * u[i] + half_[i] * k3_[i];
        rhs(tmp_, k4_);
        for (std::size_t i = 0; i < n; ++i)
            u[i] = full_[i] * u[i] + (full_[i] * k1_[i] + 2.0 * half_[i] * (k2_[i] + k3_[i]) + k4_[i]) / 6.0;
    }

    // Strang splitting: exact half linear step, RK4 on the nonlinear flow, half linear step.
    void advance_split(std::vector<cplx>& u) {
        const std::size_t n = u.size();
        for (std::size_t i = 0; i < n; ++i) u[i] *= half_[i];
        rhs(u, k1_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = u[i] + 0.5 * k1_[i];
        rhs(tmp_, k2_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = u[i] + 0.5 * k2_[i];
        rhs(tmp_, k3_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = u[i] + k3_[i];
        rhs(tmp_, k4_);
        for (std::size_t i = 0; i < n; ++i) u[i] = half_[i] * (u[i] + (k1_[i] + 2.0 * (k2_[i] + k3_[i]) + k4_[i]) / 6.0);
    }

    SolverConfig cfg_;
    NonlinearTerm nonlinear_;
    std::vector<cplx> half_, full_;
    std::vector<cplx> k1_, k2_, k3_, k4_, tmp_;
};

/// One dt advance of `u`.
inline Field step(const Field& u, const SolverConfig& cfg) {
    cfg.validate();
    if (cfg.gamma != 0.0 && !u.is_mean_zero()) throw MeanZeroViolation(u.mean());
    Stepper stepper(cfg);
    std::vector<cplx> c(u.coefficients().begin(), u.coefficients().end());
    stepper.advance(c);
    for (const auto& z : c)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw BlowupDetected(1, cfg.dt, "nonfinite value");
    return Field(u.grid(), std::move(c));
}

// ---------------------------------------------------------------------------
// Trajectories

struct Trajectory {
    double trace_s = 2.0;
    std::vector<double> times;
    std::vector<Field> fields;
    std::vector<double> l2;
    std::vector<double> hamiltonian;
    std::vector<double> hs;
    /// NaN where the snapshot is not mean-zero (possible only when gamma = 0).
    std::vector<double> xs;

    std::size_t size() const noexcept { return times.size(); }

    void record(double t, const Field& u, const SolverConfig& cfg) {
        times.push_back(t);
        fields.push_back(u);
        l2.push_back(u.l2_norm());
        hamiltonian.push_back(ostrovsky::hamiltonian(u, cfg.beta, cfg.gamma, cfg.k));
        hs.push_back(h_s_norm(u, trace_s));
        xs.push_back(u.is_mean_zero() ? x_s_norm(u, trace_s) : std::numeric_limits<double>::quiet_NaN());
    }

    /// max_t |q(t) - q(0)| / |q(0)| for a recorded trace.
    static double relative_drift(const std::vector<double>& q) {
        if (q.empty()) return 0.0;
        const double ref = std::abs(q.front());
        double worst = 0.0;
        for (double v : q) worst = std::max(worst, std::abs(v - q.front()));
        return ref > 0.0 ? worst / ref : worst;
    }
};

/// Solve from 0 to cfg.t_end, recording every `snapshot_every` steps (and the final step).
/// The zero mode must vanish unless gamma = 0, where it is an exact invariant and
/// the antiderivative is never formed.
inline Trajectory evolve(const Field& u0, const SolverConfig& cfg, int snapshot_every, double trace_s = 2.0) {
    if (snapshot_every <= 0) throw ConfigurationError("snapshot_every must be positive");
    cfg.validate(&u0);
    if (cfg.gamma != 0.0 && !u0.is_mean_zero()) throw MeanZeroViolation(u0.mean());
    const std::int64_t steps = cfg.step_count();

    auto traj = std::make_shared<Trajectory>();
    traj->trace_s = trace_s;
    traj->record(0.0, u0, cfg);
    const double l2_0 = u0.l2_norm();

    Stepper stepper(cfg);
    std::vector<cplx> c(u0.coefficients().begin(), u0.coefficients().end());
    for (std::int64_t i = 1; i <= steps; ++i) {
        const double t = static_cast<double>(i) * cfg.dt;
        try {
            stepper.advance(c);
        } catch (const NonfiniteValue& e) {
            throw BlowupDetected(i, t, e.what(), traj);
        }
        double acc = 0.0;
        for (const auto& z : c) {
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw BlowupDetected(i, t, "nonfinite coefficient", traj);
            acc += std::norm(z);
        }
        const double l2 = std::sqrt(cfg.grid.length() * acc);
        if (l2_0 > 0.0 && l2 > 10.0 * l2_0) throw BlowupDetected(i, t, "L2 norm grew beyond 10x its initial value", traj);
        if (i % snapshot_every == 0 || i == steps) traj->record(t, Field(cfg.grid, c), cfg);
    }
    return std::move(*traj);
}

// ---------------------------------------------------------------------------
// Initial data

/// A exp(-((x - x0)/w)^2), band-limited for a degree-(k+1) product and mean-projected.
inline Field gaussian_bump(const Grid& grid, double amplitude, double width, double center, int k) {
    auto f = Field::from_function(grid, [&](double x) {
        const double y = (x - center) / width;
        return amplitude * std::exp(-y * y);
    });
    return project_zero_mean(dealias(f, k + 1));
}

/// Traveling wave Q(x - L/2) of beta Q''' - Q^k Q' + c Q' = 0,
/// Q(y) = A sech^{2/k}(B y), A^k = (k+1)(k+2)c/2, B = (k/2) sqrt(c/|beta|).
struct SolitonData {
    /// Q sampled on the grid (carries a nonzero mean).
    Field profile;
    /// profile with its zero mode removed.
    Field field;
    /// the removed mean.
    double projection_defect = 0.0;
    /// ||beta Q''' - Q^k Q' + c Q'||_{L2} / ||Q||_{L2} from closed-form derivatives.
    double residual = 0.0;
    /// same residual with spectral derivatives on the grid (a resolution diagnostic).
    double spectral_residual = 0.0;
    double amplitude = 0.0;
    double inverse_width = 0.0;
    double speed = 0.0;
};

struct SolitonDerivatives {
    double q, q1, q3;
};

/// Q, Q', Q''' of A sech^a(B y) in closed form, a = 2/k.
inline SolitonDerivatives soliton_derivatives(double amplitude, double inverse_width, int k, double y) {
    const double a = 2.0 / k;
    const double B = inverse_width;
    const double T = std::tanh(B * y);
    const double Sa = std::pow(1.0 / std::cosh(B * y), a);
    const double q = amplitude * Sa;
    const double q1 = -amplitude * a * B * Sa * T;
    const double q3 = amplitude * a * B * B * B * Sa * T * (a * (1.0 - (a + 1.0) * T * T) + 2.0 * (a + 1.0) * (1.0 - T * T));
    return {q, q1, q3};
}

inline SolitonData soliton_initial_data(double c, int k, double beta, const Grid& grid,
                                        double residual_gate = 1e-8) {
    if (!(c > 0.0)) throw DomainError("soliton speed must be positive");
    if (!(beta < 0.0)) throw DomainError("soliton construction needs beta < 0");
    if (k < 1) throw DomainError("k must be >= 1");
    const double A = std::pow((k + 1.0) * (k + 2.0) * c / 2.0, 1.0 / k);
    const double B = 0.5 * k * std::sqrt(c / std::abs(beta));
    const double center = 0.5 * grid.length();

    std::vector<double> q(grid.size()), r(grid.size());
    double qq = 0.0, rr = 0.0;
    for (int m = 0; m < grid.size(); ++m) {
        const auto d = soliton_derivatives(A, B, k, grid.point(m) - center);
        q[m] = d.q;
        r[m] = beta * d.q3 - std::pow(d.q, k) * d.q1 + c * d.q1;
        qq += d.q * d.q;
        rr += r[m] * r[m];
    }
    const double residual = std::sqrt(rr / qq);

    const Field profile = Field::from_samples(grid, q);
    const auto q1s = apply_multiplier(profile, multiplier::Derivative{1}).samples();
    const auto q3s = apply_multiplier(profile, multiplier::Derivative{3}).samples();
    double sr = 0.0;
    for (int m = 0; m < grid.size(); ++m) {
        const double v = beta * q3s[m] - std::pow(q[m], k) * q1s[m] + c * q1s[m];
        sr += v * v;
    }

    if (!(residual < residual_gate))
        throw NotASoliton("soliton residual " + std::to_string(residual) + " exceeds gate " + std::to_string(residual_gate));
    SolitonData out{profile, project_zero_mean(profile), profile.mean(), residual, std::sqrt(sr / qq), A, B, c};
    return out;
}

// ---------------------------------------------------------------------------
// Duhamel-Picard iteration

struct PicardResult {
    std::vector<double> times;
    /// final iterate on the time lattice
    std::vector<Field> iterate;
    /// sup_t ||v^{m+1}(t) - v^m(t)||_{L2}, one entry per application of the map
    std::vector<double> differences;
    /// successive ratios differences[m+1] / differences[m]
    std::vector<double> ratios;
    bool converged = false;
    int iterations = 0;

    /// The iterate on [0, delta) as a space-time table (drops the endpoint t = delta).
    SpaceTimeField as_space_time() const {
        const Grid& g = iterate.front().grid();
        int nt = static_cast<int>(iterate.size()) - 1;
        nt -= nt % 2;
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(nt) * g.size());
        for (int l = 0; l < nt; ++l) {
            const auto s = iterate[l].samples();
            values.insert(values.end(), s.begin(), s.end());
        }
        return SpaceTimeField(g, times[nt], nt, std::move(values));
    }
};

/// Iterates v^0(t) = psi(t) U(t) u0, v^{m+1} = Gamma(v^m) with
///   Gamma(v)(t) = psi(t) U(t) u0 - (1/(k+1)) psi_delta(t) int_0^t U(t - s) d_x[(psi(s) v(s))^{k+1}] ds,
/// the time integral by composite trapezoid on the lattice of step ~cfg.dt over [0, delta].
inline PicardResult picard_iterate(const Field& u0, const SolverConfig& cfg, double delta, int n_iters,
                                   double tolerance = 1e-10) {
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    if (n_iters < 1) throw ConfigurationError("n_iters must be >= 1");
    if (!u0.is_mean_zero()) throw MeanZeroViolation(u0.mean());
    const Grid& g = u0.grid();
    const int n = g.size();
    const int steps = std::max(1, static_cast<int>(std::llround(delta / cfg.dt)));
    const double h = delta / steps;
    const PhaseSymbol phi(cfg.beta, cfg.gamma, g);
    const NonlinearTerm nonlinear(g, cfg.k);

    auto propagate = [&](std::span<const cplx> c, double t) {
        std::vector<cplx> out(n);
        for (int s = 0; s < n; ++s) out[s] = s == g.nyquist_slot() ? cplx(0.0) : c[s] * detail::unit_phase(-t, phi.values()[s]);
        return out;
    };

    PicardResult result;
    std::vector<std::vector<cplx>> free(steps + 1), v(steps + 1);
    for (int l = 0; l <= steps; ++l) {
        const double t = l * h;
        result.times.push_back(t);
        free[l] = propagate(u0.coefficients(), t);
        for (auto& z : free[l]) z *= time_cutoff(t);
    }
    v = free;

    auto sup_difference = [&](const std::vector<std::vector<cplx>>& a, const std::vector<std::vector<cplx>>& b) {
        double worst = 0.0;
        for (int l = 0; l <= steps; ++l) {
            double acc = 0.0;
            for (int s = 0; s < n; ++s) acc += std::norm(a[l][s] - b[l][s]);
            worst = std::max(worst, std::sqrt(g.length() * acc));
        }
        return worst;
    };

    int non_contracting = 0;
    std::vector<cplx> buf(n), nl(n), cumulative(n), previous(n);
    for (int m = 0; m < n_iters; ++m) {
        std::vector<std::vector<cplx>> next(steps + 1);
        std::fill(cumulative.begin(), cumulative.end(), cplx(0.0));
        for (int l = 0; l <= steps; ++l) {
            const double t = l * h;
            // interaction-picture integrand W(s) = U(-s) N(psi(s) v(s))
            for (int s = 0; s < n; ++s) buf[s] = time_cutoff(t) * v[l][s];
            nonlinear(buf, nl);
            const auto w = propagate(nl, -t);
            if (l == 0) {
                previous = w;
            } else {
                for (int s = 0; s < n; ++s) cumulative[s] += 0.5 * h * (previous[s] + w[s]);
                previous = w;
            }
            auto duhamel = propagate(cumulative, t);
            next[l] = free[l];
            const double cut = time_cutoff(t, delta);
            for (int s = 0; s < n; ++s) next[l][s] += cut * duhamel[s];
        }
        const double diff = sup_difference(next, v);
        v = std::move(next);
        result.differences.push_back(diff);
        result.iterations = m + 1;
        if (!std::isfinite(diff)) throw ContractionFailure("Picard iterate became nonfinite");
        if (result.differences.size() >= 2) {
            const double prev = result.differences[result.differences.size() - 2];
            const double ratio = prev > 0.0 ? diff / prev : 0.0;
            result.ratios.push_back(ratio);
            non_contracting = ratio >= 1.0 ? non_contracting + 1 : 0;
            if (non_contracting >= 3)
                throw ContractionFailure("Picard map did not contract for 3 consecutive iterations; reduce delta");
        }
        if (diff < tolerance) {
            result.converged = true;
            break;
        }
    }
    result.iterate.reserve(steps + 1);
    for (auto& c : v) result.iterate.emplace_back(g, std::move(c));
    return result;
}

}  // namespace ostrovsky
