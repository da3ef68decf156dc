#include "ostrovsky/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ostrovsky;

namespace {

constexpr double kPi = std::numbers::pi;

double rel_l2(const Field& a, const Field& b) { return (a - b).l2_norm() / b.l2_norm(); }

Field scaled_to_h1(Field f, double target) {
    f *= target / h_s_norm(f, 1.0);
    return f;
}

SolverConfig base_config(int n, double L, double dt, double t_end) {
    SolverConfig cfg;
    cfg.grid = Grid(n, L);
    cfg.dt = dt;
    cfg.t_end = t_end;
    return cfg;
}

// -(1/(k+1)) d_x P[u^{k+1}] on a 4x zero-padded grid, where no product mode aliases.
Field padded_nonlinear(const Field& u, int k) {
    const Grid& g = u.grid();
    const Grid big(4 * g.size(), g.length());
    std::vector<cplx> c(big.size());
    for (int s = 0; s < g.size(); ++s)
        if (s != g.nyquist_slot()) c[big.slot(g.mode(s))] = u.coefficients()[s];
    auto samples = Field(big, c).samples();
    for (auto& v : samples) v = std::pow(v, k + 1);
    const auto w = Field::from_samples(big, samples);
    const int cutoff = dealias_cutoff(g.size(), k + 1);
    std::vector<cplx> out(g.size());
    for (int j = -cutoff; j <= cutoff; ++j)
        if (j != 0) out[g.slot(j)] = -cplx(0.0, g.wavenumber(g.slot(j))) * w.coefficient(j) / (k + 1.0);
    return Field(g, std::move(out));
}

Field random_band_limited(const Grid& g, int cutoff, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    std::vector<cplx> c(g.size());
    for (int j = 1; j <= cutoff; ++j) {
        const cplx z = cplx(dist(rng), dist(rng)) * std::exp(-0.05 * j);
        c[g.slot(j)] = z;
        c[g.slot(-j)] = std::conj(z);
    }
    return Field(g, std::move(c));
}

}  // namespace

TEST(Nonlinear, CosineSquared) {
    const Grid g(64, 2 * kPi);
    const auto u = Field::from_function(g, [](double x) { return std::cos(x); });
    const auto r = nonlinear_term(u, 1).samples();
    double err = 0.0;
    for (int m = 0; m < 64; ++m) err = std::max(err, std::abs(r[m] - 0.5 * std::sin(2 * g.point(m))));
    EXPECT_LT(err, 1e-12);
}

TEST(Nonlinear, Zero) {
    const Grid g(64, 3.0);
    const auto r = nonlinear_term(Field::zero(g), 5);
    for (auto z : r.coefficients()) EXPECT_EQ(z, cplx(0.0));
}

TEST(Nonlinear, MatchesPaddedOracle) {
    const Grid g(256, 20.0);
    const auto u = random_band_limited(g, dealias_cutoff(256, 6), 42);
    const auto a = nonlinear_term(u, 5);
    const auto b = padded_nonlinear(u, 5);
    double err = 0.0, scale = 0.0;
    for (int s = 0; s < g.size(); ++s) {
        err = std::max(err, std::abs(a.coefficients()[s] - b.coefficients()[s]));
        scale = std::max(scale, std::abs(b.coefficients()[s]));
    }
    EXPECT_LT(err, 1e-11 * scale);
    EXPECT_TRUE(a.is_mean_zero());
}

TEST(Config, Validation) {
    auto cfg = base_config(64, 10.0, 1e-3, 1.0);
    cfg.beta = 1.0;
    EXPECT_THROW(cfg.validate(), ConfigurationError);
    cfg.beta = -1.0;
    cfg.gamma = -0.5;
    EXPECT_THROW(cfg.validate(), ConfigurationError);
    cfg.gamma = 1.0;
    cfg.k = 0;
    EXPECT_THROW(cfg.validate(), ConfigurationError);
    cfg.k = 3;
    EXPECT_FALSE(cfg.in_wellposed_range());
    const auto big = Field::from_function(cfg.grid, [](double x) { return 10.0 * std::sin(2 * kPi * x / 10.0); });
    EXPECT_THROW(cfg.validate(&big), ConfigurationError);
    cfg.t_end = 1.00037;
    EXPECT_THROW(cfg.step_count(), ConfigurationError);
}

TEST(Step, LinearMatchesPropagator) {
    auto cfg = base_config(128, 30.0, 0.01, 1.0);
    cfg.nonlinear = false;
    const auto u0 = random_band_limited(cfg.grid, 40, 5);
    const auto traj = evolve(u0, cfg, 100);
    const auto exact = apply_multiplier(u0, multiplier::Propagator{1.0, cfg.beta, cfg.gamma});
    EXPECT_LT(rel_l2(traj.fields.back(), exact), 1e-12);
}

TEST(Step, StationaryMode) {
    auto cfg = base_config(64, 2 * kPi, 0.1, 5.0);
    cfg.nonlinear = false;
    const auto u0 = Field::from_function(cfg.grid, [](double x) { return std::cos(x); });
    const auto traj = evolve(u0, cfg, 10);
    for (const auto& f : traj.fields) EXPECT_LT(rel_l2(f, u0), 1e-13);
    EXPECT_LT(rel_l2(step(u0, cfg), u0), 1e-14);
}

TEST(Step, FourthOrderSelfConvergence) {
    const Grid g(256, 40.0);
    const auto u0 = gaussian_bump(g, 1.2, 2.0, 20.0, 5);
    auto run = [&](double dt, Integrator which) {
        auto cfg = base_config(256, 40.0, dt, 0.5);
        cfg.integrator = which;
        return evolve(u0, cfg, 1 << 20).fields.back();
    };
    for (auto which : {Integrator::ifrk4, Integrator::split_step}) {
        const auto ref = run(0.01 / 8, which);
        const double e1 = rel_l2(run(0.01, which), ref);
        const double e2 = rel_l2(run(0.005, which), ref);
        const double order = std::log2(e1 / e2);
        if (which == Integrator::ifrk4)
            EXPECT_GE(order, 3.8) << e1 << " " << e2;
        else
            EXPECT_GE(order, 1.8) << e1 << " " << e2;
    }
}

TEST(Evolve, ZeroStaysZero) {
    const auto cfg = base_config(64, 10.0, 0.01, 0.2);
    const auto traj = evolve(Field::zero(cfg.grid), cfg, 5);
    for (const auto& f : traj.fields)
        for (auto z : f.coefficients()) EXPECT_EQ(z, cplx(0.0));
    EXPECT_THROW(evolve(Field::zero(cfg.grid), cfg, 0), ConfigurationError);
}

TEST(Evolve, TraceBookkeeping) {
    const auto cfg = base_config(128, 30.0, 0.01, 0.5);
    const auto u0 = gaussian_bump(cfg.grid, 0.8, 1.5, 15.0, cfg.k);
    const auto traj = evolve(u0, cfg, 10);
    ASSERT_EQ(traj.size(), 6u);
    for (int s = 0; s < cfg.grid.size(); ++s) EXPECT_EQ(traj.fields[0].coefficients()[s], u0.coefficients()[s]);
    for (std::size_t i = 1; i < traj.size(); ++i) EXPECT_GT(traj.times[i], traj.times[i - 1]);
    EXPECT_NEAR(traj.times.back(), 0.5, 1e-15);
}

TEST(Evolve, NonMeanZeroRejected) {
    const auto cfg = base_config(64, 10.0, 0.01, 0.1);
    const auto u = Field::from_function(cfg.grid, [](double x) { return 0.1 + 0.1 * std::cos(2 * kPi * x / 10.0); });
    EXPECT_THROW(evolve(u, cfg, 1), MeanZeroViolation);
}

TEST(Evolve, BlowupCarriesPartialTrajectory) {
    auto cfg = base_config(64, 10.0, 1e-305, 1e-305);
    const auto u0 = gaussian_bump(cfg.grid, 1e60, 1.0, 5.0, cfg.k);
    try {
        evolve(u0, cfg, 1);
        FAIL();
    } catch (const BlowupDetected& e) {
        EXPECT_EQ(e.step(), 1);
        ASSERT_NE(e.partial(), nullptr);
        EXPECT_EQ(e.partial()->size(), 1u);
    }
}

TEST(Invariants, Conservation) {
    for (auto which : {Integrator::ifrk4, Integrator::split_step}) {
        auto cfg = base_config(256, 40.0, 2e-3, 1.0);
        cfg.integrator = which;
        const auto u0 = gaussian_bump(cfg.grid, 1.0, 1.5, 20.0, cfg.k);
        const auto traj = evolve(u0, cfg, 50);
        EXPECT_LT(Trajectory::relative_drift(traj.l2), 1e-8);
        EXPECT_LT(Trajectory::relative_drift(traj.hamiltonian), 1e-6);
        for (const auto& f : traj.fields) EXPECT_LT(std::abs(f.coefficients()[0]), 1e-13);
    }
}

// dH/dt along a trajectory by centered differences, measured against the rate at
// which the dispersive part of H changes. The functional with the dispersive sign
// flipped must visibly fail, so a small dH/dt is not an artefact of scale.
TEST(Invariants, HamiltonianFiniteDifference) {
    auto cfg = base_config(256, 40.0, 1e-3, 0.2);
    const auto u0 = gaussian_bump(cfg.grid, 1.0, 1.5, 20.0, cfg.k);
    const auto traj = evolve(u0, cfg, 1);
    const double h = cfg.dt;
    auto flipped = [&](const Field& u) { return hamiltonian(u, -cfg.beta, cfg.gamma, cfg.k); };
    auto dispersive = [&](const Field& u) { return hamiltonian(u, cfg.beta, 0.0, cfg.k) - hamiltonian(u, 0.0, 0.0, cfg.k); };
    double worst = 0.0, worst_flipped = 0.0, scale = 0.0;
    for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
        const auto& a = traj.fields[i + 1];
        const auto& b = traj.fields[i - 1];
        worst = std::max(worst, std::abs(traj.hamiltonian[i + 1] - traj.hamiltonian[i - 1]) / (2 * h));
        worst_flipped = std::max(worst_flipped, std::abs(flipped(a) - flipped(b)) / (2 * h));
        scale = std::max(scale, std::abs(dispersive(a) - dispersive(b)) / (2 * h));
    }
    ASSERT_GT(scale, 0.0);
    EXPECT_LT(worst, 1e-6 * scale);
    EXPECT_GT(worst_flipped, 0.5 * scale);
}

TEST(Invariants, KdVPathIgnoresRotation) {
    auto cfg = base_config(128, 30.0, 0.01, 0.3);
    cfg.gamma = 0.0;
    const Grid& g = cfg.grid;
    // nonzero mean is admissible and conserved when gamma = 0
    const auto u0 = gaussian_bump(g, 0.7, 1.5, 15.0, cfg.k) + Field::from_samples(g, std::vector<double>(128, 0.05));
    const auto traj = evolve(u0, cfg, 10);
    for (const auto& f : traj.fields) EXPECT_NEAR(f.mean(), u0.mean(), 1e-14);
    EXPECT_TRUE(std::isnan(traj.xs.front()));
    EXPECT_LT(Trajectory::relative_drift(traj.l2), 1e-8);
    EXPECT_LT(Trajectory::relative_drift(traj.hamiltonian), 1e-6);
}

TEST(Soliton, ShapeAndResidual) {
    const Grid g(1024, 80.0);
    const auto s = soliton_initial_data(1.0, 5, -1.0, g);
    EXPECT_LT(s.residual, 1e-8);
    const auto q = s.profile.samples();
    const auto peak = std::max_element(q.begin(), q.end()) - q.begin();
    EXPECT_EQ(peak, 512);
    for (int m = 1; m < 512; ++m) EXPECT_LE(q[m - 1], q[m] + 1e-15);
    for (int m = 513; m < 1024; ++m) EXPECT_LE(q[m], q[m - 1] + 1e-15);
    EXPECT_TRUE(s.field.is_mean_zero());
    EXPECT_NEAR(s.projection_defect, s.profile.mean(), 1e-15);
    EXPECT_THROW(soliton_initial_data(-1.0, 5, -1.0, g), DomainError);
}

TEST(Soliton, ClosedFormDerivatives) {
    const double A = 1.7, B = 0.9, h = 1e-3;
    for (int k : {1, 2, 5}) {
        for (double y : {-2.0, -0.3, 0.4, 1.7}) {
            auto q = [&](double z) { return soliton_derivatives(A, B, k, z).q; };
            const auto d = soliton_derivatives(A, B, k, y);
            EXPECT_NEAR(d.q1, (q(y + h) - q(y - h)) / (2 * h), 1e-5);
            const double d3 = (q(y + 2 * h) - 2 * q(y + h) + 2 * q(y - h) - q(y - 2 * h)) / (2 * h * h * h);
            EXPECT_NEAR(d.q3, d3, 1e-3 * std::max(1.0, std::abs(d.q3)));
        }
    }
}

TEST(Soliton, WidthScaling) {
    const Grid g(4096, 80.0);
    auto fwhm = [&](double c) {
        const auto s = soliton_initial_data(c, 5, -1.0, g);
        const auto q = s.profile.samples();
        const double half = 0.5 * *std::max_element(q.begin(), q.end());
        int count = 0;
        for (double v : q) count += v >= half;
        return count * g.dx();
    };
    const double ratio = fwhm(1.0) / fwhm(2.0);
    EXPECT_NEAR(ratio, std::sqrt(2.0), 0.02 * std::sqrt(2.0));
}

TEST(Soliton, WrongConstantsRejected) {
    const Grid g(1024, 80.0);
    EXPECT_THROW(soliton_initial_data(1.0, 5, -1.0, g, 1e-30), NotASoliton);
}

TEST(Soliton, TranslatesAtSpeedC) {
    auto cfg = base_config(1024, 50.0, 5e-4, 1.0);
    cfg.gamma = 0.0;
    const auto s = soliton_initial_data(1.0, 5, -1.0, cfg.grid);
    const auto traj = evolve(s.profile, cfg, 2000);
    const auto back = translate(traj.fields.back(), -1.0);
    EXPECT_LT(rel_l2(back, s.profile), 1e-3);
}

TEST(Picard, ZeroIsFixedPoint) {
    const auto cfg = base_config(64, 10.0, 0.005, 0.05);
    const auto r = picard_iterate(Field::zero(cfg.grid), cfg, 0.05, 10);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 1);
}

TEST(Picard, ContractsAndMatchesStepper) {
    auto cfg = base_config(256, 40.0, 1e-3, 0.05);
    const auto u0 = scaled_to_h1(gaussian_bump(cfg.grid, 1.0, 1.5, 20.0, cfg.k), 0.1);
    const auto r = picard_iterate(u0, cfg, 0.05, 30, 1e-14 * u0.l2_norm());
    ASSERT_TRUE(r.converged);
    ASSERT_FALSE(r.ratios.empty());
    for (double q : r.ratios) EXPECT_LT(q, 0.5);
    const auto traj = evolve(u0, cfg, 50);
    EXPECT_LT((r.iterate.back() - traj.fields.back()).l2_norm(), 1e-6);
    const auto stf = r.as_space_time();
    EXPECT_EQ(stf.n_t(), 50);
}

TEST(Picard, ModerateDataContractsGeometrically) {
    auto cfg = base_config(256, 40.0, 1e-3, 0.05);
    const auto u0 = scaled_to_h1(gaussian_bump(cfg.grid, 1.0, 1.5, 20.0, cfg.k), 2.0);
    const auto r = picard_iterate(u0, cfg, 0.05, 30);
    ASSERT_TRUE(r.converged);
    ASSERT_GE(r.ratios.size(), 4u);
    for (double q : r.ratios) {
        EXPECT_GT(q, 0.0);
        EXPECT_LT(q, 0.5);
    }
    // differences fall at least geometrically at the first ratio
    for (std::size_t m = 1; m < r.differences.size(); ++m)
        EXPECT_LE(r.differences[m], 1.5 * r.ratios.front() * r.differences[m - 1]);
}

TEST(Picard, LargeDataFailsToContract) {
    auto cfg = base_config(128, 20.0, 0.01, 1.0);
    const auto u0 = gaussian_bump(cfg.grid, 3.0, 1.0, 10.0, cfg.k);
    EXPECT_THROW(picard_iterate(u0, cfg, 1.0, 40), ContractionFailure);
}
