#include "ostrovsky/spectral.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ostrovsky;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

std::vector<double> random_samples(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

// smooth mean-zero data without Nyquist content
Field random_smooth(const Grid& g, unsigned seed, int max_mode) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    std::vector<cplx> c(g.size());
    for (int j = 1; j <= max_mode; ++j) {
        const cplx z(dist(rng), dist(rng));
        c[g.slot(j)] = z;
        c[g.slot(-j)] = std::conj(z);
    }
    return Field(g, std::move(c));
}

double rel_l2(const Field& a, const Field& b) { return (a - b).l2_norm() / b.l2_norm(); }

}  // namespace

TEST(Grid, RejectsBadSizes) {
    EXPECT_THROW(Grid(63, 1.0), ConfigurationError);
    EXPECT_THROW(Grid(6, 1.0), ConfigurationError);
    EXPECT_THROW(Grid(64, 0.0), ConfigurationError);
}

TEST(Grid, WavenumbersAreOdd) {
    const Grid g(32, 7.0);
    for (int j = 1; j < 16; ++j) EXPECT_DOUBLE_EQ(g.wavenumber(g.slot(-j)), -g.wavenumber(g.slot(j)));
    EXPECT_EQ(g.mode(g.nyquist_slot()), 16);
}

TEST(Transform, CosineHasTwoHalfModes) {
    const Grid g(64, 2 * kPi);
    const auto f = Field::from_function(g, [](double x) { return std::cos(x); });
    for (int s = 0; s < g.size(); ++s) {
        const double expect = std::abs(g.mode(s)) == 1 ? 0.5 : 0.0;
        EXPECT_LT(std::abs(f.coefficients()[s] - cplx(expect)), 1e-14);
    }
}

TEST(Transform, ZeroField) {
    const Grid g(16, 1.0);
    const auto f = Field::from_samples(g, std::vector<double>(16, 0.0));
    for (auto z : f.coefficients()) EXPECT_EQ(z, cplx(0.0));
}

TEST(Transform, RoundtripAndParseval) {
    for (int n : {8, 16, 128, 256, 1024, 4096}) {
        const Grid g(n, 3.0);
        const auto u = random_samples(n, 17 + n);
        const auto f = Field::from_samples(g, u);
        EXPECT_LT(max_abs_diff(f.samples(), u), 1e-12) << n;
        double direct = 0.0;
        for (double v : u) direct += v * v * g.dx();
        EXPECT_NEAR(f.l2_norm() * f.l2_norm(), direct, 1e-12 * direct);
        for (int j = 1; j < n / 2; ++j)
            EXPECT_LT(std::abs(f.coefficient(-j) - std::conj(f.coefficient(j))), 1e-14);
    }
}

TEST(Phase, Values) {
    EXPECT_DOUBLE_EQ(phase_value(-1, 1, 2.0), -7.5);
    EXPECT_DOUBLE_EQ(phase_value(-1, 1, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(phase_value(-1, 1, -1.0), 0.0);
    EXPECT_THROW(phase_value(-1, 1, 0.0), DomainError);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-50, 50);
    for (int i = 0; i < 100; ++i) {
        const double xi = d(rng);
        EXPECT_EQ(phase_value(-1.3, 0.7, -xi), -phase_value(-1.3, 0.7, xi));
    }
}

TEST(Phase, SymbolTable) {
    const Grid g(32, 10.0);
    const PhaseSymbol phi(-1, 2, g);
    EXPECT_EQ(phi.values()[0], 0.0);
    for (int j = 1; j < 16; ++j) EXPECT_DOUBLE_EQ(phi.values()[g.slot(-j)], -phi.values()[g.slot(j)]);
    const PhaseSymbol kdv(-1, 0, g);
    const double xi = g.wavenumber(3);
    EXPECT_EQ(kdv.values()[3], -xi * xi * xi);
}

TEST(Phase, DefaultThreshold) {
    // A = max{1, |6/7|^{1/4}, (1/3)^{1/2}, 1, 100, 100} = 100, [A] = 99
    EXPECT_EQ(default_frequency_threshold(-1, 1), std::ldexp(1.0, 99));
    // A = 2.5 -> [A] = 2
    EXPECT_EQ(default_frequency_threshold(-0.01, 0.025), 4.0);
}

TEST(Multiplier, Antiderivative) {
    const Grid g(64, 2 * kPi);
    const auto s = Field::from_function(g, [](double x) { return std::sin(x); });
    const auto r = apply_multiplier(s, multiplier::Derivative{-1});
    const auto expect = Field::from_function(g, [](double x) { return -std::cos(x); }).samples();
    EXPECT_LT(max_abs_diff(r.samples(), expect), 1e-12);

    const auto bad = Field::from_function(g, [](double x) { return 1.0 + std::cos(x); });
    try {
        apply_multiplier(bad, multiplier::Derivative{-1});
        FAIL();
    } catch (const MeanZeroViolation& e) {
        EXPECT_NEAR(e.mean(), 1.0, 1e-14);
    }
}

TEST(Multiplier, PropagatorFixesStationaryMode) {
    const Grid g(64, 2 * kPi);
    const auto c = Field::from_function(g, [](double x) { return std::cos(x); });
    for (double t : {0.3, 1.0, 17.0}) {
        const auto r = apply_multiplier(c, multiplier::Propagator{t, -1, 1});
        EXPECT_LT(max_abs_diff(r.samples(), c.samples()), 1e-14);
    }
}

TEST(Multiplier, BesselWeight) {
    const Grid g(64, 2 * kPi);
    const auto c = Field::from_function(g, [](double x) { return std::cos(2 * x); });
    const auto r = apply_multiplier(c, multiplier::FractionalJ{1.0});
    const auto expect = Field::from_function(g, [](double x) { return 3 * std::cos(2 * x); }).samples();
    EXPECT_LT(max_abs_diff(r.samples(), expect), 1e-13);
}

TEST(Multiplier, Projections) {
    const Grid g(64, 2 * kPi);
    const auto f = Field::from_function(g, [](double x) { return std::cos(x) + std::cos(5 * x); });
    const auto lo = apply_multiplier(f, multiplier::LowPass{3.0});
    const auto hi = apply_multiplier(f, multiplier::HighPass{3.0});
    EXPECT_LT(max_abs_diff(lo.samples(), Field::from_function(g, [](double x) { return std::cos(x); }).samples()), 1e-14);
    EXPECT_LT(rel_l2(lo + hi, f), 1e-15);
}

TEST(Multiplier, Properties) {
    for (int n : {64, 256, 1024}) {
        const Grid g(n, 40.0);
        const auto f = random_smooth(g, 5 + n, n / 4);
        const auto one = apply_multiplier(apply_multiplier(f, multiplier::Derivative{-1}), multiplier::Derivative{1});
        EXPECT_LT(rel_l2(one, f), 1e-12);
        const multiplier::Propagator a{0.375, -1, 1}, b{1.90625, -1, 1}, ab{0.375 + 1.90625, -1, 1};
        const auto two = apply_multiplier(apply_multiplier(f, a), b);
        EXPECT_LT(rel_l2(two, apply_multiplier(f, ab)), 1e-12);
        EXPECT_NEAR(apply_multiplier(f, b).l2_norm(), f.l2_norm(), 1e-12 * f.l2_norm());
    }
}

TEST(Multiplier, OutputStaysReal) {
    const Grid g(128, 9.0);
    const auto f = Field::from_samples(g, random_samples(128, 99));
    for (const MultiplierSpec& spec :
         {MultiplierSpec{multiplier::Derivative{3}}, MultiplierSpec{multiplier::FractionalD{0.7}},
          MultiplierSpec{multiplier::FractionalJ{-1.2}}, MultiplierSpec{multiplier::Propagator{0.4, -1, 1}}}) {
        const auto r = apply_multiplier(f, spec);
        for (int j = 1; j < 64; ++j) EXPECT_LT(std::abs(r.coefficient(-j) - std::conj(r.coefficient(j))), 1e-12 * r.rms() + 1e-300);
    }
}

TEST(Mean, Projection) {
    const Grid g(64, 2 * kPi);
    const auto f = Field::from_function(g, [](double x) { return 1.0 + std::cos(x); });
    const auto p = project_zero_mean(f);
    EXPECT_LT(max_abs_diff(p.samples(), Field::from_function(g, [](double x) { return std::cos(x); }).samples()), 1e-15);
    const auto again = project_zero_mean(p);
    for (int s = 0; s < g.size(); ++s) EXPECT_EQ(again.coefficients()[s], p.coefficients()[s]);
    const auto r = project_zero_mean(Field::from_samples(g, random_samples(64, 4)));
    EXPECT_LT(std::abs(r.mean()), 1e-15);
}

TEST(Dealias, Cutoffs) {
    EXPECT_EQ(dealias_cutoff(256, 6), 36);
    EXPECT_EQ(dealias_cutoff(96, 2), 32);
    EXPECT_THROW(dealias_cutoff(96, 1), DomainError);
    const Grid g(96, 5.0);
    const auto f = random_smooth(g, 8, 32);
    const auto d = dealias(f, 2);
    for (int s = 0; s < g.size(); ++s) EXPECT_EQ(d.coefficients()[s], f.coefficients()[s]);
    const auto wide = random_smooth(g, 9, 47);
    const auto cut = dealias(wide, 2);
    for (int s = 0; s < g.size(); ++s)
        EXPECT_EQ(cut.coefficients()[s], std::abs(g.mode(s)) > 32 ? cplx(0.0) : wide.coefficients()[s]);
}

TEST(Translate, ShiftsByWholeCells) {
    const Grid g(64, 8.0);
    const auto f = random_smooth(g, 12, 20);
    const auto t = translate(f, 3 * g.dx());
    const auto a = f.samples();
    const auto b = t.samples();
    for (int m = 0; m < 64; ++m) EXPECT_NEAR(b[(m + 3) % 64], a[m], 1e-13);
}
