#include <gtest/gtest.h>

#include <random>

#include "tbscat/qwalk.hpp"

using namespace tbscat;

namespace {

QWalkState random_walk_state(const QWalkConfig& cfg, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> d;
    QWalkState s{std::vector<cplx>(cfg.size()), std::vector<cplx>(cfg.size()), 0};
    for (std::size_t i = 0; i < cfg.size(); ++i) {
        s.u[i] = {d(rng), d(rng)};
        s.v[i] = {d(rng), d(rng)};
    }
    return s;
}

QWalkConfig walk_config(HarmonicKind kind) {
    QWalkConfig c;
    c.beta = 0.97 * pi / 2;
    c.profile = QWalkConfig::gaussian_profile(1.0, 3.0);
    c.modulation = Modulation({{0.1, 0.1, kind}, {0.06, std::sqrt(2.0) / 15, kind}});
    return c;
}

}  // namespace

TEST(QWalkStep, SwapShiftAtFullCoupling) {
    QWalkConfig c;
    c.site_first = -10;
    c.site_last = 10;
    const auto s = random_walk_state(c, 1);
    const auto t = qwalk_step(s, c);
    for (std::size_t i = 0; i + 1 < c.size(); ++i) EXPECT_LT(std::abs(t.u[i] - I * s.v[i + 1]), 1e-15);
    for (std::size_t i = 1; i < c.size(); ++i) EXPECT_LT(std::abs(t.v[i] - I * s.u[i - 1]), 1e-15);
    EXPECT_EQ(t.step, 1);
}

TEST(QWalkStep, UnitaryForRealPotential) {
    auto c = walk_config(HarmonicKind::cosine);
    // keep the random state away from the hard walls so nothing leaks out
    auto s = random_walk_state(c, 2);
    for (std::size_t i = 0; i < c.size(); ++i)
        if (i < 3 || i + 3 >= c.size()) s.u[i] = s.v[i] = 0.0;
    double worst = 0.0;
    for (int m = 0; m < 3; ++m) {
        const auto t = qwalk_step(s, c);
        worst = std::max(worst, std::abs(t.intensity() - s.intensity()) / s.intensity());
        s = t;
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(QWalkStep, LossyPotentialDoesNotAmplify) {
    auto c = walk_config(HarmonicKind::exponential);
    c.modulation = Modulation({{cplx{0.1, -0.05}, 0.0}});
    auto walk = qwalk_run(c, qwalk_delta_state(c, -3), 60);
    for (std::size_t m = 1; m < walk.size(); ++m) EXPECT_LE(walk[m].intensity(), walk[m - 1].intensity() * (1 + 1e-14));
    EXPECT_LT(walk.back().intensity(), 0.999);
}

TEST(QWalkStep, LightConeGrowsAtMostOneSitePerStep) {
    const auto c = walk_config(HarmonicKind::exponential);
    const auto walk = qwalk_run(c, qwalk_delta_state(c, -15), 50);
    EXPECT_EQ(qwalk_max_support_growth(walk), 1);
}

TEST(Quasienergy, FullCouplingIsFlat) {
    for (double q : {0.0, 0.7, 2.0}) {
        EXPECT_NEAR(quasienergy(pi / 2, q).plus, pi / 2, 1e-15);
        EXPECT_NEAR(quasienergy(pi / 2, q).minus, -pi / 2, 1e-15);
    }
}

TEST(Quasienergy, BandBottomAndSmallRhoApproximation) {
    const double beta = 0.97 * pi / 2, rho = pi / 2 - beta;
    EXPECT_NEAR(quasienergy(beta, 0.0).plus, beta, 1e-14);
    for (double q = -pi; q <= pi; q += 0.1) {
        const auto e = quasienergy(beta, q);
        EXPECT_EQ(e.minus, -e.plus);
        EXPECT_LT(std::abs(e.plus - quasienergy_approx(beta, q).plus), rho * rho * rho);
    }
}

TEST(Quasienergy, SecondFrequencyExceedsBandwidth) {
    const double w = qwalk_bandwidth(0.97 * pi / 2);
    EXPECT_NEAR(w, 0.03 * pi, 1e-15);
    EXPECT_NEAR(w, 0.09425, 1e-5);
    EXPECT_GT(std::sqrt(2.0) / 15, w);
    EXPECT_NEAR(std::sqrt(2.0) / 15, 0.0943, 1e-4);
}

TEST(QWalkError, ZeroWithoutPotential) {
    QWalkConfig c;
    c.beta = 0.9;
    const auto a = qwalk_run(c, qwalk_delta_state(c, 0), 30);
    const auto e = qwalk_error(a, a);
    for (const auto& row : e)
        for (double x : row) EXPECT_EQ(x, 0.0);
    EXPECT_THROW(qwalk_error(a, qwalk_run(c, qwalk_delta_state(c, 0), 29)), InvalidArgument);
}

TEST(QWalkError, OneSidedModulationQuietInFarField) {
    const auto c = walk_config(HarmonicKind::exponential);
    QWalkConfig free = c;
    free.profile.clear();
    const auto start = qwalk_delta_state(c, -15);
    const auto with = qwalk_run(c, start, 150);
    const auto without = qwalk_run(free, start, 150);
    EXPECT_LT(qwalk_far_field(qwalk_error(with, without), without, c, 0, 10), 1e-4);
}

TEST(QWalkConfig, PotentialMustFitInRange) {
    QWalkConfig c;
    c.site_first = -5;
    c.site_last = 5;
    c.profile = QWalkConfig::gaussian_profile(1.0, 3.0);
    EXPECT_THROW(c.validate(), SupportViolation);
}

TEST(ContinuousLimit, ExactAtFullCoupling) {
    QWalkConfig c;
    c.site_first = -40;
    c.site_last = 40;
    const auto r = continuous_limit_check(c, qwalk_delta_state(c, 0), 30);
    EXPECT_LT(r.max_discrepancy, 1e-12);
}

TEST(ContinuousLimit, FreeWalkErrorBoundedByRhoSquaredSteps) {
    QWalkConfig c;
    c.beta = 0.97 * pi / 2;
    const double rho = c.rho();
    const long m = 100;
    const auto r = continuous_limit_check(c, qwalk_delta_state(c, 0), m);
    EXPECT_LT(r.max_discrepancy, rho * rho * static_cast<double>(m));
    EXPECT_NEAR(r.kappa, rho / 2, 1e-15);
}

TEST(ContinuousLimit, DiscrepancyShrinksWhenRhoHalved) {
    auto c = walk_config(HarmonicKind::exponential);
    c.site_first = -60;
    c.site_last = 60;
    const auto oc = continuous_limit_order(c, qwalk_delta_state(c, 0), 60);
    EXPECT_GT(oc.ratio, 3.0);
    EXPECT_LT(oc.fine.relative_discrepancy, oc.coarse.relative_discrepancy);
}
