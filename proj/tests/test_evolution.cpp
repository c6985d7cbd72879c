#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "tbscat/evolution.hpp"
#include "tbscat/scattering.hpp"

using namespace tbscat;

namespace {

// psi_n(t) = i^n J_n(2 kappa t) for a unit excitation at n = 0 on the infinite chain
cplx bessel_propagator(long n, double t, double kappa = 1.0) {
    const unsigned m = static_cast<unsigned>(std::labs(n));
    return std::pow(I, static_cast<int>(m % 4)) * std::cyl_bessel_j(static_cast<double>(m), 2.0 * kappa * t);
}

StateVector delta(const Lattice1D& lat, long site) {
    StateVector s{std::vector<cplx>(static_cast<std::size_t>(lat.size())), 0.0};
    s.amplitudes[lat.index(site)] = 1.0;
    return s;
}

// Dense Hamiltonian H with i dpsi/dt = H psi, assembled column by column.
Eigen::MatrixXcd dense_hamiltonian(const Lattice1D& lat, const Perturbation* pert, double t) {
    const auto n = static_cast<std::size_t>(lat.size());
    Eigen::MatrixXcd h(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        StateVector e{std::vector<cplx>(n), t};
        e.amplitudes[j] = 1.0;
        const auto d = apply_hamiltonian_1d(lat, pert, e, t);
        for (std::size_t i = 0; i < n; ++i) h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = I * d.amplitudes[i];
    }
    return h;
}

// exp(-i H t) psi by spectral decomposition of a Hermitian H.
std::vector<cplx> spectral_propagate(const Eigen::MatrixXcd& h, const std::vector<cplx>& psi, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Eigen::VectorXcd x = Eigen::Map<const Eigen::VectorXcd>(psi.data(), static_cast<Eigen::Index>(psi.size()));
    Eigen::VectorXcd c = es.eigenvectors().adjoint() * x;
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= std::polar(1.0, -es.eigenvalues()(i) * t);
    Eigen::VectorXcd y = es.eigenvectors() * c;
    return {y.data(), y.data() + y.size()};
}

Modulation two_exp() {
    return Modulation({{1.0, 5.0, HarmonicKind::exponential}, {1.0, std::sqrt(18.0), HarmonicKind::exponential}});
}

}  // namespace

TEST(Evolve, FreeChainMatchesBesselPropagator) {
    const Lattice1D lat(81, -40, HoppingKernel::nearest_neighbor(1.0));
    const auto tr = evolve(lat, nullptr, delta(lat, 0), 0.0, 1.0, {}, IntegratorConfig{});
    double err = 0.0;
    for (std::size_t i = 0; i < tr.states.back().size(); ++i)
        err = std::max(err, std::abs(tr.states.back().amplitudes[i] - bessel_propagator(lat.site(i), 1.0)));
    EXPECT_LT(err, 1e-8);
}

TEST(Evolve, FreeChainMatchesSpectralOracle) {
    const Lattice1D lat(64, -32, HoppingKernel::nearest_neighbor(1.0));
    const auto psi0 = delta(lat, 0);
    const auto tr = evolve(lat, nullptr, psi0, 0.0, 1.0, {}, IntegratorConfig{});
    const auto ref = spectral_propagate(dense_hamiltonian(lat, nullptr, 0.0), psi0.amplitudes, 1.0);
    double err = 0.0, bes = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        err = std::max(err, std::abs(tr.states.back().amplitudes[i] - ref[i]));
        bes = std::max(bes, std::abs(ref[i] - bessel_propagator(lat.site(i), 1.0)));
    }
    EXPECT_LT(err, 1e-8);
    EXPECT_LT(bes, 1e-12);
}

TEST(Evolve, StaticPotentialMatchesMatrixExponential) {
    const Lattice1D lat(128, -64, HoppingKernel::symmetric({1.0, 0.2}));
    const auto p = Perturbation::gaussian(5.0, 2.0, 0.0, Modulation::constant(1.0));
    const auto psi0 = gaussian_packet(lat, {-30.0, 6.0, pi / 2});
    const auto tr = evolve(lat, &p, psi0, 0.0, 10.0, {5.0}, IntegratorConfig{});
    const auto h = dense_hamiltonian(lat, &p, 0.0);
    for (std::size_t s = 1; s < tr.times.size(); ++s) {
        const auto ref = spectral_propagate(h, psi0.amplitudes, tr.times[s]);
        double err = 0.0;
        for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(tr.states[s].amplitudes[i] - ref[i]));
        EXPECT_LT(err, 1e-7) << "t = " << tr.times[s];
    }
}

TEST(Evolve, HermitianNormConserved) {
    const Lattice1D lat(400, -200, HoppingKernel::symmetric({1.0, 0.2}));
    const auto p = Perturbation::gaussian(5.0, 2.0, 0.0,
                                          Modulation({{1.0, 5.0, HarmonicKind::cosine}, {1.0, std::sqrt(18.0), HarmonicKind::cosine}}));
    const auto psi0 = gaussian_packet(lat, {-90.0, 10.0, pi / 2});
    const auto tr = evolve(lat, &p, psi0, 0.0, 100.0, {25.0, 50.0, 75.0}, IntegratorConfig{});
    const double n0 = norm2(psi0.amplitudes);
    for (const auto& s : tr.states) EXPECT_LT(std::abs(norm2(s.amplitudes) / n0 - 1.0), 1e-8);
}

TEST(Evolve, LinearWithinIntegratorTolerance) {
    const Lattice1D lat(300, -150, HoppingKernel::symmetric({1.0, 0.2}));
    const auto p = Perturbation::gaussian(5.0, 2.0, 0.0, two_exp());
    const auto a = gaussian_packet(lat, {-60.0, 8.0, pi / 2});
    const auto b = gaussian_packet(lat, {40.0, 5.0, -1.0});
    const cplx ca{0.6, -0.3}, cb{-1.1, 0.8};
    StateVector mix{std::vector<cplx>(a.size()), 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) mix.amplitudes[i] = ca * a.amplitudes[i] + cb * b.amplitudes[i];
    const IntegratorConfig cfg;
    const auto ta = evolve(lat, &p, a, 0.0, 40.0, {}, cfg);
    const auto tb = evolve(lat, &p, b, 0.0, 40.0, {}, cfg);
    const auto tm = evolve(lat, &p, mix, 0.0, 40.0, {}, cfg);
    const auto& ya = ta.states.back().amplitudes;
    const auto& yb = tb.states.back().amplitudes;
    const auto& ym = tm.states.back().amplitudes;
    double dev = 0.0;
    for (std::size_t i = 0; i < ym.size(); ++i) dev = std::max(dev, std::abs(ym[i] - ca * ya[i] - cb * yb[i]));
    EXPECT_LT(dev, 10.0 * cfg.rel_tol * max_abs(ym));
}

TEST(Evolve, SnapshotsLandExactlyOnRequestedTimes) {
    const Lattice1D lat(40, -20, HoppingKernel::nearest_neighbor(1.0));
    const auto tr = evolve(lat, nullptr, delta(lat, 0), 0.0, 2.0, {0.3, 1.7, 0.3, 1.0}, IntegratorConfig{});
    EXPECT_EQ(tr.times, (std::vector<double>{0.0, 0.3, 1.0, 1.7, 2.0}));
    for (std::size_t s = 0; s < tr.times.size(); ++s) EXPECT_EQ(tr.states[s].time, tr.times[s]);
    EXPECT_THROW(evolve(lat, nullptr, delta(lat, 0), 0.0, 2.0, {3.0}, IntegratorConfig{}), InvalidArgument);
}

TEST(Evolve, StepUnderflowAborts) {
    const Lattice1D lat(40, -20, HoppingKernel::nearest_neighbor(1.0));
    const auto p = Perturbation::onsite({{0, 1e6}}, Modulation::constant(1.0));
    IntegratorConfig cfg{1e-12, 1e-15, 0.1, 0.05, 0.5, 0.9};
    EXPECT_THROW(evolve(lat, &p, delta(lat, 0), 0.0, 1.0, {}, cfg), IntegrationError);
}

TEST(Evolve, NonFiniteStateAborts) {
    struct Blowup {
        std::size_t dimension() const { return 2; }
        void operator()(double t, std::span<const cplx> y, std::span<cplx> dy) const {
            dy[0] = t > 0.5 ? cplx{std::nan(""), 0.0} : y[1];
            dy[1] = -y[0];
        }
    };
    EXPECT_THROW(evolve(Blowup{}, StateVector{{1.0, 0.0}, 0.0}, 0.0, 1.0, {}, IntegratorConfig{}), IntegrationError);
}

TEST(Evolve, RejectsNonFiniteInitialState) {
    const Lattice1D lat(10, 0, HoppingKernel::nearest_neighbor(1.0));
    StateVector s{std::vector<cplx>(10), 0.0};
    s.amplitudes[3] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(evolve(lat, nullptr, s, 0.0, 1.0, {}, IntegratorConfig{}), InvalidArgument);
}

TEST(IntegratorConfig, Validation) {
    EXPECT_THROW((IntegratorConfig{0.0, 1e-12, 1e-3, 1e-12, 0.5, 0.9}).validate(), InvalidArgument);
    EXPECT_THROW((IntegratorConfig{1e-9, 1e-12, 1.0, 1e-12, 0.5, 0.9}).validate(), InvalidArgument);
    EXPECT_THROW((IntegratorConfig{1e-9, 1e-12, 1e-3, 1e-12, 0.5, 1.0}).validate(), InvalidArgument);
    EXPECT_NO_THROW(IntegratorConfig{}.validate());
}

TEST(ConvergenceProbe, DeviationsShrinkOnScatteringSetup) {
    const Lattice1D lat(800, -400, HoppingKernel::symmetric({1.0, 0.2}));
    const auto p = Perturbation::gaussian(5.0, 2.0, 0.0, two_exp());
    const LatticeSystem1D sys(lat, p);
    const auto psi0 = gaussian_packet(lat, {-90.0, 10.0, pi / 2});
    const auto table = convergence_probe(sys, psi0, 0.0, 100.0, {50.0}, IntegratorConfig{}, {1e-6, 1e-8, 1e-10});
    ASSERT_EQ(table.rows.size(), 3u);
    EXPECT_TRUE(table.monotone);
    EXPECT_GT(table.rows[0].max_deviation, table.rows[1].max_deviation);
    EXPECT_EQ(table.rows[2].max_deviation, 0.0);
}

TEST(ConvergenceProbe, FreeChainAgainstBessel) {
    const Lattice1D lat(81, -40, HoppingKernel::nearest_neighbor(1.0));
    Trajectory ref;
    ref.times = {0.0, 1.0};
    for (double t : ref.times) {
        StateVector s{std::vector<cplx>(81), t};
        for (std::size_t i = 0; i < 81; ++i) s.amplitudes[i] = bessel_propagator(lat.site(i), t);
        ref.states.push_back(s);
    }
    const auto table = convergence_probe(LatticeSystem1D(lat), delta(lat, 0), 0.0, 1.0, {}, IntegratorConfig{},
                                         {1e-9, 1e-10, 1e-11}, &ref);
    for (const auto& r : table.rows) EXPECT_LT(r.max_deviation, 1e-8) << "rel_tol " << r.rel_tol;
}

TEST(ConvergenceProbe, ZeroDurationSpan) {
    const Lattice1D lat(20, -10, HoppingKernel::nearest_neighbor(1.0));
    const auto table = convergence_probe(LatticeSystem1D(lat), delta(lat, 0), 3.0, 3.0, {}, IntegratorConfig{},
                                         {1e-6, 1e-8, 1e-10});
    for (const auto& r : table.rows) EXPECT_EQ(r.max_deviation, 0.0);
}
