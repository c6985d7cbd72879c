#pragma once

// Band structure of a finite-range hopping kernel: E(q), bandwidth, maximal
// group velocity, and complex Bloch wavenumbers at energies outside the band.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "tbscat/core.hpp"
#include "tbscat/lattice.hpp"

namespace tbscat {

struct BandPoint {
    double energy = 0.0;
    double group_velocity = 0.0;
};

struct BandInfo {
    double e_min = 0.0;
    double e_max = 0.0;
    double width = 0.0;  // e_max - e_min
    double v_max = 0.0;  // max |dE/dq|
};

/// E(q) = -sum_l kappa_l exp(-i q l) and v_g = dE/dq. Hermitian kernels only.
inline BandPoint band_eval(const HoppingKernel& kernel, double q) {
    if (!kernel.hermitian()) throw InvalidArgument("band_eval: kernel is not hermitian");
    cplx e{}, v{};
    for (const auto& [l, k] : kernel.terms()) {
        const cplx phase = std::polar(1.0, -q * l);
        e -= k * phase;
        v += I * static_cast<double>(l) * k * phase;
    }
    return {e.real(), v.real()};
}

/// Complex-valued E(Q) for complex wavenumber Q (no hermiticity needed).
inline cplx band_eval_complex(const HoppingKernel& kernel, cplx q) {
    cplx e{};
    for (const auto& [l, k] : kernel.terms()) e -= k * std::exp(-I * q * static_cast<double>(l));
    return e;
}

namespace detail {

/// Golden-section maximisation of f on [a, b].
inline double golden_max(const std::function<double(double)>& f, double a, double b) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 200 && (b - a) > 1e-15 * (1.0 + std::abs(a)); ++it) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - r * (b - a); fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + r * (b - a); fd = f(d);
        }
    }
    return std::max(f(a), std::max(f(b), std::max(fc, fd)));
}

/// Sample f over one period, then refine the best sample by golden section.
inline double periodic_max(const std::function<double(double)>& f, int samples) {
    const double h = 2.0 * pi / samples;
    int best = 0;
    double fbest = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const double v = f(i * h);
        if (v > fbest) { fbest = v; best = i; }
    }
    return std::max(fbest, golden_max(f, (best - 1) * h, (best + 1) * h));
}

}  // namespace detail

/// Band extrema and maximal group velocity by dense sampling plus golden-section refinement.
inline BandInfo band_info(const HoppingKernel& kernel, int samples = 4096) {
    if (!kernel.hermitian()) throw InvalidArgument("band_info: kernel is not hermitian");
    samples = std::max(samples, 4096);
    const double e_max = detail::periodic_max([&](double q) { return band_eval(kernel, q).energy; }, samples);
    const double e_min = -detail::periodic_max([&](double q) { return -band_eval(kernel, q).energy; }, samples);
    const double v_max =
        detail::periodic_max([&](double q) { return std::abs(band_eval(kernel, q).group_velocity); }, samples);
    return {e_min, e_max, e_max - e_min, v_max};
}

/// Square lattice, E = -2 kappa (cos qx + cos qy): band [-4k, 4k]; v_max is the
/// largest |grad E| = 2 sqrt(2) kappa.
inline BandInfo band_info_square(double kappa) {
    return {-4.0 * kappa, 4.0 * kappa, 8.0 * kappa, 2.0 * std::sqrt(2.0) * kappa};
}

// ---------------------------------------------------------------------------
// Complex Bloch wavenumbers
// ---------------------------------------------------------------------------

/// One solution of E(Q) = E'. With z = exp(-iQ) the Bloch factor is
/// exp(iQn) = z^{-n}, so |z| > 1 decays towards n -> +inf.
struct BlochRoot {
    cplx z;
    cplx wavenumber;
    double decay_rate = 0.0;  // |ln|z||
    bool decays_right = false;
};

struct ComplexBlochSolution {
    double energy = 0.0;
    std::vector<BlochRoot> roots;
    double decay_rate_right = std::numeric_limits<double>::infinity();
    double decay_rate_left = std::numeric_limits<double>::infinity();
    double max_residual = 0.0;  // max |E(Q) - E'|
};

/// Roots of c[0] + c[1] z + ... + c[d] z^d via companion-matrix eigenvalues,
/// polished by Newton iterations.
inline std::vector<cplx> polynomial_roots(std::vector<cplx> c) {
    while (!c.empty() && c.back() == cplx{}) c.pop_back();
    if (c.size() < 2) return {};
    const int d = static_cast<int>(c.size()) - 1;
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(d, d);
    for (int i = 1; i < d; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < d; ++i) companion(i, d - 1) = -c[i] / c[d];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
    if (solver.info() != Eigen::Success) throw Error("polynomial_roots: eigenvalue solver failed");
    std::vector<cplx> roots(solver.eigenvalues().data(), solver.eigenvalues().data() + d);
    for (auto& z : roots) {
        for (int it = 0; it < 3; ++it) {
            cplx p = c[d], dp{};
            for (int k = d - 1; k >= 0; --k) {
                dp = dp * z + p;
                p = p * z + c[k];
            }
            if (dp == cplx{}) break;
            const cplx step = p / dp;
            if (!std::isfinite(std::abs(step))) break;
            z -= step;
        }
    }
    return roots;
}

/// Solves E(Q) = energy for an energy strictly outside the band.
inline ComplexBlochSolution complex_bloch_roots(const HoppingKernel& kernel, double energy) {
    const BandInfo band = band_info(kernel);
    const double guard = 1e-12 * (1.0 + band.width);
    if (energy >= band.e_min - guard && energy <= band.e_max + guard)
        throw InvalidArgument("complex_bloch_roots: energy lies inside the band");

    // z^L (sum_l kappa_l z^l + E') = 0
    const int L = kernel.range();
    std::vector<cplx> c(2 * L + 1);
    for (const auto& [l, k] : kernel.terms()) c[l + L] += k;
    c[L] += energy;
    // z = 0 is never a Bloch root; drop those factors.
    std::size_t low = 0;
    while (low < c.size() && c[low] == cplx{}) ++low;
    c.erase(c.begin(), c.begin() + static_cast<long>(low));

    ComplexBlochSolution sol;
    sol.energy = energy;
    for (cplx z : polynomial_roots(c)) {
        BlochRoot r;
        r.z = z;
        r.wavenumber = I * std::log(z);
        r.decay_rate = std::abs(std::log(std::abs(z)));
        r.decays_right = std::abs(z) > 1.0;
        sol.max_residual = std::max(sol.max_residual, std::abs(band_eval_complex(kernel, r.wavenumber) - energy));
        if (r.decays_right)
            sol.decay_rate_right = std::min(sol.decay_rate_right, r.decay_rate);
        else
            sol.decay_rate_left = std::min(sol.decay_rate_left, r.decay_rate);
        sol.roots.push_back(r);
    }
    return sol;
}

/// Slowest spatial decay, towards +inf, of scattered waves produced when a
/// wave of energy `energy` absorbs modulation harmonics exp(i w t) for every w
/// in `frequencies` (scattered energy E - w).
inline double slowest_right_decay(const HoppingKernel& kernel, double energy,
                                  const std::vector<double>& frequencies) {
    double rate = std::numeric_limits<double>::infinity();
    for (double w : frequencies) rate = std::min(rate, complex_bloch_roots(kernel, energy - w).decay_rate_right);
    return rate;
}

/// Uniform grid over [w0, w0 + span_factor * bandwidth].
inline std::vector<double> decay_frequency_grid(double omega0, double bandwidth, int count = 401,
                                                double span_factor = 10.0) {
    std::vector<double> g(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        g[static_cast<std::size_t>(i)] = omega0 + span_factor * bandwidth * i / std::max(1, count - 1);
    return g;
}

}  // namespace tbscat
