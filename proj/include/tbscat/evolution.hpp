#pragma once

// Adaptive Dormand-Prince 5(4) integration of linear lattice ODE systems.
//
// A System is any callable `void(double t, std::span<const cplx> y, std::span<cplx> dy)`
// with a `dimension()` member.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <sstream>
#include <vector>

#include "tbscat/core.hpp"
#include "tbscat/lattice.hpp"

namespace tbscat {

struct IntegratorConfig {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double h_init = 1e-3;
    double h_min = 1e-12;
    double h_max = 0.5;
    double safety = 0.9;

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw InvalidArgument("integrator: tolerances must be positive");
        if (!(h_min > 0.0) || !(h_min <= h_init) || !(h_init <= h_max))
            throw InvalidArgument("integrator: need 0 < h_min <= h_init <= h_max");
        if (!(safety > 0.0 && safety < 1.0)) throw InvalidArgument("integrator: safety must lie in (0, 1)");
    }

    IntegratorConfig with_tolerance(double rel) const {
        IntegratorConfig c = *this;
        c.rel_tol = rel;
        return c;
    }
};

struct IntegrationStats {
    std::size_t steps = 0;
    std::size_t rejected = 0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<StateVector> states;
    std::size_t steps = 0;
    std::size_t rejected = 0;
};

/// Called once per output time with (output index, t, state).
using SnapshotObserver = std::function<void(std::size_t, double, std::span<const cplx>)>;

namespace detail {

struct DormandPrince {
    static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    // fifth-order minus embedded fourth-order weights
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
};

}  // namespace detail

/// Integrates from t_start through every time in `outputs` (sorted, >= t_start),
/// stepping exactly onto each one and handing the state to `observer`.
template <class System>
IntegrationStats integrate(const System& system, std::vector<cplx> y, double t_start,
                           const std::vector<double>& outputs, const IntegratorConfig& cfg,
                           const SnapshotObserver& observer) {
    cfg.validate();
    using DP = detail::DormandPrince;
    const std::size_t n = y.size();
    if (n != system.dimension()) throw InvalidArgument("integrate: state size does not match system");
    for (cplx z : y)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw InvalidArgument("integrate: initial state is not finite");
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        if (outputs[i] < t_start || (i > 0 && outputs[i] <= outputs[i - 1]))
            throw InvalidArgument("integrate: output times must be strictly increasing and >= t_start");
    }

    std::vector<cplx> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n);
    IntegrationStats stats;
    double t = t_start;
    double h = std::min(cfg.h_init, cfg.h_max);
    double err_prev = 1e-4;
    bool have_k1 = false;

    const double alpha = 0.7 / 5.0, beta = 0.4 / 5.0;
    const double fac_min = 0.2, fac_max = 5.0;

    for (std::size_t oi = 0; oi < outputs.size(); ++oi) {
        const double target = outputs[oi];
        while (t < target) {
            if (!have_k1) {
                system(t, y, k1);
                have_k1 = true;
            }
            const double remaining = target - t;
            const bool clamped = h >= remaining;
            const double hs = clamped ? remaining : h;

            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * DP::a21 * k1[i];
            system(t + DP::c[1] * hs, tmp, k2);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hs * (DP::a31 * k1[i] + DP::a32 * k2[i]);
            system(t + DP::c[2] * hs, tmp, k3);
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = y[i] + hs * (DP::a41 * k1[i] + DP::a42 * k2[i] + DP::a43 * k3[i]);
            system(t + DP::c[3] * hs, tmp, k4);
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = y[i] + hs * (DP::a51 * k1[i] + DP::a52 * k2[i] + DP::a53 * k3[i] + DP::a54 * k4[i]);
            system(t + DP::c[4] * hs, tmp, k5);
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = y[i] + hs * (DP::a61 * k1[i] + DP::a62 * k2[i] + DP::a63 * k3[i] + DP::a64 * k4[i] +
                                      DP::a65 * k5[i]);
            system(t + hs, tmp, k6);
            for (std::size_t i = 0; i < n; ++i)
                ynew[i] = y[i] + hs * (DP::b1 * k1[i] + DP::b3 * k3[i] + DP::b4 * k4[i] + DP::b5 * k5[i] +
                                       DP::b6 * k6[i]);
            system(t + hs, ynew, k7);

            double err = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const cplx e = hs * (DP::e1 * k1[i] + DP::e3 * k3[i] + DP::e4 * k4[i] + DP::e5 * k5[i] +
                                     DP::e6 * k6[i] + DP::e7 * k7[i]);
                const double scale = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
                const double r = std::abs(e) / scale;
                if (!(r <= err)) err = r;  // keeps a NaN, which std::max would drop
            }

            if (!std::isfinite(err)) {
                ++stats.rejected;
                h = hs * fac_min;
                if (h < cfg.h_min) {
                    std::ostringstream msg;
                    msg << "integrate: non-finite state at t = " << t << " after " << stats.steps << " steps";
                    throw IntegrationError(msg.str());
                }
                continue;
            }

            if (err <= 1.0) {
                t = clamped ? target : t + hs;
                std::swap(y, ynew);
                std::swap(k1, k7);
                ++stats.steps;
                double fac = cfg.safety * std::pow(std::max(err, 1e-10), -alpha) * std::pow(err_prev, beta);
                fac = std::clamp(fac, fac_min, fac_max);
                // A step shortened to land on an output time does not shrink the natural step.
                h = clamped ? std::max(h, hs * fac) : hs * fac;
                h = std::min(h, cfg.h_max);
                err_prev = std::max(err, 1e-4);
            } else {
                ++stats.rejected;
                h = hs * std::max(fac_min, cfg.safety * std::pow(err, -1.0 / 5.0));
                if (h < cfg.h_min) {
                    std::ostringstream msg;
                    msg << "integrate: step size underflow (h = " << h << ") at t = " << t << " after "
                        << stats.steps << " steps, " << stats.rejected << " rejected";
                    throw IntegrationError(msg.str());
                }
            }
        }
        observer(oi, target, y);
    }
    return stats;
}

/// Output times: t_start, every snapshot strictly inside (t_start, t_end), and t_end.
inline std::vector<double> snapshot_grid(double t_start, double t_end, const std::vector<double>& snapshots) {
    if (t_end < t_start) throw InvalidArgument("snapshot_grid: t_end < t_start");
    std::vector<double> times{t_start};
    std::vector<double> s = snapshots;
    std::sort(s.begin(), s.end());
    for (double x : s) {
        if (x < t_start || x > t_end) throw InvalidArgument("snapshot_grid: snapshot outside the time span");
        if (x > times.back()) times.push_back(x);
    }
    if (t_end > times.back()) times.push_back(t_end);
    return times;
}

/// Uniformly spaced times t_start, t_start + dt, ..., t_end.
inline std::vector<double> uniform_times(double t_start, double t_end, std::size_t intervals) {
    std::vector<double> t(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i)
        t[i] = t_start + (t_end - t_start) * static_cast<double>(i) / static_cast<double>(intervals);
    return t;
}

/// Time evolution with snapshots stored in a Trajectory; first and last
/// snapshots are the span endpoints.
template <class System>
Trajectory evolve(const System& system, const StateVector& psi0, double t_start, double t_end,
                  const std::vector<double>& snapshots, const IntegratorConfig& cfg) {
    if (!psi0.finite()) throw InvalidArgument("evolve: initial state is not finite");
    Trajectory traj;
    const auto times = snapshot_grid(t_start, t_end, snapshots);
    traj.times = times;
    traj.states.reserve(times.size());
    const auto stats = integrate(system, psi0.amplitudes, t_start, times, cfg,
                                 [&](std::size_t, double t, std::span<const cplx> y) {
                                     traj.states.push_back({std::vector<cplx>(y.begin(), y.end()), t});
                                 });
    traj.steps = stats.steps;
    traj.rejected = stats.rejected;
    return traj;
}

inline Trajectory evolve(const Lattice1D& lattice, const Perturbation* pert, const StateVector& psi0,
                         double t_start, double t_end, const std::vector<double>& snapshots,
                         const IntegratorConfig& cfg) {
    if (psi0.size() != static_cast<std::size_t>(lattice.size()))
        throw InvalidArgument("evolve: state length does not match lattice");
    if (pert) return evolve(LatticeSystem1D(lattice, *pert), psi0, t_start, t_end, snapshots, cfg);
    return evolve(LatticeSystem1D(lattice), psi0, t_start, t_end, snapshots, cfg);
}

inline Trajectory evolve(const Lattice2D& lattice, const Perturbation2D* pert, const StateVector& psi0,
                         double t_start, double t_end, const std::vector<double>& snapshots,
                         const IntegratorConfig& cfg) {
    if (psi0.size() != lattice.size()) throw InvalidArgument("evolve: state length does not match lattice");
    if (pert) return evolve(LatticeSystem2D(lattice, *pert), psi0, t_start, t_end, snapshots, cfg);
    return evolve(LatticeSystem2D(lattice), psi0, t_start, t_end, snapshots, cfg);
}

/// Largest |a - b| over all snapshots and sites of two trajectories with equal shape.
inline double max_deviation(const Trajectory& a, const Trajectory& b) {
    if (a.states.size() != b.states.size()) throw InvalidArgument("max_deviation: snapshot count differs");
    double d = 0.0;
    for (std::size_t s = 0; s < a.states.size(); ++s) {
        const auto& x = a.states[s].amplitudes;
        const auto& y = b.states[s].amplitudes;
        if (x.size() != y.size()) throw InvalidArgument("max_deviation: state size differs");
        for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(x[i] - y[i]));
    }
    return d;
}

struct ConvergenceRow {
    double rel_tol = 0.0;
    double max_deviation = 0.0;
    std::size_t steps = 0;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;  // ordered from loosest to tightest tolerance
    bool monotone = true;              // deviations non-increasing as the tolerance tightens
};

/// Reruns `evolve` at each tolerance and measures the deviation from `reference`,
/// or from the tightest run when no reference is given.
template <class System>
ConvergenceTable convergence_probe(const System& system, const StateVector& psi0, double t_start, double t_end,
                                   const std::vector<double>& snapshots, const IntegratorConfig& cfg,
                                   std::vector<double> tolerances, const Trajectory* reference = nullptr) {
    if (tolerances.empty()) throw InvalidArgument("convergence_probe: no tolerances");
    std::sort(tolerances.begin(), tolerances.end(), std::greater<>());
    std::vector<Trajectory> runs;
    for (double tol : tolerances) runs.push_back(evolve(system, psi0, t_start, t_end, snapshots, cfg.with_tolerance(tol)));
    const Trajectory& ref = reference ? *reference : runs.back();
    ConvergenceTable table;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        table.rows.push_back({tolerances[i], max_deviation(runs[i], ref), runs[i].steps});
        if (i > 0 && table.rows[i].max_deviation > table.rows[i - 1].max_deviation) table.monotone = false;
    }
    return table;
}

}  // namespace tbscat
