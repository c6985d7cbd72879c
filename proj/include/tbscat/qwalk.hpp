#pragma once

// Discrete-time walk of light in two coupled fibre loops:
//
//     u'_n = [cos(b) u_{n+1} + i sin(b) v_{n+1}] exp(-2i V_n^m)
//     v'_n =  cos(b) v_{n-1} + i sin(b) u_{n-1}
//
// with V_n^m = R(m) P_n. For rho = pi/2 - b << 1 the even and odd parts of u
// follow two tight-binding lattices with hopping rho/2 of opposite sign.

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "tbscat/core.hpp"
#include "tbscat/evolution.hpp"
#include "tbscat/lattice.hpp"

namespace tbscat {

struct QWalkConfig {
    double beta = pi / 2;
    long site_first = -75;
    long site_last = 75;
    std::map<long, cplx> profile;  // P_n
    Modulation modulation;         // R, sampled at integer m

    double rho() const { return pi / 2 - beta; }
    std::size_t size() const { return static_cast<std::size_t>(site_last - site_first + 1); }
    std::size_t index(long n) const { return static_cast<std::size_t>(n - site_first); }

    void validate() const {
        if (site_last <= site_first) throw InvalidArgument("qwalk: empty site range");
        if (!std::isfinite(beta)) throw InvalidArgument("qwalk: beta must be finite");
        for (const auto& [n, p] : profile)
            if (n < site_first || n > site_last) throw SupportViolation("qwalk: potential outside the site range");
    }

    /// P_n = amplitude * exp(-(n/width)^2), truncated below `cutoff`.
    static std::map<long, cplx> gaussian_profile(double amplitude, double width, double cutoff = 1e-16) {
        const long reach = static_cast<long>(std::floor(width * std::sqrt(-std::log(cutoff))));
        std::map<long, cplx> p;
        for (long n = -reach; n <= reach; ++n) {
            const double x = static_cast<double>(n) / width;
            p[n] = amplitude * std::exp(-x * x);
        }
        return p;
    }
};

struct QWalkState {
    std::vector<cplx> u;
    std::vector<cplx> v;
    long step = 0;

    double intensity() const {
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) s += std::norm(u[i]) + std::norm(v[i]);
        return s;
    }
};

inline QWalkState qwalk_delta_state(const QWalkConfig& cfg, long site) {
    if (site < cfg.site_first || site > cfg.site_last) throw InvalidArgument("qwalk: start site outside range");
    QWalkState s{std::vector<cplx>(cfg.size()), std::vector<cplx>(cfg.size()), 0};
    s.u[cfg.index(site)] = 1.0;
    return s;
}

/// One step of the map; neighbours beyond the range count as zero.
inline QWalkState qwalk_step(const QWalkState& s, const QWalkConfig& cfg) {
    const std::size_t n = cfg.size();
    if (s.u.size() != n || s.v.size() != n) throw InvalidArgument("qwalk_step: state size does not match range");
    const double c = std::cos(cfg.beta), sn = std::sin(cfg.beta);
    QWalkState out{std::vector<cplx>(n), std::vector<cplx>(n), s.step + 1};
    for (std::size_t i = 0; i + 1 < n; ++i) out.u[i] = c * s.u[i + 1] + I * sn * s.v[i + 1];
    for (std::size_t i = 1; i < n; ++i) out.v[i] = c * s.v[i - 1] + I * sn * s.u[i - 1];
    if (!cfg.profile.empty()) {
        const cplx r = cfg.modulation(static_cast<double>(s.step));
        for (const auto& [site, p] : cfg.profile) out.u[cfg.index(site)] *= std::exp(-2.0 * I * r * p);
    }
    return out;
}

/// States for m = 0..steps.
inline std::vector<QWalkState> qwalk_run(const QWalkConfig& cfg, QWalkState s, long steps) {
    cfg.validate();
    std::vector<QWalkState> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    out.push_back(s);
    for (long m = 0; m < steps; ++m) out.push_back(qwalk_step(out.back(), cfg));
    return out;
}

// ---------------------------------------------------------------------------
// Quasienergies
// ---------------------------------------------------------------------------

struct Quasienergy {
    double plus = 0.0;
    double minus = 0.0;
};

inline Quasienergy quasienergy(double beta, double q) {
    const double e = std::acos(std::clamp(std::cos(beta) * std::cos(q), -1.0, 1.0));
    return {e, -e};
}

/// Small-rho form E = +-(pi/2 - rho cos q).
inline Quasienergy quasienergy_approx(double beta, double q) {
    const double e = pi / 2 - (pi / 2 - beta) * std::cos(q);
    return {e, -e};
}

/// Width of each quasienergy band, pi - 2 beta = 2 rho.
inline double qwalk_bandwidth(double beta) { return std::abs(pi - 2.0 * beta); }

// ---------------------------------------------------------------------------
// Error field
// ---------------------------------------------------------------------------

/// I_n^m = |u - u~|^2 + |v - v~|^2, indexed [m][site index].
inline std::vector<std::vector<double>> qwalk_error(const std::vector<QWalkState>& a, const std::vector<QWalkState>& b) {
    if (a.size() != b.size()) throw InvalidArgument("qwalk_error: step counts differ");
    std::vector<std::vector<double>> out(a.size());
    for (std::size_t m = 0; m < a.size(); ++m) {
        if (a[m].u.size() != b[m].u.size()) throw InvalidArgument("qwalk_error: site ranges differ");
        out[m].resize(a[m].u.size());
        for (std::size_t i = 0; i < a[m].u.size(); ++i)
            out[m][i] = std::norm(a[m].u[i] - b[m].u[i]) + std::norm(a[m].v[i] - b[m].v[i]);
    }
    return out;
}

/// Max of I over sites with |n - center| > radius, relative to the peak intensity
/// |u|^2 + |v|^2 of the free walk.
inline double qwalk_far_field(const std::vector<std::vector<double>>& err, const std::vector<QWalkState>& free_walk,
                              const QWalkConfig& cfg, long center, long radius) {
    double peak = 0.0, far = 0.0;
    for (const auto& s : free_walk)
        for (std::size_t i = 0; i < s.u.size(); ++i) peak = std::max(peak, std::norm(s.u[i]) + std::norm(s.v[i]));
    for (const auto& row : err)
        for (std::size_t i = 0; i < row.size(); ++i) {
            const long n = cfg.site_first + static_cast<long>(i);
            if (std::abs(n - center) > radius) far = std::max(far, row[i]);
        }
    return peak > 0.0 ? far / peak : 0.0;
}

/// Largest number of sites by which the support of (u, v) grows in a single step.
inline long qwalk_max_support_growth(const std::vector<QWalkState>& walk) {
    auto bounds = [](const QWalkState& s) {
        long lo = -1, hi = -1;
        for (std::size_t i = 0; i < s.u.size(); ++i)
            if (s.u[i] != cplx{} || s.v[i] != cplx{}) {
                if (lo < 0) lo = static_cast<long>(i);
                hi = static_cast<long>(i);
            }
        return std::pair{lo, hi};
    };
    long growth = 0;
    for (std::size_t m = 1; m < walk.size(); ++m) {
        const auto [a0, b0] = bounds(walk[m - 1]);
        const auto [a1, b1] = bounds(walk[m]);
        if (a0 < 0 || a1 < 0) continue;
        growth = std::max({growth, a0 - a1, b1 - b0});
    }
    return growth;
}

// ---------------------------------------------------------------------------
// Continuous-time limit
// ---------------------------------------------------------------------------

/// Pair of lattices i dpsi+-/dt = +-kappa (psi_{n+1} + psi_{n-1}) + V_n(t) psi+-,
/// kappa = rho/2, stacked as [psi+, psi-].
class QWalkContinuumSystem {
public:
    explicit QWalkContinuumSystem(const QWalkConfig& cfg) : cfg_(cfg), kappa_(cfg.rho() / 2) {
        for (const auto& [site, p] : cfg_.profile) pot_.emplace_back(cfg_.index(site), p);
    }

    std::size_t dimension() const { return 2 * cfg_.size(); }
    double kappa() const { return kappa_; }

    void operator()(double t, std::span<const cplx> y, std::span<cplx> dy) const {
        const std::size_t n = cfg_.size();
        const cplx r = cfg_.modulation(t);
        for (int b = 0; b < 2; ++b) {
            const std::size_t off = b * n;
            const cplx f = (b == 0 ? -I : I) * kappa_;
            for (std::size_t i = 0; i < n; ++i) {
                cplx s{};
                if (i > 0) s += y[off + i - 1];
                if (i + 1 < n) s += y[off + i + 1];
                dy[off + i] = f * s;
            }
            for (const auto& [i, p] : pot_) dy[off + i] -= I * r * p * y[off + i];
        }
    }

private:
    QWalkConfig cfg_;
    double kappa_;
    std::vector<std::pair<std::size_t, cplx>> pot_;
};

struct ContinuousLimitReport {
    double max_discrepancy = 0.0;  // max over m, n of |u_exact - u_reconstructed|
    double peak_amplitude = 0.0;   // max over m, n of |u_exact|
    double relative_discrepancy = 0.0;
    std::vector<double> per_step;  // max over n at each m
    double kappa = 0.0;
};

namespace detail {

/// u predicted at t = 1 from psi+- = (u0 +- d)/2.
inline std::vector<cplx> continuum_u1(const QWalkContinuumSystem& sys, const std::vector<cplx>& u0,
                                      const std::vector<cplx>& d, const IntegratorConfig& icfg) {
    const std::size_t n = u0.size();
    std::vector<cplx> y(2 * n), u1(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = 0.5 * (u0[i] + d[i]);
        y[n + i] = 0.5 * (u0[i] - d[i]);
    }
    integrate(sys, y, 0.0, {1.0}, icfg, [&](std::size_t, double, std::span<const cplx> z) {
        for (std::size_t i = 0; i < n; ++i) u1[i] = I * (z[i] - z[n + i]);
    });
    return u1;
}

}  // namespace detail

/// Evolves the exact walk and the continuum pair, rebuilds u^m = i^m (psi+ + (-1)^m psi-)
/// and measures the difference. psi+(0) + psi-(0) = u^0, and psi+(0) - psi-(0) is solved
/// for so that the rebuilt field also reproduces the exact u^1.
inline ContinuousLimitReport continuous_limit_check(const QWalkConfig& cfg, const QWalkState& start, long m_max,
                                                    const IntegratorConfig& icfg = {1e-12, 1e-15, 1e-3, 1e-12, 0.5,
                                                                                    0.9}) {
    if (m_max < 1) throw InvalidArgument("continuous_limit_check: m_max must be >= 1");
    const auto walk = qwalk_run(cfg, start, m_max);
    const std::size_t n = cfg.size();
    const QWalkContinuumSystem sys(cfg);

    // u1 = i D + O(rho) D + ..., so D <- D - i (u1 - u1(D)) contracts at rate O(rho).
    std::vector<cplx> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = -I * walk[1].u[i];
    for (int it = 0; it < 60; ++it) {
        const auto u1 = detail::continuum_u1(sys, walk[0].u, d, icfg);
        double change = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const cplx step = -I * (walk[1].u[i] - u1[i]);
            d[i] += step;
            change = std::max(change, std::abs(step));
            scale = std::max(scale, std::abs(d[i]));
        }
        if (change <= 1e-14 * std::max(scale, 1.0)) break;
    }

    std::vector<cplx> y0(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        y0[i] = 0.5 * (walk[0].u[i] + d[i]);
        y0[n + i] = 0.5 * (walk[0].u[i] - d[i]);
    }
    std::vector<double> times(static_cast<std::size_t>(m_max) + 1);
    for (long m = 0; m <= m_max; ++m) times[static_cast<std::size_t>(m)] = static_cast<double>(m);

    ContinuousLimitReport rep;
    rep.kappa = sys.kappa();
    integrate(sys, y0, 0.0, times, icfg, [&](std::size_t m, double, std::span<const cplx> y) {
        const cplx phase = std::pow(I, static_cast<int>(m % 4));
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        double dev = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            dev = std::max(dev, std::abs(walk[m].u[i] - phase * (y[i] + sign * y[n + i])));
        rep.per_step.push_back(dev);
        rep.max_discrepancy = std::max(rep.max_discrepancy, dev);
    });
    for (const auto& st : walk)
        for (cplx z : st.u) rep.peak_amplitude = std::max(rep.peak_amplitude, std::abs(z));
    rep.relative_discrepancy = rep.peak_amplitude > 0.0 ? rep.max_discrepancy / rep.peak_amplitude : 0.0;
    return rep;
}

/// Scales rho and the potential amplitude by `factor`; the modulation frequencies too
/// when `scale_frequencies` is set.
inline QWalkConfig scale_continuum(const QWalkConfig& cfg, double factor, bool scale_frequencies = false) {
    QWalkConfig c = cfg;
    c.beta = pi / 2 - factor * cfg.rho();
    for (auto& [n, p] : c.profile) p *= factor;
    if (scale_frequencies) {
        auto terms = cfg.modulation.terms();
        for (auto& h : terms) h.frequency *= factor;
        c.modulation = Modulation(std::move(terms));
    }
    return c;
}

struct OrderCheck {
    ContinuousLimitReport coarse;
    ContinuousLimitReport fine;
    double ratio = 0.0;  // coarse / fine relative discrepancy
};

/// Discrepancy at rho and at rho/2 with the potential halved, both over `m_max` steps.
inline OrderCheck continuous_limit_order(const QWalkConfig& cfg, const QWalkState& start, long m_max,
                                         bool scale_frequencies = false) {
    OrderCheck oc;
    oc.coarse = continuous_limit_check(cfg, start, m_max);
    oc.fine = continuous_limit_check(scale_continuum(cfg, 0.5, scale_frequencies), start, m_max);
    oc.ratio = oc.fine.relative_discrepancy > 0.0 ? oc.coarse.relative_discrepancy / oc.fine.relative_discrepancy : 0.0;
    return oc;
}

}  // namespace tbscat
