#pragma once

// Wave-packet scattering runs against a free reference, the invisibility
// predicate, and the forced scattered-field picture
//
//     psi_n(t) = [exp(iqn) + phi_n(t)] exp(-iEt),
//     i dphi_n/dt = -E phi_n - sum_l kappa_l phi_{n-l} + sum_l V_{n,l}(t) (phi_l + exp(iql)),
//
// solved from phi = 0 on a window with absorbing layers.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tbscat/core.hpp"
#include "tbscat/dispersion.hpp"
#include "tbscat/evolution.hpp"
#include "tbscat/lattice.hpp"
#include "tbscat/spectral.hpp"

namespace tbscat {

// ---------------------------------------------------------------------------
// Wave packets
// ---------------------------------------------------------------------------

struct WavePacketSpec {
    double center = 0.0;
    double width = 1.0;
    double carrier = 0.0;
};

struct WavePacketSpec2D {
    double center_x = 0.0;
    double center_y = 0.0;
    double width = 1.0;
    double carrier_x = 0.0;
    double carrier_y = 0.0;
};

/// Relative amplitude a 2D packet may have on the lattice border.
inline constexpr double packet_edge_tolerance = 1e-9;

/// psi_n = exp(-((n - n0)/w)^2 + i q n), unnormalised. The 5w core must lie in the interior.
inline StateVector gaussian_packet(const Lattice1D& lattice, const WavePacketSpec& spec) {
    if (!(spec.width > 0.0)) throw InvalidArgument("gaussian_packet: width must be positive");
    const double lo = spec.center - 5.0 * spec.width, hi = spec.center + 5.0 * spec.width;
    if (lo < static_cast<double>(lattice.interior_first()) || hi > static_cast<double>(lattice.interior_last()))
        throw SupportViolation("gaussian_packet: packet core [" + std::to_string(lo) + ", " + std::to_string(hi) +
                               "] leaves the lattice interior");
    StateVector s{std::vector<cplx>(static_cast<std::size_t>(lattice.size())), 0.0};
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double n = static_cast<double>(lattice.site(i));
        const double x = (n - spec.center) / spec.width;
        s.amplitudes[i] = std::exp(cplx{-x * x, spec.carrier * n});
    }
    return s;
}

/// Unit-norm 2D Gaussian packet; its border amplitude must stay below 1e-9 of the peak.
inline StateVector gaussian_packet(const Lattice2D& lattice, const WavePacketSpec2D& spec) {
    if (!(spec.width > 0.0)) throw InvalidArgument("gaussian_packet: width must be positive");
    StateVector s{std::vector<cplx>(lattice.size()), 0.0};
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto [n, m] = lattice.site(i);
        const double x = (static_cast<double>(n) - spec.center_x) / spec.width;
        const double y = (static_cast<double>(m) - spec.center_y) / spec.width;
        s.amplitudes[i] = std::exp(cplx{-x * x - y * y, spec.carrier_x * n + spec.carrier_y * m});
    }
    if (edge_ratio(lattice, s.amplitudes) > packet_edge_tolerance)
        throw SupportViolation("gaussian_packet: 2D packet is not negligible on the lattice border");
    const double nrm = norm2(s.amplitudes);
    for (auto& z : s.amplitudes) z /= nrm;
    return s;
}

// ---------------------------------------------------------------------------
// Invisibility experiments
// ---------------------------------------------------------------------------

enum class Verdict { invisible, visible };

inline const char* to_string(Verdict v) { return v == Verdict::invisible ? "invisible" : "visible"; }

struct InvisibilityOptions {
    double threshold = 1e-2;           // relative to max |psi_free(t_end)|
    double overlap_tolerance = 1e-10;  // max |psi0_n| |T_n| relative to max |psi0| max |T|
};

struct ExperimentResult {
    Trajectory trajectory;  // with the perturbation
    Trajectory reference;   // free evolution
    std::vector<double> error_series;  // I(t) = max_site |psi - psi_free| per snapshot
    std::vector<double> profile;       // |psi(t_end)|
    std::vector<double> profile_free;  // |psi_free(t_end)|
    double final_error = 0.0;
    double reference_peak = 0.0;
    double relative_error = 0.0;  // final_error / reference_peak
    double initial_overlap = 0.0;
    double max_edge_ratio = 0.0;
    bool edge_tripped = false;  // verdict not trustworthy when set
    Verdict verdict = Verdict::visible;
};

/// I per snapshot for two trajectories with the same snapshot times.
inline std::vector<double> error_series(const Trajectory& a, const Trajectory& b) {
    if (a.times != b.times) throw InvalidArgument("error_series: snapshot times differ");
    std::vector<double> out;
    for (std::size_t s = 0; s < a.states.size(); ++s) {
        const auto& x = a.states[s].amplitudes;
        const auto& y = b.states[s].amplitudes;
        double d = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(x[i] - y[i]));
        out.push_back(d);
    }
    return out;
}

namespace detail {

inline void finish_experiment(ExperimentResult& r, double threshold,
                              const std::function<double(std::span<const cplx>)>& edge) {
    r.error_series = error_series(r.trajectory, r.reference);
    for (const auto* tr : {&r.trajectory, &r.reference})
        for (const auto& s : tr->states) r.max_edge_ratio = std::max(r.max_edge_ratio, edge(s.amplitudes));
    r.edge_tripped = r.max_edge_ratio > edge_monitor_threshold;
    const auto& fin = r.trajectory.states.back().amplitudes;
    const auto& ref = r.reference.states.back().amplitudes;
    for (std::size_t i = 0; i < fin.size(); ++i) {
        r.profile.push_back(std::abs(fin[i]));
        r.profile_free.push_back(std::abs(ref[i]));
    }
    r.final_error = r.error_series.back();
    r.reference_peak = max_abs(ref);
    r.relative_error = r.reference_peak > 0.0 ? r.final_error / r.reference_peak : 0.0;
    r.verdict = r.final_error < threshold * r.reference_peak ? Verdict::invisible : Verdict::visible;
}

}  // namespace detail

/// Runs the perturbed and the free lattice from the same packet and compares them.
/// `pert` may be null (zero perturbation).
inline ExperimentResult run_invisibility_experiment(const Lattice1D& lattice, const Perturbation* pert,
                                                    const WavePacketSpec& packet, double t_end,
                                                    const std::vector<double>& snapshots, const IntegratorConfig& cfg,
                                                    const InvisibilityOptions& opt = {}) {
    const StateVector psi0 = gaussian_packet(lattice, packet);
    ExperimentResult r;
    const double peak0 = max_abs(psi0.amplitudes);
    if (pert) {
        double tmax = 0.0;
        for (const auto& e : pert->entries()) tmax = std::max(tmax, std::abs(e.value));
        for (const auto& e : pert->entries())
            for (long n : {e.row, e.col})
                if (lattice.contains(n))
                    r.initial_overlap = std::max(
                        r.initial_overlap, std::abs(psi0.amplitudes[lattice.index(n)]) * std::abs(e.value) / (peak0 * tmax));
        if (r.initial_overlap > opt.overlap_tolerance)
            throw SupportViolation("run_invisibility_experiment: packet overlaps the perturbation at t = 0");
    }
    r.trajectory = evolve(lattice, pert, psi0, 0.0, t_end, snapshots, cfg);
    r.reference = evolve(lattice, nullptr, psi0, 0.0, t_end, snapshots, cfg);
    detail::finish_experiment(r, opt.threshold, [&](std::span<const cplx> y) { return edge_ratio(lattice, y); });
    return r;
}

inline ExperimentResult run_invisibility_experiment(const Lattice2D& lattice, const Perturbation2D* pert,
                                                    const WavePacketSpec2D& packet, double t_end,
                                                    const std::vector<double>& snapshots, const IntegratorConfig& cfg,
                                                    const InvisibilityOptions& opt = {}) {
    const StateVector psi0 = gaussian_packet(lattice, packet);
    ExperimentResult r;
    const double peak0 = max_abs(psi0.amplitudes);
    if (pert) {
        double tmax = 0.0;
        for (const auto& e : pert->entries()) tmax = std::max(tmax, std::abs(e.value));
        for (const auto& e : pert->entries())
            if (lattice.contains(e.n, e.m))
                r.initial_overlap = std::max(r.initial_overlap, std::abs(psi0.amplitudes[lattice.index(e.n, e.m)]) *
                                                                    std::abs(e.value) / (peak0 * tmax));
        if (r.initial_overlap > opt.overlap_tolerance)
            throw SupportViolation("run_invisibility_experiment: packet overlaps the perturbation at t = 0");
    }
    r.trajectory = evolve(lattice, pert, psi0, 0.0, t_end, snapshots, cfg);
    r.reference = evolve(lattice, nullptr, psi0, 0.0, t_end, snapshots, cfg);
    detail::finish_experiment(r, opt.threshold, [&](std::span<const cplx> y) { return edge_ratio(lattice, y); });
    return r;
}

// ---------------------------------------------------------------------------
// Invisibility predicate
// ---------------------------------------------------------------------------

enum class InvisibilityGuarantee { guaranteed_invisible, not_guaranteed };

inline const char* to_string(InvisibilityGuarantee g) {
    return g == InvisibilityGuarantee::guaranteed_invisible ? "guaranteed-invisible" : "not-guaranteed";
}

/// One-sided spectra beyond the bandwidth cannot scatter into propagating waves.
inline InvisibilityGuarantee invisibility_predicate(const Modulation& mod, const BandInfo& band) {
    const auto s = mod.spectral_support();
    if (s.empty() || s.front() > band.width || s.back() < -band.width)
        return InvisibilityGuarantee::guaranteed_invisible;
    return InvisibilityGuarantee::not_guaranteed;
}

// ---------------------------------------------------------------------------
// Forced scattered field
// ---------------------------------------------------------------------------

struct ScatteredFieldOptions {
    double ramp_time = 8.0;       // erf switch-on time scale
    double taper_length = 5.0;    // forcing taper tanh(d / taper_length) from the absorber
    double output_dt = 0.05;      // probe sampling interval
    std::size_t full_every = 20;  // keep a full state every this many probe samples
    std::vector<long> probe_sites;
};

inline constexpr double absorber_saturation_limit = 0.1;

struct ScatteredField {
    double carrier = 0.0;
    double energy = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;
    double ramp_time = 0.0;
    std::vector<double> times;          // full-state snapshot times
    std::vector<StateVector> states;    // phi at those times
    std::vector<double> probe_times;    // uniform, output_dt apart
    std::vector<long> probe_sites;
    std::vector<std::vector<cplx>> probes;  // probes[k][j]: site k at probe_times[j]
    double absorber_edge_ratio = 0.0;
    bool absorber_saturated = false;
    std::vector<long> sites;  // lattice site labels, index-aligned with states
};

/// Smooth switch-on S(t) = erfc(-(t - t_c)/tau)/2 with t_c = t_start + 5 tau.
inline double switch_on(double t, double t_start, double tau) {
    if (tau <= 0.0) return 1.0;
    return 0.5 * std::erfc(-(t - (t_start + 5.0 * tau)) / tau);
}

/// Right-hand side for phi; the perturbation is multiplied by the switch-on.
class ScatteredFieldSystem {
public:
    ScatteredFieldSystem(Lattice1D lattice, const Perturbation& pert, double carrier, double t_start,
                         double ramp_time, double taper_length)
        : lattice_(std::move(lattice)),
          pert_(lattice_, pert),
          energy_(band_eval(lattice_.kernel(), carrier).energy),
          t_start_(t_start),
          ramp_(ramp_time) {
        if (!lattice_.absorber()) throw InvalidArgument("scattered field: lattice needs an absorbing boundary");
        const long n = lattice_.size();
        const long w = lattice_.absorber_width();
        forcing_.assign(static_cast<std::size_t>(n), cplx{});
        for (const auto& e : pert_.entries()) {
            const long col_site = lattice_.site(e.col);
            forcing_[e.row] += e.value * std::polar(1.0, carrier * static_cast<double>(col_site));
        }
        for (long i = 0; i < n; ++i) {
            const long d = std::min(i - w, n - 1 - w - i);
            const double taper = d <= 0 ? 0.0 : std::tanh(static_cast<double>(d) / taper_length);
            forcing_[static_cast<std::size_t>(i)] *= taper;
        }
    }

    std::size_t dimension() const { return static_cast<std::size_t>(lattice_.size()); }
    const Lattice1D& lattice() const { return lattice_; }
    double energy() const { return energy_; }
    double switch_value(double t) const { return switch_on(t, t_start_, ramp_); }
    const BoundPerturbation& perturbation() const { return pert_; }

    void operator()(double t, std::span<const cplx> y, std::span<cplx> dy) const {
        apply_free_1d(lattice_, y, dy);
        const cplx ie = I * energy_;
        for (std::size_t i = 0; i < y.size(); ++i) dy[i] += ie * y[i];
        const double s = switch_value(t);
        if (s == 0.0) return;
        pert_.accumulate(t, y, dy, s);
        const cplx f = -I * s * pert_.modulation()(t);
        for (std::size_t i = 0; i < y.size(); ++i)
            if (forcing_[i] != cplx{}) dy[i] += f * forcing_[i];
    }

private:
    Lattice1D lattice_;
    BoundPerturbation pert_;
    double energy_;
    double t_start_;
    double ramp_;
    std::vector<cplx> forcing_;
};

/// Integrates the forced system from phi(t_start) = 0. The carrier must lie in the band
/// (every real q does for a hermitian kernel).
inline ScatteredField scattered_field(const Lattice1D& lattice, const Perturbation& pert, double carrier,
                                      double t_start, double t_end, const IntegratorConfig& cfg,
                                      const ScatteredFieldOptions& opt = {}) {
    if (!(t_end > t_start)) throw InvalidArgument("scattered_field: need t_end > t_start");
    if (!(opt.output_dt > 0.0) || opt.full_every == 0) throw InvalidArgument("scattered_field: bad sampling options");
    const ScatteredFieldSystem sys(lattice, pert, carrier, t_start, opt.ramp_time, opt.taper_length);

    ScatteredField out;
    out.carrier = carrier;
    out.energy = sys.energy();
    out.t_start = t_start;
    out.t_end = t_end;
    out.ramp_time = opt.ramp_time;
    out.probe_sites = opt.probe_sites;
    for (long s : opt.probe_sites)
        if (!lattice.contains(s)) throw InvalidArgument("scattered_field: probe site outside the lattice");
    for (std::size_t i = 0; i < static_cast<std::size_t>(lattice.size()); ++i) out.sites.push_back(lattice.site(i));

    const auto intervals = static_cast<std::size_t>(std::llround((t_end - t_start) / opt.output_dt));
    out.probe_times = uniform_times(t_start, t_end, std::max<std::size_t>(intervals, 1));
    out.probes.assign(opt.probe_sites.size(), {});
    const std::size_t last = out.probe_times.size() - 1;

    const std::size_t w = static_cast<std::size_t>(lattice.absorber_width());
    const std::size_t n = static_cast<std::size_t>(lattice.size());
    integrate(sys, std::vector<cplx>(n), t_start, out.probe_times, cfg,
              [&](std::size_t j, double t, std::span<const cplx> y) {
                  for (std::size_t k = 0; k < opt.probe_sites.size(); ++k)
                      out.probes[k].push_back(y[lattice.index(opt.probe_sites[k])]);
                  if (j % opt.full_every == 0 || j == last) {
                      out.times.push_back(t);
                      out.states.push_back({std::vector<cplx>(y.begin(), y.end()), t});
                      const double peak = max_abs(y);
                      if (peak > 0.0) {
                          const double edge = std::max(std::abs(y[w]), std::abs(y[n - 1 - w]));
                          out.absorber_edge_ratio = std::max(out.absorber_edge_ratio, edge / peak);
                      }
                  }
              });
    out.absorber_saturated = out.absorber_edge_ratio > absorber_saturation_limit;
    return out;
}

/// Largest |phi| at least `gap` sites outside [support_first, support_last] relative to
/// the largest |phi| on the support, maximised over the stored snapshots.
inline double scattered_far_field_ratio(const ScatteredField& f, long support_first, long support_last, long gap,
                                        long window_first, long window_last) {
    double worst = 0.0;
    for (const auto& s : f.states) {
        double inside = 0.0, outside = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const long site = f.sites[i];
            if (site < window_first || site > window_last) continue;
            const double a = std::abs(s.amplitudes[i]);
            if (site >= support_first && site <= support_last) inside = std::max(inside, a);
            else if (site < support_first - gap || site > support_last + gap) outside = std::max(outside, a);
        }
        if (inside > 0.0) worst = std::max(worst, outside / inside);
    }
    return worst;
}

/// Substitutes psi = (exp(iqn) + phi) exp(-iEt) into the lattice equation with the
/// switched-on perturbation and returns the largest residual on sites in
/// [first, last], relative to max |psi|, at snapshot `k`.
inline double full_field_residual(const ScatteredFieldSystem& sys, const ScatteredField& f, std::size_t k,
                                  long first, long last) {
    const auto& lat = sys.lattice();
    const auto& phi = f.states.at(k).amplitudes;
    const double t = f.times.at(k);
    const std::size_t n = phi.size();
    std::vector<cplx> dphi(n), psi(n), dpsi(n);
    sys(t, phi, dphi);
    const cplx rot = std::polar(1.0, -f.energy * t);
    for (std::size_t i = 0; i < n; ++i)
        psi[i] = (std::polar(1.0, f.carrier * static_cast<double>(lat.site(i))) + phi[i]) * rot;

    const Lattice1D bare(lat.size(), lat.first_site(), lat.kernel());
    apply_free_1d(bare, psi, dpsi);
    sys.perturbation().accumulate(t, psi, dpsi, sys.switch_value(t));

    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const long s = lat.site(i);
        if (s < first || s > last) continue;
        const cplx from_phi =
            rot * (-I * f.energy * std::polar(1.0, f.carrier * static_cast<double>(s)) - I * f.energy * phi[i] + dphi[i]);
        res = std::max(res, std::abs(dpsi[i] - from_phi));
    }
    return res / max_abs(psi);
}

// ---------------------------------------------------------------------------
// Evanescence fit
// ---------------------------------------------------------------------------

enum class Side { left, right };

struct EvanescenceFit {
    double decay_rate = 0.0;
    double amplitude = 0.0;
    std::size_t samples = 0;
};

inline constexpr double evanescence_floor = 1e-13;

/// Least-squares fit of <ln|phi_n|> against n over sites [first, last], with the
/// time average taken over snapshots in the steady interval [0.25, 0.75] of the span.
inline EvanescenceFit evanescence_fit(const ScatteredField& f, Side side, long first, long last) {
    if (last - first < 1) throw InvalidArgument("evanescence_fit: window needs at least two sites");
    const double span = f.t_end - f.t_start;
    const double ta = f.t_start + 0.25 * span, tb = f.t_start + 0.75 * span;
    std::vector<double> xs, ys;
    for (long site = first; site <= last; ++site) {
        const auto it = std::find(f.sites.begin(), f.sites.end(), site);
        if (it == f.sites.end()) throw InvalidArgument("evanescence_fit: window outside the lattice");
        const auto i = static_cast<std::size_t>(it - f.sites.begin());
        double acc = 0.0;
        std::size_t cnt = 0;
        for (std::size_t k = 0; k < f.states.size(); ++k) {
            if (f.times[k] < ta || f.times[k] > tb) continue;
            const double a = std::abs(f.states[k].amplitudes[i]);
            if (!(a > evanescence_floor))
                throw InsufficientSignal("evanescence_fit: |phi| at site " + std::to_string(site) +
                                         " is below the numerical floor");
            acc += std::log(a);
            ++cnt;
        }
        if (cnt == 0) throw InsufficientSignal("evanescence_fit: no snapshots in the steady interval");
        xs.push_back(static_cast<double>(site));
        ys.push_back(acc / static_cast<double>(cnt));
    }
    const double m = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / m;
    return {side == Side::right ? -slope : slope, std::exp(icpt), xs.size()};
}

// ---------------------------------------------------------------------------
// Spectral gap of the scattered field
// ---------------------------------------------------------------------------

struct SpectralGapReport {
    double peak = 0.0;       // max |phi^(w)| over the grid
    double max_above = 0.0;  // max over w > cutoff
    double ratio = 0.0;
    double cutoff = 0.0;
    std::vector<std::string> warnings;
};

/// With the transform kernel exp(i w t), a harmonic exp(i nu t) sits at w = -nu, so
/// a one-sided modulation spectrum above w0 leaves phi with no content above
/// w = -w0. Measures the content above cutoff = -w0 + margin at one probe site.
/// The probe record must span [-t0, t1] of `cfg`.
inline SpectralGapReport scattered_spectrum_gap(const ScatteredField& f, std::size_t probe, const MLFConfig& cfg,
                                                double omega0, double margin, double max_frequency) {
    const SampledSignal sig(f.probe_times.front(), f.probe_times[1] - f.probe_times[0], f.probes.at(probe),
                            max_frequency);
    const Spectrum s = mlf_transform(sig, cfg);
    SpectralGapReport r;
    r.warnings = s.warnings;
    r.cutoff = -omega0 + margin;
    for (std::size_t i = 0; i < s.omega.size(); ++i) {
        const double a = std::abs(s.values[i]);
        r.peak = std::max(r.peak, a);
        if (s.omega[i] > r.cutoff) r.max_above = std::max(r.max_above, a);
    }
    r.ratio = r.peak > 0.0 ? r.max_above / r.peak : 0.0;
    return r;
}

}  // namespace tbscat
