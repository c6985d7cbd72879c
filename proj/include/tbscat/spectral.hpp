#pragma once

// Modified Fourier-Laplace spectra
//
//     F(w) = int_{-t0}^{t1} f(t) exp(i w t - eps t) dt
//
// with inverse f(tau) = exp(eps tau) / (2 pi) int F(w) exp(-i w tau) dw, the
// window kernel G(w) and its area, and the product/convolution relation.
// Note the sign convention: a harmonic exp(i nu t) peaks at w = -nu.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tbscat/core.hpp"
#include "tbscat/lattice.hpp"

namespace tbscat {

struct RegimeQuality {
    double eps_t0 = 0.0;  // should be << 1
    double eps_t1 = 0.0;  // should be >> 1
    bool acceptable = false;
};

inline constexpr double regime_max_eps_t0 = 0.1;
inline constexpr double regime_min_eps_t1 = 3.0;

struct MLFConfig {
    double epsilon = 1e-3;
    double t0 = 10.0;
    double t1 = 5000.0;
    double omega_min = -20.0;
    double omega_max = 20.0;
    double omega_step = 1e-3;

    void validate() const {
        if (!(epsilon > 0.0)) throw InvalidArgument("mlf: epsilon must be positive");
        if (!(t0 > 0.0) || !(t1 > 0.0)) throw InvalidArgument("mlf: t0 and t1 must be positive");
        if (!(omega_step > 0.0) || !(omega_max > omega_min)) throw InvalidArgument("mlf: bad frequency grid");
    }

    RegimeQuality regime() const {
        RegimeQuality q{epsilon * t0, epsilon * t1, false};
        q.acceptable = q.eps_t0 <= regime_max_eps_t0 && q.eps_t1 >= regime_min_eps_t1;
        return q;
    }

    std::vector<double> omega_grid() const {
        const auto count = static_cast<std::size_t>(std::llround((omega_max - omega_min) / omega_step)) + 1;
        std::vector<double> g(count);
        for (std::size_t i = 0; i < count; ++i) g[i] = omega_min + omega_step * static_cast<double>(i);
        return g;
    }
};

inline std::string regime_warning(const RegimeQuality& q) {
    return "regime outside eps*t0 << 1, eps*t1 >> 1 (eps*t0 = " + std::to_string(q.eps_t0) +
           ", eps*t1 = " + std::to_string(q.eps_t1) + ")";
}

/// Uniform samples of f on [t_start, t_start + (N-1) dt]. `max_frequency` is the
/// largest angular frequency the signal is declared to contain.
class SampledSignal {
public:
    static constexpr int min_samples_per_period = 16;

    SampledSignal(double t_start, double dt, std::vector<cplx> samples, double max_frequency)
        : t_start_(t_start), dt_(dt), samples_(std::move(samples)), max_frequency_(max_frequency) {
        if (!(dt_ > 0.0) || samples_.size() < 2) throw InvalidArgument("sampled signal: need dt > 0 and >= 2 samples");
        if (max_frequency_ > 0.0 && dt_ > 2.0 * pi / (min_samples_per_period * max_frequency_))
            throw Undersampled("sampled signal: fewer than 16 samples per period of the highest frequency");
    }

    /// Samples f on [t_start, t_end] at the coarsest spacing giving 16 samples per period.
    static SampledSignal from_function(const std::function<cplx(double)>& f, double t_start, double t_end,
                                       double max_frequency, double samples_per_period = 16.0) {
        const double dt_max = 2.0 * pi / (samples_per_period * std::max(max_frequency, 1e-300));
        const auto intervals = static_cast<std::size_t>(std::ceil((t_end - t_start) / dt_max));
        const double dt = (t_end - t_start) / static_cast<double>(intervals);
        std::vector<cplx> s(intervals + 1);
        for (std::size_t i = 0; i <= intervals; ++i) s[i] = f(t_start + dt * static_cast<double>(i));
        return {t_start, dt, std::move(s), max_frequency};
    }

    double t_start() const { return t_start_; }
    double t_end() const { return t_start_ + dt_ * static_cast<double>(samples_.size() - 1); }
    double dt() const { return dt_; }
    double max_frequency() const { return max_frequency_; }
    const std::vector<cplx>& samples() const { return samples_; }
    double time(std::size_t i) const { return t_start_ + dt_ * static_cast<double>(i); }

private:
    double t_start_;
    double dt_;
    std::vector<cplx> samples_;
    double max_frequency_;
};

struct Spectrum {
    std::vector<double> omega;
    std::vector<cplx> values;
    std::vector<std::string> warnings;
};

struct SpectrumSupport {
    std::vector<double> frequencies;  // sorted delta frequencies of R(t) in the exp(i w t) labelling
    std::optional<double> omega0;     // smallest, absent for a zero modulation
};

/// Exact delta support of a modulation; no numerics.
inline SpectrumSupport modulation_spectrum_support(const Modulation& mod) {
    SpectrumSupport s{mod.spectral_support(), std::nullopt};
    if (!s.frequencies.empty()) s.omega0 = s.frequencies.front();
    return s;
}

namespace detail {

/// Trapezoid sum dt * sum_k w_k x_k exp((i w - eps) t_k) for one w.
/// The rotating phase is re-seeded every 512 samples to bound drift.
inline cplx damped_dtft(const std::vector<cplx>& x, double t_start, double dt, double omega, double eps) {
    const std::size_t n = x.size();
    const cplx rate{-eps, omega};
    const cplx step = std::exp(rate * dt);
    double sr = 0.0, si = 0.0;
    std::size_t k = 0;
    while (k < n) {
        cplx ph = std::exp(rate * (t_start + dt * static_cast<double>(k)));
        double pr = ph.real(), pi_ = ph.imag();
        const double cr = step.real(), ci = step.imag();
        const std::size_t end = std::min(n, k + 512);
        for (; k < end; ++k) {
            const double xr = x[k].real(), xi = x[k].imag();
            sr += xr * pr - xi * pi_;
            si += xr * pi_ + xi * pr;
            const double npr = pr * cr - pi_ * ci;
            pi_ = pr * ci + pi_ * cr;
            pr = npr;
        }
    }
    // endpoint half weights
    const cplx first = x.front() * std::exp(rate * t_start);
    const cplx last = x.back() * std::exp(rate * (t_start + dt * static_cast<double>(n - 1)));
    return dt * (cplx{sr, si} - 0.5 * (first + last));
}

inline void check_window(const SampledSignal& f, double t0, double t1) {
    const double tol = 0.5 * f.dt();
    if (std::abs(f.t_start() + t0) > tol || std::abs(f.t_end() - t1) > tol)
        throw InvalidArgument("mlf: signal must be sampled over [-t0, t1]");
}

}  // namespace detail

/// Modified Fourier-Laplace transform at arbitrary frequencies (composite trapezoid).
inline std::vector<cplx> mlf_transform_at(const SampledSignal& f, double epsilon, const std::vector<double>& omegas) {
    const double nyquist = pi / f.dt();
    for (double w : omegas)
        if (std::abs(w) >= nyquist) throw Undersampled("mlf: frequency beyond the sampling Nyquist limit");
    std::vector<cplx> out(omegas.size());
    for (std::size_t j = 0; j < omegas.size(); ++j)
        out[j] = detail::damped_dtft(f.samples(), f.t_start(), f.dt(), omegas[j], epsilon);
    return out;
}

/// Spectrum over the configured frequency grid; the signal must span [-t0, t1].
inline Spectrum mlf_transform(const SampledSignal& f, const MLFConfig& cfg) {
    cfg.validate();
    detail::check_window(f, cfg.t0, cfg.t1);
    Spectrum s;
    s.omega = cfg.omega_grid();
    s.values = mlf_transform_at(f, cfg.epsilon, s.omega);
    if (const auto q = cfg.regime(); !q.acceptable) s.warnings.push_back(regime_warning(q));
    return s;
}

/// Inverse relation evaluated by trapezoid quadrature over the spectrum's grid.
inline std::vector<cplx> mlf_inverse(const Spectrum& spectrum, const MLFConfig& cfg, const std::vector<double>& taus) {
    cfg.validate();
    const auto& w = spectrum.omega;
    if (w.size() < 2 || w.size() != spectrum.values.size()) throw InvalidArgument("mlf_inverse: malformed spectrum");
    std::vector<cplx> out(taus.size());
    for (std::size_t j = 0; j < taus.size(); ++j) {
        const double tau = taus[j];
        if (!(tau > -cfg.t0 && tau < cfg.t1)) throw InvalidArgument("mlf_inverse: tau outside (-t0, t1)");
        cplx acc{};
        for (std::size_t i = 0; i + 1 < w.size(); ++i) {
            const cplx a = spectrum.values[i] * std::polar(1.0, -w[i] * tau);
            const cplx b = spectrum.values[i + 1] * std::polar(1.0, -w[i + 1] * tau);
            acc += 0.5 * (w[i + 1] - w[i]) * (a + b);
        }
        out[j] = std::exp(cfg.epsilon * tau) * acc / (2.0 * pi);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Window kernels and their areas
// ---------------------------------------------------------------------------

enum class WindowKernelForm {
    exact,       // G(w) = [e^{i(w+ie)t1} - e^{-i(w+ie)t0}] / (2 pi i (w+ie))
    asymptotic,  // G(w) ~ -e^{-i w t0} / (2 pi i (w+ie)), the large-window form
};

inline cplx window_kernel(double omega, double eps, double t0, double t1, WindowKernelForm form) {
    const cplx wc{omega, eps};
    if (form == WindowKernelForm::asymptotic) return -std::exp(-I * omega * t0) / (2.0 * pi * I * wc);
    return (std::exp(I * wc * t1) - std::exp(-I * wc * t0)) / (2.0 * pi * I * wc);
}

/// Theta(W) = int_{-t0}^{t1} exp(i W t) dt.
inline cplx theta_kernel(double omega, double t0, double t1) {
    if (std::abs(omega) * std::max(t0, t1) < 1e-8) return t0 + t1;
    return (std::exp(I * omega * t1) - std::exp(-I * omega * t0)) / (I * omega);
}

struct AreaResult {
    cplx area;
    double tail_estimate = 0.0;
    RegimeQuality regime;
    std::vector<std::string> warnings;
};

inline constexpr double area_max_tail = 1e-2;

namespace detail {

inline cplx symmetric_trapezoid(const std::function<cplx(double)>& g, double half_width, double step) {
    const auto n = static_cast<long>(std::llround(half_width / step));
    cplx acc = 0.5 * (g(-half_width) + g(half_width));
    for (long k = -n + 1; k < n; ++k) acc += g(step * static_cast<double>(k));
    return acc * step;
}

inline double default_area_step(double t0, double t1) { return 2.0 * pi / (5.0 * std::max(t0, t1)); }

}  // namespace detail

/// Area under G(w) on [-half_width, half_width]. The step defaults to one fifth of
/// 2 pi / max(t0, t1), fine enough that the trapezoid sum has no aliasing.
inline AreaResult window_kernel_area(const MLFConfig& cfg, WindowKernelForm form = WindowKernelForm::exact,
                                     double half_width = 200.0, double step = 0.0) {
    cfg.validate();
    if (step <= 0.0) step = detail::default_area_step(cfg.t0, cfg.t1);
    AreaResult r;
    r.regime = cfg.regime();
    const double e = cfg.epsilon;
    r.tail_estimate = (std::exp(e * cfg.t0) / cfg.t0 + std::exp(-e * cfg.t1) / cfg.t1) / (pi * half_width);
    if (r.tail_estimate > area_max_tail) throw InvalidArgument("window_kernel_area: integration window too narrow");
    if (!r.regime.acceptable) r.warnings.push_back(regime_warning(r.regime));
    r.area = detail::symmetric_trapezoid(
        [&](double w) { return window_kernel(w, e, cfg.t0, cfg.t1, form); }, half_width, step);
    return r;
}

/// Area under Theta(W); 2 pi independently of t0 and t1.
inline AreaResult theta_area(const MLFConfig& cfg, double half_width = 200.0, double step = 0.0) {
    cfg.validate();
    if (step <= 0.0) step = detail::default_area_step(cfg.t0, cfg.t1);
    AreaResult r;
    r.regime = cfg.regime();
    r.tail_estimate = 2.0 * (1.0 / cfg.t0 + 1.0 / cfg.t1) / (pi * half_width);
    if (r.tail_estimate > area_max_tail * 2.0 * pi)
        throw InvalidArgument("theta_area: integration window too narrow");
    r.area = detail::symmetric_trapezoid([&](double w) { return theta_kernel(w, cfg.t0, cfg.t1); }, half_width, step);
    return r;
}

// ---------------------------------------------------------------------------
// Product / convolution relation
// ---------------------------------------------------------------------------

struct ConvolutionReport {
    std::vector<double> omega;
    std::vector<cplx> direct;       // int f g exp(i w t - eps t) dt
    std::vector<cplx> convolution;  // (1/2pi) int F_eps(w - w2) G(w2) dw2
    double max_relative_deviation = 0.0;  // pointwise, where |direct| > floor * max|direct|
    double max_deviation_over_peak = 0.0;
    std::vector<std::string> warnings;
};

/// Compares the modified transform of f*g computed directly with the
/// convolution of F_eps against the plain windowed spectrum of g. The output
/// frequencies are the points of `cfg`'s grid inside [out_min, out_max]; the
/// w2 integral runs over the full grid.
inline ConvolutionReport convolution_check(const SampledSignal& f, const SampledSignal& g, const MLFConfig& cfg,
                                           double out_min, double out_max, double floor = 1e-6) {
    cfg.validate();
    detail::check_window(f, cfg.t0, cfg.t1);
    detail::check_window(g, cfg.t0, cfg.t1);
    if (f.samples().size() != g.samples().size() || std::abs(f.dt() - g.dt()) > 1e-12 * f.dt())
        throw InvalidArgument("convolution_check: signals must share one time grid");

    ConvolutionReport rep;
    if (const auto q = cfg.regime(); !q.acceptable) rep.warnings.push_back(regime_warning(q));

    const double dw = cfg.omega_step;
    const auto grid = cfg.omega_grid();
    const long jmin = std::lround(std::ceil((out_min - cfg.omega_min) / dw - 1e-9));
    const long jmax = std::lround(std::floor((out_max - cfg.omega_min) / dw + 1e-9));
    if (jmin > jmax) throw InvalidArgument("convolution_check: empty output range");

    std::vector<cplx> product(f.samples().size());
    for (std::size_t k = 0; k < product.size(); ++k) product[k] = f.samples()[k] * g.samples()[k];
    const SampledSignal fg(f.t_start(), f.dt(), std::move(product), 0.0);

    for (long j = jmin; j <= jmax; ++j) rep.omega.push_back(cfg.omega_min + dw * static_cast<double>(j));
    rep.direct = mlf_transform_at(fg, cfg.epsilon, rep.omega);

    // F_eps on the lattice of differences w - w2, both on the grid.
    const long n2 = static_cast<long>(grid.size());
    const long dmin = jmin - (n2 - 1), dmax = jmax;
    std::vector<double> diff_omegas;
    for (long d = dmin; d <= dmax; ++d) diff_omegas.push_back(dw * static_cast<double>(d));
    // F is needed at w - w2 = (j - i) dw where w = omega_min + j dw, w2 = omega_min + i dw
    const auto f_hat = mlf_transform_at(f, cfg.epsilon, diff_omegas);
    const auto g_hat = mlf_transform_at(g, 0.0, grid);

    // Beyond the grid both spectra fall off like their endpoint terms, whose product has a
    // non-oscillating part [f g e^{(iw - eps)t}]_{t1} + [..]_{-t0} over (i w2)(i(w - w2) - eps).
    // Integrated over w2 > Wp and w2 < -Wm this gives
    // -(1/a) [ln(Wm/Wp) + ln((Wp - a)/(Wm + a))], a = w + i eps. The remaining cross terms
    // oscillate and are dropped. Only applied when the grid straddles zero.
    const double Wp = cfg.omega_max, Wm = -cfg.omega_min;
    const bool tail = Wp > 0.0 && Wm > 0.0;
    const cplx fg_hi = f.samples().back() * g.samples().back();
    const cplx fg_lo = f.samples().front() * g.samples().front();

    for (long j = jmin; j <= jmax; ++j) {
        cplx acc{};
        for (long i = 0; i < n2; ++i) {
            const double w8 = (i == 0 || i == n2 - 1) ? 0.5 : 1.0;
            acc += w8 * f_hat[static_cast<std::size_t>(j - i - dmin)] * g_hat[static_cast<std::size_t>(i)];
        }
        acc *= dw;
        const double w = cfg.omega_min + dw * static_cast<double>(j);
        const cplx a{w, cfg.epsilon};
        const cplx ends = fg_hi * std::exp(cplx{-cfg.epsilon, w} * cfg.t1) + fg_lo * std::exp(cplx{cfg.epsilon, -w} * cfg.t0);
        if (tail) acc -= ends * (std::log(Wm / Wp) + std::log((Wp - a) / (Wm + a))) / a;
        rep.convolution.push_back(acc / (2.0 * pi));
    }

    double peak = 0.0;
    for (cplx z : rep.direct) peak = std::max(peak, std::abs(z));
    for (std::size_t i = 0; i < rep.direct.size(); ++i) {
        const double dev = std::abs(rep.convolution[i] - rep.direct[i]);
        if (peak > 0.0) rep.max_deviation_over_peak = std::max(rep.max_deviation_over_peak, dev / peak);
        if (std::abs(rep.direct[i]) > floor * peak && peak > 0.0)
            rep.max_relative_deviation = std::max(rep.max_relative_deviation, dev / std::abs(rep.direct[i]));
    }
    return rep;
}

}  // namespace tbscat
