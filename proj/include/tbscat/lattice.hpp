#pragma once

// Lattices, hopping kernels, time-modulated perturbations and the
// Hamiltonian action i dpsi/dt = -sum_l kappa_{n-l} psi_l + sum_l V_{n,l}(t) psi_l.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tbscat/core.hpp"

namespace tbscat {

// ---------------------------------------------------------------------------
// Hopping kernel
// ---------------------------------------------------------------------------

/// Finite-range hopping amplitudes kappa_l, l in {-L..L} \ {0}.
class HoppingKernel {
public:
    HoppingKernel(const std::map<int, cplx>& amplitudes, bool hermitian = true)
        : hermitian_(hermitian) {
        double largest = 0.0;
        for (const auto& [l, k] : amplitudes) {
            if (l == 0) throw InvalidArgument("hopping kernel: l = 0 is not a hopping term");
            if (!std::isfinite(k.real()) || !std::isfinite(k.imag()))
                throw InvalidArgument("hopping kernel: non-finite amplitude");
            largest = std::max(largest, std::abs(k));
            if (k != cplx{}) terms_.emplace_back(l, k);
            range_ = std::max(range_, std::abs(l));
        }
        if (terms_.empty() || largest == 0.0)
            throw InvalidArgument("hopping kernel: at least one amplitude must be nonzero");
        if (hermitian_) {
            for (const auto& [l, k] : terms_) {
                if (std::abs((*this)[-l] - std::conj(k)) > 1e-14 * largest)
                    throw InvalidArgument("hopping kernel: marked hermitian but kappa_{-" +
                                          std::to_string(l) + "} != conj(kappa_" +
                                          std::to_string(l) + ")");
            }
        }
    }

    /// Symmetric real kernel kappa_{+-l} = kappas[l-1].
    static HoppingKernel symmetric(const std::vector<double>& kappas) {
        std::map<int, cplx> amps;
        for (std::size_t i = 0; i < kappas.size(); ++i) {
            const int l = static_cast<int>(i) + 1;
            amps[l] = kappas[i];
            amps[-l] = kappas[i];
        }
        return HoppingKernel(amps, true);
    }

    static HoppingKernel nearest_neighbor(double kappa) { return symmetric({kappa}); }

    int range() const { return range_; }
    bool hermitian() const { return hermitian_; }

    cplx operator[](int l) const {
        for (const auto& [ll, k] : terms_)
            if (ll == l) return k;
        return {};
    }

    /// Nonzero (l, kappa_l) pairs.
    const std::vector<std::pair<int, cplx>>& terms() const { return terms_; }

private:
    std::vector<std::pair<int, cplx>> terms_;
    int range_ = 0;
    bool hermitian_ = true;
};

// ---------------------------------------------------------------------------
// Modulation R(t)
// ---------------------------------------------------------------------------

enum class HarmonicKind { exponential, cosine };

struct Harmonic {
    cplx amplitude;
    double frequency = 0.0;
    HarmonicKind kind = HarmonicKind::exponential;
};

/// R(t) = sum of A exp(i w t) and A cos(w t) terms.
class Modulation {
public:
    Modulation() = default;
    explicit Modulation(std::vector<Harmonic> terms) : terms_(std::move(terms)) {
        for (const auto& h : terms_)
            if (!std::isfinite(h.frequency) || !std::isfinite(std::abs(h.amplitude)))
                throw InvalidArgument("modulation: non-finite harmonic");
    }

    static Modulation constant(cplx a) { return Modulation({{a, 0.0, HarmonicKind::exponential}}); }

    cplx operator()(double t) const {
        cplx r{};
        for (const auto& h : terms_) {
            if (h.kind == HarmonicKind::exponential)
                r += h.amplitude * std::polar(1.0, h.frequency * t);
            else
                r += h.amplitude * std::cos(h.frequency * t);
        }
        return r;
    }

    const std::vector<Harmonic>& terms() const { return terms_; }

    /// Sorted delta-frequencies carrying nonzero weight; a cosine term contributes +-w.
    std::vector<double> spectral_support() const {
        std::vector<double> s;
        for (const auto& h : terms_) {
            if (h.amplitude == cplx{}) continue;
            s.push_back(h.frequency);
            if (h.kind == HarmonicKind::cosine) s.push_back(-h.frequency);
        }
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        return s;
    }

    std::optional<double> min_frequency() const {
        const auto s = spectral_support();
        if (s.empty()) return std::nullopt;
        return s.front();
    }

    /// True when every amplitude vanishes.
    bool is_zero() const { return spectral_support().empty(); }

    Modulation scaled(cplx factor) const {
        auto t = terms_;
        for (auto& h : t) h.amplitude *= factor;
        return Modulation(std::move(t));
    }

private:
    std::vector<Harmonic> terms_;
};

// ---------------------------------------------------------------------------
// Lattices
// ---------------------------------------------------------------------------

/// Complex absorbing layer -i*eta*ramp(n) on the outer `width` sites of each side.
struct AbsorbingBoundary {
    int width = 0;
    double strength = 0.0;
};

class Lattice1D {
public:
    Lattice1D(int site_count, long origin, HoppingKernel kernel,
              std::optional<AbsorbingBoundary> absorber = std::nullopt)
        : n_(site_count), origin_(origin), kernel_(std::move(kernel)), absorber_(absorber) {
        if (n_ <= 2 * kernel_.range())
            throw InvalidArgument("lattice: site count must exceed twice the kernel range");
        if (absorber_) {
            if (absorber_->width < 1 || absorber_->strength <= 0.0)
                throw InvalidArgument("lattice: absorber needs width >= 1 and strength > 0");
            if (2 * absorber_->width + 2 * kernel_.range() >= n_)
                throw InvalidArgument("lattice: absorbing layers leave no interior");
        }
    }

    int size() const { return n_; }
    long first_site() const { return origin_; }
    long last_site() const { return origin_ + n_ - 1; }
    const HoppingKernel& kernel() const { return kernel_; }
    const std::optional<AbsorbingBoundary>& absorber() const { return absorber_; }

    bool contains(long site) const { return site >= first_site() && site <= last_site(); }
    std::size_t index(long site) const { return static_cast<std::size_t>(site - origin_); }
    long site(std::size_t index) const { return origin_ + static_cast<long>(index); }

    int absorber_width() const { return absorber_ ? absorber_->width : 0; }

    /// Sites at least kernel range plus absorber width away from both edges.
    long interior_first() const { return first_site() + kernel_.range() + absorber_width(); }
    long interior_last() const { return last_site() - kernel_.range() - absorber_width(); }

    /// Absorber profile in [0, 1]; quadratic from the inner edge of the layer outwards.
    double ramp(std::size_t i) const {
        if (!absorber_) return 0.0;
        const int w = absorber_->width;
        const long from_left = static_cast<long>(i);
        const long from_right = static_cast<long>(n_) - 1 - from_left;
        const long depth = std::max<long>(w - from_left, w - from_right);
        if (depth <= 0) return 0.0;
        const double x = static_cast<double>(depth) / w;
        return x * x;
    }

private:
    int n_;
    long origin_;
    HoppingKernel kernel_;
    std::optional<AbsorbingBoundary> absorber_;
};

/// Square lattice with real nearest-neighbour hopping and hard walls.
/// Sites (n, m), flattened row-major: index = (n - origin_x) * ny + (m - origin_y).
class Lattice2D {
public:
    Lattice2D(int nx, int ny, double kappa, long origin_x, long origin_y)
        : nx_(nx), ny_(ny), kappa_(kappa), ox_(origin_x), oy_(origin_y) {
        if (nx_ < 4 || ny_ < 4) throw InvalidArgument("2D lattice: Nx, Ny must be >= 4");
        if (!(kappa_ > 0.0)) throw InvalidArgument("2D lattice: kappa must be positive");
    }

    /// Lattice centred on the origin, sites -N/2 .. N/2 - 1 on each axis.
    static Lattice2D centered(int nx, int ny, double kappa) {
        return Lattice2D(nx, ny, kappa, -nx / 2, -ny / 2);
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
    double kappa() const { return kappa_; }
    long first_x() const { return ox_; }
    long first_y() const { return oy_; }
    long last_x() const { return ox_ + nx_ - 1; }
    long last_y() const { return oy_ + ny_ - 1; }

    bool contains(long n, long m) const {
        return n >= ox_ && n <= last_x() && m >= oy_ && m <= last_y();
    }
    std::size_t index(long n, long m) const {
        return static_cast<std::size_t>(n - ox_) * ny_ + static_cast<std::size_t>(m - oy_);
    }
    std::pair<long, long> site(std::size_t index) const {
        return {ox_ + static_cast<long>(index / ny_), oy_ + static_cast<long>(index % ny_)};
    }

private:
    int nx_, ny_;
    double kappa_;
    long ox_, oy_;
};

// ---------------------------------------------------------------------------
// State vectors
// ---------------------------------------------------------------------------

/// Complex amplitudes over all lattice sites at one time (2D states are row-major).
struct StateVector {
    std::vector<cplx> amplitudes;
    double time = 0.0;

    std::size_t size() const { return amplitudes.size(); }
    bool finite() const {
        return std::all_of(amplitudes.begin(), amplitudes.end(), [](cplx z) {
            return std::isfinite(z.real()) && std::isfinite(z.imag());
        });
    }
};

using StateVector1D = StateVector;
using StateVector2D = StateVector;

inline double max_abs(std::span<const cplx> y) {
    double m = 0.0;
    for (cplx z : y) m = std::max(m, std::abs(z));
    return m;
}

inline double norm2(std::span<const cplx> y) {
    double s = 0.0;
    for (cplx z : y) s += std::norm(z);
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Perturbations V_{n,m}(t) = R(t) T_{n,m}
// ---------------------------------------------------------------------------

enum class PerturbationKind { onsite, hopping_defect, general_sparse };

struct SparseEntry {
    long row = 0;
    long col = 0;
    cplx value;
};

class Perturbation {
public:
    Perturbation(PerturbationKind kind, std::vector<SparseEntry> entries, Modulation modulation)
        : kind_(kind), entries_(std::move(entries)), modulation_(std::move(modulation)) {
        if (entries_.empty()) throw InvalidArgument("perturbation: empty support");
        if (kind_ == PerturbationKind::onsite)
            for (const auto& e : entries_)
                if (e.row != e.col)
                    throw InvalidArgument("perturbation: onsite kind requires diagonal entries");
        for (const auto& e : entries_) {
            lo_ = std::min({lo_, e.row, e.col});
            hi_ = std::max({hi_, e.row, e.col});
        }
    }

    static Perturbation onsite(const std::map<long, cplx>& potential, Modulation modulation) {
        std::vector<SparseEntry> e;
        for (const auto& [n, v] : potential) e.push_back({n, n, v});
        return {PerturbationKind::onsite, std::move(e), std::move(modulation)};
    }

    /// V_n = amplitude * exp(-((n - center)/width)^2), truncated where the
    /// profile drops below `cutoff` relative to its peak.
    static Perturbation gaussian(cplx amplitude, double width, double center,
                                 Modulation modulation, double cutoff = 1e-16) {
        if (!(width > 0.0)) throw InvalidArgument("gaussian perturbation: width must be positive");
        const double reach = width * std::sqrt(-std::log(cutoff));
        std::map<long, cplx> v;
        for (long n = static_cast<long>(std::ceil(center - reach));
             n <= static_cast<long>(std::floor(center + reach)); ++n) {
            const double x = (n - center) / width;
            v[n] = amplitude * std::exp(-x * x);
        }
        return onsite(v, std::move(modulation));
    }

    /// Symmetric bond defect T = delta_{n,a} delta_{m,b} + delta_{n,b} delta_{m,a}.
    static Perturbation bond_defect(long a, long b, Modulation modulation, cplx strength = 1.0) {
        if (a == b) throw InvalidArgument("bond defect: sites must differ");
        return {PerturbationKind::hopping_defect,
                {{a, b, strength}, {b, a, strength}},
                std::move(modulation)};
    }

    PerturbationKind kind() const { return kind_; }
    const std::vector<SparseEntry>& entries() const { return entries_; }
    const Modulation& modulation() const { return modulation_; }
    long support_first() const { return lo_; }
    long support_last() const { return hi_; }

    Perturbation with_modulation(Modulation m) const { return {kind_, entries_, std::move(m)}; }

private:
    PerturbationKind kind_;
    std::vector<SparseEntry> entries_;
    Modulation modulation_;
    long lo_ = std::numeric_limits<long>::max();
    long hi_ = std::numeric_limits<long>::min();
};

/// On-site perturbation of the square lattice.
struct SiteEntry2D {
    long n = 0;
    long m = 0;
    cplx value;
};

class Perturbation2D {
public:
    Perturbation2D(std::vector<SiteEntry2D> entries, Modulation modulation)
        : entries_(std::move(entries)), modulation_(std::move(modulation)) {
        if (entries_.empty()) throw InvalidArgument("2D perturbation: empty support");
    }

    /// V_{n,m} = amplitude * exp(-(n^2 + m^2)/width^2) around (cx, cy), truncated at `cutoff`.
    static Perturbation2D gaussian(cplx amplitude, double width, long cx, long cy,
                                   Modulation modulation, double cutoff = 1e-16) {
        const long reach = static_cast<long>(std::floor(width * std::sqrt(-std::log(cutoff))));
        std::vector<SiteEntry2D> e;
        for (long n = cx - reach; n <= cx + reach; ++n)
            for (long m = cy - reach; m <= cy + reach; ++m) {
                const double r2 = static_cast<double>((n - cx) * (n - cx) + (m - cy) * (m - cy));
                const double w = std::exp(-r2 / (width * width));
                if (w >= cutoff) e.push_back({n, m, amplitude * w});
            }
        return {std::move(e), std::move(modulation)};
    }

    const std::vector<SiteEntry2D>& entries() const { return entries_; }
    const Modulation& modulation() const { return modulation_; }
    Perturbation2D with_modulation(Modulation m) const { return {entries_, std::move(m)}; }

private:
    std::vector<SiteEntry2D> entries_;
    Modulation modulation_;
};

// ---------------------------------------------------------------------------
// Right-hand sides dpsi/dt
// ---------------------------------------------------------------------------

/// Perturbation with its sparse T cached in lattice index space.
class BoundPerturbation {
public:
    struct IndexEntry {
        std::size_t row, col;
        cplx value;
    };

    BoundPerturbation() = default;

    BoundPerturbation(const Lattice1D& lattice, const Perturbation& p) : modulation_(p.modulation()) {
        const long lo = lattice.interior_first();
        const long hi = lattice.interior_last();
        if (p.support_first() < lo || p.support_last() > hi)
            throw SupportViolation("perturbation support [" + std::to_string(p.support_first()) +
                                   ", " + std::to_string(p.support_last()) +
                                   "] leaves the lattice interior [" + std::to_string(lo) + ", " +
                                   std::to_string(hi) + "]");
        for (const auto& e : p.entries())
            entries_.push_back({lattice.index(e.row), lattice.index(e.col), e.value});
    }

    BoundPerturbation(const Lattice2D& lattice, const Perturbation2D& p) : modulation_(p.modulation()) {
        for (const auto& e : p.entries()) {
            if (e.n <= lattice.first_x() || e.n >= lattice.last_x() || e.m <= lattice.first_y() ||
                e.m >= lattice.last_y())
                throw SupportViolation("2D perturbation site (" + std::to_string(e.n) + ", " +
                                       std::to_string(e.m) + ") is not strictly inside the lattice");
            const auto i = lattice.index(e.n, e.m);
            entries_.push_back({i, i, e.value});
        }
    }

    bool empty() const { return entries_.empty(); }
    const Modulation& modulation() const { return modulation_; }
    const std::vector<IndexEntry>& entries() const { return entries_; }

    /// dy += -i * scale * R(t) * T y
    void accumulate(double t, std::span<const cplx> y, std::span<cplx> dy, double scale = 1.0) const {
        if (entries_.empty()) return;
        const cplx f = -I * scale * modulation_(t);
        for (const auto& e : entries_) dy[e.row] += f * e.value * y[e.col];
    }

private:
    Modulation modulation_;
    std::vector<IndexEntry> entries_;
};

/// dy = i sum_l kappa_l y_{n-l}, hard walls; absorbing layer adds -eta*ramp*y.
inline void apply_free_1d(const Lattice1D& lattice, std::span<const cplx> y, std::span<cplx> dy) {
    const long n = lattice.size();
    std::fill(dy.begin(), dy.end(), cplx{});
    for (const auto& [l, k] : lattice.kernel().terms()) {
        const cplx f = I * k;
        const long lo = std::max<long>(0, l);
        const long hi = std::min<long>(n, n + l);
        for (long i = lo; i < hi; ++i) dy[i] += f * y[i - l];
    }
    if (const auto& a = lattice.absorber()) {
        const long w = a->width;
        for (long i = 0; i < w; ++i) {
            dy[i] -= a->strength * lattice.ramp(i) * y[i];
            dy[n - 1 - i] -= a->strength * lattice.ramp(n - 1 - i) * y[n - 1 - i];
        }
    }
}

inline void apply_free_2d(const Lattice2D& lattice, std::span<const cplx> y, std::span<cplx> dy) {
    const int nx = lattice.nx(), ny = lattice.ny();
    const cplx f = I * lattice.kappa();
    for (int a = 0; a < nx; ++a) {
        const std::size_t row = static_cast<std::size_t>(a) * ny;
        for (int b = 0; b < ny; ++b) {
            cplx s{};
            if (a > 0) s += y[row - ny + b];
            if (a + 1 < nx) s += y[row + ny + b];
            if (b > 0) s += y[row + b - 1];
            if (b + 1 < ny) s += y[row + b + 1];
            dy[row + b] = f * s;
        }
    }
}

/// Lattice Schroedinger right-hand side, optionally perturbed.
class LatticeSystem1D {
public:
    explicit LatticeSystem1D(Lattice1D lattice) : lattice_(std::move(lattice)) {}
    LatticeSystem1D(Lattice1D lattice, const Perturbation& p)
        : lattice_(std::move(lattice)), pert_(lattice_, p) {}

    std::size_t dimension() const { return static_cast<std::size_t>(lattice_.size()); }
    const Lattice1D& lattice() const { return lattice_; }

    void operator()(double t, std::span<const cplx> y, std::span<cplx> dy) const {
        apply_free_1d(lattice_, y, dy);
        pert_.accumulate(t, y, dy);
    }

private:
    Lattice1D lattice_;
    BoundPerturbation pert_;
};

class LatticeSystem2D {
public:
    explicit LatticeSystem2D(Lattice2D lattice) : lattice_(lattice) {}
    LatticeSystem2D(Lattice2D lattice, const Perturbation2D& p) : lattice_(lattice), pert_(lattice_, p) {}

    std::size_t dimension() const { return lattice_.size(); }
    const Lattice2D& lattice() const { return lattice_; }

    void operator()(double t, std::span<const cplx> y, std::span<cplx> dy) const {
        apply_free_2d(lattice_, y, dy);
        pert_.accumulate(t, y, dy);
    }

private:
    Lattice2D lattice_;
    BoundPerturbation pert_;
};

/// dpsi/dt for the 1D lattice at time t.
inline StateVector apply_hamiltonian_1d(const Lattice1D& lattice, const Perturbation* pert,
                                        const StateVector& state, double t) {
    if (state.size() != static_cast<std::size_t>(lattice.size()))
        throw InvalidArgument("apply_hamiltonian_1d: state length does not match lattice");
    StateVector out{std::vector<cplx>(state.size()), t};
    if (pert)
        LatticeSystem1D(lattice, *pert)(t, state.amplitudes, out.amplitudes);
    else
        LatticeSystem1D{lattice}(t, state.amplitudes, out.amplitudes);
    return out;
}

inline StateVector apply_hamiltonian_2d(const Lattice2D& lattice, const Perturbation2D* pert,
                                        const StateVector& state, double t) {
    if (state.size() != lattice.size())
        throw InvalidArgument("apply_hamiltonian_2d: state length does not match lattice");
    StateVector out{std::vector<cplx>(state.size()), t};
    if (pert)
        LatticeSystem2D(lattice, *pert)(t, state.amplitudes, out.amplitudes);
    else
        LatticeSystem2D{lattice}(t, state.amplitudes, out.amplitudes);
    return out;
}

inline cplx modulation_value(const Modulation& mod, double t) { return mod(t); }

// ---------------------------------------------------------------------------
// Edge monitor
// ---------------------------------------------------------------------------

inline constexpr double edge_monitor_threshold = 1e-6;

/// Largest amplitude on the outermost `kernel range` sites (or on the absorber's
/// inner edge) relative to the largest amplitude anywhere.
inline double edge_ratio(const Lattice1D& lattice, std::span<const cplx> y) {
    const double peak = max_abs(y);
    if (peak == 0.0) return 0.0;
    const std::size_t n = y.size();
    const std::size_t skip = static_cast<std::size_t>(lattice.absorber_width());
    const std::size_t band = static_cast<std::size_t>(lattice.kernel().range());
    double edge = 0.0;
    for (std::size_t i = skip; i < skip + band; ++i) {
        edge = std::max(edge, std::abs(y[i]));
        edge = std::max(edge, std::abs(y[n - 1 - i]));
    }
    return edge / peak;
}

inline double edge_ratio(const Lattice2D& lattice, std::span<const cplx> y) {
    const double peak = max_abs(y);
    if (peak == 0.0) return 0.0;
    double edge = 0.0;
    const int nx = lattice.nx(), ny = lattice.ny();
    for (int a = 0; a < nx; ++a)
        for (int b = 0; b < ny; ++b)
            if (a == 0 || b == 0 || a == nx - 1 || b == ny - 1)
                edge = std::max(edge, std::abs(y[static_cast<std::size_t>(a) * ny + b]));
    return edge / peak;
}

}  // namespace tbscat
