#include "runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>

#include "tbscat/tbscat.hpp"

namespace tbscat::app {

namespace fs = std::filesystem;

namespace {

std::string g17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::string& hash, const std::string& header) : out_(path) {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
        out_ << "# config " << hash << '\n' << header << '\n';
    }

    template <class... Ts>
    void row(const Ts&... xs) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(xs), first = false), ...);
        out_ << '\n';
    }

private:
    static std::string cell(double x) { return g17(x); }
    static std::string cell(long x) { return std::to_string(x); }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(bool x) { return x ? "1" : "0"; }

    std::ofstream out_;
};

struct Context {
    const ExperimentConfig& cfg;
    fs::path dir;
    std::string hash;
    json files = json::array();
    json diagnostics = json::object();
    bool edge_tripped = false;

    CsvWriter csv(const std::string& name, const std::string& header) {
        files.push_back(name);
        return {dir / name, hash, header};
    }
};

HoppingKernel kernel_of(const json& lattice) { return HoppingKernel::symmetric(numbers(lattice.at("hopping"))); }

Lattice1D lattice_of(const json& s) {
    std::optional<AbsorbingBoundary> absorber;
    if (s.contains("absorber"))
        absorber = AbsorbingBoundary{static_cast<int>(integer(s["absorber"]["width"])), number(s["absorber"]["strength"])};
    return {static_cast<int>(integer(s.at("sites"))), integer(s.at("origin")), kernel_of(s), absorber};
}

Modulation modulation_of(const ExperimentConfig& cfg) {
    std::vector<Harmonic> terms;
    if (cfg.has("modulation"))
        for (const auto& h : cfg.tree["modulation"])
            terms.push_back({cplx{number(h["amplitude"]), number(h["amplitude_im"])}, number(h["frequency"]),
                             h["kind"] == "cos" ? HarmonicKind::cosine : HarmonicKind::exponential});
    return Modulation(std::move(terms));
}

std::optional<Perturbation> perturbation_1d(const ExperimentConfig& cfg) {
    if (!cfg.has("perturbation")) return std::nullopt;
    const auto& p = cfg.tree["perturbation"];
    if (p["type"] == "bond") {
        const auto s = integers(p["sites"]);
        if (s.size() != 2) throw ConfigError("perturbation.sites: a bond needs exactly two sites");
        return Perturbation::bond_defect(s[0], s[1], modulation_of(cfg), number(p["amplitude"]));
    }
    return Perturbation::gaussian(number(p["amplitude"]), number(p["width"]), number(p["center"]), modulation_of(cfg));
}

IntegratorConfig integrator_of(const ExperimentConfig& cfg) {
    IntegratorConfig c;
    if (cfg.has("integrator")) {
        const auto& s = cfg.tree["integrator"];
        c.rel_tol = number(s["rel_tol"]);
        c.abs_tol = number(s["abs_tol"]);
        c.h_init = number(s["h_init"]);
        c.h_min = number(s["h_min"]);
        c.h_max = number(s["h_max"]);
        c.safety = number(s["safety"]);
    }
    c.validate();
    return c;
}

InvisibilityOptions verdict_options(const ExperimentConfig& cfg) {
    InvisibilityOptions o;
    if (cfg.has("verdict")) {
        o.threshold = number(cfg.tree["verdict"]["threshold"]);
        o.overlap_tolerance = number(cfg.tree["verdict"]["overlap_tolerance"]);
    }
    return o;
}

/// Uniform series grid plus any listed snapshot times.
std::vector<double> series_times(const json& time, double t_end) {
    const double dt = number(time["series_dt"]);
    if (!(dt > 0.0)) throw ConfigError("time.series_dt: must be positive");
    const auto n = static_cast<std::size_t>(std::max(1.0, std::round(t_end / dt)));
    auto t = uniform_times(0.0, t_end, n);
    for (double s : numbers(time["snapshots"])) t.push_back(s);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

void write_error_series(Context& ctx, const ExperimentResult& r) {
    auto e = ctx.csv("error_series.csv", "t,I");
    for (std::size_t k = 0; k < r.error_series.size(); ++k) e.row(r.trajectory.times[k], r.error_series[k]);
}

json experiment_verdict(Context& ctx, const ExperimentResult& r, const std::optional<Modulation>& mod,
                        const BandInfo& band) {
    ctx.edge_tripped = r.edge_tripped;
    ctx.diagnostics["max_edge_ratio"] = r.max_edge_ratio;
    ctx.diagnostics["edge_tripped"] = r.edge_tripped;
    ctx.diagnostics["initial_overlap"] = r.initial_overlap;
    ctx.diagnostics["steps"] = r.trajectory.steps;
    ctx.diagnostics["rejected_steps"] = r.trajectory.rejected;
    json v = {{"verdict", to_string(r.verdict)},
              {"final_error", r.final_error},
              {"reference_peak", r.reference_peak},
              {"relative_error", r.relative_error},
              {"edge_tripped", r.edge_tripped},
              {"bandwidth", band.width}};
    if (mod) v["predicate"] = to_string(invisibility_predicate(*mod, band));
    return v;
}

json run_scatter_1d(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const Lattice1D lat = lattice_of(cfg.section("lattice"));
    const auto pert = perturbation_1d(cfg);
    const auto& pk = cfg.section("packet");
    const WavePacketSpec packet{number(pk["center"]), number(pk["width"]), number(pk["carrier"])};
    const auto& time = cfg.section("time");
    const double t_end = number(time["end"]);
    const auto r = run_invisibility_experiment(lat, pert ? &*pert : nullptr, packet, t_end, series_times(time, t_end),
                                               integrator_of(cfg), verdict_options(cfg));

    {
        auto p = ctx.csv("profile_final.csv", "site,abs_psi,abs_psi_free");
        for (std::size_t i = 0; i < r.profile.size(); ++i) p.row(lat.site(i), r.profile[i], r.profile_free[i]);
    }
    write_error_series(ctx, r);
    {
        auto h = ctx.csv("heatmap.csv", "t,site,abs_psi");
        for (const auto& s : r.trajectory.states)
            for (std::size_t i = 0; i < s.size(); ++i) h.row(s.time, lat.site(i), std::abs(s.amplitudes[i]));
    }
    return experiment_verdict(ctx, r, pert ? std::optional(pert->modulation()) : std::nullopt,
                              band_info(lat.kernel()));
}

json run_scatter_2d(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& ls = cfg.section("lattice2d");
    const Lattice2D lat(static_cast<int>(integer(ls["nx"])), static_cast<int>(integer(ls["ny"])), number(ls["kappa"]),
                        integer(ls["origin_x"]), integer(ls["origin_y"]));
    std::optional<Perturbation2D> pert;
    if (cfg.has("perturbation")) {
        const auto& p = cfg.tree["perturbation"];
        if (p["type"] != "gaussian") throw ConfigError("perturbation.type: only gaussian is supported in 2D");
        pert = Perturbation2D::gaussian(number(p["amplitude"]), number(p["width"]), std::lround(number(p["center"])),
                                        std::lround(number(p["center_y"])), modulation_of(cfg));
    }
    const auto& pk = cfg.section("packet2d");
    const WavePacketSpec2D packet{number(pk["center_x"]), number(pk["center_y"]), number(pk["width"]),
                                  number(pk["carrier_x"]), number(pk["carrier_y"])};
    const auto& time = cfg.section("time");
    const double t_end = number(time["end"]);
    const auto r = run_invisibility_experiment(lat, pert ? &*pert : nullptr, packet, t_end, series_times(time, t_end),
                                               integrator_of(cfg), verdict_options(cfg));

    {
        auto p = ctx.csv("profile_final.csv", "x,y,abs_psi,abs_psi_free");
        for (std::size_t i = 0; i < r.profile.size(); ++i) {
            const auto [x, y] = lat.site(i);
            p.row(x, y, r.profile[i], r.profile_free[i]);
        }
    }
    write_error_series(ctx, r);
    {
        auto listed = numbers(time["snapshots"]);
        auto h = ctx.csv("heatmap.csv", "t,x,y,abs_psi");
        for (const auto& s : r.trajectory.states) {
            if (!listed.empty() && std::find(listed.begin(), listed.end(), s.time) == listed.end()) continue;
            for (std::size_t i = 0; i < s.size(); ++i) {
                const auto [x, y] = lat.site(i);
                h.row(s.time, x, y, std::abs(s.amplitudes[i]));
            }
        }
    }
    json v = experiment_verdict(ctx, r, pert ? std::optional(pert->modulation()) : std::nullopt,
                                band_info_square(lat.kappa()));
    double peak = 0.0;
    for (double x : r.error_series) peak = std::max(peak, x);
    v["peak_error"] = peak;
    v["final_over_peak"] = peak > 0.0 ? r.final_error / peak : 0.0;
    return v;
}

MLFConfig mlf_of(const json& s) {
    MLFConfig c;
    c.epsilon = number(s["epsilon"]);
    c.t0 = number(s["t0"]);
    c.t1 = number(s["t1"]);
    c.omega_min = number(s["omega_min"]);
    c.omega_max = number(s["omega_max"]);
    c.omega_step = number(s["omega_step"]);
    c.validate();
    return c;
}

void write_spectrum(Context& ctx, const Spectrum& s) {
    auto c = ctx.csv("spectrum.csv", "omega,re,im");
    for (std::size_t i = 0; i < s.omega.size(); ++i) c.row(s.omega[i], s.values[i].real(), s.values[i].imag());
}

json run_scattered_field(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const Lattice1D lat = lattice_of(cfg.section("lattice"));
    const auto pert = perturbation_1d(cfg);
    if (!pert) throw ConfigError("kind 'scattered-field' requires section 'perturbation'");
    const auto& s = cfg.section("scattered_field");
    ScatteredFieldOptions opt;
    opt.ramp_time = number(s["ramp_time"]);
    opt.taper_length = number(s["taper_length"]);
    opt.output_dt = number(s["output_dt"]);
    opt.full_every = static_cast<std::size_t>(integer(s["full_every"]));
    opt.probe_sites = integers(s["probes"]);
    const double carrier = number(s["carrier"]);
    const auto f = scattered_field(lat, *pert, carrier, number(s["t_start"]), number(s["t_end"]), integrator_of(cfg), opt);

    ctx.diagnostics["absorber_edge_ratio"] = f.absorber_edge_ratio;
    ctx.diagnostics["absorber_saturated"] = f.absorber_saturated;
    ctx.edge_tripped = f.absorber_saturated;

    {
        auto p = ctx.csv("profile_final.csv", "site,abs_psi,abs_psi_free");
        const auto& phi = f.states.back().amplitudes;
        for (std::size_t i = 0; i < phi.size(); ++i) {
            const cplx incident = std::polar(1.0, carrier * static_cast<double>(f.sites[i]));
            p.row(f.sites[i], std::abs(incident + phi[i]), 1.0);
        }
    }
    {
        auto e = ctx.csv("error_series.csv", "t,I");
        for (std::size_t k = 0; k < f.states.size(); ++k) e.row(f.times[k], max_abs(f.states[k].amplitudes));
    }
    {
        auto h = ctx.csv("heatmap.csv", "t,site,abs_phi");
        for (std::size_t k = 0; k < f.states.size(); ++k)
            for (std::size_t i = 0; i < f.sites.size(); ++i) h.row(f.times[k], f.sites[i], std::abs(f.states[k].amplitudes[i]));
    }
    {
        auto pr = ctx.csv("probes.csv", "t,site,re,im");
        for (std::size_t k = 0; k < f.probe_sites.size(); ++k)
            for (std::size_t j = 0; j < f.probe_times.size(); ++j)
                pr.row(f.probe_times[j], f.probe_sites[k], f.probes[k][j].real(), f.probes[k][j].imag());
    }

    const double far = scattered_far_field_ratio(f, pert->support_first(), pert->support_last(), integer(s["far_gap"]),
                                                 lat.interior_first(), lat.interior_last());
    const double threshold = verdict_options(cfg).threshold;
    json v = {{"verdict", far < threshold ? "invisible" : "visible"},
              {"far_field_ratio", far},
              {"energy", f.energy},
              {"predicate", to_string(invisibility_predicate(pert->modulation(), band_info(lat.kernel())))}};

    const auto& fit = s["fit"];
    try {
        const auto r = evanescence_fit(f, fit["side"] == "left" ? Side::left : Side::right, integer(fit["first"]),
                                       integer(fit["last"]));
        v["decay_rate"] = r.decay_rate;
        const double ref = slowest_right_decay(lat.kernel(), f.energy, pert->modulation().spectral_support());
        v["slowest_predicted_decay"] = ref;
    } catch (const Error& e) {
        v["decay_rate"] = nullptr;
        ctx.diagnostics["fit"] = e.what();
    }

    const auto& sp = s["spectrum"];
    const MLFConfig mc = mlf_of(sp);
    const auto support = modulation_spectrum_support(pert->modulation());
    if (f.probe_sites.empty() || !support.omega0) {
        ctx.diagnostics["spectrum"] = "skipped: needs a probe site and a nonzero modulation";
    } else if (f.probe_times.front() > -mc.t0 || f.probe_times.back() < mc.t1) {
        ctx.diagnostics["spectrum"] = "skipped: probe record does not span [-t0, t1]";
    } else {
        const auto gap = scattered_spectrum_gap(f, 0, mc, *support.omega0, number(sp["margin"]), number(sp["max_frequency"]));
        const SampledSignal sig(f.probe_times.front(), f.probe_times[1] - f.probe_times[0], f.probes[0],
                                number(sp["max_frequency"]));
        write_spectrum(ctx, mlf_transform(sig, mc));
        v["spectral_gap_ratio"] = gap.ratio;
        v["spectral_cutoff"] = gap.cutoff;
        if (!gap.warnings.empty()) ctx.diagnostics["spectrum_warnings"] = gap.warnings;
    }
    return v;
}

json run_qwalk(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& s = cfg.section("qwalk");
    QWalkConfig c;
    c.beta = number(s["beta"]);
    c.site_first = integer(s["site_first"]);
    c.site_last = integer(s["site_last"]);
    c.profile = QWalkConfig::gaussian_profile(number(s["profile_amplitude"]), number(s["profile_width"]));
    c.modulation = modulation_of(cfg);
    c.validate();
    QWalkConfig free = c;
    free.profile.clear();
    const auto start = qwalk_delta_state(c, integer(s["start"]));
    const long steps = integer(s["steps"]);
    const auto walk = qwalk_run(c, start, steps);
    const auto ref = qwalk_run(free, start, steps);
    const auto err = qwalk_error(walk, ref);
    const long radius = integer(s["far_radius"]);

    {
        auto p = ctx.csv("profile_final.csv", "site,abs_psi,abs_psi_free");
        const auto &a = walk.back(), &b = ref.back();
        for (std::size_t i = 0; i < c.size(); ++i)
            p.row(c.site_first + static_cast<long>(i), std::sqrt(std::norm(a.u[i]) + std::norm(a.v[i])),
                  std::sqrt(std::norm(b.u[i]) + std::norm(b.v[i])));
    }
    {
        auto e = ctx.csv("error_series.csv", "t,I,I_far");
        for (std::size_t m = 0; m < err.size(); ++m) {
            double all = 0.0, far = 0.0;
            for (std::size_t i = 0; i < err[m].size(); ++i) {
                all = std::max(all, err[m][i]);
                if (std::abs(c.site_first + static_cast<long>(i)) > radius) far = std::max(far, err[m][i]);
            }
            e.row(static_cast<double>(m), all, far);
        }
    }
    {
        auto h = ctx.csv("heatmap.csv", "t,site,intensity");
        for (const auto& w : walk)
            for (std::size_t i = 0; i < c.size(); ++i)
                h.row(static_cast<double>(w.step), c.site_first + static_cast<long>(i),
                      std::norm(w.u[i]) + std::norm(w.v[i]));
    }
    const double far = qwalk_far_field(err, ref, c, 0, radius);
    ctx.diagnostics["support_growth"] = qwalk_max_support_growth(walk);
    return {{"verdict", far < number(s["threshold"]) ? "invisible" : "visible"},
            {"far_field", far},
            {"bandwidth", qwalk_bandwidth(c.beta)}};
}

json run_dispersion(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto kernel = kernel_of(cfg.section("lattice"));
    const json d = cfg.has("dispersion") ? cfg.tree["dispersion"] : json{{"samples", 4096}, {"energies", json::array()}};
    const long samples = integer(d["samples"]);
    if (samples < 2) throw ConfigError("dispersion.samples: need at least 2");
    {
        auto c = ctx.csv("dispersion.csv", "q,energy,group_velocity");
        for (long k = 0; k < samples; ++k) {
            const double q = -pi + 2.0 * pi * static_cast<double>(k) / static_cast<double>(samples);
            const auto b = band_eval(kernel, q);
            c.row(q, b.energy, b.group_velocity);
        }
    }
    const auto band = band_info(kernel, static_cast<int>(samples));
    json v = {{"e_min", band.e_min}, {"e_max", band.e_max}, {"bandwidth", band.width}, {"v_max", band.v_max}};
    if (cfg.has("modulation")) v["predicate"] = to_string(invisibility_predicate(modulation_of(cfg), band));
    const auto energies = numbers(d["energies"]);
    if (!energies.empty()) {
        auto c = ctx.csv("bloch_roots.csv", "energy,re_z,im_z,re_Q,im_Q,decay_rate,decays_right");
        json rates = json::array();
        for (double e : energies) {
            const auto sol = complex_bloch_roots(kernel, e);
            for (const auto& r : sol.roots)
                c.row(e, r.z.real(), r.z.imag(), r.wavenumber.real(), r.wavenumber.imag(), r.decay_rate, r.decays_right);
            rates.push_back({{"energy", e},
                             {"decay_rate_right", sol.decay_rate_right},
                             {"decay_rate_left", sol.decay_rate_left},
                             {"max_residual", sol.max_residual}});
        }
        v["evanescent"] = rates;
    }
    return v;
}

json run_spectral_selftest(Context& ctx) {
    const auto& cfg = ctx.cfg;
    const auto& s = cfg.section("spectral");
    const MLFConfig mc = mlf_of(s);
    const Modulation mod = modulation_of(cfg);
    if (mod.terms().empty()) throw ConfigError("kind 'spectral-selftest' requires a nonempty 'modulation' list");
    double max_freq = 1.0;
    for (const auto& h : mod.terms()) max_freq = std::max(max_freq, 2.0 * std::abs(h.frequency));

    json v;
    const auto area = window_kernel_area(mc);
    const auto theta = theta_area(mc);
    v["window_area"] = {area.area.real(), area.area.imag()};
    v["theta_area"] = {theta.area.real(), theta.area.imag()};
    const bool area_ok = std::abs(area.area - 1.0) <= 1e-2;
    const bool theta_ok = std::abs(theta.area - 2.0 * pi) <= 2.0 * pi * 1e-2;
    if (!area.warnings.empty()) ctx.diagnostics["regime"] = area.warnings;

    const auto sig = SampledSignal::from_function([&](double t) { return mod(t); }, -mc.t0, mc.t1, max_freq);
    const auto sp = mlf_transform(sig, mc);
    write_spectrum(ctx, sp);
    std::vector<double> taus;
    for (double t = number(s["round_trip_from"]); t <= number(s["round_trip_to"]); t += 0.37) taus.push_back(t);
    const auto back = mlf_inverse(sp, mc, taus);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        num += std::norm(back[i] - mod(taus[i]));
        den += std::norm(mod(taus[i]));
    }
    const double round_trip = den > 0.0 ? std::sqrt(num / den) : 0.0;
    v["round_trip_error"] = round_trip;

    // f is the first harmonic, g the rest (or a constant for a single harmonic)
    const auto& cs = s["convolution"];
    const MLFConfig cc = mlf_of(cs);
    const Harmonic first = mod.terms().front();
    const Modulation rest = mod.terms().size() > 1
                                ? Modulation(std::vector<Harmonic>(mod.terms().begin() + 1, mod.terms().end()))
                                : Modulation::constant(1.0);
    const auto fs_ = SampledSignal::from_function([&](double t) { return Modulation({first})(t); }, -cc.t0, cc.t1, max_freq);
    const auto gs = SampledSignal::from_function([&](double t) { return rest(t); }, -cc.t0, cc.t1, max_freq);
    const auto conv = convolution_check(fs_, gs, cc, number(cs["out_min"]), number(cs["out_max"]));
    v["convolution_deviation"] = conv.max_relative_deviation;

    const bool pass = area_ok && theta_ok && round_trip < 1e-3 && conv.max_relative_deviation < 5e-2;
    v["verdict"] = pass ? "pass" : "fail";
    return v;
}

json manifest(const Context& ctx, const json& verdict) {
    return {{"config", ctx.cfg.tree},
            {"config_hash", ctx.hash},
            {"versions",
             {{"tbscat", version},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"compiler", __VERSION__}}},
            {"files", ctx.files},
            {"diagnostics", ctx.diagnostics},
            {"verdict", verdict}};
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << j.dump(2) << '\n';
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& err) {
    RunOutcome o;
    try {
        fs::create_directories(out_dir);
        Context ctx{cfg, out_dir, config_hash(cfg)};
        const std::string kind = cfg.kind();
        json v;
        if (kind == "scatter-1d") v = run_scatter_1d(ctx);
        else if (kind == "scatter-2d") v = run_scatter_2d(ctx);
        else if (kind == "scattered-field") v = run_scattered_field(ctx);
        else if (kind == "qwalk") v = run_qwalk(ctx);
        else if (kind == "dispersion") v = run_dispersion(ctx);
        else v = run_spectral_selftest(ctx);
        v["config_hash"] = ctx.hash;
        v["kind"] = kind;

        ctx.files.push_back("verdict.json");
        write_json(out_dir / "verdict.json", v);
        write_json(out_dir / "manifest.json", manifest(ctx, v));

        o.verdict = v;
        o.summary = kind + " " + ctx.hash + (v.contains("verdict") ? " verdict=" + v["verdict"].get<std::string>() : "");
        if (ctx.edge_tripped) {
            const bool fail = cfg.tree.value("edge_policy", "fail") == "fail";
            err << (fail ? "error: " : "warning: ")
                << "field reached the lattice edge or absorber; results are not trustworthy\n";
            if (fail) o.exit_code = exit_edge_trip;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        o.exit_code = exit_validation;
    } catch (const InvalidArgument& e) {
        err << "invalid parameters: " << e.what() << '\n';
        o.exit_code = exit_validation;
    } catch (const SupportViolation& e) {
        err << "invalid parameters: " << e.what() << '\n';
        o.exit_code = exit_validation;
    } catch (const std::exception& e) {
        err << "run failed: " << e.what() << '\n';
        o.exit_code = exit_runtime;
    }
    return o;
}

}  // namespace tbscat::app
