#include <algorithm>
#include <atomic>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "config.hpp"
#include "expr.hpp"
#include "presets.hpp"
#include "runner.hpp"

using namespace tbscat::app;

namespace {

struct RunOptions {
    std::string out;
    double tol = 0.0;
    std::vector<std::string> sets;
    std::string sweep;
    unsigned jobs = 1;
};

struct Sweep {
    std::string path;
    std::vector<double> values;
};

// "integrator.rel_tol=1e-8:1e-10:3" with endpoints as expressions; count 1 means start only
Sweep parse_sweep(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--sweep: expected param=start:stop:count");
    std::vector<std::string> parts;
    std::stringstream ss(spec.substr(eq + 1));
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw ConfigError("--sweep: expected param=start:stop:count");
    Sweep s{spec.substr(0, eq), {}};
    try {
        const double a = evaluate_expression(parts[0]), b = evaluate_expression(parts[1]);
        const double n = evaluate_expression(parts[2]);
        if (n < 1 || n != static_cast<long>(n)) throw ConfigError("--sweep: count must be a positive integer");
        for (long i = 0; i < static_cast<long>(n); ++i)
            s.values.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / (n - 1));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("--sweep: ") + e.what());
    }
    return s;
}

std::string sweep_dir(std::size_t i, const Sweep& s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%03zu_%.6g", i, s.values[i]);
    return std::string(buf).insert(4, s.path + "=");
}

int execute(ExperimentConfig cfg, const std::string& default_out, const RunOptions& o) {
    try {
        for (const auto& a : o.sets) cfg = apply_override(cfg, a);
        if (o.tol > 0.0) cfg = set_value(cfg, "integrator.rel_tol", o.tol);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_validation;
    }
    const std::filesystem::path out = o.out.empty() ? default_out : o.out;

    if (o.sweep.empty()) {
        const auto r = run_experiment(cfg, out, std::cerr);
        if (!r.summary.empty()) std::cout << r.summary << " -> " << out.string() << '\n';
        return r.exit_code;
    }

    Sweep sw;
    std::vector<ExperimentConfig> cfgs;
    try {
        sw = parse_sweep(o.sweep);
        for (double v : sw.values) cfgs.push_back(set_value(cfg, sw.path, v));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_validation;
    }
    // each worker owns whole runs and a private output directory; results are
    // collected by index so the report order does not depend on scheduling
    std::vector<RunOutcome> results(cfgs.size());
    std::vector<std::string> logs(cfgs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < cfgs.size();) {
            std::ostringstream log;
            results[i] = run_experiment(cfgs[i], out / sweep_dir(i, sw), log);
            logs[i] = log.str();
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::max(1u, std::min<unsigned>(o.jobs, static_cast<unsigned>(cfgs.size()))); ++t)
        pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    int code = exit_ok;
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        std::cerr << logs[i];
        if (!results[i].summary.empty())
            std::cout << results[i].summary << " -> " << (out / sweep_dir(i, sw)).string() << '\n';
        code = std::max(code, results[i].exit_code);
    }
    return code;
}

void add_run_options(CLI::App* c, RunOptions& o) {
    c->add_option("--out", o.out, "Output directory");
    c->add_option("--tol", o.tol, "Integrator relative tolerance")->check(CLI::PositiveNumber);
    c->add_option("--set", o.sets, "Override a config value, e.g. --set packet.carrier=pi/3");
    c->add_option("--sweep", o.sweep, "Run a range of values: param=start:stop:count");
    c->add_option("--jobs", o.jobs, "Worker threads for --sweep")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wave scattering on tight-binding lattices with time-modulated perturbations"};
    app.set_version_flag("--version", version);
    app.require_subcommand(1);

    RunOptions opts;
    std::string config_path, preset_name;

    auto* run = app.add_subcommand("run", "Run an experiment from a YAML config file");
    run->add_option("config", config_path, "Config file")->required();
    add_run_options(run, opts);

    auto* pre = app.add_subcommand("preset", "Run a built-in preset");
    pre->add_option("name", preset_name, "Preset name")->required();
    add_run_options(pre, opts);

    auto* list = app.add_subcommand("list-presets", "List built-in presets");

    std::string print_name;
    auto* print = app.add_subcommand("print-preset", "Print a preset as a resolved YAML config");
    print->add_option("name", print_name, "Preset name")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*list) {
            for (const auto& p : list_presets()) std::printf("%-18s %s\n", p.name.c_str(), p.description.c_str());
            return exit_ok;
        }
        if (*print) {
            std::cout << to_yaml(preset(print_name));
            return exit_ok;
        }
        if (*pre) return execute(preset(preset_name), "out/" + preset_name, opts);
        const auto cfg = load_config_file(config_path);
        return execute(cfg, "out/" + std::filesystem::path(config_path).stem().string(), opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_validation;
    }
}
