#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "expr.hpp"

namespace tbscat::app {

namespace {

enum class Type { number, integer, string, number_list, integer_list, object, object_list };

struct Field;
using Fields = std::vector<std::pair<std::string, Field>>;

struct Field {
    Type type = Type::number;
    json def;                          // null: required (or absent if optional)
    bool optional = false;             // objects only: may be left out entirely
    std::vector<std::string> choices;  // strings only
    Fields fields;                     // objects and object-list elements
};

Field num(json d) { return {Type::number, std::move(d), false, {}, {}}; }
Field num_required() { return {Type::number, nullptr, false, {}, {}}; }
Field integer_f(json d) { return {Type::integer, std::move(d), false, {}, {}}; }
Field str(json d, std::vector<std::string> choices) { return {Type::string, std::move(d), false, std::move(choices), {}}; }
Field nums(json d) { return {Type::number_list, std::move(d), false, {}, {}}; }
Field ints(json d) { return {Type::integer_list, std::move(d), false, {}, {}}; }
Field section(Fields f) { return {Type::object, nullptr, true, {}, std::move(f)}; }
Field list_of(Fields f) { return {Type::object_list, nullptr, true, {}, std::move(f)}; }
// filled with its defaults whenever the parent section is present
Field subsection(Fields f) { return {Type::object, nullptr, false, {}, std::move(f)}; }

Field mlf_section(double eps, double t0, double t1, double wmin, double wmax, double step) {
    return subsection({{"epsilon", num(eps)},
                    {"t0", num(t0)},
                    {"t1", num(t1)},
                    {"omega_min", num(wmin)},
                    {"omega_max", num(wmax)},
                    {"omega_step", num(step)}});
}

const Field& schema() {
    static const Field root = [] {
        Field spectrum = mlf_section(5e-3, 20.0, 1000.0, -15.0, 5.0, 1e-2);
        spectrum.fields.push_back({"margin", num(0.5)});
        spectrum.fields.push_back({"max_frequency", num(15.0)});

        Field convolution = mlf_section(1e-2, 1.0, 500.0, -20.0, 20.0, 1e-2);
        convolution.fields.push_back({"out_min", num(-12.0)});
        convolution.fields.push_back({"out_max", num(-6.0)});

        Field spectral = mlf_section(1e-3, 10.0, 5000.0, -20.0, 20.0, 1e-3);
        spectral.optional = true;
        spectral.fields.push_back({"round_trip_from", num(100.0)});
        spectral.fields.push_back({"round_trip_to", num(1000.0)});
        spectral.fields.push_back({"convolution", convolution});

        return section({
            {"kind", str(nullptr, {"dispersion", "scatter-1d", "scatter-2d", "scattered-field", "qwalk",
                                   "spectral-selftest"})},
            {"description", str("", {})},
            {"edge_policy", str("fail", {"fail", "warn"})},
            {"lattice", section({{"sites", integer_f(800)},
                                 {"origin", integer_f(-400)},
                                 {"hopping", nums(json::array({1.0}))},
                                 {"absorber", section({{"width", integer_f(50)}, {"strength", num(1.0)}})}})},
            {"lattice2d", section({{"nx", integer_f(42)},
                                   {"ny", integer_f(42)},
                                   {"kappa", num(1.0)},
                                   {"origin_x", integer_f(-21)},
                                   {"origin_y", integer_f(-21)}})},
            {"perturbation", section({{"type", str("gaussian", {"gaussian", "bond"})},
                                      {"amplitude", num(5.0)},
                                      {"width", num(2.0)},
                                      {"center", num(0.0)},
                                      {"center_y", num(0.0)},
                                      {"sites", ints(json::array({0, 1}))}})},
            {"modulation", list_of({{"amplitude", num_required()},
                                    {"amplitude_im", num(0.0)},
                                    {"frequency", num_required()},
                                    {"kind", str("exp", {"exp", "cos"})}})},
            {"packet", section({{"center", num(-90.0)}, {"width", num(10.0)}, {"carrier", num("pi/2")}})},
            {"packet2d", section({{"center_x", num(-7.0)},
                                  {"center_y", num(-7.0)},
                                  {"width", num(3.0)},
                                  {"carrier_x", num("pi/2")},
                                  {"carrier_y", num("pi/2")}})},
            {"time", section({{"end", num(100.0)}, {"snapshots", nums(json::array())}, {"series_dt", num(1.0)}})},
            {"integrator", section({{"rel_tol", num(1e-9)},
                                    {"abs_tol", num(1e-12)},
                                    {"h_init", num(1e-3)},
                                    {"h_min", num(1e-12)},
                                    {"h_max", num(0.5)},
                                    {"safety", num(0.9)}})},
            {"verdict", section({{"threshold", num(1e-2)}, {"overlap_tolerance", num(1e-10)}})},
            {"qwalk", section({{"beta", num("0.97*pi/2")},
                               {"site_first", integer_f(-75)},
                               {"site_last", integer_f(75)},
                               {"start", integer_f(-15)},
                               {"steps", integer_f(600)},
                               {"profile_amplitude", num(1.0)},
                               {"profile_width", num(3.0)},
                               {"far_radius", integer_f(10)},
                               {"threshold", num(1e-8)}})},
            {"scattered_field", section({{"carrier", num("pi/2")},
                                         {"t_start", num(-20.0)},
                                         {"t_end", num(1000.0)},
                                         {"ramp_time", num(8.0)},
                                         {"taper_length", num(5.0)},
                                         {"output_dt", num(0.025)},
                                         {"full_every", integer_f(40)},
                                         {"far_gap", integer_f(10)},
                                         {"probes", ints(json::array({0}))},
                                         {"fit", subsection({{"side", str("right", {"left", "right"})},
                                                          {"first", integer_f(8)},
                                                          {"last", integer_f(14)}})},
                                         {"spectrum", spectrum}})},
            {"dispersion", section({{"samples", integer_f(4096)}, {"energies", nums(json::array())}})},
            {"spectral", spectral},
        });
    }();
    return root;
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path.empty() ? what : path + ": " + what);
}

std::string scalar_text(const json& v, const std::string& path) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return v.dump();
    fail(path, "expected a scalar");
}

json resolve_number(const json& v, const std::string& path) {
    if (v.is_number()) return v.get<double>();
    const std::string text = scalar_text(v, path);
    // plain literals are stored as numbers, anything else verbatim
    const char* begin = text.c_str();
    char* end = nullptr;
    const double d = std::strtod(begin, &end);
    if (end != begin && *end == '\0' && std::isfinite(d)) return d;
    try {
        evaluate_expression(text);
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
    return text;
}

json resolve_integer(const json& v, const std::string& path) {
    if (v.is_number_integer()) return v.get<long>();
    double d = 0.0;
    try {
        d = v.is_number() ? v.get<double>() : evaluate_expression(scalar_text(v, path));
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
    if (d != std::floor(d) || std::abs(d) > 1e15) fail(path, "expected an integer");
    return static_cast<long>(d);
}

json resolve(const json& v, const Field& f, const std::string& path);

json resolve_object(const json& v, const Fields& fields, const std::string& path) {
    if (!v.is_object()) fail(path, "expected a mapping");
    for (const auto& [key, _] : v.items()) {
        bool known = false;
        for (const auto& [name, __] : fields) known = known || name == key;
        if (!known) fail(join(path, key), "unknown key");
    }
    json out = json::object();
    for (const auto& [name, field] : fields) {
        const std::string p = join(path, name);
        if (v.contains(name) && !v.at(name).is_null()) {
            out[name] = resolve(v.at(name), field, p);
        } else if (field.type == Type::object) {
            if (!field.optional) out[name] = resolve_object(json::object(), field.fields, p);
        } else if (field.type == Type::object_list) {
            if (!field.optional) fail(p, "missing list");
        } else if (!field.def.is_null()) {
            out[name] = resolve(field.def, field, p);
        } else {
            fail(p, "missing required value");
        }
    }
    return out;
}

json resolve(const json& v, const Field& f, const std::string& path) {
    switch (f.type) {
    case Type::number:
        return resolve_number(v, path);
    case Type::integer:
        return resolve_integer(v, path);
    case Type::string: {
        if (!v.is_string()) fail(path, "expected a string");
        const auto s = v.get<std::string>();
        if (!f.choices.empty() && std::find(f.choices.begin(), f.choices.end(), s) == f.choices.end()) {
            std::string allowed;
            for (const auto& c : f.choices) allowed += (allowed.empty() ? "" : ", ") + c;
            fail(path, "'" + s + "' is not one of: " + allowed);
        }
        return s;
    }
    case Type::number_list:
    case Type::integer_list: {
        if (!v.is_array()) fail(path, "expected a list");
        json out = json::array();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string p = path + "." + std::to_string(i);
            out.push_back(f.type == Type::number_list ? resolve_number(v[i], p) : resolve_integer(v[i], p));
        }
        return out;
    }
    case Type::object:
        return resolve_object(v, f.fields, path);
    case Type::object_list: {
        if (!v.is_array()) fail(path, "expected a list");
        json out = json::array();
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(resolve_object(v[i], f.fields, path + "." + std::to_string(i)));
        return out;
    }
    }
    fail(path, "bad schema");
}

json yaml_to_json(const YAML::Node& n) {
    switch (n.Type()) {
    case YAML::NodeType::Map: {
        json o = json::object();
        for (const auto& kv : n) o[kv.first.as<std::string>()] = yaml_to_json(kv.second);
        return o;
    }
    case YAML::NodeType::Sequence: {
        json a = json::array();
        for (const auto& x : n) a.push_back(yaml_to_json(x));
        return a;
    }
    case YAML::NodeType::Scalar:
        return n.Scalar();
    default:
        return nullptr;
    }
}

void emit(YAML::Emitter& out, const json& v) {
    if (v.is_object()) {
        out << YAML::BeginMap;
        for (const auto& [k, x] : v.items()) {
            out << YAML::Key << k << YAML::Value;
            emit(out, x);
        }
        out << YAML::EndMap;
    } else if (v.is_array()) {
        const bool flat = std::none_of(v.begin(), v.end(), [](const json& x) { return x.is_structured(); });
        out << (flat ? YAML::Flow : YAML::Block) << YAML::BeginSeq;
        for (const auto& x : v) emit(out, x);
        out << YAML::EndSeq;
    } else if (v.is_string()) {
        out << v.get<std::string>();
    } else {
        out << v.dump();
    }
}

json parse_yaml_scalar(const std::string& text) {
    try {
        return yaml_to_json(YAML::Load(text));
    } catch (const YAML::Exception& e) {
        throw ConfigError("cannot parse value '" + text + "': " + e.what());
    }
}

}  // namespace

const json& ExperimentConfig::section(const std::string& name) const {
    if (!tree.contains(name)) throw ConfigError("kind '" + kind() + "' requires section '" + name + "'");
    return tree.at(name);
}

ExperimentConfig resolve_config(const json& raw) { return {resolve_object(raw, schema().fields, "")}; }

ExperimentConfig parse_config_text(const std::string& yaml_text) {
    YAML::Node n;
    try {
        n = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("malformed YAML: ") + e.what());
    }
    return resolve_config(yaml_to_json(n));
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string to_yaml(const ExperimentConfig& cfg) {
    YAML::Emitter out;
    emit(out, cfg.tree);
    return std::string(out.c_str()) + "\n";
}

std::string canonical_json(const ExperimentConfig& cfg) { return cfg.tree.dump(); }

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string config_hash(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_json(cfg))));
    return buf;
}

ExperimentConfig set_value(const ExperimentConfig& cfg, const std::string& path, const json& value) {
    json tree = cfg.tree;
    json* node = &tree;
    std::stringstream ss(path);
    std::string key;
    std::vector<std::string> keys;
    while (std::getline(ss, key, '.')) keys.push_back(key);
    if (keys.empty()) throw ConfigError("empty override path");
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const std::string& k = keys[i];
        const bool last = i + 1 == keys.size();
        if (node->is_array()) {
            char* end = nullptr;
            const long idx = std::strtol(k.c_str(), &end, 10);
            if (*end != '\0' || idx < 0 || static_cast<std::size_t>(idx) >= node->size())
                throw ConfigError(path + ": no list element '" + k + "'");
            node = &(*node)[static_cast<std::size_t>(idx)];
        } else {
            if (!node->is_object()) throw ConfigError(path + ": '" + k + "' is below a scalar");
            if (!node->contains(k) && !last) (*node)[k] = json::object();
            node = &(*node)[k];
        }
        if (last) *node = value;
    }
    return resolve_config(tree);
}

ExperimentConfig apply_override(const ExperimentConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not path=value");
    return set_value(cfg, assignment.substr(0, eq), parse_yaml_scalar(assignment.substr(eq + 1)));
}

double number(const json& v) {
    if (v.is_number()) return v.get<double>();
    return evaluate_expression(v.get<std::string>());
}

long integer(const json& v) { return v.get<long>(); }

std::vector<double> numbers(const json& v) {
    std::vector<double> out;
    for (const auto& x : v) out.push_back(number(x));
    return out;
}

std::vector<long> integers(const json& v) {
    std::vector<long> out;
    for (const auto& x : v) out.push_back(x.get<long>());
    return out;
}

}  // namespace tbscat::app
