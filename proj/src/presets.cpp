#include "presets.hpp"

#include <utility>

namespace tbscat::app {

namespace {

constexpr const char* chain_1d = R"(
lattice:
  sites: 800
  origin: -400
  hopping: [1, 0.2]
packet:
  center: -90
  width: 10
  carrier: pi/2
time:
  end: 100
  series_dt: 1
)";

constexpr const char* onsite = R"(
perturbation:
  type: gaussian
  amplitude: 5
  width: 2
  center: 0
)";

constexpr const char* bond = R"(
perturbation:
  type: bond
  amplitude: 1
  sites: [0, 1]
)";

std::string pair_1d(const char* kind) {
    return std::string("modulation:\n  - {amplitude: 1, frequency: 5, kind: ") + kind +
           "}\n  - {amplitude: 1, frequency: sqrt(18), kind: " + kind + "}\n";
}

constexpr const char* walk = R"(
qwalk:
  beta: 0.97*pi/2
  site_first: -75
  site_last: 75
  start: -15
  steps: 600
  profile_amplitude: 1
  profile_width: 3
  far_radius: 10
  threshold: 1e-8
)";

std::string pair_walk(const char* kind) {
    return std::string("modulation:\n  - {amplitude: 0.1, frequency: 0.1, kind: ") + kind +
           "}\n  - {amplitude: 0.06, frequency: sqrt(2)/15, kind: " + kind + "}\n";
}

constexpr const char* square = R"(
lattice2d:
  nx: 42
  ny: 42
  kappa: 1
  origin_x: -21
  origin_y: -21
perturbation:
  type: gaussian
  amplitude: 25
  width: 2
  center: 0
  center_y: 0
packet2d:
  center_x: -7
  center_y: -7
  width: 3
  carrier_x: pi/2
  carrier_y: pi/2
time:
  end: 15
  snapshots: [0, 5, 7.5, 10, 15]
  series_dt: 0.25
verdict:
  overlap_tolerance: 1e-3
edge_policy: warn
)";

std::string pair_square(const char* kind) {
    return std::string("modulation:\n  - {amplitude: 1, frequency: 10, kind: ") + kind +
           "}\n  - {amplitude: 1, frequency: 2*sqrt(18), kind: " + kind + "}\n";
}

constexpr const char* selftest = R"(
modulation:
  - {amplitude: 1, frequency: 5}
  - {amplitude: 0.5, frequency: sqrt(18)}
spectral:
  epsilon: 1e-3
  t0: 10
  t1: 5000
  omega_min: -20
  omega_max: 20
  omega_step: 1e-3
  round_trip_from: 100
  round_trip_to: 1000
  convolution:
    epsilon: 1e-2
    t0: 1
    t1: 500
    omega_min: -20
    omega_max: 20
    omega_step: 1e-2
    out_min: -12
    out_max: -6
)";

struct Entry {
    const char* name;
    const char* description;
    std::string yaml;
};

std::string head(const char* kind, const char* description) {
    return std::string("kind: ") + kind + "\ndescription: \"" + description + "\"\n";
}

const std::vector<Entry>& registry() {
    static const std::vector<Entry> r = [] {
        std::vector<Entry> e;
        auto add = [&](const char* name, const char* kind, const char* d, std::string body) {
            e.push_back({name, d, head(kind, d) + body});
        };
        add("fig1a", "scatter-1d", "on-site Gaussian with one-sided modulation above the band; invisible",
            std::string(chain_1d) + onsite + pair_1d("exp"));
        add("fig1b", "scatter-1d", "on-site Gaussian with cosine modulation; visible",
            std::string(chain_1d) + onsite + pair_1d("cos"));
        add("fig2a", "scatter-1d", "hopping defect between sites 0 and 1, one-sided modulation; invisible",
            std::string(chain_1d) + bond + pair_1d("exp"));
        add("fig2b", "scatter-1d", "hopping defect between sites 0 and 1, cosine modulation; visible",
            std::string(chain_1d) + bond + pair_1d("cos"));
        add("fig3a", "qwalk", "fiber-loop quantum walk, one-sided potential modulation; quiet far field",
            std::string(walk) + pair_walk("exp"));
        add("fig3b", "qwalk", "fiber-loop quantum walk, cosine potential modulation; scattered far field",
            std::string(walk) + pair_walk("cos"));
        add("fig4nh", "scatter-2d", "42x42 square lattice, non-Hermitian space-time Gaussian; I(t) decays",
            std::string(square) + pair_square("exp"));
        add("fig4h", "scatter-2d", "42x42 square lattice, Hermitian space-time Gaussian; I(t) persists",
            std::string(square) + pair_square("cos"));
        add("appendix-selftest", "spectral-selftest",
            "window kernel areas, transform round trip and product-convolution relation", selftest);
        return e;
    }();
    return r;
}

const Entry& find(std::string name) {
    if (name == "fig4") name = "fig4nh";
    for (const auto& e : registry())
        if (name == e.name) return e;
    throw ConfigError("unknown preset '" + name + "' (see list-presets)");
}

}  // namespace

std::vector<PresetInfo> list_presets() {
    std::vector<PresetInfo> out;
    for (const auto& e : registry()) out.push_back({e.name, e.description});
    return out;
}

std::string preset_source(const std::string& name) { return find(name).yaml; }

ExperimentConfig preset(const std::string& name) { return parse_config_text(find(name).yaml); }

}  // namespace tbscat::app
