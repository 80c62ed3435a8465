#include "config.hpp"

#include <geolp/error.hpp>

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace geolp::cli {

namespace {

void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed)
{
    if (!node.IsMap()) throw ConfigError(where + " must be a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <class T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where)
{
    if (!node[key]) return;
    try {
        out = node[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where + "." + key + ": malformed value");
    }
}

std::vector<Rung> read_rungs(const YAML::Node& node, const std::string& where)
{
    std::vector<Rung> out;
    if (!node.IsSequence()) throw ConfigError(where + " must be a list of [resolution, slices] pairs");
    for (const auto& r : node) {
        if (!r.IsSequence() || r.size() != 2) throw ConfigError(where + " entries must be [resolution, slices]");
        try {
            out.emplace_back(r[0].as<int>(), r[1].as<int>());
        } catch (const YAML::Exception&) {
            throw ConfigError(where + ": malformed rung");
        }
    }
    return out;
}

MetricRecipe read_recipe(const YAML::Node& node, const std::string& where)
{
    check_keys(node, where, {"kind", "amplitude", "mode1", "mode2", "seed", "band"});
    std::string kind = "flat";
    double amplitude = 0.0;
    int mode1 = 1, mode2 = 1, band = 2;
    std::uint64_t seed = 0;
    read(node, "kind", kind, where);
    read(node, "amplitude", amplitude, where);
    read(node, "mode1", mode1, where);
    read(node, "mode2", mode2, where);
    read(node, "seed", seed, where);
    read(node, "band", band, where);
    if (kind == "flat") return MetricRecipe::flat();
    if (kind == "conformal") return MetricRecipe::conformal(amplitude, mode1, mode2);
    if (kind == "perturbed") return MetricRecipe::perturbed(amplitude, seed, band);
    throw ConfigError(where + ".kind must be flat, conformal or perturbed");
}

void read_foliation(const YAML::Node& node, const std::string& where, FoliationConfig& c, std::vector<Rung>* ladder)
{
    std::set<std::string> keys{"initial", "r0", "delta0_target", "cone_background", "seed", "band",
                               "trchi_amplitude", "chihat_amplitude", "zeta_amplitude", "beta_amplitude"};
    if (ladder) keys.insert("ladder");
    check_keys(node, where, keys);
    if (node["initial"]) c.initial = read_recipe(node["initial"], where + ".initial");
    read(node, "r0", c.r0, where);
    read(node, "delta0_target", c.delta0_target, where);
    read(node, "cone_background", c.cone_background, where);
    read(node, "seed", c.seed, where);
    read(node, "band", c.band, where);
    read(node, "trchi_amplitude", c.trchi_amplitude, where);
    read(node, "chihat_amplitude", c.chihat_amplitude, where);
    read(node, "zeta_amplitude", c.zeta_amplitude, where);
    read(node, "beta_amplitude", c.beta_amplitude, where);
    if (ladder && node["ladder"]) *ladder = read_rungs(node["ladder"], where + ".ladder");
}

} // namespace

RunConfig parse_config(const std::string& yaml_text)
{
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("YAML: ") + e.what());
    }
    RunConfig cfg;
    if (root.IsNull()) {
        cfg.validate();
        return cfg;
    }
    check_keys(root, "config",
               {"seed", "output", "suites", "kernel", "torus", "sphere", "foliation", "stress", "cone", "samples", "flat"});
    read(root, "seed", cfg.seed, "config");
    read(root, "output", cfg.output, "config");
    read(root, "suites", cfg.suites, "config");
    if (const auto k = root["kernel"]) {
        check_keys(k, "kernel", {"N", "n_der", "mode"});
        read(k, "N", cfg.kernel.N, "kernel");
        read(k, "n_der", cfg.kernel.n_der, "kernel");
        std::string mode = to_string(cfg.kernel.mode);
        read(k, "mode", mode, "kernel");
        try {
            cfg.kernel.mode = parse_lp_mode(mode);
        } catch (const Error&) {
            throw ConfigError("kernel.mode must be raw or normalized");
        }
    }
    if (const auto t = root["torus"]) {
        check_keys(t, "torus", {"ladder", "metric"});
        read(t, "ladder", cfg.torus_ladder, "torus");
        if (t["metric"]) cfg.torus_metric = read_recipe(t["metric"], "torus.metric");
    }
    if (const auto s = root["sphere"]) {
        check_keys(s, "sphere", {"l_max", "radius"});
        read(s, "l_max", cfg.sphere_ladder, "sphere");
        read(s, "radius", cfg.sphere_radius, "sphere");
    }
    if (root["foliation"]) read_foliation(root["foliation"], "foliation", cfg.foliation, &cfg.foliation_ladder);
    if (root["stress"]) read_foliation(root["stress"], "stress", cfg.stress, nullptr);
    if (const auto c = root["cone"]) {
        check_keys(c, "cone", {"r0", "ladder"});
        read(c, "r0", cfg.cone_r0, "cone");
        if (c["ladder"]) cfg.cone_ladder = read_rungs(c["ladder"], "cone.ladder");
    }
    if (const auto s = root["samples"]) {
        check_keys(s, "samples", {"count", "slope", "t_modes", "max_frequency"});
        read(s, "count", cfg.samples.count, "samples");
        read(s, "slope", cfg.samples.slope, "samples");
        read(s, "t_modes", cfg.samples.t_modes, "samples");
        read(s, "max_frequency", cfg.samples.max_frequency, "samples");
    }
    if (const auto f = root["flat"]) {
        check_keys(f, "flat", {"ladder", "samples", "pairs", "property_samples"});
        read(f, "ladder", cfg.flat_ladder, "flat");
        read(f, "samples", cfg.flat_samples, "flat");
        read(f, "pairs", cfg.flat_pairs, "flat");
        read(f, "property_samples", cfg.flat_property_samples, "flat");
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return parse_config(os.str());
}

} // namespace geolp::cli
