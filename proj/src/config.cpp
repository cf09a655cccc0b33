#include "qmem/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace qmem {

namespace {

void require_finite(std::vector<std::string>& bad, const char* name, double v) {
    if (!std::isfinite(v)) bad.push_back(std::string(name) + " must be finite");
}

void require(std::vector<std::string>& bad, bool ok, const std::string& msg) {
    if (!ok) bad.push_back(msg);
}

}  // namespace

ValidatedConfig validate(const ExperimentConfig& cfg) {
    std::vector<std::string> bad;
    require_finite(bad, "optical_depth", cfg.optical_depth);
    require_finite(bad, "single_atom_rate", cfg.single_atom_rate);
    require_finite(bad, "write_duration", cfg.write_duration);
    require_finite(bad, "decoherence_rate", cfg.decoherence_rate);
    require_finite(bad, "delay", cfg.delay);
    require_finite(bad, "retrieve_coupling", cfg.retrieve_coupling);
    require_finite(bad, "cell_length", cfg.cell_length);
    require_finite(bad, "stokes_efficiency", cfg.stokes_efficiency);
    require_finite(bad, "antistokes_efficiency", cfg.antistokes_efficiency);
    require_finite(bad, "stokes_background", cfg.stokes_background);
    require_finite(bad, "antistokes_background", cfg.antistokes_background);
    require_finite(bad, "dead_time", cfg.dead_time);
    if (!bad.empty()) throw ValidationError(std::move(bad));

    require(bad, cfg.optical_depth > 0, "optical_depth must be > 0");
    require(bad, cfg.single_atom_rate >= 0, "single_atom_rate must be >= 0");
    require(bad, cfg.write_duration >= 0, "write_duration must be >= 0");
    require(bad, cfg.mode_count >= 1, "mode_count must be >= 1");
    require(bad, cfg.decoherence_rate >= 0, "decoherence_rate must be >= 0");
    require(bad, cfg.delay >= 0, "delay must be >= 0");
    require(bad, cfg.retrieve_coupling >= 0, "retrieve_coupling must be >= 0");
    require(bad, cfg.cell_length == 1.0,
            "cell_length is normalized and must be exactly 1");
    require(bad, cfg.stokes_efficiency >= 0 && cfg.stokes_efficiency <= 1,
            "stokes_efficiency must be in [0,1]");
    require(bad, cfg.antistokes_efficiency >= 0 && cfg.antistokes_efficiency <= 1,
            "antistokes_efficiency must be in [0,1]");
    require(bad, cfg.stokes_background >= 0, "stokes_background must be >= 0");
    require(bad, cfg.antistokes_background >= 0,
            "antistokes_background must be >= 0");
    require(bad, cfg.dead_time >= 0, "dead_time must be >= 0");
    if (!bad.empty()) throw ValidationError(std::move(bad));

    ValidatedConfig v;
    v.cfg_ = cfg;
    v.xi_ = cfg.optical_depth * cfg.single_atom_rate;
    v.storage_survival_ = std::exp(-cfg.decoherence_rate * cfg.delay);
    return v;
}

namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "optical_depth",      "single_atom_rate",      "write_duration",
    "mode_count",         "decoherence_rate",      "delay",
    "retrieve_coupling",  "cell_length",           "stokes_efficiency",
    "antistokes_efficiency", "stokes_background",  "antistokes_background",
    "dead_time",          "rng_seed"};

}  // namespace

ExperimentConfig config_from_json(const std::string& json_text) {
    json j = json::parse(json_text);
    if (!j.is_object())
        throw ValidationError({"config file must be a flat JSON object"});
    std::vector<std::string> bad;
    for (const auto& [key, _] : j.items())
        if (!kKnownKeys.count(key)) bad.push_back("unknown config key: " + key);
    if (!bad.empty()) throw ValidationError(std::move(bad));

    ExperimentConfig c;
    auto opt = [&j](const char* k, auto& field) {
        if (j.contains(k)) field = j.at(k).get<std::decay_t<decltype(field)>>();
    };
    opt("optical_depth", c.optical_depth);
    opt("single_atom_rate", c.single_atom_rate);
    opt("write_duration", c.write_duration);
    opt("mode_count", c.mode_count);
    opt("decoherence_rate", c.decoherence_rate);
    opt("delay", c.delay);
    opt("retrieve_coupling", c.retrieve_coupling);
    opt("cell_length", c.cell_length);
    opt("stokes_efficiency", c.stokes_efficiency);
    opt("antistokes_efficiency", c.antistokes_efficiency);
    opt("stokes_background", c.stokes_background);
    opt("antistokes_background", c.antistokes_background);
    opt("dead_time", c.dead_time);
    opt("rng_seed", c.rng_seed);
    return c;
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["optical_depth"] = c.optical_depth;
    j["single_atom_rate"] = c.single_atom_rate;
    j["write_duration"] = c.write_duration;
    j["mode_count"] = c.mode_count;
    j["decoherence_rate"] = c.decoherence_rate;
    j["delay"] = c.delay;
    j["retrieve_coupling"] = c.retrieve_coupling;
    j["cell_length"] = c.cell_length;
    j["stokes_efficiency"] = c.stokes_efficiency;
    j["antistokes_efficiency"] = c.antistokes_efficiency;
    j["stokes_background"] = c.stokes_background;
    j["antistokes_background"] = c.antistokes_background;
    j["dead_time"] = c.dead_time;
    j["rng_seed"] = c.rng_seed;
    return j.dump(2) + "\n";
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError({"cannot open config file: " + path});
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

}  // namespace qmem
