#include "armteleop/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "armteleop/codec.hpp"
#include "armteleop/task.hpp"

namespace armteleop {

namespace {

template <typename T>
void read(const Json& obj, const char* key, T& out)
{
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        out = it->get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(std::string("config field \"") + key + "\" has the wrong type");
    }
}

const Json* section(const Json& root, const char* key)
{
    const auto it = root.find(key);
    if (it == root.end()) return nullptr;
    if (!it->is_object()) throw ConfigError(std::string("config section \"") + key + "\" must be an object");
    return &*it;
}

} // namespace

AppConfig parse_config(const std::string& document, const std::string& base_dir)
{
    Json root;
    try {
        root = Json::parse(document);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config must be a JSON object");

    AppConfig cfg;
    cfg.markers = default_markers();
    SessionConfig& s = cfg.session;

    if (const auto it = root.find("chain"); it != root.end()) {
        if (!it->is_string()) throw ConfigError("config field \"chain\" must be a path");
        std::filesystem::path p(it->get<std::string>());
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        try {
            s.chain = load_chain_file(p.string());
        } catch (const std::exception& e) {
            throw ConfigError("chain " + p.string() + ": " + e.what());
        }
    }
    read(root, "frame_rate", s.frame_rate);
    read(root, "overlap_epsilon", s.overlap_epsilon);
    if (const auto it = root.find("rotation_offset"); it != root.end()) {
        try {
            s.rotation_offset = canonical(quat_from_json(*it, "rotation_offset"));
        } catch (const FormatError& e) {
            throw ConfigError(e.what());
        }
    }
    if (const Json* ik = section(root, "ik")) {
        read(*ik, "population_size", s.ik.population_size);
        read(*ik, "generations_per_frame", s.ik.generations_per_frame);
        read(*ik, "smoothing_alpha", s.ik.smoothing_alpha);
        read(*ik, "position_tolerance", s.ik.position_tolerance);
        read(*ik, "rotation_tolerance", s.ik.rotation_tolerance);
        read(*ik, "position_weight", s.ik.position_weight);
        read(*ik, "rotation_weight", s.ik.rotation_weight);
        read(*ik, "rng_seed", s.ik.rng_seed);
        read(*ik, "mutation_sigma", s.ik.mutation_sigma);
        read(*ik, "elite_fraction", s.ik.elite_fraction);
        read(*ik, "init_sigma", s.ik.init_sigma);
    }
    if (const Json* lim = section(root, "limits")) {
        read(*lim, "max_line_velocity", s.limits.max_line_velocity);
        read(*lim, "max_line_acceleration", s.limits.max_line_acceleration);
        read(*lim, "gripper_speed", s.limits.gripper_speed);
        read(*lim, "command_latency", s.limits.command_latency);
        read(*lim, "max_angular_velocity", s.limits.max_angular_velocity);
        read(*lim, "max_angular_acceleration", s.limits.max_angular_acceleration);
    }
    if (const Json* markers = section(root, "markers")) {
        cfg.markers.clear();
        for (const auto& [name, pos] : markers->items()) {
            if (name.size() != 1) throw ConfigError("marker names are single letters, got \"" + name + "\"");
            try {
                cfg.markers[name[0]] = vec_from_json(pos, "markers", 3);
            } catch (const FormatError& e) {
                throw ConfigError(e.what());
            }
        }
    }
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

AppConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::string config_to_json(const AppConfig& cfg, const std::string& chain_path)
{
    const SessionConfig& s = cfg.session;
    Json root;
    if (!chain_path.empty()) root["chain"] = chain_path;
    root["frame_rate"] = s.frame_rate;
    root["overlap_epsilon"] = s.overlap_epsilon;
    root["rotation_offset"] = quat_to_json(s.rotation_offset);
    root["ik"] = Json{{"population_size", s.ik.population_size},
                      {"generations_per_frame", s.ik.generations_per_frame},
                      {"smoothing_alpha", s.ik.smoothing_alpha},
                      {"position_tolerance", s.ik.position_tolerance},
                      {"rotation_tolerance", s.ik.rotation_tolerance},
                      {"position_weight", s.ik.position_weight},
                      {"rotation_weight", s.ik.rotation_weight},
                      {"rng_seed", s.ik.rng_seed},
                      {"mutation_sigma", s.ik.mutation_sigma},
                      {"elite_fraction", s.ik.elite_fraction},
                      {"init_sigma", s.ik.init_sigma}};
    root["limits"] = Json{{"max_line_velocity", s.limits.max_line_velocity},
                          {"max_line_acceleration", s.limits.max_line_acceleration},
                          {"gripper_speed", s.limits.gripper_speed},
                          {"command_latency", s.limits.command_latency},
                          {"max_angular_velocity", s.limits.max_angular_velocity},
                          {"max_angular_acceleration", s.limits.max_angular_acceleration}};
    Json markers = Json::object();
    for (const auto& [name, pos] : cfg.markers) markers[std::string(1, name)] = vec_to_json(pos);
    root["markers"] = std::move(markers);
    return root.dump(2) + "\n";
}

} // namespace armteleop
