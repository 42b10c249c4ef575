#include "skyfleet/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "skyfleet/errors.hpp"

namespace skyfleet {

using json = nlohmann::json;

const char* to_string(CollabMode mode) {
    switch (mode) {
        case CollabMode::None: return "none";
        case CollabMode::Late: return "late";
        case CollabMode::Early: return "early";
        case CollabMode::Sisw: return "sisw";
    }
    return "?";
}

const char* to_string(GbgMode mode) {
    switch (mode) {
        case GbgMode::GroundPrior: return "ground-prior";
        case GbgMode::FlatGround: return "flat-ground";
        case GbgMode::DepthBinOracle: return "depth-bin-oracle";
        case GbgMode::DepthBinUniform: return "depth-bin-uniform";
    }
    return "?";
}

CollabMode collab_mode_from_string(const std::string& name) {
    if (name == "none") return CollabMode::None;
    if (name == "late") return CollabMode::Late;
    if (name == "early") return CollabMode::Early;
    if (name == "sisw") return CollabMode::Sisw;
    throw ConfigError("unknown collaboration mode '" + name +
                      "' (valid: none, late, early, sisw)");
}

GbgMode gbg_mode_from_string(const std::string& name) {
    if (name == "ground-prior") return GbgMode::GroundPrior;
    if (name == "flat-ground") return GbgMode::FlatGround;
    if (name == "depth-bin-oracle") return GbgMode::DepthBinOracle;
    if (name == "depth-bin-uniform") return GbgMode::DepthBinUniform;
    throw ConfigError("unknown gbg mode '" + name +
                      "' (valid: ground-prior, flat-ground, depth-bin-oracle, "
                      "depth-bin-uniform)");
}

GridSpec ScenarioConfig::grid_spec() const {
    if (grid == "long") return GridSpec::long_range();
    if (grid == "short") return GridSpec::short_range();
    throw ConfigError("grid must be 'long' or 'short'");
}

VoxelSpec ScenarioConfig::voxel_spec() const {
    VoxelSpec spec;
    spec.plan = grid_spec();
    spec.z_min = gbg.voxel_z_min;
    spec.nz = gbg.voxel_z_count;
    spec.z_res = (gbg.voxel_z_max - gbg.voxel_z_min) / gbg.voxel_z_count;
    return spec;
}

void ScenarioConfig::validate() const {
    if (grid != "long" && grid != "short") throw ConfigError("field 'grid' must be long|short");
    if (rig.drones < 1) throw ConfigError("field 'rig.drones' must be >= 1");
    if (!(rig.altitude > 0.0)) throw ConfigError("field 'rig.altitude' must be > 0");
    if (rig.image_width < 2 || rig.image_height < 2)
        throw ConfigError("field 'rig.image_*' must be >= 2");
    if (scene.instance_count < 0) throw ConfigError("field 'scene.instances' must be >= 0");
    if (!(scene.area_half_extent > 0.0))
        throw ConfigError("field 'scene.area_half_extent' must be > 0");
    if (scene.height_max > gbg.height_bins.hi)
        throw ConfigError("field 'scene.height_max' exceeds the height-bin range");
    if (sisw.window < 3 || sisw.window % 2 == 0)
        throw ConfigError("field 'sisw.window' must be odd and >= 3");
    if (!(sisw.ratio > 0.0) || sisw.ratio > 1.0)
        throw ConfigError("field 'sisw.ratio' must be in (0, 1]");
    if (!(sisw.infill_sigma > 0.0)) throw ConfigError("field 'sisw.infill_sigma' must be > 0");
    if (sisw.infill_radius < 1) throw ConfigError("field 'sisw.infill_radius' must be >= 1");
    if (frames.t1 < 1 || frames.t2 < 1) throw ConfigError("fields 'frames.t1/t2' must be >= 1");
    if (scene.frames != frames.t1 + frames.t2)
        throw ConfigError("field 'scene.frames' must equal t1 + t2");
    if (gbg.height_bins.count < 1 || !(gbg.height_bins.hi > gbg.height_bins.lo))
        throw ConfigError("field 'gbg.height_bins' is degenerate");
    if (gbg.depth_bins.count < 1 || !(gbg.depth_bins.hi > gbg.depth_bins.lo))
        throw ConfigError("field 'gbg.depth_bins' is degenerate");
    if (gbg.voxel_z_count < 1 || !(gbg.voxel_z_max > gbg.voxel_z_min))
        throw ConfigError("field 'gbg.voxel_z' is degenerate");
    if (!(decoder.occupancy_threshold_scale > 0.0))
        throw ConfigError("field 'decoder.occupancy_threshold_scale' must be > 0");
    if (!(metrics.center_gate_m > 0.0))
        throw ConfigError("field 'metrics.center_gate_m' must be > 0");
}

namespace {

void reject_unknown(const json& obj, const std::string& scope,
                    const std::set<std::string>& known) {
    for (const auto& [key, _] : obj.items()) {
        if (!known.count(key))
            throw ConfigError("unknown key '" + (scope.empty() ? key : scope + "." + key) + "'");
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (auto it = obj.find(key); it != obj.end()) out = it->get<T>();
}

}  // namespace

ScenarioConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be an object");
    reject_unknown(root, "",
                   {"seed", "scene", "rig", "grid", "gbg", "sisw", "collab", "decoder",
                    "metrics", "frames"});
    if (!root.contains("seed")) throw ConfigError("missing required field 'seed'");

    ScenarioConfig cfg;
    cfg.seed = root["seed"].get<uint64_t>();
    read(root, "grid", cfg.grid);

    if (root.contains("frames")) {
        const json& f = root["frames"];
        reject_unknown(f, "frames", {"t1", "t2", "dt"});
        read(f, "t1", cfg.frames.t1);
        read(f, "t2", cfg.frames.t2);
        read(f, "dt", cfg.frames.dt);
    }
    cfg.scene.frames = cfg.frames.t1 + cfg.frames.t2;
    cfg.scene.dt = cfg.frames.dt;

    if (root.contains("scene")) {
        const json& s = root["scene"];
        reject_unknown(s, "scene",
                       {"instances", "occluders", "area_half_extent", "speed_min", "speed_max",
                        "height_min", "height_max", "length_min", "length_max", "width_min",
                        "width_max", "turn_probability", "yaw_rate_max", "occluder_size",
                        "occluder_height_min", "occluder_height_max"});
        read(s, "instances", cfg.scene.instance_count);
        read(s, "occluders", cfg.scene.occluder_count);
        read(s, "area_half_extent", cfg.scene.area_half_extent);
        read(s, "speed_min", cfg.scene.speed_min);
        read(s, "speed_max", cfg.scene.speed_max);
        read(s, "height_min", cfg.scene.height_min);
        read(s, "height_max", cfg.scene.height_max);
        read(s, "length_min", cfg.scene.length_min);
        read(s, "length_max", cfg.scene.length_max);
        read(s, "width_min", cfg.scene.width_min);
        read(s, "width_max", cfg.scene.width_max);
        read(s, "turn_probability", cfg.scene.turn_probability);
        read(s, "yaw_rate_max", cfg.scene.yaw_rate_max);
        read(s, "occluder_size", cfg.scene.occluder_size);
        read(s, "occluder_height_min", cfg.scene.occluder_height_min);
        read(s, "occluder_height_max", cfg.scene.occluder_height_max);
    }

    if (root.contains("rig")) {
        const json& r = root["rig"];
        reject_unknown(r, "rig",
                       {"drones", "altitude", "spacing", "image_width", "image_height",
                        "hfov_deg"});
        read(r, "drones", cfg.rig.drones);
        read(r, "altitude", cfg.rig.altitude);
        read(r, "spacing", cfg.rig.spacing);
        read(r, "image_width", cfg.rig.image_width);
        read(r, "image_height", cfg.rig.image_height);
        read(r, "hfov_deg", cfg.rig.hfov_deg);
    }

    if (root.contains("gbg")) {
        const json& g = root["gbg"];
        reject_unknown(g, "gbg",
                       {"mode", "height_bin_min", "height_bin_max", "height_bin_count",
                        "height_noise_sigma", "depth_bin_min", "depth_bin_max",
                        "depth_bin_count", "voxel_z_min", "voxel_z_max", "voxel_z_count"});
        if (g.contains("mode")) cfg.gbg.mode = gbg_mode_from_string(g["mode"].get<std::string>());
        read(g, "height_bin_min", cfg.gbg.height_bins.lo);
        read(g, "height_bin_max", cfg.gbg.height_bins.hi);
        read(g, "height_bin_count", cfg.gbg.height_bins.count);
        read(g, "height_noise_sigma", cfg.gbg.height_noise_sigma);
        read(g, "depth_bin_min", cfg.gbg.depth_bins.lo);
        read(g, "depth_bin_max", cfg.gbg.depth_bins.hi);
        read(g, "depth_bin_count", cfg.gbg.depth_bins.count);
        read(g, "voxel_z_min", cfg.gbg.voxel_z_min);
        read(g, "voxel_z_max", cfg.gbg.voxel_z_max);
        read(g, "voxel_z_count", cfg.gbg.voxel_z_count);
    }

    if (root.contains("sisw")) {
        const json& s = root["sisw"];
        reject_unknown(s, "sisw",
                       {"window", "ratio", "eq4_mode", "infill_sigma", "infill_radius",
                        "count_info_map_bytes"});
        read(s, "window", cfg.sisw.window);
        read(s, "ratio", cfg.sisw.ratio);
        if (s.contains("eq4_mode")) {
            const std::string mode = s["eq4_mode"].get<std::string>();
            if (mode == "literal")
                cfg.sisw.eq4_mode = InfoVolumeMode::Literal;
            else if (mode == "abs-centered")
                cfg.sisw.eq4_mode = InfoVolumeMode::AbsCentered;
            else
                throw ConfigError("sisw.eq4_mode must be literal|abs-centered");
        }
        read(s, "infill_sigma", cfg.sisw.infill_sigma);
        read(s, "infill_radius", cfg.sisw.infill_radius);
        read(s, "count_info_map_bytes", cfg.sisw.count_info_map_bytes);
    }

    if (root.contains("collab")) {
        const json& c = root["collab"];
        reject_unknown(c, "collab", {"mode", "budget_bytes"});
        if (c.contains("mode"))
            cfg.collab_mode = collab_mode_from_string(c["mode"].get<std::string>());
        read(c, "budget_bytes", cfg.budget_bytes);
    }

    if (root.contains("decoder")) {
        const json& d = root["decoder"];
        reject_unknown(d, "decoder",
                       {"occupancy_threshold_scale", "match_gate_m", "logit_scale"});
        read(d, "occupancy_threshold_scale", cfg.decoder.occupancy_threshold_scale);
        read(d, "match_gate_m", cfg.decoder.match_gate_m);
        read(d, "logit_scale", cfg.decoder.logit_scale);
    }

    if (root.contains("metrics")) {
        const json& m = root["metrics"];
        reject_unknown(m, "metrics",
                       {"center_gate_m", "vpq_iou_gate", "gamma", "lambda1", "lambda2"});
        read(m, "center_gate_m", cfg.metrics.center_gate_m);
        read(m, "vpq_iou_gate", cfg.metrics.vpq_iou_gate);
        read(m, "gamma", cfg.metrics.gamma);
        read(m, "lambda1", cfg.metrics.lambda1);
        read(m, "lambda2", cfg.metrics.lambda2);
    }

    cfg.validate();
    return cfg;
}

std::string serialize_config(const ScenarioConfig& cfg) {
    json root;
    root["seed"] = cfg.seed;
    root["grid"] = cfg.grid;
    root["frames"] = {{"t1", cfg.frames.t1}, {"t2", cfg.frames.t2}, {"dt", cfg.frames.dt}};
    root["scene"] = {{"instances", cfg.scene.instance_count},
                     {"occluders", cfg.scene.occluder_count},
                     {"area_half_extent", cfg.scene.area_half_extent},
                     {"speed_min", cfg.scene.speed_min},
                     {"speed_max", cfg.scene.speed_max},
                     {"height_min", cfg.scene.height_min},
                     {"height_max", cfg.scene.height_max},
                     {"length_min", cfg.scene.length_min},
                     {"length_max", cfg.scene.length_max},
                     {"width_min", cfg.scene.width_min},
                     {"width_max", cfg.scene.width_max},
                     {"turn_probability", cfg.scene.turn_probability},
                     {"yaw_rate_max", cfg.scene.yaw_rate_max},
                     {"occluder_size", cfg.scene.occluder_size},
                     {"occluder_height_min", cfg.scene.occluder_height_min},
                     {"occluder_height_max", cfg.scene.occluder_height_max}};
    root["rig"] = {{"drones", cfg.rig.drones},       {"altitude", cfg.rig.altitude},
                   {"spacing", cfg.rig.spacing},     {"image_width", cfg.rig.image_width},
                   {"image_height", cfg.rig.image_height}, {"hfov_deg", cfg.rig.hfov_deg}};
    root["gbg"] = {{"mode", to_string(cfg.gbg.mode)},
                   {"height_bin_min", cfg.gbg.height_bins.lo},
                   {"height_bin_max", cfg.gbg.height_bins.hi},
                   {"height_bin_count", cfg.gbg.height_bins.count},
                   {"height_noise_sigma", cfg.gbg.height_noise_sigma},
                   {"depth_bin_min", cfg.gbg.depth_bins.lo},
                   {"depth_bin_max", cfg.gbg.depth_bins.hi},
                   {"depth_bin_count", cfg.gbg.depth_bins.count},
                   {"voxel_z_min", cfg.gbg.voxel_z_min},
                   {"voxel_z_max", cfg.gbg.voxel_z_max},
                   {"voxel_z_count", cfg.gbg.voxel_z_count}};
    root["sisw"] = {{"window", cfg.sisw.window},
                    {"ratio", cfg.sisw.ratio},
                    {"eq4_mode",
                     cfg.sisw.eq4_mode == InfoVolumeMode::Literal ? "literal" : "abs-centered"},
                    {"infill_sigma", cfg.sisw.infill_sigma},
                    {"infill_radius", cfg.sisw.infill_radius},
                    {"count_info_map_bytes", cfg.sisw.count_info_map_bytes}};
    root["collab"] = {{"mode", to_string(cfg.collab_mode)}, {"budget_bytes", cfg.budget_bytes}};
    root["decoder"] = {{"occupancy_threshold_scale", cfg.decoder.occupancy_threshold_scale},
                       {"match_gate_m", cfg.decoder.match_gate_m},
                       {"logit_scale", cfg.decoder.logit_scale}};
    root["metrics"] = {{"center_gate_m", cfg.metrics.center_gate_m},
                       {"vpq_iou_gate", cfg.metrics.vpq_iou_gate},
                       {"gamma", cfg.metrics.gamma},
                       {"lambda1", cfg.metrics.lambda1},
                       {"lambda2", cfg.metrics.lambda2}};
    return root.dump(2) + "\n";
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void save_config(const ScenarioConfig& config, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write config file: " + path);
    out << serialize_config(config);
}

uint64_t config_hash(const ScenarioConfig& config) {
    const std::string canon = serialize_config(config);
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace skyfleet
