#pragma once

#include <cstdint>
#include <string>

#include "skyfleet/bev.hpp"
#include "skyfleet/grid.hpp"
#include "skyfleet/scene.hpp"
#include "skyfleet/sisw.hpp"

namespace skyfleet {

inline constexpr const char* kToolVersion = "0.1.0";

enum class CollabMode { None, Late, Early, Sisw };

const char* to_string(CollabMode mode);
const char* to_string(GbgMode mode);
CollabMode collab_mode_from_string(const std::string& name);  // throws ConfigError
GbgMode gbg_mode_from_string(const std::string& name);

struct SiswParams {
    int window = 7;
    double ratio = 0.25;
    InfoVolumeMode eq4_mode = InfoVolumeMode::Literal;
    double infill_sigma = 1.0;
    int infill_radius = 1;
    bool count_info_map_bytes = true;
};

struct DecoderParams {
    double occupancy_threshold_scale = 0.2;  // times the embedding norm
    double match_gate_m = 3.0;               // cross-frame centroid linking
    double logit_scale = 10.0;               // mask -> logits for the objective
};

struct MetricParams {
    double center_gate_m = 4.0;
    double vpq_iou_gate = 0.5;
    double gamma = 0.95;
    double lambda1 = 1.0;
    double lambda2 = 1.0;
};

struct FrameParams {
    int t1 = 3;
    int t2 = 4;
    double dt = 0.5;
};

struct GbgParams {
    GbgMode mode = GbgMode::GroundPrior;
    HeightBins height_bins;  // 100 bins over [0, 10] m
    double height_noise_sigma = 0.0;
    DepthBins depth_bins;  // 100 bins over [1, 100] m
    double voxel_z_min = 0.0;
    double voxel_z_max = 10.0;
    int voxel_z_count = 10;
};

struct ScenarioConfig {
    uint64_t seed = 0;
    SceneParams scene;
    DroneRigParams rig;
    std::string grid = "long";  // "long" or "short"
    GbgParams gbg;
    SiswParams sisw;
    CollabMode collab_mode = CollabMode::Sisw;
    uint64_t budget_bytes = 0;  // per link per frame; 0 = unlimited
    DecoderParams decoder;
    MetricParams metrics;
    FrameParams frames;

    GridSpec grid_spec() const;
    VoxelSpec voxel_spec() const;
    void validate() const;  // throws ConfigError naming the offending field
};

// Strict JSON round-trip: unknown keys are hard errors, `seed` is required,
// everything else defaults.
ScenarioConfig parse_config(const std::string& json_text);
std::string serialize_config(const ScenarioConfig& config);  // canonical form
ScenarioConfig load_config(const std::string& path);
void save_config(const ScenarioConfig& config, const std::string& path);

// FNV-1a over the canonical serialization.
uint64_t config_hash(const ScenarioConfig& config);

}  // namespace skyfleet
