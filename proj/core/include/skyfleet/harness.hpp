#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "skyfleet/config.hpp"
#include "skyfleet/metrics.hpp"
#include "skyfleet/scene.hpp"
#include "skyfleet/sisw.hpp"

namespace skyfleet {

struct LedgerEntry {
    int sender = 0;
    int receiver = 0;
    int frame = 0;
    uint64_t cells = 0;
    uint64_t bytes = 0;
    bool truncated = false;
    bool info_map = false;  // scalar info-volume broadcast, accounted separately
};

struct TransmissionLedger {
    uint64_t budget_bytes = 0;  // per link per frame; 0 = unlimited
    std::vector<LedgerEntry> entries;

    uint64_t feature_bytes() const;
    uint64_t info_bytes() const;
    uint64_t feature_cells() const;
    size_t packet_count() const;
};

// Deterministic constant-velocity decoder output for one drone.
struct Prediction {
    std::vector<BinaryMask> seg;    // t2 frames
    std::vector<IdMask> ids;        // t2 frames, ids persistent across frames
    std::vector<FlowGrid> flow;     // t2 frames, meters per frame
    std::vector<SegLogits> logits;  // t2 frames
    // (id, x, y) instance centroids at the present frame, grid-frame meters.
    std::vector<std::tuple<int, double, double>> present_centers;
};

// Threshold fused feature magnitude, extract 8-connected instances per
// history frame, link them by nearest centroid, and extrapolate the last
// frame's masks with per-instance constant velocity.
Prediction predict_future(const std::vector<BevGrid>& fused_history, const GridSpec& grid,
                          const DecoderParams& params, double embedding_norm, int t2);

struct DroneRun {
    std::vector<BevGrid> fused;     // one per input frame
    std::vector<ScalarGrid> info;   // info-volume maps (sisw mode only)
    Prediction prediction;
};

struct ScenarioRun {
    ScenarioConfig config;
    uint64_t config_hash_value = 0;
    Scene scene;
    std::vector<DroneRun> drones;
    TransmissionLedger ledger;
    std::vector<std::vector<uint8_t>> replay;  // packets in wire format, send order
};

// Full deterministic pipeline: render -> heights -> BEV -> exchange ->
// fuse -> predict, over t1 input frames.
ScenarioRun run_scenario(const ScenarioConfig& config);

struct MetricsReport {
    std::string grid_label;
    double iou = 0.0;
    double vpq_value = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double deviation = 0.0;  // NaN when nothing matched
    double loss = 0.0;
    std::vector<double> iou_per_frame;
    int matched = 0;
    int pred_count = 0;
    int gt_count = 0;
    uint64_t bytes_features = 0;
    uint64_t bytes_info = 0;
    uint64_t cells_sent = 0;
    uint64_t packets = 0;
};

// Scores a finished run against rasterized ground truth, averaged over
// drones; center statistics are pooled over all (drone, instance) pairs.
MetricsReport evaluate(const ScenarioRun& run);

}  // namespace skyfleet
