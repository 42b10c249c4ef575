#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "skyfleet/grid.hpp"

namespace skyfleet {

enum class InfoVolumeMode {
    Literal,     // mean of sigmoid(neighbor - center); 0.5 on constant regions
    AbsCentered  // mean of 2*sigmoid(|neighbor - center|) - 1; 0 on constant regions
};

// Per-cell channel mean; the fixed stand-in for a trained 1x1 reduction.
ScalarGrid compress(const BevGrid& bev);

// Forward-anchored K x K sliding-window discrepancy with clamp-to-edge
// padding. K must be odd and >= 3.
ScalarGrid info_volume(const ScalarGrid& compressed, int window,
                       InfoVolumeMode mode = InfoVolumeMode::Literal);

// Elementwise sender * (1 - receiver); both maps must share one grid frame.
ScalarGrid complement_score(const ScalarGrid& i_sender, const ScalarGrid& i_receiver);

// Exactly floor(ratio * cells) cell indices with the highest scores, ties
// broken by lower linear index. Returned sorted ascending (row-major order).
std::vector<int32_t> select_topk(const ScalarGrid& scores, double ratio);

// Sender pose + selected cells + per-cell features.
struct SparsePacket {
    uint16_t sender_id = 0;
    uint32_t frame = 0;
    Pose2 sender_pose;
    int channels = 0;
    GridSpec grid;                 // sender grid geometry (not on the wire)
    std::vector<int32_t> cells;    // strictly ascending linear indices
    std::vector<float> features;   // cells.size() * channels
};

SparsePacket make_packet(uint16_t sender_id, uint32_t frame, const Pose2& sender_pose,
                         const BevGrid& bev, const std::vector<int32_t>& cells);

// Wire format: header {sender_id u16, frame u32, cell_count u32, C u16,
// pose 3 x f64}, then cell_count x {x u16, y u16, C x f32}, little-endian.
size_t packet_wire_size(size_t cell_count, int channels);
std::vector<uint8_t> serialize_packet(const SparsePacket& packet);
SparsePacket deserialize_packet(std::span<const uint8_t> bytes, const GridSpec& grid);

// Packet cells mapped into the receiver's grid. Collisions keep the source
// whose transformed center lies nearer the receiver cell center.
struct AlignedCells {
    GridSpec spec;
    int channels = 0;
    std::vector<float> values;   // dense, zeros where undefined
    std::vector<uint8_t> defined;
    int dropped = 0;  // packet cells outside the receiver grid
};

AlignedCells align_packet(const SparsePacket& packet, const Pose2& receiver_pose,
                          const GridSpec& receiver_grid);

// Normalized-Gaussian (Shepard) interpolation of undefined cells from
// defined ones within `radius` (Euclidean, in cells). Cells with no defined
// neighbor stay zero and are reported in `orphan`. The returned mask marks
// cells that carry information (defined or infilled).
BevGrid gaussian_infill(const AlignedCells& aligned, double sigma, int radius,
                        std::vector<uint8_t>* informative = nullptr, int64_t* orphans = nullptr);

// Per-source contribution weights: s_j = sigmoid(mean of [local; source_j]),
// normalized over sources per cell. `informative` (optional, per source) zeroes
// a source's weight at cells where it carries no information; weights then
// renormalize over the rest. Sources must include the receiver's own grid.
std::vector<ScalarGrid> fusion_weights(const BevGrid& local,
                                       const std::vector<const BevGrid*>& sources,
                                       const std::vector<const std::vector<uint8_t>*>&
                                           informative = {});

// Per-cell convex combination of source features under the given weights.
BevGrid aggregate(const std::vector<ScalarGrid>& weights,
                  const std::vector<const BevGrid*>& sources);

}  // namespace skyfleet
