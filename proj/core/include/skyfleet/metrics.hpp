#pragma once

#include <utility>
#include <vector>

#include "skyfleet/grid.hpp"

namespace skyfleet {

struct AssignmentResult {
    std::vector<std::pair<int, int>> matches;  // (row, col)
    double total_cost = 0.0;
    std::vector<int> unmatched_rows;
    std::vector<int> unmatched_cols;
};

// Minimum-cost assignment of min(n, m) pairs (Kuhn-Munkres with potentials,
// O(n^2 m)). Costs must be finite.
AssignmentResult hungarian(const std::vector<std::vector<double>>& cost);

// Mean per-frame intersection-over-union. Frames where both masks are empty
// contribute 1.0; frames where exactly one is empty contribute 0.0.
double iou_sequence(const std::vector<BinaryMask>& pred, const std::vector<BinaryMask>& gt);

// Video panoptic quality over per-frame instance-id maps. A predicted
// instance is a true positive when it overlaps a ground-truth instance with
// IoU above the gate and its id has mapped to the same ground-truth track in
// every earlier frame. Per-frame quotients are averaged over frames; frames
// with no instances on either side contribute 1.0.
double vpq(const std::vector<IdMask>& pred, const std::vector<IdMask>& gt,
           double iou_gate = 0.5);

struct CenterMatchResult {
    double precision = 0.0;
    double recall = 0.0;
    double mean_deviation = 0.0;  // NaN when there are no matches
    int matched = 0;
};

// Hungarian matching of instance centers under a distance gate (meters).
// Empty-vs-empty scores precision = recall = 1; one-sided emptiness scores 0.
CenterMatchResult center_match(const std::vector<std::pair<double, double>>& pred_centers,
                               const std::vector<std::pair<double, double>>& gt_centers,
                               double gate_m);

// Two-class segmentation logits per cell: (background, foreground).
struct SegLogits {
    int nx = 0;
    int ny = 0;
    std::vector<float> v;  // 2 per cell

    SegLogits() = default;
    SegLogits(int x, int y) : nx(x), ny(y) { v.assign(static_cast<size_t>(x) * y * 2, 0.0f); }
    float* at(int ix, int iy) { return v.data() + (static_cast<size_t>(ix) * ny + iy) * 2; }
    const float* at(int ix, int iy) const {
        return v.data() + (static_cast<size_t>(ix) * ny + iy) * 2;
    }
};

// Discounted prediction objective:
// (1/T2) * sum_t gamma^t (lambda1 * CE(seg) + lambda2 * smoothL1(flow)),
// with mean per-cell cross-entropy and mean per-component smooth-L1
// (transition point 1).
double objective(const std::vector<SegLogits>& pred_seg, const std::vector<BinaryMask>& gt_seg,
                 const std::vector<FlowGrid>& pred_flow, const std::vector<FlowGrid>& gt_flow,
                 double gamma = 0.95, double lambda1 = 1.0, double lambda2 = 1.0);

}  // namespace skyfleet
