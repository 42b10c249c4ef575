#include "skyfleet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "skyfleet/errors.hpp"

namespace skyfleet {

AssignmentResult hungarian(const std::vector<std::vector<double>>& cost) {
    AssignmentResult result;
    const int rows = static_cast<int>(cost.size());
    const int cols = rows ? static_cast<int>(cost[0].size()) : 0;
    if (rows == 0 || cols == 0) {
        for (int i = 0; i < rows; ++i) result.unmatched_rows.push_back(i);
        for (int j = 0; j < cols; ++j) result.unmatched_cols.push_back(j);
        return result;
    }
    for (const auto& row : cost) {
        if (static_cast<int>(row.size()) != cols) throw ConfigError("ragged cost matrix");
        for (double c : row)
            if (!std::isfinite(c)) throw ConfigError("cost matrix must be finite");
    }

    const bool transposed = rows > cols;
    const int n = transposed ? cols : rows;
    const int m = transposed ? rows : cols;
    auto at = [&](int i, int j) { return transposed ? cost[j][i] : cost[i][j]; };

    constexpr double kInf = std::numeric_limits<double>::max();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, kInf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<char> row_matched(rows, 0), col_matched(cols, 0);
    for (int j = 1; j <= m; ++j) {
        if (p[j] == 0) continue;
        const int r = transposed ? j - 1 : p[j] - 1;
        const int c = transposed ? p[j] - 1 : j - 1;
        result.matches.emplace_back(r, c);
        result.total_cost += cost[r][c];
        row_matched[r] = 1;
        col_matched[c] = 1;
    }
    std::sort(result.matches.begin(), result.matches.end());
    for (int i = 0; i < rows; ++i)
        if (!row_matched[i]) result.unmatched_rows.push_back(i);
    for (int j = 0; j < cols; ++j)
        if (!col_matched[j]) result.unmatched_cols.push_back(j);
    return result;
}

double iou_sequence(const std::vector<BinaryMask>& pred, const std::vector<BinaryMask>& gt) {
    if (pred.size() != gt.size() || pred.empty())
        throw ConfigError("iou_sequence requires equal, nonzero frame counts");
    double total = 0.0;
    for (size_t t = 0; t < pred.size(); ++t) {
        if (pred[t].nx != gt[t].nx || pred[t].ny != gt[t].ny)
            throw ConfigError("iou_sequence mask shape mismatch");
        size_t inter = 0, uni = 0;
        for (size_t i = 0; i < pred[t].v.size(); ++i) {
            const bool a = pred[t].v[i] != 0;
            const bool b = gt[t].v[i] != 0;
            inter += (a && b);
            uni += (a || b);
        }
        total += (uni == 0) ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    return total / static_cast<double>(pred.size());
}

double vpq(const std::vector<IdMask>& pred, const std::vector<IdMask>& gt, double iou_gate) {
    if (pred.size() != gt.size() || pred.empty())
        throw ConfigError("vpq requires equal, nonzero frame counts");
    std::unordered_map<int32_t, int32_t> pred_to_gt, gt_to_pred;
    double total = 0.0;
    for (size_t t = 0; t < pred.size(); ++t) {
        if (pred[t].nx != gt[t].nx || pred[t].ny != gt[t].ny)
            throw ConfigError("vpq mask shape mismatch");
        std::unordered_map<int32_t, size_t> pred_area, gt_area;
        std::map<std::pair<int32_t, int32_t>, size_t> inter;
        for (size_t i = 0; i < pred[t].v.size(); ++i) {
            const int32_t pid = pred[t].v[i];
            const int32_t gid = gt[t].v[i];
            if (pid) ++pred_area[pid];
            if (gid) ++gt_area[gid];
            if (pid && gid) ++inter[{pid, gid}];
        }

        double tp_iou = 0.0;
        size_t tp = 0;
        for (const auto& [pair, count] : inter) {
            const auto [pid, gid] = pair;
            const double iou = static_cast<double>(count) /
                               static_cast<double>(pred_area[pid] + gt_area[gid] - count);
            if (iou <= iou_gate) continue;
            auto p_it = pred_to_gt.find(pid);
            auto g_it = gt_to_pred.find(gid);
            const bool consistent = (p_it == pred_to_gt.end() || p_it->second == gid) &&
                                    (g_it == gt_to_pred.end() || g_it->second == pid);
            if (!consistent) continue;  // falls through to FP + FN
            pred_to_gt[pid] = gid;
            gt_to_pred[gid] = pid;
            tp_iou += iou;
            ++tp;
        }
        const size_t fp = pred_area.size() - tp;
        const size_t fn = gt_area.size() - tp;
        const double denom = static_cast<double>(tp) + 0.5 * fp + 0.5 * fn;
        total += (denom == 0.0) ? 1.0 : tp_iou / denom;
    }
    return total / static_cast<double>(pred.size());
}

CenterMatchResult center_match(const std::vector<std::pair<double, double>>& pred_centers,
                               const std::vector<std::pair<double, double>>& gt_centers,
                               double gate_m) {
    if (!(gate_m > 0.0)) throw ConfigError("center gate must be positive");
    CenterMatchResult result;
    result.mean_deviation = std::numeric_limits<double>::quiet_NaN();
    if (pred_centers.empty() && gt_centers.empty()) {
        result.precision = 1.0;
        result.recall = 1.0;
        return result;
    }
    if (pred_centers.empty() || gt_centers.empty()) return result;  // zero rates

    constexpr double kForbidden = 1e9;
    std::vector<std::vector<double>> cost(pred_centers.size(),
                                          std::vector<double>(gt_centers.size()));
    for (size_t i = 0; i < pred_centers.size(); ++i) {
        for (size_t j = 0; j < gt_centers.size(); ++j) {
            const double dx = pred_centers[i].first - gt_centers[j].first;
            const double dy = pred_centers[i].second - gt_centers[j].second;
            const double d = std::hypot(dx, dy);
            cost[i][j] = (d > gate_m) ? kForbidden : d;
        }
    }
    const AssignmentResult assignment = hungarian(cost);
    double dev_sum = 0.0;
    for (const auto& [r, c] : assignment.matches) {
        if (cost[r][c] >= kForbidden) continue;
        dev_sum += cost[r][c];
        ++result.matched;
    }
    result.precision = static_cast<double>(result.matched) / pred_centers.size();
    result.recall = static_cast<double>(result.matched) / gt_centers.size();
    if (result.matched > 0) result.mean_deviation = dev_sum / result.matched;
    return result;
}

namespace {

// log(1 + exp(-margin)), stable for any margin
inline double binary_ce_from_margin(double margin) {
    if (margin >= 0.0) return std::log1p(std::exp(-margin));
    return -margin + std::log1p(std::exp(margin));
}

inline double smooth_l1(double d) {
    const double a = std::abs(d);
    return (a < 1.0) ? 0.5 * d * d : a - 0.5;
}

}  // namespace

double objective(const std::vector<SegLogits>& pred_seg, const std::vector<BinaryMask>& gt_seg,
                 const std::vector<FlowGrid>& pred_flow, const std::vector<FlowGrid>& gt_flow,
                 double gamma, double lambda1, double lambda2) {
    const size_t t2 = pred_seg.size();
    if (t2 == 0 || gt_seg.size() != t2 || pred_flow.size() != t2 || gt_flow.size() != t2)
        throw ConfigError("objective requires aligned frame lists");
    double loss = 0.0;
    double discount = 1.0;
    for (size_t t = 0; t < t2; ++t) {
        const auto& seg = pred_seg[t];
        const auto& gts = gt_seg[t];
        if (seg.nx != gts.nx || seg.ny != gts.ny) throw ConfigError("objective shape mismatch");
        const size_t cells = static_cast<size_t>(seg.nx) * seg.ny;
        double ce = 0.0;
        for (size_t i = 0; i < cells; ++i) {
            const float* logits = seg.v.data() + i * 2;
            const double margin = static_cast<double>(logits[1]) - logits[0];
            ce += binary_ce_from_margin(gts.v[i] ? margin : -margin);
        }
        ce /= static_cast<double>(cells);

        const auto& pf = pred_flow[t];
        const auto& gf = gt_flow[t];
        if (pf.nx != seg.nx || pf.ny != seg.ny || gf.nx != seg.nx || gf.ny != seg.ny)
            throw ConfigError("objective flow shape mismatch");
        double sl1 = 0.0;
        for (size_t i = 0; i < cells * 2; ++i)
            sl1 += smooth_l1(static_cast<double>(pf.v[i]) - gf.v[i]);
        sl1 /= static_cast<double>(cells * 2);

        loss += discount * (lambda1 * ce + lambda2 * sl1);
        discount *= gamma;
    }
    return loss / static_cast<double>(t2);
}

}  // namespace skyfleet
