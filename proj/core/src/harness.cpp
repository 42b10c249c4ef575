#include "skyfleet/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <queue>
#include <utility>

#include "skyfleet/bev.hpp"
#include "skyfleet/errors.hpp"

namespace skyfleet {

uint64_t TransmissionLedger::feature_bytes() const {
    uint64_t total = 0;
    for (const auto& e : entries)
        if (!e.info_map) total += e.bytes;
    return total;
}

uint64_t TransmissionLedger::info_bytes() const {
    uint64_t total = 0;
    for (const auto& e : entries)
        if (e.info_map) total += e.bytes;
    return total;
}

uint64_t TransmissionLedger::feature_cells() const {
    uint64_t total = 0;
    for (const auto& e : entries)
        if (!e.info_map) total += e.cells;
    return total;
}

size_t TransmissionLedger::packet_count() const {
    size_t n = 0;
    for (const auto& e : entries)
        if (!e.info_map) ++n;
    return n;
}

namespace {

struct Instance {
    int id = 0;
    std::vector<int> cells;  // linear indices
    double cx = 0.0, cy = 0.0;
};

// Threshold by feature norm, then 8-connected components in linear-index
// order so labeling is deterministic. Centroids are norm-weighted.
std::vector<Instance> extract_instances(const BevGrid& bev, double threshold) {
    const GridSpec& g = bev.spec;
    const double thr2 = threshold * threshold;
    std::vector<double> norm2(static_cast<size_t>(g.cells()), 0.0);
    for (int i = 0; i < g.cells(); ++i) {
        const float* f = bev.cell(i);
        // A cell counts as occupied only when the vehicle slot dominates the
        // class channels; scenery (occluders) never reaches the decoder.
        int best_class = 1;
        for (int c = 2; c <= 7 && c < bev.channels; ++c)
            if (f[c] > f[best_class]) best_class = c;
        if (best_class != kVehicleClass) continue;
        double s = 0.0;
        for (int c = 0; c < bev.channels; ++c) s += static_cast<double>(f[c]) * f[c];
        norm2[i] = s;
    }

    std::vector<int> label(static_cast<size_t>(g.cells()), 0);
    std::vector<Instance> out;
    for (int seed = 0; seed < g.cells(); ++seed) {
        if (label[seed] || norm2[seed] <= thr2) continue;
        Instance inst;
        inst.id = static_cast<int>(out.size()) + 1;
        std::queue<int> work;
        label[seed] = inst.id;
        work.push(seed);
        while (!work.empty()) {
            const int cur = work.front();
            work.pop();
            inst.cells.push_back(cur);
            const int ix = cur / g.ny, iy = cur % g.ny;
            for (int dx = -1; dx <= 1; ++dx) {
                for (int dy = -1; dy <= 1; ++dy) {
                    if (!dx && !dy) continue;
                    const int nx = ix + dx, ny = iy + dy;
                    if (nx < 0 || nx >= g.nx || ny < 0 || ny >= g.ny) continue;
                    const int ni = nx * g.ny + ny;
                    if (label[ni] || norm2[ni] <= thr2) continue;
                    label[ni] = inst.id;
                    work.push(ni);
                }
            }
        }
        std::sort(inst.cells.begin(), inst.cells.end());
        double wsum = 0.0, xs = 0.0, ys = 0.0;
        for (int cell : inst.cells) {
            const double w = std::sqrt(norm2[cell]);
            wsum += w;
            xs += w * g.center_x(cell / g.ny);
            ys += w * g.center_y(cell % g.ny);
        }
        inst.cx = xs / wsum;
        inst.cy = ys / wsum;
        out.push_back(std::move(inst));
    }
    return out;
}

}  // namespace

Prediction predict_future(const std::vector<BevGrid>& fused_history, const GridSpec& grid,
                          const DecoderParams& params, double embedding_norm, int t2) {
    if (fused_history.empty()) throw ConfigError("predict_future needs at least one frame");
    if (t2 <= 0) throw ConfigError("t2 must be positive");
    const double threshold = params.occupancy_threshold_scale * embedding_norm;

    const int t1 = static_cast<int>(fused_history.size());
    std::vector<std::vector<Instance>> per_frame(t1);
    for (int t = 0; t < t1; ++t) per_frame[t] = extract_instances(fused_history[t], threshold);

    // Persistent ids: carried forward through gated nearest-centroid matching,
    // fresh ids for unmatched detections.
    int next_id = 1;
    std::vector<std::vector<int>> ids(t1);          // per frame, per instance
    std::vector<std::vector<int>> first_frame(t1);  // frame where the id appeared
    std::vector<std::vector<std::pair<double, double>>> first_center(t1);
    ids[0].resize(per_frame[0].size());
    first_frame[0].resize(per_frame[0].size());
    first_center[0].resize(per_frame[0].size());
    for (size_t i = 0; i < per_frame[0].size(); ++i) {
        ids[0][i] = next_id++;
        first_frame[0][i] = 0;
        first_center[0][i] = {per_frame[0][i].cx, per_frame[0][i].cy};
    }
    for (int t = 1; t < t1; ++t) {
        const auto& prev = per_frame[t - 1];
        const auto& cur = per_frame[t];
        ids[t].assign(cur.size(), 0);
        first_frame[t].assign(cur.size(), t);
        first_center[t].resize(cur.size());
        for (size_t i = 0; i < cur.size(); ++i) first_center[t][i] = {cur[i].cx, cur[i].cy};
        if (!prev.empty() && !cur.empty()) {
            constexpr double kForbidden = 1e9;
            std::vector<std::vector<double>> cost(prev.size(), std::vector<double>(cur.size()));
            for (size_t i = 0; i < prev.size(); ++i)
                for (size_t j = 0; j < cur.size(); ++j) {
                    const double d = std::hypot(prev[i].cx - cur[j].cx, prev[i].cy - cur[j].cy);
                    cost[i][j] = (d > params.match_gate_m) ? kForbidden : d;
                }
            for (const auto& [i, j] : hungarian(cost).matches) {
                if (cost[i][j] >= kForbidden) continue;
                ids[t][j] = ids[t - 1][i];
                first_frame[t][j] = first_frame[t - 1][i];
                first_center[t][j] = first_center[t - 1][i];
            }
        }
        for (size_t j = 0; j < cur.size(); ++j)
            if (!ids[t][j]) ids[t][j] = next_id++;
    }

    // Constant velocity from the span between first and last sighting.
    const int last = t1 - 1;
    struct Mover {
        int id;
        const Instance* inst;
        double vx, vy;  // meters per frame
    };
    std::vector<Mover> movers;
    for (size_t j = 0; j < per_frame[last].size(); ++j) {
        Mover m;
        m.id = ids[last][j];
        m.inst = &per_frame[last][j];
        const int span = last - first_frame[last][j];
        if (span > 0) {
            m.vx = (m.inst->cx - first_center[last][j].first) / span;
            m.vy = (m.inst->cy - first_center[last][j].second) / span;
        } else {
            m.vx = m.vy = 0.0;
        }
        movers.push_back(m);
    }
    std::sort(movers.begin(), movers.end(),
              [](const Mover& a, const Mover& b) { return a.id < b.id; });

    Prediction pred;
    const float fg = static_cast<float>(params.logit_scale * 0.5);
    for (int k = 1; k <= t2; ++k) {
        BinaryMask seg(grid.nx, grid.ny);
        IdMask idm(grid.nx, grid.ny);
        FlowGrid flow(grid.nx, grid.ny);
        SegLogits logits(grid.nx, grid.ny);
        for (size_t i = 0; i < logits.v.size(); i += 2) {
            logits.v[i] = fg;
            logits.v[i + 1] = -fg;
        }
        for (const Mover& m : movers) {
            const int sx = static_cast<int>(std::lround(k * m.vx / grid.resolution));
            const int sy = static_cast<int>(std::lround(k * m.vy / grid.resolution));
            for (int cell : m.inst->cells) {
                const int ix = cell / grid.ny + sx;
                const int iy = cell % grid.ny + sy;
                if (ix < 0 || ix >= grid.nx || iy < 0 || iy >= grid.ny) continue;
                if (idm.at(ix, iy)) continue;  // lower id keeps the cell
                idm.at(ix, iy) = m.id;
                seg.at(ix, iy) = 1;
                float* fl = flow.at(ix, iy);
                fl[0] = static_cast<float>(m.vx);
                fl[1] = static_cast<float>(m.vy);
                float* lg = logits.at(ix, iy);
                lg[0] = -fg;
                lg[1] = fg;
            }
        }
        pred.seg.push_back(std::move(seg));
        pred.ids.push_back(std::move(idm));
        pred.flow.push_back(std::move(flow));
        pred.logits.push_back(std::move(logits));
    }
    for (const Mover& m : movers) pred.present_centers.emplace_back(m.id, m.inst->cx, m.inst->cy);
    return pred;
}

namespace {

FrustumCandidates lift_for_mode(const RenderedView& view, const CameraModel& cam,
                                const GbgParams& gbg) {
    FrustumCandidates cands;
    switch (gbg.mode) {
        case GbgMode::GroundPrior: {
            const HeightDistribution heights =
                oracle_height_estimator(view, gbg.height_noise_sigma, gbg.height_bins);
            cands = lift(view, heights, cam);
            break;
        }
        case GbgMode::FlatGround:
            cands = lift_flat_ground(view, cam);
            break;
        case GbgMode::DepthBinOracle:
            cands = lift_depth_bins(view, cam, gbg.depth_bins, false);
            break;
        case GbgMode::DepthBinUniform: {
            // Equivalent to lift_depth_bins(uniform) minus zero-feature
            // pixels; building the 100-bin fan only for feature-bearing
            // pixels keeps the candidate buffer small.
            cands.view = &view;
            cands.channels = view.channels;
            const Eigen::Matrix3d k_inv = cam.intrinsics.inverse();
            const auto& bins = gbg.depth_bins;
            const float uw = static_cast<float>(1.0 / bins.count);
            for (int v = 0; v < view.height; ++v) {
                for (int u = 0; u < view.width; ++u) {
                    const size_t i = view.idx(u, v);
                    if (!view.validity[i]) continue;
                    const float* f = view.feature.data() + i * view.channels;
                    bool mass = false;
                    for (int ch = 0; ch < view.channels; ++ch)
                        if (f[ch] != 0.0f) {
                            mass = true;
                            break;
                        }
                    if (!mass) continue;
                    const Eigen::Vector3d dir =
                        (cam.rotation * (k_inv * Eigen::Vector3d(u, v, 1.0))).normalized();
                    for (int b = 0; b < bins.count; ++b) {
                        const Eigen::Vector3d pt = cam.translation + bins.center(b) * dir;
                        cands.items.push_back({pt.cast<float>(), uw, static_cast<int32_t>(i)});
                    }
                }
            }
            return cands;
        }
    }
    // Ground pixels carry the zero embedding; their candidates cannot change
    // any splat sum, so drop them before the (repeated) splats.
    std::erase_if(cands.items, [&](const FrustumCandidates::Candidate& c) {
        const float* f = view.feature.data() + static_cast<size_t>(c.pixel) * cands.channels;
        for (int ch = 0; ch < cands.channels; ++ch)
            if (f[ch] != 0.0f) return false;
        return true;
    });
    return cands;
}

// Receiver info volume resampled into the sender's grid frame; cells that
// land outside the receiver grid read as fully known (1.0) so nothing is
// spent on them.
ScalarGrid warp_receiver_info(const ScalarGrid& receiver_info, const Pose2& receiver_pose,
                              const Pose2& sender_pose, const GridSpec& grid) {
    ScalarGrid out(grid.nx, grid.ny, 1.0f);
    for (int ix = 0; ix < grid.nx; ++ix) {
        for (int iy = 0; iy < grid.ny; ++iy) {
            double wx, wy, rx, ry;
            frame_to_world(sender_pose, grid.center_x(ix), grid.center_y(iy), wx, wy);
            world_to_frame(receiver_pose, wx, wy, rx, ry);
            const int idx = grid.cell_index(rx, ry);
            if (idx >= 0) out.at(ix, iy) = receiver_info.v[static_cast<size_t>(idx)];
        }
    }
    return out;
}

// Largest cell count whose packet still fits the per-link budget.
size_t budget_cell_cap(uint64_t budget_bytes, int channels) {
    const size_t header = packet_wire_size(0, channels);
    if (budget_bytes < header) return 0;
    const size_t per_cell = 4 + 4 * static_cast<size_t>(channels);
    return (static_cast<size_t>(budget_bytes) - header) / per_cell;
}

int offset_instance_id(int sender, int id) { return (sender + 1) * 1000000 + id; }

}  // namespace

ScenarioRun run_scenario(const ScenarioConfig& config) {
    config.validate();
    ScenarioRun run;
    run.config = config;
    run.config_hash_value = config_hash(config);
    run.scene = generate_scene(config.seed, config.scene, config.rig);
    run.ledger.budget_bytes = config.budget_bytes;

    const int n = config.rig.drones;
    const GridSpec grid = config.grid_spec();
    const VoxelSpec voxel = config.voxel_spec();
    const int t1 = config.frames.t1;
    run.drones.resize(static_cast<size_t>(n));

    for (int t = 0; t < t1; ++t) {
        std::vector<RenderedView> views;
        std::vector<FrustumCandidates> cands;
        views.reserve(static_cast<size_t>(n));
        cands.reserve(static_cast<size_t>(n));
        std::vector<BevGrid> local(static_cast<size_t>(n));
        for (int d = 0; d < n; ++d) {
            views.push_back(render_view(run.scene.cameras[d], run.scene.tracks, t));
            cands.push_back(lift_for_mode(views.back(), run.scene.cameras[d], config.gbg));
            local[d] = sum_pool_z(splat(cands[d], voxel, run.scene.bev_poses[d]));
        }

        switch (config.collab_mode) {
            case CollabMode::None:
            case CollabMode::Late: {
                for (int d = 0; d < n; ++d) run.drones[d].fused.push_back(std::move(local[d]));
                break;
            }
            case CollabMode::Early: {
                // Every drone splats every sender's raw candidates into its
                // own frame; the pooled sum is the fused map.
                for (int k = 0; k < n; ++k) {
                    BevGrid fused(grid, local[k].channels);
                    for (int j = 0; j < n; ++j) {
                        const BevGrid part =
                            (j == k) ? std::move(local[k])
                                     : sum_pool_z(splat(cands[j], voxel, run.scene.bev_poses[k]));
                        for (size_t i = 0; i < fused.data.size(); ++i) fused.data[i] += part.data[i];
                        if (j != k)
                            run.ledger.entries.push_back(
                                {j, k, t, static_cast<uint64_t>(grid.cells()),
                                 static_cast<uint64_t>(grid.cells()) * part.channels * 4, false,
                                 false});
                    }
                    // Mean over drones keeps the feature scale of a single
                    // view, so the decoder threshold stays meaningful.
                    const float inv_n = 1.0f / static_cast<float>(n);
                    for (float& v : fused.data) v *= inv_n;
                    run.drones[k].fused.push_back(std::move(fused));
                }
                break;
            }
            case CollabMode::Sisw: {
                std::vector<ScalarGrid> info(static_cast<size_t>(n));
                for (int d = 0; d < n; ++d) {
                    info[d] = info_volume(compress(local[d]), config.sisw.window,
                                          config.sisw.eq4_mode);
                    run.drones[d].info.push_back(info[d]);
                }
                if (config.sisw.count_info_map_bytes) {
                    for (int j = 0; j < n; ++j)
                        for (int k = 0; k < n; ++k)
                            if (j != k)
                                run.ledger.entries.push_back(
                                    {j, k, t, static_cast<uint64_t>(grid.cells()),
                                     static_cast<uint64_t>(grid.cells()) * 4, false, true});
                }

                // All packets for the frame are built before any fusion.
                std::vector<std::vector<SparsePacket>> packets(
                    static_cast<size_t>(n), std::vector<SparsePacket>(static_cast<size_t>(n)));
                for (int k = 0; k < n; ++k) {
                    for (int j = 0; j < n; ++j) {
                        if (j == k) continue;
                        const ScalarGrid warped =
                            warp_receiver_info(info[k], run.scene.bev_poses[k],
                                               run.scene.bev_poses[j], grid);
                        const ScalarGrid score = complement_score(info[j], warped);
                        std::vector<int32_t> cells = select_topk(score, config.sisw.ratio);
                        bool truncated = false;
                        if (config.budget_bytes > 0) {
                            const size_t cap =
                                budget_cell_cap(config.budget_bytes, local[j].channels);
                            if (cells.size() > cap) {
                                std::sort(cells.begin(), cells.end(),
                                          [&](int32_t a, int32_t b) {
                                              const float sa = score.v[static_cast<size_t>(a)];
                                              const float sb = score.v[static_cast<size_t>(b)];
                                              if (sa != sb) return sa > sb;
                                              return a < b;
                                          });
                                cells.resize(cap);
                                std::sort(cells.begin(), cells.end());
                                truncated = true;
                            }
                        }
                        SparsePacket pkt =
                            make_packet(static_cast<uint16_t>(j), static_cast<uint32_t>(t),
                                        run.scene.bev_poses[j], local[j], cells);
                        run.replay.push_back(serialize_packet(pkt));
                        run.ledger.entries.push_back(
                            {j, k, t, static_cast<uint64_t>(cells.size()),
                             static_cast<uint64_t>(
                                 packet_wire_size(cells.size(), pkt.channels)),
                             truncated, false});
                        packets[j][static_cast<size_t>(k)] = std::move(pkt);
                    }
                }

                // A source only votes where it carries feature mass; zero
                // cells abstain so foreign emptiness cannot dilute strong
                // local evidence (and vice versa).
                auto mass_mask = [](const BevGrid& g) {
                    std::vector<uint8_t> mask(static_cast<size_t>(g.spec.cells()), 0);
                    for (int i = 0; i < g.spec.cells(); ++i) {
                        const float* f = g.cell(i);
                        for (int c = 0; c < g.channels; ++c)
                            if (f[c] != 0.0f) {
                                mask[static_cast<size_t>(i)] = 1;
                                break;
                            }
                    }
                    return mask;
                };
                for (int k = 0; k < n; ++k) {
                    std::vector<BevGrid> infilled;
                    std::vector<std::vector<uint8_t>> masks;
                    infilled.reserve(static_cast<size_t>(n) - 1);
                    masks.reserve(static_cast<size_t>(n));
                    masks.push_back(mass_mask(local[k]));
                    for (int j = 0; j < n; ++j) {
                        if (j == k) continue;
                        const AlignedCells aligned =
                            align_packet(packets[j][static_cast<size_t>(k)],
                                         run.scene.bev_poses[k], grid);
                        infilled.push_back(gaussian_infill(aligned, config.sisw.infill_sigma,
                                                           config.sisw.infill_radius));
                        masks.push_back(mass_mask(infilled.back()));
                    }
                    std::vector<const BevGrid*> sources{&local[k]};
                    std::vector<const std::vector<uint8_t>*> informative{&masks[0]};
                    for (size_t s = 0; s < infilled.size(); ++s) {
                        sources.push_back(&infilled[s]);
                        informative.push_back(&masks[s + 1]);
                    }
                    const std::vector<ScalarGrid> weights =
                        fusion_weights(local[k], sources, informative);
                    run.drones[k].fused.push_back(aggregate(weights, sources));
                }
                break;
            }
        }
    }

    for (int d = 0; d < n; ++d)
        run.drones[d].prediction =
            predict_future(run.drones[d].fused, grid, config.decoder, instance_embedding_norm(),
                           config.frames.t2);

    if (config.collab_mode == CollabMode::Late) {
        // Exchange finished per-drone predictions once, after the last input
        // frame: id masks + flow for every future frame.
        const int t2 = config.frames.t2;
        std::vector<Prediction> merged(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) merged[k] = run.drones[k].prediction;
        for (int k = 0; k < n; ++k) {
            Prediction& out = merged[k];
            const Pose2& pose_k = run.scene.bev_poses[k];
            for (int j = 0; j < n; ++j) {
                if (j == k) continue;
                const Prediction& pj = run.drones[j].prediction;
                const Pose2& pose_j = run.scene.bev_poses[j];
                const double rot = pose_j.yaw - pose_k.yaw;
                const double cr = std::cos(rot), sr = std::sin(rot);
                for (int f = 0; f < t2; ++f) {
                    for (int ix = 0; ix < grid.nx; ++ix) {
                        for (int iy = 0; iy < grid.ny; ++iy) {
                            if (out.seg[f].at(ix, iy)) continue;
                            double wx, wy, jx, jy;
                            frame_to_world(pose_k, grid.center_x(ix), grid.center_y(iy), wx, wy);
                            world_to_frame(pose_j, wx, wy, jx, jy);
                            const int idx = grid.cell_index(jx, jy);
                            if (idx < 0 || !pj.seg[f].v[static_cast<size_t>(idx)]) continue;
                            out.seg[f].at(ix, iy) = 1;
                            out.ids[f].at(ix, iy) =
                                offset_instance_id(j, pj.ids[f].v[static_cast<size_t>(idx)]);
                            const float* sf = pj.flow[f].v.data() + static_cast<size_t>(idx) * 2;
                            float* df = out.flow[f].at(ix, iy);
                            df[0] = static_cast<float>(cr * sf[0] - sr * sf[1]);
                            df[1] = static_cast<float>(sr * sf[0] + cr * sf[1]);
                        }
                    }
                }
                for (const auto& [id, cx, cy] : pj.present_centers) {
                    double wx, wy, kx, ky;
                    frame_to_world(pose_j, cx, cy, wx, wy);
                    world_to_frame(pose_k, wx, wy, kx, ky);
                    if (kx < grid.x_min || kx >= grid.x_min + grid.nx * grid.resolution ||
                        ky < grid.y_min || ky >= grid.y_min + grid.ny * grid.resolution)
                        continue;
                    bool duplicate = false;
                    for (const auto& [eid, ex, ey] : out.present_centers)
                        if (std::hypot(ex - kx, ey - ky) < 2.0) duplicate = true;
                    if (!duplicate)
                        out.present_centers.emplace_back(offset_instance_id(j, id), kx, ky);
                }
                run.ledger.entries.push_back(
                    {j, k, t1 - 1, static_cast<uint64_t>(grid.cells()) * t2,
                     static_cast<uint64_t>(grid.cells()) * t2 * 12, false, false});
            }
            // Logits follow the merged segmentation.
            const float fg = static_cast<float>(config.decoder.logit_scale * 0.5);
            for (int f = 0; f < t2; ++f)
                for (size_t i = 0; i < out.seg[f].v.size(); ++i) {
                    out.logits[f].v[i * 2] = out.seg[f].v[i] ? -fg : fg;
                    out.logits[f].v[i * 2 + 1] = out.seg[f].v[i] ? fg : -fg;
                }
        }
        for (int k = 0; k < n; ++k) run.drones[k].prediction = std::move(merged[k]);
    }

    return run;
}

MetricsReport evaluate(const ScenarioRun& run) {
    const ScenarioConfig& cfg = run.config;
    const GridSpec grid = cfg.grid_spec();
    const int n = cfg.rig.drones;
    const int t1 = cfg.frames.t1;
    const int t2 = cfg.frames.t2;

    MetricsReport report;
    report.grid_label = cfg.grid;
    report.iou_per_frame.assign(static_cast<size_t>(t2), 0.0);

    double dev_sum = 0.0;
    for (int d = 0; d < n; ++d) {
        const Prediction& pred = run.drones[static_cast<size_t>(d)].prediction;
        const Pose2& pose = run.scene.bev_poses[static_cast<size_t>(d)];

        std::vector<BinaryMask> gt_seg;
        std::vector<IdMask> gt_ids;
        std::vector<FlowGrid> gt_flow;
        for (int f = t1; f < t1 + t2; ++f) {
            const GroundTruthBev gt = rasterize_gt_bev(run.scene.tracks, f, grid, pose);
            BinaryMask seg(grid.nx, grid.ny);
            IdMask idm(grid.nx, grid.ny);
            FlowGrid flow(grid.nx, grid.ny);
            seg.v.assign(gt.occupancy.begin(), gt.occupancy.end());
            idm.v = gt.instance_ids;
            flow.v = gt.flow;
            gt_seg.push_back(std::move(seg));
            gt_ids.push_back(std::move(idm));
            gt_flow.push_back(std::move(flow));
        }

        for (int f = 0; f < t2; ++f)
            report.iou_per_frame[static_cast<size_t>(f)] +=
                iou_sequence({pred.seg[static_cast<size_t>(f)]}, {gt_seg[static_cast<size_t>(f)]});
        report.iou += iou_sequence(pred.seg, gt_seg);
        report.vpq_value += vpq(pred.ids, gt_ids, cfg.metrics.vpq_iou_gate);
        report.loss += objective(pred.logits, gt_seg, pred.flow, gt_flow, cfg.metrics.gamma,
                                 cfg.metrics.lambda1, cfg.metrics.lambda2);

        // Localization at the present frame, pooled over drones.
        std::vector<std::pair<double, double>> pred_centers, gt_centers;
        for (const auto& [id, cx, cy] : pred.present_centers) pred_centers.emplace_back(cx, cy);
        for (const InstanceTrack& track : run.scene.tracks) {
            if (track.cls != kVehicleClass) continue;
            const Pose2& p = track.poses[static_cast<size_t>(t1 - 1)];
            double fx, fy;
            world_to_frame(pose, p.x, p.y, fx, fy);
            if (fx < grid.x_min || fx >= grid.x_min + grid.nx * grid.resolution || fy < grid.y_min ||
                fy >= grid.y_min + grid.ny * grid.resolution)
                continue;
            gt_centers.emplace_back(fx, fy);
        }
        const CenterMatchResult cm =
            center_match(pred_centers, gt_centers, cfg.metrics.center_gate_m);
        report.matched += cm.matched;
        report.pred_count += static_cast<int>(pred_centers.size());
        report.gt_count += static_cast<int>(gt_centers.size());
        if (cm.matched > 0) dev_sum += cm.mean_deviation * cm.matched;
    }

    report.iou /= n;
    report.vpq_value /= n;
    report.loss /= n;
    for (double& v : report.iou_per_frame) v /= n;
    if (report.pred_count == 0 && report.gt_count == 0) {
        report.precision = 1.0;
        report.recall = 1.0;
    } else {
        report.precision =
            report.pred_count ? static_cast<double>(report.matched) / report.pred_count : 0.0;
        report.recall = report.gt_count ? static_cast<double>(report.matched) / report.gt_count : 0.0;
    }
    report.deviation = report.matched ? dev_sum / report.matched
                                      : std::numeric_limits<double>::quiet_NaN();
    report.bytes_features = run.ledger.feature_bytes();
    report.bytes_info = run.ledger.info_bytes();
    report.cells_sent = run.ledger.feature_cells();
    report.packets = run.ledger.packet_count();
    return report;
}

}  // namespace skyfleet
