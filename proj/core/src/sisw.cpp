#include "skyfleet/sisw.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "skyfleet/errors.hpp"

namespace skyfleet {

namespace {

inline float sigmoidf(float x) { return 1.0f / (1.0f + std::exp(-x)); }

template <typename T>
void put_le(std::vector<uint8_t>& out, T value) {
    uint8_t bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T get_le(std::span<const uint8_t> bytes, size_t& offset) {
    if (offset + sizeof(T) > bytes.size()) throw IoError("packet truncated");
    T value;
    std::memcpy(&value, bytes.data() + offset, sizeof(T));
    offset += sizeof(T);
    return value;
}

}  // namespace

ScalarGrid compress(const BevGrid& bev) {
    if (bev.channels < 1) throw ConfigError("compress requires at least one channel");
    ScalarGrid out(bev.spec.nx, bev.spec.ny);
    const float inv = 1.0f / bev.channels;
    for (int i = 0; i < out.cells(); ++i) {
        const float* f = bev.cell(i);
        float sum = 0.0f;
        for (int c = 0; c < bev.channels; ++c) sum += f[c];
        out.v[i] = sum * inv;
    }
    return out;
}

ScalarGrid info_volume(const ScalarGrid& compressed, int window, InfoVolumeMode mode) {
    if (window < 3 || window % 2 == 0) throw ConfigError("window must be odd and >= 3");
    ScalarGrid out(compressed.nx, compressed.ny);
    const float inv = 1.0f / static_cast<float>(window * window);
    for (int m = 0; m < compressed.nx; ++m) {
        for (int n = 0; n < compressed.ny; ++n) {
            const float center = compressed.at(m, n);
            float acc = 0.0f;
            for (int a = 0; a < window; ++a) {
                const int mm = std::min(m + a, compressed.nx - 1);
                for (int b = 0; b < window; ++b) {
                    const int nn = std::min(n + b, compressed.ny - 1);
                    const float diff = compressed.at(mm, nn) - center;
                    if (mode == InfoVolumeMode::Literal) {
                        acc += sigmoidf(diff);
                    } else {
                        acc += 2.0f * sigmoidf(std::abs(diff)) - 1.0f;
                    }
                }
            }
            out.at(m, n) = acc * inv;
        }
    }
    return out;
}

ScalarGrid complement_score(const ScalarGrid& i_sender, const ScalarGrid& i_receiver) {
    if (i_sender.nx != i_receiver.nx || i_sender.ny != i_receiver.ny)
        throw ConfigError("complement_score shape mismatch");
    ScalarGrid out(i_sender.nx, i_sender.ny);
    for (size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = i_sender.v[i] * (1.0f - i_receiver.v[i]);
    return out;
}

std::vector<int32_t> select_topk(const ScalarGrid& scores, double ratio) {
    if (!(ratio > 0.0) || ratio > 1.0) throw ConfigError("ratio must be in (0, 1]");
    const int n = scores.cells();
    const int count = static_cast<int>(std::floor(ratio * n));
    std::vector<int32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::nth_element(order.begin(), order.begin() + count, order.end(),
                     [&](int32_t a, int32_t b) {
                         if (scores.v[a] != scores.v[b]) return scores.v[a] > scores.v[b];
                         return a < b;
                     });
    order.resize(count);
    std::sort(order.begin(), order.end());
    return order;
}

SparsePacket make_packet(uint16_t sender_id, uint32_t frame, const Pose2& sender_pose,
                         const BevGrid& bev, const std::vector<int32_t>& cells) {
    SparsePacket packet;
    packet.sender_id = sender_id;
    packet.frame = frame;
    packet.sender_pose = sender_pose;
    packet.channels = bev.channels;
    packet.grid = bev.spec;
    packet.cells = cells;
    packet.features.reserve(cells.size() * bev.channels);
    for (int32_t cell : cells) {
        const float* f = bev.cell(cell);
        packet.features.insert(packet.features.end(), f, f + bev.channels);
    }
    return packet;
}

size_t packet_wire_size(size_t cell_count, int channels) {
    return 2 + 4 + 4 + 2 + 3 * 8 + cell_count * (2 + 2 + 4 * static_cast<size_t>(channels));
}

std::vector<uint8_t> serialize_packet(const SparsePacket& packet) {
    std::vector<uint8_t> out;
    out.reserve(packet_wire_size(packet.cells.size(), packet.channels));
    put_le<uint16_t>(out, packet.sender_id);
    put_le<uint32_t>(out, packet.frame);
    put_le<uint32_t>(out, static_cast<uint32_t>(packet.cells.size()));
    put_le<uint16_t>(out, static_cast<uint16_t>(packet.channels));
    put_le<double>(out, packet.sender_pose.x);
    put_le<double>(out, packet.sender_pose.y);
    put_le<double>(out, packet.sender_pose.yaw);
    for (size_t i = 0; i < packet.cells.size(); ++i) {
        const int32_t cell = packet.cells[i];
        put_le<uint16_t>(out, static_cast<uint16_t>(cell / packet.grid.ny));
        put_le<uint16_t>(out, static_cast<uint16_t>(cell % packet.grid.ny));
        for (int c = 0; c < packet.channels; ++c)
            put_le<float>(out, packet.features[i * packet.channels + c]);
    }
    return out;
}

SparsePacket deserialize_packet(std::span<const uint8_t> bytes, const GridSpec& grid) {
    SparsePacket packet;
    size_t off = 0;
    packet.sender_id = get_le<uint16_t>(bytes, off);
    packet.frame = get_le<uint32_t>(bytes, off);
    const uint32_t count = get_le<uint32_t>(bytes, off);
    packet.channels = get_le<uint16_t>(bytes, off);
    packet.sender_pose.x = get_le<double>(bytes, off);
    packet.sender_pose.y = get_le<double>(bytes, off);
    packet.sender_pose.yaw = get_le<double>(bytes, off);
    packet.grid = grid;
    packet.cells.reserve(count);
    packet.features.reserve(static_cast<size_t>(count) * packet.channels);
    for (uint32_t i = 0; i < count; ++i) {
        const uint16_t x = get_le<uint16_t>(bytes, off);
        const uint16_t y = get_le<uint16_t>(bytes, off);
        packet.cells.push_back(static_cast<int32_t>(x) * grid.ny + y);
        for (int c = 0; c < packet.channels; ++c)
            packet.features.push_back(get_le<float>(bytes, off));
    }
    return packet;
}

AlignedCells align_packet(const SparsePacket& packet, const Pose2& receiver_pose,
                          const GridSpec& receiver_grid) {
    if (std::abs(packet.grid.resolution - receiver_grid.resolution) > 1e-12)
        throw ConfigError("align_packet requires matching cell sizes");
    AlignedCells out;
    out.spec = receiver_grid;
    out.channels = packet.channels;
    const size_t n = static_cast<size_t>(receiver_grid.cells());
    out.values.assign(n * packet.channels, 0.0f);
    out.defined.assign(n, 0);
    std::vector<float> best_d2(n, 0.0f);

    for (size_t i = 0; i < packet.cells.size(); ++i) {
        const int32_t cell = packet.cells[i];
        const int sx = cell / packet.grid.ny;
        const int sy = cell % packet.grid.ny;
        double wx, wy;
        frame_to_world(packet.sender_pose, packet.grid.center_x(sx), packet.grid.center_y(sy),
                       wx, wy);
        double rx, ry;
        world_to_frame(receiver_pose, wx, wy, rx, ry);
        const int target = receiver_grid.cell_index(rx, ry);
        if (target < 0) {
            ++out.dropped;
            continue;
        }
        const int tx = target / receiver_grid.ny;
        const int ty = target % receiver_grid.ny;
        const double dx = rx - receiver_grid.center_x(tx);
        const double dy = ry - receiver_grid.center_y(ty);
        const float d2 = static_cast<float>(dx * dx + dy * dy);
        if (out.defined[target] && d2 >= best_d2[target]) continue;
        out.defined[target] = 1;
        best_d2[target] = d2;
        std::memcpy(out.values.data() + static_cast<size_t>(target) * packet.channels,
                    packet.features.data() + i * packet.channels,
                    sizeof(float) * packet.channels);
    }
    return out;
}

BevGrid gaussian_infill(const AlignedCells& aligned, double sigma, int radius,
                        std::vector<uint8_t>* informative, int64_t* orphans) {
    if (!(sigma > 0.0)) throw ConfigError("infill sigma must be positive");
    if (radius < 1) throw ConfigError("infill radius must be >= 1");
    const GridSpec& spec = aligned.spec;
    const int C = aligned.channels;
    BevGrid out(spec, C);
    const size_t n = static_cast<size_t>(spec.cells());
    std::vector<float> weight_sum(n, 0.0f);
    std::vector<float> value_sum(n * C, 0.0f);

    // Scatter from defined cells; only cells within the Euclidean radius get
    // a contribution.
    const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    const int r2 = radius * radius;
    for (int x = 0; x < spec.nx; ++x) {
        for (int y = 0; y < spec.ny; ++y) {
            const size_t src = static_cast<size_t>(x) * spec.ny + y;
            if (!aligned.defined[src]) continue;
            const float* f = aligned.values.data() + src * C;
            const int x0 = std::max(0, x - radius), x1 = std::min(spec.nx - 1, x + radius);
            const int y0 = std::max(0, y - radius), y1 = std::min(spec.ny - 1, y + radius);
            for (int xx = x0; xx <= x1; ++xx) {
                const int dx = xx - x;
                for (int yy = y0; yy <= y1; ++yy) {
                    const int dy = yy - y;
                    const int d2 = dx * dx + dy * dy;
                    if (d2 > r2) continue;
                    const size_t dst = static_cast<size_t>(xx) * spec.ny + yy;
                    if (aligned.defined[dst]) continue;
                    const float w = static_cast<float>(std::exp(-d2 * inv_two_sigma2));
                    weight_sum[dst] += w;
                    float* acc = value_sum.data() + dst * C;
                    for (int c = 0; c < C; ++c) acc[c] += w * f[c];
                }
            }
        }
    }

    int64_t orphan_count = 0;
    if (informative) informative->assign(n, 0);
    for (size_t i = 0; i < n; ++i) {
        float* dst = out.data.data() + i * C;
        if (aligned.defined[i]) {
            std::memcpy(dst, aligned.values.data() + i * C, sizeof(float) * C);
            if (informative) (*informative)[i] = 1;
        } else if (weight_sum[i] > 0.0f) {
            const float inv = 1.0f / weight_sum[i];
            const float* acc = value_sum.data() + i * C;
            for (int c = 0; c < C; ++c) dst[c] = acc[c] * inv;
            if (informative) (*informative)[i] = 1;
        } else {
            ++orphan_count;  // stays zero
        }
    }
    if (orphans) *orphans = orphan_count;
    return out;
}

std::vector<ScalarGrid> fusion_weights(const BevGrid& local,
                                       const std::vector<const BevGrid*>& sources,
                                       const std::vector<const std::vector<uint8_t>*>&
                                           informative) {
    if (sources.empty()) throw ConfigError("fusion requires at least one source");
    if (!informative.empty() && informative.size() != sources.size())
        throw ConfigError("informative mask count must match sources");
    const int C = local.channels;
    const int n = local.spec.cells();
    for (const BevGrid* s : sources)
        if (s->spec != local.spec || s->channels != C)
            throw ConfigError("fusion sources must share the local grid shape");

    const float inv_2c = 1.0f / (2.0f * C);
    std::vector<ScalarGrid> weights(sources.size(), ScalarGrid(local.spec.nx, local.spec.ny));
    std::vector<float> raw(sources.size());
    for (int i = 0; i < n; ++i) {
        const float* lf = local.cell(i);
        float local_sum = 0.0f;
        for (int c = 0; c < C; ++c) local_sum += lf[c];
        float total = 0.0f;
        for (size_t j = 0; j < sources.size(); ++j) {
            if (!informative.empty() && informative[j] && !(*informative[j])[i]) {
                raw[j] = 0.0f;
                continue;
            }
            const float* sf = sources[j]->cell(i);
            float src_sum = 0.0f;
            for (int c = 0; c < C; ++c) src_sum += sf[c];
            raw[j] = sigmoidf((local_sum + src_sum) * inv_2c);
            total += raw[j];
        }
        if (total <= 0.0f) {  // every source excluded; fall back to uniform
            const float w = 1.0f / sources.size();
            for (size_t j = 0; j < sources.size(); ++j) weights[j].v[i] = w;
            continue;
        }
        const float inv_total = 1.0f / total;
        for (size_t j = 0; j < sources.size(); ++j) weights[j].v[i] = raw[j] * inv_total;
    }
    return weights;
}

BevGrid aggregate(const std::vector<ScalarGrid>& weights,
                  const std::vector<const BevGrid*>& sources) {
    if (weights.size() != sources.size() || sources.empty())
        throw ConfigError("aggregate requires matching weights and sources");
    BevGrid out(sources[0]->spec, sources[0]->channels);
    const int C = out.channels;
    const int n = out.spec.cells();
    for (int i = 0; i < n; ++i) {
        float* dst = out.cell(i);
        for (size_t j = 0; j < sources.size(); ++j) {
            const float w = weights[j].v[i];
            if (w == 0.0f) continue;
            const float* sf = sources[j]->cell(i);
            for (int c = 0; c < C; ++c) dst[c] += w * sf[c];
        }
    }
    return out;
}

}  // namespace skyfleet
