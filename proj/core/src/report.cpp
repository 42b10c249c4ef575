#include "skyfleet/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "skyfleet/errors.hpp"

namespace skyfleet {

namespace {

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

nlohmann::json metric_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

// --- little-endian byte stream helpers ---

struct Writer {
    std::vector<uint8_t> buf;

    void bytes(const void* p, size_t n) {
        const auto* b = static_cast<const uint8_t*>(p);
        buf.insert(buf.end(), b, b + n);
    }
    void u8(uint8_t v) { buf.push_back(v); }
    void u32(uint32_t v) { bytes(&v, 4); }
    void u64(uint64_t v) { bytes(&v, 8); }
    void i32(int32_t v) { bytes(&v, 4); }
    void f32(float v) { bytes(&v, 4); }
    void f64(double v) { bytes(&v, 8); }
    void f32s(const std::vector<float>& v) { bytes(v.data(), v.size() * 4); }
    void i32s(const std::vector<int32_t>& v) { bytes(v.data(), v.size() * 4); }
    void u8s(const std::vector<uint8_t>& v) { bytes(v.data(), v.size()); }
    void str(const std::string& s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }
};

struct Reader {
    const uint8_t* p;
    const uint8_t* end;

    void bytes(void* out, size_t n) {
        if (static_cast<size_t>(end - p) < n) throw IoError("truncated run file");
        std::memcpy(out, p, n);
        p += n;
    }
    uint8_t u8() {
        uint8_t v;
        bytes(&v, 1);
        return v;
    }
    uint32_t u32() {
        uint32_t v;
        bytes(&v, 4);
        return v;
    }
    uint64_t u64() {
        uint64_t v;
        bytes(&v, 8);
        return v;
    }
    int32_t i32() {
        int32_t v;
        bytes(&v, 4);
        return v;
    }
    float f32() {
        float v;
        bytes(&v, 4);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return v;
    }
    void f32s(std::vector<float>& v, size_t n) {
        v.resize(n);
        bytes(v.data(), n * 4);
    }
    void i32s(std::vector<int32_t>& v, size_t n) {
        v.resize(n);
        bytes(v.data(), n * 4);
    }
    void u8s(std::vector<uint8_t>& v, size_t n) {
        v.resize(n);
        bytes(v.data(), n);
    }
    std::string str() {
        const size_t n = u64();
        if (static_cast<size_t>(end - p) < n) throw IoError("truncated run file");
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        return s;
    }
};

void write_file(const std::string& path, const void* data, size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw IoError("write failed: " + path);
}

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open: " + path);
    const auto size = in.tellg();
    in.seekg(0);
    std::vector<uint8_t> data(static_cast<size_t>(size));
    in.read(reinterpret_cast<char*>(data.data()), size);
    if (!in) throw IoError("read failed: " + path);
    return data;
}

constexpr uint32_t kRunFormatVersion = 1;
constexpr char kRunMagic[4] = {'S', 'K', 'Y', 'R'};
constexpr char kBevMagic[4] = {'S', 'K', 'Y', 'B'};

}  // namespace

std::string report_to_json(const MetricsReport& report, uint64_t config_hash) {
    nlohmann::json j;
    j["tool_version"] = kToolVersion;
    j["config_hash"] = hex64(config_hash);
    j["grid"] = report.grid_label;
    nlohmann::json m;
    m["iou"] = report.iou;
    m["iou_per_frame"] = report.iou_per_frame;
    m["vpq"] = report.vpq_value;
    m["precision"] = report.precision;
    m["recall"] = report.recall;
    m["deviation_m"] = metric_or_null(report.deviation);
    m["loss"] = report.loss;
    m["matched"] = report.matched;
    m["pred_count"] = report.pred_count;
    m["gt_count"] = report.gt_count;
    j["metrics"] = m;
    nlohmann::json l;
    l["feature_bytes"] = report.bytes_features;
    l["info_map_bytes"] = report.bytes_info;
    l["cells_sent"] = report.cells_sent;
    l["packets"] = report.packets;
    j["ledger"] = l;
    return j.dump(2) + "\n";
}

std::string report_csv_header() {
    return "label,tool_version,config_hash,grid,iou,vpq,precision,recall,deviation_m,loss,"
           "feature_bytes,info_map_bytes,cells_sent,packets\n";
}

std::string report_csv_row(const MetricsReport& report, uint64_t config_hash,
                           const std::string& label) {
    std::string row = label;
    row += ',';
    row += kToolVersion;
    row += ',';
    row += hex64(config_hash);
    row += ',';
    row += report.grid_label;
    for (double v : {report.iou, report.vpq_value, report.precision, report.recall,
                     report.deviation, report.loss}) {
        row += ',';
        row += fmt(v);
    }
    for (uint64_t v : {report.bytes_features, report.bytes_info, report.cells_sent,
                       static_cast<uint64_t>(report.packets)}) {
        row += ',';
        row += std::to_string(v);
    }
    row += '\n';
    return row;
}

void save_run(const ScenarioRun& run, const std::string& path) {
    Writer w;
    w.bytes(kRunMagic, 4);
    w.u32(kRunFormatVersion);
    w.u64(run.config_hash_value);
    w.str(serialize_config(run.config));

    w.u32(static_cast<uint32_t>(run.drones.size()));
    for (const DroneRun& d : run.drones) {
        w.u32(static_cast<uint32_t>(d.fused.size()));
        for (const BevGrid& g : d.fused) {
            w.u32(static_cast<uint32_t>(g.channels));
            w.f32s(g.data);
        }
        w.u32(static_cast<uint32_t>(d.info.size()));
        for (const ScalarGrid& g : d.info) w.f32s(g.v);

        const Prediction& p = d.prediction;
        w.u32(static_cast<uint32_t>(p.seg.size()));
        for (size_t f = 0; f < p.seg.size(); ++f) {
            w.u8s(p.seg[f].v);
            w.i32s(p.ids[f].v);
            w.f32s(p.flow[f].v);
            w.f32s(p.logits[f].v);
        }
        w.u32(static_cast<uint32_t>(p.present_centers.size()));
        for (const auto& [id, cx, cy] : p.present_centers) {
            w.i32(id);
            w.f64(cx);
            w.f64(cy);
        }
    }

    w.u64(run.ledger.budget_bytes);
    w.u32(static_cast<uint32_t>(run.ledger.entries.size()));
    for (const LedgerEntry& e : run.ledger.entries) {
        w.i32(e.sender);
        w.i32(e.receiver);
        w.i32(e.frame);
        w.u64(e.cells);
        w.u64(e.bytes);
        w.u8(e.truncated ? 1 : 0);
        w.u8(e.info_map ? 1 : 0);
    }

    w.u32(static_cast<uint32_t>(run.replay.size()));
    for (const auto& packet : run.replay) {
        w.u32(static_cast<uint32_t>(packet.size()));
        w.u8s(packet);
    }

    write_file(path, w.buf.data(), w.buf.size());
}

ScenarioRun load_run(const std::string& path) {
    const std::vector<uint8_t> data = read_file(path);
    Reader r{data.data(), data.data() + data.size()};
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kRunMagic, 4) != 0) throw IoError("not a run file: " + path);
    if (r.u32() != kRunFormatVersion) throw IoError("unsupported run format version");

    ScenarioRun run;
    run.config_hash_value = r.u64();
    run.config = parse_config(r.str());
    run.scene = generate_scene(run.config.seed, run.config.scene, run.config.rig);
    const GridSpec grid = run.config.grid_spec();
    const size_t cells = static_cast<size_t>(grid.cells());

    const uint32_t drones = r.u32();
    run.drones.resize(drones);
    for (DroneRun& d : run.drones) {
        const uint32_t frames = r.u32();
        for (uint32_t f = 0; f < frames; ++f) {
            const uint32_t channels = r.u32();
            BevGrid g(grid, static_cast<int>(channels));
            r.f32s(g.data, cells * channels);
            d.fused.push_back(std::move(g));
        }
        const uint32_t info_frames = r.u32();
        for (uint32_t f = 0; f < info_frames; ++f) {
            ScalarGrid g(grid.nx, grid.ny);
            r.f32s(g.v, cells);
            d.info.push_back(std::move(g));
        }

        const uint32_t t2 = r.u32();
        for (uint32_t f = 0; f < t2; ++f) {
            BinaryMask seg(grid.nx, grid.ny);
            IdMask ids(grid.nx, grid.ny);
            FlowGrid flow(grid.nx, grid.ny);
            SegLogits logits(grid.nx, grid.ny);
            r.u8s(seg.v, cells);
            r.i32s(ids.v, cells);
            r.f32s(flow.v, cells * 2);
            r.f32s(logits.v, cells * 2);
            d.prediction.seg.push_back(std::move(seg));
            d.prediction.ids.push_back(std::move(ids));
            d.prediction.flow.push_back(std::move(flow));
            d.prediction.logits.push_back(std::move(logits));
        }
        const uint32_t centers = r.u32();
        for (uint32_t i = 0; i < centers; ++i) {
            const int32_t id = r.i32();
            const double cx = r.f64();
            const double cy = r.f64();
            d.prediction.present_centers.emplace_back(id, cx, cy);
        }
    }

    run.ledger.budget_bytes = r.u64();
    const uint32_t entries = r.u32();
    for (uint32_t i = 0; i < entries; ++i) {
        LedgerEntry e;
        e.sender = r.i32();
        e.receiver = r.i32();
        e.frame = r.i32();
        e.cells = r.u64();
        e.bytes = r.u64();
        e.truncated = r.u8() != 0;
        e.info_map = r.u8() != 0;
        run.ledger.entries.push_back(e);
    }

    const uint32_t packets = r.u32();
    for (uint32_t i = 0; i < packets; ++i) {
        const uint32_t len = r.u32();
        std::vector<uint8_t> packet;
        r.u8s(packet, len);
        run.replay.push_back(std::move(packet));
    }
    return run;
}

void save_replay(const std::vector<std::vector<uint8_t>>& packets, const std::string& path) {
    Writer w;
    w.u32(static_cast<uint32_t>(packets.size()));
    for (const auto& packet : packets) {
        w.u32(static_cast<uint32_t>(packet.size()));
        w.u8s(packet);
    }
    write_file(path, w.buf.data(), w.buf.size());
}

std::vector<std::vector<uint8_t>> load_replay(const std::string& path) {
    const std::vector<uint8_t> data = read_file(path);
    Reader r{data.data(), data.data() + data.size()};
    std::vector<std::vector<uint8_t>> packets(r.u32());
    for (auto& packet : packets) {
        const uint32_t len = r.u32();
        r.u8s(packet, len);
    }
    return packets;
}

void write_pgm(const std::string& path, int nx, int ny, const std::vector<uint8_t>& pixels,
               const std::string& comment) {
    if (static_cast<size_t>(nx) * ny != pixels.size()) throw IoError("pgm pixel count mismatch");
    std::string header = "P5\n# " + comment + "\n" + std::to_string(nx) + " " +
                         std::to_string(ny) + "\n255\n";
    // Image rows scan y; pixel storage is x-major, so transpose on the way out.
    std::vector<uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + pixels.size());
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix)
            out.push_back(pixels[static_cast<size_t>(ix) * ny + iy]);
    write_file(path, out.data(), out.size());
}

std::vector<uint8_t> bev_channel_to_pixels(const BevGrid& bev, int channel) {
    if (channel < 0 || channel >= bev.channels) throw IoError("channel out of range");
    const size_t cells = static_cast<size_t>(bev.spec.cells());
    float max_v = 0.0f;
    for (size_t i = 0; i < cells; ++i)
        max_v = std::max(max_v, std::abs(bev.data[i * bev.channels + channel]));
    std::vector<uint8_t> pixels(cells, 0);
    if (max_v > 0.0f)
        for (size_t i = 0; i < cells; ++i) {
            const float v = std::abs(bev.data[i * bev.channels + channel]) / max_v;
            pixels[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
        }
    return pixels;
}

std::vector<uint8_t> scalar_to_pixels(const ScalarGrid& grid) {
    std::vector<uint8_t> pixels(grid.v.size());
    for (size_t i = 0; i < grid.v.size(); ++i) {
        const float v = std::min(1.0f, std::max(0.0f, grid.v[i]));
        pixels[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
    }
    return pixels;
}

std::vector<uint8_t> mask_to_pixels(const BinaryMask& mask) {
    std::vector<uint8_t> pixels(mask.v.size());
    for (size_t i = 0; i < mask.v.size(); ++i) pixels[i] = mask.v[i] ? 255 : 0;
    return pixels;
}

void write_bev_binary(const BevGrid& bev, uint64_t config_hash, const std::string& path) {
    Writer w;
    w.bytes(kBevMagic, 4);
    w.u32(kRunFormatVersion);
    w.str(kToolVersion);
    w.u64(config_hash);
    w.u32(static_cast<uint32_t>(bev.spec.nx));
    w.u32(static_cast<uint32_t>(bev.spec.ny));
    w.u32(static_cast<uint32_t>(bev.channels));
    w.f64(bev.spec.resolution);
    w.f64(bev.spec.x_min);
    w.f64(bev.spec.y_min);
    w.f32s(bev.data);
    write_file(path, w.buf.data(), w.buf.size());
}

BevGrid read_bev_binary(const std::string& path) {
    const std::vector<uint8_t> data = read_file(path);
    Reader r{data.data(), data.data() + data.size()};
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kBevMagic, 4) != 0) throw IoError("not a bev dump: " + path);
    if (r.u32() != kRunFormatVersion) throw IoError("unsupported bev dump version");
    r.str();  // tool version, informational
    r.u64();  // config hash, informational
    GridSpec spec;
    spec.nx = static_cast<int>(r.u32());
    spec.ny = static_cast<int>(r.u32());
    const int channels = static_cast<int>(r.u32());
    spec.resolution = r.f64();
    spec.x_min = r.f64();
    spec.y_min = r.f64();
    BevGrid bev(spec, channels);
    r.f32s(bev.data, bev.data.size());
    return bev;
}

}  // namespace skyfleet
