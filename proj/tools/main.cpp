// skyfleet: multi-drone BEV prediction sandbox. Subcommands: generate a
// deterministic scene, run a scenario end to end, compare collaboration
// modes over a seed set, and dump grids from a finished run.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "skyfleet/errors.hpp"
#include "skyfleet/harness.hpp"
#include "skyfleet/parallel.hpp"
#include "skyfleet/report.hpp"

namespace fs = std::filesystem;
using namespace skyfleet;

namespace {

struct Overrides {
    std::optional<uint64_t> seed;
    std::optional<std::string> mode;
    std::optional<double> ratio;
    std::optional<int> window;
    std::optional<uint64_t> budget;
    std::optional<std::string> grid;
};

ScenarioConfig load_with_overrides(const std::string& path, const Overrides& o) {
    ScenarioConfig cfg = load_config(path);
    if (o.seed) cfg.seed = *o.seed;
    if (o.mode) cfg.collab_mode = collab_mode_from_string(*o.mode);
    if (o.ratio) cfg.sisw.ratio = *o.ratio;
    if (o.window) cfg.sisw.window = *o.window;
    if (o.budget) cfg.budget_bytes = *o.budget;
    if (o.grid) cfg.grid = *o.grid;
    cfg.validate();
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

int cmd_generate(const std::string& config_path, const std::string& out_path,
                 const Overrides& overrides) {
    const ScenarioConfig cfg = load_with_overrides(config_path, overrides);
    const Scene scene = generate_scene(cfg.seed, cfg.scene, cfg.rig);

    nlohmann::json j;
    j["tool_version"] = kToolVersion;
    char hash[17];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    j["config_hash"] = hash;
    j["seed"] = cfg.seed;
    nlohmann::json tracks = nlohmann::json::array();
    for (const InstanceTrack& t : scene.tracks) {
        nlohmann::json jt;
        jt["id"] = t.id;
        jt["class"] = t.cls;
        jt["length"] = t.length;
        jt["width"] = t.width;
        jt["height"] = t.height;
        nlohmann::json poses = nlohmann::json::array();
        for (const Pose2& p : t.poses) poses.push_back({p.x, p.y, p.yaw});
        jt["poses"] = poses;
        tracks.push_back(jt);
    }
    j["tracks"] = tracks;
    nlohmann::json drones = nlohmann::json::array();
    for (size_t d = 0; d < scene.bev_poses.size(); ++d) {
        const Pose2& p = scene.bev_poses[d];
        drones.push_back({{"x", p.x}, {"y", p.y}, {"yaw", p.yaw},
                          {"altitude", scene.cameras[d].altitude}});
    }
    j["drones"] = drones;
    write_text(out_path, j.dump(2) + "\n");
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, const Overrides& overrides,
            bool quiet) {
    const ScenarioConfig cfg = load_with_overrides(config_path, overrides);
    const ScenarioRun run = run_scenario(cfg);
    const MetricsReport report = evaluate(run);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_text(dir / "report.json", report_to_json(report, run.config_hash_value));
    write_text(dir / "report.csv",
               report_csv_header() +
                   report_csv_row(report, run.config_hash_value, to_string(cfg.collab_mode)));
    save_run(run, (dir / "run.bin").string());
    save_replay(run.replay, (dir / "replay.bin").string());

    if (!quiet)
        std::printf("iou=%.4f vpq=%.4f precision=%.4f recall=%.4f deviation=%.3fm bytes=%llu\n",
                    report.iou, report.vpq_value, report.precision, report.recall,
                    report.deviation,
                    static_cast<unsigned long long>(report.bytes_features + report.bytes_info));
    return 0;
}

int cmd_compare(const std::string& config_path, const std::vector<std::string>& mode_names,
                int seed_count, const std::string& out_dir, const Overrides& overrides,
                bool quiet) {
    if (seed_count < 1) throw ConfigError("--seeds must be at least 1");
    const ScenarioConfig base = load_with_overrides(config_path, overrides);
    std::vector<CollabMode> modes;
    for (const std::string& name : mode_names) modes.push_back(collab_mode_from_string(name));

    struct Cell {
        double iou = 0, vpq = 0, precision = 0, recall = 0, dev_sum = 0, loss = 0;
        int dev_matched = 0;
        uint64_t bytes = 0;
    };
    std::vector<Cell> rows(modes.size());
    std::vector<std::string> csv_rows(modes.size() * static_cast<size_t>(seed_count));
    std::mutex agg_mutex;

    parallel_for(modes.size() * static_cast<size_t>(seed_count), [&](size_t idx) {
        const size_t m = idx / seed_count;
        const uint64_t seed = base.seed + idx % seed_count;
        ScenarioConfig cfg = base;
        cfg.collab_mode = modes[m];
        cfg.seed = seed;
        const ScenarioRun run = run_scenario(cfg);
        const MetricsReport rep = evaluate(run);
        csv_rows[idx] = report_csv_row(rep, run.config_hash_value,
                                       std::string(to_string(modes[m])) + ":" +
                                           std::to_string(seed));
        std::lock_guard<std::mutex> lock(agg_mutex);
        Cell& c = rows[m];
        c.iou += rep.iou;
        c.vpq += rep.vpq_value;
        c.precision += rep.precision;
        c.recall += rep.recall;
        c.loss += rep.loss;
        if (rep.matched > 0) {
            c.dev_sum += rep.deviation * rep.matched;
            c.dev_matched += rep.matched;
        }
        c.bytes += rep.bytes_features + rep.bytes_info;
    });

    std::string csv = report_csv_header();
    for (const std::string& row : csv_rows) csv += row;

    std::string table = "mode        iou     vpq     prec    recall  dev_m   loss    bytes\n";
    for (size_t m = 0; m < modes.size(); ++m) {
        const Cell& c = rows[m];
        const double n = seed_count;
        const double dev = c.dev_matched ? c.dev_sum / c.dev_matched
                                         : std::numeric_limits<double>::quiet_NaN();
        char line[256];
        std::snprintf(line, sizeof(line),
                      "%-10s  %.4f  %.4f  %.4f  %.4f  %.3f  %.4f  %llu\n",
                      to_string(modes[m]), c.iou / n, c.vpq / n, c.precision / n, c.recall / n,
                      dev, c.loss / n, static_cast<unsigned long long>(c.bytes / seed_count));
        table += line;
    }

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_text(dir / "compare.csv", csv);
    write_text(dir / "compare.txt", table);
    if (!quiet) std::fputs(table.c_str(), stdout);
    return 0;
}

int cmd_dump(const std::string& run_path, const std::string& what, int frame, int drone,
             int channel, const std::string& out_dir) {
    const ScenarioRun run = load_run(run_path);
    if (drone < 0 || drone >= static_cast<int>(run.drones.size()))
        throw ConfigError("drone index out of range");
    const DroneRun& d = run.drones[static_cast<size_t>(drone)];
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    const std::string stem = what + "_d" + std::to_string(drone) + "_f" + std::to_string(frame);
    const std::string comment = std::string("skyfleet ") + kToolVersion;
    const GridSpec grid = run.config.grid_spec();

    if (what == "bev") {
        if (frame < 0 || frame >= static_cast<int>(d.fused.size()))
            throw ConfigError("frame index out of range");
        const BevGrid& bev = d.fused[static_cast<size_t>(frame)];
        if (channel < 0 || channel >= bev.channels) throw ConfigError("channel out of range");
        write_pgm((dir / (stem + "_c" + std::to_string(channel) + ".pgm")).string(), grid.nx,
                  grid.ny, bev_channel_to_pixels(bev, channel), comment);
        write_bev_binary(bev, run.config_hash_value, (dir / (stem + ".bin")).string());
    } else if (what == "info-volume") {
        if (frame < 0 || frame >= static_cast<int>(d.info.size()))
            throw ConfigError("frame index out of range");
        write_pgm((dir / (stem + ".pgm")).string(), grid.nx, grid.ny,
                  scalar_to_pixels(d.info[static_cast<size_t>(frame)]), comment);
    } else if (what == "mask") {
        if (frame < 0 || frame >= static_cast<int>(d.prediction.seg.size()))
            throw ConfigError("frame index out of range");
        write_pgm((dir / (stem + ".pgm")).string(), grid.nx, grid.ny,
                  mask_to_pixels(d.prediction.seg[static_cast<size_t>(frame)]), comment);
    } else {
        throw ConfigError("unknown dump kind '" + what + "' (expected bev, mask, info-volume)");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-drone BEV trajectory prediction sandbox"};
    app.require_subcommand(1);

    std::string config_path, out_path = "out";
    bool quiet = false;
    Overrides overrides;

    auto add_common = [&](CLI::App* cmd, bool with_overrides) {
        cmd->add_option("--config", config_path, "scenario config (JSON)")->required();
        cmd->add_option("--out", out_path, "output path");
        cmd->add_flag("--quiet", quiet, "suppress console summary");
        if (with_overrides) {
            cmd->add_option("--seed-override", overrides.seed, "replace the config seed");
            cmd->add_option("--mode", overrides.mode, "collaboration mode override");
            cmd->add_option("--ratio", overrides.ratio, "transmission ratio override");
            cmd->add_option("--window", overrides.window, "info-volume window override");
            cmd->add_option("--budget-bytes", overrides.budget, "per-link byte budget override");
            cmd->add_option("--grid", overrides.grid, "grid override (long or short)");
        }
    };

    CLI::App* generate = app.add_subcommand("generate", "write the deterministic scene file");
    add_common(generate, true);

    CLI::App* run = app.add_subcommand("run", "run a scenario and write reports");
    add_common(run, true);

    CLI::App* compare = app.add_subcommand("compare", "run several modes over a seed set");
    add_common(compare, true);
    std::vector<std::string> modes{"none", "late", "early", "sisw"};
    int seed_count = 5;
    compare->add_option("--modes", modes, "collaboration modes to compare")->delimiter(',');
    compare->add_option("--seeds", seed_count, "number of consecutive seeds");

    CLI::App* dump = app.add_subcommand("dump", "export grids from a run file as graymaps");
    std::string run_file, what = "bev";
    int frame = 0, drone = 0, channel = 0;
    dump->add_option("--run", run_file, "run file from the run subcommand")->required();
    dump->add_option("--what", what, "bev, mask, or info-volume");
    dump->add_option("--frame", frame, "frame index");
    dump->add_option("--drone", drone, "drone index");
    dump->add_option("--channel", channel, "feature channel (bev only)");
    dump->add_option("--out", out_path, "output directory");

    try {
        app.parse(argc, argv);
        if (generate->parsed())
            return cmd_generate(config_path, out_path == "out" ? "scene.json" : out_path,
                                overrides);
        if (run->parsed()) return cmd_run(config_path, out_path, overrides, quiet);
        if (compare->parsed())
            return cmd_compare(config_path, modes, seed_count, out_path, overrides, quiet);
        if (dump->parsed()) return cmd_dump(run_file, what, frame, drone, channel, out_path);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
