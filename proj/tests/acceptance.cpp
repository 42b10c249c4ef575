// Acceptance gate: one verdict line per release-blocking criterion, each with
// its tolerance and wall-clock limit. Exit status 0 only when every line is
// a PASS.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "skyfleet/bev.hpp"
#include "skyfleet/geometry.hpp"
#include "skyfleet/harness.hpp"
#include "skyfleet/metrics.hpp"
#include "skyfleet/report.hpp"
#include "skyfleet/sisw.hpp"
#include "test_util.hpp"

using namespace skyfleet;
using namespace skyfleet::testutil;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

// ---- 1: depth upper bound vs brute-force ray-plane intersection ------------

Verdict check_depth_oracle() {
    Verdict v;
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> du(0.0, 63.0), dv(0.0, 47.0);
    double worst = 0.0;
    int checked = 0;
    while (checked < 10000) {
        const CameraModel cam = random_camera(rng);
        const double u = du(rng), pv = dv(rng);
        // independent path: unnormalized direction, parametric plane hit
        const Eigen::Vector3d dir =
            cam.rotation * (cam.intrinsics.inverse() * Eigen::Vector3d(u, pv, 1.0));
        const auto got = depth_upper_bound(cam, u, pv);
        if (dir.z() >= 0.0) {
            v.require(!got, "expected invalid pixel");
            continue;
        }
        const double want = (-cam.translation.z() / dir.z()) * dir.norm();
        v.require(got.has_value(), "expected valid pixel");
        if (got) worst = std::max(worst, rel_err(*got, want));
        ++checked;
    }
    v.require(worst <= 1e-9, "max rel err " + std::to_string(worst));
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max rel err %.2e over 1e4 pairs", worst);
    v.detail = v.pass ? buf : v.detail;
    return v;
}

// ---- 2: the two height-to-depth closed forms agree -------------------------

Verdict check_height_depth_identity() {
    Verdict v;
    std::mt19937_64 rng(102);
    // h capped at 0.99 H: at h -> H both forms cancel to ~0 and relative
    // comparison loses meaning
    std::uniform_real_distribution<double> dh(5.0, 120.0), dm(1.0, 12.0), df(0.0, 0.99);
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double altitude = dh(rng);
        const double d_upper = altitude * dm(rng);
        const double h = altitude * df(rng);
        const double via_ratio = depth_from_height(d_upper, altitude, h);
        const double via_angle = d_upper - h / (altitude / d_upper);  // sin = H / D
        worst = std::max(worst, rel_err(via_ratio, via_angle));
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max rel err %.2e over 1e5 tuples", worst);
    v.require(worst <= 1e-12, buf);
    if (v.pass) v.detail = buf;
    return v;
}

// ---- 3: first-order depth sensitivity vs the exact difference --------------

Verdict check_depth_sensitivity() {
    Verdict v;
    // below theta ~ 0.1002 the second-order term alone exceeds 1e-3, so the
    // sample grid starts at 0.105
    const double delta = 1e-4;
    double worst = 0.0;
    for (double theta = 0.105; theta <= 1.5; theta += 1e-3)
        for (double h : {0.5, 1.0, 2.0, 5.0, 9.0}) {
            const double exact = h / std::sin(theta - delta) - h / std::sin(theta);
            worst = std::max(worst, rel_err(depth_sensitivity(h, theta, delta), exact));
        }
    v.require(worst <= 1e-3, "max rel err " + std::to_string(worst));
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max rel err %.2e at delta 1e-4", worst);
    v.detail = v.pass ? buf : v.detail;
    return v;
}

// ---- 4: windowed discrepancy map is bit-exact ------------------------------

Verdict check_info_volume_exact() {
    Verdict v;
    auto naive = [](const ScalarGrid& g, int window) {
        ScalarGrid out(g.nx, g.ny);
        const float inv = 1.0f / static_cast<float>(window * window);
        for (int m = 0; m < g.nx; ++m)
            for (int n = 0; n < g.ny; ++n) {
                float acc = 0.0f;
                for (int a = 0; a < window; ++a)
                    for (int b = 0; b < window; ++b) {
                        const float diff =
                            g.at(std::min(m + a, g.nx - 1), std::min(n + b, g.ny - 1)) -
                            g.at(m, n);
                        acc += 1.0f / (1.0f + std::exp(-diff));
                    }
                out.at(m, n) = acc * inv;
            }
        return out;
    };

    std::mt19937_64 rng(104);
    std::uniform_int_distribution<int> dim(1, 64);
    std::uniform_real_distribution<float> df(-2.0f, 2.0f);
    const int windows[3] = {3, 5, 7};
    for (int trial = 0; trial < 100; ++trial) {
        ScalarGrid g(dim(rng), dim(rng));
        for (float& x : g.v) x = df(rng);
        const int k = windows[trial % 3];
        if (info_volume(g, k).v != naive(g, k).v) {
            v.require(false, "mismatch vs naive oracle at trial " + std::to_string(trial));
            return v;
        }
    }
    for (int k : windows) {
        const ScalarGrid flat(33, 17, 0.73f);
        for (float x : info_volume(flat, k).v)
            if (x != 0.5f) {
                v.require(false, "constant grid not exactly 0.5");
                return v;
            }
    }
    v.detail = "bit-exact on 100 grids, constants exactly 0.5";
    return v;
}

// ---- 5: transmission ratio 0.25 is exact on the standard rig ---------------

Verdict check_budget_exactness() {
    Verdict v;
    ScenarioConfig cfg;
    cfg.seed = 1;
    cfg.collab_mode = CollabMode::Sisw;
    const ScenarioRun run = run_scenario(cfg);
    const GridSpec grid = cfg.grid_spec();
    const uint64_t want = static_cast<uint64_t>(std::floor(0.25 * grid.cells()));
    size_t packets = 0;
    for (const LedgerEntry& e : run.ledger.entries) {
        if (e.info_map) {
            v.require(e.bytes == e.cells * 4, "info-map bytes mismatch");
            continue;
        }
        ++packets;
        v.require(e.cells == want, "packet cell count " + std::to_string(e.cells));
        v.require(e.bytes == packet_wire_size(e.cells, kFeatureChannels),
                  "ledger bytes disagree with the wire format");
    }
    v.require(packets == 36, "expected 36 packets, saw " + std::to_string(packets));
    v.require(run.replay.size() == packets, "replay size mismatch");
    for (const auto& wire : run.replay)
        v.require(wire.size() == packet_wire_size(want, kFeatureChannels),
                  "serialized packet size mismatch");
    if (v.pass)
        v.detail = "36 packets, each exactly " + std::to_string(want) + " cells";
    return v;
}

// ---- 6: assignment optimality vs exhaustive permutations -------------------

Verdict check_hungarian() {
    Verdict v;
    std::mt19937_64 rng(106);
    std::uniform_int_distribution<int> dim(1, 6), di(0, 1023);
    for (int trial = 0; trial < 500; ++trial) {
        const int rows = dim(rng), cols = dim(rng);
        std::vector<std::vector<double>> cost(static_cast<size_t>(rows),
                                              std::vector<double>(static_cast<size_t>(cols)));
        for (auto& row : cost)
            for (double& c : row) c = di(rng) / 1024.0;  // exactly summable

        const bool transpose = rows > cols;
        const size_t n = static_cast<size_t>(std::min(rows, cols));
        std::vector<int> perm(static_cast<size_t>(std::max(rows, cols)));
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            double total = 0.0;
            for (size_t i = 0; i < n; ++i)
                total += transpose ? cost[static_cast<size_t>(perm[i])][i]
                                   : cost[i][static_cast<size_t>(perm[i])];
            best = std::min(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));

        if (hungarian(cost).total_cost != best) {
            v.require(false, "suboptimal assignment at trial " + std::to_string(trial));
            return v;
        }
    }
    v.detail = "optimal on all 500 matrices";
    return v;
}

// ---- 7: metric hand cases --------------------------------------------------

Verdict check_metric_hand_cases() {
    Verdict v;
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9; };

    BinaryMask p1(4, 4), g1(4, 4), p2(4, 4), g2(4, 4);
    p1.at(0, 0) = p1.at(0, 1) = 1;
    g1.at(0, 0) = g1.at(1, 0) = 1;
    p2.at(2, 2) = 1;
    g2.at(2, 2) = g2.at(2, 3) = 1;
    v.require(close(iou_sequence({p1, p2}, {g1, g2}), 5.0 / 12.0), "IoU 5/12 case");

    IdMask gt(6, 6);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) gt.at(x, y) = 1;
    IdMask pred = gt;
    pred.at(5, 5) = 7;
    v.require(close(vpq({pred}, {gt}), 2.0 / 3.0), "VPQ 2/3 case");
    v.require(close(vpq({gt, gt}, {gt, gt}), 1.0), "VPQ perfect case");

    const CenterMatchResult half = center_match({{1.5, 2.0}}, {{1.0, 2.0}}, 4.0);
    v.require(close(half.precision, 1.0) && close(half.recall, 1.0) &&
                  close(half.mean_deviation, 0.5),
              "center (1, 1, 0.5) case");
    const CenterMatchResult extra =
        center_match({{1.0, 2.0}, {30.0, 30.0}}, {{1.2, 2.0}}, 4.0);
    v.require(close(extra.precision, 0.5) && close(extra.recall, 1.0), "center (0.5, 1) case");

    BinaryMask seg(2, 2);
    seg.at(0, 0) = 1;
    SegLogits perfect(2, 2);
    for (int ix = 0; ix < 2; ++ix)
        for (int iy = 0; iy < 2; ++iy) {
            perfect.at(ix, iy)[0] = seg.at(ix, iy) ? -80.0f : 80.0f;
            perfect.at(ix, iy)[1] = seg.at(ix, iy) ? 80.0f : -80.0f;
        }
    const FlowGrid zero(2, 2);
    v.require(close(objective({perfect}, {seg}, {zero}, {zero}), 0.0), "zero-loss case");
    const SegLogits uniform(2, 2);
    v.require(close(objective({uniform}, {seg}, {zero}, {zero}, 0.95, 1.0, 0.0),
                    std::log(2.0)),
              "ln 2 cross-entropy case");
    FlowGrid off(2, 2);
    for (float& x : off.v) x = 0.5f;
    v.require(close(objective({perfect}, {seg}, {off}, {zero}, 0.95, 0.0, 1.0), 0.125),
              "smooth-L1 0.125 case");

    if (v.pass) v.detail = "all hand-computed values reproduced";
    return v;
}

// ---- shared helpers for the end-to-end suites ------------------------------

struct SuiteStats {
    double iou = 0.0, recall = 0.0;
    double dev_sum = 0.0;
    int dev_matched = 0;
    int runs = 0;

    void add(const MetricsReport& rep) {
        iou += rep.iou;
        recall += rep.recall;
        if (rep.matched > 0) {
            dev_sum += rep.deviation * rep.matched;
            dev_matched += rep.matched;
        }
        ++runs;
    }
    double mean_iou() const { return iou / runs; }
    double mean_recall() const { return recall / runs; }
    double deviation() const {
        return dev_matched ? dev_sum / dev_matched : std::numeric_limits<double>::quiet_NaN();
    }
};

SuiteStats run_suite(ScenarioConfig cfg, int seeds) {
    SuiteStats stats;
    for (int s = 0; s < seeds; ++s) {
        cfg.seed = 1 + static_cast<uint64_t>(s);
        stats.add(evaluate(run_scenario(cfg)));
    }
    return stats;
}

// ---- 8: geometry fidelity with oracle heights ------------------------------

Verdict check_geometry_fidelity() {
    Verdict v;
    ScenarioConfig cfg;
    cfg.collab_mode = CollabMode::Early;
    const SuiteStats stats = run_suite(cfg, 20);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "deviation %.3f m (limit 1.0), recall %.4f (floor 0.95)",
                  stats.deviation(), stats.mean_recall());
    v.require(stats.deviation() <= 1.0, buf);
    v.require(stats.mean_recall() >= 0.95, buf);
    if (v.pass) v.detail = buf;
    return v;
}

// ---- 9: height priors beat flat ground beat uniform depth ------------------

Verdict check_height_prior_ordering() {
    Verdict v;
    ScenarioConfig cfg;
    cfg.collab_mode = CollabMode::None;
    cfg.scene.height_min = 1.5;
    cfg.gbg.height_noise_sigma = 0.3;
    cfg.rig.altitude = 80.0;
    cfg.rig.spacing = 30.0;
    cfg.rig.image_width = 512;
    cfg.rig.image_height = 384;

    cfg.gbg.mode = GbgMode::GroundPrior;
    const double dev_prior = run_suite(cfg, 20).deviation();
    cfg.gbg.mode = GbgMode::FlatGround;
    const double dev_flat = run_suite(cfg, 20).deviation();
    cfg.gbg.mode = GbgMode::DepthBinUniform;
    const double dev_uniform = run_suite(cfg, 20).deviation();

    char buf[112];
    std::snprintf(buf, sizeof(buf),
                  "deviation prior %.3f <= 0.9 x flat %.3f <= uniform %.3f", dev_prior,
                  dev_flat, dev_uniform);
    v.require(dev_prior <= 0.9 * dev_flat, buf);
    v.require(0.9 * dev_flat <= dev_uniform, buf);
    if (v.pass) v.detail = buf;
    return v;
}

// ---- 10: collaboration ordering on occlusion-heavy scenes ------------------

ScenarioConfig occlusion_config() {
    ScenarioConfig cfg;
    cfg.scene.occluder_count = 20;
    cfg.scene.occluder_size = 10.0;
    cfg.scene.occluder_height_min = 6.0;
    cfg.scene.area_half_extent = 35.0;
    cfg.scene.turn_probability = 0.0;
    cfg.rig.altitude = 30.0;
    cfg.sisw.eq4_mode = InfoVolumeMode::AbsCentered;
    cfg.sisw.window = 5;
    return cfg;
}

Verdict check_collaboration_ordering() {
    Verdict v;
    ScenarioConfig cfg = occlusion_config();
    cfg.collab_mode = CollabMode::None;
    const double iou_none = run_suite(cfg, 20).mean_iou();
    cfg.collab_mode = CollabMode::Sisw;
    const double iou_sisw = run_suite(cfg, 20).mean_iou();
    cfg.collab_mode = CollabMode::Early;
    const double iou_early = run_suite(cfg, 20).mean_iou();

    char buf[112];
    std::snprintf(buf, sizeof(buf), "IoU early %.4f >= sisw %.4f >= none %.4f (gap %.4f)",
                  iou_early, iou_sisw, iou_none, iou_sisw - iou_none);
    v.require(iou_early >= iou_sisw, buf);
    v.require(iou_sisw >= iou_none, buf);
    v.require(iou_sisw - iou_none >= 0.10, buf);
    if (v.pass) v.detail = buf;
    return v;
}

// ---- 11: transmission-ratio plateau ----------------------------------------

Verdict check_ratio_plateau() {
    Verdict v;
    ScenarioConfig cfg;
    cfg.collab_mode = CollabMode::Sisw;
    cfg.sisw.ratio = 0.5;
    const double iou_half = run_suite(cfg, 20).mean_iou();
    cfg.sisw.ratio = 0.25;
    const double iou_quarter = run_suite(cfg, 20).mean_iou();
    cfg.sisw.ratio = 0.01;
    const double iou_trickle = run_suite(cfg, 20).mean_iou();

    char buf[112];
    std::snprintf(buf, sizeof(buf),
                  "IoU 0.50: %.4f, 0.25: %.4f, 0.01: %.4f (plateau %.4f, drop %.4f)",
                  iou_half, iou_quarter, iou_trickle, iou_half - iou_quarter,
                  iou_quarter - iou_trickle);
    v.require(iou_half - iou_quarter <= 0.02, buf);
    v.require(iou_quarter - iou_trickle >= 0.03, buf);
    if (v.pass) v.detail = buf;
    return v;
}

// ---- 12: byte-identical reruns through the command line --------------------

Verdict check_cli_determinism() {
    Verdict v;
    const fs::path dir = fs::temp_directory_path() / "skyfleet_acceptance_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "cfg.json", std::ios::binary);
        cfg << "{\"seed\": 1}\n";
    }
    auto invoke = [&](const std::string& out) {
        const std::string cmd = std::string(SKYFLEET_CLI_PATH) + " run --quiet --config " +
                                (dir / "cfg.json").string() + " --out " +
                                (dir / out).string() + " > /dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    v.require(invoke("r1") && invoke("r2"), "CLI run failed");
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    for (const char* name : {"report.json", "report.csv", "run.bin", "replay.bin"}) {
        const std::string a = slurp(dir / "r1" / name);
        v.require(!a.empty() && a == slurp(dir / "r2" / name),
                  std::string(name) + " differs between reruns");
    }
    fs::remove_all(dir);
    if (v.pass) v.detail = "both invocations byte-identical";
    return v;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double limit_s;
        std::function<Verdict()> fn;
    };
    const std::vector<Criterion> criteria{
        {"depth upper bound vs ray-plane oracle", 2.0, check_depth_oracle},
        {"height-to-depth closed forms agree", 1.0, check_height_depth_identity},
        {"depth sensitivity vs exact difference", 1.0, check_depth_sensitivity},
        {"info volume bit-exact vs naive oracle", 5.0, check_info_volume_exact},
        {"transmission ratio 0.25 exact on N=4", 30.0, check_budget_exactness},
        {"assignment optimal vs permutation oracle", 5.0, check_hungarian},
        {"metric hand cases", 1.0, check_metric_hand_cases},
        {"geometry fidelity, oracle heights", 120.0, check_geometry_fidelity},
        {"height-prior ordering", 300.0, check_height_prior_ordering},
        {"collaboration ordering under occlusion", 300.0, check_collaboration_ordering},
        {"transmission-ratio plateau", 600.0, check_ratio_plateau},
        {"byte-identical CLI reruns", 60.0, check_cli_determinism},
    };

    int failures = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].fn();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (elapsed > criteria[i].limit_s) {
            v.pass = false;
            v.detail += (v.detail.empty() ? "" : "; ") + std::string("time limit exceeded");
        }
        std::printf("[%s] %02zu %-44s %7.2fs (limit %4.0fs)  %s\n", v.pass ? "PASS" : "FAIL",
                    i + 1, criteria[i].name, elapsed, criteria[i].limit_s, v.detail.c_str());
        std::fflush(stdout);
        failures += !v.pass;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures ? 1 : 0;
}
