#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skyfleet/harness.hpp"

namespace skyfleet {

// Structured-text (JSON) report document; carries the tool version and the
// config hash so every number is traceable to its inputs.
std::string report_to_json(const MetricsReport& report, uint64_t config_hash);

// Flat CSV row for cross-run comparison; `label` names the run (mode, seed).
std::string report_csv_header();
std::string report_csv_row(const MetricsReport& report, uint64_t config_hash,
                           const std::string& label);

// Versioned binary container for a finished run: config, fused grids, info
// maps, predictions, ledger, replay packets. The scene is regenerated from
// the embedded config on load.
void save_run(const ScenarioRun& run, const std::string& path);
ScenarioRun load_run(const std::string& path);

// Replay file: u32 packet count, then u32 length + wire bytes per packet.
void save_replay(const std::vector<std::vector<uint8_t>>& packets, const std::string& path);
std::vector<std::vector<uint8_t>> load_replay(const std::string& path);

// Binary P5 graymap; nx columns, ny rows, row 0 = y index 0.
void write_pgm(const std::string& path, int nx, int ny, const std::vector<uint8_t>& pixels,
               const std::string& comment);

// Pixel mappings for the dump command. BEV channels normalize by the channel
// max (all-zero stays black); scalar grids clamp to [0, 1]; masks map to 255.
std::vector<uint8_t> bev_channel_to_pixels(const BevGrid& bev, int channel);
std::vector<uint8_t> scalar_to_pixels(const ScalarGrid& grid);
std::vector<uint8_t> mask_to_pixels(const BinaryMask& mask);

// Raw BEV dump: provenance header, then dims + cell size, then the feature
// tensor as little-endian f32 in x-then-y-then-c order.
void write_bev_binary(const BevGrid& bev, uint64_t config_hash, const std::string& path);
BevGrid read_bev_binary(const std::string& path);

}  // namespace skyfleet
