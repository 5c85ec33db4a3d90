// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ddest/eval.hpp"
#include "ddest/types.hpp"

namespace ddest {

/// A set of frames sharing one grid, as stored in a CTF1 file.
struct FrameSet {
  RadarGrid grid;
  std::vector<ChannelFrame> frames;
};

/// Writes frames in the CTF1 container:
///   offset 0:  "CTF1" magic (4 bytes)
///   offset 4:  u32 K, u32 L (little endian)
///   offset 12: f64 delta_f [Hz], f64 delta_t [s]
///   offset 28: u32 frame_count
///   offset 32: frames back to back, each K*L complex samples as f32
///              (re, im) pairs, subcarrier index fastest (k-major order:
///              sample (k, l) at pair index l*K + k).
/// All frames must share the grid. Throws IoError on write failure.
void write_ctf1(const std::filesystem::path& path, const RadarGrid& grid,
                std::span<const ChannelFrame> frames);

/// Reads a CTF1 file back (f32 samples widened to double). Malformed or
/// truncated input raises IoError naming the byte offset of the problem.
FrameSet read_ctf1(const std::filesystem::path& path);

/// One line per estimate CSV record.
struct EstimateRecord {
  int frame = 0;
  double delay_s = 0.0;
  double doppler_hz = 0.0;
  double weight_re = 0.0;
  double weight_im = 0.0;
  double runtime_s = 0.0;  ///< NaN when not measured
};

/// One line per ground-truth CSV record.
struct TruthRecord {
  int frame = 0;
  int sphere = 0;  ///< 1 or 2
  double delay_s = 0.0;
  double doppler_hz = 0.0;
};

/// Writes a CSV with `# key = value` comment headers (the canonical
/// configuration echo plus a config_hash line), then a column-name row,
/// then the records. Doubles are written in round-trip precision.
void write_estimates_csv(const std::filesystem::path& path,
                         std::span<const std::string> header_lines,
                         std::span<const EstimateRecord> records);

void write_truth_csv(const std::filesystem::path& path,
                     std::span<const std::string> header_lines,
                     std::span<const TruthRecord> records);

/// Sweep summary table: one row per (angle, algorithm).
void write_sweep_csv(const std::filesystem::path& path,
                     std::span<const std::string> header_lines,
                     const SweepReport& report);

/// Per-frame sweep detail: one row per (angle, algorithm, frame, sphere).
void write_sweep_detail_csv(const std::filesystem::path& path,
                            std::span<const std::string> header_lines,
                            const SweepReport& report);

/// Reads back an estimates CSV (comment lines skipped, header row
/// required). Throws IoError naming the offending line number.
std::vector<EstimateRecord> read_estimates_csv(
    const std::filesystem::path& path);

std::vector<TruthRecord> read_truth_csv(const std::filesystem::path& path);

}  // namespace ddest
