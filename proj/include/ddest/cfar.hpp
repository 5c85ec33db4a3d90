// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#pragma once

#include <cstdint>
#include <vector>

#include "ddest/spectrum.hpp"

namespace ddest {

/// Ordered-statistic CFAR parameters.
///
/// For each cell under test, reference cells are the m_ref x n_ref window
/// centered on it (toroidal wrap on both axes) minus the central
/// (2 guard_delay + 1) x (2 guard_doppler + 1) guard block, which also
/// excludes the cell itself. The threshold is alpha_os times the rank-th
/// smallest reference power.
struct CfarConfig {
  int ref_window_delay = 15;    ///< m_ref, odd
  int ref_window_doppler = 7;   ///< n_ref, odd
  int guard_delay = 1;
  int guard_doppler = 1;
  int rank = 79;                ///< r, 1-based into the sorted reference list
  double alpha_os = 11.39;

  /// Reference cell count N = m_ref * n_ref - guard block.
  int num_reference_cells() const {
    return ref_window_delay * ref_window_doppler -
           (2 * guard_delay + 1) * (2 * guard_doppler + 1);
  }

  /// Closed-form per-cell false-alarm probability on i.i.d. exponential
  /// noise: prod_{i=0}^{r-1} (N - i) / (N - i + alpha_os).
  double false_alarm_probability() const;

  /// Throws ValidationError unless windows are odd and fit inside the
  /// spectrum, guards leave at least `rank` reference cells, and
  /// alpha_os > 0.
  void validate(int delay_bins, int doppler_bins) const;
};

/// One CFAR detection after local-maximum gating.
struct Detection {
  int delay_bin = 0;
  int doppler_bin = 0;
  double delay_s = 0.0;     ///< refined delay (bin center until refined)
  double doppler_hz = 0.0;  ///< refined signed Doppler
  double power = 0.0;       ///< spectrum power at the detected cell
  double threshold = 0.0;   ///< alpha_os * rank-th reference power
  bool refine_degenerate = false;  ///< curvature test failed; offset forced 0
};

/// Reference powers of cell (i, j) in deterministic order (Doppler offset
/// outer, delay offset inner, guard block skipped). Size is
/// num_reference_cells().
std::vector<double> os_reference_cells(const DelayDopplerSpectrum& spectrum,
                                       int i, int j, const CfarConfig& config);

/// Detection threshold alpha_os * X_(rank) for cell (i, j).
double os_threshold(const DelayDopplerSpectrum& spectrum, int i, int j,
                    const CfarConfig& config);

/// Number of cells whose power strictly exceeds their OS threshold,
/// before local-maximum gating. This is the quantity the closed-form
/// false-alarm probability predicts on pure noise.
std::int64_t os_exceedance_count(const DelayDopplerSpectrum& spectrum,
                                 const CfarConfig& config);

/// Full OS-CFAR detector: threshold test followed by a strict 3x3
/// toroidal local-maximum gate (plateau ties go to the lexicographically
/// smallest (delay_bin, doppler_bin)). Detections are unrefined
/// (delay_s/doppler_hz at bin centers) and sorted by descending power,
/// ties broken lexicographically by bin.
std::vector<Detection> os_cfar_detect(const DelayDopplerSpectrum& spectrum,
                                      const CfarConfig& config);

/// Quadratic (three-point) sub-bin peak interpolation, applied per axis:
///   d = 0.5 (S_minus - S_plus) / (S_minus - 2 S_0 + S_plus),
/// clamped to [-0.5, +0.5], neighbors taken toroidally. An axis whose
/// curvature denominator is >= 0 (not a concave peak) keeps offset 0 and
/// sets refine_degenerate.
Detection refine_quadratic(const DelayDopplerSpectrum& spectrum,
                           const Detection& detection);

/// End-to-end detector options.
struct CfarPipelineOptions {
  bool background_subtract = true;
  int pad_delay = 1;
  int pad_doppler = 1;
};

/// Frame in, refined detections out: optional background subtraction,
/// Hamming window, periodogram, OS-CFAR, quadratic refinement.
std::vector<Detection> cfar_pipeline(const ChannelFrame& frame,
                                     const CfarConfig& config,
                                     const CfarPipelineOptions& options = {});

}  // namespace ddest
