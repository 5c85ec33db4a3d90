// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

#include "ddest/common.hpp"

namespace ddest {

/// Sampling geometry of one channel measurement: K subcarriers spaced
/// delta_f apart observed over L symbols spaced delta_t apart.
///
/// The grid fixes both the delay-Doppler resolution cell and the
/// unambiguous ranges: delay lives in [0, 1/delta_f), Doppler in
/// [-1/(2*delta_t), +1/(2*delta_t)).
struct RadarGrid {
  int subcarriers = 0;           ///< K
  int symbols = 0;               ///< L
  double subcarrier_spacing = 0; ///< delta_f [Hz]
  double symbol_interval = 0;    ///< delta_t [s]

  /// Delay resolution 1/(K*delta_f) [s].
  double delay_resolution() const {
    return 1.0 / (subcarriers * subcarrier_spacing);
  }
  /// Doppler resolution 1/(L*delta_t) [Hz].
  double doppler_resolution() const {
    return 1.0 / (symbols * symbol_interval);
  }
  /// Upper edge of the unambiguous delay range, 1/delta_f [s].
  double max_delay() const { return 1.0 / subcarrier_spacing; }
  /// Half-width of the unambiguous Doppler range, 1/(2*delta_t) [Hz].
  double max_doppler() const { return 0.5 / symbol_interval; }
  /// Total cell count K*L.
  std::int64_t size() const {
    return static_cast<std::int64_t>(subcarriers) * symbols;
  }
  /// Time span of one frame, L*delta_t [s].
  double frame_duration() const { return symbols * symbol_interval; }

  /// Throws ValidationError unless K >= 2, L >= 2 and both spacings are
  /// finite and positive.
  void validate() const;

  bool operator==(const RadarGrid&) const = default;
};

/// One propagation path: complex weight, absolute delay, Doppler shift.
struct PathParams {
  Complex weight{0.0, 0.0};
  double delay_s = 0.0;
  double doppler_hz = 0.0;

  /// True when delay and Doppler both lie inside the grid's unambiguous
  /// ranges: 0 <= delay < 1/delta_f, |doppler| < 1/(2*delta_t).
  bool in_range(const RadarGrid& grid) const {
    return delay_s >= 0.0 && delay_s < grid.max_delay() &&
           doppler_hz >= -grid.max_doppler() && doppler_hz < grid.max_doppler();
  }

  /// Throws ValidationError on a non-finite weight or an out-of-range
  /// delay/Doppler for this grid.
  void validate_for(const RadarGrid& grid) const;
};

/// One measured (or synthesized) channel frame: the K x L matrix of
/// complex subcarrier-by-symbol samples together with its grid.
/// data(k, l) is subcarrier k of symbol l.
struct ChannelFrame {
  RadarGrid grid;
  Eigen::MatrixXcd data;

  /// Throws ValidationError if the matrix shape disagrees with the grid
  /// or any entry is non-finite.
  void validate() const;
};

inline void RadarGrid::validate() const {
  if (subcarriers < 2 || symbols < 2)
    throw ValidationError("grid: need at least 2 subcarriers and 2 symbols, got " +
                          std::to_string(subcarriers) + " x " +
                          std::to_string(symbols));
  if (!(std::isfinite(subcarrier_spacing) && subcarrier_spacing > 0.0))
    throw ValidationError("grid: subcarrier spacing must be finite and positive");
  if (!(std::isfinite(symbol_interval) && symbol_interval > 0.0))
    throw ValidationError("grid: symbol interval must be finite and positive");
}

inline void PathParams::validate_for(const RadarGrid& grid) const {
  grid.validate();
  if (!(std::isfinite(weight.real()) && std::isfinite(weight.imag())))
    throw ValidationError("path: weight is not finite");
  if (!(std::isfinite(delay_s) && std::isfinite(doppler_hz)))
    throw ValidationError("path: delay/doppler is not finite");
  if (delay_s < 0.0 || delay_s >= grid.max_delay())
    throw ValidationError("path: delay " + format_double(delay_s) +
                          " s outside unambiguous range [0, " +
                          format_double(grid.max_delay()) + ") s");
  if (doppler_hz < -grid.max_doppler() || doppler_hz >= grid.max_doppler())
    throw ValidationError("path: doppler " + format_double(doppler_hz) +
                          " Hz outside unambiguous range [" +
                          format_double(-grid.max_doppler()) + ", " +
                          format_double(grid.max_doppler()) + ") Hz");
}

inline void ChannelFrame::validate() const {
  grid.validate();
  if (data.rows() != grid.subcarriers || data.cols() != grid.symbols)
    throw ValidationError("frame: data is " + std::to_string(data.rows()) +
                          " x " + std::to_string(data.cols()) +
                          " but grid is " + std::to_string(grid.subcarriers) +
                          " x " + std::to_string(grid.symbols));
  if (!data.allFinite())
    throw ValidationError("frame: data contains non-finite samples");
}

}  // namespace ddest
