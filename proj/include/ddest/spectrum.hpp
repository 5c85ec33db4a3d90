// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#pragma once

#include <Eigen/Dense>
#include <utility>

#include "ddest/types.hpp"

namespace ddest {

/// Delay-Doppler power spectrum of one frame.
///
/// power(i, j) is the squared magnitude at delay bin i and Doppler bin j.
/// The delay axis spans [0, max_delay) over K*pad_delay bins; the Doppler
/// axis is stored in FFT order: columns [0, n/2) are nonnegative Doppler,
/// columns [n/2, n) wrap to negative Doppler. Both axes are circular.
struct DelayDopplerSpectrum {
  RadarGrid grid;        ///< native grid the spectrum was computed from
  int pad_delay = 1;     ///< zero-padding factor along delay
  int pad_doppler = 1;   ///< zero-padding factor along Doppler
  Eigen::MatrixXd power; ///< (K*pad_delay) x (L*pad_doppler), non-negative

  int delay_bins() const { return static_cast<int>(power.rows()); }
  int doppler_bins() const { return static_cast<int>(power.cols()); }

  /// Bin width along delay [s] (native resolution / pad_delay).
  double delay_step() const {
    return grid.delay_resolution() / pad_delay;
  }
  /// Bin width along Doppler [Hz].
  double doppler_step() const {
    return grid.doppler_resolution() / pad_doppler;
  }

  /// Delay of (possibly fractional) bin i, wrapped into [0, max_delay).
  double delay_of_bin(double i) const {
    double n = delay_bins();
    if (i < 0.0) i += n;
    if (i >= n) i -= n;
    return i * delay_step();
  }

  /// Signed Doppler of (possibly fractional) bin j, wrapped into
  /// [-max_doppler, +max_doppler).
  double doppler_of_bin(double j) const {
    double n = doppler_bins();
    if (j < 0.0) j += n;
    if (j >= n) j -= n;
    if (2.0 * j >= n) j -= n;
    return j * doppler_step();
  }

  /// Nearest integer bin pair for given physical parameters (wrapped).
  std::pair<int, int> bin_of(double delay_s, double doppler_hz) const;

  /// Throws ValidationError on inconsistent shape, pads < 1, or negative
  /// power entries.
  void validate() const;
};

/// Removes the per-subcarrier temporal mean: out(k, l) = in(k, l) -
/// mean_l in(k, :). Kills every zero-Doppler (static) component exactly
/// and is idempotent. Components at exact nonzero integer Doppler bins
/// pass through unchanged.
ChannelFrame background_subtract(const ChannelFrame& frame);

/// Hamming window of length n: w[m] = 0.54 - 0.46 cos(2 pi m / (n - 1)),
/// endpoints 0.08. Requires n >= 2.
Eigen::VectorXd hamming_vector(int n);

/// Applies the separable 2-D Hamming taper w_K w_L^T elementwise.
ChannelFrame hamming_window(const ChannelFrame& frame);

/// 2-D periodogram of a frame:
///   P(i, j) = | sum_{k,l} H(k, l) exp(+i 2 pi k i / (K pad_delay))
///                          exp(-i 2 pi l j / (L pad_doppler)) |^2
/// i.e. an inverse DFT along delay and a forward DFT along Doppler, both
/// unscaled, zero-padded by the given factors. Computed with FFTs; cost
/// O(KL log KL) rather than the literal O((KL)^2) double sum.
DelayDopplerSpectrum periodogram(const ChannelFrame& frame, int pad_delay = 1,
                                 int pad_doppler = 1);

}  // namespace ddest
