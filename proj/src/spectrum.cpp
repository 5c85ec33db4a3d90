// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#include "ddest/spectrum.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>

namespace ddest {

std::pair<int, int> DelayDopplerSpectrum::bin_of(double delay_s,
                                                 double doppler_hz) const {
  if (!(std::isfinite(delay_s) && std::isfinite(doppler_hz)))
    throw ValidationError("bin_of: parameters must be finite");
  int nd = delay_bins();
  int na = doppler_bins();
  long long i = std::llround(delay_s / delay_step());
  long long j = std::llround(doppler_hz / doppler_step());
  i %= nd;
  if (i < 0) i += nd;
  j %= na;
  if (j < 0) j += na;
  return {static_cast<int>(i), static_cast<int>(j)};
}

void DelayDopplerSpectrum::validate() const {
  grid.validate();
  if (pad_delay < 1 || pad_doppler < 1)
    throw ValidationError("spectrum: padding factors must be >= 1");
  if (power.rows() != static_cast<Eigen::Index>(grid.subcarriers) * pad_delay ||
      power.cols() != static_cast<Eigen::Index>(grid.symbols) * pad_doppler)
    throw ValidationError("spectrum: power shape disagrees with grid and padding");
  if (!power.allFinite() || (power.array() < 0.0).any())
    throw ValidationError("spectrum: power must be finite and non-negative");
}

ChannelFrame background_subtract(const ChannelFrame& frame) {
  frame.validate();
  ChannelFrame out;
  out.grid = frame.grid;
  out.data = frame.data;
  Eigen::VectorXcd row_mean = frame.data.rowwise().mean();
  out.data.colwise() -= row_mean;
  return out;
}

Eigen::VectorXd hamming_vector(int n) {
  if (n < 2) throw ValidationError("hamming: window length must be >= 2");
  Eigen::VectorXd w(n);
  for (int m = 0; m < n; ++m)
    w(m) = 0.54 - 0.46 * std::cos(2.0 * kPi * m / (n - 1));
  return w;
}

ChannelFrame hamming_window(const ChannelFrame& frame) {
  frame.validate();
  ChannelFrame out;
  out.grid = frame.grid;
  Eigen::VectorXd wk = hamming_vector(frame.grid.subcarriers);
  Eigen::VectorXd wl = hamming_vector(frame.grid.symbols);
  out.data = frame.data.cwiseProduct(
      (wk * wl.transpose()).cast<Complex>());
  return out;
}

DelayDopplerSpectrum periodogram(const ChannelFrame& frame, int pad_delay,
                                 int pad_doppler) {
  frame.validate();
  if (pad_delay < 1 || pad_doppler < 1)
    throw ValidationError("periodogram: padding factors must be >= 1");

  const int K = frame.grid.subcarriers;
  const int L = frame.grid.symbols;
  const Eigen::Index nd = static_cast<Eigen::Index>(K) * pad_delay;
  const Eigen::Index na = static_cast<Eigen::Index>(L) * pad_doppler;

  Eigen::FFT<double> fft;

  // Delay axis: unscaled inverse DFT of each zero-padded column, computed
  // as conj(forward(conj(x))) since Eigen's inv() divides by the length.
  Eigen::MatrixXcd stage(nd, L);
  {
    Eigen::VectorXcd in = Eigen::VectorXcd::Zero(nd);
    Eigen::VectorXcd out(nd);
    for (int l = 0; l < L; ++l) {
      in.head(K) = frame.data.col(l).conjugate();
      fft.fwd(out, in);
      stage.col(l) = out.conjugate();
    }
  }

  // Doppler axis: forward DFT of each zero-padded row.
  DelayDopplerSpectrum spec;
  spec.grid = frame.grid;
  spec.pad_delay = pad_delay;
  spec.pad_doppler = pad_doppler;
  spec.power.resize(nd, na);
  {
    Eigen::VectorXcd in = Eigen::VectorXcd::Zero(na);
    Eigen::VectorXcd out(na);
    for (Eigen::Index i = 0; i < nd; ++i) {
      in.head(L) = stage.row(i).transpose();
      fft.fwd(out, in);
      spec.power.row(i) = out.cwiseAbs2().transpose();
    }
  }
  return spec;
}

}  // namespace ddest
