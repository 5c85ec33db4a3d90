// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#include "ddest/cfar.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ddest {

double CfarConfig::false_alarm_probability() const {
  const int n = num_reference_cells();
  double p = 1.0;
  for (int i = 0; i < rank; ++i)
    p *= (n - i) / (n - i + alpha_os);
  return p;
}

void CfarConfig::validate(int delay_bins, int doppler_bins) const {
  if (ref_window_delay < 3 || ref_window_delay % 2 == 0 ||
      ref_window_doppler < 3 || ref_window_doppler % 2 == 0)
    throw ValidationError("cfar: reference windows must be odd and >= 3");
  if (guard_delay < 0 || guard_doppler < 0)
    throw ValidationError("cfar: guard widths must be >= 0");
  if (2 * guard_delay + 1 >= ref_window_delay ||
      2 * guard_doppler + 1 >= ref_window_doppler)
    throw ValidationError("cfar: guard block must be strictly inside the reference window");
  if (ref_window_delay > delay_bins || ref_window_doppler > doppler_bins)
    throw ValidationError("cfar: reference window " +
                          std::to_string(ref_window_delay) + " x " +
                          std::to_string(ref_window_doppler) +
                          " exceeds the spectrum (" +
                          std::to_string(delay_bins) + " x " +
                          std::to_string(doppler_bins) + ")");
  const int n = num_reference_cells();
  if (rank < 1 || rank > n)
    throw ValidationError("cfar: rank " + std::to_string(rank) +
                          " outside [1, " + std::to_string(n) + "]");
  if (!(alpha_os > 0.0) || !std::isfinite(alpha_os))
    throw ValidationError("cfar: alpha_os must be finite and positive");
}

namespace {

inline int wrap_index(int v, int n) {
  v %= n;
  return v < 0 ? v + n : v;
}

// Shared threshold-test scan. Counts cells whose power strictly exceeds
// their OS threshold and, when `flagged` is non-null, records their bins.
// The rank condition "X_(r) < cut/alpha" is evaluated by counting
// reference cells below cut/alpha, which avoids any per-cell partial sort
// on the (overwhelmingly common) non-detection cells. Interior cells scan
// contiguous column segments; only cells whose window wraps the delay
// edge take the index-wrapping path.
std::int64_t scan_exceedances(const DelayDopplerSpectrum& spectrum,
                              const CfarConfig& config,
                              std::vector<std::pair<int, int>>* flagged) {
  const Eigen::MatrixXd& p = spectrum.power;
  const int nd = spectrum.delay_bins();
  const int na = spectrum.doppler_bins();
  const int hm = config.ref_window_delay / 2;
  const int hn = config.ref_window_doppler / 2;
  const int gd = config.guard_delay;
  const int gn = config.guard_doppler;
  const int rank = config.rank;
  const double inv_alpha = 1.0 / config.alpha_os;
  const int wcols = config.ref_window_doppler;
  const int glen = 2 * gd + 1;

  std::int64_t total = 0;
  std::vector<const double*> colptr(wcols);
  std::vector<int> rowidx(config.ref_window_delay);

  for (int j = 0; j < na; ++j) {
    for (int w = 0; w < wcols; ++w)
      colptr[w] = p.col(wrap_index(j - hn + w, na)).data();

    for (int i = 0; i < nd; ++i) {
      const double cut = p(i, j);
      if (cut <= 0.0) continue;  // threshold is >= 0; cannot be exceeded
      const double c = cut * inv_alpha;
      int count = 0;
      if (i >= hm && i + hm < nd) {
        const int base = i - hm;
        for (int w = 0; w < wcols; ++w) {
          const double* col = colptr[w] + base;
          for (int t = 0; t < config.ref_window_delay; ++t)
            count += col[t] < c;
        }
        const int gbase = i - gd;
        for (int w = hn - gn; w <= hn + gn; ++w) {
          const double* col = colptr[w] + gbase;
          for (int t = 0; t < glen; ++t) count -= col[t] < c;
        }
      } else {
        for (int t = 0; t < config.ref_window_delay; ++t)
          rowidx[t] = wrap_index(i - hm + t, nd);
        for (int w = 0; w < wcols; ++w) {
          const bool guard_col = std::abs(w - hn) <= gn;
          const double* col = colptr[w];
          for (int t = 0; t < config.ref_window_delay; ++t) {
            if (guard_col && std::abs(t - hm) <= gd) continue;
            count += col[rowidx[t]] < c;
          }
        }
      }
      if (count >= rank) {
        ++total;
        if (flagged) flagged->emplace_back(i, j);
      }
    }
  }
  return total;
}

// Strict toroidal 3x3 local maximum with lexicographic plateau rule: a
// cell survives only if every neighbor is strictly smaller, or equal but
// lexicographically larger by (delay_bin, doppler_bin).
bool is_local_max(const Eigen::MatrixXd& p, int i, int j) {
  const int nd = static_cast<int>(p.rows());
  const int na = static_cast<int>(p.cols());
  const double v = p(i, j);
  for (int dj = -1; dj <= 1; ++dj)
    for (int di = -1; di <= 1; ++di) {
      if (di == 0 && dj == 0) continue;
      const int ii = wrap_index(i + di, nd);
      const int jj = wrap_index(j + dj, na);
      const double nb = p(ii, jj);
      if (nb > v) return false;
      if (nb == v && std::pair(ii, jj) < std::pair(i, j)) return false;
    }
  return true;
}

}  // namespace

std::vector<double> os_reference_cells(const DelayDopplerSpectrum& spectrum,
                                       int i, int j,
                                       const CfarConfig& config) {
  spectrum.validate();
  config.validate(spectrum.delay_bins(), spectrum.doppler_bins());
  const int nd = spectrum.delay_bins();
  const int na = spectrum.doppler_bins();
  if (i < 0 || i >= nd || j < 0 || j >= na)
    throw ValidationError("cfar: cell index outside the spectrum");
  const int hm = config.ref_window_delay / 2;
  const int hn = config.ref_window_doppler / 2;
  std::vector<double> cells;
  cells.reserve(config.num_reference_cells());
  for (int dj = -hn; dj <= hn; ++dj)
    for (int di = -hm; di <= hm; ++di) {
      if (std::abs(di) <= config.guard_delay &&
          std::abs(dj) <= config.guard_doppler)
        continue;
      cells.push_back(spectrum.power(wrap_index(i + di, nd),
                                     wrap_index(j + dj, na)));
    }
  return cells;
}

double os_threshold(const DelayDopplerSpectrum& spectrum, int i, int j,
                    const CfarConfig& config) {
  std::vector<double> cells = os_reference_cells(spectrum, i, j, config);
  auto nth = cells.begin() + (config.rank - 1);
  std::nth_element(cells.begin(), nth, cells.end());
  return config.alpha_os * *nth;
}

std::int64_t os_exceedance_count(const DelayDopplerSpectrum& spectrum,
                                 const CfarConfig& config) {
  spectrum.validate();
  config.validate(spectrum.delay_bins(), spectrum.doppler_bins());
  return scan_exceedances(spectrum, config, nullptr);
}

std::vector<Detection> os_cfar_detect(const DelayDopplerSpectrum& spectrum,
                                      const CfarConfig& config) {
  spectrum.validate();
  config.validate(spectrum.delay_bins(), spectrum.doppler_bins());

  std::vector<std::pair<int, int>> flagged;
  scan_exceedances(spectrum, config, &flagged);

  std::vector<Detection> detections;
  for (auto [i, j] : flagged) {
    if (!is_local_max(spectrum.power, i, j)) continue;
    const double threshold = os_threshold(spectrum, i, j, config);
    const double power = spectrum.power(i, j);
    if (!(power > threshold)) continue;  // exact recheck of the count test
    Detection d;
    d.delay_bin = i;
    d.doppler_bin = j;
    d.delay_s = spectrum.delay_of_bin(i);
    d.doppler_hz = spectrum.doppler_of_bin(j);
    d.power = power;
    d.threshold = threshold;
    detections.push_back(d);
  }
  std::sort(detections.begin(), detections.end(),
            [](const Detection& a, const Detection& b) {
              if (a.power != b.power) return a.power > b.power;
              return std::pair(a.delay_bin, a.doppler_bin) <
                     std::pair(b.delay_bin, b.doppler_bin);
            });
  return detections;
}

Detection refine_quadratic(const DelayDopplerSpectrum& spectrum,
                           const Detection& detection) {
  spectrum.validate();
  const int nd = spectrum.delay_bins();
  const int na = spectrum.doppler_bins();
  const int i = detection.delay_bin;
  const int j = detection.doppler_bin;
  if (i < 0 || i >= nd || j < 0 || j >= na)
    throw ValidationError("refine: detection bin outside the spectrum");

  Detection out = detection;
  out.refine_degenerate = false;

  auto axis_offset = [&](double s_minus, double s_0, double s_plus) {
    const double denom = s_minus - 2.0 * s_0 + s_plus;
    if (!(denom < 0.0)) {  // not a concave peak (flat or saddle)
      out.refine_degenerate = true;
      return 0.0;
    }
    return std::clamp(0.5 * (s_minus - s_plus) / denom, -0.5, 0.5);
  };

  const Eigen::MatrixXd& p = spectrum.power;
  const double dd = axis_offset(p(wrap_index(i - 1, nd), j), p(i, j),
                                p(wrap_index(i + 1, nd), j));
  const double da = axis_offset(p(i, wrap_index(j - 1, na)), p(i, j),
                                p(i, wrap_index(j + 1, na)));
  out.delay_s = spectrum.delay_of_bin(i + dd);
  out.doppler_hz = spectrum.doppler_of_bin(j + da);
  return out;
}

std::vector<Detection> cfar_pipeline(const ChannelFrame& frame,
                                     const CfarConfig& config,
                                     const CfarPipelineOptions& options) {
  frame.validate();
  ChannelFrame work =
      options.background_subtract ? background_subtract(frame) : frame;
  DelayDopplerSpectrum spec = periodogram(hamming_window(work),
                                          options.pad_delay,
                                          options.pad_doppler);
  std::vector<Detection> detections = os_cfar_detect(spec, config);
  for (Detection& d : detections) d = refine_quadratic(spec, d);
  return detections;
}

}  // namespace ddest
