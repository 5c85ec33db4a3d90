// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#include "ddest/signal_model.hpp"

#include <cmath>
#include <string>

namespace ddest {

namespace {

constexpr double kDegenerateDistance = 1e-9;  // m

void check_vec(const Eigen::Vector3d& v, const char* name) {
  if (!v.allFinite())
    throw ValidationError(std::string("scene: ") + name + " is not finite");
}

}  // namespace

void Scene::validate() const {
  check_vec(tx_pos, "tx_pos");
  check_vec(rx_pos, "rx_pos");
  check_vec(center, "center");
  for (int i = 0; i < 2; ++i) {
    if (!(std::isfinite(sphere_radius[i]) && sphere_radius[i] > 0.0))
      throw ValidationError("scene: sphere " + std::to_string(i + 1) +
                            " radius must be finite and positive");
    if (!std::isfinite(sphere_phase[i]))
      throw ValidationError("scene: sphere " + std::to_string(i + 1) +
                            " phase is not finite");
  }
  if (sphere_radius[0] == sphere_radius[1])
    throw ValidationError("scene: sphere mount radii must be distinct");
  if (!std::isfinite(rotation_rate))
    throw ValidationError("scene: rotation rate is not finite");
  if (!(std::isfinite(wavelength) && wavelength > 0.0))
    throw ValidationError("scene: wavelength must be finite and positive");
  if (std::isnan(los_gain_db) || los_gain_db == INFINITY)
    throw ValidationError("scene: los_gain_db must be finite or -inf");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
    throw ValidationError("scene: noise_std must be finite and >= 0");
}

double bistatic_angle_deg(const Scene& scene) {
  Eigen::Vector3d to_tx = scene.tx_pos - scene.center;
  Eigen::Vector3d to_rx = scene.rx_pos - scene.center;
  double ntx = to_tx.norm();
  double nrx = to_rx.norm();
  if (ntx < kDegenerateDistance || nrx < kDegenerateDistance)
    throw ValidationError("scene: TX or RX coincides with the turntable center");
  double c = to_tx.dot(to_rx) / (ntx * nrx);
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c) * 180.0 / kPi;
}

std::array<Eigen::Vector3d, 2> sphere_positions(const Scene& scene, double t) {
  std::array<Eigen::Vector3d, 2> out;
  for (int i = 0; i < 2; ++i) {
    double a = scene.rotation_rate * t + scene.sphere_phase[i];
    out[i] = scene.center + scene.sphere_radius[i] *
                                Eigen::Vector3d(std::cos(a), std::sin(a), 0.0);
  }
  return out;
}

FrameTruth ground_truth(const Scene& scene, double t) {
  scene.validate();
  auto pos = sphere_positions(scene, t);
  FrameTruth truth;
  for (int i = 0; i < 2; ++i) {
    double a = scene.rotation_rate * t + scene.sphere_phase[i];
    Eigen::Vector3d vel = scene.sphere_radius[i] * scene.rotation_rate *
                          Eigen::Vector3d(-std::sin(a), std::cos(a), 0.0);
    Eigen::Vector3d from_tx = pos[i] - scene.tx_pos;
    Eigen::Vector3d from_rx = pos[i] - scene.rx_pos;
    double d_tx = from_tx.norm();
    double d_rx = from_rx.norm();
    if (d_tx < kDegenerateDistance || d_rx < kDegenerateDistance)
      throw ValidationError("scene: sphere " + std::to_string(i + 1) +
                            " coincides with TX or RX (degenerate geometry)");
    truth[i].delay_s = (d_tx + d_rx) / kSpeedOfLight;
    double range_rate = from_tx.dot(vel) / d_tx + from_rx.dot(vel) / d_rx;
    truth[i].doppler_hz = -range_rate / scene.wavelength;
  }
  return truth;
}

double frame_mid_time(const RadarGrid& grid, int frame_index) {
  grid.validate();
  if (frame_index < 0)
    throw ValidationError("frame index must be >= 0");
  return (frame_index + 0.5) * grid.frame_duration();
}

std::vector<PathParams> scene_paths(const Scene& scene, double t,
                                    const RadarGrid& grid,
                                    std::uint64_t phase_seed) {
  scene.validate();
  grid.validate();
  std::vector<PathParams> paths;
  paths.reserve(scene.clutter.size() + 3);

  if (scene.los_gain_db != -INFINITY) {
    PathParams los;
    los.weight = Complex(std::pow(10.0, scene.los_gain_db / 20.0), 0.0);
    los.delay_s = (scene.tx_pos - scene.rx_pos).norm() / kSpeedOfLight;
    los.doppler_hz = 0.0;
    los.validate_for(grid);
    paths.push_back(los);
  }
  for (const PathParams& p : scene.clutter) {
    p.validate_for(grid);
    paths.push_back(p);
  }

  FrameTruth truth = ground_truth(scene, t);
  SplitMix64 rng(phase_seed);
  for (int i = 0; i < 2; ++i) {
    PathParams p;
    double phi = 2.0 * kPi * rng.next_double();
    p.weight = std::polar(1.0, phi);
    p.delay_s = truth[i].delay_s;
    p.doppler_hz = truth[i].doppler_hz;
    if (!p.in_range(grid))
      throw ValidationError(
          "scene: sphere " + std::to_string(i + 1) + " path (delay " +
          format_double(p.delay_s) + " s, doppler " +
          format_double(p.doppler_hz) +
          " Hz) falls outside the grid's unambiguous range");
    paths.push_back(p);
  }
  return paths;
}

ChannelFrame synthesize_frame(std::span<const PathParams> paths,
                              const RadarGrid& grid, double noise_std,
                              std::uint64_t noise_seed) {
  grid.validate();
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std))
    throw ValidationError("noise_std must be finite and >= 0");
  for (const PathParams& p : paths) p.validate_for(grid);

  const int K = grid.subcarriers;
  const int L = grid.symbols;
  ChannelFrame frame;
  frame.grid = grid;
  frame.data = Eigen::MatrixXcd::Zero(K, L);

  // Rank-1 accumulation per path: H += w * a(delay) * b(doppler)^T with
  // a_k = exp(-i 2 pi k delay delta_f), b_l = exp(+i 2 pi l doppler delta_t).
  // Phasors are generated by std::polar per sample rather than by repeated
  // multiplication so that long grids do not accumulate rounding drift.
  Eigen::VectorXcd a(K), b(L);
  for (const PathParams& p : paths) {
    double dphi_k = -2.0 * kPi * p.delay_s * grid.subcarrier_spacing;
    for (int k = 0; k < K; ++k) a(k) = std::polar(1.0, dphi_k * k);
    double dphi_l = 2.0 * kPi * p.doppler_hz * grid.symbol_interval;
    for (int l = 0; l < L; ++l) b(l) = std::polar(1.0, dphi_l * l);
    frame.data.noalias() += p.weight * (a * b.transpose());
  }

  if (noise_std > 0.0) {
    const double scale = noise_std / std::sqrt(2.0);
    SplitMix64 rng(noise_seed);
    for (int l = 0; l < L; ++l)
      for (int k = 0; k < K; ++k) {
        auto [g1, g2] = rng.next_gaussian_pair();
        frame.data(k, l) += Complex(scale * g1, scale * g2);
      }
  }
  return frame;
}

SceneFrame synthesize_scene_frame(const Scene& scene, const RadarGrid& grid,
                                  int frame_index, std::uint64_t root_seed) {
  double t = frame_mid_time(grid, frame_index);
  std::uint64_t idx = static_cast<std::uint64_t>(frame_index);
  SceneFrame out;
  out.truth = ground_truth(scene, t);
  out.paths = scene_paths(scene, t, grid, substream_seed(root_seed, idx, 0));
  out.frame = synthesize_frame(out.paths, grid, scene.noise_std,
                               substream_seed(root_seed, idx, 1));
  return out;
}

double noise_std_for_snr_db(double snr_db, double weight_magnitude) {
  if (!std::isfinite(snr_db))
    throw ValidationError("snr_db must be finite");
  if (!(weight_magnitude > 0.0))
    throw ValidationError("weight magnitude must be positive");
  return weight_magnitude / std::pow(10.0, snr_db / 20.0);
}

}  // namespace ddest
