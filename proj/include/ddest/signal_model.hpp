// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ddest/types.hpp"

namespace ddest {

/// Bistatic turntable scene: TX and RX illuminate two metallic spheres
/// mounted at fixed radii on a turntable rotating at a constant rate,
/// plus an optional line-of-sight path and static clutter.
///
/// Sphere i orbits the turntable center in the xy-plane:
///   p_i(t) = center + radius_i * (cos(omega*t + phase_i),
///                                 sin(omega*t + phase_i), 0).
struct Scene {
  Eigen::Vector3d tx_pos{2.5, 0.0, 0.0};
  Eigen::Vector3d rx_pos{2.349231551964771, 0.8550503583141718, 0.0};
  Eigen::Vector3d center{0.0, 0.0, 0.0};
  std::array<double, 2> sphere_radius{0.5, 0.35};       ///< [m]
  std::array<double, 2> sphere_phase{0.0, kPi};         ///< [rad]
  double rotation_rate = 30.0;                          ///< omega [rad/s]
  double wavelength = 0.055517121851851846;             ///< carrier [m]
  double los_gain_db = 0.0;   ///< LOS amplitude gain; -inf disables the path
  std::vector<PathParams> clutter;  ///< static paths added verbatim
  double noise_std = 0.1;     ///< per-sample complex noise std sigma

  /// Throws ValidationError on non-finite geometry, nonpositive radii,
  /// nonpositive wavelength, or negative noise std.
  void validate() const;
};

/// Per-sphere ground truth at one instant.
struct SphereTruth {
  double delay_s = 0.0;
  double doppler_hz = 0.0;
};

/// Ground truth for both spheres of a frame.
using FrameTruth = std::array<SphereTruth, 2>;

/// A synthesized frame bundled with the truth it was generated from.
struct SceneFrame {
  ChannelFrame frame;
  FrameTruth truth;
  std::vector<PathParams> paths;  ///< exact paths fed to the synthesizer
};

/// Angle at the turntable center between the directions to TX and RX,
/// in degrees. 0 = monostatic-like, 180 = forward scattering.
double bistatic_angle_deg(const Scene& scene);

/// Sphere centers at time t.
std::array<Eigen::Vector3d, 2> sphere_positions(const Scene& scene, double t);

/// Exact bistatic delay and Doppler of both spheres at time t.
///
/// delay = (|tx - p| + |p - rx|) / c. Doppler is the exact derivative
/// -d(range sum)/dt / wavelength evaluated by the chain rule, not a
/// finite difference. Throws ValidationError when a sphere coincides
/// with TX or RX (degenerate geometry).
FrameTruth ground_truth(const Scene& scene, double t);

/// Mid-frame reference time of frame `frame_index` when frames are
/// recorded back to back: (frame_index + 0.5) * L * delta_t.
double frame_mid_time(const RadarGrid& grid, int frame_index);

/// Expands a scene into the discrete path list for time t: LOS first
/// (omitted when los_gain_db is -inf), then clutter, then the two sphere
/// paths with independent uniform phases drawn from phase_seed.
/// Every path is range-checked against the grid; a sphere landing outside
/// the unambiguous region names the offending sphere in the error.
std::vector<PathParams> scene_paths(const Scene& scene, double t,
                                    const RadarGrid& grid,
                                    std::uint64_t phase_seed);

/// Synthesizes one frame of the sum-of-paths channel:
///   H(k, l) = sum_p w_p exp(-i 2 pi k delay_p delta_f)
///                 * exp(+i 2 pi l doppler_p delta_t) + N(k, l)
/// with N i.i.d. circularly symmetric complex Gaussian, variance
/// noise_std^2 (noise_std^2 / 2 per real component), drawn from noise_seed.
/// Paths are validated against the grid.
ChannelFrame synthesize_frame(std::span<const PathParams> paths,
                              const RadarGrid& grid, double noise_std,
                              std::uint64_t noise_seed);

/// Convenience wrapper: scene -> paths -> frame for one frame index.
/// Phase and noise streams are derived from (root_seed, frame_index) so
/// any frame can be regenerated in isolation.
SceneFrame synthesize_scene_frame(const Scene& scene, const RadarGrid& grid,
                                  int frame_index, std::uint64_t root_seed);

/// Noise std that puts a unit-weight path at the given per-sample SNR:
/// snr = |w|^2 / sigma^2.
double noise_std_for_snr_db(double snr_db, double weight_magnitude = 1.0);

}  // namespace ddest
