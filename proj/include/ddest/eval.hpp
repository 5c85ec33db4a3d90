// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ddest/cfar.hpp"
#include "ddest/mle.hpp"
#include "ddest/signal_model.hpp"

namespace ddest {

/// Match acceptance region around each true target, as a fraction of the
/// native resolution cell per axis: an estimate may match a sphere only
/// if |delay error| <= fraction * delay_resolution and |Doppler error| <=
/// fraction * doppler_resolution.
struct MatchBoundary {
  double fraction = 0.5;

  void validate() const {
    if (!(fraction > 0.0) || !std::isfinite(fraction))
      throw ValidationError("eval: boundary fraction must be finite and positive");
  }
};

/// Outcome of matching one sphere in one frame.
struct SphereOutcome {
  bool matched = false;
  double delay_error_s = 0.0;    ///< estimate - truth, valid when matched
  double doppler_error_hz = 0.0; ///< estimate - truth, valid when matched
  PathParams estimate;           ///< the matched estimate, valid when matched
};

/// Per-frame evaluation record.
struct FrameResult {
  int frame_index = 0;
  std::array<SphereOutcome, 2> spheres;
  int false_detections = 0;  ///< estimates matched to neither sphere
  double runtime_s = 0.0;    ///< estimator wall time; NaN when not measured
  bool estimator_failed = false;
};

/// Greedy nearest-first assignment of estimates to the two true spheres.
///
/// Candidate (estimate, sphere) pairs are those inside the boundary box;
/// they are consumed in order of ascending resolution-normalized
/// Euclidean distance (ties: lower sphere index, then lower estimate
/// index), each estimate and sphere used at most once. Unmatched
/// estimates count as false detections.
FrameResult assign_targets(std::span<const PathParams> estimates,
                           const FrameTruth& truth,
                           const MatchBoundary& boundary,
                           const RadarGrid& grid);

/// Fraction of sphere slots matched over a set of frames (2 per frame).
/// Throws ValidationError on an empty set.
double detection_probability(std::span<const FrameResult> results);

/// Root-mean-square delay and Doppler errors over all matched spheres.
/// Throws NumericalError when there are no matches (undefined metric).
std::pair<double, double> rmse(std::span<const FrameResult> results);

/// Raised-cosine line-of-sight gain profile over bistatic angle: peak_db
/// at 0 and 180 degrees, falling to -inf (path absent) beyond width_deg
/// of either endpoint:
///   g(d) = peak_db * 0.5 * (1 + cos(pi * d / width_deg)),  d < width_deg
/// where d is the angular distance to the nearer of 0 / 180 degrees.
double los_profile_db(double angle_deg, double peak_db, double width_deg);

enum class Algorithm { kCfar, kMle };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);

/// Sweep specification: evaluate the configured algorithms over a set of
/// bistatic angles, frames_per_angle Monte Carlo frames each.
struct SweepConfig {
  Scene scene;            ///< template; rx_pos/los_gain_db set per angle
  RadarGrid grid;
  std::vector<double> angles_deg{0, 20, 45, 90, 135, 160, 180};
  std::vector<Algorithm> algorithms{Algorithm::kCfar, Algorithm::kMle};
  int frames_per_angle = 50;
  CfarConfig cfar;
  MleConfig mle;
  CfarPipelineOptions pipeline;
  MatchBoundary boundary;
  double los_peak_db = 40.0;
  double los_width_deg = 30.0;
  bool use_los_profile = true;  ///< otherwise keep scene.los_gain_db as is
  std::uint64_t seed = 1;
  int jobs = 1;
  bool measure_runtime = false;  ///< leave runtimes NaN when false

  void validate() const;
};

/// Aggregated results for one (angle, algorithm) cell of a sweep.
struct SweepRow {
  double angle_deg = 0.0;
  Algorithm algorithm = Algorithm::kCfar;
  double los_gain_db = 0.0;
  int frames = 0;
  int matches = 0;             ///< matched sphere slots (max 2 * frames)
  int false_detections = 0;
  double detection_probability = 0.0;
  double delay_rmse_s = 0.0;   ///< NaN when no matches
  double doppler_rmse_hz = 0.0;
  double mean_runtime_s = 0.0; ///< NaN unless measure_runtime
  std::vector<FrameResult> frame_results;
};

struct SweepReport {
  std::vector<SweepRow> rows;
};

/// Runs the full sweep. Frames are synthesized from per-(angle, frame)
/// seed streams, so results are independent of `jobs` and of which
/// algorithms are enabled; a frame-level estimator failure is recorded as
/// zero matches for that frame and the sweep continues.
SweepReport run_sweep(const SweepConfig& config);

/// Scene with the receiver rotated to the given bistatic angle around the
/// turntable center (in the plane of the template receiver) and, when
/// use_los_profile is set, the LOS gain taken from los_profile_db.
Scene scene_at_angle(const SweepConfig& config, double angle_deg);

}  // namespace ddest
