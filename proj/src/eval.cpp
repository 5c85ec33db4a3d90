// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#include "ddest/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace ddest {

FrameResult assign_targets(std::span<const PathParams> estimates,
                           const FrameTruth& truth,
                           const MatchBoundary& boundary,
                           const RadarGrid& grid) {
  grid.validate();
  boundary.validate();
  const double dres = grid.delay_resolution();
  const double ares = grid.doppler_resolution();
  const double box = boundary.fraction;

  struct Candidate {
    double dist;
    int sphere;
    int estimate;
  };
  std::vector<Candidate> candidates;
  for (int s = 0; s < 2; ++s)
    for (std::size_t e = 0; e < estimates.size(); ++e) {
      const double ed = (estimates[e].delay_s - truth[s].delay_s) / dres;
      const double ea = (estimates[e].doppler_hz - truth[s].doppler_hz) / ares;
      if (std::abs(ed) <= box && std::abs(ea) <= box)
        candidates.push_back({std::hypot(ed, ea), s, static_cast<int>(e)});
    }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.dist != b.dist) return a.dist < b.dist;
              if (a.sphere != b.sphere) return a.sphere < b.sphere;
              return a.estimate < b.estimate;
            });

  FrameResult result;
  std::vector<bool> estimate_used(estimates.size(), false);
  std::array<bool, 2> sphere_used{false, false};
  for (const Candidate& c : candidates) {
    if (sphere_used[c.sphere] || estimate_used[c.estimate]) continue;
    sphere_used[c.sphere] = true;
    estimate_used[c.estimate] = true;
    SphereOutcome& o = result.spheres[c.sphere];
    o.matched = true;
    o.estimate = estimates[c.estimate];
    o.delay_error_s = estimates[c.estimate].delay_s - truth[c.sphere].delay_s;
    o.doppler_error_hz =
        estimates[c.estimate].doppler_hz - truth[c.sphere].doppler_hz;
  }
  result.false_detections = static_cast<int>(
      std::count(estimate_used.begin(), estimate_used.end(), false));
  return result;
}

double detection_probability(std::span<const FrameResult> results) {
  if (results.empty())
    throw ValidationError("eval: detection probability over an empty frame set");
  int matched = 0;
  for (const FrameResult& r : results)
    matched += (r.spheres[0].matched ? 1 : 0) + (r.spheres[1].matched ? 1 : 0);
  return static_cast<double>(matched) / (2.0 * results.size());
}

std::pair<double, double> rmse(std::span<const FrameResult> results) {
  double sd = 0.0, sa = 0.0;
  int n = 0;
  for (const FrameResult& r : results)
    for (const SphereOutcome& o : r.spheres)
      if (o.matched) {
        sd += o.delay_error_s * o.delay_error_s;
        sa += o.doppler_error_hz * o.doppler_error_hz;
        ++n;
      }
  if (n == 0)
    throw NumericalError("eval: RMSE undefined, no matched targets");
  return {std::sqrt(sd / n), std::sqrt(sa / n)};
}

double los_profile_db(double angle_deg, double peak_db, double width_deg) {
  if (!(width_deg > 0.0) || !std::isfinite(width_deg) ||
      !std::isfinite(peak_db) || !std::isfinite(angle_deg))
    throw ValidationError("eval: LOS profile arguments must be finite, width > 0");
  const double d = std::min(std::abs(angle_deg), std::abs(180.0 - angle_deg));
  if (d >= width_deg) return -INFINITY;
  return peak_db * 0.5 * (1.0 + std::cos(kPi * d / width_deg));
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kCfar: return "cfar";
    case Algorithm::kMle: return "mle";
  }
  throw ValidationError("eval: unknown algorithm value");
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "cfar") return Algorithm::kCfar;
  if (name == "mle") return Algorithm::kMle;
  throw ValidationError("eval: unknown algorithm '" + name +
                        "' (valid: cfar, mle)");
}

void SweepConfig::validate() const {
  scene.validate();
  grid.validate();
  mle.validate();
  boundary.validate();
  if (angles_deg.empty())
    throw ValidationError("sweep: need at least one angle");
  for (double a : angles_deg)
    if (!(a >= 0.0 && a <= 180.0))
      throw ValidationError("sweep: angles must lie in [0, 180] degrees");
  if (algorithms.empty())
    throw ValidationError("sweep: need at least one algorithm");
  if (frames_per_angle < 1)
    throw ValidationError("sweep: frames_per_angle must be >= 1");
  if (!(los_width_deg > 0.0) || !std::isfinite(los_width_deg) ||
      !std::isfinite(los_peak_db))
    throw ValidationError("sweep: LOS profile must be finite, width > 0");
  if (jobs < 1)
    throw ValidationError("sweep: jobs must be >= 1");
}

Scene scene_at_angle(const SweepConfig& config, double angle_deg) {
  Scene scene = config.scene;
  const Eigen::Vector3d to_tx = scene.tx_pos - scene.center;
  const double r_tx = std::hypot(to_tx.x(), to_tx.y());
  if (!(r_tx > 0.0))
    throw ValidationError("sweep: TX sits on the turntable axis");
  const double az_tx = std::atan2(to_tx.y(), to_tx.x());
  const Eigen::Vector3d to_rx = scene.rx_pos - scene.center;
  const double r_rx = std::hypot(to_rx.x(), to_rx.y());
  if (!(r_rx > 0.0))
    throw ValidationError("sweep: RX sits on the turntable axis");
  const double az = az_tx + angle_deg * kPi / 180.0;
  scene.rx_pos = scene.center + Eigen::Vector3d(r_rx * std::cos(az),
                                                r_rx * std::sin(az),
                                                to_rx.z());
  if (config.use_los_profile)
    scene.los_gain_db =
        los_profile_db(angle_deg, config.los_peak_db, config.los_width_deg);
  return scene;
}

namespace {

std::vector<PathParams> run_estimator(Algorithm algorithm,
                                      const ChannelFrame& frame,
                                      const SweepConfig& config) {
  std::vector<PathParams> estimates;
  if (algorithm == Algorithm::kCfar) {
    std::vector<Detection> dets =
        cfar_pipeline(frame, config.cfar, config.pipeline);
    std::vector<PathParams> bare(dets.size());
    for (std::size_t d = 0; d < dets.size(); ++d) {
      bare[d].delay_s = dets[d].delay_s;
      bare[d].doppler_hz = dets[d].doppler_hz;
    }
    Eigen::VectorXcd w;
    if (!bare.empty()) {
      ChannelFrame work = config.pipeline.background_subtract
                              ? background_subtract(frame)
                              : frame;
      try {
        w = solve_weights(bare, work);
      } catch (const NumericalError&) {
        w = Eigen::VectorXcd::Zero(bare.size());
      }
    }
    for (std::size_t d = 0; d < bare.size(); ++d) {
      bare[d].weight = w.size() ? w(d) : Complex(0, 0);
      estimates.push_back(bare[d]);
    }
  } else {
    MleConfig mle = config.mle;
    mle.background_subtract = config.pipeline.background_subtract;
    for (const EstimatedPath& p : estimate(frame, mle))
      if (p.accepted) estimates.push_back(p.params);
  }
  return estimates;
}

}  // namespace

SweepReport run_sweep(const SweepConfig& config) {
  config.validate();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  SweepReport report;

  for (std::size_t ai = 0; ai < config.angles_deg.size(); ++ai) {
    const double angle = config.angles_deg[ai];
    const Scene scene = scene_at_angle(config, angle);

    // One shared frame set per angle: synthesized once per frame index
    // from (seed, angle index, frame index) streams, identical for every
    // algorithm evaluated on it.
    std::vector<SceneFrame> frames(config.frames_per_angle);
    parallel_for_indexed(
        static_cast<std::size_t>(config.frames_per_angle), config.jobs,
        [&](std::size_t f) {
          const std::uint64_t frame_key =
              (static_cast<std::uint64_t>(ai) << 32) |
              static_cast<std::uint64_t>(f);
          frames[f] = synthesize_scene_frame(scene, config.grid,
                                             static_cast<int>(f),
                                             substream_seed(config.seed,
                                                            frame_key, 2));
        });

    for (Algorithm algorithm : config.algorithms) {
      SweepRow row;
      row.angle_deg = angle;
      row.algorithm = algorithm;
      row.los_gain_db = scene.los_gain_db;
      row.frames = config.frames_per_angle;
      row.frame_results.resize(config.frames_per_angle);

      parallel_for_indexed(
          static_cast<std::size_t>(config.frames_per_angle), config.jobs,
          [&](std::size_t f) {
            FrameResult fr;
            fr.frame_index = static_cast<int>(f);
            fr.runtime_s = nan;
            try {
              auto t0 = std::chrono::steady_clock::now();
              std::vector<PathParams> estimates =
                  run_estimator(algorithm, frames[f].frame, config);
              auto t1 = std::chrono::steady_clock::now();
              FrameResult assigned = assign_targets(
                  estimates, frames[f].truth, config.boundary, config.grid);
              fr.spheres = assigned.spheres;
              fr.false_detections = assigned.false_detections;
              if (config.measure_runtime)
                fr.runtime_s =
                    std::chrono::duration<double>(t1 - t0).count();
            } catch (const std::exception&) {
              fr.estimator_failed = true;
            }
            row.frame_results[f] = fr;
          });

      for (const FrameResult& fr : row.frame_results) {
        row.matches += (fr.spheres[0].matched ? 1 : 0) +
                       (fr.spheres[1].matched ? 1 : 0);
        row.false_detections += fr.false_detections;
      }
      row.detection_probability = detection_probability(row.frame_results);
      if (row.matches > 0) {
        auto [dr, ar] = rmse(row.frame_results);
        row.delay_rmse_s = dr;
        row.doppler_rmse_hz = ar;
      } else {
        row.delay_rmse_s = nan;
        row.doppler_rmse_hz = nan;
      }
      if (config.measure_runtime) {
        double sum = 0.0;
        for (const FrameResult& fr : row.frame_results)
          sum += std::isnan(fr.runtime_s) ? 0.0 : fr.runtime_s;
        row.mean_runtime_s = sum / config.frames_per_angle;
      } else {
        row.mean_runtime_s = nan;
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace ddest
