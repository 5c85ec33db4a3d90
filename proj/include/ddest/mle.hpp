// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "ddest/types.hpp"

namespace ddest {

/// Iterative maximum-likelihood estimator parameters.
struct MleConfig {
  int max_paths = 25;               ///< hard cap on extracted paths
  int max_gradient_iterations = 50; ///< Gauss-Newton linearizations per fit
  double step_tol = 1e-8;           ///< relative step size stop criterion
  double validity_snr_db = 8.0;     ///< path acceptance gate vs CRB variance
  double damping_init = 1e-3;       ///< initial Levenberg-Marquardt damping
  bool background_subtract = true;  ///< remove static background first

  void validate() const;
};

/// One estimated path with its acceptance verdict and the CRB-based
/// variance of its complex weight (trace of the weight block of the
/// inverse Fisher information).
struct EstimatedPath {
  PathParams params;
  double weight_variance = 0.0;
  bool accepted = false;
};

/// Optional per-run diagnostics from estimate().
struct EstimateTrace {
  std::vector<double> residual_energy;  ///< after each accepted path
  std::vector<double> noise_variance;   ///< estimate entering each round
  int candidates_rejected = 0;
};

/// Noise-free sum-of-paths reconstruction on the grid.
ChannelFrame model_response(std::span<const PathParams> paths,
                            const RadarGrid& grid);

/// Analytic Jacobian of the vectorized model (column-major, subcarrier
/// index fastest) with respect to the physical delay and Doppler of each
/// path, weights held fixed. Column 2p is d/d delay_p [1/s], column
/// 2p+1 is d/d doppler_p [1/Hz]; both include the path weight.
Eigen::MatrixXcd gauss_newton_jacobian(std::span<const PathParams> paths,
                                       const RadarGrid& grid);

/// Least-squares complex weights for fixed (delay, Doppler) pairs:
/// minimizes ||frame - model|| over the weights via the normal equations
/// of the path basis. Throws NumericalError naming the offending path
/// pair when two paths (nearly) coincide.
Eigen::VectorXcd solve_weights(std::span<const PathParams> paths,
                               const ChannelFrame& frame);

/// Noise variance estimate from a residual frame: median bin power of the
/// unwindowed, unpadded periodogram divided by ln(2) * K * L. The median
/// makes the estimate robust against a few remaining path peaks.
double estimate_noise_variance(const ChannelFrame& residual);

/// Strongest single-path candidate in a residual frame: argmax of the
/// 2x-padded unwindowed periodogram, quadratically refined, with the
/// least-squares weight of that atom. Empty when the residual is
/// identically zero.
std::optional<PathParams> initial_candidate(const ChannelFrame& residual);

/// Joint damped Gauss-Newton refinement of all path delays and Dopplers
/// with weights re-solved by least squares around every step (variable
/// projection). Steps are taken in bin-normalized coordinates; a step is
/// accepted only if it lowers the residual energy, so the returned fit is
/// never worse than the input. Returned parameters are wrapped into the
/// grid's unambiguous ranges.
std::vector<PathParams> gauss_newton_refine(std::span<const PathParams> paths,
                                            const ChannelFrame& frame,
                                            const MleConfig& config);

/// Per-path weight variance from the Cramer-Rao bound: the trace of the
/// 2x2 complex-weight block of the inverse Fisher information of the full
/// joint model (all weights, delays, Dopplers free), at the given noise
/// variance sigma^2 (total per complex sample). Throws NumericalError when
/// the Fisher information is singular.
Eigen::VectorXd crb_weight_variance(std::span<const PathParams> paths,
                                    const RadarGrid& grid,
                                    double noise_variance);

/// Full iterative estimator: alternately extracts the strongest residual
/// candidate, refines all paths jointly, and accepts the candidate only
/// if its weight SNR against the CRB variance clears validity_snr_db.
/// Stops on the first rejected candidate, on an exhausted residual, or at
/// max_paths. The returned list holds all accepted paths (accepted =
/// true) followed, if the run ended on a rejection, by the rejected
/// candidate (accepted = false).
std::vector<EstimatedPath> estimate(const ChannelFrame& frame,
                                    const MleConfig& config,
                                    EstimateTrace* trace = nullptr);

}  // namespace ddest
