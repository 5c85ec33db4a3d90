// SPDX-License-Identifier: Apache-2.0
//
// ddest - delay-Doppler parameter estimation toolkit

#include "ddest/mle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddest/cfar.hpp"
#include "ddest/spectrum.hpp"

namespace ddest {

void MleConfig::validate() const {
  if (max_paths < 1)
    throw ValidationError("mle: max_paths must be >= 1");
  if (max_gradient_iterations < 1)
    throw ValidationError("mle: max_gradient_iterations must be >= 1");
  if (!(step_tol > 0.0) || !std::isfinite(step_tol))
    throw ValidationError("mle: step_tol must be finite and positive");
  if (!std::isfinite(validity_snr_db))
    throw ValidationError("mle: validity_snr_db must be finite");
  if (!(damping_init > 0.0) || !std::isfinite(damping_init))
    throw ValidationError("mle: damping_init must be finite and positive");
}

namespace {

constexpr double kDuplicateCorrelation = 1.0 - 1e-6;
constexpr double kResidualFloor = 1e-24;  // relative energy: fit is exact
constexpr double kDampingMax = 1e12;

// Steering vectors for a path set, with derivative columns scaled either
// per bin (normalized optimization coordinates) or per physical unit.
struct Atoms {
  Eigen::MatrixXcd a;   // K x P
  Eigen::MatrixXcd da;  // K x P
  Eigen::MatrixXcd b;   // L x P
  Eigen::MatrixXcd db;  // L x P
};

enum class DerivScale { kPerBin, kPhysical };

Atoms build_atoms(std::span<const double> delays,
                  std::span<const double> dopplers, const RadarGrid& grid,
                  DerivScale scale) {
  const int K = grid.subcarriers;
  const int L = grid.symbols;
  const int P = static_cast<int>(delays.size());
  Atoms at;
  at.a.resize(K, P);
  at.da.resize(K, P);
  at.b.resize(L, P);
  at.db.resize(L, P);
  const double ka = scale == DerivScale::kPerBin
                        ? 2.0 * kPi / K
                        : 2.0 * kPi * grid.subcarrier_spacing;
  const double la = scale == DerivScale::kPerBin
                        ? 2.0 * kPi / L
                        : 2.0 * kPi * grid.symbol_interval;
  for (int p = 0; p < P; ++p) {
    const double dpk = -2.0 * kPi * delays[p] * grid.subcarrier_spacing;
    for (int k = 0; k < K; ++k) {
      Complex v = std::polar(1.0, dpk * k);
      at.a(k, p) = v;
      at.da(k, p) = Complex(0.0, -ka * k) * v;
    }
    const double dpl = 2.0 * kPi * dopplers[p] * grid.symbol_interval;
    for (int l = 0; l < L; ++l) {
      Complex v = std::polar(1.0, dpl * l);
      at.b(l, p) = v;
      at.db(l, p) = Complex(0.0, la * l) * v;
    }
  }
  return at;
}

Atoms build_atoms(std::span<const PathParams> paths, const RadarGrid& grid,
                  DerivScale scale) {
  std::vector<double> taus(paths.size()), alphas(paths.size());
  for (std::size_t p = 0; p < paths.size(); ++p) {
    taus[p] = paths[p].delay_s;
    alphas[p] = paths[p].doppler_hz;
  }
  return build_atoms(taus, alphas, grid, scale);
}

// Least-squares weights of the atom basis against frame data H (K x L).
// Gram and right-hand side use the separable structure: the basis column
// for path p is kron(b_p, a_p), so inner products factor into K-space and
// L-space parts and the full K*L x P basis is never materialized.
Eigen::VectorXcd solve_weights_atoms(const Atoms& at,
                                     const Eigen::MatrixXcd& h) {
  const int P = static_cast<int>(at.a.cols());
  if (P == 0) return Eigen::VectorXcd();
  Eigen::MatrixXcd gram =
      (at.a.adjoint() * at.a).cwiseProduct(at.b.adjoint() * at.b);
  const double diag_scale = gram.diagonal().real().maxCoeff();

  for (int p = 0; p < P; ++p)
    for (int q = p + 1; q < P; ++q) {
      double corr = std::abs(gram(p, q)) /
                    std::sqrt(gram(p, p).real() * gram(q, q).real());
      if (corr > kDuplicateCorrelation)
        throw NumericalError(
            "weights: basis is ill-conditioned, paths " + std::to_string(p) +
            " and " + std::to_string(q) + " nearly coincide (correlation " +
            format_double(corr) + ")");
    }

  Eigen::VectorXcd rhs(P);
  for (int p = 0; p < P; ++p)
    rhs(p) = at.a.col(p).adjoint() * h * at.b.col(p).conjugate();

  gram.diagonal().array() += 1e-12 * diag_scale;
  Eigen::VectorXcd w = gram.ldlt().solve(rhs);
  if (!w.allFinite())
    throw NumericalError("weights: normal equations produced non-finite solution");
  return w;
}

void wrap_into_range(PathParams& p, const RadarGrid& grid) {
  const double dmax = grid.max_delay();
  p.delay_s = std::fmod(p.delay_s, dmax);
  if (p.delay_s < 0.0) p.delay_s += dmax;
  const double span = 2.0 * grid.max_doppler();
  p.doppler_hz = std::fmod(p.doppler_hz + grid.max_doppler(), span);
  if (p.doppler_hz < 0.0) p.doppler_hz += span;
  p.doppler_hz -= grid.max_doppler();
}

// State shared by one Gauss-Newton fit: normalized parameter vector
// theta = (tau_p / delay_res, alpha_p / doppler_res) interleaved.
struct FitEval {
  Atoms atoms;
  Eigen::VectorXcd weights;
  Eigen::MatrixXcd residual;  // K x L
  double cost = 0.0;
};

FitEval evaluate_fit(const Eigen::VectorXd& theta, const RadarGrid& grid,
                     const Eigen::MatrixXcd& h) {
  const int P = static_cast<int>(theta.size()) / 2;
  std::vector<double> taus(P), alphas(P);
  for (int p = 0; p < P; ++p) {
    taus[p] = theta(2 * p) * grid.delay_resolution();
    alphas[p] = theta(2 * p + 1) * grid.doppler_resolution();
  }
  FitEval ev;
  ev.atoms = build_atoms(taus, alphas, grid, DerivScale::kPerBin);
  ev.weights = solve_weights_atoms(ev.atoms, h);
  ev.residual =
      h - ev.atoms.a * ev.weights.asDiagonal() * ev.atoms.b.transpose();
  ev.cost = ev.residual.squaredNorm();
  if (!std::isfinite(ev.cost))
    throw NumericalError("gauss-newton: non-finite cost");
  return ev;
}

}  // namespace

ChannelFrame model_response(std::span<const PathParams> paths,
                            const RadarGrid& grid) {
  grid.validate();
  for (const PathParams& p : paths) p.validate_for(grid);
  Atoms at = build_atoms(paths, grid, DerivScale::kPerBin);
  Eigen::VectorXcd w(paths.size());
  for (std::size_t p = 0; p < paths.size(); ++p) w(p) = paths[p].weight;
  ChannelFrame out;
  out.grid = grid;
  if (paths.empty())
    out.data = Eigen::MatrixXcd::Zero(grid.subcarriers, grid.symbols);
  else
    out.data = at.a * w.asDiagonal() * at.b.transpose();
  return out;
}

Eigen::MatrixXcd gauss_newton_jacobian(std::span<const PathParams> paths,
                                       const RadarGrid& grid) {
  grid.validate();
  for (const PathParams& p : paths) p.validate_for(grid);
  const int K = grid.subcarriers;
  const int L = grid.symbols;
  const int P = static_cast<int>(paths.size());
  Atoms at = build_atoms(paths, grid, DerivScale::kPhysical);
  Eigen::MatrixXcd jac(static_cast<Eigen::Index>(K) * L, 2 * P);
  for (int p = 0; p < P; ++p) {
    Eigen::MatrixXcd dtau =
        paths[p].weight * (at.da.col(p) * at.b.col(p).transpose());
    Eigen::MatrixXcd dalpha =
        paths[p].weight * (at.a.col(p) * at.db.col(p).transpose());
    jac.col(2 * p) = dtau.reshaped();
    jac.col(2 * p + 1) = dalpha.reshaped();
  }
  return jac;
}

Eigen::VectorXcd solve_weights(std::span<const PathParams> paths,
                               const ChannelFrame& frame) {
  frame.validate();
  for (const PathParams& p : paths) {
    if (!(std::isfinite(p.delay_s) && std::isfinite(p.doppler_hz)))
      throw ValidationError("weights: path parameters must be finite");
  }
  Atoms at = build_atoms(paths, frame.grid, DerivScale::kPerBin);
  return solve_weights_atoms(at, frame.data);
}

double estimate_noise_variance(const ChannelFrame& residual) {
  residual.validate();
  DelayDopplerSpectrum spec = periodogram(residual, 1, 1);
  std::vector<double> powers(spec.power.data(),
                             spec.power.data() + spec.power.size());
  auto mid = powers.begin() + (powers.size() - 1) / 2;
  std::nth_element(powers.begin(), mid, powers.end());
  const double kl = static_cast<double>(residual.grid.size());
  return *mid / (std::log(2.0) * kl);
}

std::optional<PathParams> initial_candidate(const ChannelFrame& residual) {
  residual.validate();
  if (residual.data.squaredNorm() == 0.0) return std::nullopt;
  DelayDopplerSpectrum spec = periodogram(residual, 2, 2);
  Eigen::Index bi, bj;
  spec.power.maxCoeff(&bi, &bj);
  Detection det;
  det.delay_bin = static_cast<int>(bi);
  det.doppler_bin = static_cast<int>(bj);
  det.power = spec.power(bi, bj);
  det = refine_quadratic(spec, det);
  PathParams cand;
  cand.delay_s = det.delay_s;
  cand.doppler_hz = det.doppler_hz;
  Atoms at = build_atoms(std::span<const PathParams>(&cand, 1), residual.grid,
                         DerivScale::kPerBin);
  Complex proj = at.a.col(0).adjoint() * residual.data * at.b.col(0).conjugate();
  cand.weight = proj / static_cast<double>(residual.grid.size());
  return cand;
}

std::vector<PathParams> gauss_newton_refine(std::span<const PathParams> paths,
                                            const ChannelFrame& frame,
                                            const MleConfig& config) {
  frame.validate();
  config.validate();
  if (paths.empty())
    throw ValidationError("gauss-newton: need at least one path");
  const RadarGrid& grid = frame.grid;
  const int P = static_cast<int>(paths.size());

  Eigen::VectorXd theta(2 * P);
  for (int p = 0; p < P; ++p) {
    theta(2 * p) = paths[p].delay_s / grid.delay_resolution();
    theta(2 * p + 1) = paths[p].doppler_hz / grid.doppler_resolution();
  }

  FitEval ev = evaluate_fit(theta, grid, frame.data);
  double damping = config.damping_init;

  for (int iter = 0; iter < config.max_gradient_iterations; ++iter) {
    // Normal equations of the damped step from the separable structure.
    const Atoms& at = ev.atoms;
    Eigen::MatrixXcd caa = at.a.adjoint() * at.a;
    Eigen::MatrixXcd cad = at.a.adjoint() * at.da;
    Eigen::MatrixXcd cdd = at.da.adjoint() * at.da;
    Eigen::MatrixXcd dbb = at.b.adjoint() * at.b;
    Eigen::MatrixXcd dbd = at.b.adjoint() * at.db;
    Eigen::MatrixXcd ddd = at.db.adjoint() * at.db;

    Eigen::MatrixXd jtj(2 * P, 2 * P);
    for (int p = 0; p < P; ++p)
      for (int q = 0; q < P; ++q) {
        const Complex cg = std::conj(ev.weights(p)) * ev.weights(q);
        jtj(2 * p, 2 * q) = (cg * cdd(p, q) * dbb(p, q)).real();
        jtj(2 * p, 2 * q + 1) =
            (cg * std::conj(cad(q, p)) * dbd(p, q)).real();
        jtj(2 * p + 1, 2 * q) =
            (cg * cad(p, q) * std::conj(dbd(q, p))).real();
        jtj(2 * p + 1, 2 * q + 1) = (cg * caa(p, q) * ddd(p, q)).real();
      }

    Eigen::VectorXd g(2 * P);
    for (int p = 0; p < P; ++p) {
      const Complex wc = std::conj(ev.weights(p));
      g(2 * p) = (wc * (at.da.col(p).adjoint() * ev.residual *
                        at.b.col(p).conjugate())(0))
                     .real();
      g(2 * p + 1) = (wc * (at.a.col(p).adjoint() * ev.residual *
                            at.db.col(p).conjugate())(0))
                         .real();
    }

    const double diag_max = jtj.diagonal().maxCoeff();
    if (!(diag_max > 0.0) || !std::isfinite(diag_max)) break;

    bool accepted = false;
    Eigen::VectorXd step;
    while (damping <= kDampingMax) {
      Eigen::MatrixXd sys = jtj;
      sys.diagonal() += damping * jtj.diagonal().cwiseMax(1e-14 * diag_max);
      step = sys.ldlt().solve(g);
      if (step.allFinite()) {
        try {
          FitEval trial = evaluate_fit(theta + step, grid, frame.data);
          if (trial.cost < ev.cost) {
            theta += step;
            ev = std::move(trial);
            damping = std::max(damping / 2.0, 1e-15);
            accepted = true;
            break;
          }
        } catch (const NumericalError&) {
          // step walked into a degenerate basis: treat as rejected
        }
      }
      damping *= 10.0;
    }
    if (!accepted) break;
    const double rel_step =
        step.norm() / std::max(theta.norm(), 1.0);
    if (rel_step < config.step_tol) break;
  }

  std::vector<PathParams> out(P);
  for (int p = 0; p < P; ++p) {
    out[p].weight = ev.weights(p);
    out[p].delay_s = theta(2 * p) * grid.delay_resolution();
    out[p].doppler_hz = theta(2 * p + 1) * grid.doppler_resolution();
    wrap_into_range(out[p], grid);
  }
  return out;
}

Eigen::VectorXd crb_weight_variance(std::span<const PathParams> paths,
                                    const RadarGrid& grid,
                                    double noise_variance) {
  grid.validate();
  if (paths.empty())
    throw ValidationError("crb: need at least one path");
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance))
    throw ValidationError("crb: noise variance must be finite and positive");
  const int P = static_cast<int>(paths.size());
  Atoms at = build_atoms(paths, grid, DerivScale::kPerBin);
  Eigen::VectorXcd w(P);
  for (int p = 0; p < P; ++p) w(p) = paths[p].weight;

  Eigen::MatrixXcd caa = at.a.adjoint() * at.a;
  Eigen::MatrixXcd cad = at.a.adjoint() * at.da;
  Eigen::MatrixXcd cdd = at.da.adjoint() * at.da;
  Eigen::MatrixXcd dbb = at.b.adjoint() * at.b;
  Eigen::MatrixXcd dbd = at.b.adjoint() * at.db;
  Eigen::MatrixXcd ddd = at.db.adjoint() * at.db;

  // Complex inner products of the model derivative columns, parameters
  // ordered (Re w_p, Im w_p, tau_p, alpha_p) per path. The derivative for
  // Im w_p is i times the one for Re w_p.
  Eigen::MatrixXcd m(4 * P, 4 * P);
  const Complex im(0.0, 1.0);
  for (int p = 0; p < P; ++p)
    for (int q = 0; q < P; ++q) {
      const Complex vv = caa(p, q) * dbb(p, q);
      const Complex v_dt = cad(p, q) * dbb(p, q) * w(q);     // <v_p, dtau_q>
      const Complex v_da = caa(p, q) * dbd(p, q) * w(q);     // <v_p, dalpha_q>
      const Complex dt_v =
          std::conj(cad(q, p)) * dbb(p, q) * std::conj(w(p));
      const Complex da_v =
          caa(p, q) * std::conj(dbd(q, p)) * std::conj(w(p));
      const Complex cg = std::conj(w(p)) * w(q);
      const Complex dt_dt = cg * cdd(p, q) * dbb(p, q);
      const Complex dt_da = cg * std::conj(cad(q, p)) * dbd(p, q);
      const Complex da_dt = cg * cad(p, q) * std::conj(dbd(q, p));
      const Complex da_da = cg * caa(p, q) * ddd(p, q);

      const int bp = 4 * p, bq = 4 * q;
      m(bp + 0, bq + 0) = vv;
      m(bp + 0, bq + 1) = im * vv;
      m(bp + 1, bq + 0) = -im * vv;
      m(bp + 1, bq + 1) = vv;
      m(bp + 0, bq + 2) = v_dt;
      m(bp + 0, bq + 3) = v_da;
      m(bp + 1, bq + 2) = -im * v_dt;
      m(bp + 1, bq + 3) = -im * v_da;
      m(bp + 2, bq + 0) = dt_v;
      m(bp + 3, bq + 0) = da_v;
      m(bp + 2, bq + 1) = im * dt_v;
      m(bp + 3, bq + 1) = im * da_v;
      m(bp + 2, bq + 2) = dt_dt;
      m(bp + 2, bq + 3) = dt_da;
      m(bp + 3, bq + 2) = da_dt;
      m(bp + 3, bq + 3) = da_da;
    }

  Eigen::MatrixXd fim = (2.0 / noise_variance) * m.real();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(fim);
  if (!lu.isInvertible())
    throw NumericalError(
        "crb: Fisher information is singular (coinciding or zero-weight paths)");
  Eigen::MatrixXd cov = lu.inverse();
  Eigen::VectorXd var(P);
  for (int p = 0; p < P; ++p)
    var(p) = cov(4 * p, 4 * p) + cov(4 * p + 1, 4 * p + 1);
  if (!var.allFinite() || (var.array() <= 0.0).any())
    throw NumericalError("crb: inverse Fisher information is not positive");
  return var;
}

std::vector<EstimatedPath> estimate(const ChannelFrame& frame,
                                    const MleConfig& config,
                                    EstimateTrace* trace) {
  frame.validate();
  config.validate();
  ChannelFrame work =
      config.background_subtract ? background_subtract(frame) : frame;
  const RadarGrid& grid = work.grid;
  const double e0 = work.data.squaredNorm();

  std::vector<EstimatedPath> result;
  if (e0 == 0.0) return result;

  std::vector<PathParams> paths;
  Eigen::MatrixXcd residual = work.data;
  const double snr_gate = std::pow(10.0, config.validity_snr_db / 10.0);

  while (static_cast<int>(paths.size()) < config.max_paths) {
    const double r2 = residual.squaredNorm();
    if (r2 <= kResidualFloor * e0) break;

    ChannelFrame res_frame{grid, residual};
    const double sigma2 = estimate_noise_variance(res_frame);
    if (trace) trace->noise_variance.push_back(sigma2);

    std::optional<PathParams> cand = initial_candidate(res_frame);
    if (!cand) break;

    std::vector<PathParams> trial = paths;
    trial.push_back(*cand);
    std::vector<PathParams> refined;
    Eigen::VectorXd vars;
    try {
      refined = gauss_newton_refine(trial, work, config);
      vars = crb_weight_variance(refined, grid,
                                 std::max(sigma2, 1e-300));
    } catch (const NumericalError&) {
      if (trace) ++trace->candidates_rejected;
      break;
    }

    const double snr =
        std::norm(refined.back().weight) / vars(vars.size() - 1);
    if (snr < snr_gate) {
      if (trace) ++trace->candidates_rejected;
      EstimatedPath rejected;
      rejected.params = refined.back();
      rejected.weight_variance = vars(vars.size() - 1);
      rejected.accepted = false;
      // keep the previously accepted fit; report the rejected candidate
      result.clear();
      for (std::size_t p = 0; p < paths.size(); ++p) {
        EstimatedPath ep;
        ep.params = paths[p];
        ep.weight_variance = 0.0;  // filled below
        ep.accepted = true;
        result.push_back(ep);
      }
      result.push_back(rejected);
      break;
    }

    paths = std::move(refined);
    residual = work.data - model_response(paths, grid).data;
    if (trace) trace->residual_energy.push_back(residual.squaredNorm());
  }

  if (result.empty()) {
    for (const PathParams& p : paths) {
      EstimatedPath ep;
      ep.params = p;
      ep.accepted = true;
      result.push_back(ep);
    }
  }

  // Final variances at the final fit and residual noise level.
  if (!paths.empty()) {
    ChannelFrame res_frame{grid, residual};
    double sigma2 = estimate_noise_variance(res_frame);
    sigma2 = std::max(sigma2, 1e-300);
    try {
      Eigen::VectorXd vars = crb_weight_variance(paths, grid, sigma2);
      std::size_t idx = 0;
      for (EstimatedPath& ep : result) {
        if (!ep.accepted) continue;
        ep.weight_variance = vars(idx++);
      }
    } catch (const NumericalError&) {
      // leave variances at zero; the fit itself is still valid
    }
  }
  return result;
}

}  // namespace ddest
