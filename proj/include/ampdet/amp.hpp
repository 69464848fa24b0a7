#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ampdet/denoiser.hpp"
#include "ampdet/errors.hpp"
#include "ampdet/parallel.hpp"
#include "ampdet/scenario.hpp"
#include "ampdet/types.hpp"

namespace ampdet {

struct AmpConfig {
  double tau = 3.0;
  std::size_t max_iters = 15;
  double conv_tol = 1e-6;
  /// Abort when sigma_t exceeds this multiple of its initial value.
  double divergence_factor = 10.0;
  /// Once the relative change drops below this, the threshold level is kept
  /// at its current value instead of tracking the (already converged) sigma_t.
  /// sigma_t has reached its fixed point to within this tolerance by then;
  /// holding the level constant keeps denoisers with discrete decisions
  /// (atom picks, support flips) from chattering around it. 0 disables.
  double level_freeze_tol = 1e-3;
  int n_threads = 1;

  void validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("AmpConfig: tau must be > 0");
    if (max_iters < 1) throw std::invalid_argument("AmpConfig: max_iters must be >= 1");
    if (!(conv_tol > 0.0)) throw std::invalid_argument("AmpConfig: conv_tol must be > 0");
    if (level_freeze_tol < 0.0)
      throw std::invalid_argument("AmpConfig: level_freeze_tol must be >= 0");
  }
};

struct AmpState {
  CMat estimate;  // X^t, N x M
  CMat residual;  // R^t, Q x M
  std::size_t iter = 0;
  double sigma = 0.0;  // ||R^t||_F / sqrt(MQ)
  std::vector<double> nmse_history;  // entry t is the NMSE of X^t (X^0 = 0)
};

struct AmpIterationRecord {
  std::size_t iter = 0;     // 1-based; the iteration that produced X^t
  double sigma = 0.0;       // effective noise level entering the iteration
  double level = 0.0;       // lambda_t = tau * sigma_t
  double rel_change = 0.0;  // ||X^t - X^{t-1}||_F / ||X^{t-1}||_F
  double nmse = 0.0;        // vs the scenario truth
};

struct AmpResult {
  CMat estimate;
  AmpState state;
  std::vector<AmpIterationRecord> trace;
  std::vector<double> sigma_history;  // sigma_t entering each iteration
  bool converged = false;
  std::size_t iters = 0;
};

/// Matched-filter denoiser input for one user: (u_n^H R)^T + x_n, i.e. the
/// residual correlated against the pilot column. With unit-norm pilots the
/// user's own contribution enters with coefficient exactly one.
inline CVec matched_filter(const CMat& residual, const CVec& pilot, const CVec& row_estimate) {
  if (residual.rows() != pilot.size() || residual.cols() != row_estimate.size())
    throw std::invalid_argument("matched_filter: dimension mismatch");
  return residual.transpose() * pilot.conjugate() + row_estimate;
}

/// Residual update with the Onsager correction:
/// R_next = Y - U X_next + (1/Q) R_prev jac_sum.
inline CMat onsager_residual(const CMat& observation, const CMat& pilots, const CMat& next_estimate,
                             const CMat& prev_residual, const CMat& jac_sum) {
  const Eigen::Index q = observation.rows();
  const Eigen::Index m = observation.cols();
  const Eigen::Index n = next_estimate.rows();
  if (pilots.rows() != q || pilots.cols() != n || next_estimate.cols() != m ||
      prev_residual.rows() != q || prev_residual.cols() != m || jac_sum.rows() != m ||
      jac_sum.cols() != m)
    throw std::invalid_argument("onsager_residual: dimension mismatch");
  CMat next = observation;
  next.noalias() -= pilots * next_estimate;
  next.noalias() += prev_residual * (jac_sum / static_cast<double>(q));
  return next;
}

namespace detail {

inline double nmse_or_zero(const CMat& estimate, const CMat& truth) {
  const double denom = truth.norm();
  if (denom == 0.0) return estimate.norm() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (estimate - truth).norm() / denom;
}

}  // namespace detail

/// Runs the vector AMP iteration from X^0 = 0, R^0 = Y with lambda_t =
/// tau * sigma_t, until the relative Frobenius change of X drops below
/// conv_tol or max_iters is reached.
inline AmpResult run_amp(const Scenario& scenario, const AmpConfig& config,
                         const RowDenoiser& denoiser) {
  config.validate();
  const Eigen::Index n = scenario.truth.rows();
  const Eigen::Index m = scenario.truth.cols();
  const Eigen::Index q = scenario.pilots.rows();
  const double norm_scale = std::sqrt(static_cast<double>(m) * static_cast<double>(q));

  const CMat& pilot_matrix = scenario.pilots;
  const CMat& observation = scenario.observation;

  AmpResult result;
  result.estimate = CMat::Zero(n, m);
  CMat residual = observation;
  result.state.nmse_history.push_back(detail::nmse_or_zero(result.estimate, scenario.truth));

  double sigma0 = 0.0;
  double frozen_level = -1.0;
  double last_rel_change = std::numeric_limits<double>::infinity();
  CMat inputs(n, m);
  CMat next(n, m);
  for (std::size_t t = 0; t < config.max_iters; ++t) {
    const double sigma = residual.norm() / norm_scale;
    if (!std::isfinite(sigma))
      throw DivergedError(t, "amp: residual went non-finite at iteration " + std::to_string(t));
    if (t == 0) sigma0 = sigma;
    if (sigma0 > 0.0 && sigma > config.divergence_factor * sigma0)
      throw DivergedError(t, "amp: effective noise grew past the divergence guard");
    if (frozen_level < 0.0 && config.level_freeze_tol > 0.0 &&
        last_rel_change < config.level_freeze_tol)
      frozen_level = config.tau * sigma;
    const double level = frozen_level >= 0.0 ? frozen_level : config.tau * sigma;
    result.sigma_history.push_back(sigma);

    inputs = result.estimate;
    inputs.noalias() += pilot_matrix.adjoint() * residual;  // row n is u_n^H R + x_n^T
    if (!inputs.allFinite())
      throw DivergedError(t, "amp: matched-filter output went non-finite");

    parallel_blocks(static_cast<std::size_t>(n), 64, config.n_threads,
                    [&](std::size_t, std::size_t begin, std::size_t end) {
                      for (std::size_t i = begin; i < end; ++i) {
                        const Eigen::Index row = static_cast<Eigen::Index>(i);
                        next.row(row) =
                            denoiser.denoise(inputs.row(row).transpose(), level).transpose();
                      }
                    });
    if (!next.allFinite()) throw DivergedError(t, "amp: denoiser output went non-finite");

    const double prev_norm = result.estimate.norm();
    const double diff_norm = (next - result.estimate).norm();
    const double rel_change =
        prev_norm > 0.0 ? diff_norm / prev_norm
                        : (diff_norm == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());

    // First-order cancellation of the self-feedback through R^t requires the
    // transposed Jacobian sum here (for the Hermitian closed forms this is
    // just the conjugate).
    const CMat jac_sum = denoiser.jacobian_sum(inputs, level, config.n_threads, &next);
    residual = onsager_residual(observation, pilot_matrix, next, residual, jac_sum.transpose());

    result.estimate.swap(next);
    result.iters = t + 1;
    last_rel_change = rel_change;
    const double iter_nmse = detail::nmse_or_zero(result.estimate, scenario.truth);
    result.state.nmse_history.push_back(iter_nmse);
    result.trace.push_back(AmpIterationRecord{t + 1, sigma, level, rel_change, iter_nmse});
    if (rel_change < config.conv_tol) {
      result.converged = true;
      break;
    }
  }

  result.state.estimate = result.estimate;
  result.state.residual = residual;
  result.state.iter = result.iters;
  result.state.sigma = residual.norm() / norm_scale;
  return result;
}

}  // namespace ampdet
