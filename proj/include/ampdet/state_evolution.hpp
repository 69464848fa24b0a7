#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ampdet/amp.hpp"
#include "ampdet/denoiser.hpp"
#include "ampdet/errors.hpp"
#include "ampdet/parallel.hpp"
#include "ampdet/rng.hpp"
#include "ampdet/scenario.hpp"
#include "ampdet/types.hpp"

namespace ampdet {

struct SeParams {
  std::size_t mc_samples = 200;      // noise draws per sampled user
  std::size_t user_subsample = 500;  // users entering the expectation, capped at N
  std::uint64_t seed = 7;
  int n_threads = 1;
};

struct StateEvolutionTrace {
  std::vector<CMat> theta;  // error covariance per iteration, theta[t] ~ X^t
  std::vector<CMat> sigma;  // effective-noise covariance, sigma[t] = theta[t]/omega + noise_var I
  std::vector<double> predicted_nmse;
  double omega = 0.0;  // Q / N
  std::size_t mc_samples = 0;
  std::size_t user_subsample = 0;
};

/// Hermitian PSD square root: returns H with H H^H = S. Eigenvalues below
/// -1e-10 are rejected, values in [-1e-10, 0] are clipped to zero.
inline CMat hermitian_sqrt(const CMat& s) {
  if (s.rows() != s.cols()) throw std::invalid_argument("hermitian_sqrt: matrix must be square");
  const double scale = s.size() == 0 ? 0.0 : s.cwiseAbs().maxCoeff();
  const double asym = s.size() == 0 ? 0.0 : (s - s.adjoint()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * std::max(1.0, scale))
    throw std::invalid_argument("hermitian_sqrt: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMat> eig(0.5 * (s + s.adjoint()));
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("hermitian_sqrt: eigendecomposition failed");
  RVec values = eig.eigenvalues();
  const double most_negative = values.minCoeff();
  if (most_negative < -1e-10)
    throw NotPsdError(most_negative,
                      "hermitian_sqrt: most negative eigenvalue " + std::to_string(most_negative));
  for (Eigen::Index i = 0; i < values.size(); ++i)
    values[i] = values[i] > 0.0 ? std::sqrt(values[i]) : 0.0;
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().adjoint();
}

namespace detail {

struct SeUserSample {
  std::vector<Eigen::Index> users;
  std::vector<double> weights;  // reweighting so the weighted sum estimates the full-user sum
};

/// Stratified user subsample. Rows carrying signal dominate the error
/// covariance, so all of them are kept whenever they fit in the budget; zero
/// rows are subsampled and reweighted.
inline SeUserSample stratified_users(const CMat& truth, std::size_t budget, std::uint64_t seed) {
  std::vector<Eigen::Index> active, inactive;
  for (Eigen::Index n = 0; n < truth.rows(); ++n)
    (truth.row(n).squaredNorm() > 0.0 ? active : inactive).push_back(n);

  const std::size_t total = static_cast<std::size_t>(truth.rows());
  budget = std::min(std::max<std::size_t>(budget, 1), total);

  SeUserSample sample;
  if (budget == total) {
    sample.users.resize(total);
    std::iota(sample.users.begin(), sample.users.end(), Eigen::Index{0});
    sample.weights.assign(total, 1.0);
    return sample;
  }

  const std::size_t n_active_total = active.size();
  const std::size_t n_inactive_total = inactive.size();

  std::size_t take_active;
  if (n_active_total <= budget / 2) {
    take_active = n_active_total;
  } else {
    take_active = static_cast<std::size_t>(std::llround(
        static_cast<double>(budget) * static_cast<double>(n_active_total) /
        static_cast<double>(total)));
    take_active = std::clamp<std::size_t>(take_active, n_active_total ? 1 : 0, n_active_total);
  }
  const std::size_t take_inactive = std::min(n_inactive_total, budget - take_active);

  Rng rng(derive_seed(seed, 0x5eba5eULL));
  auto draw = [&rng](std::vector<Eigen::Index>& pool, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(
                  rng.uniform_int(0, static_cast<std::uint64_t>(pool.size() - 1 - i)));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
  };
  draw(active, take_active);
  draw(inactive, take_inactive);

  sample.users.reserve(take_active + take_inactive);
  sample.weights.reserve(take_active + take_inactive);
  const double wa = take_active == 0
                        ? 0.0
                        : static_cast<double>(n_active_total) / static_cast<double>(take_active);
  const double wi = take_inactive == 0 ? 0.0
                                       : static_cast<double>(n_inactive_total) /
                                             static_cast<double>(take_inactive);
  for (auto u : active) {
    sample.users.push_back(u);
    sample.weights.push_back(wa);
  }
  for (auto u : inactive) {
    sample.users.push_back(u);
    sample.weights.push_back(wi);
  }
  return sample;
}

inline CMat se_step_on_users(const CMat& truth, const CMat& sigma_t, const RowDenoiser& denoiser,
                             double tau, std::size_t mc_samples, std::uint64_t step_seed,
                             const SeUserSample& sample, int n_threads) {
  const Eigen::Index m = truth.cols();
  const CMat root = hermitian_sqrt(sigma_t);
  const double trace = std::max(0.0, sigma_t.trace().real());
  const double level = tau * std::sqrt(trace / static_cast<double>(m));

  constexpr std::size_t kBlock = 16;
  std::vector<CMat> partials(block_count(sample.users.size(), kBlock));
  parallel_blocks(sample.users.size(), kBlock, n_threads,
                  [&](std::size_t b, std::size_t begin, std::size_t end) {
                    CMat acc = CMat::Zero(m, m);
                    for (std::size_t i = begin; i < end; ++i) {
                      const Eigen::Index user = sample.users[i];
                      Rng rng(derive_seed(step_seed, 0xe1ULL, static_cast<std::uint64_t>(user)));
                      const CVec x = truth.row(user).transpose();
                      CMat user_acc = CMat::Zero(m, m);
                      for (std::size_t s = 0; s < mc_samples; ++s) {
                        const CVec noisy = x + root * rng.cnormal_vector(m);
                        const CVec err = denoiser.denoise(noisy, level) - x;
                        user_acc.noalias() += err * err.adjoint();
                      }
                      acc += (sample.weights[i] / static_cast<double>(mc_samples)) * user_acc;
                    }
                    partials[b] = std::move(acc);
                  });
  CMat theta = CMat::Zero(m, m);
  for (const auto& p : partials) theta += p;
  theta /= static_cast<double>(truth.rows());
  return 0.5 * (theta + theta.adjoint());
}

}  // namespace detail

/// One state-evolution update: Monte Carlo estimate of the error covariance
/// of denoise(x_n + sigma_t^{1/2} v) across users, with the level
/// tau * sqrt(Tr(sigma_t) / M) matching the engine's tau * sigma_t rule.
inline CMat se_step(const CMat& truth, const CMat& sigma_t, const RowDenoiser& denoiser, double tau,
                    const SeParams& params, std::uint64_t step_seed) {
  const auto sample =
      detail::stratified_users(truth, params.user_subsample, derive_seed(step_seed, 0xca11ULL));
  return detail::se_step_on_users(truth, sigma_t, denoiser, tau, params.mc_samples, step_seed,
                                  sample, params.n_threads);
}

/// Runs the state-evolution recursion for the scenario's truth, starting from
/// theta_0 = (1/N) sum_n x_n x_n^H, for n_iters steps (the paired AMP run's
/// max_iters when 0).
inline StateEvolutionTrace run_se(const Scenario& scenario, const AmpConfig& config,
                                  const RowDenoiser& denoiser, const SeParams& params,
                                  std::size_t n_iters = 0) {
  config.validate();
  const Eigen::Index n = scenario.truth.rows();
  const CMat& truth = scenario.truth;
  const double truth_norm2 = truth.squaredNorm();
  if (n_iters == 0) n_iters = config.max_iters;

  StateEvolutionTrace trace;
  trace.omega = static_cast<double>(scenario.pilot_len()) / static_cast<double>(n);
  trace.mc_samples = params.mc_samples;
  trace.user_subsample = std::min(params.user_subsample, static_cast<std::size_t>(n));

  auto predicted_nmse = [&](const CMat& theta) {
    if (truth_norm2 == 0.0) return 0.0;
    return std::sqrt(std::max(0.0, theta.trace().real()) * static_cast<double>(n) / truth_norm2);
  };
  auto sigma_of = [&](const CMat& theta) {
    CMat sigma = theta / trace.omega;
    sigma.diagonal().array() += scenario.noise_var;
    return sigma;
  };

  CMat theta = (truth.transpose() * truth.conjugate()) / static_cast<double>(n);
  theta = 0.5 * (theta + theta.adjoint());
  trace.theta.push_back(theta);
  trace.sigma.push_back(sigma_of(theta));
  trace.predicted_nmse.push_back(predicted_nmse(theta));

  const auto sample =
      detail::stratified_users(truth, params.user_subsample, derive_seed(params.seed, 0x5a3fULL));
  for (std::size_t t = 0; t < n_iters; ++t) {
    theta = detail::se_step_on_users(truth, trace.sigma.back(), denoiser, config.tau,
                                     params.mc_samples, derive_seed(params.seed, t), sample,
                                     params.n_threads);
    trace.theta.push_back(theta);
    trace.sigma.push_back(sigma_of(theta));
    trace.predicted_nmse.push_back(predicted_nmse(theta));
  }
  return trace;
}

inline void save_se_csv(const StateEvolutionTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "iteration,trace_theta,predicted_nmse\n";
  char line[128];
  for (std::size_t t = 0; t < trace.theta.size(); ++t) {
    std::snprintf(line, sizeof(line), "%zu,%.12g,%.12g\n", t, trace.theta[t].trace().real(),
                  trace.predicted_nmse[t]);
    out << line;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace ampdet
