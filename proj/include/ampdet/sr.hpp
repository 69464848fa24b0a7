#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ampdet/denoiser.hpp"
#include "ampdet/errors.hpp"
#include "ampdet/parallel.hpp"
#include "ampdet/rng.hpp"
#include "ampdet/scenario.hpp"
#include "ampdet/types.hpp"

namespace ampdet {

struct GreedyConfig {
  std::size_t grid_oversample = 16;   // selection grid has grid_oversample * M points
  std::size_t newton_max_iters = 20;  // I
  double newton_tol = 1e-9;           // delta, on the Newton step norm
  double step_shrink = 0.5;
  std::size_t max_backtracks = 10;
  std::size_t max_atoms = 16;  // I'
  /// Atoms with |c| below prune_tol * level are dropped after least squares.
  /// The default clears the noise ceiling of the selection step: the best of
  /// grid_oversample * M correlated noise correlations plus its Newton polish
  /// reaches about 3 sigma, so pruning right at the level (tau sigma with
  /// tau = 3) lets noise rows breed spurious atoms.
  double prune_tol = 1.6;
  /// Stop once the residual power falls below stop_factor * M * sigma^2,
  /// with sigma recovered from the level as level / tau.
  double stop_factor = 1.2;
  double tau = 3.0;
  /// Atoms closer than this many selection-grid cells are treated as one
  /// spectral line: separations below the grid's own resolution admit the
  /// degenerate doublet fit (two huge nearly-cancelling amplitudes standing
  /// in for an atom plus its derivative), which is overfit noise.
  double merge_radius_cells = 0.5;

  void validate() const {
    if (grid_oversample < 2) throw std::invalid_argument("GreedyConfig: grid_oversample must be >= 2");
    if (newton_max_iters < 1 || max_atoms < 1)
      throw std::invalid_argument("GreedyConfig: iteration limits must be >= 1");
    if (!(newton_tol > 0.0) || !(step_shrink > 0.0 && step_shrink < 1.0))
      throw std::invalid_argument("GreedyConfig: bad Newton parameters");
    if (!(prune_tol >= 0.0) || !(stop_factor > 0.0) || !(tau > 0.0))
      throw std::invalid_argument("GreedyConfig: thresholds must be positive");
    if (!(merge_radius_cells >= 0.0))
      throw std::invalid_argument("GreedyConfig: merge_radius_cells must be >= 0");
  }

  double merge_radius(std::size_t n_antennas) const {
    return std::max(1e-9, merge_radius_cells /
                              (static_cast<double>(grid_oversample) *
                               static_cast<double>(n_antennas)));
  }
};

struct SmoothingConfig {
  std::size_t j1 = 2;       // smoothing samples
  std::size_t j2 = 1;       // derivative probes per Jacobian column
  double smooth_std = 0.1;  // perturbation std as a fraction of the level
  double fd_step = 0.1;     // probe step as a fraction of the level
  /// Cap on the norm of one user's probe column. A probe that straddles one
  /// of the greedy's decision boundaries picks up a jump of order an atom
  /// amplitude divided by the probe step; the smoothed denoiser those probes
  /// sample has bounded derivatives, so such spikes are estimator noise, not
  /// signal. 0 disables the cap.
  double probe_clip = 10.0;
  std::uint64_t seed = 0x5eedULL;

  void validate() const {
    if (j1 < 1 || j2 < 1) throw std::invalid_argument("SmoothingConfig: j1, j2 must be >= 1");
    if (!(smooth_std >= 0.0) || !(fd_step > 0.0) || !(probe_clip >= 0.0))
      throw std::invalid_argument(
          "SmoothingConfig: need smooth_std >= 0, fd_step > 0 and probe_clip >= 0");
  }
};

/// Working set of the greedy denoiser: spectral lines, their amplitudes, and
/// the residual r_res = x - Phi(f) c.
struct SpectralEstimate {
  std::vector<double> freqs;
  std::vector<Complex> amps;
  CVec residual;

  std::size_t n_atoms() const { return freqs.size(); }
};

/// Circular distance on the frequency torus [0, 1).
inline double circular_distance(double f1, double f2) {
  double d = std::abs(f1 - f2);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

inline double wrap_frequency(double f) {
  double w = f - std::floor(f);
  if (w >= 1.0) w = 0.0;  // guards against f - floor(f) rounding up to 1
  return w;
}

/// Phi(f): steering atoms as columns.
inline CMat steering_matrix(const std::vector<double>& freqs, std::size_t n_antennas) {
  CMat phi(static_cast<Eigen::Index>(n_antennas), static_cast<Eigen::Index>(freqs.size()));
  for (std::size_t k = 0; k < freqs.size(); ++k)
    phi.col(static_cast<Eigen::Index>(k)) = steering(freqs[k], n_antennas);
  return phi;
}

/// Columnwise derivative d a(f) / d f: element m is (j 2 pi m) a_m(f).
inline CMat steering_derivative_matrix(const std::vector<double>& freqs, std::size_t n_antennas) {
  CMat t(static_cast<Eigen::Index>(n_antennas), static_cast<Eigen::Index>(freqs.size()));
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    const CVec a = steering(freqs[k], n_antennas);
    for (Eigen::Index m = 0; m < a.size(); ++m)
      t(m, static_cast<Eigen::Index>(k)) = Complex(0.0, kTwoPi * static_cast<double>(m)) * a[m];
  }
  return t;
}

/// Precomputed steering atoms on the selection grid.
struct SelectionGrid {
  CMat atoms;  // M x grid points

  SelectionGrid(std::size_t n_antennas, std::size_t grid_oversample) {
    const std::size_t points = grid_oversample * n_antennas;
    atoms.resize(static_cast<Eigen::Index>(n_antennas), static_cast<Eigen::Index>(points));
    for (std::size_t k = 0; k < points; ++k)
      atoms.col(static_cast<Eigen::Index>(k)) =
          steering(static_cast<double>(k) / static_cast<double>(points), n_antennas);
  }

  std::size_t points() const { return static_cast<std::size_t>(atoms.cols()); }
  double frequency(std::size_t k) const {
    return static_cast<double>(k) / static_cast<double>(points());
  }
};

/// Most correlated atom on the fine grid; ties break toward the lowest
/// frequency. Returns nothing for an identically zero residual.
inline std::optional<double> select_atom(const CVec& residual, const SelectionGrid& grid) {
  if (!residual.allFinite()) throw std::invalid_argument("select_atom: non-finite residual");
  const CVec corr = grid.atoms.adjoint() * residual;
  double best = 0.0;
  std::ptrdiff_t best_k = -1;
  for (Eigen::Index k = 0; k < corr.size(); ++k) {
    const double c = std::norm(corr[k]);
    if (c > best) {
      best = c;
      best_k = k;
    }
  }
  if (best_k < 0) return std::nullopt;
  return grid.frequency(static_cast<std::size_t>(best_k));
}

inline std::optional<double> select_atom(const CVec& residual, const GreedyConfig& config) {
  return select_atom(residual,
                     SelectionGrid(static_cast<std::size_t>(residual.size()), config.grid_oversample));
}

namespace detail {

/// Selection restricted to grid points at least exclude_radius away from the
/// atoms already in the working set.
inline std::optional<double> select_atom_excluding(const CVec& residual, const SelectionGrid& grid,
                                                   const std::vector<double>& taken,
                                                   double exclude_radius) {
  const CVec corr = grid.atoms.adjoint() * residual;
  double best = 0.0;
  std::ptrdiff_t best_k = -1;
  for (Eigen::Index k = 0; k < corr.size(); ++k) {
    const double c = std::norm(corr[k]);
    if (c <= best) continue;
    const double f = grid.frequency(static_cast<std::size_t>(k));
    bool excluded = false;
    for (double g : taken)
      if (circular_distance(f, g) < exclude_radius) {
        excluded = true;
        break;
      }
    if (excluded) continue;
    best = c;
    best_k = k;
  }
  if (best_k < 0) return std::nullopt;
  return grid.frequency(static_cast<std::size_t>(best_k));
}

}  // namespace detail

namespace detail {

inline void check_separated(const std::vector<double>& freqs) {
  for (std::size_t i = 0; i < freqs.size(); ++i)
    for (std::size_t j = i + 1; j < freqs.size(); ++j)
      if (circular_distance(freqs[i], freqs[j]) < 1e-9)
        throw IllConditionedError("steering system is rank deficient: duplicate frequencies");
}

/// Least-squares projection onto a steering atom set. Solves the normal
/// equations (the systems are tiny and the duplicate check keeps the Gram
/// matrix sane); falls back to column-pivoted QR when they break down.
struct ProjectionWork {
  CMat phi;
  Eigen::LDLT<CMat> gram_ldlt;
  bool use_qr = false;
  Eigen::ColPivHouseholderQR<CMat> qr;
  CVec coeffs;    // Phi^+ x
  CVec residual;  // P^perp x = x - Phi coeffs
  double cost = 0.0;

  CMat solve(const CMat& rhs_tall) const {
    if (use_qr) return qr.solve(rhs_tall);
    return gram_ldlt.solve(phi.adjoint() * rhs_tall);
  }
};

inline ProjectionWork project_onto_atoms(const std::vector<double>& freqs, const CVec& x) {
  if (freqs.empty()) throw std::invalid_argument("projection requires at least one frequency");
  check_separated(freqs);
  ProjectionWork work;
  work.phi = steering_matrix(freqs, static_cast<std::size_t>(x.size()));
  work.gram_ldlt.compute(work.phi.adjoint() * work.phi);
  if (work.gram_ldlt.info() == Eigen::Success)
    work.coeffs = work.gram_ldlt.solve(work.phi.adjoint() * x);
  if (work.gram_ldlt.info() != Eigen::Success || !work.coeffs.allFinite()) {
    work.use_qr = true;
    work.qr.compute(work.phi);
    work.coeffs = work.qr.solve(x);
    if (!work.coeffs.allFinite())
      throw IllConditionedError("steering system is numerically rank deficient");
  }
  work.residual = x - work.phi * work.coeffs;
  work.cost = work.residual.squaredNorm();
  return work;
}

struct CostEval {
  double cost = 0.0;
  RVec grad;
  RMat hess;
};

/// Fused projection cost with its gradient and Gauss-Newton Hessian. The
/// atom-derivative columns are formed from phi directly: t_k(m) = j 2 pi m
/// phi_k(m).
inline CostEval cost_eval(const std::vector<double>& freqs, const CVec& x, bool derivatives) {
  const ProjectionWork work = project_onto_atoms(freqs, x);
  CostEval eval;
  eval.cost = work.cost;
  if (!derivatives) return eval;

  const Eigen::Index k = static_cast<Eigen::Index>(freqs.size());
  const Eigen::Index m = x.size();
  CMat t(m, k);
  for (Eigen::Index col = 0; col < k; ++col)
    for (Eigen::Index row = 0; row < m; ++row)
      t(row, col) = Complex(0.0, kTwoPi * static_cast<double>(row)) * work.phi(row, col);

  eval.grad.resize(k);
  for (Eigen::Index col = 0; col < k; ++col)
    eval.grad[col] = -2.0 * (work.coeffs[col] * (work.residual.adjoint() * t.col(col))(0)).real();

  CMat pperp_t = t;
  pperp_t.noalias() -= work.phi * work.solve(t);
  const CMat gram = t.adjoint() * pperp_t;
  eval.hess.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      eval.hess(i, j) = 2.0 * (gram(i, j) * work.coeffs[j] * std::conj(work.coeffs[i])).real();
  eval.hess = 0.5 * (eval.hess + eval.hess.transpose()).eval();
  return eval;
}

}  // namespace detail

/// Projection residual power Tr{P^perp(f) x x^H} = ||P^perp(f) x||^2.
inline double residual_cost(const std::vector<double>& freqs, const CVec& x) {
  return detail::project_onto_atoms(freqs, x).cost;
}

/// Exact gradient of residual_cost: p_k = -2 Re{ c_k r^H t_k } with c the
/// least-squares amplitudes and r the projection residual.
inline RVec cost_gradient(const std::vector<double>& freqs, const CVec& x) {
  return detail::cost_eval(freqs, x, true).grad;
}

/// Gauss-Newton Hessian approximation 2 Re{(T^H P^perp T) o (c c^H)^T},
/// symmetrized.
inline RMat cost_hessian(const std::vector<double>& freqs, const CVec& x) {
  return detail::cost_eval(freqs, x, true).hess;
}

/// Joint Newton refinement of the frequency set with backtracking line
/// search; accepted steps strictly decrease the projection cost.
inline std::vector<double> newton_refine(const std::vector<double>& freqs0, const CVec& x,
                                         const GreedyConfig& config) {
  std::vector<double> freqs(freqs0.size());
  for (std::size_t i = 0; i < freqs0.size(); ++i) freqs[i] = wrap_frequency(freqs0[i]);
  if (freqs.empty()) return freqs;
  const Eigen::Index k = static_cast<Eigen::Index>(freqs.size());

  double cost = residual_cost(freqs, x);
  for (std::size_t it = 0; it < config.newton_max_iters; ++it) {
    detail::CostEval eval = detail::cost_eval(freqs, x, true);
    RMat hess = std::move(eval.hess);
    hess.diagonal().array() += 1e-10 * hess.trace() / static_cast<double>(k);

    RVec step;
    Eigen::LDLT<RMat> ldlt(hess);
    bool use_gradient = ldlt.info() != Eigen::Success;
    if (!use_gradient) {
      step = ldlt.solve(eval.grad);
      use_gradient = !step.allFinite() || eval.grad.dot(step) <= 0.0;
    }
    if (use_gradient) {
      const double hnorm = hess.norm();
      step = hnorm > 0.0 ? RVec(eval.grad / hnorm) : eval.grad;
    }
    if (step.norm() < config.newton_tol) break;

    double mu = 1.0;
    bool accepted = false;
    for (std::size_t bt = 0; bt <= config.max_backtracks; ++bt) {
      std::vector<double> candidate(freqs.size());
      for (std::size_t i = 0; i < freqs.size(); ++i)
        candidate[i] = wrap_frequency(freqs[i] - mu * step[static_cast<Eigen::Index>(i)]);
      double candidate_cost;
      try {
        candidate_cost = residual_cost(candidate, x);
      } catch (const IllConditionedError&) {
        mu *= config.step_shrink;  // step collapsed two atoms; shorten it
        continue;
      }
      if (std::isnan(candidate_cost))
        throw DivergedError(it, "newton_refine: cost went non-finite");
      if (candidate_cost < cost) {
        freqs = std::move(candidate);
        cost = candidate_cost;
        accepted = true;
        break;
      }
      mu *= config.step_shrink;
    }
    if (!accepted) break;
  }
  return freqs;
}

/// Least-squares amplitude fit with pruning: frequencies within merge_radius
/// of each other are merged, atoms with |c| < prune_threshold are dropped,
/// and the survivors are re-solved. The residual is updated to x - Phi(f) c.
inline SpectralEstimate least_squares_prune(const std::vector<double>& freqs, const CVec& x,
                                            double prune_threshold, double merge_radius = 1e-9) {
  SpectralEstimate est;
  est.residual = x;

  std::vector<double> merged;
  for (double f : freqs) {
    const double w = wrap_frequency(f);
    bool duplicate = false;
    for (double g : merged)
      if (circular_distance(w, g) < merge_radius) {
        duplicate = true;
        break;
      }
    if (!duplicate) merged.push_back(w);
  }
  if (merged.empty()) return est;

  auto solve = [&](const std::vector<double>& fs) {
    return detail::project_onto_atoms(fs, x);
  };
  auto work = solve(merged);

  std::vector<double> kept;
  for (std::size_t i = 0; i < merged.size(); ++i)
    if (std::abs(work.coeffs[static_cast<Eigen::Index>(i)]) >= prune_threshold)
      kept.push_back(merged[i]);
  if (kept.empty()) return est;
  if (kept.size() != merged.size()) work = solve(kept);

  est.freqs = std::move(kept);
  est.amps.resize(est.freqs.size());
  for (std::size_t i = 0; i < est.amps.size(); ++i)
    est.amps[i] = work.coeffs[static_cast<Eigen::Index>(i)];
  est.residual = std::move(work.residual);
  return est;
}

/// Greedy super-resolution denoiser: select the best-correlated atom, jointly
/// refine all frequencies by Newton, least-squares fit with pruning, and
/// update the residual, until the residual power drops below the stop level
/// or the atom budget is exhausted. The residual norm never increases across
/// outer iterations; an iteration that fails to decrease it is rolled back
/// and the loop exits.
inline std::pair<CVec, SpectralEstimate> greedy_denoise(const CVec& x, double level,
                                                        const GreedyConfig& config,
                                                        const SelectionGrid* grid = nullptr,
                                                        std::vector<double>* residual_trace = nullptr) {
  config.validate();
  const std::size_t m = static_cast<std::size_t>(x.size());
  const double sigma = level / config.tau;
  const double stop_power = config.stop_factor * static_cast<double>(m) * sigma * sigma;
  const double prune_threshold = config.prune_tol * level;

  SpectralEstimate est;
  est.residual = x;
  double best_power = x.squaredNorm();
  if (residual_trace) residual_trace->push_back(best_power);
  if (best_power <= stop_power) return {CVec::Zero(x.size()), est};

  std::optional<SelectionGrid> local_grid;
  if (!grid) {
    local_grid.emplace(m, config.grid_oversample);
    grid = &*local_grid;
  }

  const double merge_radius = config.merge_radius(m);
  while (est.n_atoms() < config.max_atoms) {
    const auto picked =
        detail::select_atom_excluding(est.residual, *grid, est.freqs, merge_radius);
    if (!picked) break;
    std::vector<double> freqs = est.freqs;
    freqs.push_back(*picked);
    freqs = newton_refine(freqs, x, config);
    SpectralEstimate candidate = least_squares_prune(freqs, x, prune_threshold, merge_radius);
    const double power = candidate.residual.squaredNorm();
    if (power >= best_power * (1.0 - 1e-12)) break;
    est = std::move(candidate);
    best_power = power;
    if (residual_trace) residual_trace->push_back(best_power);
    if (best_power <= stop_power) break;
  }
  return {x - est.residual, est};
}

/// Probe-based estimate of the summed Wirtinger Jacobian of an arbitrary
/// denoiser eta(x, level): column m averages j2 one-hot complex probes, each
/// multiplied by the conjugated draw, summed over the rows of `inputs`.
/// Draws are indexed by (row, column, probe) from `seed`, so the estimate is
/// independent of scheduling; `outputs` may carry precomputed eta(row).
template <typename EtaFn>
CMat mc_jacobian_sum(EtaFn&& eta, const CMat& inputs, double level, double probe_step,
                     std::size_t j2, std::uint64_t seed, int n_threads = 1,
                     const CMat* outputs = nullptr, double probe_clip = 0.0) {
  if (!(probe_step > 0.0)) throw std::invalid_argument("mc_jacobian_sum: probe_step must be > 0");
  if (j2 < 1) throw std::invalid_argument("mc_jacobian_sum: j2 must be >= 1");
  const std::size_t n = static_cast<std::size_t>(inputs.rows());
  const Eigen::Index m = inputs.cols();

  constexpr std::size_t kBlock = 32;
  std::vector<CMat> partials(block_count(n, kBlock));
  parallel_blocks(n, kBlock, n_threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
    CMat acc = CMat::Zero(m, m);
    CVec probe(m);
    CVec column(m);
    for (std::size_t row = begin; row < end; ++row) {
      const CVec x = inputs.row(static_cast<Eigen::Index>(row)).transpose();
      const CVec base = outputs ? CVec(outputs->row(static_cast<Eigen::Index>(row)).transpose())
                                : CVec(eta(x, level));
      for (Eigen::Index col = 0; col < m; ++col) {
        for (std::size_t k = 0; k < j2; ++k) {
          Rng draw_rng(derive_seed(seed, row, static_cast<std::uint64_t>(col), k));
          const Complex d = draw_rng.cnormal();
          probe = x;
          probe[col] += probe_step * d;
          column = (std::conj(d) / (probe_step * static_cast<double>(j2))) * (eta(probe, level) - base);
          if (probe_clip > 0.0) {
            const double norm = column.norm();
            if (norm > probe_clip) column *= probe_clip / norm;
          }
          acc.col(col) += column;
        }
      }
    }
    partials[b] = std::move(acc);
  });

  CMat total = CMat::Zero(m, m);
  for (const auto& p : partials) total += p;
  return total;
}

/// S-AMP denoiser: Monte Carlo smoothed greedy super-resolution denoiser with
/// a Theorem-1-style probe estimator for the summed Jacobian. The j1
/// smoothing directions and all probe draws are frozen at construction, so
/// the denoiser is a pure function of (input, level) and the AMP map stays
/// stationary across iterations.
class SrDenoiser final : public RowDenoiser {
 public:
  SrDenoiser(std::size_t n_antennas, GreedyConfig greedy = {}, SmoothingConfig smoothing = {})
      : greedy_(greedy),
        smoothing_(smoothing),
        grid_(n_antennas, greedy.grid_oversample),
        n_antennas_(n_antennas) {
    greedy_.validate();
    smoothing_.validate();
    Rng rng(derive_seed(smoothing_.seed, 0xb0b5ULL));
    unit_draws_.reserve(smoothing_.j1);
    for (std::size_t j = 0; j < smoothing_.j1; ++j)
      unit_draws_.push_back(rng.cnormal_vector(static_cast<Eigen::Index>(n_antennas)));
  }

  std::string name() const override { return "samp"; }

  const GreedyConfig& greedy_config() const { return greedy_; }
  const SmoothingConfig& smoothing_config() const { return smoothing_; }
  const SelectionGrid& grid() const { return grid_; }

  /// Smoothed denoiser: average of greedy outputs at the j1 frozen
  /// perturbations with std smooth_std * level.
  CVec denoise(const CVec& input, double level) const override {
    check_size(input);
    const double r = smoothing_.smooth_std * level;
    if (r == 0.0) return greedy_denoise(input, level, greedy_, &grid_).first;
    CVec acc = CVec::Zero(input.size());
    for (const auto& draw : unit_draws_)
      acc += greedy_denoise(input + r * draw, level, greedy_, &grid_).first;
    return acc / static_cast<double>(smoothing_.j1);
  }

  /// Unaveraged greedy path (exposed for tests and diagnostics).
  std::pair<CVec, SpectralEstimate> greedy(const CVec& input, double level) const {
    check_size(input);
    return greedy_denoise(input, level, greedy_, &grid_);
  }

  /// Deterministic central-difference Wirtinger probe, column by column.
  CMat jacobian(const CVec& input, double level) const override {
    check_size(input);
    const double h = probe_step(level, input);
    const Eigen::Index m = input.size();
    CMat jac(m, m);
    CVec probe = input;
    for (Eigen::Index col = 0; col < m; ++col) {
      const Complex x0 = input[col];
      probe[col] = x0 + h;
      const CVec re_plus = denoise(probe, level);
      probe[col] = x0 - h;
      const CVec re_minus = denoise(probe, level);
      probe[col] = x0 + Complex(0.0, h);
      const CVec im_plus = denoise(probe, level);
      probe[col] = x0 - Complex(0.0, h);
      const CVec im_minus = denoise(probe, level);
      probe[col] = x0;
      jac.col(col) = ((re_plus - re_minus) - Complex(0.0, 1.0) * (im_plus - im_minus)) / (4.0 * h);
    }
    return jac;
  }

  CMat jacobian_sum(const CMat& inputs, double level, int n_threads = 1,
                    const CMat* outputs = nullptr) const override {
    const double h = probe_step(level, inputs);
    return mc_jacobian_sum([this](const CVec& x, double lvl) { return denoise(x, lvl); }, inputs,
                           level, h, smoothing_.j2, derive_seed(smoothing_.seed, 0xd1ffULL),
                           n_threads, outputs, smoothing_.probe_clip);
  }

 private:
  void check_size(const CVec& input) const {
    if (static_cast<std::size_t>(input.size()) != n_antennas_)
      throw std::invalid_argument("SrDenoiser: input length does not match the antenna count");
  }

  template <typename Mat>
  double probe_step(double level, const Mat& fallback_scale) const {
    double h = smoothing_.fd_step * level;
    if (h > 0.0) return h;
    // Zero level (noiseless runs): fall back to a scale-relative step.
    const double rms = fallback_scale.norm() / std::sqrt(static_cast<double>(fallback_scale.size()));
    return 1e-9 * (1.0 + rms);
  }

  GreedyConfig greedy_;
  SmoothingConfig smoothing_;
  SelectionGrid grid_;
  std::size_t n_antennas_;
  std::vector<CVec> unit_draws_;
};

}  // namespace ampdet
