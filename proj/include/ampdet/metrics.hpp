#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ampdet/types.hpp"

namespace ampdet {

/// l1 norm of a complex row: sum of entry magnitudes.
inline double row_l1_norm(const CMat& mat, Eigen::Index row) {
  return mat.row(row).cwiseAbs().sum();
}

/// Declares user n active when ||x_n||_1 > threshold (strict).
inline std::vector<std::uint8_t> detect(const CMat& estimate, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("detect: threshold must be >= 0");
  std::vector<std::uint8_t> declared(static_cast<std::size_t>(estimate.rows()));
  for (Eigen::Index n = 0; n < estimate.rows(); ++n)
    declared[static_cast<std::size_t>(n)] = row_l1_norm(estimate, n) > threshold ? 1 : 0;
  return declared;
}

/// ||estimate - truth||_F / ||truth||_F (not squared).
inline double nmse(const CMat& estimate, const CMat& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw std::invalid_argument("nmse: shape mismatch");
  const double denom = truth.norm();
  if (denom == 0.0) throw std::invalid_argument("nmse: undefined for zero truth");
  return (estimate - truth).norm() / denom;
}

struct ErrorRates {
  double pfa = 0.0;
  double pmd = 0.0;
};

inline ErrorRates error_rates(const std::vector<std::uint8_t>& declared,
                              const std::vector<std::uint8_t>& truth_activity) {
  if (declared.size() != truth_activity.size())
    throw std::invalid_argument("error_rates: length mismatch");
  std::size_t n_active = 0, n_inactive = 0, false_alarms = 0, misses = 0;
  for (std::size_t n = 0; n < declared.size(); ++n) {
    if (truth_activity[n]) {
      ++n_active;
      if (!declared[n]) ++misses;
    } else {
      ++n_inactive;
      if (declared[n]) ++false_alarms;
    }
  }
  ErrorRates rates;
  rates.pfa = static_cast<double>(false_alarms) / static_cast<double>(std::max<std::size_t>(1, n_inactive));
  rates.pmd = static_cast<double>(misses) / static_cast<double>(std::max<std::size_t>(1, n_active));
  return rates;
}

struct DetectionResult {
  std::vector<std::uint8_t> declared_active;
  double threshold = 0.0;
  double pfa = 0.0;
  double pmd = 0.0;
  double nmse = 0.0;
};

inline DetectionResult evaluate_detection(const CMat& estimate, const CMat& truth,
                                          const std::vector<std::uint8_t>& truth_activity,
                                          double threshold) {
  DetectionResult result;
  result.threshold = threshold;
  result.declared_active = detect(estimate, threshold);
  const ErrorRates rates = error_rates(result.declared_active, truth_activity);
  result.pfa = rates.pfa;
  result.pmd = rates.pmd;
  result.nmse = nmse(estimate, truth);
  return result;
}

struct RocPoint {
  double threshold = 0.0;
  double pfa = 0.0;
  double pmd = 0.0;
};

/// Sweeps the detection threshold over an ascending grid. pfa is
/// non-increasing and pmd non-decreasing along the result.
inline std::vector<RocPoint> roc_sweep(const CMat& estimate,
                                       const std::vector<std::uint8_t>& truth_activity,
                                       const std::vector<double>& threshold_grid) {
  std::vector<RocPoint> points;
  points.reserve(threshold_grid.size());
  for (double threshold : threshold_grid) {
    const ErrorRates rates = error_rates(detect(estimate, threshold), truth_activity);
    points.push_back(RocPoint{threshold, rates.pfa, rates.pmd});
  }
  return points;
}

/// Default operating threshold: log-scale midpoint between the median l1
/// norm of the declared-zero row cluster and of the nonzero cluster.
/// Thresholding denoisers leave the zero cluster at exactly 0 (floored at
/// 1e-9 times the nonzero median so the log midpoint stays defined); a
/// smoothed denoiser leaves every row slightly nonzero, in which case the
/// clusters are split at the largest multiplicative gap in the sorted norms.
inline double default_detection_threshold(const CMat& estimate) {
  std::vector<double> zero_norms, nonzero_norms;
  for (Eigen::Index n = 0; n < estimate.rows(); ++n) {
    const double l1 = row_l1_norm(estimate, n);
    (l1 > 0.0 ? nonzero_norms : zero_norms).push_back(l1);
  }
  if (nonzero_norms.empty()) return 0.0;
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    return v[v.size() / 2];
  };
  std::sort(nonzero_norms.begin(), nonzero_norms.end());
  if (zero_norms.empty() && nonzero_norms.size() >= 2) {
    std::size_t split = 0;
    double best_gap = 0.0;
    for (std::size_t i = 0; i + 1 < nonzero_norms.size(); ++i) {
      const double gap = nonzero_norms[i + 1] / nonzero_norms[i];
      if (gap > best_gap) {
        best_gap = gap;
        split = i + 1;
      }
    }
    if (best_gap > 10.0) {
      const double med_lo = median({nonzero_norms.begin(), nonzero_norms.begin() + static_cast<std::ptrdiff_t>(split)});
      const double med_hi = median({nonzero_norms.begin() + static_cast<std::ptrdiff_t>(split), nonzero_norms.end()});
      return std::sqrt(med_lo * med_hi);
    }
  }
  const double med_nonzero = median(nonzero_norms);
  const double med_zero =
      std::max(zero_norms.empty() ? nonzero_norms.front() : median(zero_norms),
               1e-9 * med_nonzero);
  return std::sqrt(med_zero * med_nonzero);
}

/// Log-spaced threshold grid spanning the row-norm range of an estimate.
inline std::vector<double> auto_threshold_grid(const CMat& estimate, std::size_t count = 50) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Eigen::Index n = 0; n < estimate.rows(); ++n) {
    const double l1 = row_l1_norm(estimate, n);
    if (l1 > 0.0) lo = std::min(lo, l1);
    hi = std::max(hi, l1);
  }
  std::vector<double> grid;
  if (hi == 0.0 || count == 0) return grid;
  lo = std::max(lo * 0.5, hi * 1e-12);
  hi *= 2.0;
  grid.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    grid.push_back(lo * std::pow(hi / lo, t));
  }
  return grid;
}

}  // namespace ampdet
