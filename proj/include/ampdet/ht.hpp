#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "ampdet/denoiser.hpp"
#include "ampdet/scenario.hpp"
#include "ampdet/types.hpp"

namespace ampdet {

/// Overcomplete steering dictionary on the uniform grid f'_k = k / grid_size.
struct Dictionary {
  CMat atoms;  // M x grid_size, unit-norm columns

  std::size_t n_antennas() const { return static_cast<std::size_t>(atoms.rows()); }
  std::size_t grid_size() const { return static_cast<std::size_t>(atoms.cols()); }
  double oversample_factor() const {
    return static_cast<double>(atoms.cols()) / static_cast<double>(atoms.rows());
  }
};

inline Dictionary build_dictionary(std::size_t n_antennas, double oversample) {
  if (!(oversample >= 1.0)) throw std::invalid_argument("build_dictionary: oversample must be >= 1");
  const std::size_t grid = static_cast<std::size_t>(
      std::llround(oversample * static_cast<double>(n_antennas)));
  Dictionary dict;
  dict.atoms.resize(static_cast<Eigen::Index>(n_antennas), static_cast<Eigen::Index>(grid));
  for (std::size_t k = 0; k < grid; ++k)
    dict.atoms.col(static_cast<Eigen::Index>(k)) =
        steering(static_cast<double>(k) / static_cast<double>(grid), n_antennas);
  return dict;
}

struct HtParams {
  Dictionary dictionary;
  /// Gaussian smoothing width of the magnitude threshold, as a fraction of
  /// the level.
  double smooth_eps = 0.05;
  bool smoothing_enabled = true;
};

inline HtParams make_ht_params(std::size_t n_antennas, double oversample = 4.0,
                               double smooth_eps = 0.05, bool smoothing_enabled = true) {
  return HtParams{build_dictionary(n_antennas, oversample), smooth_eps, smoothing_enabled};
}

namespace detail {

inline double gaussian_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

inline double gaussian_pdf(double z) {
  return 0.39894228040143267794 * std::exp(-0.5 * z * z);
}

/// Hard gate on |v| > level, or its Gaussian-CDF smoothing.
inline double ht_gate(double magnitude, double level, double eps) {
  if (eps <= 0.0) return magnitude > level ? 1.0 : 0.0;
  return gaussian_cdf((magnitude - level) / eps);
}

/// Wirtinger derivative of v * gate(|v|): gate + |v| pdf / (2 eps) when
/// smoothed, the plain indicator otherwise.
inline double ht_gate_derivative(double magnitude, double level, double eps) {
  if (eps <= 0.0) return magnitude > level ? 1.0 : 0.0;
  const double z = (magnitude - level) / eps;
  return gaussian_cdf(z) + magnitude * gaussian_pdf(z) / (2.0 * eps);
}

}  // namespace detail

/// On-grid thresholding denoiser: gate the dictionary correlations, then
/// resynthesize through the canonical dual frame (M / grid_size) * A, which
/// reduces to the plain synthesis A at oversample = 1.
inline CVec ht_denoise(const CVec& input, double level, const HtParams& params) {
  const CMat& a = params.dictionary.atoms;
  const double eps = params.smoothing_enabled ? params.smooth_eps * level : 0.0;
  CVec coeff = a.adjoint() * input;
  for (Eigen::Index k = 0; k < coeff.size(); ++k)
    coeff[k] *= detail::ht_gate(std::abs(coeff[k]), level, eps);
  const double dual = static_cast<double>(a.rows()) / static_cast<double>(a.cols());
  return dual * (a * coeff);
}

/// Wirtinger Jacobian (M / grid_size) * A diag(gate') A^H.
inline CMat ht_jacobian(const CVec& input, double level, const HtParams& params) {
  const CMat& a = params.dictionary.atoms;
  const double eps = params.smoothing_enabled ? params.smooth_eps * level : 0.0;
  CVec coeff = a.adjoint() * input;
  RVec gate(coeff.size());
  for (Eigen::Index k = 0; k < coeff.size(); ++k)
    gate[k] = detail::ht_gate_derivative(std::abs(coeff[k]), level, eps);
  const double dual = static_cast<double>(a.rows()) / static_cast<double>(a.cols());
  return dual * (a * gate.asDiagonal() * a.adjoint());
}

class HtDenoiser final : public RowDenoiser {
 public:
  explicit HtDenoiser(HtParams params) : params_(std::move(params)) {}

  HtDenoiser(std::size_t n_antennas, double oversample = 4.0, double smooth_eps = 0.05,
             bool smoothing_enabled = true)
      : params_(make_ht_params(n_antennas, oversample, smooth_eps, smoothing_enabled)) {}

  std::string name() const override { return "ht"; }

  const HtParams& params() const { return params_; }

  CVec denoise(const CVec& input, double level) const override {
    return ht_denoise(input, level, params_);
  }

  CMat jacobian(const CVec& input, double level) const override {
    return ht_jacobian(input, level, params_);
  }

  // The summed Jacobian only needs the summed gate derivatives on the grid.
  CMat jacobian_sum(const CMat& inputs, double level, int /*n_threads*/ = 1,
                    const CMat* /*outputs*/ = nullptr) const override {
    const CMat& a = params_.dictionary.atoms;
    const double eps = params_.smoothing_enabled ? params_.smooth_eps * level : 0.0;
    CMat coeffs = a.adjoint() * inputs.transpose();  // grid x N
    RVec gate_sum = RVec::Zero(coeffs.rows());
    for (Eigen::Index c = 0; c < coeffs.cols(); ++c)
      for (Eigen::Index k = 0; k < coeffs.rows(); ++k)
        gate_sum[k] += detail::ht_gate_derivative(std::abs(coeffs(k, c)), level, eps);
    const double dual = static_cast<double>(a.rows()) / static_cast<double>(a.cols());
    return dual * (a * gate_sum.asDiagonal() * a.adjoint());
  }

 private:
  HtParams params_;
};

}  // namespace ampdet
