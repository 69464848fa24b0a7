#pragma once

#include <string>
#include <vector>

#include "ampdet/denoiser.hpp"
#include "ampdet/types.hpp"

namespace ampdet {

/// Group soft-thresholding: zero the vector when its l2 norm is below the
/// level, otherwise shrink the norm by it. The x = 0 input maps to 0
/// (continuous extension of the closed form).
inline CVec gst_denoise(const CVec& input, double level) {
  const double r = input.norm();
  if (r == 0.0 || r < level) return CVec::Zero(input.size());
  return input * ((r - level) / r);
}

/// Wirtinger Jacobian of gst_denoise:
/// [I - (level/r) I + level x x^H / (2 r^3)] above the threshold (>= branch),
/// zero below it.
inline CMat gst_jacobian(const CVec& input, double level) {
  const Eigen::Index m = input.size();
  if (level == 0.0) return CMat::Identity(m, m);
  const double r = input.norm();
  if (r == 0.0 || r < level) return CMat::Zero(m, m);
  CMat jac = (1.0 - level / r) * CMat::Identity(m, m);
  jac.noalias() += (level / (2.0 * r * r * r)) * (input * input.adjoint());
  return jac;
}

class GstDenoiser final : public RowDenoiser {
 public:
  std::string name() const override { return "gst"; }

  CVec denoise(const CVec& input, double level) const override {
    return gst_denoise(input, level);
  }

  CMat jacobian(const CVec& input, double level) const override {
    return gst_jacobian(input, level);
  }

  // Batched form: sum = alpha I + sum_n beta_n x_n x_n^H collapses into one
  // small GEMM over the rows that pass the threshold.
  CMat jacobian_sum(const CMat& inputs, double level, int /*n_threads*/ = 1,
                    const CMat* /*outputs*/ = nullptr) const override {
    const Eigen::Index n = inputs.rows();
    const Eigen::Index m = inputs.cols();
    if (level == 0.0) return static_cast<double>(n) * CMat::Identity(m, m);
    double alpha = 0.0;
    std::vector<Eigen::Index> active;
    std::vector<double> beta;
    active.reserve(static_cast<std::size_t>(n));
    beta.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = inputs.row(i).norm();
      if (r == 0.0 || r < level) continue;
      alpha += 1.0 - level / r;
      active.push_back(i);
      beta.push_back(level / (2.0 * r * r * r));
    }
    CMat acc = alpha * CMat::Identity(m, m);
    if (!active.empty()) {
      CMat rows(static_cast<Eigen::Index>(active.size()), m);
      RVec weights(static_cast<Eigen::Index>(active.size()));
      for (std::size_t k = 0; k < active.size(); ++k) {
        rows.row(static_cast<Eigen::Index>(k)) = inputs.row(active[k]);
        weights[static_cast<Eigen::Index>(k)] = beta[k];
      }
      acc.noalias() += rows.transpose() * weights.asDiagonal() * rows.conjugate();
    }
    return acc;
  }
};

}  // namespace ampdet
