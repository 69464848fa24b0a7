#pragma once

#include <string>

#include "ampdet/types.hpp"

namespace ampdet {

/// Row denoiser contract used by the AMP engine and the state evolution
/// recursion. Implementations must be pure functions of (input, level) plus
/// construction-time parameters, and reentrant: the engine calls them
/// concurrently across rows.
///
/// jacobian() is the Wirtinger derivative d eta / d x with entry (i, m) being
/// the derivative of output i with respect to input m, following the
/// convention 1/2 (d/dRe - j d/dIm).
class RowDenoiser {
 public:
  virtual ~RowDenoiser() = default;

  virtual std::string name() const = 0;

  virtual CVec denoise(const CVec& input, double level) const = 0;

  virtual CMat jacobian(const CVec& input, double level) const = 0;

  /// Sum of jacobian() over the rows of `inputs` (one user per row), as
  /// needed by the Onsager correction. `outputs`, when given, holds the
  /// already-computed denoise() of each row so estimators can reuse it.
  virtual CMat jacobian_sum(const CMat& inputs, double level, int n_threads = 1,
                            const CMat* outputs = nullptr) const {
    (void)n_threads;
    (void)outputs;
    const Eigen::Index m = inputs.cols();
    CMat acc = CMat::Zero(m, m);
    for (Eigen::Index r = 0; r < inputs.rows(); ++r)
      acc += jacobian(inputs.row(r).transpose(), level);
    return acc;
  }
};

}  // namespace ampdet
