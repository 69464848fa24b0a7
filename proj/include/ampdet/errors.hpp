#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ampdet {

/// AMP iterates went non-finite or the residual ran away.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(std::size_t iteration, const std::string& what)
      : std::runtime_error(what), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Steering system is (numerically) rank deficient, e.g. duplicate frequencies.
class IllConditionedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScenarioIoStatus {
  kBadMagic,
  kTruncated,
  kDimensionMismatch,
  kTrailingData,
  kIoFailure,
};

class ScenarioIoError : public std::runtime_error {
 public:
  ScenarioIoError(ScenarioIoStatus status, const std::string& what)
      : std::runtime_error(what), status_(status) {}
  ScenarioIoStatus status() const noexcept { return status_; }

 private:
  ScenarioIoStatus status_;
};

/// Matrix handed to hermitian_sqrt has a significantly negative eigenvalue.
class NotPsdError : public std::runtime_error {
 public:
  NotPsdError(double most_negative_eigenvalue, const std::string& what)
      : std::runtime_error(what), eigenvalue_(most_negative_eigenvalue) {}
  double most_negative_eigenvalue() const noexcept { return eigenvalue_; }

 private:
  double eigenvalue_;
};

}  // namespace ampdet
