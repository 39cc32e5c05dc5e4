#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slowpass {

/// Raised when a run leaves the finite / bounded regime.
class BlowUpError : public std::runtime_error {
public:
  BlowUpError(double t, std::size_t index, const std::string& what)
      : std::runtime_error(what), t_(t), index_(index) {}

  double time() const noexcept { return t_; }
  std::size_t index() const noexcept { return index_; }

private:
  double t_;
  std::size_t index_;
};

/// Fixed-point iteration inside an implicit step did not converge.
class StepFailure : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// No quasi-stationary state could be found (Newton stalled, no bracket, ...).
class NoQssError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A truncated mode sum or a sampled series is too coarse for the request.
class ResolutionError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class PreconditionError : public std::logic_error {
  using std::logic_error::logic_error;
};

class NotBurstingError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class NoFrontError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace slowpass
