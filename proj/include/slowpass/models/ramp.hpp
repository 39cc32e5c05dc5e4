#pragma once

#include <stdexcept>

namespace slowpass {

/// Slow linear parameter drift: value(t) = initial + direction * rate * t.
struct RampSpec {
  enum class Direction { increasing = 1, decreasing = -1 };

  double initial = 0.0;
  double rate = 0.0;
  Direction direction = Direction::increasing;

  static RampSpec increasing(double initial, double rate) {
    return {initial, rate, Direction::increasing};
  }
  static RampSpec decreasing(double initial, double rate) {
    return {initial, rate, Direction::decreasing};
  }

  double signed_rate() const noexcept {
    return direction == Direction::increasing ? rate : -rate;
  }
  double value(double t) const noexcept { return initial + signed_rate() * t; }

  /// Time at which the ramp reaches `v`; throws when the ramp is frozen.
  double time_of(double v) const {
    if (rate == 0.0) throw std::domain_error("RampSpec::time_of on a frozen ramp");
    return (v - initial) / signed_rate();
  }

  /// True when `a` comes before `b` along the ramp direction.
  bool precedes(double a, double b) const noexcept {
    return direction == Direction::increasing ? a < b : a > b;
  }
};

}  // namespace slowpass
