#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "slowpass/grid.hpp"

namespace slowpass {

/**
 * Spatial profile of an applied current / source term.
 *
 * gaussian:  a * exp(-x^2 / (4 sigma))
 * constant:  a
 * tabulated: piecewise-linear through (x, value) samples, scaled by a
 */
class SourceProfile {
public:
  enum class Kind { gaussian, constant, tabulated };

  static SourceProfile gaussian(double amplitude, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian source: sigma must be positive");
    SourceProfile s;
    s.kind_ = Kind::gaussian;
    s.a_ = amplitude;
    s.sigma_ = sigma;
    return s;
  }

  static SourceProfile constant(double amplitude) {
    SourceProfile s;
    s.kind_ = Kind::constant;
    s.a_ = amplitude;
    return s;
  }

  static SourceProfile tabulated(std::vector<double> xs, std::vector<double> values,
                                 double amplitude = 1.0) {
    if (xs.size() != values.size() || xs.size() < 2) {
      throw std::invalid_argument("tabulated source: need >= 2 matching (x, value) samples");
    }
    if (!std::is_sorted(xs.begin(), xs.end()) ||
        std::adjacent_find(xs.begin(), xs.end()) != xs.end()) {
      throw std::invalid_argument("tabulated source: x samples must be strictly increasing");
    }
    SourceProfile s;
    s.kind_ = Kind::tabulated;
    s.a_ = amplitude;
    s.xs_ = std::move(xs);
    s.values_ = std::move(values);
    return s;
  }

  Kind kind() const noexcept { return kind_; }
  double amplitude() const noexcept { return a_; }
  double sigma() const noexcept { return sigma_; }
  const std::vector<double>& table_x() const noexcept { return xs_; }
  const std::vector<double>& table_values() const noexcept { return values_; }

  double operator()(double x) const {
    switch (kind_) {
      case Kind::gaussian:
        return a_ * std::exp(-x * x / (4.0 * sigma_));
      case Kind::constant:
        return a_;
      case Kind::tabulated:
        return a_ * interpolate(x);
    }
    return 0.0;
  }

  /// Second derivative; centered differences for tabulated profiles.
  double second_derivative(double x) const {
    switch (kind_) {
      case Kind::gaussian:
        return (x * x / (4.0 * sigma_ * sigma_) - 1.0 / (2.0 * sigma_)) * (*this)(x);
      case Kind::constant:
        return 0.0;
      case Kind::tabulated: {
        const double h = table_spacing();
        const double lo = xs_.front(), hi = xs_.back();
        double xc = std::clamp(x, lo + h, hi - h);
        return ((*this)(xc - h) - 2.0 * (*this)(xc) + (*this)(xc + h)) / (h * h);
      }
    }
    return 0.0;
  }

  /// Position of max |profile| (first one for ties; 0 for constant and even gaussians).
  double peak_position() const {
    switch (kind_) {
      case Kind::gaussian:
      case Kind::constant:
        return 0.0;
      case Kind::tabulated: {
        std::size_t best = 0;
        for (std::size_t i = 1; i < values_.size(); ++i) {
          if (std::abs(values_[i]) > std::abs(values_[best])) best = i;
        }
        return xs_[best];
      }
    }
    return 0.0;
  }

  std::vector<double> sample(const Grid1D& g) const {
    std::vector<double> v(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) v[j] = (*this)(g.x(j));
    return v;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::gaussian:
        return "gaussian(a=" + std::to_string(a_) + ", sigma=" + std::to_string(sigma_) + ")";
      case Kind::constant:
        return "constant(a=" + std::to_string(a_) + ")";
      case Kind::tabulated:
        return "tabulated(" + std::to_string(xs_.size()) + " samples)";
    }
    return "?";
  }

private:
  double interpolate(double x) const {
    if (x < xs_.front() || x > xs_.back()) {
      throw std::out_of_range("tabulated source queried at x=" + std::to_string(x) +
                              " outside [" + std::to_string(xs_.front()) + ", " +
                              std::to_string(xs_.back()) + "]");
    }
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    if (it == xs_.end()) return values_.back();
    const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
    const double t = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
    return values_[i - 1] + t * (values_[i] - values_[i - 1]);
  }

  double table_spacing() const {
    double h = xs_.back() - xs_.front();
    for (std::size_t i = 1; i < xs_.size(); ++i) h = std::min(h, xs_[i] - xs_[i - 1]);
    return h;
  }

  Kind kind_ = Kind::constant;
  double a_ = 0.0;
  double sigma_ = 1.0;
  std::vector<double> xs_, values_;
};

inline double source_eval(const SourceProfile& p, double x) { return p(x); }

}  // namespace slowpass
