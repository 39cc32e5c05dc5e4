#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace slowpass {

/**
 * Uniform mesh on [-L, L] with N points, both end points included.
 *
 * x_j = -L + j*dx, dx = 2L/(N-1), evaluated as L(2j - (N-1))/(N-1) so the end
 * points are exactly -L and +L and mirrored data (x -> -x) maps point j onto
 * N-1-j bit for bit.
 */
class Grid1D {
public:
  Grid1D(double half_length, std::size_t n_points) : L_(half_length), n_(n_points) {
    if (!(half_length > 0.0) || !std::isfinite(half_length)) {
      throw std::invalid_argument("Grid1D: half_length must be positive and finite");
    }
    if (n_points < 3) {
      throw std::invalid_argument("Grid1D: at least 3 points required, got " +
                                  std::to_string(n_points));
    }
    dx_ = 2.0 * L_ / static_cast<double>(n_ - 1);
  }

  double half_length() const noexcept { return L_; }
  std::size_t size() const noexcept { return n_; }
  double dx() const noexcept { return dx_; }

  double x(std::size_t j) const noexcept {
    const auto m = static_cast<double>(n_ - 1);
    return L_ * (2.0 * static_cast<double>(j) - m) / m;
  }

  std::vector<double> points() const {
    std::vector<double> xs(n_);
    for (std::size_t j = 0; j < n_; ++j) xs[j] = x(j);
    return xs;
  }

  /// Index of the grid point nearest to position xq (clamped to the domain).
  std::size_t nearest_index(double xq) const noexcept {
    double s = (xq + L_) / dx_;
    if (s <= 0.0) return 0;
    auto j = static_cast<std::size_t>(std::lround(s));
    return j >= n_ ? n_ - 1 : j;
  }

  /// Trapezoid quadrature weight of point j (half weight at the two ends).
  double weight(std::size_t j) const noexcept {
    return (j == 0 || j == n_ - 1) ? 0.5 * dx_ : dx_;
  }

  bool operator==(const Grid1D& o) const noexcept { return L_ == o.L_ && n_ == o.n_; }

private:
  double L_;
  std::size_t n_;
  double dx_;
};

inline Grid1D build_grid(double half_length, std::size_t n_points) {
  return Grid1D(half_length, n_points);
}

}  // namespace slowpass
