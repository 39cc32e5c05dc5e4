#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "slowpass/grid.hpp"
#include "slowpass/models/ramp.hpp"
#include "slowpass/models/source.hpp"
#include "slowpass/spatial.hpp"

namespace slowpass {

/**
 * Complex Ginzburg-Landau with slowly increasing growth rate:
 *
 *   A_t = (mu + i w0) A + eps D A_xx + sqrt(eps) I_app(x) - alpha |A|^2 A,   mu_t = eps
 *
 * alpha = 1 + i alpha_i, D = beta_r + i beta_i.
 */
struct CGLParams {
  double eps = 0.01;
  double omega0 = 0.5;
  double alpha_i = 0.6;
  double beta_r = 1.0;
  double beta_i = 0.0;

  Complex alpha() const noexcept { return {1.0, alpha_i}; }
  Complex diffusion() const noexcept { return {beta_r, beta_i}; }
  Complex lambda(double mu) const noexcept { return {mu, omega0}; }

  void validate() const {
    if (!(eps > 0.0)) throw std::invalid_argument("CGLParams: eps must be positive");
    if (beta_r < 0.0) throw std::invalid_argument("CGLParams: beta_r must be non-negative");
  }
};

/// Pointwise reaction with the source value already evaluated.
inline Complex cgl_reaction(Complex A, double mu, double iapp, const CGLParams& p) noexcept {
  return p.lambda(mu) * A + std::sqrt(p.eps) * iapp - p.alpha() * std::norm(A) * A;
}

/// Reaction part of the CGL right-hand side at position x (diffusion excluded).
inline Complex cgl_rhs(Complex A, double mu, double x, const CGLParams& p,
                       const SourceProfile& s) {
  return cgl_reaction(A, mu, s(x), p);
}

/// CGL bound to a grid, source and ramp; the unit the integrator steps.
class CglSystem {
public:
  using State = Complex;

  CglSystem(CGLParams params, const SourceProfile& source, RampSpec ramp, const Grid1D& grid)
      : params_(params), source_(source), ramp_(ramp), grid_(grid),
        iapp_(source.sample(grid)) {
    params_.validate();
  }

  /// Reaction-only rhs at grid index j and time t. The ramp value is exact in t.
  State reaction(const State& A, std::size_t j, double t) const noexcept {
    return cgl_reaction(A, ramp_.value(t), iapp_[j], params_);
  }

  Complex diffusivity() const noexcept { return params_.eps * params_.diffusion(); }

  static Complex& diffused(State& s) noexcept { return s; }
  static Complex diffused(const State& s) noexcept { return s; }
  static double magnitude(const State& s) noexcept { return std::abs(s); }
  static bool finite(const State& s) noexcept {
    return std::isfinite(s.real()) && std::isfinite(s.imag());
  }

  const CGLParams& params() const noexcept { return params_; }
  const SourceProfile& source() const noexcept { return source_; }
  const RampSpec& ramp() const noexcept { return ramp_; }
  const Grid1D& grid() const noexcept { return grid_; }
  const std::vector<double>& source_values() const noexcept { return iapp_; }

private:
  CGLParams params_;
  SourceProfile source_;
  RampSpec ramp_;
  Grid1D grid_;
  std::vector<double> iapp_;
};

}  // namespace slowpass
