#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "slowpass/grid.hpp"

namespace slowpass {

using Complex = std::complex<double>;
using RealField = std::vector<double>;
using ComplexField = std::vector<Complex>;

namespace detail {

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};

inline void require_size(std::size_t n, const Grid1D& g, const char* who) {
  if (n != g.size()) {
    throw std::invalid_argument(std::string(who) + ": field has " + std::to_string(n) +
                                " points, grid has " + std::to_string(g.size()));
  }
}

}  // namespace detail

/// Second difference with zero-flux ends (ghost points f_{-1}=f_1, f_N=f_{N-2}).
template <class T>
std::vector<T> apply_laplacian(std::span<const T> f, const Grid1D& g) {
  detail::require_size(f.size(), g, "apply_laplacian");
  const std::size_t n = f.size();
  const double inv = 1.0 / (g.dx() * g.dx());
  std::vector<T> out(n);
  out[0] = (f[1] - f[0]) * (2.0 * inv);
  for (std::size_t j = 1; j + 1 < n; ++j) out[j] = (f[j - 1] - 2.0 * f[j] + f[j + 1]) * inv;
  out[n - 1] = (f[n - 2] - f[n - 1]) * (2.0 * inv);
  return out;
}

template <class T>
std::vector<T> apply_laplacian(const std::vector<T>& f, const Grid1D& g) {
  return apply_laplacian(std::span<const T>(f), g);
}

/**
 * Crank-Nicolson propagator for u_t = d u_xx with zero-flux ends.
 *
 * The implicit matrix (I - r L), r = d*dt/2, is tridiagonal; its Thomas
 * factorization is computed once so repeated substeps with the same (d, dt)
 * cost one forward/back sweep each. With Re(d) >= 0 the matrix is diagonally
 * dominant and no pivoting is needed.
 */
class CrankNicolsonDiffusion {
public:
  CrankNicolsonDiffusion(const Grid1D& grid, Complex diffusivity, double dt)
      : grid_(grid), d_(diffusivity), dt_(dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("diffusion_substep: dt must be positive");
    if (diffusivity.real() < 0.0) {
      throw std::invalid_argument("diffusion_substep: negative real diffusivity (backward heat)");
    }
    const std::size_t n = grid.size();
    r_ = d_ * dt_ / (2.0 * grid.dx() * grid.dx());
    // rows: lower[j] u_{j-1} + diag u_j + upper[j] u_{j+1}
    lower_.assign(n, -r_);
    upper_.assign(n, -r_);
    diag_.assign(n, 1.0 + 2.0 * r_);
    upper_[0] = -2.0 * r_;
    lower_[n - 1] = -2.0 * r_;
    lower_[0] = 0.0;
    upper_[n - 1] = 0.0;
    // forward elimination coefficients
    cprime_.resize(n);
    denom_.resize(n);
    denom_[0] = diag_[0];
    cprime_[0] = upper_[0] / denom_[0];
    for (std::size_t j = 1; j < n; ++j) {
      denom_[j] = diag_[j] - lower_[j] * cprime_[j - 1];
      cprime_[j] = upper_[j] / denom_[j];
    }
  }

  const Grid1D& grid() const noexcept { return grid_; }
  Complex diffusivity() const noexcept { return d_; }
  double dt() const noexcept { return dt_; }
  bool is_identity() const noexcept { return d_ == Complex(0.0, 0.0); }

  /// In-place step for a real or complex field. Real fields need a real diffusivity.
  template <class T>
  void apply(std::span<T> u) const {
    detail::require_size(u.size(), grid_, "diffusion_substep");
    if (is_identity()) return;
    if constexpr (!detail::is_complex<T>::value) {
      if (d_.imag() != 0.0) {
        throw std::invalid_argument("diffusion_substep: complex diffusivity on a real field");
      }
    }
    const std::size_t n = u.size();
    rhs_buffer<T>().resize(n);
    auto& b = rhs_buffer<T>();
    const auto r = scalar<T>(r_);
    b[0] = u[0] + r * (2.0 * (u[1] - u[0]));
    for (std::size_t j = 1; j + 1 < n; ++j) b[j] = u[j] + r * (u[j - 1] - 2.0 * u[j] + u[j + 1]);
    b[n - 1] = u[n - 1] + r * (2.0 * (u[n - 2] - u[n - 1]));
    // Thomas sweep
    b[0] = b[0] / scalar<T>(denom_[0]);
    for (std::size_t j = 1; j < n; ++j) {
      b[j] = (b[j] - scalar<T>(lower_[j]) * b[j - 1]) / scalar<T>(denom_[j]);
    }
    u[n - 1] = b[n - 1];
    for (std::size_t j = n - 1; j-- > 0;) u[j] = b[j] - scalar<T>(cprime_[j]) * u[j + 1];
  }

  template <class T>
  void apply(std::vector<T>& u) const {
    apply(std::span<T>(u));
  }

  /// Solve (I - r L) u = b for u, overwriting b. Used by the monolithic CN integrator.
  template <class T>
  void solve_implicit(std::span<T> b) const {
    const std::size_t n = b.size();
    b[0] = b[0] / scalar<T>(denom_[0]);
    for (std::size_t j = 1; j < n; ++j) {
      b[j] = (b[j] - scalar<T>(lower_[j]) * b[j - 1]) / scalar<T>(denom_[j]);
    }
    for (std::size_t j = n - 1; j-- > 0;) b[j] = b[j] - scalar<T>(cprime_[j]) * b[j + 1];
  }

  /// b = (I + r L) u.
  template <class T>
  void apply_explicit(std::span<const T> u, std::span<T> b) const {
    const std::size_t n = u.size();
    const auto r = scalar<T>(r_);
    b[0] = u[0] + r * (2.0 * (u[1] - u[0]));
    for (std::size_t j = 1; j + 1 < n; ++j) b[j] = u[j] + r * (u[j - 1] - 2.0 * u[j] + u[j + 1]);
    b[n - 1] = u[n - 1] + r * (2.0 * (u[n - 2] - u[n - 1]));
  }

private:
  template <class T>
  static T scalar(Complex c) {
    if constexpr (detail::is_complex<T>::value) {
      return c;
    } else {
      return c.real();
    }
  }

  template <class T>
  std::vector<T>& rhs_buffer() const {
    if constexpr (detail::is_complex<T>::value) {
      return cbuf_;
    } else {
      return rbuf_;
    }
  }

  Grid1D grid_;
  Complex d_;
  double dt_;
  Complex r_{};
  std::vector<Complex> lower_, upper_, diag_, cprime_, denom_;
  mutable std::vector<Complex> cbuf_;
  mutable std::vector<double> rbuf_;
};

/// One Crank-Nicolson step of u_t = d u_xx over dt. Constant fields are fixed points.
template <class T>
std::vector<T> diffusion_substep(std::vector<T> f, Complex diffusivity, double dt,
                                 const Grid1D& g) {
  detail::require_size(f.size(), g, "diffusion_substep");
  CrankNicolsonDiffusion op(g, diffusivity, dt);
  op.apply(f);
  return f;
}

/**
 * Discrete symbol of the zero-flux Laplacian for cosine mode m:
 * L cos(pi m j/(N-1)) = -k2 cos(pi m j/(N-1)), k2 = (4/dx^2) sin^2(pi m / (2(N-1))).
 */
inline double discrete_symbol(std::size_t m, const Grid1D& g) {
  const double s = std::sin(std::numbers::pi * static_cast<double>(m) /
                            (2.0 * static_cast<double>(g.size() - 1)));
  return 4.0 * s * s / (g.dx() * g.dx());
}

/// Mode index m carries wavenumber m*pi/(2L): cos(m*pi*(x+L)/(2L)) spans the zero-flux basis.
inline double mode_wavenumber(std::size_t m, const Grid1D& g) {
  return std::numbers::pi * static_cast<double>(m) / (2.0 * g.half_length());
}

inline double cosine_mode(std::size_t m, double x, const Grid1D& g) {
  return std::cos(mode_wavenumber(m, g) * (x + g.half_length()));
}

struct ModeEnergy {
  std::size_t index;
  double wavenumber;
  double energy;
};

/**
 * Energy spectrum in the zero-flux cosine basis.
 *
 * `coefficients[m]` are the DCT-I amplitudes (f_j = sum_m c_m cos(pi m j/(N-1))),
 * `modes[m].energy` the share of the trapezoid energy sum_j w_j |f_j|^2.
 */
struct Spectrum {
  std::vector<Complex> coefficients;
  std::vector<ModeEnergy> modes;
  double total_energy = 0.0;
};

namespace detail {

inline double dct_norm(std::size_t m, std::size_t n_points) {
  const double M = static_cast<double>(n_points - 1);
  return (m == 0 || m == n_points - 1) ? M : 0.5 * M;
}

/// cos(pi q / M) for q = 0 .. 2M-1, used as a lookup by (m*j mod 2M).
inline std::vector<double> cos_table(std::size_t M) {
  std::vector<double> t(2 * M);
  for (std::size_t q = 0; q < 2 * M; ++q) {
    t[q] = std::cos(std::numbers::pi * static_cast<double>(q) / static_cast<double>(M));
  }
  return t;
}

}  // namespace detail

template <class T>
Spectrum cosine_spectrum(std::span<const T> f, const Grid1D& g) {
  detail::require_size(f.size(), g, "cosine_spectrum");
  const std::size_t n = f.size();
  const std::size_t M = n - 1;
  const auto table = detail::cos_table(M);
  Spectrum s;
  s.coefficients.resize(n);
  s.modes.resize(n);
  for (std::size_t m = 0; m < n; ++m) {
    Complex acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = (j == 0 || j == M) ? 0.5 : 1.0;
      acc += w * Complex(f[j]) * table[(m * j) % (2 * M)];
    }
    const double norm = detail::dct_norm(m, n);
    s.coefficients[m] = acc / norm;
    s.modes[m] = {m, mode_wavenumber(m, g), std::norm(s.coefficients[m]) * norm * g.dx()};
  }
  for (std::size_t j = 0; j < n; ++j) s.total_energy += g.weight(j) * std::norm(Complex(f[j]));
  return s;
}

template <class T>
Spectrum cosine_spectrum(const std::vector<T>& f, const Grid1D& g) {
  return cosine_spectrum(std::span<const T>(f), g);
}

/// Inverse of cosine_spectrum on the grid points.
inline ComplexField reconstruct(const Spectrum& s, const Grid1D& g) {
  detail::require_size(s.coefficients.size(), g, "reconstruct");
  const std::size_t n = g.size();
  const std::size_t M = n - 1;
  const auto table = detail::cos_table(M);
  ComplexField f(n);
  for (std::size_t j = 0; j < n; ++j) {
    Complex acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) acc += s.coefficients[m] * table[(m * j) % (2 * M)];
    f[j] = acc;
  }
  return f;
}

/// Smallest wavenumber cutoff holding `fraction` of the total energy.
inline double energy_wavenumber_cutoff(const Spectrum& s, double fraction) {
  double acc = 0.0;
  for (const auto& m : s.modes) {
    acc += m.energy;
    if (acc >= fraction * s.total_energy) return m.wavenumber;
  }
  return s.modes.empty() ? 0.0 : s.modes.back().wavenumber;
}

/**
 * Resolution guard: modes up to k_max need dx <= pi / k_max.
 * Returns true when the grid resolves k_max.
 */
inline bool resolves_wavenumber(const Grid1D& g, double k_max) {
  return g.dx() <= std::numbers::pi / k_max;
}

}  // namespace slowpass
