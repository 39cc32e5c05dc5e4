#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

namespace slowpass {

namespace detail {

/**
 * Weideman's rational series for w(z) = exp(-z^2) erfc(-iz), Im z >= 0:
 *
 *   w(z) = 2 p(Z) / (L - iz)^2 + 1 / (sqrt(pi) (L - iz)),  Z = (L + iz)/(L - iz)
 *
 * with p a degree N-1 polynomial whose coefficients are cosine sums of
 * exp(-t^2)(L^2 + t^2) on t = L tan(theta/2).
 */
template <int N>
struct WeidemanTable {
  double L;
  std::array<double, N> a;  // a[n-1] multiplies Z^{n-1}

  WeidemanTable() : L(std::sqrt(N / std::numbers::sqrt2)), a{} {
    constexpr int M = 2 * N;
    std::array<double, 2 * M> f{};
    for (int k = -M + 1; k < M; ++k) {
      const double theta = k * std::numbers::pi / M;
      const double t = L * std::tan(0.5 * theta);
      f[static_cast<std::size_t>(k + M)] = std::exp(-t * t) * (L * L + t * t);
    }
    for (int n = 1; n <= N; ++n) {
      double acc = 0.0;
      for (int k = -M + 1; k < M; ++k) {
        acc += f[static_cast<std::size_t>(k + M)] * std::cos(std::numbers::pi * n * k / M);
      }
      a[static_cast<std::size_t>(n - 1)] = acc / (2 * M);
    }
  }
};

inline const WeidemanTable<64>& weideman_table() {
  static const WeidemanTable<64> table;
  return table;
}

inline std::complex<double> faddeeva_upper(std::complex<double> z) {
  const auto& t = weideman_table();
  const std::complex<double> i(0.0, 1.0);
  const std::complex<double> lmz = t.L - i * z;
  const std::complex<double> Z = (t.L + i * z) / lmz;
  std::complex<double> p = 0.0;
  for (std::size_t n = t.a.size(); n-- > 0;) p = p * Z + t.a[n];
  return 2.0 * p / (lmz * lmz) + 1.0 / (std::sqrt(std::numbers::pi) * lmz);
}

}  // namespace detail

/// Faddeeva function w(z) = exp(-z^2) erfc(-iz); about 1e-13 relative accuracy.
inline std::complex<double> faddeeva_w(std::complex<double> z) {
  if (z.imag() >= 0.0) return detail::faddeeva_upper(z);
  return 2.0 * std::exp(-z * z) - detail::faddeeva_upper(-z);
}

/// exp(z^2) erfc(z), the scaled complementary error function.
inline std::complex<double> erfcx(std::complex<double> z) {
  return faddeeva_w(std::complex<double>(0.0, 1.0) * z);
}

/// Complex error function.
inline std::complex<double> erf(std::complex<double> z) {
  if (z.real() >= 0.0) return 1.0 - std::exp(-z * z) * erfcx(z);
  return std::exp(-z * z) * erfcx(-z) - 1.0;
}

}  // namespace slowpass
