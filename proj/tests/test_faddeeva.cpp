#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "slowpass/faddeeva.hpp"

using slowpass::faddeeva_w;
using C = std::complex<double>;

namespace {

// w(z) = (i/pi) int exp(-t^2) / (z - t) dt for Im z > 0, composite Simpson on [-12, 12].
C w_quadrature(C z) {
  const int n = 40000;
  const double a = -12.0, b = 12.0, h = (b - a) / n;
  C acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double t = a + k * h;
    const double wgt = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += wgt * std::exp(-t * t) / (z - t);
  }
  return C(0.0, 1.0) / std::numbers::pi * acc * (h / 3.0);
}

// Dawson integral by Simpson on exp(t^2 - x^2).
double dawson(double x) {
  const int n = 20000;
  const double h = x / n;
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double t = k * h;
    const double wgt = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += wgt * std::exp(t * t - x * x);
  }
  return acc * h / 3.0;
}

}  // namespace

TEST(Faddeeva, ImaginaryAxisIsScaledErfc) {
  for (double y = -2.5; y <= 6.0; y += 0.25) {
    const C w = faddeeva_w(C(0.0, y));
    const double ref = std::exp(y * y) * std::erfc(y);
    EXPECT_NEAR(w.real(), ref, 1e-12 * std::max(1.0, ref)) << "y=" << y;
    EXPECT_NEAR(w.imag(), 0.0, 1e-12 * std::max(1.0, ref));
  }
}

TEST(Faddeeva, RealAxisIsGaussianPlusDawson) {
  for (double x : {-3.0, -1.2, 0.3, 1.0, 2.5, 4.0}) {
    const C w = faddeeva_w(C(x, 0.0));
    EXPECT_NEAR(w.real(), std::exp(-x * x), 1e-12);
    EXPECT_NEAR(w.imag(), 2.0 / std::sqrt(std::numbers::pi) * dawson(x), 1e-11) << "x=" << x;
  }
}

TEST(Faddeeva, UpperHalfPlaneMatchesQuadrature) {
  for (C z : {C(0.5, 0.5), C(-1.3, 0.8), C(2.0, 1.5), C(4.0, 0.6), C(-0.2, 3.0)}) {
    const C w = faddeeva_w(z);
    const C ref = w_quadrature(z);
    EXPECT_NEAR(std::abs(w - ref), 0.0, 1e-10 * std::abs(ref)) << z;
  }
}

TEST(Faddeeva, ReflectionSymmetries) {
  for (C z : {C(0.7, -0.4), C(-2.0, -1.1), C(1.5, 2.5), C(-3.0, 0.2)}) {
    const C w = faddeeva_w(z);
    EXPECT_NEAR(std::abs(faddeeva_w(-std::conj(z)) - std::conj(w)), 0.0, 1e-12 * std::abs(w));
    EXPECT_NEAR(std::abs(faddeeva_w(-z) - (2.0 * std::exp(-z * z) - w)), 0.0, 1e-12 * std::abs(w));
  }
}

TEST(Faddeeva, ComplexErfOnRealLine) {
  for (double x : {-4.0, -1.0, -0.1, 0.0, 0.5, 2.0, 5.0}) {
    const C e = slowpass::erf(C(x, 0.0));
    EXPECT_NEAR(e.real(), std::erf(x), 1e-13);
    EXPECT_NEAR(e.imag(), 0.0, 1e-13);
  }
}

TEST(Faddeeva, ErfcxLargeArgumentAsymptote) {
  for (double x : {10.0, 30.0, 100.0}) {
    const C v = slowpass::erfcx(C(x, 0.0));
    const double asym = 1.0 / (std::sqrt(std::numbers::pi) * x) * (1.0 - 0.5 / (x * x) + 0.75 / std::pow(x, 4));
    EXPECT_NEAR(v.real(), asym, 2.0 * std::abs(asym) / std::pow(x, 6));
  }
}
