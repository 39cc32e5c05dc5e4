#include <cmath>
#include <complex>
#include <numbers>

#include <gtest/gtest.h>

#include "slowpass/models/cgl.hpp"
#include "slowpass/models/lactotroph.hpp"
#include "slowpass/models/ramp.hpp"
#include "slowpass/models/source.hpp"

using namespace slowpass;

TEST(Source, GaussianValues) {
  EXPECT_DOUBLE_EQ(source_eval(SourceProfile::gaussian(1.0, 50.0), 0.0), 1.0);
  EXPECT_NEAR(source_eval(SourceProfile::gaussian(1.0, 0.25), 1.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(source_eval(SourceProfile::gaussian(1.0, 0.25), 1.0), 0.3679, 5e-5);
  EXPECT_DOUBLE_EQ(source_eval(SourceProfile::constant(1.0), -123.0), 1.0);
  EXPECT_THROW(SourceProfile::gaussian(1.0, 0.0), std::invalid_argument);
}

TEST(Source, GaussianSecondDerivative) {
  const auto s = SourceProfile::gaussian(2.0, 0.7);
  const double h = 1e-4;
  for (double x : {-2.0, -0.3, 0.0, 0.9, 3.0}) {
    const double fd = (s(x - h) - 2.0 * s(x) + s(x + h)) / (h * h);
    EXPECT_NEAR(s.second_derivative(x), fd, 1e-5);
  }
}

TEST(Source, TabulatedInterpolatesAndRejectsOutside) {
  const auto s = SourceProfile::tabulated({-1.0, 0.0, 2.0}, {0.0, 1.0, 3.0}, 2.0);
  EXPECT_DOUBLE_EQ(s(-0.5), 1.0);
  EXPECT_DOUBLE_EQ(s(1.0), 4.0);
  EXPECT_DOUBLE_EQ(s(2.0), 6.0);
  EXPECT_THROW(s(2.5), std::out_of_range);
  EXPECT_THROW(s(-1.01), std::out_of_range);
  EXPECT_DOUBLE_EQ(s.peak_position(), 2.0);
  EXPECT_THROW(SourceProfile::tabulated({0.0, 0.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST(Ramp, ValuesAndDirection) {
  const auto up = RampSpec::increasing(-1.0, 0.01);
  const auto down = RampSpec::decreasing(10.0, 0.001);
  EXPECT_DOUBLE_EQ(up.value(50.0), -0.5);
  EXPECT_DOUBLE_EQ(down.value(1000.0), 9.0);
  EXPECT_DOUBLE_EQ(up.time_of(0.5), 150.0);
  EXPECT_DOUBLE_EQ(down.time_of(4.0), 6000.0);
  EXPECT_TRUE(up.precedes(0.1, 0.2));
  EXPECT_TRUE(down.precedes(0.2, 0.1));
  EXPECT_THROW(RampSpec::increasing(0.0, 0.0).time_of(1.0), std::domain_error);
}

TEST(Cgl, RhsExamples) {
  const CGLParams p;
  const auto zero = SourceProfile::constant(0.0);
  EXPECT_EQ(cgl_rhs({0.0, 0.0}, 0.3, 1.0, p, zero), Complex(0.0, 0.0));

  const auto g = SourceProfile::gaussian(1.0, 0.25);
  const Complex r = cgl_rhs({0.0, 0.0}, -0.7, 0.0, p, g);
  EXPECT_NEAR(r.real(), 0.1, 1e-15);
  EXPECT_EQ(r.imag(), 0.0);

  // (0 + 0.5i)*1 - (1 + 0.6i)*1 = -1 - 0.1i
  const Complex c = cgl_rhs({1.0, 0.0}, 0.0, 0.0, p, zero);
  EXPECT_NEAR(c.real(), -1.0, 1e-15);
  EXPECT_NEAR(c.imag(), -0.1, 1e-15);
}

TEST(Cgl, PhaseEquivariance) {
  const CGLParams p;
  const auto zero = SourceProfile::constant(0.0);
  const Complex A(0.3, -0.8);
  for (double th : {0.4, 1.9, -2.5}) {
    const Complex rot = std::polar(1.0, th);
    const Complex lhs = cgl_rhs(rot * A, 0.2, 0.0, p, zero);
    const Complex rhs = rot * cgl_rhs(A, 0.2, 0.0, p, zero);
    EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-15);
  }
}

TEST(Cgl, ModulusDecaysForNegativeMu) {
  const CGLParams p;
  const auto zero = SourceProfile::constant(0.0);
  for (Complex A : {Complex(0.5, 0.1), Complex(-2.0, 1.0), Complex(0.0, 1e-3)}) {
    const double mu = -0.4;
    const double d = 2.0 * (std::conj(A) * cgl_rhs(A, mu, 0.0, p, zero)).real();
    const double expect = 2.0 * mu * std::norm(A) - 2.0 * std::norm(A) * std::norm(A);
    EXPECT_NEAR(d, expect, 1e-12);
    EXPECT_LT(d, 0.0);
  }
}

TEST(Lactotroph, GatingSteadyStates) {
  const LactotrophParams p;
  EXPECT_DOUBLE_EQ(gating_steady(p.v_n, p).n_inf, 0.5);
  EXPECT_NEAR(gating_steady(p.v_n + p.s_n, p).n_inf, 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(gating_steady(p.v_n + p.s_n, p).n_inf, 0.7311, 5e-5);
  const auto hi = gating_steady(500.0, p);
  EXPECT_NEAR(hi.m_inf, 1.0, 1e-12);
  EXPECT_NEAR(hi.n_inf, 1.0, 1e-12);
  EXPECT_NEAR(hi.a_inf, 1.0, 1e-12);
  EXPECT_NEAR(hi.e_inf, 0.0, 1e-12);
  double prev_n = 0.0, prev_e = 1.0;
  for (double V = -100.0; V <= 40.0; V += 5.0) {
    const auto g = gating_steady(V, p);
    for (double v : {g.m_inf, g.n_inf, g.a_inf, g.e_inf}) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
    EXPECT_GT(g.n_inf, prev_n);
    EXPECT_LT(g.e_inf, prev_e);
    prev_n = g.n_inf;
    prev_e = g.e_inf;
  }
}

TEST(Lactotroph, RhsExamples) {
  LactotrophParams p;
  const auto src = SourceProfile::constant(0.0);
  const double V = -37.0;
  const auto g = gating_steady(V, p);
  const auto r = lactotroph_rhs({V, g.n_inf, 0.2}, 0.0, 1.0, p, src);
  EXPECT_NEAR(r.n, 0.0, 1e-16);

  LactotrophParams off = p;
  off.g_Ca = off.g_K = off.g_A = off.g_L = 0.0;
  const auto z = lactotroph_rhs({-20.0, 0.3, 0.4}, 0.0, 2.0, off, SourceProfile::constant(-2.0));
  EXPECT_EQ(z.V, 0.0);
}

TEST(Lactotroph, JacobianMatchesFiniteDifferences) {
  const LactotrophParams p;
  const LactotrophState s{-41.0, 0.2, 0.35};
  const auto J = lactotroph_jacobian(s, p);
  const double h = 1e-6;
  for (int c = 0; c < 3; ++c) {
    LactotrophState a = s, b = s;
    double* pa = c == 0 ? &a.V : c == 1 ? &a.n : &a.e;
    double* pb = c == 0 ? &b.V : c == 1 ? &b.n : &b.e;
    *pa -= h;
    *pb += h;
    const auto fa = lactotroph_reaction(a, 1.5, p);
    const auto fb = lactotroph_reaction(b, 1.5, p);
    EXPECT_NEAR(J[0 * 3 + c], (fb.V - fa.V) / (2 * h), 1e-6);
    EXPECT_NEAR(J[1 * 3 + c], (fb.n - fa.n) / (2 * h), 1e-8);
    EXPECT_NEAR(J[2 * 3 + c], (fb.e - fa.e) / (2 * h), 1e-8);
  }
}

TEST(Lactotroph, GatingStaysInUnitInterval) {
  const LactotrophParams p;
  LactotrophState s{-70.0, 0.0, 1.0};
  const double dt = 0.02;
  for (int k = 0; k < 50000; ++k) {
    const auto k1 = lactotroph_reaction(s, 2.0, p);
    const auto k2 = lactotroph_reaction(s + (dt / 2) * k1, 2.0, p);
    const auto k3 = lactotroph_reaction(s + (dt / 2) * k2, 2.0, p);
    const auto k4 = lactotroph_reaction(s + dt * k3, 2.0, p);
    s = s + (dt / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    ASSERT_GE(s.n, 0.0);
    ASSERT_LE(s.n, 1.0);
    ASSERT_GE(s.e, 0.0);
    ASSERT_LE(s.e, 1.0);
  }
}

TEST(Params, Validation) {
  CGLParams c;
  c.eps = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  LactotrophParams l;
  l.tau_n = -1.0;
  EXPECT_THROW(l.validate(), std::invalid_argument);
  l = LactotrophParams{};
  l.g_K = -0.1;
  EXPECT_THROW(l.validate(), std::invalid_argument);
}
