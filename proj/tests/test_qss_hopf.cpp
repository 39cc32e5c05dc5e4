#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "slowpass/qss_hopf.hpp"

using namespace slowpass;

namespace {

// |A|^2 = rho solves rho |lambda - alpha rho|^2 = eps I^2; A = -sqrt(eps) I / (lambda - alpha rho).
// Bisection on the smallest positive root of the cubic.
Complex exact_pointwise_qss(double I, double mu, const CGLParams& p) {
  const Complex lam(mu, p.omega0), alpha(1.0, p.alpha_i);
  auto g = [&](double rho) { return rho * std::norm(lam - alpha * rho) - p.eps * I * I; };
  double lo = 0.0, hi = 1e-3;
  while (g(hi) < 0.0) hi *= 2.0;
  // walk up from zero in small steps so the first crossing is kept
  const int n = 20000;
  for (int k = 1; k <= n; ++k) {
    const double r = hi * k / n;
    if (g(r) >= 0.0) {
      lo = hi * (k - 1) / n;
      hi = r;
      break;
    }
  }
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (lo + hi);
    (g(m) < 0.0 ? lo : hi) = m;
  }
  const double rho = 0.5 * (lo + hi);
  return -std::sqrt(p.eps) * I / (lam - alpha * rho);
}

}  // namespace

TEST(CglQss, UnforcedIsZero) {
  const CGLParams p;
  const auto s = SourceProfile::constant(0.0);
  EXPECT_EQ(cgl_qss(0.3, -1.0, p, s, QssMethod::newton), Complex(0.0, 0.0));
  EXPECT_EQ(cgl_qss(0.3, 0.7, p, s, QssMethod::asymptotic), Complex(0.0, 0.0));
}

TEST(CglQss, LeadingTermByHand) {
  const CGLParams p;
  const auto s = SourceProfile::gaussian(1.0, 0.25);
  const Complex a = cgl_qss_leading(0.0, -1.0, p, s);
  EXPECT_NEAR(a.real(), 0.08, 1e-15);
  EXPECT_NEAR(a.imag(), 0.04, 1e-15);
}

TEST(CglQss, RejectsDegenerateLambda) {
  CGLParams p;
  p.omega0 = 0.0;
  EXPECT_THROW(cgl_qss(0.0, 0.0, p, SourceProfile::constant(1.0), QssMethod::newton), std::domain_error);
}

TEST(CglQss, NewtonMatchesCubicOracle) {
  const CGLParams p;
  for (double a : {0.5, 1.0, 100.0}) {
    const auto s = SourceProfile::gaussian(a, 0.25);
    for (double x : {0.0, 0.2, 0.6}) {
      for (double mu : {-1.0, -0.4}) {
        const Complex A = cgl_qss(x, mu, p, s, QssMethod::newton);
        const Complex ref = exact_pointwise_qss(s(x), mu, p);
        EXPECT_NEAR(std::abs(A - ref), 0.0, 1e-10 * std::max(1.0, std::abs(ref)))
            << "a=" << a << " x=" << x << " mu=" << mu;
      }
    }
  }
}

TEST(CglQss, LargeSourceIsNonlinear) {
  const CGLParams p;
  const auto s = SourceProfile::gaussian(100.0, 0.25);
  const Complex A = cgl_qss(0.0, -1.0, p, s, QssMethod::newton);
  const Complex lead = cgl_qss_leading(0.0, -1.0, p, s);
  EXPECT_GT(std::abs(A - lead), 1.0);
  EXPECT_LT(std::abs(cgl_pointwise_residual(A, -1.0, s(0.0), p)), 1e-10);
}

TEST(CglQss, ExpansionResidualIsFifthHalfOrder) {
  const auto s = SourceProfile::gaussian(1.0, 0.25);
  CGLParams p1, p2;
  p1.eps = 0.01;
  p2.eps = 0.005;
  const double r1 = std::abs(cgl_expansion_residual(0.0, -1.0, p1, s));
  const double r2 = std::abs(cgl_expansion_residual(0.0, -1.0, p2, s));
  EXPECT_GT(r1 / r2, 4.5);
  EXPECT_LT(r1 / r2, 6.8);
  // the leading term alone leaves an eps^{3/2} residual
  auto lead_res = [&](const CGLParams& p) {
    return std::abs(cgl_reaction(cgl_qss_leading(0.0, -1.0, p, s), -1.0, s(0.0), p));
  };
  EXPECT_NEAR(lead_res(p1) / lead_res(p2), std::pow(2.0, 1.5), 0.3);
}

TEST(CglQss, NewtonAgreesWithExpansionToThreeHalves) {
  for (double eps : {0.01, 0.0025}) {
    CGLParams p;
    p.eps = eps;
    const auto s = SourceProfile::gaussian(1.0, 0.25);
    for (double x : {0.0, 0.3}) {
      const Complex n = cgl_qss(x, -0.8, p, s, QssMethod::newton);
      const Complex a = cgl_qss(x, -0.8, p, s, QssMethod::asymptotic);
      EXPECT_LT(std::abs(n - a), 20.0 * std::pow(eps, 1.5));
    }
  }
}

TEST(CglQss, TrackerFollowsContinuation) {
  const CGLParams p;
  const auto s = SourceProfile::gaussian(100.0, 0.25);
  const auto g = build_grid(2.0, 41);
  CglQssTracker tr(p, s.sample(g));
  tr.at(-1.0);
  const auto& v = tr.at(0.6);
  for (std::size_t j = 0; j < g.size(); j += 5) {
    EXPECT_NEAR(std::abs(v[j] - cgl_qss(g.x(j), 0.6, p, s, QssMethod::newton)), 0.0, 1e-10);
  }
}

// All roots of rho |lambda - alpha rho|^2 = eps I^2 by scanning for sign changes.
std::vector<double> all_rho_roots(double I, double mu, const CGLParams& p) {
  const Complex lam(mu, p.omega0), alpha(1.0, p.alpha_i);
  auto g = [&](double rho) { return rho * std::norm(lam - alpha * rho) - p.eps * I * I; };
  std::vector<double> out;
  const int n = 200000;
  const double top = 20.0;
  for (int k = 0; k < n; ++k) {
    double lo = top * k / n, hi = top * (k + 1) / n;
    if ((g(lo) < 0.0) == (g(hi) < 0.0)) continue;
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (lo + hi);
      ((g(m) < 0.0) == (g(lo) < 0.0) ? lo : hi) = m;
    }
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

TEST(CglQss, AllRootsMatchScan) {
  const CGLParams p;
  for (double I : {0.5, 1.76, 5.0, 30.0}) {
    for (double mu : {-1.0, 0.3, 1.165, 2.0}) {
      const auto roots = cgl_qss_roots(I, mu, p);
      const auto ref = all_rho_roots(I, mu, p);
      ASSERT_EQ(roots.size(), ref.size()) << "I=" << I << " mu=" << mu;
      std::vector<double> got;
      for (const auto& A : roots) {
        EXPECT_LT(std::abs(cgl_reaction(A, mu, I, p)), 1e-10 * std::max(1.0, std::sqrt(p.eps) * I));
        got.push_back(std::norm(A));
      }
      std::sort(got.begin(), got.end());
      for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(got[k], ref[k], 1e-8 * std::max(1.0, ref[k]));
    }
  }
}

TEST(CglQss, TrackerSurvivesFold) {
  // large source: the continued branch folds before mu = 1.2 somewhere on the grid
  CGLParams p;
  const auto g = build_grid(4.0, 401);
  const auto s = SourceProfile::gaussian(100.0, 0.25);
  CglQssTracker tr(p, s.sample(g));
  for (double mu = -1.0; mu <= 1.2; mu += 0.005) {
    const auto& v = tr.at(mu);
    for (std::size_t j = 0; j < v.size(); ++j) {
      ASSERT_LT(std::abs(cgl_reaction(v[j], mu, s(g.x(j)), p)), 1e-8) << "mu=" << mu << " x=" << g.x(j);
    }
  }
}

TEST(CglLinearization, MatchesDenseJacobian) {
  const CGLParams p;
  for (Complex A : {Complex(0.0, 0.0), Complex(0.3, -0.2), Complex(1.5, 0.7)}) {
    const double mu = 0.2;
    // d/d(Re A, Im A) of lambda A - alpha |A|^2 A, by central differences
    Eigen::Matrix2d J;
    const double h = 1e-6;
    for (int c = 0; c < 2; ++c) {
      const Complex e = c == 0 ? Complex(h, 0.0) : Complex(0.0, h);
      const Complex d = (cgl_reaction(A + e, mu, 0.0, p) - cgl_reaction(A - e, mu, 0.0, p)) / (2 * h);
      J(0, c) = d.real();
      J(1, c) = d.imag();
    }
    const auto ev = Eigen::EigenSolver<Eigen::Matrix2d>(J).eigenvalues();
    const double mr = std::max(ev[0].real(), ev[1].real());
    const auto lin = cgl_linearization(A, mu, p);
    EXPECT_NEAR(lin.max_real, mr, 1e-7);
    EXPECT_NEAR(lin.omega, std::abs(ev[0].imag()), 1e-7);
  }
  for (double mu : {-0.7, 0.0, 0.4}) EXPECT_EQ(cgl_linearization({0.0, 0.0}, mu, p).max_real, mu);
}

TEST(CglHopf, OriginCrossesAtZero) {
  const CGLParams p;
  const auto s = SourceProfile::gaussian(1.0, 0.25);
  CglHopfOptions opt;
  opt.about_origin = true;
  const auto h = cgl_hopf_locus(p, s, {-1.0, 0.0, 2.0}, RampScan{-1.0, 2.0, 0.01, 1e-8}, opt);
  ASSERT_EQ(h.samples.size(), 3u);
  for (const auto& smp : h.samples) {
    EXPECT_NEAR(smp.ramp, 0.0, 1e-8);
    EXPECT_NEAR(smp.omega, 0.5, 1e-12);
  }
}

TEST(CglHopf, ForcedQssShiftIsOrderEps) {
  const CGLParams p;
  for (double a : {0.3, 1.0}) {
    const auto s = SourceProfile::gaussian(a, 0.25);
    const auto h = cgl_hopf_locus(p, s, {0.0}, RampScan{-1.0, 2.0, 0.01, 1e-8});
    ASSERT_EQ(h.samples.size(), 1u);
    // max Re = mu - 2|A|^2 with |A|^2 ~ eps a^2 / |lambda|^2 near mu = 0
    EXPECT_GT(h.samples[0].ramp, 0.0);
    EXPECT_LT(h.samples[0].ramp, 10.0 * p.eps * a * a);
    const Complex A = cgl_qss(0.0, h.samples[0].ramp, p, s, QssMethod::newton);
    EXPECT_NEAR(cgl_linearization(A, h.samples[0].ramp, p).max_real, 0.0, 1e-7);
  }
}

TEST(LactotrophQss, LeakOnlyIsLinear) {
  LactotrophParams p;
  p.g_Ca = p.g_K = p.g_A = 0.0;
  const auto s = SourceProfile::gaussian(1.0, 50.0);
  const auto q = lactotroph_qss(10.0, -2.0, p, s);
  EXPECT_NEAR(q.V, p.V_L + (-2.0 + s(10.0)) / p.g_L, 1e-9);
}

TEST(LactotrophQss, RejectsDegenerateAndReportsMissingRoot) {
  LactotrophParams p;
  p.g_Ca = p.g_K = p.g_A = p.g_L = 0.0;
  EXPECT_THROW(lactotroph_qss(0.0, 0.0, p, SourceProfile::constant(0.0)), std::invalid_argument);
  LactotrophParams leak;
  leak.g_Ca = leak.g_K = leak.g_A = 0.0;
  EXPECT_THROW(lactotroph_qss(0.0, 100.0, leak, SourceProfile::constant(0.0)), NoQssError);
}

TEST(LactotrophQss, DefaultParamsResidualAndLargestRoot) {
  const LactotrophParams p;
  const auto s = SourceProfile::gaussian(1.0, 50.0);
  for (double I : {-3.0, 0.0, 2.0, 6.0}) {
    const double inj = I + s(5.0);
    const auto q = lactotroph_qss(5.0, I, p, s);
    const auto r = lactotroph_reaction(q, inj, p);
    EXPECT_LT(std::abs(r.V * p.C_m), 1e-10 * (1.0 + std::abs(inj)));
    EXPECT_EQ(r.n, 0.0);
    EXPECT_EQ(r.e, 0.0);
    // oracle: fine scan + bisection on the current balance, largest root
    auto bal = [&](double V) {
      const auto g = gating_steady(V, p);
      return inj - ionic_currents({V, g.n_inf, g.e_inf}, p).total();
    };
    double root = NAN;
    for (double V = 0.0; V > -75.0; V -= 0.01) {
      if ((bal(V) < 0.0) != (bal(V - 0.01) < 0.0)) {
        double lo = V - 0.01, hi = V;
        for (int it = 0; it < 100; ++it) {
          const double m = 0.5 * (lo + hi);
          ((bal(m) < 0.0) == (bal(lo) < 0.0) ? lo : hi) = m;
        }
        root = 0.5 * (lo + hi);
        break;
      }
    }
    EXPECT_NEAR(q.V, root, 1e-9) << "I=" << I;
  }
}

TEST(LactotrophHopf, ShiftsWithLocalCurrent) {
  LactotrophParams p;
  p.g_K = 4.0;
  const auto s = SourceProfile::gaussian(1.0, 50.0);
  std::vector<double> xs;
  for (double x = -50.0; x <= 50.0; x += 10.0) xs.push_back(x);
  const auto h = lactotroph_hopf_locus(p, s, xs, RampScan{15.0, -5.0, 0.05, 1e-8});
  ASSERT_EQ(h.samples.size(), xs.size());
  const double total0 = h.samples[0].ramp + s(h.samples[0].x);
  for (const auto& smp : h.samples) {
    EXPECT_NEAR(smp.ramp + s(smp.x), total0, 1e-6);
    EXPECT_GT(smp.omega, 0.0);
    const auto q = lactotroph_qss(smp.x, smp.ramp, p, s);
    EXPECT_NEAR(lactotroph_linearization(q, p).max_real, 0.0, 1e-6);
  }
  // I_HB decreases toward the center where the applied current is largest
  for (std::size_t i = 1; i < h.samples.size(); ++i) {
    const bool left = h.samples[i].x <= 0.0;
    if (left) {
      EXPECT_LT(h.samples[i].ramp, h.samples[i - 1].ramp);
    } else {
      EXPECT_GT(h.samples[i].ramp, h.samples[i - 1].ramp);
    }
  }
}

TEST(HopfLocus, InterpolationAndCsv) {
  HopfLocus h;
  h.samples = {{0.0, 1.0, 0.5}, {2.0, 3.0, 0.5}};
  EXPECT_DOUBLE_EQ(*interpolate_hopf(h, 1.0), 2.0);
  EXPECT_FALSE(interpolate_hopf(h, 2.5).has_value());
}
