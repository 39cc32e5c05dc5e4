#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "slowpass/dhb.hpp"

using namespace slowpass;

namespace {

CGLParams beta(double br, double bi) {
  CGLParams p;
  p.beta_r = br;
  p.beta_i = bi;
  return p;
}

Trajectory<Complex> synthetic(const Grid1D& g, const std::vector<double>& ramps,
                              const std::function<Complex(double, double)>& field) {
  Trajectory<Complex> tr;
  tr.grid = g;
  tr.ramp = RampSpec::increasing(ramps.front(), 1.0);
  for (double r : ramps) {
    Snapshot<Complex> s;
    s.t = r - ramps.front();
    s.ramp = r;
    s.field.resize(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) s.field[j] = field(g.x(j), r);
    tr.snapshots.push_back(std::move(s));
  }
  return tr;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

}  // namespace

TEST(Onset, LinearDistanceIsInterpolatedExactly) {
  const auto g = build_grid(2.0, 21);
  const auto tr = synthetic(g, linspace(0.0, 2.0, 41), [](double x, double r) { return Complex(r * (1.0 + x * x), 0.0); });
  std::vector<Complex> zero(g.size());
  const auto c = detect_onset(
      tr, [&](double) -> const std::vector<Complex>& { return zero; }, 0.5,
      [](Complex a, Complex b) { return std::abs(a - b); });
  ASSERT_EQ(c.samples.size(), g.size());
  for (const auto& s : c.samples) EXPECT_NEAR(s.ramp, 0.5 / (1.0 + s.x * s.x), 1e-12);
}

TEST(Onset, QssTrajectoryNeverEscapes) {
  const CGLParams p;
  const auto s = SourceProfile::gaussian(1.0, 0.25);
  const auto g = build_grid(2.0, 41);
  const auto tr = synthetic(g, linspace(-1.0, 1.0, 51),
                            [&](double x, double mu) { return cgl_qss(x, mu, p, s, QssMethod::newton); });
  const auto c = detect_onset_cgl(tr, p, s);
  EXPECT_TRUE(c.samples.empty());
  EXPECT_DOUBLE_EQ(c.threshold, 0.1);
}

TEST(Onset, FarInitialStateIsPrecondition) {
  const CGLParams p;
  const auto s = SourceProfile::gaussian(1.0, 0.25);
  const auto tr = synthetic(build_grid(1.0, 11), {-1.0, -0.9}, [](double, double) { return Complex(1.0, 0.0); });
  EXPECT_THROW(detect_onset_cgl(tr, p, s), PreconditionError);
  EXPECT_THROW(detect_onset_cgl(tr, p, s, 0.0), std::invalid_argument);
}

TEST(Onset, LactotrophTrackerMatchesFullScan) {
  LactotrophParams p;
  p.g_K = 4.0;
  const auto s = SourceProfile::gaussian(1.0, 50.0);
  const auto g = build_grid(60.0, 25);
  LactotrophQssTracker tr(p, s.sample(g));
  for (double I = 10.0; I >= -4.0; I -= 0.37) {
    const auto& v = tr.at(I);
    for (std::size_t j = 0; j < g.size(); j += 3) {
      EXPECT_NEAR(v[j].V, lactotroph_qss(g.x(j), I, p, s).V, 1e-8) << "I=" << I;
    }
  }
}

TEST(Buffer, ClosedFormSpotValues) {
  const auto s = SourceProfile::gaussian(1.0, 0.25);
  const auto b0 = buffer_curve_closed_form(beta(0.0, 0.0), s, {0.0, 5.0, -5.0});
  EXPECT_NEAR(b0.samples[0].mu, 0.5, 1e-10);
  EXPECT_NEAR(b0.samples[1].mu, std::sqrt(0.75), 1e-10);
  EXPECT_NEAR(b0.samples[2].mu, b0.samples[1].mu, 1e-12);
  for (const auto& smp : b0.samples) EXPECT_TRUE(smp.valid);
  const auto b1 = buffer_curve_closed_form(beta(3.0, 1.0), s, {0.0});
  EXPECT_NEAR(b1.samples[0].mu, 0.5, 1e-10);
}

TEST(Buffer, MonotoneInDistanceWithoutDiffusion) {
  const auto s = SourceProfile::gaussian(1.0, 0.25);
  const auto xs = linspace(0.0, 8.0, 33);
  const auto b = buffer_curve_closed_form(beta(0.0, 0.0), s, xs);
  for (std::size_t i = 1; i < b.samples.size(); ++i) EXPECT_GT(b.samples[i].mu, b.samples[i - 1].mu);
}

TEST(Buffer, MissingRootIsMarkedInvalid) {
  const auto s = SourceProfile::gaussian(1.0, 0.25);
  const auto b = buffer_curve_closed_form(beta(0.0, 0.0), s, {100.0});
  EXPECT_TRUE(std::isnan(b.samples[0].mu));
  EXPECT_FALSE(b.samples[0].valid);
  EXPECT_THROW(buffer_curve_closed_form(beta(0.0, 0.0), SourceProfile::constant(1.0), {0.0}),
               std::invalid_argument);
}

TEST(Buffer, ValidityExamples) {
  const auto s = SourceProfile::gaussian(1.0, 0.25);
  // 1 + sigma mu / (mu^2 + w0^2) = 1.25
  EXPECT_TRUE(buffer_validity(0.5, beta(1.0, 0.0), s));
  EXPECT_TRUE(buffer_validity(7.0, beta(0.0, 0.0), s));
  // beta = 3i, sigma = 3: real part 1 - w0/(mu^2 + w0^2) changes sign at mu = 0.5
  const auto wide = SourceProfile::gaussian(1.0, 3.0);
  EXPECT_FALSE(buffer_validity(0.49, beta(0.0, 3.0), wide));
  EXPECT_TRUE(buffer_validity(0.51, beta(0.0, 3.0), wide));
}

TEST(Growth, HomogeneousIsIndependentOfX) {
  const CGLParams p;
  const auto s = SourceProfile::constant(1.0);
  const auto g = build_grid(5.0, 201);
  const GrowthExponent ge(p, s, g, -1.0);
  const auto xs = linspace(-5.0, 5.0, 41);
  for (auto order : {GrowthOrder::leading, GrowthOrder::k4}) {
    for (double mu : {-0.5, 0.2, 0.5, 0.8}) {
      const auto prof = ge.profile(mu, xs, order);
      const auto [lo, hi] = std::minmax_element(prof.begin(), prof.end());
      EXPECT_LT(*hi - *lo, 1e-8);
    }
  }
  EXPECT_NEAR(ge(0.5, 1.3, GrowthOrder::leading), 0.0, 1e-14);
  const auto z = growth_zero_curve(ge, {0.0, 3.0}, GrowthOrder::leading, 0.0, 1.0);
  for (const auto& smp : z.samples) EXPECT_NEAR(smp.mu, 0.5, 1e-9);
}

TEST(Growth, LeadingZeroMatchesClosedForm) {
  const auto s = SourceProfile::gaussian(1.0, 0.25);
  const auto g = build_grid(10.0, 2001);
  const std::vector<double> xs{0.0, 0.5, 1.0, 2.0, 3.0, 5.0};
  for (const auto& p : {beta(0.0, 0.0), beta(1.0, 0.0), beta(3.0, 1.0)}) {
    const GrowthExponent ge(p, s, g, -1.0);
    const auto z = growth_zero_curve(ge, xs, GrowthOrder::leading, 0.3, 2.0, 0.01, 1e-12);
    const auto b = buffer_curve_closed_form(p, s, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!b.samples[i].valid) continue;
      // at x=5 the source is e^-25 of its peak, near the mode-sum round-off floor
      const double tol = std::abs(xs[i]) <= 3.0 ? 1e-8 : 1e-3;
      EXPECT_NEAR(z.samples[i].mu, b.samples[i].mu, tol)
          << "beta=(" << p.beta_r << "," << p.beta_i << ") x=" << xs[i];
    }
  }
}

TEST(Growth, AmplitudeDoesNotMoveTheZero) {
  const auto p = beta(1.0, 0.0);
  const auto g = build_grid(10.0, 1001);
  const std::vector<double> xs{0.0, 1.0, 2.5};
  const GrowthExponent g1(p, SourceProfile::gaussian(1.0, 0.25), g, -1.0);
  const GrowthExponent g100(p, SourceProfile::gaussian(100.0, 0.25), g, -1.0);
  for (auto order : {GrowthOrder::leading, GrowthOrder::k4}) {
    const auto a = growth_zero_curve(g1, xs, order, 0.3, 2.0);
    const auto b = growth_zero_curve(g100, xs, order, 0.3, 2.0);
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(a.samples[i].mu, b.samples[i].mu, 1e-8);
  }
}

TEST(Growth, CorrectedOrderStaysNearLeading) {
  const auto s = SourceProfile::gaussian(1.0, 0.25);
  const auto g = build_grid(10.0, 1001);
  const std::vector<double> xs{0.0, 1.0, 2.0};
  for (const auto& p : {beta(0.0, 0.0), beta(1.0, 0.0)}) {
    const GrowthExponent ge(p, s, g, -1.0);
    const auto lead = growth_zero_curve(ge, xs, GrowthOrder::leading, 0.3, 2.0);
    const auto k4 = growth_zero_curve(ge, xs, GrowthOrder::k4, 0.3, 2.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      ASSERT_FALSE(std::isnan(k4.samples[i].mu));
      EXPECT_NEAR(k4.samples[i].mu, lead.samples[i].mu, 0.05) << "x=" << xs[i];
    }
  }
}

TEST(Growth, UnresolvedBasisIsReported) {
  const auto s = SourceProfile::gaussian(1.0, 0.001);
  const GrowthExponent ge(beta(0.0, 0.0), s, build_grid(10.0, 41), -1.0);
  EXPECT_THROW(ge(0.5, 0.0, GrowthOrder::leading), ResolutionError);
}

TEST(Memory, PredictionAndDomain) {
  const CGLParams p;
  EXPECT_DOUBLE_EQ(memory_onset_prediction(-0.3, p), 0.3);
  EXPECT_NEAR(memory_onset_prediction(-1e-9, p), 0.0, 1e-8);
  EXPECT_THROW(memory_onset_prediction(-0.6, p), std::domain_error);
  EXPECT_THROW(memory_onset_prediction(0.1, p), std::domain_error);
  EXPECT_THROW(memory_onset_prediction(-0.5, p), std::domain_error);
}

TEST(Delay, ZeroWhenOnsetIsHopf) {
  HopfLocus h;
  OnsetCurve o;
  for (double x = -3.0; x <= 3.0; x += 0.5) {
    h.samples.push_back({x, 2.0 + 0.1 * x * x, 1.0});
    o.samples.push_back({x, 2.0 + 0.1 * x * x});
  }
  for (const auto& d : delay_measurement(o, h)) EXPECT_NEAR(d.value, 0.0, 1e-12);
  o.samples.push_back({0.25, 5.0});
  const auto d = delay_measurement(o, h);
  // hopf interpolated between x=0 (2.0) and x=0.5 (2.025)
  EXPECT_NEAR(d.back().value, 5.0 - 2.0125, 1e-12);
  OnsetCurve far;
  far.samples.push_back({10.0, 1.0});
  EXPECT_THROW(delay_measurement(far, h), std::invalid_argument);
}

TEST(Csv, ColumnsAreFixed) {
  const auto dir = std::filesystem::temp_directory_path() / "slowpass_dhb_csv";
  std::filesystem::create_directories(dir);
  OnsetCurve o;
  o.samples = {{0.0, 0.5}};
  BufferCurve b;
  b.samples = {{0.0, 0.5, true}};
  write_onset_csv(o, (dir / "onset.csv").string());
  write_buffer_csv(b, (dir / "buffer.csv").string());
  write_delay_csv({{1.0, 2.0}}, (dir / "delay.csv").string());
  auto head = [&](const char* f) {
    std::ifstream is(dir / f);
    std::string l;
    std::getline(is, l);
    return l;
  };
  EXPECT_EQ(head("onset.csv"), "x,ramp");
  EXPECT_EQ(head("buffer.csv"), "x,mu,valid,order");
  EXPECT_EQ(head("delay.csv"), "x,value");
  std::filesystem::remove_all(dir);
}
