#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include "slowpass/error.hpp"
#include "slowpass/grid.hpp"
#include "slowpass/models/cgl.hpp"
#include "slowpass/models/lactotroph.hpp"
#include "slowpass/models/source.hpp"

namespace slowpass {

enum class QssMethod { asymptotic, newton };

inline const char* to_string(QssMethod m) {
  return m == QssMethod::asymptotic ? "asymptotic" : "newton";
}

template <class State>
struct QSSField {
  double ramp = 0.0;
  QssMethod method = QssMethod::newton;
  std::vector<double> x;
  std::vector<State> values;
};

// ---------------------------------------------------------------- CGL

/**
 * Two-term expansion of the CGL QSS in sqrt(eps), lambda = mu + i w0:
 *
 *   A = -sqrt(eps) I/lambda
 *       + eps^{3/2} ( I/lambda^3 + D I''/lambda^2 - alpha I^3/(lambda^2 |lambda|^2) )
 *
 * The first correction collects the slow drift eps dA/dmu, the diffusion
 * eps D A_xx and the cubic term evaluated on the leading order.
 */
inline Complex cgl_qss_asymptotic(double x, double mu, const CGLParams& p, const SourceProfile& s) {
  const Complex lam = p.lambda(mu);
  if (lam == Complex(0.0, 0.0)) throw std::domain_error("cgl_qss: (mu, omega0) = (0, 0)");
  const double I = s(x);
  const double I2 = s.second_derivative(x);
  const double se = std::sqrt(p.eps);
  const double lam_abs2 = std::norm(lam);
  const Complex lam2 = lam * lam;
  const Complex lead = -se * I / lam;
  const Complex corr =
      I / (lam2 * lam) + p.diffusion() * I2 / lam2 - p.alpha() * (I * I * I) / (lam2 * lam_abs2);
  return lead + p.eps * se * corr;
}

inline Complex cgl_qss_leading(double x, double mu, const CGLParams& p, const SourceProfile& s) {
  const Complex lam = p.lambda(mu);
  if (lam == Complex(0.0, 0.0)) throw std::domain_error("cgl_qss: (mu, omega0) = (0, 0)");
  return -std::sqrt(p.eps) * s(x) / lam;
}

/// Pointwise equilibrium residual lambda A + sqrt(eps) I - alpha |A|^2 A.
inline Complex cgl_pointwise_residual(Complex A, double mu, double iapp, const CGLParams& p) {
  return cgl_reaction(A, mu, iapp, p);
}

/**
 * Residual of the full slow-time equation
 *   lambda A + eps D A_xx + sqrt(eps) I - alpha |A|^2 A - eps dA/dmu
 * at the two-term expansion, with A_xx and dA/dmu by centered differences.
 * It is O(eps^{5/2}) when the expansion is correct.
 */
inline Complex cgl_expansion_residual(double x, double mu, const CGLParams& p,
                                      const SourceProfile& s, double h = 1e-3) {
  auto q = [&](double xx, double mm) { return cgl_qss_asymptotic(xx, mm, p, s); };
  const Complex A = q(x, mu);
  const Complex Axx = (q(x - h, mu) - 2.0 * A + q(x + h, mu)) / (h * h);
  const Complex Amu = (q(x, mu + h) - q(x, mu - h)) / (2.0 * h);
  return cgl_reaction(A, mu, s(x), p) + p.eps * p.diffusion() * Axx - p.eps * Amu;
}

struct CglNewtonOptions {
  int max_iter = 50;
  double tol = 1e-13;
  /// Largest mu increment between continuation points.
  double continuation_step = 0.02;
  /// Continuation starts here (or at mu if lower), where the QSS is unique.
  double continuation_start = -2.0;
};

namespace detail {

/// Solve c z + d conj(z) = r.
inline Complex solve_conj_linear(Complex c, Complex d, Complex r) {
  const double det = std::norm(c) - std::norm(d);
  if (det == 0.0) throw NoQssError("cgl_qss: singular linearization");
  return (std::conj(c) * r - d * std::conj(r)) / det;
}

}  // namespace detail

/// Damped Newton for the pointwise QSS from a given seed.
inline Complex cgl_qss_newton_from(double iapp, double mu, const CGLParams& p, Complex seed,
                                   const CglNewtonOptions& opt = {}) {
  const Complex alpha = p.alpha();
  const Complex lam = p.lambda(mu);
  const double scale = std::max(1.0, std::sqrt(p.eps) * std::abs(iapp));
  Complex A = seed;
  Complex F = cgl_reaction(A, mu, iapp, p);
  for (int it = 0; it < opt.max_iter; ++it) {
    if (std::abs(F) <= opt.tol * scale) return A;
    const Complex c = lam - 2.0 * alpha * std::norm(A);
    const Complex d = -alpha * A * A;
    const Complex step = detail::solve_conj_linear(c, d, -F);
    double t = 1.0;
    Complex trial = A + step;
    Complex Ft = cgl_reaction(trial, mu, iapp, p);
    while (std::abs(Ft) > std::abs(F) && t > 1.0 / 64.0) {
      t *= 0.5;
      trial = A + t * step;
      Ft = cgl_reaction(trial, mu, iapp, p);
    }
    A = trial;
    F = Ft;
  }
  if (std::abs(F) <= 1e3 * opt.tol * scale) return A;
  std::ostringstream os;
  os << "cgl_qss: Newton did not converge at mu=" << mu << ", I=" << iapp << " (|F|=" << std::abs(F)
     << ")";
  throw NoQssError(os.str());
}

/**
 * Every pointwise QSS: with r = |A|^2 the balance gives the real cubic
 *   (1 + a_i^2) r^3 - 2 (mu + w0 a_i) r^2 + (mu^2 + w0^2) r - eps I^2 = 0,
 * and each positive root r fixes A = -sqrt(eps) I / (lambda - alpha r).
 */
inline std::vector<Complex> cgl_qss_roots(double iapp, double mu, const CGLParams& p) {
  const double ai = p.alpha_i, w0 = p.omega0;
  const double c3 = 1.0 + ai * ai, c2 = -2.0 * (mu + w0 * ai), c1 = mu * mu + w0 * w0;
  const double c0 = -p.eps * iapp * iapp;
  Eigen::Matrix3d comp = Eigen::Matrix3d::Zero();
  comp(1, 0) = 1.0;
  comp(2, 1) = 1.0;
  comp(0, 2) = -c0 / c3;
  comp(1, 2) = -c1 / c3;
  comp(2, 2) = -c2 / c3;
  const Eigen::Vector3cd ev = comp.eigenvalues();
  std::vector<Complex> out;
  for (int k = 0; k < 3; ++k) {
    const double r = ev[k].real();
    if (std::abs(ev[k].imag()) > 1e-9 * std::max(1.0, std::abs(r)) || r < 0.0) continue;
    const Complex A = -std::sqrt(p.eps) * iapp / (p.lambda(mu) - p.alpha() * r);
    try {
      out.push_back(cgl_qss_newton_from(iapp, mu, p, A));
    } catch (const NoQssError&) {
      out.push_back(A);
    }
  }
  return out;
}

/**
 * Pointwise QSS continued in mu from `continuation_start`, where the cubic
 * has a single root, up to mu. This keeps the branch connected to the
 * stable QSS on the left of the Hopf curve.
 */
inline Complex cgl_qss_continued(double iapp, double mu, const CGLParams& p,
                                 const CglNewtonOptions& opt = {}) {
  const double start = std::min(mu, opt.continuation_start);
  const double se = std::sqrt(p.eps);
  Complex A = cgl_qss_newton_from(iapp, start, p, -se * iapp / p.lambda(start), opt);
  const int steps = static_cast<int>(std::ceil((mu - start) / opt.continuation_step));
  for (int k = 1; k <= steps; ++k) {
    const double m = start + (mu - start) * static_cast<double>(k) / steps;
    A = cgl_qss_newton_from(iapp, m, p, A, opt);
  }
  return A;
}

inline Complex cgl_qss(double x, double mu, const CGLParams& p, const SourceProfile& s,
                       QssMethod method, const CglNewtonOptions& opt = {}) {
  if (p.lambda(mu) == Complex(0.0, 0.0)) throw std::domain_error("cgl_qss: (mu, omega0) = (0, 0)");
  if (method == QssMethod::asymptotic) return cgl_qss_asymptotic(x, mu, p, s);
  const double I = s(x);
  if (I == 0.0) return {0.0, 0.0};
  return cgl_qss_continued(I, mu, p, opt);
}

/**
 * Newton QSS over a grid, tracked along an increasing sequence of mu values
 * by warm starts. Used to follow the QSS through a trajectory's snapshots.
 */
class CglQssTracker {
public:
  CglQssTracker(const CGLParams& p, std::vector<double> iapp, CglNewtonOptions opt = {})
      : p_(p), iapp_(std::move(iapp)), opt_(opt) {}

  const std::vector<Complex>& at(double mu) {
    if (!mu_) {
      values_.resize(iapp_.size());
      for (std::size_t j = 0; j < iapp_.size(); ++j) {
        values_[j] = iapp_[j] == 0.0 ? Complex{} : cgl_qss_continued(iapp_[j], mu, p_, opt_);
      }
      mu_ = mu;
      return values_;
    }
    const double from = *mu_;
    const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(mu - from) / opt_.continuation_step)));
    for (int k = 1; k <= steps; ++k) {
      const double m = from + (mu - from) * static_cast<double>(k) / steps;
      for (std::size_t j = 0; j < iapp_.size(); ++j) {
        if (iapp_[j] == 0.0) continue;
        try {
          values_[j] = cgl_qss_newton_from(iapp_[j], m, p_, values_[j], opt_);
        } catch (const NoQssError&) {
          // branch folded: continue on the nearest remaining root
          const auto roots = cgl_qss_roots(iapp_[j], m, p_);
          if (roots.empty()) throw;
          const Complex prev = values_[j];
          values_[j] = *std::min_element(roots.begin(), roots.end(), [&](Complex a, Complex b) {
            return std::abs(a - prev) < std::abs(b - prev);
          });
        }
      }
    }
    mu_ = mu;
    return values_;
  }

private:
  CGLParams p_;
  std::vector<double> iapp_;
  CglNewtonOptions opt_;
  std::optional<double> mu_;
  std::vector<Complex> values_;
};

inline QSSField<Complex> cgl_qss_field(const Grid1D& g, double mu, const CGLParams& p,
                                       const SourceProfile& s, QssMethod method) {
  QSSField<Complex> f;
  f.ramp = mu;
  f.method = method;
  f.x = g.points();
  f.values.resize(g.size());
  if (method == QssMethod::asymptotic) {
    for (std::size_t j = 0; j < g.size(); ++j) f.values[j] = cgl_qss_asymptotic(g.x(j), mu, p, s);
  } else {
    CglQssTracker tr(p, s.sample(g));
    f.values = tr.at(mu);
  }
  return f;
}

struct CglEigen {
  double max_real;
  double omega;
};

/**
 * Eigenvalues of the real 2x2 linearization at A: delta' = c delta + d conj(delta),
 * c = lambda - 2 alpha |A|^2, d = -alpha A^2. They are
 * Re c +- sqrt(|d|^2 - (Im c)^2).
 */
inline CglEigen cgl_linearization(Complex A, double mu, const CGLParams& p) {
  const Complex c = p.lambda(mu) - 2.0 * p.alpha() * std::norm(A);
  const Complex d = -p.alpha() * A * A;
  const double disc = std::norm(d) - c.imag() * c.imag();
  if (disc >= 0.0) return {c.real() + std::sqrt(disc), 0.0};
  return {c.real(), std::sqrt(-disc)};
}

// ---------------------------------------------------------- lactotroph

struct VoltageScan {
  double v_lo = -75.0;
  double v_hi = 0.0;
  double step = 0.25;
};

/// I + I_app - I_ion(V) with gating at steady state; zero at a QSS.
inline double lactotroph_balance(double V, double injected, const LactotrophParams& p) {
  const auto g = gating_steady(V, p);
  return lactotroph_reaction({V, g.n_inf, g.e_inf}, injected, p).V * p.C_m;
}

inline LactotrophState lactotroph_qss_injected(double injected, const LactotrophParams& p,
                                               const VoltageScan& scan = {}) {
  if (p.all_conductances_zero()) {
    throw std::invalid_argument("lactotroph_qss: all conductances zero (degenerate current balance)");
  }
  if (!(scan.step > 0.0) || !(scan.v_hi > scan.v_lo)) {
    throw std::invalid_argument("lactotroph_qss: bad voltage scan");
  }
  auto f = [&](double V) { return lactotroph_balance(V, injected, p); };
  // scan downward so the first bracket found holds the largest root
  double hi = scan.v_hi;
  double fhi = f(hi);
  const auto n = static_cast<std::size_t>(std::ceil((scan.v_hi - scan.v_lo) / scan.step));
  for (std::size_t k = 1; k <= n; ++k) {
    const double lo = std::max(scan.v_lo, scan.v_hi - static_cast<double>(k) * scan.step);
    const double flo = f(lo);
    double root;
    if (fhi == 0.0) {
      root = hi;
    } else if (flo == 0.0) {
      root = lo;
    } else if ((flo < 0.0) != (fhi < 0.0)) {
      std::uintmax_t iters = 200;
      const auto r = boost::math::tools::toms748_solve(
          f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), iters);
      root = 0.5 * (r.first + r.second);
    } else {
      hi = lo;
      fhi = flo;
      continue;
    }
    const auto g = gating_steady(root, p);
    return {root, g.n_inf, g.e_inf};
  }
  std::ostringstream os;
  os << "lactotroph_qss: no root of the current balance in [" << scan.v_lo << ", " << scan.v_hi
     << "] mV for injected current " << injected;
  throw NoQssError(os.str());
}

inline LactotrophState lactotroph_qss(double x, double I, const LactotrophParams& p,
                                      const SourceProfile& s, const VoltageScan& scan = {}) {
  return lactotroph_qss_injected(I + s(x), p, scan);
}

inline QSSField<LactotrophState> lactotroph_qss_field(const Grid1D& g, double I,
                                                      const LactotrophParams& p,
                                                      const SourceProfile& s,
                                                      const VoltageScan& scan = {}) {
  QSSField<LactotrophState> f;
  f.ramp = I;
  f.method = QssMethod::newton;
  f.x = g.points();
  f.values.reserve(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) f.values.push_back(lactotroph_qss(g.x(j), I, p, s, scan));
  return f;
}

struct LactotrophEigen {
  double max_real;
  double omega;
};

inline LactotrophEigen lactotroph_linearization(const LactotrophState& s, const LactotrophParams& p) {
  const auto J = lactotroph_jacobian(s, p);
  Eigen::Matrix3d M;
  M << J[0], J[1], J[2], J[3], J[4], J[5], J[6], J[7], J[8];
  const Eigen::EigenSolver<Eigen::Matrix3d> es(M, false);
  const auto ev = es.eigenvalues();
  LactotrophEigen out{-std::numeric_limits<double>::infinity(), 0.0};
  for (int i = 0; i < 3; ++i) {
    if (ev[i].real() > out.max_real) out = {ev[i].real(), std::abs(ev[i].imag())};
  }
  return out;
}

// ---------------------------------------------------------- Hopf locus

struct HopfSample {
  double x;
  double ramp;
  double omega;
};

struct HopfLocus {
  std::vector<HopfSample> samples;
  /// x values where no crossing was found in the scanned range.
  std::vector<double> missing;
};

/// Ramp interval scanned in the ramp direction (from -> to), coarse step then bisection.
struct RampScan {
  double from = -1.0;
  double to = 2.0;
  double step = 0.01;
  double tol = 1e-8;
};

namespace detail {

/**
 * First zero crossing (negative to positive) of `growth(r).max_real` along the
 * scan, refined by bisection. Crossings with a real eigenvalue (omega = 0) or a
 * jump in the QSS branch are skipped.
 */
template <class Growth>
std::optional<HopfSample> first_hopf_crossing(double x, const RampScan& scan, Growth growth) {
  if (!(scan.step > 0.0) || scan.from == scan.to) {
    throw std::invalid_argument("hopf_locus: empty ramp scan");
  }
  const double dir = scan.to > scan.from ? 1.0 : -1.0;
  const auto n = static_cast<std::size_t>(std::ceil(std::abs(scan.to - scan.from) / scan.step));
  double r0 = scan.from;
  auto g0 = growth(r0);
  for (std::size_t k = 1; k <= n; ++k) {
    const double r1 = k == n ? scan.to : scan.from + dir * static_cast<double>(k) * scan.step;
    const auto g1 = growth(r1);
    if (g0.max_real < 0.0 && g1.max_real >= 0.0) {
      double a = r0, b = r1;
      while (std::abs(b - a) > scan.tol) {
        const double m = 0.5 * (a + b);
        if (growth(m).max_real < 0.0) {
          a = m;
        } else {
          b = m;
        }
      }
      const double rc = 0.5 * (a + b);
      const auto gc = growth(rc);
      const double slope = std::abs(g1.max_real - g0.max_real) / scan.step;
      const bool smooth = std::abs(gc.max_real) <= std::max(1e-6, 10.0 * slope * scan.tol);
      if (smooth && gc.omega > 0.0) return HopfSample{x, rc, gc.omega};
    }
    r0 = r1;
    g0 = g1;
  }
  return std::nullopt;
}

}  // namespace detail

struct CglHopfOptions {
  /// Linearize about A = 0 instead of the forced QSS.
  bool about_origin = false;
  CglNewtonOptions newton{};
};

inline HopfLocus cgl_hopf_locus(const CGLParams& p, const SourceProfile& s,
                                const std::vector<double>& x_samples, const RampScan& scan,
                                const CglHopfOptions& opt = {}) {
  HopfLocus out;
  for (double x : x_samples) {
    const double I = s(x);
    auto growth = [&](double mu) {
      if (opt.about_origin || I == 0.0) return cgl_linearization({0.0, 0.0}, mu, p);
      return cgl_linearization(cgl_qss_continued(I, mu, p, opt.newton), mu, p);
    };
    if (auto h = detail::first_hopf_crossing(x, scan, growth)) {
      out.samples.push_back(*h);
    } else {
      out.missing.push_back(x);
    }
  }
  return out;
}

inline HopfLocus lactotroph_hopf_locus(const LactotrophParams& p, const SourceProfile& s,
                                       const std::vector<double>& x_samples, const RampScan& scan,
                                       const VoltageScan& vscan = {}) {
  HopfLocus out;
  for (double x : x_samples) {
    const double Iapp = s(x);
    auto growth = [&](double I) {
      try {
        return lactotroph_linearization(lactotroph_qss_injected(I + Iapp, p, vscan), p);
      } catch (const NoQssError&) {
        return LactotrophEigen{std::numeric_limits<double>::quiet_NaN(), 0.0};
      }
    };
    if (auto h = detail::first_hopf_crossing(x, scan, growth)) {
      out.samples.push_back(*h);
    } else {
      out.missing.push_back(x);
    }
  }
  return out;
}

/// Linear interpolation of the locus at x; nullopt outside the sampled range.
inline std::optional<double> interpolate_hopf(const HopfLocus& h, double x) {
  const auto& s = h.samples;
  if (s.empty()) return std::nullopt;
  if (s.size() == 1) {
    return std::abs(s[0].x - x) <= 1e-12 ? std::optional<double>(s[0].ramp) : std::nullopt;
  }
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double a = s[i - 1].x, b = s[i].x;
    if ((x - a) * (x - b) <= 0.0) {
      if (a == b) return s[i].ramp;
      const double t = (x - a) / (b - a);
      return s[i - 1].ramp + t * (s[i].ramp - s[i - 1].ramp);
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------- CSV

inline void write_hopf_csv(const HopfLocus& h, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(17);
  os << "x,ramp,omega\n";
  for (const auto& s : h.samples) os << s.x << ',' << s.ramp << ',' << s.omega << '\n';
}

inline void write_qss_csv(const QSSField<Complex>& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(17);
  os << "x,re,im\n";
  for (std::size_t j = 0; j < f.x.size(); ++j) {
    os << f.x[j] << ',' << f.values[j].real() << ',' << f.values[j].imag() << '\n';
  }
}

inline void write_qss_csv(const QSSField<LactotrophState>& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(17);
  os << "x,V,n,e\n";
  for (std::size_t j = 0; j < f.x.size(); ++j) {
    os << f.x[j] << ',' << f.values[j].V << ',' << f.values[j].n << ',' << f.values[j].e << '\n';
  }
}

}  // namespace slowpass
