#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "slowpass/error.hpp"
#include "slowpass/faddeeva.hpp"
#include "slowpass/grid.hpp"
#include "slowpass/integrator.hpp"
#include "slowpass/models/cgl.hpp"
#include "slowpass/models/source.hpp"
#include "slowpass/qss_hopf.hpp"
#include "slowpass/spatial.hpp"

namespace slowpass {

struct OnsetSample {
  double x;
  double ramp;
};

struct OnsetCurve {
  std::vector<OnsetSample> samples;
  double threshold = 0.0;
};

enum class GrowthOrder { leading, k4 };

inline const char* to_string(GrowthOrder o) { return o == GrowthOrder::leading ? "leading" : "k4"; }

struct BufferSample {
  double x;
  double mu;
  bool valid;
};

struct BufferCurve {
  std::vector<BufferSample> samples;
  GrowthOrder order = GrowthOrder::leading;
};

// ------------------------------------------------------------ onset

/**
 * Per grid point, the first ramp value at which |state - QSS| exceeds the
 * threshold, linearly interpolated in the distance between the two
 * bracketing snapshots. `qss_at(ramp)` returns the QSS field at a snapshot;
 * it is called once per snapshot in trajectory order.
 */
template <class State, class QssAt, class Distance>
OnsetCurve detect_onset(const Trajectory<State>& traj, QssAt&& qss_at, double threshold,
                        Distance&& distance) {
  if (!(threshold > 0.0)) throw std::invalid_argument("detect_onset: threshold must be positive");
  OnsetCurve out;
  out.threshold = threshold;
  if (traj.empty()) return out;
  const std::size_t n = traj.grid.size();
  std::vector<double> prev_d(n, 0.0);
  std::vector<std::optional<double>> onset(n);
  double prev_ramp = 0.0;
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const auto& snap = traj.snapshots[k];
    detail::require_size(snap.field.size(), traj.grid, "detect_onset");
    const std::vector<State>& q = qss_at(snap.ramp);
    detail::require_size(q.size(), traj.grid, "detect_onset (QSS)");
    for (std::size_t j = 0; j < n; ++j) {
      const double d = distance(snap.field[j], q[j]);
      if (k == 0) {
        if (d > threshold) {
          std::ostringstream os;
          os << "detect_onset: initial state is " << d << " from the QSS at x=" << traj.grid.x(j)
             << ", above the threshold " << threshold;
          throw PreconditionError(os.str());
        }
      } else if (!onset[j] && d > threshold) {
        const double w = (threshold - prev_d[j]) / (d - prev_d[j]);
        onset[j] = prev_ramp + w * (snap.ramp - prev_ramp);
      }
      prev_d[j] = d;
    }
    prev_ramp = snap.ramp;
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (onset[j]) out.samples.push_back({traj.grid.x(j), *onset[j]});
  }
  return out;
}

/// Onset for a CGL trajectory against the Newton QSS tracked through the snapshots.
inline OnsetCurve detect_onset_cgl(const Trajectory<Complex>& traj, const CGLParams& p,
                                   const SourceProfile& s, std::optional<double> threshold = {}) {
  CglQssTracker tracker(p, s.sample(traj.grid));
  return detect_onset(
      traj, [&](double mu) -> const std::vector<Complex>& { return tracker.at(mu); },
      threshold.value_or(std::sqrt(p.eps)), [](Complex a, Complex b) { return std::abs(a - b); });
}

/**
 * Depolarized QSS over a grid, tracked along the ramp by searching a narrow
 * voltage window around the previous root before falling back to a full scan.
 */
class LactotrophQssTracker {
public:
  LactotrophQssTracker(const LactotrophParams& p, std::vector<double> iapp, VoltageScan scan = {})
      : p_(p), iapp_(std::move(iapp)), scan_(scan) {}

  const std::vector<LactotrophState>& at(double I) {
    values_.resize(iapp_.size());
    for (std::size_t j = 0; j < iapp_.size(); ++j) {
      const double inj = I + iapp_[j];
      if (started_) {
        // a root above the window means the largest-root branch moved; rescan
        VoltageScan local{values_[j].V - 2.0, std::min(scan_.v_hi, values_[j].V + 2.0), 0.25};
        try {
          const auto cand = lactotroph_qss_injected(inj, p_, local);
          const double above = lactotroph_balance(local.v_hi, inj, p_);
          const double top = lactotroph_balance(scan_.v_hi, inj, p_);
          if ((above < 0.0) == (top < 0.0)) {
            values_[j] = cand;
            continue;
          }
        } catch (const NoQssError&) {
        }
      }
      values_[j] = lactotroph_qss_injected(inj, p_, scan_);
    }
    started_ = true;
    return values_;
  }

private:
  LactotrophParams p_;
  std::vector<double> iapp_;
  VoltageScan scan_;
  bool started_ = false;
  std::vector<LactotrophState> values_;
};

inline OnsetCurve detect_onset_lactotroph(const Trajectory<LactotrophState>& traj,
                                          const LactotrophParams& p, const SourceProfile& s,
                                          double threshold) {
  LactotrophQssTracker tracker(p, s.sample(traj.grid));
  return detect_onset(
      traj, [&](double I) -> const std::vector<LactotrophState>& { return tracker.at(I); },
      threshold, [](const LactotrophState& a, const LactotrophState& b) { return norm(a - b); });
}

// ------------------------------------------------------ buffer curves

/**
 * Validity of the Gaussian buffer curve:
 * Re((sigma + lambda D) / (lambda D)) >= 0, always true for D = 0.
 */
inline bool buffer_validity(double mu, const CGLParams& p, const SourceProfile& s) {
  if (s.kind() != SourceProfile::Kind::gaussian) {
    throw std::invalid_argument("buffer_validity: needs a gaussian source");
  }
  const Complex lD = p.lambda(mu) * p.diffusion();
  if (lD == Complex(0.0, 0.0)) return true;
  return ((s.sigma() + lD) / lD).real() >= 0.0;
}

/**
 * Gaussian buffer curve: the mu >= w0 root of
 *   mu^2 = w0^2 + eps x^2 P / (2 (P^2 + Q^2)),
 *   P = sigma + mu b_r - w0 b_i,  Q = mu b_i + w0 b_r,
 * bracketed in [w0, w0 + 10] and refined to 1e-10. Samples without a root are
 * returned with mu = NaN and valid = false.
 */
inline BufferCurve buffer_curve_closed_form(const CGLParams& p, const SourceProfile& s,
                                            const std::vector<double>& x_samples) {
  if (s.kind() != SourceProfile::Kind::gaussian) {
    throw std::invalid_argument("buffer_curve_closed_form: needs a gaussian source");
  }
  const double w0 = p.omega0;
  const double sig = s.sigma();
  BufferCurve out;
  out.order = GrowthOrder::leading;
  for (double x : x_samples) {
    auto g = [&](double mu) {
      const double P = sig + mu * p.beta_r - w0 * p.beta_i;
      const double Q = mu * p.beta_i + w0 * p.beta_r;
      const double den = 2.0 * (P * P + Q * Q);
      return mu * mu - w0 * w0 - (den == 0.0 ? 0.0 : p.eps * x * x * P / den);
    };
    const double lo = std::abs(w0), hi = std::abs(w0) + 10.0;
    std::optional<double> root;
    double a = lo, ga = g(a);
    if (ga == 0.0) root = a;
    const int n = 2000;
    for (int k = 1; k <= n && !root; ++k) {
      const double b = lo + (hi - lo) * k / n;
      const double gb = g(b);
      if (gb == 0.0) {
        root = b;
      } else if ((ga < 0.0) != (gb < 0.0)) {
        std::uintmax_t iters = 200;
        const auto r = boost::math::tools::toms748_solve(
            g, a, b, ga, gb,
            [](double u, double v) { return std::abs(u - v) <= 1e-12; }, iters);
        root = 0.5 * (r.first + r.second);
      }
      a = b;
      ga = gb;
    }
    if (root) {
      out.samples.push_back({x, *root, buffer_validity(*root, p, s)});
    } else {
      out.samples.push_back({x, std::numeric_limits<double>::quiet_NaN(), false});
    }
  }
  return out;
}

// ------------------------------------------------- growth exponents

/**
 * Growth exponent of the forced linear response about the QSS, evaluated by
 * mode summation in the zero-flux cosine basis of `basis`.
 *
 * leading: E = Re(lambda^2)/2 + eps ln|S(mu,x) / S(mu,x_p)|,
 *          S(mu,x) = sum_m c_m phi_m(x) exp(-lambda D k_m^2),
 *          i.e. eps ln of |I_app * exp(lambda^2/(2 eps) - x^2/(4 D lambda))|
 *          normalized by its value at the source peak x_p, which removes
 *          amplitude and kernel prefactors.
 * k4:      each mode keeps exp((lambda - eps D k^2)^2 / (2 eps)) and the
 *          erf factors (erf(z) - erf(z0))/2, z = (lambda - eps D k^2)/sqrt(2 eps),
 *          and the sum is normalized by the same leading-order peak sum.
 *
 * Negative: the response is still below the source scale; positive: growing.
 */
class GrowthExponent {
public:
  GrowthExponent(const CGLParams& p, const SourceProfile& s, const Grid1D& basis, double mu0,
                 double tail_tol = 1e-12)
      : p_(p), basis_(basis), mu0_(mu0), tail_tol_(tail_tol), x_peak_(s.peak_position()) {
    p_.validate();
    const auto spec = cosine_spectrum(s.sample(basis), basis);
    coeff_.resize(spec.coefficients.size());
    k2_.resize(coeff_.size());
    double cmax = 0.0;
    for (const auto& c : spec.coefficients) cmax = std::max(cmax, std::abs(c.real()));
    for (std::size_t m = 0; m < coeff_.size(); ++m) {
      // projection round-off would otherwise be amplified by growing kernels
      const double c = spec.coefficients[m].real();
      coeff_[m] = std::abs(c) <= 1e-15 * cmax ? 0.0 : c;
      const double k = mode_wavenumber(m, basis);
      k2_[m] = k * k;
    }
  }

  double operator()(double mu, double x, GrowthOrder order) const {
    const auto w = mode_weights(mu, order);
    const auto peak = leading_weights(mu);
    const double e = p_.eps;
    const double base = (p_.lambda(mu) * p_.lambda(mu)).real() / 2.0;
    const Complex num = mode_sum(w, x);
    const Complex den = mode_sum(peak, x_peak_);
    if (std::abs(den) == 0.0) throw ResolutionError("growth exponent: vanishing peak mode sum");
    if (std::abs(num) == 0.0) return -std::numeric_limits<double>::infinity();
    return base + e * (std::log(std::abs(num)) - std::log(std::abs(den)));
  }

  /// Exponent for many x at one mu (shares the per-mode factors).
  std::vector<double> profile(double mu, const std::vector<double>& xs, GrowthOrder order) const {
    const auto w = mode_weights(mu, order);
    const auto peak = leading_weights(mu);
    const double base = (p_.lambda(mu) * p_.lambda(mu)).real() / 2.0;
    const double lden = std::log(std::abs(mode_sum(peak, x_peak_)));
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out[i] = base + p_.eps * (std::log(std::abs(mode_sum(w, xs[i]))) - lden);
    }
    return out;
  }

  double mu0() const noexcept { return mu0_; }
  const Grid1D& basis() const noexcept { return basis_; }

private:
  struct Weights {
    std::vector<Complex> w;
    std::size_t count;
  };

  /// Per-mode factors multiplied by the cosine coefficients, truncated at the tail tolerance.
  Weights truncate(std::vector<Complex> w) const {
    double total = 0.0;
    for (const auto& v : w) {
      const double a = std::abs(v);
      if (!std::isfinite(a)) {
        throw ResolutionError("growth exponent: mode sum overflows (diffusion not damping the modes)");
      }
      total += a;
    }
    double tail = 0.0;
    std::size_t count = w.size();
    while (count > 0 && tail + std::abs(w[count - 1]) <= tail_tol_ * total) {
      tail += std::abs(w[count - 1]);
      --count;
    }
    if (count == w.size() && w.size() > 1 && std::abs(w.back()) > tail_tol_ * total) {
      std::ostringstream os;
      os << "growth exponent: mode sum not converged within " << w.size()
         << " modes (last/total weight " << std::abs(w.back()) / total << ")";
      throw ResolutionError(os.str());
    }
    return {std::move(w), count};
  }

  Weights leading_weights(double mu) const {
    const Complex lD = p_.lambda(mu) * p_.diffusion();
    std::vector<Complex> w(coeff_.size());
    for (std::size_t m = 0; m < w.size(); ++m) {
      w[m] = coeff_[m] == 0.0 ? Complex(0.0, 0.0) : coeff_[m] * std::exp(-lD * k2_[m]);
    }
    return truncate(std::move(w));
  }

  Weights mode_weights(double mu, GrowthOrder order) const {
    if (order == GrowthOrder::leading) return leading_weights(mu);
    const double e = p_.eps;
    const double se = std::sqrt(2.0 * e);
    const Complex D = p_.diffusion();
    const Complex lam = p_.lambda(mu);
    const Complex lam0 = p_.lambda(mu0_);
    const Complex i(0.0, 1.0);
    const Complex scale_log = -lam * lam / (2.0 * e);  // all terms carry exp(-lambda^2/(2 eps))
    std::vector<Complex> w(coeff_.size());
    for (std::size_t m = 0; m < w.size(); ++m) {
      if (coeff_[m] == 0.0) continue;
      const Complex ek = e * D * k2_[m];
      const Complex z = (lam - ek) / se;
      const Complex z0 = (lam0 - ek) / se;
      // exp(z^2 - z0^2) w(-i z0): the part started at mu0 (decays for mu0 < 0)
      const Complex start = std::exp((lam * lam - lam0 * lam0) / (2.0 * e) - (lam - lam0) * D * k2_[m] +
                                     scale_log) *
                            faddeeva_w(-i * z0);
      Complex f;
      if (z.real() > 0.0) {
        f = 2.0 * std::exp(-lam * D * k2_[m] + e * D * D * k2_[m] * k2_[m] / 2.0) -
            std::exp(scale_log) * faddeeva_w(i * z) - start;
      } else {
        f = std::exp(scale_log) * faddeeva_w(-i * z) - start;
      }
      w[m] = coeff_[m] * 0.5 * f;
    }
    return truncate(std::move(w));
  }

  Complex mode_sum(const Weights& w, double x) const {
    Complex acc = 0.0;
    for (std::size_t m = 0; m < w.count; ++m) acc += w.w[m] * cosine_mode(m, x, basis_);
    return acc;
  }

  CGLParams p_;
  Grid1D basis_;
  double mu0_;
  double tail_tol_;
  double x_peak_;
  std::vector<double> coeff_;
  std::vector<double> k2_;
};

inline double inhom_growth_exponent(double mu, double x, double mu0, const CGLParams& p,
                                    const SourceProfile& s, GrowthOrder order, const Grid1D& basis) {
  return GrowthExponent(p, s, basis, mu0)(mu, x, order);
}

/**
 * Zero crossing (decay to growth) of the growth exponent in mu, per x:
 * first sign change on a mu grid, refined by bisection to `tol`.
 */
inline BufferCurve growth_zero_curve(const GrowthExponent& ge, const std::vector<double>& x_samples,
                                     GrowthOrder order, double mu_lo, double mu_hi,
                                     double mu_step = 0.01, double tol = 1e-10,
                                     const SourceProfile* gaussian_for_validity = nullptr,
                                     const CGLParams* params = nullptr) {
  BufferCurve out;
  out.order = order;
  const auto n = static_cast<std::size_t>(std::ceil((mu_hi - mu_lo) / mu_step));
  std::vector<std::optional<double>> root(x_samples.size());
  std::vector<double> prev = ge.profile(mu_lo, x_samples, order);
  double mu_prev = mu_lo;
  for (std::size_t k = 1; k <= n; ++k) {
    const double mu = std::min(mu_hi, mu_lo + static_cast<double>(k) * mu_step);
    const auto cur = ge.profile(mu, x_samples, order);
    for (std::size_t i = 0; i < x_samples.size(); ++i) {
      if (root[i] || !(prev[i] < 0.0) || !(cur[i] >= 0.0)) continue;
      double a = mu_prev, b = mu;
      while (b - a > tol) {
        const double m = 0.5 * (a + b);
        if (ge(m, x_samples[i], order) < 0.0) {
          a = m;
        } else {
          b = m;
        }
      }
      root[i] = 0.5 * (a + b);
    }
    prev = cur;
    mu_prev = mu;
  }
  for (std::size_t i = 0; i < x_samples.size(); ++i) {
    if (!root[i]) {
      out.samples.push_back({x_samples[i], std::numeric_limits<double>::quiet_NaN(), false});
      continue;
    }
    bool valid = true;
    if (gaussian_for_validity && params) valid = buffer_validity(*root[i], *params, *gaussian_for_validity);
    out.samples.push_back({x_samples[i], *root[i], valid});
  }
  return out;
}

// ---------------------------------------------- memory effect, delay

/// For -w0 < mu0 < 0 the homogeneous part diverges first, near mu = -mu0.
inline double memory_onset_prediction(double mu0, const CGLParams& p) {
  if (!(mu0 > -std::abs(p.omega0)) || !(mu0 < 0.0)) {
    std::ostringstream os;
    os << "memory_onset_prediction: mu0=" << mu0 << " outside (-w0, 0); use the buffer curve";
    throw std::domain_error(os.str());
  }
  return -mu0;
}

struct DelaySample {
  double x;
  double value;
};

/// |onset - H| at each onset x inside the sampled range of the Hopf locus.
inline std::vector<DelaySample> delay_measurement(const OnsetCurve& onset, const HopfLocus& hopf) {
  std::vector<DelaySample> out;
  if (onset.samples.empty()) return out;
  if (hopf.samples.empty()) throw std::invalid_argument("delay_measurement: empty Hopf locus");
  double hlo = hopf.samples.front().x, hhi = hlo;
  for (const auto& h : hopf.samples) {
    hlo = std::min(hlo, h.x);
    hhi = std::max(hhi, h.x);
  }
  bool overlap = false;
  for (const auto& o : onset.samples) {
    if (o.x < hlo - 1e-12 || o.x > hhi + 1e-12) continue;
    overlap = true;
    if (auto h = interpolate_hopf(hopf, o.x)) out.push_back({o.x, std::abs(o.ramp - *h)});
  }
  if (!overlap) throw std::invalid_argument("delay_measurement: onset and Hopf x ranges are disjoint");
  return out;
}

// -------------------------------------------------------------- CSV

inline void write_onset_csv(const OnsetCurve& c, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(17);
  os << "x,ramp\n";
  for (const auto& s : c.samples) os << s.x << ',' << s.ramp << '\n';
}

inline void write_buffer_csv(const BufferCurve& c, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(17);
  os << "x,mu,valid,order\n";
  for (const auto& s : c.samples) {
    os << s.x << ',' << s.mu << ',' << (s.valid ? 1 : 0) << ',' << to_string(c.order) << '\n';
  }
}

inline void write_delay_csv(const std::vector<DelaySample>& d, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(17);
  os << "x,value\n";
  for (const auto& s : d) os << s.x << ',' << s.value << '\n';
}

}  // namespace slowpass
