#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "slowpass/grid.hpp"
#include "slowpass/models/ramp.hpp"
#include "slowpass/models/source.hpp"
#include "slowpass/spatial.hpp"

namespace slowpass {

/**
 * Pituitary lactotroph membrane model (units: pF, nS, mV, ms, pA).
 *
 *   C_m V_t   = -(I_Ca + I_K + I_A + I_L) + I + I_app(x) + D V_xx
 *   tau_n n_t = n_inf(V) - n
 *   tau_e e_t = e_inf(V) - e
 *
 *   I_Ca = g_Ca m_inf(V) (V - V_Ca)     I_K = g_K n (V - V_K)
 *   I_A  = g_A a_inf(V) e (V - V_K)     I_L = g_L (V - V_L)
 *
 * Activations m, n, a use x_inf = 1/(1 + exp((v_x - V)/s_x)); the A-current
 * inactivation uses e_inf = 1/(1 + exp((V - v_e)/s_e)).
 *
 * Defaults other than g_K and g_A are not published alongside the PDE; they
 * are chosen so the single-cell model with g_K = 6.15 nS, g_A = 5 nS goes
 * from 1^0 spiking (I <= -1.6 pA) through a 1^1 1^0 alternator window
 * (about -1.55 to -1.15 pA) to 1^1 bursting (I >= -1.05 pA).
 */
struct LactotrophParams {
  double C_m = 0.6;
  double g_Ca = 1.2;
  double g_K = 6.15;
  double g_A = 5.0;
  double g_L = 0.18;
  double V_Ca = 50.0;
  double V_K = -75.0;
  double V_L = -50.0;
  double tau_n = 30.0;
  double tau_e = 20.0;
  double v_m = -20.0, s_m = 12.0;
  double v_n = -5.0, s_n = 10.0;
  double v_a = -20.0, s_a = 10.0;
  double v_e = -63.5, s_e = 9.0;
  double D = 1.0;

  void validate() const {
    if (!(C_m > 0.0) || !(tau_n > 0.0) || !(tau_e > 0.0)) {
      throw std::invalid_argument("LactotrophParams: C_m, tau_n, tau_e must be positive");
    }
    if (g_Ca < 0.0 || g_K < 0.0 || g_A < 0.0 || g_L < 0.0) {
      throw std::invalid_argument("LactotrophParams: conductances must be non-negative");
    }
    if (s_m == 0.0 || s_n == 0.0 || s_a == 0.0 || s_e == 0.0) {
      throw std::invalid_argument("LactotrophParams: Boltzmann slopes must be non-zero");
    }
    if (D < 0.0) throw std::invalid_argument("LactotrophParams: D must be non-negative");
  }

  bool all_conductances_zero() const noexcept {
    return g_Ca == 0.0 && g_K == 0.0 && g_A == 0.0 && g_L == 0.0;
  }
};

struct LactotrophState {
  double V = -60.0;
  double n = 0.1;
  double e = 0.3;

  LactotrophState& operator+=(const LactotrophState& o) noexcept {
    V += o.V;
    n += o.n;
    e += o.e;
    return *this;
  }
  friend LactotrophState operator+(LactotrophState a, const LactotrophState& b) noexcept {
    return a += b;
  }
  friend LactotrophState operator-(const LactotrophState& a, const LactotrophState& b) noexcept {
    return {a.V - b.V, a.n - b.n, a.e - b.e};
  }
  friend LactotrophState operator*(double s, const LactotrophState& a) noexcept {
    return {s * a.V, s * a.n, s * a.e};
  }
  friend LactotrophState operator*(const LactotrophState& a, double s) noexcept { return s * a; }
  bool operator==(const LactotrophState&) const = default;
};

inline double norm(const LactotrophState& s) noexcept {
  return std::sqrt(s.V * s.V + s.n * s.n + s.e * s.e);
}

struct GatingSteadyState {
  double m_inf, n_inf, a_inf, e_inf;
};

namespace detail {
inline double boltzmann(double V, double half, double slope) noexcept {
  return 1.0 / (1.0 + std::exp((half - V) / slope));
}
}  // namespace detail

inline GatingSteadyState gating_steady(double V, const LactotrophParams& p) noexcept {
  return {detail::boltzmann(V, p.v_m, p.s_m), detail::boltzmann(V, p.v_n, p.s_n),
          detail::boltzmann(V, p.v_a, p.s_a), 1.0 - detail::boltzmann(V, p.v_e, p.s_e)};
}

struct IonicCurrents {
  double I_Ca, I_K, I_A, I_L;
  double total() const noexcept { return I_Ca + I_K + I_A + I_L; }
};

inline IonicCurrents ionic_currents(const LactotrophState& s, const LactotrophParams& p) noexcept {
  const auto g = gating_steady(s.V, p);
  return {p.g_Ca * g.m_inf * (s.V - p.V_Ca), p.g_K * s.n * (s.V - p.V_K),
          p.g_A * g.a_inf * s.e * (s.V - p.V_K), p.g_L * (s.V - p.V_L)};
}

/// Reaction part with the total injected current I + I_app(x) already summed.
inline LactotrophState lactotroph_reaction(const LactotrophState& s, double injected,
                                           const LactotrophParams& p) noexcept {
  const auto g = gating_steady(s.V, p);
  const double ionic = p.g_Ca * g.m_inf * (s.V - p.V_Ca) + p.g_K * s.n * (s.V - p.V_K) +
                       p.g_A * g.a_inf * s.e * (s.V - p.V_K) + p.g_L * (s.V - p.V_L);
  return {(-ionic + injected) / p.C_m, (g.n_inf - s.n) / p.tau_n, (g.e_inf - s.e) / p.tau_e};
}

inline LactotrophState lactotroph_rhs(const LactotrophState& s, double x, double I,
                                      const LactotrophParams& p, const SourceProfile& src) {
  return lactotroph_reaction(s, I + src(x), p);
}

/// Row-major 3x3 Jacobian of the reaction with respect to (V, n, e).
inline std::array<double, 9> lactotroph_jacobian(const LactotrophState& s,
                                                 const LactotrophParams& p) noexcept {
  const auto g = gating_steady(s.V, p);
  const double dm = g.m_inf * (1.0 - g.m_inf) / p.s_m;
  const double dn = g.n_inf * (1.0 - g.n_inf) / p.s_n;
  const double da = g.a_inf * (1.0 - g.a_inf) / p.s_a;
  const double de = -g.e_inf * (1.0 - g.e_inf) / p.s_e;
  const double dIdV = p.g_Ca * (dm * (s.V - p.V_Ca) + g.m_inf) + p.g_K * s.n +
                      p.g_A * s.e * (da * (s.V - p.V_K) + g.a_inf) + p.g_L;
  const double dIdn = p.g_K * (s.V - p.V_K);
  const double dIde = p.g_A * g.a_inf * (s.V - p.V_K);
  return {-dIdV / p.C_m, -dIdn / p.C_m, -dIde / p.C_m,  //
          dn / p.tau_n,  -1.0 / p.tau_n, 0.0,           //
          de / p.tau_e,  0.0,            -1.0 / p.tau_e};
}

/// Lactotroph bound to a grid, applied current and baseline-current ramp.
class LactotrophSystem {
public:
  using State = LactotrophState;

  LactotrophSystem(LactotrophParams params, const SourceProfile& source, RampSpec baseline,
                   const Grid1D& grid)
      : params_(params), source_(source), ramp_(baseline), grid_(grid),
        iapp_(source.sample(grid)) {
    params_.validate();
  }

  State reaction(const State& s, std::size_t j, double t) const noexcept {
    return lactotroph_reaction(s, ramp_.value(t) + iapp_[j], params_);
  }

  /// D V_xx enters C_m V_t, so V diffuses with D / C_m.
  Complex diffusivity() const noexcept { return {params_.D / params_.C_m, 0.0}; }

  static double& diffused(State& s) noexcept { return s.V; }
  static double diffused(const State& s) noexcept { return s.V; }
  static double magnitude(const State& s) noexcept { return norm(s); }
  static bool finite(const State& s) noexcept {
    return std::isfinite(s.V) && std::isfinite(s.n) && std::isfinite(s.e);
  }

  const LactotrophParams& params() const noexcept { return params_; }
  const SourceProfile& source() const noexcept { return source_; }
  const RampSpec& ramp() const noexcept { return ramp_; }
  const Grid1D& grid() const noexcept { return grid_; }
  const std::vector<double>& source_values() const noexcept { return iapp_; }

private:
  LactotrophParams params_;
  SourceProfile source_;
  RampSpec ramp_;
  Grid1D grid_;
  std::vector<double> iapp_;
};

}  // namespace slowpass
