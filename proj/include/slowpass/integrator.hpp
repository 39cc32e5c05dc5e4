#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "slowpass/error.hpp"
#include "slowpass/grid.hpp"
#include "slowpass/models/ramp.hpp"
#include "slowpass/spatial.hpp"

namespace slowpass {

/**
 * What the integrators need from a model bound to a grid.
 *
 * `reaction(s, j, t)` is the pointwise right-hand side without diffusion, at
 * grid index j and time t. Exactly one scalar component of the state diffuses
 * (`diffused(s)`), with diffusivity `diffusivity()` (complex for CGL).
 */
template <class M>
concept ReactionDiffusionSystem =
    requires(const M& m, typename M::State s, const typename M::State& cs, std::size_t j, double t) {
      { m.reaction(cs, j, t) } -> std::convertible_to<typename M::State>;
      { m.diffusivity() } -> std::convertible_to<Complex>;
      { m.ramp() } -> std::convertible_to<RampSpec>;
      { m.grid() } -> std::convertible_to<Grid1D>;
      { M::diffused(s) };
      { M::magnitude(cs) } -> std::convertible_to<double>;
      { M::finite(cs) } -> std::convertible_to<bool>;
      { cs + 0.5 * cs } -> std::convertible_to<typename M::State>;
    };

enum class IntegratorKind { strang, cn_reference };

inline const char* to_string(IntegratorKind k) {
  return k == IntegratorKind::strang ? "strang" : "cn_reference";
}

inline IntegratorKind parse_integrator_kind(const std::string& s) {
  if (s == "strang") return IntegratorKind::strang;
  if (s == "cn_reference" || s == "cn") return IntegratorKind::cn_reference;
  throw std::invalid_argument("unknown integrator kind '" + s + "'");
}

struct RunConfig {
  double dt = 0.01;
  /// Stop time. Ignored when `ramp_end` is set.
  double t_end = 0.0;
  /// Stop once the ramp reaches this value (mu_end for CGL, I_end for the lactotroph).
  std::optional<double> ramp_end;
  std::size_t snapshot_stride = 50;
  /// Snapshots before this time are not stored (transient skipping).
  double record_start = 0.0;
  IntegratorKind kind = IntegratorKind::strang;
  double blow_up_threshold = 1e6;
  int max_fixed_point_sweeps = 25;
  double fixed_point_tol = 1e-13;
  /// Wavenumber the grid should resolve (dx <= pi/k_max); 0 disables the check.
  double resolve_k_max = 0.0;

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("RunConfig: dt must be positive");
    if (snapshot_stride < 1) throw std::invalid_argument("RunConfig: snapshot stride must be >= 1");
    if (!ramp_end && !(t_end > 0.0)) {
      throw std::invalid_argument("RunConfig: need t_end > 0 or a ramp end value");
    }
  }

  double resolved_t_end(const RampSpec& ramp) const {
    if (!ramp_end) return t_end;
    const double t = ramp.time_of(*ramp_end);
    if (!(t > 0.0)) {
      throw std::invalid_argument("RunConfig: ramp end value lies behind the ramp start");
    }
    return t;
  }
};

template <class State>
struct Snapshot {
  double t = 0.0;
  double ramp = 0.0;
  std::vector<State> field;
};

struct BlowUpInfo {
  double t;
  std::size_t index;
  std::string message;
};

template <class State>
struct Trajectory {
  Grid1D grid{1.0, 3};
  RampSpec ramp;
  RunConfig config;
  std::vector<Snapshot<State>> snapshots;
  std::optional<BlowUpInfo> blow_up;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return snapshots.size(); }
  bool empty() const noexcept { return snapshots.empty(); }
};

namespace detail {

template <class System>
void check_finite(const System& sys, std::span<const typename System::State> f, double t,
                  double threshold) {
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (!System::finite(f[j]) || System::magnitude(f[j]) > threshold) {
      std::ostringstream os;
      os << "blow-up at t=" << t << ", x=" << sys.grid().x(j) << " (index " << j << ")";
      throw BlowUpError(t, j, os.str());
    }
  }
}

template <class System>
using diffused_scalar_t =
    std::remove_cvref_t<decltype(System::diffused(std::declval<typename System::State&>()))>;

}  // namespace detail

/**
 * Balanced symmetric Strang splitting: diffusion over dt/2 (Crank-Nicolson),
 * classical RK4 on the reaction over dt with the ramp sampled at the stage
 * times, diffusion over dt/2.
 */
template <ReactionDiffusionSystem System>
class StrangStepper {
public:
  using State = typename System::State;
  using Scalar = detail::diffused_scalar_t<System>;

  StrangStepper(const System& sys, double dt, double blow_up_threshold = 1e6)
      : sys_(sys), dt_(dt), threshold_(blow_up_threshold),
        half_(sys.grid(), sys.diffusivity(), 0.5 * dt) {}

  void step(std::vector<State>& f, double t) const {
    diffuse(f);
    react(f, t);
    diffuse(f);
    detail::check_finite(sys_, std::span<const State>(f), t + dt_, threshold_);
  }

  double dt() const noexcept { return dt_; }

private:
  void diffuse(std::vector<State>& f) const {
    if (half_.is_identity()) return;
    if constexpr (std::is_same_v<State, Scalar>) {
      half_.apply(std::span<State>(f));
    } else {
      buffer_.resize(f.size());
      for (std::size_t j = 0; j < f.size(); ++j) buffer_[j] = System::diffused(f[j]);
      half_.apply(std::span<Scalar>(buffer_));
      for (std::size_t j = 0; j < f.size(); ++j) System::diffused(f[j]) = buffer_[j];
    }
  }

  void react(std::vector<State>& f, double t) const {
    const double h = dt_;
    const double th = t + 0.5 * h;
    const double t1 = t + h;
    for (std::size_t j = 0; j < f.size(); ++j) {
      const State& y = f[j];
      const State k1 = sys_.reaction(y, j, t);
      const State k2 = sys_.reaction(y + (0.5 * h) * k1, j, th);
      const State k3 = sys_.reaction(y + (0.5 * h) * k2, j, th);
      const State k4 = sys_.reaction(y + h * k3, j, t1);
      f[j] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }

  const System& sys_;
  double dt_;
  double threshold_;
  CrankNicolsonDiffusion half_;
  mutable std::vector<Scalar> buffer_;
};

/**
 * Monolithic Crank-Nicolson: trapezoidal diffusion, implicit-midpoint reaction
 * evaluated at t + dt/2, with the midpoint state found by fixed-point sweeps.
 */
template <ReactionDiffusionSystem System>
class CrankNicolsonStepper {
public:
  using State = typename System::State;
  using Scalar = detail::diffused_scalar_t<System>;

  CrankNicolsonStepper(const System& sys, double dt, double blow_up_threshold = 1e6,
                       int max_sweeps = 25, double tol = 1e-13)
      : sys_(sys), dt_(dt), threshold_(blow_up_threshold), max_sweeps_(max_sweeps), tol_(tol),
        full_(sys.grid(), sys.diffusivity(), dt) {}

  /// Returns the number of fixed-point sweeps used.
  int step(std::vector<State>& f, double t) const {
    const std::size_t n = f.size();
    const double tm = t + 0.5 * dt_;
    explicit_.resize(n);
    rhs_.resize(n);
    next_.assign(f.begin(), f.end());
    old_.assign(f.begin(), f.end());
    const bool diffuse = !full_.is_identity();
    if (diffuse) {
      std::vector<Scalar> u(n);
      for (std::size_t j = 0; j < n; ++j) u[j] = System::diffused(old_[j]);
      full_.apply_explicit(std::span<const Scalar>(u), std::span<Scalar>(explicit_));
    }
    double scale = 1.0;
    for (const auto& s : old_) scale = std::max(scale, System::magnitude(s));

    work_.resize(n);
    for (int sweep = 1; sweep <= max_sweeps_; ++sweep) {
      double change = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const State mid = 0.5 * (old_[j] + next_[j]);
        const State r = sys_.reaction(mid, j, tm);
        work_[j] = old_[j] + dt_ * r;
        if (diffuse) rhs_[j] = explicit_[j] + dt_ * System::diffused(r);
      }
      if (diffuse) {
        full_.solve_implicit(std::span<Scalar>(rhs_));
        for (std::size_t j = 0; j < n; ++j) System::diffused(work_[j]) = rhs_[j];
      }
      for (std::size_t j = 0; j < n; ++j) {
        change = std::max(change, System::magnitude(work_[j] - next_[j]));
      }
      next_.swap(work_);
      if (!std::isfinite(change)) {
        detail::check_finite(sys_, std::span<const State>(next_), t + dt_, threshold_);
      }
      if (change <= tol_ * scale) {
        f.assign(next_.begin(), next_.end());
        detail::check_finite(sys_, std::span<const State>(f), t + dt_, threshold_);
        return sweep;
      }
    }
    std::ostringstream os;
    os << "Crank-Nicolson fixed point did not converge in " << max_sweeps_ << " sweeps at t=" << t;
    throw StepFailure(os.str());
  }

  double dt() const noexcept { return dt_; }

private:
  const System& sys_;
  double dt_;
  double threshold_;
  int max_sweeps_;
  double tol_;
  CrankNicolsonDiffusion full_;
  mutable std::vector<Scalar> explicit_, rhs_;
  mutable std::vector<State> next_, old_, work_;
};

template <ReactionDiffusionSystem System>
std::vector<typename System::State> strang_step(std::vector<typename System::State> f, double t,
                                                double dt, const System& sys) {
  if (!(dt > 0.0)) throw std::invalid_argument("strang_step: dt must be positive");
  detail::require_size(f.size(), sys.grid(), "strang_step");
  StrangStepper<System>(sys, dt).step(f, t);
  return f;
}

template <ReactionDiffusionSystem System>
std::vector<typename System::State> cn_reference_step(std::vector<typename System::State> f,
                                                      double t, double dt, const System& sys) {
  if (!(dt > 0.0)) throw std::invalid_argument("cn_reference_step: dt must be positive");
  detail::require_size(f.size(), sys.grid(), "cn_reference_step");
  CrankNicolsonStepper<System>(sys, dt).step(f, t);
  return f;
}

/**
 * Integrate from t = 0 to the configured end, storing every `snapshot_stride`-th
 * state from `record_start` on. Time is computed as step*dt so the ramp value
 * in each snapshot is exactly ramp(t). A blow-up ends the run early and is
 * reported in `Trajectory::blow_up`.
 */
template <ReactionDiffusionSystem System>
Trajectory<typename System::State> integrate_run(const System& sys, const RunConfig& cfg,
                                                 std::vector<typename System::State> initial,
                                                 const std::function<void(double)>& progress = {}) {
  using State = typename System::State;
  cfg.validate();
  detail::require_size(initial.size(), sys.grid(), "integrate_run");

  Trajectory<State> traj;
  traj.grid = sys.grid();
  traj.ramp = sys.ramp();
  traj.config = cfg;
  if (cfg.resolve_k_max > 0.0 && !resolves_wavenumber(sys.grid(), cfg.resolve_k_max)) {
    std::ostringstream os;
    os << "WARNING: dx=" << sys.grid().dx() << " does not resolve k_max=" << cfg.resolve_k_max
       << " (needs dx <= " << std::numbers::pi / cfg.resolve_k_max << ")";
    traj.warnings.push_back(os.str());
  }

  const double t_end = cfg.resolved_t_end(sys.ramp());
  const auto n_steps = static_cast<std::size_t>(std::ceil(t_end / cfg.dt - 1e-9));

  auto record = [&](std::size_t step, const std::vector<State>& f) {
    const double t = static_cast<double>(step) * cfg.dt;
    if (t + 1e-12 < cfg.record_start) return;
    traj.snapshots.push_back({t, sys.ramp().value(t), f});
  };

  for (std::size_t j = 0; j < initial.size(); ++j) {
    if (!System::finite(initial[j])) throw std::invalid_argument("integrate_run: non-finite initial field");
  }

  std::vector<State> f = std::move(initial);
  record(0, f);

  std::optional<StrangStepper<System>> strang;
  std::optional<CrankNicolsonStepper<System>> cn;
  if (cfg.kind == IntegratorKind::strang) {
    strang.emplace(sys, cfg.dt, cfg.blow_up_threshold);
  } else {
    cn.emplace(sys, cfg.dt, cfg.blow_up_threshold, cfg.max_fixed_point_sweeps, cfg.fixed_point_tol);
  }

  for (std::size_t step = 0; step < n_steps; ++step) {
    const double t = static_cast<double>(step) * cfg.dt;
    try {
      if (strang) {
        strang->step(f, t);
      } else {
        cn->step(f, t);
      }
    } catch (const BlowUpError& e) {
      traj.blow_up = BlowUpInfo{e.time(), e.index(), e.what()};
      break;
    }
    const std::size_t done = step + 1;
    if (done % cfg.snapshot_stride == 0 || done == n_steps) record(done, f);
    if (progress && done % 1000 == 0) progress(static_cast<double>(done) / n_steps);
  }
  return traj;
}

/// Pull one grid column out of a trajectory as a time series.
template <class State, class Proj>
std::vector<double> time_series(const Trajectory<State>& traj, std::size_t j, Proj proj) {
  std::vector<double> out;
  out.reserve(traj.size());
  for (const auto& s : traj.snapshots) out.push_back(proj(s.field[j]));
  return out;
}

template <class State>
std::vector<double> snapshot_times(const Trajectory<State>& traj) {
  std::vector<double> out;
  out.reserve(traj.size());
  for (const auto& s : traj.snapshots) out.push_back(s.t);
  return out;
}

}  // namespace slowpass
