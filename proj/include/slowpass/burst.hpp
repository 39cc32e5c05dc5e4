#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "slowpass/error.hpp"
#include "slowpass/integrator.hpp"

namespace slowpass {

enum class EventKind { LAO, SAO };

inline const char* to_string(EventKind k) { return k == EventKind::LAO ? "LAO" : "SAO"; }

struct Event {
  double t;
  EventKind kind;
  double amplitude;
};

struct EventSequence {
  std::vector<Event> events;
};

struct ClassifierParams {
  double v_split = -50.0;
  double amp_floor = 0.5;
  /// Fewest samples allowed between an event's minimum and its maximum.
  std::size_t min_rise_samples = 3;
};

/**
 * Local maxima whose rise above the lowest point since the previous accepted
 * maximum is at least amp_floor. A maximum is an LAO when that low point is
 * below v_split, an SAO otherwise.
 */
inline EventSequence classify_events(const std::vector<double>& t, const std::vector<double>& V,
                                     const ClassifierParams& cp = {}) {
  if (t.size() != V.size()) throw std::invalid_argument("classify_events: t and V differ in length");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw std::invalid_argument("classify_events: times must increase");
  }
  EventSequence out;
  if (V.size() < 3) return out;
  double low = V[0];
  std::size_t low_at = 0;
  bool have_low = false;
  for (std::size_t i = 1; i + 1 < V.size(); ++i) {
    if (V[i] < low) {
      low = V[i];
      low_at = i;
    }
    if (V[i] < V[i - 1] && V[i] <= V[i + 1]) have_low = true;
    // plateau-tolerant maximum: rises into i, does not rise after
    if (!(V[i] > V[i - 1] && V[i] >= V[i + 1])) continue;
    std::size_t j = i;
    while (j + 1 < V.size() && V[j + 1] == V[i]) ++j;
    if (j + 1 < V.size() && V[j + 1] > V[i]) continue;
    if (!have_low) {
      // series opened mid-rise: this maximum has no minimum of its own
      low = V[i];
      low_at = i;
      continue;
    }
    const double amp = V[i] - low;
    if (amp < cp.amp_floor) continue;
    if (i - low_at < cp.min_rise_samples) {
      std::ostringstream os;
      os << "classify_events: only " << (i - low_at) << " samples between minimum and maximum at t="
         << t[i] << "; series too sparse";
      throw ResolutionError(os.str());
    }
    out.events.push_back({t[i], low < cp.v_split ? EventKind::LAO : EventKind::SAO, amp});
    low = V[i];
    low_at = i;
  }
  return out;
}

enum class Periodicity { steady, period2, aperiodic };

inline const char* to_string(Periodicity p) {
  switch (p) {
    case Periodicity::steady:
      return "steady";
    case Periodicity::period2:
      return "period-2";
    case Periodicity::aperiodic:
      return "aperiodic";
  }
  return "?";
}

struct BurstCycle {
  int L = 1;
  int s = 0;
  double t_start = 0.0;
  bool operator==(const BurstCycle& o) const { return L == o.L && s == o.s; }
};

struct BurstSignature {
  std::vector<BurstCycle> cycles;
  Periodicity periodicity = Periodicity::aperiodic;
  /// "1^1", "1^1 1^0" (period-2, larger s first), or the first cycles for aperiodic rhythms.
  std::string label;
};

namespace detail {
inline std::string cycle_label(const BurstCycle& c) {
  return std::to_string(c.L) + "^" + std::to_string(c.s);
}
}  // namespace detail

/**
 * Complete cycles run from one LAO to the next; events before the first LAO
 * and after the last are dropped. Needs at least two complete cycles.
 */
inline BurstSignature burst_signature(const EventSequence& ev) {
  std::vector<std::size_t> lao;
  for (std::size_t i = 0; i < ev.events.size(); ++i) {
    if (ev.events[i].kind == EventKind::LAO) lao.push_back(i);
  }
  if (lao.empty()) throw NotBurstingError("burst_signature: no LAO events");
  if (lao.size() < 3) {
    throw NotBurstingError("burst_signature: fewer than two complete cycles (" +
                           std::to_string(lao.size()) + " LAOs)");
  }
  BurstSignature sig;
  for (std::size_t c = 0; c + 1 < lao.size(); ++c) {
    BurstCycle cyc;
    cyc.t_start = ev.events[lao[c]].t;
    cyc.s = static_cast<int>(lao[c + 1] - lao[c] - 1);
    sig.cycles.push_back(cyc);
  }
  const auto& cy = sig.cycles;
  const bool steady = std::all_of(cy.begin(), cy.end(), [&](const BurstCycle& c) { return c == cy[0]; });
  bool p2 = !steady;
  for (std::size_t i = 2; i < cy.size() && p2; ++i) p2 = cy[i] == cy[i - 2];
  if (steady) {
    sig.periodicity = Periodicity::steady;
    sig.label = detail::cycle_label(cy[0]);
  } else if (p2) {
    sig.periodicity = Periodicity::period2;
    const auto& a = cy[0].s >= cy[1].s ? cy[0] : cy[1];
    const auto& b = cy[0].s >= cy[1].s ? cy[1] : cy[0];
    sig.label = detail::cycle_label(a) + " " + detail::cycle_label(b);
  } else {
    sig.periodicity = Periodicity::aperiodic;
    for (std::size_t i = 0; i < cy.size() && i < 6; ++i) {
      if (i) sig.label += ' ';
      sig.label += detail::cycle_label(cy[i]);
    }
  }
  return sig;
}

/// v_split default: halfway between the lowest voltage and the depolarized QSS voltage.
inline double default_v_split(const std::vector<double>& V, double v_qss) {
  if (V.empty()) throw std::invalid_argument("default_v_split: empty series");
  return 0.5 * (*std::min_element(V.begin(), V.end()) + v_qss);
}

// ------------------------------------------------ maximal canard scan

struct CanardSample {
  double x;
  double a_odd;
  double a_even;
  Periodicity periodicity;
};

struct CanardScan {
  std::vector<CanardSample> samples;
  /// Last x (walking from -> to) where the parity amplitudes are equal, before one vanishes.
  std::optional<double> crossing_x;
  /// First x where one parity's SAO amplitude has dropped to zero after being positive.
  std::optional<double> transition_x;
};

struct CanardScanOptions {
  double x_from = 0.0;
  double x_to = 0.0;
  ClassifierParams classifier{};
  /// Amplitudes within this fraction of the larger one count as equal.
  double equal_tol = 0.05;
};

namespace detail {

struct ParityAmps {
  double odd = 0.0, even = 0.0;
};

/// Mean SAO amplitude per cycle parity, parity fixed by the nearest reference cycle start.
inline ParityAmps parity_amplitudes(const EventSequence& ev, const BurstSignature& sig,
                                    const std::vector<double>& ref_starts) {
  double sum[2] = {0.0, 0.0};
  int count[2] = {0, 0};
  std::size_t e = 0;
  for (std::size_t c = 0; c < sig.cycles.size(); ++c) {
    const double t0 = sig.cycles[c].t_start;
    std::size_t best = 0;
    for (std::size_t r = 1; r < ref_starts.size(); ++r) {
      if (std::abs(ref_starts[r] - t0) < std::abs(ref_starts[best] - t0)) best = r;
    }
    const int par = static_cast<int>(best % 2);
    double amp = 0.0;
    int n_sao = 0;
    while (e < ev.events.size() && ev.events[e].t <= t0) ++e;
    // the cycle ends at the next LAO
    for (std::size_t k = e; k < ev.events.size() && ev.events[k].kind == EventKind::SAO; ++k) {
      amp += ev.events[k].amplitude;
      ++n_sao;
    }
    sum[par] += n_sao ? amp / n_sao : 0.0;
    ++count[par];
  }
  return {count[1] ? sum[1] / count[1] : 0.0, count[0] ? sum[0] / count[0] : 0.0};
}

}  // namespace detail

/**
 * SAO amplitude per cycle parity along a window of x for the post-transient
 * part of a trajectory. Parity labels are aligned across x through the cycle
 * start times of the first period-2 location, then named so that "odd" is the
 * parity whose SAOs vanish.
 */
template <class State, class Proj>
CanardScan maximal_canard_scan(const Trajectory<State>& traj, Proj voltage,
                               const CanardScanOptions& opt) {
  CanardScan out;
  const auto& g = traj.grid;
  const auto times = snapshot_times(traj);
  const double dir = opt.x_to >= opt.x_from ? 1.0 : -1.0;
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = g.x(j);
    if ((x - opt.x_from) * dir >= -1e-12 && (opt.x_to - x) * dir >= -1e-12) idx.push_back(j);
  }
  if (dir < 0) std::reverse(idx.begin(), idx.end());

  struct Col {
    double x;
    EventSequence ev;
    BurstSignature sig;
  };
  std::vector<Col> cols;
  std::optional<std::size_t> ref;
  for (std::size_t j : idx) {
    auto V = time_series(traj, j, voltage);
    auto ev = classify_events(times, V, opt.classifier);
    try {
      auto sig = burst_signature(ev);
      if (!ref && sig.periodicity == Periodicity::period2) ref = cols.size();
      cols.push_back({g.x(j), std::move(ev), std::move(sig)});
    } catch (const NotBurstingError&) {
    }
  }
  if (!ref) return out;
  std::vector<double> ref_starts;
  for (const auto& c : cols[*ref].sig.cycles) ref_starts.push_back(c.t_start);

  for (const auto& c : cols) {
    const auto a = detail::parity_amplitudes(c.ev, c.sig, ref_starts);
    out.samples.push_back({c.x, a.odd, a.even, c.sig.periodicity});
  }
  auto& S = out.samples;
  // transition: first sample where one parity is zero after both were positive
  bool both_seen = false;
  std::optional<std::size_t> v;
  for (std::size_t i = 0; i < S.size(); ++i) {
    if (S[i].a_odd > 0.0 && S[i].a_even > 0.0) both_seen = true;
    if (both_seen && (S[i].a_odd == 0.0) != (S[i].a_even == 0.0)) {
      v = i;
      break;
    }
  }
  if (!v) return out;
  if (S[*v].a_even == 0.0) {
    for (auto& s : S) std::swap(s.a_odd, s.a_even);
  }
  out.transition_x = S[*v].x;
  for (std::size_t i = *v; i-- > 0;) {
    const double d1 = S[i].a_odd - S[i].a_even;
    const double d2 = S[i + 1].a_odd - S[i + 1].a_even;
    const double scale = std::max(S[i].a_odd, S[i].a_even);
    if (std::abs(d1) <= opt.equal_tol * scale) {
      out.crossing_x = S[i].x;
      break;
    }
    if ((d1 < 0.0) != (d2 < 0.0)) {
      out.crossing_x = S[i].x + d1 / (d1 - d2) * (S[i + 1].x - S[i].x);
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------- fronts

struct FrontPoint {
  double t;
  double x_front;
};

struct FrontResult {
  double speed = 0.0;
  std::vector<FrontPoint> points;
};

struct FrontOptions {
  /// Window length and step, in snapshots.
  std::size_t window = 200;
  std::size_t step = 50;
  /// +1: largest marked x, -1: smallest marked x, 0: largest |x|. Positions are reported as distances for 0.
  int side = 0;
  /// Allowed backward motion of the front between windows (space units).
  double tolerance = 0.0;
};

/// Marker predicate: (x, window times, window values) -> marked.
using FrontMarker =
    std::function<bool(double, const std::vector<double>&, const std::vector<double>&)>;

/**
 * Front = outermost marked x per sliding window; speed = least-squares slope of
 * its position over the invasion interval (first marked window to the first
 * window reaching the final extent).
 */
template <class State, class Proj>
FrontResult front_speed(const Trajectory<State>& traj, Proj value, const FrontMarker& marker,
                        const FrontOptions& opt = {}) {
  if (opt.window < 2 || opt.step < 1) throw std::invalid_argument("front_speed: bad window");
  const auto& g = traj.grid;
  const auto times = snapshot_times(traj);
  if (times.size() < opt.window) throw NoFrontError("front_speed: trajectory shorter than one window");
  std::vector<std::vector<double>> series(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) series[j] = time_series(traj, j, value);

  FrontResult out;
  for (std::size_t s = 0; s + opt.window <= times.size(); s += opt.step) {
    const std::vector<double> tw(times.begin() + s, times.begin() + s + opt.window);
    std::optional<double> front;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const std::vector<double> vw(series[j].begin() + s, series[j].begin() + s + opt.window);
      if (!marker(g.x(j), tw, vw)) continue;
      const double pos = opt.side == 0 ? std::abs(g.x(j)) : g.x(j);
      if (!front) {
        front = pos;
      } else if (opt.side < 0) {
        front = std::min(*front, pos);
      } else {
        front = std::max(*front, pos);
      }
    }
    if (front) out.points.push_back({0.5 * (tw.front() + tw.back()), *front});
  }
  if (out.points.empty()) throw NoFrontError("front_speed: marker never true");
  const double sgn = opt.side < 0 ? -1.0 : 1.0;
  const double tol = std::max(opt.tolerance, 1e-12);
  for (std::size_t i = 1; i < out.points.size(); ++i) {
    if (sgn * (out.points[i].x_front - out.points[i - 1].x_front) < -tol) {
      std::ostringstream os;
      os << "front_speed: front retreats at t=" << out.points[i].t;
      throw NoFrontError(os.str());
    }
  }
  std::size_t last = 0;
  for (std::size_t i = 1; i < out.points.size(); ++i) {
    if (sgn * (out.points[i].x_front - out.points[last].x_front) > tol) last = i;
  }
  if (last == 0) return out;
  const std::size_t n = last + 1;
  double mt = 0.0, mx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mt += out.points[i].t;
    mx += out.points[i].x_front;
  }
  mt /= n;
  mx /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (out.points[i].t - mt) * (out.points[i].x_front - mx);
    den += (out.points[i].t - mt) * (out.points[i].t - mt);
  }
  out.speed = den > 0.0 ? num / den : 0.0;
  return out;
}

// -------------------------------------------------------------- CSV

struct LocatedEvents {
  double x;
  EventSequence events;
};

inline void write_events_csv(const std::vector<LocatedEvents>& ev, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(12);
  os << "x,t,kind,amplitude\n";
  for (const auto& le : ev) {
    for (const auto& e : le.events.events) {
      os << le.x << ',' << e.t << ',' << to_string(e.kind) << ',' << e.amplitude << '\n';
    }
  }
}

struct LocatedSignature {
  double x;
  std::optional<BurstSignature> signature;
};

inline void write_signatures_csv(const std::vector<LocatedSignature>& sigs, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(12);
  os << "x,signature,periodicity\n";
  for (const auto& s : sigs) {
    if (s.signature) {
      os << s.x << ",\"" << s.signature->label << "\"," << to_string(s.signature->periodicity) << '\n';
    } else {
      os << s.x << ",,not-bursting\n";
    }
  }
}

inline void write_canard_csv(const CanardScan& c, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(12);
  os << "x,a_odd,a_even\n";
  for (const auto& s : c.samples) os << s.x << ',' << s.a_odd << ',' << s.a_even << '\n';
}

inline void write_front_csv(const FrontResult& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(12);
  os << "# speed=" << f.speed << '\n';
  os << "t,x_front\n";
  for (const auto& p : f.points) os << p.t << ',' << p.x_front << '\n';
}

}  // namespace slowpass
