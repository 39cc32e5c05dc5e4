#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "slowpass/burst.hpp"
#include "slowpass/dhb.hpp"
#include "slowpass/error.hpp"
#include "slowpass/integrator.hpp"
#include "slowpass/models/cgl.hpp"
#include "slowpass/models/lactotroph.hpp"
#include "slowpass/models/ramp.hpp"
#include "slowpass/models/source.hpp"
#include "slowpass/qss_hopf.hpp"
#include "slowpass/spatial.hpp"
#include "slowpass/trajectory_io.hpp"

namespace slowpass {

inline constexpr const char* kVersion = "0.1.0";

/// Every problem found while checking a spec, reported together.
class ValidationError : public std::invalid_argument {
public:
  explicit ValidationError(std::vector<std::string> problems)
      : std::invalid_argument(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "invalid experiment:";
    for (const auto& e : p) s += "\n  - " + e;
    return s;
  }
  std::vector<std::string> problems_;
};

enum class ModelKind { cgl, lactotroph };
enum class InitKind { qss, rest };

struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

/**
 * One experiment: a base run plus optional sweep axes (cartesian product).
 * Every field is reachable through a config key, see set_key().
 */
struct ExperimentSpec {
  std::string name = "experiment";
  std::string description;
  ModelKind model = ModelKind::cgl;
  CGLParams cgl{};
  LactotrophParams lac{};

  SourceProfile::Kind source_kind = SourceProfile::Kind::gaussian;
  double source_a = 1.0;
  double source_sigma = 0.25;

  double ramp_initial = -1.0;
  /// Lactotroph only; the CGL ramp always moves at rate eps.
  double ramp_rate = 0.0;
  RampSpec::Direction ramp_direction = RampSpec::Direction::increasing;

  double L = 20.0;
  std::size_t N = 4001;
  RunConfig run{};
  /// Resolution guard as a power of eps (CGL): k_max = eps^-k_max_power; 0 disables it.
  double k_max_power = 1.5;

  InitKind init = InitKind::qss;
  /// Uniform shift added to the initial field (real part / V).
  double init_offset = 0.0;

  std::optional<double> onset_threshold;
  std::vector<std::string> analyses;
  double x_step = 0.25;
  std::optional<double> v_split;
  double canard_from = 0.0, canard_to = 0.0;
  FrontOptions front{};
  double front_min_sao = 2.5;

  std::string trajectory_format = "binary";
  std::size_t csv_x_stride = 10;

  std::vector<SweepAxis> sweep;
  /// Provenance label per explicitly set key.
  std::map<std::string, std::string> provenance;

  SourceProfile source() const {
    switch (source_kind) {
      case SourceProfile::Kind::gaussian:
        return SourceProfile::gaussian(source_a, source_sigma);
      case SourceProfile::Kind::constant:
        return SourceProfile::constant(source_a);
      case SourceProfile::Kind::tabulated:
        break;
    }
    throw std::invalid_argument("tabulated sources are not configurable");
  }

  RampSpec ramp() const {
    const double rate = model == ModelKind::cgl ? cgl.eps : ramp_rate;
    return {ramp_initial, rate, ramp_direction};
  }

  RunConfig resolved_run() const {
    RunConfig r = run;
    if (model == ModelKind::cgl && k_max_power > 0.0) r.resolve_k_max = std::pow(cgl.eps, -k_max_power);
    return r;
  }

  Grid1D grid() const { return build_grid(L, N); }
};

inline const std::vector<std::string>& known_analyses() {
  static const std::vector<std::string> a{"onset",      "buffer", "delay",   "signatures",
                                          "canard-scan", "front", "spectrum"};
  return a;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  double d = 0.0;
  const auto t = trim(v);
  const auto r = std::from_chars(t.data(), t.data() + t.size(), d);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size() || !std::isfinite(d)) {
    throw std::invalid_argument((key.empty() ? "" : key + ": ") + "'" + v + "' is not a number");
  }
  return d;
}

inline std::size_t parse_size(const std::string& key, const std::string& v) {
  const double d = parse_double(key, v);
  if (d < 0.0 || d != std::floor(d)) {
    throw std::invalid_argument((key.empty() ? "" : key + ": ") + "'" + v + "' is not a count");
  }
  return static_cast<std::size_t>(d);
}

inline std::optional<double> parse_optional(const std::string& key, const std::string& v) {
  const auto t = trim(v);
  if (t.empty() || t == "none" || t == "auto") return std::nullopt;
  return parse_double(key, t);
}

/// Shortest round-trip text for a double.
inline std::string fmt(double d) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, r.ptr);
}

inline std::string fmt(const std::optional<double>& d) { return d ? fmt(*d) : "auto"; }

struct KeyDef {
  std::function<void(ExperimentSpec&, const std::string&)> set;
  std::function<std::string(const ExperimentSpec&)> get;
};

inline KeyDef num(double ExperimentSpec::*m) {
  return {[m](ExperimentSpec& s, const std::string& v) { s.*m = parse_double("", v); },
          [m](const ExperimentSpec& s) { return fmt(s.*m); }};
}

template <class P>
KeyDef sub(P ExperimentSpec::*outer, double P::*inner) {
  return {[outer, inner](ExperimentSpec& s, const std::string& v) { (s.*outer).*inner = parse_double("", v); },
          [outer, inner](const ExperimentSpec& s) { return fmt((s.*outer).*inner); }};
}

inline KeyDef run_num(double RunConfig::*m) {
  return {[m](ExperimentSpec& s, const std::string& v) { s.run.*m = parse_double("", v); },
          [m](const ExperimentSpec& s) { return fmt(s.run.*m); }};
}

inline const std::vector<std::pair<std::string, KeyDef>>& key_table() {
  using S = ExperimentSpec;
  static const std::vector<std::pair<std::string, KeyDef>> t = [] {
    std::vector<std::pair<std::string, KeyDef>> k;
    k.push_back({"name", {[](S& s, const std::string& v) { s.name = trim(v); },
                          [](const S& s) { return s.name; }}});
    k.push_back({"model", {[](S& s, const std::string& v) {
                             const auto m = trim(v);
                             if (m == "cgl") {
                               s.model = ModelKind::cgl;
                             } else if (m == "lactotroph") {
                               s.model = ModelKind::lactotroph;
                             } else {
                               throw std::invalid_argument("unknown model '" + m + "'");
                             }
                           },
                           [](const S& s) { return std::string(s.model == ModelKind::cgl ? "cgl" : "lactotroph"); }}});
    k.push_back({"cgl.eps", sub(&S::cgl, &CGLParams::eps)});
    k.push_back({"cgl.omega0", sub(&S::cgl, &CGLParams::omega0)});
    k.push_back({"cgl.alpha_i", sub(&S::cgl, &CGLParams::alpha_i)});
    k.push_back({"cgl.beta_r", sub(&S::cgl, &CGLParams::beta_r)});
    k.push_back({"cgl.beta_i", sub(&S::cgl, &CGLParams::beta_i)});
    using LP = LactotrophParams;
    const std::pair<const char*, double LP::*> lac[] = {
        {"C_m", &LP::C_m},   {"g_Ca", &LP::g_Ca}, {"g_K", &LP::g_K},     {"g_A", &LP::g_A},
        {"g_L", &LP::g_L},   {"V_Ca", &LP::V_Ca}, {"V_K", &LP::V_K},     {"V_L", &LP::V_L},
        {"tau_n", &LP::tau_n}, {"tau_e", &LP::tau_e}, {"v_m", &LP::v_m}, {"s_m", &LP::s_m},
        {"v_n", &LP::v_n},   {"s_n", &LP::s_n},   {"v_a", &LP::v_a},     {"s_a", &LP::s_a},
        {"v_e", &LP::v_e},   {"s_e", &LP::s_e},   {"D", &LP::D}};
    for (const auto& [n, m] : lac) k.push_back({std::string("lac.") + n, sub(&S::lac, m)});
    k.push_back({"source.kind", {[](S& s, const std::string& v) {
                                   const auto m = trim(v);
                                   if (m == "gaussian") {
                                     s.source_kind = SourceProfile::Kind::gaussian;
                                   } else if (m == "constant") {
                                     s.source_kind = SourceProfile::Kind::constant;
                                   } else {
                                     throw std::invalid_argument("unknown source kind '" + m + "'");
                                   }
                                 },
                                 [](const S& s) {
                                   return std::string(s.source_kind == SourceProfile::Kind::constant ? "constant" : "gaussian");
                                 }}});
    k.push_back({"source.a", num(&S::source_a)});
    k.push_back({"source.sigma", num(&S::source_sigma)});
    k.push_back({"ramp.initial", num(&S::ramp_initial)});
    k.push_back({"ramp.rate", num(&S::ramp_rate)});
    k.push_back({"ramp.direction", {[](S& s, const std::string& v) {
                                      const auto m = trim(v);
                                      if (m == "increasing") {
                                        s.ramp_direction = RampSpec::Direction::increasing;
                                      } else if (m == "decreasing") {
                                        s.ramp_direction = RampSpec::Direction::decreasing;
                                      } else {
                                        throw std::invalid_argument("ramp direction must be increasing or decreasing");
                                      }
                                    },
                                    [](const S& s) {
                                      return std::string(s.ramp_direction == RampSpec::Direction::increasing ? "increasing" : "decreasing");
                                    }}});
    k.push_back({"grid.L", num(&S::L)});
    k.push_back({"grid.N", {[](S& s, const std::string& v) { s.N = parse_size("", v); },
                            [](const S& s) { return std::to_string(s.N); }}});
    k.push_back({"run.dt", run_num(&RunConfig::dt)});
    k.push_back({"run.t_end", run_num(&RunConfig::t_end)});
    k.push_back({"run.ramp_end", {[](S& s, const std::string& v) { s.run.ramp_end = parse_optional("", v); },
                                  [](const S& s) { return fmt(s.run.ramp_end); }}});
    k.push_back({"run.stride", {[](S& s, const std::string& v) { s.run.snapshot_stride = parse_size("", v); },
                                [](const S& s) { return std::to_string(s.run.snapshot_stride); }}});
    k.push_back({"run.record_start", run_num(&RunConfig::record_start)});
    k.push_back({"run.integrator", {[](S& s, const std::string& v) { s.run.kind = parse_integrator_kind(trim(v)); },
                                    [](const S& s) { return std::string(to_string(s.run.kind)); }}});
    k.push_back({"run.blow_up", run_num(&RunConfig::blow_up_threshold)});
    k.push_back({"run.k_max_power", num(&S::k_max_power)});
    k.push_back({"init.kind", {[](S& s, const std::string& v) {
                                 const auto m = trim(v);
                                 if (m == "qss") {
                                   s.init = InitKind::qss;
                                 } else if (m == "rest") {
                                   s.init = InitKind::rest;
                                 } else {
                                   throw std::invalid_argument("init.kind must be qss or rest");
                                 }
                               },
                               [](const S& s) { return std::string(s.init == InitKind::qss ? "qss" : "rest"); }}});
    k.push_back({"init.offset", num(&S::init_offset)});
    k.push_back({"onset.threshold", {[](S& s, const std::string& v) { s.onset_threshold = parse_optional("", v); },
                                     [](const S& s) { return fmt(s.onset_threshold); }}});
    k.push_back({"analyses", {[](S& s, const std::string& v) { s.analyses = split_list(v); },
                              [](const S& s) {
                                std::string o;
                                for (const auto& a : s.analyses) o += (o.empty() ? "" : ", ") + a;
                                return o;
                              }}});
    k.push_back({"analysis.x_step", num(&S::x_step)});
    k.push_back({"classifier.v_split", {[](S& s, const std::string& v) { s.v_split = parse_optional("", v); },
                                        [](const S& s) { return fmt(s.v_split); }}});
    k.push_back({"canard.x_from", num(&S::canard_from)});
    k.push_back({"canard.x_to", num(&S::canard_to)});
    k.push_back({"front.window", {[](S& s, const std::string& v) { s.front.window = parse_size("", v); },
                                  [](const S& s) { return std::to_string(s.front.window); }}});
    k.push_back({"front.step", {[](S& s, const std::string& v) { s.front.step = parse_size("", v); },
                                [](const S& s) { return std::to_string(s.front.step); }}});
    k.push_back({"front.tolerance", {[](S& s, const std::string& v) { s.front.tolerance = parse_double("", v); },
                                     [](const S& s) { return fmt(s.front.tolerance); }}});
    k.push_back({"front.min_sao", num(&S::front_min_sao)});
    k.push_back({"output.trajectory", {[](S& s, const std::string& v) {
                                         const auto m = trim(v);
                                         if (m != "binary" && m != "csv" && m != "none") {
                                           throw std::invalid_argument("output.trajectory must be binary, csv or none");
                                         }
                                         s.trajectory_format = m;
                                       },
                                       [](const S& s) { return s.trajectory_format; }}});
    k.push_back({"output.csv_x_stride", {[](S& s, const std::string& v) { s.csv_x_stride = parse_size("", v); },
                                         [](const S& s) { return std::to_string(s.csv_x_stride); }}});
    return k;
  }();
  return t;
}

inline const KeyDef* find_key(const std::string& key) {
  for (const auto& [k, d] : key_table()) {
    if (k == key) return &d;
  }
  return nullptr;
}

}  // namespace detail

/// Set one config key; `label` is recorded as the value's provenance.
inline void set_key(ExperimentSpec& s, const std::string& key, const std::string& value,
                    const std::string& label = "config") {
  const auto k = detail::trim(key);
  if (k.rfind("sweep.", 0) == 0) {
    const auto target = k.substr(6);
    if (!detail::find_key(target)) throw std::invalid_argument("sweep over unknown key '" + target + "'");
    auto vals = detail::split_list(value);
    if (vals.empty()) throw std::invalid_argument(k + ": empty value list");
    std::erase_if(s.sweep, [&](const SweepAxis& a) { return a.key == target; });
    s.sweep.push_back({target, std::move(vals)});
    s.provenance[k] = label;
    return;
  }
  const auto* d = detail::find_key(k);
  if (!d) throw std::invalid_argument("unknown key '" + k + "'");
  try {
    d->set(s, value);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(k + ": " + e.what());
  }
  s.provenance[k] = label;
}

/// Apply "key=value".
inline void apply_override(ExperimentSpec& s, const std::string& kv, const std::string& label = "override") {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("override '" + kv + "' is not key=value");
  set_key(s, kv.substr(0, eq), kv.substr(eq + 1), label);
}

/// Resolved configuration as ordered key/value pairs (sweep axes last).
inline std::vector<std::pair<std::string, std::string>> to_key_values(const ExperimentSpec& s) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [k, d] : detail::key_table()) out.emplace_back(k, d.get(s));
  for (const auto& a : s.sweep) {
    std::string v;
    for (const auto& x : a.values) v += (v.empty() ? "" : ", ") + x;
    out.emplace_back("sweep." + a.key, v);
  }
  return out;
}

inline std::string provenance_of(const ExperimentSpec& s, const std::string& key) {
  const auto it = s.provenance.find(key);
  return it == s.provenance.end() ? "library default" : it->second;
}

inline void write_config(const ExperimentSpec& s, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (const auto& [k, v] : to_key_values(s)) os << k << " = " << v << '\n';
}

// ----------------------------------------------------------- presets

struct Preset {
  std::string name;
  std::string description;
  ExperimentSpec spec;
};

namespace detail {

struct PresetBuilder {
  ExperimentSpec s;
  PresetBuilder& set(const std::string& k, const std::string& v, const std::string& label) {
    set_key(s, k, v, label);
    return *this;
  }
};

inline constexpr const char* kDesign = "design decision (see README)";

inline ExperimentSpec cgl_base(const std::string& name, const std::string& caption) {
  PresetBuilder b;
  b.set("name", name, kDesign)
      .set("model", "cgl", caption)
      .set("cgl.eps", "0.01", "CGL defaults")
      .set("cgl.omega0", "0.5", "CGL defaults")
      .set("cgl.alpha_i", "0.6", "CGL defaults")
      .set("ramp.initial", "-1", caption)
      .set("grid.L", "20", kDesign)
      .set("grid.N", "4001", kDesign)
      .set("run.dt", "0.01", kDesign)
      .set("run.ramp_end", "1.6", kDesign)
      .set("run.stride", "25", kDesign)
      .set("init.kind", "qss", kDesign)
      .set("analysis.x_step", "0.25", kDesign)
      .set("analyses", "onset, buffer", kDesign);
  return b.s;
}

inline ExperimentSpec lac_base(const std::string& name, const std::string& caption) {
  PresetBuilder b;
  b.set("name", name, kDesign)
      .set("model", "lactotroph", caption)
      .set("lac.g_A", "5", caption)
      .set("source.kind", "gaussian", caption)
      .set("source.a", "1", caption)
      .set("source.sigma", "50", caption)
      .set("grid.L", "50", caption)
      .set("grid.N", "1001", kDesign)
      .set("run.dt", "0.05", kDesign)
      .set("run.k_max_power", "0", kDesign)
      .set("analysis.x_step", "1", kDesign);
  return b.s;
}

}  // namespace detail

inline std::vector<Preset> preset_catalog() {
  using detail::kDesign;
  std::vector<Preset> out;
  {
    const std::string cap = "Fig. 1 caption";
    auto s = detail::lac_base("fig1", cap);
    set_key(s, "lac.g_K", "6.15", cap);
    set_key(s, "lac.D", "1", cap);
    set_key(s, "ramp.initial", "-1.73", kDesign);
    set_key(s, "ramp.rate", "0", kDesign);
    set_key(s, "run.t_end", "10000", kDesign);
    set_key(s, "run.record_start", "6000", kDesign);
    set_key(s, "run.stride", "10", kDesign);
    set_key(s, "init.kind", "rest", kDesign);
    set_key(s, "canard.x_from", "0", kDesign);
    set_key(s, "canard.x_to", "30", kDesign);
    set_key(s, "analyses", "signatures, canard-scan", kDesign);
    out.push_back({"fig1", "lactotroph, three regions of bursting under a gaussian applied current", s});
  }
  {
    const std::string cap = "Fig. 4 caption";
    auto s = detail::lac_base("fig4", cap);
    set_key(s, "lac.g_K", "4.35", cap);
    set_key(s, "lac.D", "1", cap);
    set_key(s, "grid.L", "100", cap);
    set_key(s, "grid.N", "2001", kDesign);
    set_key(s, "ramp.initial", "3", kDesign);
    set_key(s, "ramp.rate", "0", kDesign);
    set_key(s, "run.t_end", "20000", kDesign);
    set_key(s, "run.stride", "10", kDesign);
    set_key(s, "init.kind", "rest", kDesign);
    set_key(s, "front.window", "400", kDesign);
    set_key(s, "front.step", "200", kDesign);
    set_key(s, "front.tolerance", "2", kDesign);
    set_key(s, "analyses", "signatures, front", kDesign);
    out.push_back({"fig4", "lactotroph, invasion of one bursting rhythm by another", s});
  }
  const std::pair<const char*, const char*> fig5[] = {{"fig5a", "0"}, {"fig5b", "0.001"}, {"fig5c", "0.02"}};
  for (const auto& [n, D] : fig5) {
    const std::string cap = "Fig. 5 caption";
    auto s = detail::lac_base(n, cap);
    set_key(s, "lac.g_K", "4", cap);
    set_key(s, "lac.D", D, cap);
    set_key(s, "ramp.direction", "decreasing", "I(t) = I0 - eps t");
    set_key(s, "ramp.initial", "12", kDesign);
    set_key(s, "ramp.rate", "0.001", kDesign);
    set_key(s, "run.ramp_end", "5", kDesign);
    set_key(s, "run.stride", "20", kDesign);
    set_key(s, "init.kind", "qss", kDesign);
    set_key(s, "onset.threshold", "1", kDesign);
    set_key(s, "analyses", "onset, delay", kDesign);
    out.push_back({n, std::string("lactotroph, delayed Hopf under a decreasing baseline current, D=") + D, s});
  }
  {
    const std::string cap = "Fig. 6 caption";
    auto s = detail::cgl_base("fig6a", cap);
    set_key(s, "cgl.beta_r", "1", "CGL defaults");
    set_key(s, "cgl.beta_i", "0", "CGL defaults");
    set_key(s, "source.kind", "constant", cap);
    set_key(s, "source.a", "1", cap);
    set_key(s, "run.ramp_end", "1", kDesign);
    out.push_back({"fig6a", "CGL, homogeneous source", s});
  }
  const std::tuple<const char*, const char*, const char*, const char*> fig6[] = {
      {"fig6b", "0", "0", "1"}, {"fig6c", "3", "1", "1"}, {"fig6d", "1", "0", "100"}};
  for (const auto& [n, br, bi, a] : fig6) {
    const std::string cap = "Fig. 6 caption";
    auto s = detail::cgl_base(n, cap);
    set_key(s, "cgl.beta_r", br, cap);
    set_key(s, "cgl.beta_i", bi, cap);
    set_key(s, "source.kind", "gaussian", cap);
    set_key(s, "source.a", a, cap);
    set_key(s, "source.sigma", "0.25", cap);
    out.push_back({n, std::string("CGL, gaussian source, (beta_r, beta_i, a) = (") + br + ", " + bi + ", " + a + ")", s});
  }
  {
    auto s = detail::cgl_base("memory", "memory effect");
    set_key(s, "cgl.beta_r", "1", "CGL defaults");
    set_key(s, "source.kind", "constant", kDesign);
    set_key(s, "source.a", "0.1", kDesign);
    set_key(s, "ramp.initial", "-0.3", "-w0 < mu0 < 0");
    set_key(s, "init.offset", "0.05", kDesign);
    set_key(s, "run.ramp_end", "1", kDesign);
    out.push_back({"memory", "CGL, homogeneous source started inside (-w0, 0)", s});
  }
  {
    auto s = detail::cgl_base("large-diffusivity", "large diffusivity");
    set_key(s, "cgl.beta_r", "100", "eps D = 1");
    set_key(s, "source.kind", "gaussian", "large diffusivity");
    set_key(s, "source.a", "0.1", "sqrt(eps) amplitude");
    set_key(s, "source.sigma", "0.25", kDesign);
    out.push_back({"large-diffusivity", "CGL, gaussian source with eps D = 1", s});
  }
  return out;
}

inline ExperimentSpec preset(const std::string& name) {
  for (auto& p : preset_catalog()) {
    if (p.name == name) {
      p.spec.description = p.description;
      return p.spec;
    }
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

/**
 * Config text: one `key = value` per line, '#' starts a comment. A `preset`
 * line (anywhere) selects the base; the remaining lines apply in order.
 * `sweep.<key> = v1, v2, ...` adds a sweep axis.
 */
inline ExperimentSpec parse_config(std::istream& is, const std::string& origin = "config") {
  std::vector<std::pair<std::string, std::string>> lines;
  std::vector<std::string> problems;
  std::optional<std::string> base;
  std::string line;
  int no = 0;
  while (std::getline(is, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back(origin + ":" + std::to_string(no) + ": expected key = value");
      continue;
    }
    auto k = detail::trim(line.substr(0, eq));
    auto v = detail::trim(line.substr(eq + 1));
    if (k == "preset") {
      base = v;
    } else {
      lines.emplace_back(std::move(k), std::move(v));
    }
  }
  ExperimentSpec s;
  if (base) {
    try {
      s = preset(*base);
    } catch (const std::invalid_argument& e) {
      problems.push_back(e.what());
    }
  }
  for (const auto& [k, v] : lines) {
    try {
      set_key(s, k, v, origin);
    } catch (const std::invalid_argument& e) {
      problems.push_back(e.what());
    }
  }
  if (!problems.empty()) throw ValidationError(problems);
  return s;
}

inline ExperimentSpec load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError({"cannot read config " + path});
  return parse_config(is, std::filesystem::path(path).filename().string());
}

// ------------------------------------------------------- validation

struct RunSpec {
  std::string name;
  ExperimentSpec spec;
  std::vector<std::pair<std::string, std::string>> overrides;
};

namespace detail {

inline std::string sanitize(std::string s) {
  for (auto& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')) c = '_';
  }
  return s;
}

inline void check_single(const ExperimentSpec& s, const std::string& who, std::vector<std::string>& out) {
  auto bad = [&](const std::string& m) { out.push_back(who + ": " + m); };
  try {
    if (s.model == ModelKind::cgl) {
      s.cgl.validate();
    } else {
      s.lac.validate();
    }
  } catch (const std::exception& e) {
    bad(e.what());
  }
  if (!(s.L > 0.0)) bad("grid.L must be positive");
  if (s.N < 3) bad("grid.N must be at least 3");
  try {
    s.run.validate();
    s.run.resolved_t_end(s.ramp());
  } catch (const std::exception& e) {
    bad(e.what());
  }
  if (s.run.ramp_end && s.model == ModelKind::lactotroph && s.ramp_rate == 0.0) {
    bad("run.ramp_end needs a moving ramp (ramp.rate > 0)");
  }
  if (s.ramp_rate < 0.0) bad("ramp.rate must be non-negative");
  if (s.model == ModelKind::cgl && s.ramp_direction != RampSpec::Direction::increasing) {
    bad("the CGL ramp increases (mu = mu0 + eps t)");
  }
  try {
    s.source();
  } catch (const std::exception& e) {
    bad(e.what());
  }
  if (!(s.x_step > 0.0)) bad("analysis.x_step must be positive");
  if (s.onset_threshold && !(*s.onset_threshold > 0.0)) bad("onset.threshold must be positive");
  const bool lac = s.model == ModelKind::lactotroph;
  for (const auto& a : s.analyses) {
    const auto& k = known_analyses();
    if (std::find(k.begin(), k.end(), a) == k.end()) {
      bad("unknown analysis '" + a + "'");
      continue;
    }
    if (a == "buffer" && lac) bad("buffer curves exist for the CGL model only");
    if ((a == "signatures" || a == "canard-scan" || a == "front") && !lac) {
      bad(a + " needs the lactotroph model");
    }
    if ((a == "onset" || a == "delay") && lac && s.ramp_rate == 0.0) bad(a + " needs a moving ramp");
    if (a == "canard-scan" && s.canard_from == s.canard_to) bad("canard-scan needs canard.x_from != canard.x_to");
    if (a == "front" && (s.front.window < 2 || s.front.step < 1)) bad("front.window >= 2 and front.step >= 1 required");
  }
}

}  // namespace detail

/// Cartesian product of the sweep axes; a spec without axes gives one run.
inline std::vector<RunSpec> expand_runs(const ExperimentSpec& spec) {
  std::vector<RunSpec> runs{{spec.name, spec, {}}};
  runs[0].spec.sweep.clear();
  for (const auto& axis : spec.sweep) {
    std::vector<RunSpec> next;
    for (const auto& r : runs) {
      for (const auto& v : axis.values) {
        RunSpec c = r;
        set_key(c.spec, axis.key, v, "sweep");
        c.overrides.emplace_back(axis.key, v);
        c.name += "_" + detail::sanitize(axis.key + "=" + v);
        next.push_back(std::move(c));
      }
    }
    runs = std::move(next);
  }
  return runs;
}

/// All problems in the spec and in every expanded run; throws ValidationError when any.
inline std::vector<RunSpec> validate(const ExperimentSpec& spec) {
  std::vector<std::string> problems;
  std::vector<RunSpec> runs;
  try {
    runs = expand_runs(spec);
  } catch (const std::invalid_argument& e) {
    problems.push_back(e.what());
  }
  for (const auto& r : runs) detail::check_single(r.spec, r.name, problems);
  if (!problems.empty()) throw ValidationError(problems);
  return runs;
}

// ---------------------------------------------------------- running

struct AnalysisOutcome {
  std::string name;
  bool ok = true;
  std::string message;
  std::vector<std::string> files;
};

struct RunRecord {
  std::string name;
  std::string directory;
  std::vector<std::pair<std::string, std::string>> overrides;
  enum class Status { ok, blow_up, failed } status = Status::ok;
  std::string message;
  std::vector<std::string> warnings;
  std::vector<AnalysisOutcome> analyses;
  std::map<std::string, double> metrics;
  double wall_seconds = 0.0;
};

inline const char* to_string(RunRecord::Status s) {
  switch (s) {
    case RunRecord::Status::ok:
      return "ok";
    case RunRecord::Status::blow_up:
      return "blow-up";
    case RunRecord::Status::failed:
      return "failed";
  }
  return "?";
}

namespace detail {

inline std::vector<double> analysis_xs(const ExperimentSpec& s) {
  std::vector<double> xs;
  const auto n = static_cast<std::size_t>(std::floor(s.L / s.x_step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) xs.push_back(static_cast<double>(i) * s.x_step);
  return xs;
}

inline double ramp_final(const ExperimentSpec& s) {
  const auto r = s.ramp();
  return r.value(s.run.resolved_t_end(r));
}

inline std::vector<Complex> cgl_initial(const ExperimentSpec& s, const Grid1D& g) {
  std::vector<Complex> f(g.size(), Complex{});
  if (s.init == InitKind::qss) f = cgl_qss_field(g, s.ramp_initial, s.cgl, s.source(), QssMethod::newton).values;
  for (auto& a : f) a += s.init_offset;
  return f;
}

inline std::vector<LactotrophState> lac_initial(const ExperimentSpec& s, const Grid1D& g) {
  std::vector<LactotrophState> f(g.size(), LactotrophState{-60.0, 0.05, 0.5});
  if (s.init == InitKind::qss) f = lactotroph_qss_field(g, s.ramp_initial, s.lac, s.source()).values;
  for (auto& u : f) u.V += s.init_offset;
  return f;
}

inline HopfLocus hopf_for(const ExperimentSpec& s, const std::vector<double>& xs) {
  RampScan scan{s.ramp_initial, ramp_final(s), 0.01, 1e-8};
  if (s.model == ModelKind::cgl) return cgl_hopf_locus(s.cgl, s.source(), xs, scan);
  return lactotroph_hopf_locus(s.lac, s.source(), xs, scan);
}

/// Homogeneous buffer value: w0, or -mu0 inside the memory window.
inline BufferCurve homogeneous_buffer(const ExperimentSpec& s, const std::vector<double>& xs) {
  double mu = std::abs(s.cgl.omega0);
  if (s.ramp_initial > -std::abs(s.cgl.omega0) && s.ramp_initial < 0.0) {
    mu = memory_onset_prediction(s.ramp_initial, s.cgl);
  }
  BufferCurve c;
  for (double x : xs) c.samples.push_back({x, mu, true});
  return c;
}

inline void write_spectrum_csv(const Spectrum& sp, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(12);
  os << "m,k,energy\n";
  for (const auto& m : sp.modes) os << m.index << ',' << m.wavenumber << ',' << m.energy << '\n';
}

template <class F>
void attempt(RunRecord& rec, const std::string& name, F&& body) {
  AnalysisOutcome o{name, true, {}, {}};
  try {
    body(o);
  } catch (const std::exception& e) {
    o.ok = false;
    o.message = e.what();
  }
  rec.analyses.push_back(std::move(o));
}

inline bool wants(const ExperimentSpec& s, const std::string& a) {
  return std::find(s.analyses.begin(), s.analyses.end(), a) != s.analyses.end();
}

}  // namespace detail

/// CGL analyses on a finished (possibly partial) trajectory.
inline void analyze_cgl(const ExperimentSpec& s, const Trajectory<Complex>& tr,
                        const std::filesystem::path& dir, RunRecord& rec) {
  const auto src = s.source();
  const auto xs = detail::analysis_xs(s);
  std::optional<OnsetCurve> onset;
  auto get_onset = [&]() -> const OnsetCurve& {
    if (!onset) onset = detect_onset_cgl(tr, s.cgl, src, s.onset_threshold);
    return *onset;
  };
  if (detail::wants(s, "onset")) {
    detail::attempt(rec, "onset", [&](AnalysisOutcome& o) {
      write_onset_csv(get_onset(), (dir / "onset.csv").string());
      o.files.push_back("onset.csv");
    });
  }
  if (detail::wants(s, "buffer")) {
    detail::attempt(rec, "buffer", [&](AnalysisOutcome& o) {
      const auto b = src.kind() == SourceProfile::Kind::gaussian ? buffer_curve_closed_form(s.cgl, src, xs)
                                                                 : detail::homogeneous_buffer(s, xs);
      write_buffer_csv(b, (dir / "buffer.csv").string());
      o.files.push_back("buffer.csv");
    });
  }
  if (detail::wants(s, "delay")) {
    detail::attempt(rec, "delay", [&](AnalysisOutcome& o) {
      const auto h = detail::hopf_for(s, xs);
      write_hopf_csv(h, (dir / "hopf.csv").string());
      write_delay_csv(delay_measurement(get_onset(), h), (dir / "delay.csv").string());
      o.files = {"hopf.csv", "delay.csv"};
    });
  }
  if (detail::wants(s, "spectrum")) {
    detail::attempt(rec, "spectrum", [&](AnalysisOutcome& o) {
      if (tr.empty()) throw std::runtime_error("no snapshots");
      detail::write_spectrum_csv(cosine_spectrum(tr.snapshots.back().field, tr.grid), (dir / "spectrum.csv").string());
      o.files.push_back("spectrum.csv");
    });
  }
}

/// Lactotroph analyses on a finished (possibly partial) trajectory.
inline void analyze_lactotroph(const ExperimentSpec& s, const Trajectory<LactotrophState>& tr,
                               const std::filesystem::path& dir, RunRecord& rec) {
  const auto src = s.source();
  const auto xs = detail::analysis_xs(s);
  const auto volt = [](const LactotrophState& u) { return u.V; };
  std::optional<OnsetCurve> onset;
  auto get_onset = [&]() -> const OnsetCurve& {
    if (!onset) onset = detect_onset_lactotroph(tr, s.lac, src, s.onset_threshold.value_or(1.0));
    return *onset;
  };
  if (detail::wants(s, "onset")) {
    detail::attempt(rec, "onset", [&](AnalysisOutcome& o) {
      write_onset_csv(get_onset(), (dir / "onset.csv").string());
      o.files.push_back("onset.csv");
    });
  }
  if (detail::wants(s, "delay")) {
    detail::attempt(rec, "delay", [&](AnalysisOutcome& o) {
      const auto h = detail::hopf_for(s, xs);
      write_hopf_csv(h, (dir / "hopf.csv").string());
      const auto d = delay_measurement(get_onset(), h);
      write_delay_csv(d, (dir / "delay.csv").string());
      o.files = {"hopf.csv", "delay.csv"};
    });
  }
  if (detail::wants(s, "signatures")) {
    detail::attempt(rec, "signatures", [&](AnalysisOutcome& o) {
      const auto times = snapshot_times(tr);
      const double I_end = tr.empty() ? s.ramp_initial : tr.snapshots.back().ramp;
      std::vector<LocatedSignature> sigs;
      std::vector<LocatedEvents> evs;
      for (double x : xs) {
        const auto j = tr.grid.nearest_index(x);
        const auto V = time_series(tr, j, volt);
        ClassifierParams cp;
        if (s.v_split) {
          cp.v_split = *s.v_split;
        } else {
          try {
            cp.v_split = default_v_split(V, lactotroph_qss(x, I_end, s.lac, src).V);
          } catch (const NoQssError&) {
          }
        }
        auto ev = classify_events(times, V, cp);
        std::optional<BurstSignature> sig;
        try {
          sig = burst_signature(ev);
        } catch (const NotBurstingError&) {
        }
        sigs.push_back({x, sig});
        evs.push_back({x, std::move(ev)});
      }
      write_signatures_csv(sigs, (dir / "signatures.csv").string());
      write_events_csv(evs, (dir / "events.csv").string());
      o.files = {"signatures.csv", "events.csv"};
    });
  }
  if (detail::wants(s, "canard-scan")) {
    detail::attempt(rec, "canard-scan", [&](AnalysisOutcome& o) {
      CanardScanOptions opt;
      opt.x_from = s.canard_from;
      opt.x_to = s.canard_to;
      if (s.v_split) opt.classifier.v_split = *s.v_split;
      const auto c = maximal_canard_scan(tr, volt, opt);
      write_canard_csv(c, (dir / "canard.csv").string());
      if (c.crossing_x) rec.metrics["canard_crossing_x"] = *c.crossing_x;
      if (c.transition_x) rec.metrics["canard_transition_x"] = *c.transition_x;
      o.files.push_back("canard.csv");
    });
  }
  if (detail::wants(s, "front")) {
    detail::attempt(rec, "front", [&](AnalysisOutcome& o) {
      ClassifierParams cp;
      if (s.v_split) cp.v_split = *s.v_split;
      const double min_sao = s.front_min_sao;
      FrontMarker marker = [cp, min_sao](double, const std::vector<double>& t, const std::vector<double>& V) {
        const auto ev = classify_events(t, V, cp);
        std::size_t lao = 0, sao = 0;
        for (const auto& e : ev.events) (e.kind == EventKind::LAO ? lao : sao) += 1;
        return lao > 0 && static_cast<double>(sao) / static_cast<double>(lao) >= min_sao;
      };
      const auto f = front_speed(tr, volt, marker, s.front);
      write_front_csv(f, (dir / "front.csv").string());
      rec.metrics["front_speed"] = f.speed;
      o.files.push_back("front.csv");
    });
  }
  if (detail::wants(s, "spectrum")) {
    detail::attempt(rec, "spectrum", [&](AnalysisOutcome& o) {
      if (tr.empty()) throw std::runtime_error("no snapshots");
      std::vector<double> V;
      for (const auto& u : tr.snapshots.back().field) V.push_back(u.V);
      detail::write_spectrum_csv(cosine_spectrum(V, tr.grid), (dir / "spectrum.csv").string());
      o.files.push_back("spectrum.csv");
    });
  }
}

namespace detail {

template <class State>
void save_trajectory(const ExperimentSpec& s, const Trajectory<State>& tr, const std::filesystem::path& dir,
                     RunRecord& rec) {
  if (s.trajectory_format == "binary") {
    write_trajectory_binary(tr, (dir / "trajectory.bin").string());
  } else if (s.trajectory_format == "csv") {
    write_trajectory_csv(tr, (dir / "trajectory.csv").string(), s.csv_x_stride);
  }
  rec.warnings.insert(rec.warnings.end(), tr.warnings.begin(), tr.warnings.end());
  if (tr.blow_up) {
    rec.status = RunRecord::Status::blow_up;
    rec.message = tr.blow_up->message;
  }
}

}  // namespace detail

/// Simulate one resolved run into `dir` and run its analyses.
inline RunRecord execute_run(const RunSpec& r, const std::filesystem::path& dir) {
  RunRecord rec;
  rec.name = r.name;
  rec.directory = dir.filename().string();
  rec.overrides = r.overrides;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    std::filesystem::create_directories(dir);
    const auto& s = r.spec;
    write_config(s, (dir / "resolved.cfg").string());
    const auto g = s.grid();
    const auto cfg = s.resolved_run();
    if (s.model == ModelKind::cgl) {
      CglSystem sys(s.cgl, s.source(), s.ramp(), g);
      const auto tr = integrate_run(sys, cfg, detail::cgl_initial(s, g));
      detail::save_trajectory(s, tr, dir, rec);
      analyze_cgl(s, tr, dir, rec);
    } else {
      LactotrophSystem sys(s.lac, s.source(), s.ramp(), g);
      const auto tr = integrate_run(sys, cfg, detail::lac_initial(s, g));
      detail::save_trajectory(s, tr, dir, rec);
      analyze_lactotroph(s, tr, dir, rec);
    }
  } catch (const std::exception& e) {
    rec.status = RunRecord::Status::failed;
    rec.message = e.what();
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

struct ExperimentResult {
  std::filesystem::path directory;
  std::vector<RunRecord> runs;

  bool all_blew_up() const {
    if (runs.empty()) return false;
    return std::all_of(runs.begin(), runs.end(),
                       [](const RunRecord& r) { return r.status == RunRecord::Status::blow_up; });
  }
};

namespace detail {

/// analyses/<name>.csv: the per-run x-curves stacked with a run column.
inline void combine_curves(const std::filesystem::path& root, const std::vector<RunRecord>& runs,
                           const std::string& file) {
  std::ofstream os;
  for (const auto& r : runs) {
    std::ifstream is(root / r.directory / file);
    if (!is) continue;
    std::string header, line;
    std::getline(is, header);
    if (!os.is_open()) {
      os.open(root / "analyses" / file);
      os << "run," << header << '\n';
    }
    while (std::getline(is, line)) os << r.name << ',' << line << '\n';
  }
}

inline nlohmann::ordered_json manifest_json(const ExperimentSpec& spec, const ExperimentResult& res) {
  nlohmann::ordered_json m;
  m["software"] = {{"name", "slowpass"}, {"version", kVersion}};
  m["determinism"] =
      "no random numbers are used; the same resolved config gives byte-identical CSVs on one platform";
  m["experiment"] = spec.name;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  nlohmann::ordered_json prov = nlohmann::ordered_json::object();
  for (const auto& [k, v] : to_key_values(spec)) {
    cfg[k] = v;
    prov[k] = provenance_of(spec, k);
  }
  m["config"] = cfg;
  m["provenance"] = prov;
  auto runs = nlohmann::ordered_json::array();
  for (const auto& r : res.runs) {
    nlohmann::ordered_json j;
    j["name"] = r.name;
    j["directory"] = r.directory;
    nlohmann::ordered_json ov = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.overrides) ov[k] = v;
    j["overrides"] = ov;
    j["status"] = to_string(r.status);
    if (!r.message.empty()) j["message"] = r.message;
    j["warnings"] = r.warnings;
    auto an = nlohmann::ordered_json::array();
    for (const auto& a : r.analyses) {
      nlohmann::ordered_json aj{{"name", a.name}, {"ok", a.ok}, {"files", a.files}};
      if (!a.message.empty()) aj["message"] = a.message;
      an.push_back(aj);
    }
    j["analyses"] = an;
    nlohmann::ordered_json met = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.metrics) met[k] = v;
    j["metrics"] = met;
    j["wall_seconds"] = r.wall_seconds;
    runs.push_back(j);
  }
  m["runs"] = runs;
  return m;
}

}  // namespace detail

/**
 * Validate, then run every expanded run on `threads` workers. Each run writes
 * into its own directory; cross-run curves go to analyses/, and manifest.json
 * is written once at the end.
 */
inline ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out,
                                       unsigned threads = 1,
                                       const std::function<void(const std::string&)>& log = {}) {
  const auto runs = validate(spec);
  std::filesystem::create_directories(out / "analyses");
  ExperimentResult res;
  res.directory = out;
  res.runs.resize(runs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  auto say = [&](const std::string& m) {
    if (!log) return;
    std::lock_guard lk(log_mu);
    log(m);
  };
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      say("run " + runs[i].name + " started");
      res.runs[i] = execute_run(runs[i], out / detail::sanitize(runs[i].name));
      say("run " + runs[i].name + " " + to_string(res.runs[i].status) + " in " +
          detail::fmt(std::round(res.runs[i].wall_seconds * 10.0) / 10.0) + " s");
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(runs.size())));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (const char* f : {"onset.csv", "delay.csv", "buffer.csv", "signatures.csv"}) {
    detail::combine_curves(out, res.runs, f);
  }
  std::ofstream(out / "manifest.json") << detail::manifest_json(spec, res).dump(2) << '\n';
  return res;
}

/// Analyses on a stored trajectory; the model follows from the file's component count.
inline RunRecord analyze_trajectory(const ExperimentSpec& spec, const std::string& path,
                                    const std::filesystem::path& out) {
  RunRecord rec;
  rec.name = spec.name;
  rec.directory = out.filename().string();
  std::filesystem::create_directories(out);
  const auto comps = peek_trajectory_components(path);
  if (comps == StateLayout<Complex>::components) {
    if (spec.model != ModelKind::cgl) throw ValidationError({"trajectory holds a CGL field but the config is lactotroph"});
    analyze_cgl(spec, read_trajectory_binary<Complex>(path), out, rec);
  } else {
    if (spec.model != ModelKind::lactotroph) throw ValidationError({"trajectory holds a lactotroph field but the config is CGL"});
    analyze_lactotroph(spec, read_trajectory_binary<LactotrophState>(path), out, rec);
  }
  return rec;
}

}  // namespace slowpass
