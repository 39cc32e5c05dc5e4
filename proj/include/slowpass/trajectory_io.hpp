#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "slowpass/integrator.hpp"
#include "slowpass/models/lactotroph.hpp"

namespace slowpass {

/**
 * Binary snapshot format, all fields little-endian:
 *
 *   char[8]  magic "SLOWPASS"
 *   u32      version (1)
 *   u32      components per grid point (2: Re A, Im A; 3: V, n, e)
 *   u64      N grid points
 *   f64      L half length
 *   f64      ramp initial value
 *   f64      ramp signed rate
 *   u64      snapshot count
 *   per snapshot: f64 t, f64 ramp value, N * components f64 (point-major)
 */
inline constexpr char kTrajectoryMagic[8] = {'S', 'L', 'O', 'W', 'P', 'A', 'S', 'S'};
inline constexpr std::uint32_t kTrajectoryVersion = 1;

static_assert(std::endian::native == std::endian::little, "binary trajectory I/O assumes little-endian");

template <class State>
struct StateLayout;

template <>
struct StateLayout<Complex> {
  static constexpr std::uint32_t components = 2;
  static constexpr const char* csv_columns = "re,im";
  static constexpr const char* ramp_name = "mu";
  static void store(const Complex& s, double* out) {
    out[0] = s.real();
    out[1] = s.imag();
  }
  static Complex load(const double* in) { return {in[0], in[1]}; }
};

template <>
struct StateLayout<LactotrophState> {
  static constexpr std::uint32_t components = 3;
  static constexpr const char* csv_columns = "V,n,e";
  static constexpr const char* ramp_name = "I";
  static void store(const LactotrophState& s, double* out) {
    out[0] = s.V;
    out[1] = s.n;
    out[2] = s.e;
  }
  static LactotrophState load(const double* in) { return {in[0], in[1], in[2]}; }
};

namespace detail {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("trajectory file truncated");
  return v;
}

}  // namespace detail

template <class State>
void write_trajectory_binary(const Trajectory<State>& traj, const std::string& path) {
  using Lay = StateLayout<State>;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.write(kTrajectoryMagic, 8);
  detail::put<std::uint32_t>(os, kTrajectoryVersion);
  detail::put<std::uint32_t>(os, Lay::components);
  detail::put<std::uint64_t>(os, traj.grid.size());
  detail::put<double>(os, traj.grid.half_length());
  detail::put<double>(os, traj.ramp.initial);
  detail::put<double>(os, traj.ramp.signed_rate());
  detail::put<std::uint64_t>(os, traj.snapshots.size());
  std::vector<double> buf(traj.grid.size() * Lay::components);
  for (const auto& s : traj.snapshots) {
    detail::put<double>(os, s.t);
    detail::put<double>(os, s.ramp);
    for (std::size_t j = 0; j < s.field.size(); ++j) Lay::store(s.field[j], &buf[j * Lay::components]);
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
  }
  if (!os) throw std::runtime_error("error writing " + path);
}

/// Number of components stored in a binary trajectory (2 for CGL, 3 for the lactotroph).
inline std::uint32_t peek_trajectory_components(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kTrajectoryMagic, 8) != 0) {
    throw std::runtime_error(path + ": not a slowpass trajectory");
  }
  detail::get<std::uint32_t>(is);
  return detail::get<std::uint32_t>(is);
}

template <class State>
Trajectory<State> read_trajectory_binary(const std::string& path) {
  using Lay = StateLayout<State>;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kTrajectoryMagic, 8) != 0) {
    throw std::runtime_error(path + ": not a slowpass trajectory");
  }
  const auto version = detail::get<std::uint32_t>(is);
  if (version != kTrajectoryVersion) {
    throw std::runtime_error(path + ": unsupported version " + std::to_string(version));
  }
  const auto comps = detail::get<std::uint32_t>(is);
  if (comps != Lay::components) {
    throw std::runtime_error(path + ": has " + std::to_string(comps) + " components, expected " +
                             std::to_string(Lay::components));
  }
  const auto n = detail::get<std::uint64_t>(is);
  const double L = detail::get<double>(is);
  const double r0 = detail::get<double>(is);
  const double rate = detail::get<double>(is);
  const auto count = detail::get<std::uint64_t>(is);

  Trajectory<State> traj;
  traj.grid = Grid1D(L, n);
  traj.ramp = rate >= 0.0 ? RampSpec::increasing(r0, rate) : RampSpec::decreasing(r0, -rate);
  traj.snapshots.reserve(count);
  std::vector<double> buf(n * comps);
  for (std::uint64_t k = 0; k < count; ++k) {
    Snapshot<State> s{};
    s.t = detail::get<double>(is);
    s.ramp = detail::get<double>(is);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
    if (!is) throw std::runtime_error("trajectory file truncated");
    s.field.resize(n);
    for (std::size_t j = 0; j < n; ++j) s.field[j] = Lay::load(&buf[j * comps]);
    traj.snapshots.push_back(std::move(s));
  }
  return traj;
}

/// Long-format CSV: one row per (snapshot, grid point), every `x_stride`-th point.
template <class State>
void write_trajectory_csv(const Trajectory<State>& traj, const std::string& path,
                          std::size_t x_stride = 1) {
  using Lay = StateLayout<State>;
  if (x_stride < 1) throw std::invalid_argument("write_trajectory_csv: x_stride must be >= 1");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(12);
  os << "t," << Lay::ramp_name << ",x," << Lay::csv_columns << '\n';
  double c[Lay::components];
  for (const auto& s : traj.snapshots) {
    for (std::size_t j = 0; j < s.field.size(); j += x_stride) {
      Lay::store(s.field[j], c);
      os << s.t << ',' << s.ramp << ',' << traj.grid.x(j);
      for (std::uint32_t k = 0; k < Lay::components; ++k) os << ',' << c[k];
      os << '\n';
    }
  }
}

}  // namespace slowpass
