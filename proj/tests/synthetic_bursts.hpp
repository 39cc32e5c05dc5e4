#pragma once

// Synthetic voltage traces with known burst labels, shared by the unit and acceptance tests.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "slowpass/burst.hpp"

namespace slowpass::synthetic {

// Half-cosine interpolation through a list of extrema, `per` samples per leg.
struct Wave {
  std::vector<double> t, V;
};

inline Wave through(const std::vector<double>& extrema, int per = 25) {
  Wave w;
  for (std::size_t k = 0; k + 1 < extrema.size(); ++k) {
    for (int i = 0; i < per; ++i) {
      const double u = 0.5 - 0.5 * std::cos(std::numbers::pi * i / per);
      w.V.push_back(extrema[k] + (extrema[k + 1] - extrema[k]) * u);
    }
  }
  w.V.push_back(extrema.back());
  for (std::size_t i = 0; i < w.V.size(); ++i) w.t.push_back(static_cast<double>(i));
  return w;
}

// One cycle: relaxation spike (-70 -> -20) then `s` depolarized wiggles of amplitude `amp`.
inline void append_cycle(std::vector<double>& ex, int s, double amp) {
  ex.push_back(-70.0);
  ex.push_back(-20.0);
  for (int k = 0; k < s; ++k) {
    ex.push_back(-35.0 - amp / 2);
    ex.push_back(-35.0 + amp / 2);
  }
}

inline Wave burst_wave(const std::vector<int>& pattern, int repeats, double amp = 6.0) {
  std::vector<double> ex{-40.0};
  for (int r = 0; r < repeats; ++r) {
    for (int s : pattern) append_cycle(ex, s, amp);
  }
  ex.push_back(-70.0);
  ex.push_back(-45.0);
  return through(ex);
}

struct Case {
  std::vector<int> pattern;
  std::string label;
  Periodicity periodicity;
};


/// Cycle patterns (SAOs per cycle, repeated) and their expected labels.
inline std::vector<Case> classifier_corpus() {
  return {
      {{0}, "1^0", Periodicity::steady},
      {{1}, "1^1", Periodicity::steady},
      {{2}, "1^2", Periodicity::steady},
      {{3}, "1^3", Periodicity::steady},
      {{4}, "1^4", Periodicity::steady},
      {{5}, "1^5", Periodicity::steady},
      {{7}, "1^7", Periodicity::steady},
      {{1, 0}, "1^1 1^0", Periodicity::period2},
      {{0, 1}, "1^1 1^0", Periodicity::period2},
      {{2, 0}, "1^2 1^0", Periodicity::period2},
      {{2, 1}, "1^2 1^1", Periodicity::period2},
      {{1, 2}, "1^2 1^1", Periodicity::period2},
      {{3, 1}, "1^3 1^1", Periodicity::period2},
      {{5, 2}, "1^5 1^2", Periodicity::period2},
      {{1, 1, 0}, "", Periodicity::aperiodic},
      {{2, 1, 0}, "", Periodicity::aperiodic},
      {{3, 3, 1}, "", Periodicity::aperiodic},
      {{0, 0, 1, 2}, "", Periodicity::aperiodic},
      {{1, 1, 1, 0}, "", Periodicity::aperiodic},
      {{4, 0, 0}, "", Periodicity::aperiodic},
      {{1, 2, 3}, "", Periodicity::aperiodic},
  };
}

}  // namespace slowpass::synthetic
