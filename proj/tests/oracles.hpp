// Independent oracles used by the unit and acceptance suites. Everything in
// this header recomputes expected results through a different route than the
// library implementation it checks.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "standin/common.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// Exact binomial interval by brute-force tail summation + bisection. The
// library inverts the regularized incomplete beta function instead.
// ---------------------------------------------------------------------------

inline long double binomial_coefficient(int n, int k) {
  // Pascal's triangle, exact in long double for n <= 64.
  static std::map<std::pair<int, int>, long double> cache;
  if (k < 0 || k > n) return 0.0L;
  if (k == 0 || k == n) return 1.0L;
  const auto key = std::make_pair(n, k);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const long double value = binomial_coefficient(n - 1, k - 1) + binomial_coefficient(n - 1, k);
  cache[key] = value;
  return value;
}

/// P(X >= k) for X ~ Binomial(n, p), summed term by term.
inline long double binom_tail_ge(int k, int n, long double p) {
  long double total = 0.0L;
  for (int j = k; j <= n; ++j) {
    total += binomial_coefficient(n, j) * std::pow(p, j) * std::pow(1.0L - p, n - j);
  }
  return total;
}

/// P(X <= k) for X ~ Binomial(n, p).
inline long double binom_tail_le(int k, int n, long double p) {
  long double total = 0.0L;
  for (int j = 0; j <= k; ++j) {
    total += binomial_coefficient(n, j) * std::pow(p, j) * std::pow(1.0L - p, n - j);
  }
  return total;
}

/// Clopper-Pearson lower bound: the p solving P(X >= k | p) = alpha/2.
inline double cp_lower(int k, int n, double confidence_level) {
  if (k == 0) return 0.0;
  const long double target = (1.0L - static_cast<long double>(confidence_level)) / 2.0L;
  long double lo = 0.0L, hi = 1.0L;
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    if (binom_tail_ge(k, n, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return static_cast<double>(0.5L * (lo + hi));
}

/// Clopper-Pearson upper bound: the p solving P(X <= k | p) = alpha/2.
inline double cp_upper(int k, int n, double confidence_level) {
  if (k == n) return 1.0;
  const long double target = (1.0L - static_cast<long double>(confidence_level)) / 2.0L;
  long double lo = 0.0L, hi = 1.0L;
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    if (binom_tail_le(k, n, mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return static_cast<double>(0.5L * (lo + hi));
}

// ---------------------------------------------------------------------------
// Brute-force replacement comparison over explicit lookup tables: the success
// vector of a table is computed directly, without contexts, runs or verdicts.
// ---------------------------------------------------------------------------

struct TableOracle {
  // domain value key -> output value key
  std::map<std::string, std::string> entries;
};

/// success[i] = (table output == reference output) on the i-th domain value.
inline std::vector<bool> success_vector(const std::vector<std::string>& domain_keys,
                                        const TableOracle& table, const TableOracle& reference) {
  std::vector<bool> out;
  out.reserve(domain_keys.size());
  for (const auto& key : domain_keys) {
    out.push_back(table.entries.at(key) == reference.entries.at(key));
  }
  return out;
}

/// "candidate can replace incumbent": wherever the incumbent succeeds, the
/// candidate succeeds.
inline bool oracle_can_replace(const std::vector<bool>& candidate,
                               const std::vector<bool>& incumbent) {
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    if (incumbent[i] && !candidate[i]) return false;
  }
  return true;
}

inline bool oracle_equivalent(const std::vector<bool>& a, const std::vector<bool>& b) {
  return a == b;
}

// ---------------------------------------------------------------------------
// Step-through oracle for a single vehicle on an empty straight road:
// accelerate by a_max per tick up to v_max, stop exactly at the destination.
// Returns the arrival tick.
// ---------------------------------------------------------------------------

inline std::uint64_t straight_road_arrival(int distance, int v0, int v_max, int a_max) {
  int pos = 0;
  int v = v0;
  std::uint64_t tick = 0;
  while (pos < distance) {
    v = std::min(v + a_max, v_max);
    pos += v;
    if (pos > distance) pos = distance;
    ++tick;
  }
  return tick;
}

// ---------------------------------------------------------------------------
// Independent collision scan over a raw traffic run (steps of
// {"vehicles": [[x, y, speed, heading, arrived], ...]}); parses the JSON
// itself rather than reusing the library's trace decoding.
// ---------------------------------------------------------------------------

inline bool scan_collision(const standin::Value& run_json) {
  std::vector<std::vector<std::pair<int, int>>> positions;
  for (const auto& step : run_json.at("steps")) {
    std::vector<std::pair<int, int>> row;
    for (const auto& v : step.at(1).at("vehicles")) {
      row.emplace_back(v.at(0).get<int>(), v.at(1).get<int>());
    }
    positions.push_back(row);
  }
  for (std::size_t t = 0; t < positions.size(); ++t) {
    const auto& row = positions[t];
    for (std::size_t i = 0; i < row.size(); ++i) {
      for (std::size_t j = i + 1; j < row.size(); ++j) {
        if (row[i] == row[j]) return true;
        if (t > 0) {
          const auto& prev = positions[t - 1];
          if (row[i] == prev[j] && row[j] == prev[i] && row[i] != prev[i]) return true;
        }
      }
    }
  }
  return false;
}

}  // namespace oracles
