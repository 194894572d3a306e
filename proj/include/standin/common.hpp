#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace standin {

/// Universal value type for payloads, observations, configs and reports.
using Value = nlohmann::json;

/// Canonical string form of a Value, usable as a map key.
inline std::string value_key(const Value& v) { return v.dump(); }

enum class ErrorKind {
  ArityMismatch,
  AlphabetMismatch,
  DomainViolation,
  Precondition,
  UnclassifiableCase,
  InconsistentEff,
  MissingUniverse,
  SamplerCannotEqualize,
  UnsortedSeries,
  InfiniteDomain,
  ExplosionGuard,
  EmptyClass,
  MalformedSpec,
  UnreachablePair,
  NotATrafficRun,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception carrying a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// Deterministic RNG. Wraps std::mt19937_64 (whose output stream is fully
/// specified by the standard) and avoids std distributions, which are
/// implementation-defined; sampling here is reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform draw from [0, n). Debiased by rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw Error(ErrorKind::Precondition, "Rng::below(0)");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(below(n)); }

  /// Uniform double in [0, 1), 53 bits of precision.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool coin() { return (next() & 1u) != 0; }

 private:
  std::mt19937_64 engine_;
};

/// Deterministic seed fan-out: mixes a base seed with a label and index via
/// FNV-1a followed by a splitmix64 finalizer. This is the documented hash
/// chain used everywhere a component derives a sub-seed.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t index = 0);

}  // namespace standin
