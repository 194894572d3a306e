#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "standin/partition.hpp"

namespace standin {

enum class Strategy { Exhaustive, Random, Stratified, Adaptive, BoundedSequence };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

struct GeneratorSpec {
  Strategy strategy = Strategy::Random;
  std::optional<std::size_t> count;
  std::optional<std::size_t> max_length;
  std::optional<std::string> classifier_ref;
  std::uint64_t seed = 0;
};

/// Every value of a finite-enumerable domain exactly once, in enumeration
/// order.
TestSet generate_exhaustive(const DomainDescriptor& domain);

/// count i.i.d. draws with replacement; repeated payloads keep separate cases
/// distinguished by an id suffix. Reproducible from the seed.
TestSet generate_random(const DomainDescriptor& domain, std::size_t count, std::uint64_t seed);

/// Per-class quotas proportional to classifier weights, apportioned by
/// largest remainder so they sum to count exactly; every universe class gets
/// at least one case when count >= |universe|.
TestSet generate_stratified(const DomainDescriptor& domain,
                            const EquivalenceClassifier& classifier, std::size_t count,
                            std::uint64_t seed);

/// Oracle-guided generation: seeds one case per class in descending weight
/// order, then allocates batches proportionally to uncovered-class weight
/// plus the observed failure rate per class, until the budget is exhausted.
TestSet generate_adaptive(const Context& context, const std::vector<SystemUnderTest*>& systems,
                          const Property& property, const EquivalenceClassifier& classifier,
                          std::size_t budget, std::uint64_t seed);

inline constexpr std::size_t kEnumerationGuard = 1'000'000;

/// All sequences of length 1..max_length in length-lexicographic order, or a
/// uniform sample of that space when count is given. Full enumeration beyond
/// the guard limit raises ExplosionGuard.
TestSet generate_bounded_sequences(const std::vector<Value>& alphabet, std::size_t max_length,
                                   std::optional<std::size_t> count, std::uint64_t seed,
                                   std::size_t guard_limit = kEnumerationGuard);

/// Largest-remainder apportionment of count over positive weights, with a
/// minimum of one unit per key when count covers all keys. Exposed for the
/// generator tests.
std::map<std::string, std::size_t> largest_remainder_quotas(
    const std::map<std::string, double>& weights, std::size_t count, bool ensure_minimum);

}  // namespace standin
