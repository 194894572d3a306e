#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "standin/replacement.hpp"

namespace standin {

/// User-supplied approximation of the observational equivalence induced by a
/// property: test cases mapping to the same class key are hypothesized to be
/// indistinguishable. The hypothesis is falsifiable via metamorphic_falsify.
struct EquivalenceClassifier {
  std::string name;
  std::function<std::string(const TestCase&)> classify;  // total, deterministic
  std::map<std::string, double> weights;                 // significance per class key
  std::optional<std::set<std::string>> universe;

  /// Weight of a class key; classes without an explicit entry weigh 1.
  double weight_of(const std::string& key) const {
    auto it = weights.find(key);
    return it == weights.end() ? 1.0 : it->second;
  }

  /// Classifies and validates against the universe when one is declared.
  std::string classify_checked(const TestCase& testcase) const;
};

struct PartitionReport {
  std::map<std::string, std::vector<std::string>> classes;  // class key -> case ids, sorted
  std::set<std::string> uncovered;                          // universe keys with no member
};

struct Anomaly {
  std::string class_key;
  TestCase first;   // judged Pass
  TestCase second;  // judged Fail
  Verdict verdict_first;
  Verdict verdict_second;
};

/// Classes whose members were distinguished by the property although the
/// classifier deems them equivalent.
struct MixedClass {
  std::string class_key;
  std::vector<std::string> pass_ids;
  std::vector<std::string> fail_ids;
};

struct AnomalyReport {
  std::vector<Anomaly> anomalies;    // one certified pair per mixed class
  std::vector<MixedClass> divergent;  // complete listing of divergent cases
};

/// Exact partition of a test set by class key; within a class, case ids are
/// sorted. Classes in the universe with no member are reported as uncovered.
PartitionReport partition(const TestSet& testset, const EquivalenceClassifier& classifier);

/// Runs every test case and scans each class for mixed Pass/Fail verdicts.
/// Every mixed class yields one certified anomaly pair (the lexicographically
/// first Pass case against the lexicographically first Fail case) plus the
/// full listing of divergent cases. Inconclusive verdicts are ignored.
AnomalyReport metamorphic_falsify(const Context& context,
                                  const std::vector<SystemUnderTest*>& systems,
                                  const Property& property,
                                  const EquivalenceClassifier& classifier, const TestSet& testset,
                                  std::uint64_t seed);

// Forward declaration; defined in metrics.hpp.
struct EfficiencyFunction;

/// Certifies anomalies as adversarial-example witnesses: pairs within one
/// class must additionally have exactly equal singleton efficiencies. A pair
/// whose singleton efficiencies differ means the efficiency function itself
/// is inconsistent with the classifier and raises InconsistentEff rather than
/// being dropped silently.
AnomalyReport detect_adversarial(const AnomalyReport& anomalies, const EfficiencyFunction& eff);

}  // namespace standin
