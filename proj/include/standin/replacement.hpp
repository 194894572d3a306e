#pragma once

#include <optional>
#include <string>
#include <vector>

#include "standin/core.hpp"

namespace standin {

/// Finite ordered collection of test cases drawn from one input domain.
struct TestSet {
  std::string name;
  std::vector<TestCase> cases;

  bool empty() const { return cases.empty(); }
  std::size_t size() const { return cases.size(); }
};

/// Throws if test-case ids are not unique.
void validate_testset(const TestSet& testset);

/// Set union on test cases. Cases are identified by id; an id collision with
/// a different payload gets a disambiguating suffix.
TestSet testset_union(const TestSet& a, const TestSet& b, std::string name = "union");

struct CasePairVerdicts {
  TestCase testcase;
  Verdict candidate;
  Verdict incumbent;
};

/// Result of evaluating "candidate can replace incumbent" over a test set:
/// for every case where the incumbent passes, the candidate must pass too.
struct ReplacementReport {
  bool holds = true;
  std::vector<CasePairVerdicts> violations;     // incumbent Pass, candidate Fail
  std::vector<CasePairVerdicts> indeterminate;  // Inconclusive on either side
  bool conclusive = false;
  std::size_t cases_evaluated = 0;
};

struct EquivalenceReport {
  bool equivalent = true;
  std::vector<CasePairVerdicts> distinguishing_cases;  // verdicts differ
  bool conclusive = false;
  std::size_t cases_evaluated = 0;
};

/// Replacement judgment over already-collected verdict rows; used both by
/// can_replace and by the campaign runner, which collects rows itself.
ReplacementReport judge_replacement(const std::vector<CasePairVerdicts>& rows, bool conclusive);
EquivalenceReport judge_equivalence(const std::vector<CasePairVerdicts>& rows, bool conclusive);

/// Candidate replaces incumbent iff the candidate passes on every test case
/// the incumbent passes. Inconclusive verdicts on either side go to the
/// indeterminate bucket and never count as violations. Both tuples run with
/// the same per-case seed. The report is conclusive only when the evaluated
/// payloads cover the full finite enumeration of a memoryless context.
ReplacementReport can_replace(const Context& context,
                              const std::vector<SystemUnderTest*>& candidate,
                              const std::vector<SystemUnderTest*>& incumbent,
                              const Property& property, const TestSet& testset,
                              std::uint64_t seed);

/// The property cannot distinguish the two tuples iff verdicts agree on every
/// test case. An Inconclusive verdict differing from Pass/Fail counts as
/// distinguishing.
EquivalenceReport equivalent(const Context& context, const std::vector<SystemUnderTest*>& systems1,
                             const std::vector<SystemUnderTest*>& systems2,
                             const Property& property, const TestSet& testset, std::uint64_t seed);

/// Full input domain as a test set when it is finite-enumerable, otherwise
/// absent. Conclusiveness of downstream reports additionally requires the
/// context to be memoryless; the set itself is returned regardless.
std::optional<TestSet> enumerate_domain(const Context& context);

/// True when the test set's payloads cover the whole finite enumeration of a
/// memoryless context's input domain.
bool covers_domain_conclusively(const Context& context, const TestSet& testset);

}  // namespace standin
