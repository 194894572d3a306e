#include "standin/replacement.hpp"

#include <set>

namespace standin {

void validate_testset(const TestSet& testset) {
  std::set<std::string> ids;
  for (const auto& tc : testset.cases) {
    if (!ids.insert(tc.id).second)
      throw Error(ErrorKind::Precondition,
                  "duplicate test-case id '" + tc.id + "' in test set '" + testset.name + "'");
  }
}

TestSet testset_union(const TestSet& a, const TestSet& b, std::string name) {
  TestSet out;
  out.name = std::move(name);
  out.cases = a.cases;
  std::map<std::string, std::string> payload_by_id;
  for (const auto& tc : out.cases) payload_by_id[tc.id] = value_key(tc.payload);
  for (const auto& tc : b.cases) {
    auto it = payload_by_id.find(tc.id);
    if (it == payload_by_id.end()) {
      payload_by_id[tc.id] = value_key(tc.payload);
      out.cases.push_back(tc);
    } else if (it->second != value_key(tc.payload)) {
      TestCase renamed = tc;
      int k = 2;
      while (payload_by_id.count(renamed.id)) renamed.id = tc.id + "#u" + std::to_string(k++);
      payload_by_id[renamed.id] = value_key(renamed.payload);
      out.cases.push_back(renamed);
    }
  }
  return out;
}

bool covers_domain_conclusively(const Context& context, const TestSet& testset) {
  if (!context.memoryless()) return false;
  const DomainDescriptor& domain = context.input_domain();
  if (!domain.enumerable()) return false;
  std::set<std::string> covered;
  for (const auto& tc : testset.cases) covered.insert(value_key(tc.payload));
  for (const auto& v : domain.values) {
    if (!covered.count(value_key(v))) return false;
  }
  return true;
}

namespace {

struct PairEvaluation {
  std::vector<CasePairVerdicts> rows;  // one per test case, in test-set order
};

PairEvaluation evaluate_pair(const Context& context, const std::vector<SystemUnderTest*>& first,
                             const std::vector<SystemUnderTest*>& second,
                             const Property& property, const TestSet& testset,
                             std::uint64_t seed) {
  validate_testset(testset);
  PairEvaluation ev;
  ev.rows.reserve(testset.cases.size());
  for (const auto& tc : testset.cases) {
    const std::uint64_t case_seed = derive_seed(seed, "case-" + tc.id);
    Run run1 = run_experiment(context, first, tc, case_seed);
    Run run2 = run_experiment(context, second, tc, case_seed);
    ev.rows.push_back({tc, property.judge(tc, run1), property.judge(tc, run2)});
  }
  return ev;
}

}  // namespace

ReplacementReport judge_replacement(const std::vector<CasePairVerdicts>& rows,
                                    bool conclusive) {
  ReplacementReport report;
  report.cases_evaluated = rows.size();
  for (const auto& row : rows) {
    if (row.candidate.outcome == Outcome::Inconclusive ||
        row.incumbent.outcome == Outcome::Inconclusive) {
      report.indeterminate.push_back(row);
      continue;
    }
    if (row.incumbent.outcome == Outcome::Pass && row.candidate.outcome == Outcome::Fail) {
      report.violations.push_back(row);
    }
  }
  report.holds = report.violations.empty();
  report.conclusive = !rows.empty() && conclusive;
  return report;
}

EquivalenceReport judge_equivalence(const std::vector<CasePairVerdicts>& rows, bool conclusive) {
  EquivalenceReport report;
  report.cases_evaluated = rows.size();
  for (const auto& row : rows) {
    if (row.candidate.outcome != row.incumbent.outcome) {
      report.distinguishing_cases.push_back(row);
    }
  }
  report.equivalent = report.distinguishing_cases.empty();
  report.conclusive = !rows.empty() && conclusive;
  return report;
}

ReplacementReport can_replace(const Context& context,
                              const std::vector<SystemUnderTest*>& candidate,
                              const std::vector<SystemUnderTest*>& incumbent,
                              const Property& property, const TestSet& testset,
                              std::uint64_t seed) {
  if (testset.empty()) {
    // Warning-level: holds vacuously, never conclusive.
    return judge_replacement({}, false);
  }
  PairEvaluation ev = evaluate_pair(context, candidate, incumbent, property, testset, seed);
  return judge_replacement(ev.rows, covers_domain_conclusively(context, testset));
}

EquivalenceReport equivalent(const Context& context, const std::vector<SystemUnderTest*>& systems1,
                             const std::vector<SystemUnderTest*>& systems2,
                             const Property& property, const TestSet& testset,
                             std::uint64_t seed) {
  if (testset.empty()) {
    return judge_equivalence({}, false);
  }
  PairEvaluation ev = evaluate_pair(context, systems1, systems2, property, testset, seed);
  return judge_equivalence(ev.rows, covers_domain_conclusively(context, testset));
}

std::optional<TestSet> enumerate_domain(const Context& context) {
  const DomainDescriptor& domain = context.input_domain();
  if (!domain.enumerable()) return std::nullopt;
  TestSet out;
  out.name = "exhaustive(" + domain.name + ")";
  out.cases.reserve(domain.values.size());
  for (const auto& v : domain.values) out.cases.push_back(make_test_case(domain, v));
  return out;
}

}  // namespace standin
