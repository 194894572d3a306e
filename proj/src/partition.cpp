#include "standin/partition.hpp"

#include <algorithm>

#include "standin/metrics.hpp"

namespace standin {

std::string EquivalenceClassifier::classify_checked(const TestCase& testcase) const {
  std::string key;
  try {
    key = classify(testcase);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::UnclassifiableCase,
                "case '" + testcase.id + "' could not be classified: " + e.what());
  }
  if (universe && !universe->count(key)) {
    throw Error(ErrorKind::UnclassifiableCase,
                "case '" + testcase.id + "' maps to '" + key + "', outside the declared universe");
  }
  return key;
}

PartitionReport partition(const TestSet& testset, const EquivalenceClassifier& classifier) {
  validate_testset(testset);
  PartitionReport report;
  for (const auto& tc : testset.cases) {
    report.classes[classifier.classify_checked(tc)].push_back(tc.id);
  }
  for (auto& [key, ids] : report.classes) std::sort(ids.begin(), ids.end());
  if (classifier.universe) {
    for (const auto& key : *classifier.universe) {
      if (!report.classes.count(key)) report.uncovered.insert(key);
    }
  }
  return report;
}

AnomalyReport metamorphic_falsify(const Context& context,
                                  const std::vector<SystemUnderTest*>& systems,
                                  const Property& property,
                                  const EquivalenceClassifier& classifier, const TestSet& testset,
                                  std::uint64_t seed) {
  validate_testset(testset);
  struct Entry {
    const TestCase* testcase;
    Verdict verdict;
  };
  std::map<std::string, std::vector<Entry>> by_class;
  for (const auto& tc : testset.cases) {
    const std::string key = classifier.classify_checked(tc);
    const std::uint64_t case_seed = derive_seed(seed, "case-" + tc.id);
    Run run = run_experiment(context, systems, tc, case_seed);
    by_class[key].push_back({&tc, property.judge(tc, run)});
  }

  AnomalyReport report;
  for (auto& [key, entries] : by_class) {
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.testcase->id < b.testcase->id; });
    MixedClass mixed;
    mixed.class_key = key;
    const Entry* first_pass = nullptr;
    const Entry* first_fail = nullptr;
    for (const auto& e : entries) {
      if (e.verdict.outcome == Outcome::Pass) {
        mixed.pass_ids.push_back(e.testcase->id);
        if (!first_pass) first_pass = &e;
      } else if (e.verdict.outcome == Outcome::Fail) {
        mixed.fail_ids.push_back(e.testcase->id);
        if (!first_fail) first_fail = &e;
      }
      // Inconclusive ignored.
    }
    if (first_pass && first_fail) {
      report.anomalies.push_back({key, *first_pass->testcase, *first_fail->testcase,
                                  first_pass->verdict, first_fail->verdict});
      report.divergent.push_back(std::move(mixed));
    }
  }
  return report;
}

AnomalyReport detect_adversarial(const AnomalyReport& anomalies, const EfficiencyFunction& eff) {
  AnomalyReport certified;
  std::vector<std::string> inconsistent;
  for (const auto& anomaly : anomalies.anomalies) {
    const double e1 = eff.singleton(anomaly.first);
    const double e2 = eff.singleton(anomaly.second);
    if (e1 == e2) {
      certified.anomalies.push_back(anomaly);
    } else {
      inconsistent.push_back("class '" + anomaly.class_key + "': eff({" + anomaly.first.id +
                             "}) = " + std::to_string(e1) + " but eff({" + anomaly.second.id +
                             "}) = " + std::to_string(e2));
    }
  }
  if (!inconsistent.empty()) {
    std::string msg = "efficiency function distinguishes within-class singletons: ";
    for (std::size_t i = 0; i < inconsistent.size(); ++i) {
      if (i) msg += "; ";
      msg += inconsistent[i];
    }
    throw Error(ErrorKind::InconsistentEff, msg);
  }
  certified.divergent = anomalies.divergent;
  return certified;
}

}  // namespace standin
