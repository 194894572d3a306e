#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "standin/contexts.hpp"
#include "standin/generators.hpp"
#include "standin/metrics.hpp"
#include "standin/partition.hpp"

using namespace standin;

namespace {

std::shared_ptr<EquivalenceClassifier> parity_classifier() {
  auto c = std::make_shared<EquivalenceClassifier>();
  c->name = "parity";
  c->universe = std::set<std::string>{"even", "odd"};
  c->classify = [](const TestCase& tc) {
    return tc.payload.get<int>() % 2 == 0 ? "even" : "odd";
  };
  return c;
}

TestSet int_testset(int lo, int hi) {
  return generate_exhaustive(fixtures::int_domain(lo, hi));
}

}  // namespace

TEST_CASE("partition by parity over 0..7") {
  const TestSet testset = int_testset(0, 7);
  const auto report = partition(testset, *parity_classifier());
  REQUIRE(report.classes.size() == 2);
  CHECK(report.classes.at("even") == std::vector<std::string>{"0", "2", "4", "6"});
  CHECK(report.classes.at("odd") == std::vector<std::string>{"1", "3", "5", "7"});
  CHECK(report.uncovered.empty());
}

TEST_CASE("empty test set leaves the whole universe uncovered") {
  auto classifier = std::make_shared<EquivalenceClassifier>();
  classifier->name = "ab";
  classifier->universe = std::set<std::string>{"a", "b"};
  classifier->classify = [](const TestCase&) { return "a"; };
  const auto report = partition(TestSet{.name = "empty", .cases = {}}, *classifier);
  CHECK(report.classes.empty());
  CHECK(report.uncovered == std::set<std::string>{"a", "b"});
}

TEST_CASE("partition is exact: disjoint classes covering the set") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int size = 1 + static_cast<int>(rng.below(40));
    TestSet testset;
    testset.name = "random";
    std::set<int> used;
    for (int i = 0; i < size; ++i) {
      int v = static_cast<int>(rng.below(1000));
      while (used.count(v)) v = static_cast<int>(rng.below(1000));
      used.insert(v);
      testset.cases.push_back({std::to_string(v), Value(v), 1});
    }
    auto classifier = std::make_shared<EquivalenceClassifier>();
    classifier->name = "mod3";
    classifier->classify = [](const TestCase& tc) {
      return "m" + std::to_string(tc.payload.get<int>() % 3);
    };
    const auto report = partition(testset, *classifier);
    std::set<std::string> seen;
    std::size_t total = 0;
    for (const auto& [key, ids] : report.classes) {
      total += ids.size();
      for (const auto& id : ids) CHECK(seen.insert(id).second);  // pairwise disjoint
    }
    CHECK(total == testset.size());
  }
}

TEST_CASE("classifier rejects cases outside the declared universe") {
  auto classifier = parity_classifier();
  classifier->universe = std::set<std::string>{"even"};  // odd is now unclassifiable
  const TestSet testset = int_testset(0, 3);
  try {
    partition(testset, *classifier);
    FAIL("expected UnclassifiableCase");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnclassifiableCase);
  }
}

namespace {

struct FalsifySetup {
  std::unique_ptr<Context> context;
  std::unique_ptr<SystemUnderTest> system;
  std::unique_ptr<Property> property;
  TestSet testset;

  // System passes "output == 1" except on the given failing inputs.
  FalsifySetup(int lo, int hi, const std::set<int>& failing) {
    auto table = std::make_shared<FunctionTable>();
    for (int v = lo; v <= hi; ++v) table->set(Value(v), Value(failing.count(v) ? 0 : 1));
    context = make_function_context(fixtures::int_domain(lo, hi), fixtures::bit_domain());
    system = fixtures::table_system("fixture", table, *context);
    property = std::make_unique<LambdaProperty>("is-one", [](const TestCase&, const Run& run) {
      return run.steps[0].observation == Value(1) ? pass_verdict() : fail_verdict();
    });
    testset = generate_exhaustive(context->input_domain());
  }
};

}  // namespace

TEST_CASE("metamorphic falsification") {
  SUBCASE("constant-pass system yields no anomalies") {
    FalsifySetup s(0, 7, {});
    const auto report = metamorphic_falsify(*s.context, {s.system.get()}, *s.property,
                                            *parity_classifier(), s.testset, 1);
    CHECK(report.anomalies.empty());
    CHECK(report.divergent.empty());
  }

  SUBCASE("single class lumping pass and fail yields exactly one certified pair") {
    FalsifySetup s(0, 1, {1});
    auto lump = std::make_shared<EquivalenceClassifier>();
    lump->name = "all";
    lump->universe = std::set<std::string>{"all"};
    lump->classify = [](const TestCase&) { return "all"; };
    const auto report =
        metamorphic_falsify(*s.context, {s.system.get()}, *s.property, *lump, s.testset, 1);
    REQUIRE(report.anomalies.size() == 1);
    CHECK(report.anomalies[0].first.id == "0");
    CHECK(report.anomalies[0].second.id == "1");
    CHECK(report.anomalies[0].verdict_first.outcome == Outcome::Pass);
    CHECK(report.anomalies[0].verdict_second.outcome == Outcome::Fail);
  }

  SUBCASE("planted within-class misclassification is found in exactly that class") {
    // 3 classes x 4 members (0..11 mod 3); plant one failure at 7 (class m1).
    FalsifySetup s(0, 11, {7});
    auto mod3 = std::make_shared<EquivalenceClassifier>();
    mod3->name = "mod3";
    mod3->universe = std::set<std::string>{"m0", "m1", "m2"};
    mod3->classify = [](const TestCase& tc) {
      return "m" + std::to_string(tc.payload.get<int>() % 3);
    };
    const auto report =
        metamorphic_falsify(*s.context, {s.system.get()}, *s.property, *mod3, s.testset, 1);
    REQUIRE(report.anomalies.size() == 1);
    CHECK(report.anomalies[0].class_key == "m1");
    CHECK(report.anomalies[0].second.id == "7");

    // Soundness: recheck the reported pair independently.
    for (const auto& anomaly : report.anomalies) {
      CHECK(mod3->classify(anomaly.first) == mod3->classify(anomaly.second));
      const auto rerun = [&](const TestCase& tc) {
        const Run run = run_experiment(*s.context, {s.system.get()}, tc,
                                       derive_seed(1, "case-" + tc.id));
        return s.property->judge(tc, run).outcome;
      };
      CHECK(rerun(anomaly.first) != rerun(anomaly.second));
    }

    // Brute-force completeness: a divergence exists within some class iff the
    // report says so.
    bool any_divergence = false;
    for (const auto& [key, ids] : partition(s.testset, *mod3).classes) {
      std::set<Outcome> outcomes;
      for (const auto& id : ids) {
        const int v = std::stoi(id);
        outcomes.insert(v == 7 ? Outcome::Fail : Outcome::Pass);
      }
      if (outcomes.size() > 1) any_divergence = true;
    }
    CHECK(any_divergence == !report.anomalies.empty());
  }
}

TEST_CASE("adversarial certification") {
  FalsifySetup s(0, 11, {7});
  auto mod3 = std::make_shared<EquivalenceClassifier>();
  mod3->name = "mod3";
  mod3->universe = std::set<std::string>{"m0", "m1", "m2"};
  mod3->classify = [](const TestCase& tc) {
    return "m" + std::to_string(tc.payload.get<int>() % 3);
  };
  const auto anomalies =
      metamorphic_falsify(*s.context, {s.system.get()}, *s.property, *mod3, s.testset, 1);
  REQUIRE(anomalies.anomalies.size() == 1);

  SUBCASE("empty anomaly report stays empty") {
    const auto certified = detect_adversarial(AnomalyReport{}, class_coverage_eff(mod3));
    CHECK(certified.anomalies.empty());
  }

  SUBCASE("class-coverage efficiency certifies every anomaly") {
    const auto certified = detect_adversarial(anomalies, class_coverage_eff(mod3));
    REQUIRE(certified.anomalies.size() == 1);
    CHECK(certified.anomalies[0].class_key == "m1");
  }

  SUBCASE("an eff that distinguishes within-class singletons is reported") {
    EfficiencyFunction biased;
    biased.name = "payload-biased";
    biased.eval = [](const TestSet& t) {
      double total = 0;
      for (const auto& tc : t.cases) total += tc.payload.get<int>();
      return total > 0 ? 1.0 / (1.0 + total) : 0.0;
    };
    try {
      detect_adversarial(anomalies, biased);
      FAIL("expected InconsistentEff");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InconsistentEff);
    }
  }
}

TEST_CASE("classifier determinism over arbitrary test sets") {
  auto classifier = parity_classifier();
  const TestSet testset = int_testset(0, 20);
  for (const auto& tc : testset.cases) {
    CHECK(classifier->classify(tc) == classifier->classify(tc));
  }
}
