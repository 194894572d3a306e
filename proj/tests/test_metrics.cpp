#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "standin/contexts.hpp"
#include "standin/generators.hpp"
#include "standin/metrics.hpp"

using namespace standin;

namespace {

std::shared_ptr<EquivalenceClassifier> mod_classifier(int mod) {
  auto c = std::make_shared<EquivalenceClassifier>();
  c->name = "mod" + std::to_string(mod);
  std::set<std::string> universe;
  for (int i = 0; i < mod; ++i) universe.insert("m" + std::to_string(i));
  c->universe = std::move(universe);
  c->classify = [mod](const TestCase& tc) {
    return "m" + std::to_string(tc.payload.get<int>() % mod);
  };
  return c;
}

TestSet ints(int lo, int hi) { return generate_exhaustive(fixtures::int_domain(lo, hi)); }

std::vector<Verdict> verdicts(std::size_t n_pass, std::size_t n_fail,
                              std::size_t n_inconclusive = 0) {
  std::vector<Verdict> out;
  for (std::size_t i = 0; i < n_pass; ++i) out.push_back(pass_verdict());
  for (std::size_t i = 0; i < n_fail; ++i) out.push_back(fail_verdict());
  for (std::size_t i = 0; i < n_inconclusive; ++i) out.push_back(inconclusive_verdict());
  return out;
}

}  // namespace

TEST_CASE("class coverage efficiency") {
  auto classifier = mod_classifier(4);
  const auto eff = class_coverage_eff(classifier);

  SUBCASE("empty set scores zero") { CHECK(eff(TestSet{}) == 0.0); }
  SUBCASE("full cover scores one") { CHECK(eff(ints(0, 7)) == 1.0); }
  SUBCASE("two of four equal-weight classes score one half") {
    CHECK(eff(ints(0, 1)) == 0.5);  // classes m0 and m1 only
  }
  SUBCASE("weights shift the shares") {
    classifier->weights = {{"m0", 3.0}, {"m1", 1.0}, {"m2", 1.0}, {"m3", 1.0}};
    const auto weighted = class_coverage_eff(classifier);
    TestSet only_m0;
    only_m0.cases.push_back({"0", Value(0), 1});
    CHECK(weighted(only_m0) == doctest::Approx(0.5));
  }
  SUBCASE("no universe raises MissingUniverse") {
    auto bare = std::make_shared<EquivalenceClassifier>();
    bare->classify = [](const TestCase&) { return "x"; };
    try {
      class_coverage_eff(bare);
      FAIL("expected MissingUniverse");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MissingUniverse);
    }
  }
}

TEST_CASE("success score against frozen exact-binomial values") {
  SUBCASE("10 of 10 at 0.95") {
    const auto s = success_score(verdicts(10, 0), 0.95);
    REQUIRE_FALSE(s.degenerate());
    CHECK(*s.point_estimate == 1.0);
    CHECK(*s.ci_high == 1.0);
    CHECK(*s.ci_low == doctest::Approx(0.6915028921812392).epsilon(1e-9));
  }
  SUBCASE("0 of 10 at 0.95") {
    const auto s = success_score(verdicts(0, 10), 0.95);
    CHECK(*s.point_estimate == 0.0);
    CHECK(*s.ci_low == 0.0);
    CHECK(*s.ci_high == doctest::Approx(0.3084971078187608).epsilon(1e-9));
  }
  SUBCASE("9 pass, 1 fail, 2 inconclusive at 0.95") {
    const auto s = success_score(verdicts(9, 1, 2), 0.95);
    CHECK(*s.point_estimate == doctest::Approx(0.9));
    CHECK(s.n_pass == 9);
    CHECK(s.n_fail == 1);
    CHECK(s.n_inconclusive == 2);
    CHECK(*s.ci_low == doctest::Approx(0.5549838829718046).epsilon(1e-9));
    CHECK(*s.ci_high == doctest::Approx(0.9974714214555382).epsilon(1e-9));
  }
  SUBCASE("all inconclusive yields a degenerate record with counts only") {
    const auto s = success_score(verdicts(0, 0, 5), 0.95);
    CHECK(s.degenerate());
    CHECK(s.n_inconclusive == 5);
    CHECK(s.width() == 1.0);
  }
  SUBCASE("spot values at other levels") {
    const auto a = clopper_pearson(5, 10, 0.90);
    CHECK(a.first == doctest::Approx(0.22244110100812936).epsilon(1e-9));
    CHECK(a.second == doctest::Approx(0.7775588989918706).epsilon(1e-9));
    const auto b = clopper_pearson(3, 7, 0.99);
    CHECK(b.first == doctest::Approx(0.05529934998056629).epsilon(1e-9));
    CHECK(b.second == doctest::Approx(0.882296248331048).epsilon(1e-9));
  }
}

TEST_CASE("exact binomial interval matches the tail-summation oracle (sampled)") {
  // The full n <= 30 sweep runs in the acceptance suite; spot-check here.
  for (const double level : {0.9, 0.95, 0.99}) {
    for (const int n : {1, 2, 5, 12, 30}) {
      for (int k = 0; k <= n; ++k) {
        const auto [lo, hi] = clopper_pearson(k, n, level);
        CHECK(lo == doctest::Approx(oracles::cp_lower(k, n, level)).epsilon(1e-9));
        CHECK(hi == doctest::Approx(oracles::cp_upper(k, n, level)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("interval width shrinks with n at fixed pass fraction") {
  double last = 1.0;
  for (const int n : {10, 20, 40, 80}) {
    const auto [lo, hi] = clopper_pearson(n / 2, n, 0.95);
    CHECK(hi - lo <= last);
    last = hi - lo;
  }
}

TEST_CASE("monotonicity audit") {
  auto classifier = mod_classifier(5);
  const auto eff = class_coverage_eff(classifier);
  const TestSet pool = ints(0, 49);

  SUBCASE("class coverage passes 1000 trials") {
    const auto report = audit_monotonicity(eff, subset_sampler(pool), 1000, 7);
    CHECK(report.passed);
    CHECK(report.trials == 1000);
    CHECK(report.violations.empty());
  }
  SUBCASE("pathological eff(T) = 1/(1+|T|) fails within 10 trials") {
    EfficiencyFunction bad;
    bad.name = "shrinking";
    bad.eval = [](const TestSet& t) { return 1.0 / (1.0 + static_cast<double>(t.size())); };
    const auto report = audit_monotonicity(bad, subset_sampler(pool), 10, 7);
    CHECK_FALSE(report.passed);
    CHECK(report.violations.size() >= 1);
  }
  SUBCASE("zero trials are rejected") {
    try {
      audit_monotonicity(eff, subset_sampler(pool), 0, 7);
      FAIL("expected Precondition");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Precondition);
    }
  }
  SUBCASE("audits are deterministic given the seed") {
    const auto a = audit_monotonicity(eff, subset_sampler(pool), 50, 11);
    const auto b = audit_monotonicity(eff, subset_sampler(pool), 50, 11);
    CHECK(a.violations == b.violations);
    CHECK(a.passed == b.passed);
  }
}

TEST_CASE("consistency audit") {
  auto classifier = mod_classifier(5);
  const TestSet pool = ints(0, 49);

  SUBCASE("class coverage is consistent with its own classifier") {
    const auto report = audit_consistency(class_coverage_eff(classifier), *classifier,
                                          subset_sampler(pool), 500, 3);
    CHECK(report.passed);
  }
  SUBCASE("payload-magnitude eff violates consistency") {
    EfficiencyFunction magnitude;
    magnitude.name = "magnitude";
    magnitude.eval = [](const TestSet& t) {
      double max_v = 0;
      for (const auto& tc : t.cases) max_v = std::max(max_v, tc.payload.get<double>());
      return max_v / 1000.0;
    };
    const auto report =
        audit_consistency(magnitude, *classifier, subset_sampler(pool), 100, 3);
    CHECK_FALSE(report.passed);
  }
  SUBCASE("single-class universe passes vacuously") {
    auto lump = std::make_shared<EquivalenceClassifier>();
    lump->name = "all";
    lump->universe = std::set<std::string>{"all"};
    lump->classify = [](const TestCase&) { return "all"; };
    const auto report = audit_consistency(class_coverage_eff(lump), *lump,
                                          subset_sampler(pool), 25, 3);
    CHECK(report.passed);
    CHECK(report.trials == 25);
  }
}

namespace {

/// Context/system fixture with per-class deterministic outcomes: values in
/// 0..49 in five classes of ten; pass iff the value's class is below
/// pass_classes, except that members of `failing` always fail.
struct ScoreFixture {
  std::unique_ptr<Context> context;
  std::unique_ptr<SystemUnderTest> system;
  std::unique_ptr<Property> property;
  TestSet pool;

  explicit ScoreFixture(int pass_classes, std::set<int> failing = {}) {
    auto table = std::make_shared<FunctionTable>();
    for (int v = 0; v <= 49; ++v) {
      const bool pass = (v % 5) < pass_classes && !failing.count(v);
      table->set(Value(v), Value(pass ? 1 : 0));
    }
    context = make_function_context(fixtures::int_domain(0, 49), fixtures::bit_domain());
    system = fixtures::table_system("fixture", table, *context);
    property = std::make_unique<LambdaProperty>("is-one", [](const TestCase&, const Run& run) {
      return run.steps[0].observation == Value(1) ? pass_verdict() : fail_verdict();
    });
    pool = generate_exhaustive(context->input_domain());
  }
};

}  // namespace

TEST_CASE("reproducibility audit") {
  auto classifier = mod_classifier(5);

  SUBCASE("deterministic per-class outcomes pass at delta 0.1") {
    ScoreFixture f(4);  // classes m0..m3 pass entirely, m4 fails entirely
    const auto report = audit_reproducibility(
        class_coverage_eff(classifier), *f.context, {f.system.get()}, *f.property,
        stratified_pair_sampler(f.pool, classifier, 3), SimilarityDegree{0.1}, 100, 5);
    CHECK(report.passed);
    CHECK(report.trials == 100);
  }
  SUBCASE("concentrated failures violate a tight degree") {
    // Failures sit in a two-value pocket of class m4: equally efficient
    // stratified samples score differently depending on whether they hit it.
    ScoreFixture f(5, {44, 49});
    const auto report = audit_reproducibility(
        class_coverage_eff(classifier), *f.context, {f.system.get()}, *f.property,
        stratified_pair_sampler(f.pool, classifier, 3), SimilarityDegree{0.01}, 100, 5);
    CHECK_FALSE(report.passed);
    CHECK(report.violations.size() >= 1);
  }
  SUBCASE("delta 1.0 makes similarity total") {
    ScoreFixture f(5, {44, 49});
    const auto report = audit_reproducibility(
        class_coverage_eff(classifier), *f.context, {f.system.get()}, *f.property,
        stratified_pair_sampler(f.pool, classifier, 3), SimilarityDegree{1.0}, 50, 5);
    CHECK(report.passed);
  }
}

TEST_CASE("union compatibility audit") {
  const TestSet pool = ints(0, 49);

  SUBCASE("set-aligned premises pass under equal weights") {
    auto classifier = mod_classifier(5);
    const auto report =
        audit_union_compatibility(class_coverage_eff(classifier),
                                  set_aligned_quad_sampler(pool, classifier), 300, 9);
    CHECK(report.passed);
  }
  SUBCASE("degenerate quadruples T1=T2, T3=T4 pass trivially") {
    auto classifier = mod_classifier(5);
    const auto eff = class_coverage_eff(classifier);
    auto sampler = [&pool](Rng& rng) {
      TestSetQuad quad;
      TestSet t;
      for (const auto& tc : pool.cases) {
        if (rng.coin()) t.cases.push_back(tc);
      }
      quad.t1 = quad.t2 = t;
      TestSet u;
      for (const auto& tc : pool.cases) {
        if (rng.coin()) u.cases.push_back(tc);
      }
      quad.t3 = quad.t4 = u;
      return quad;
    };
    const auto report = audit_union_compatibility(eff, sampler, 100, 9);
    CHECK(report.passed);
  }
  SUBCASE("weighted coverage with value-aligned premises can violate") {
    // Three classes weighted 2:1:1. eff({m1 member}) = eff({m2 member}) =
    // 0.25, but m0 unions differ: the requirement is strictly stronger than
    // the coverage fraction.
    auto classifier = mod_classifier(3);
    classifier->weights = {{"m0", 2.0}, {"m1", 1.0}, {"m2", 1.0}};
    const auto report =
        audit_union_compatibility(class_coverage_eff(classifier),
                                  value_aligned_quad_sampler(ints(0, 29), classifier), 200, 9);
    CHECK_FALSE(report.passed);
  }
}

TEST_CASE("accuracy trend audit") {
  auto rec = [](double width) {
    ScoreRecord s;
    s.point_estimate = 0.5;
    s.ci_low = 0.5 - width / 2;
    s.ci_high = 0.5 + width / 2;
    return s;
  };
  SUBCASE("shrinking widths pass") {
    const auto report =
        audit_accuracy_trend({{0.2, rec(0.5)}, {0.5, rec(0.3)}, {0.9, rec(0.2)}});
    CHECK(report.passed);
  }
  SUBCASE("growing width is a violation") {
    const auto report = audit_accuracy_trend({{0.2, rec(0.3)}, {0.5, rec(0.5)}});
    CHECK_FALSE(report.passed);
    CHECK(report.violations.size() == 1);
  }
  SUBCASE("single entry passes vacuously") {
    CHECK(audit_accuracy_trend({{0.5, rec(0.4)}}).passed);
  }
  SUBCASE("unsorted series is rejected") {
    try {
      audit_accuracy_trend({{0.5, rec(0.3)}, {0.2, rec(0.2)}});
      FAIL("expected UnsortedSeries");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::UnsortedSeries);
    }
  }
}

TEST_CASE("similarity degree") {
  ScoreRecord a;
  a.point_estimate = 0.5;
  ScoreRecord b;
  b.point_estimate = 0.58;
  CHECK(SimilarityDegree{0.1}.similar(a, b));
  CHECK_FALSE(SimilarityDegree{0.05}.similar(a, b));
  ScoreRecord degenerate;
  CHECK(SimilarityDegree{0.1}.similar(degenerate, degenerate));
  CHECK_FALSE(SimilarityDegree{0.1}.similar(a, degenerate));
}
