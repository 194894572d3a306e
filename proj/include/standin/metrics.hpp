#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "standin/partition.hpp"

namespace standin {

/// eff: test sets -> [0,1]; measures how thoroughly a set explores behavior
/// relevant to the property.
struct EfficiencyFunction {
  std::string name;
  std::function<double(const TestSet&)> eval;
  std::shared_ptr<const EquivalenceClassifier> classifier;  // optional link

  double operator()(const TestSet& testset) const { return eval(testset); }
  double singleton(const TestCase& testcase) const {
    TestSet s;
    s.name = "singleton";
    s.cases.push_back(testcase);
    return eval(s);
  }
};

/// Pass fraction over conclusive verdicts with an exact binomial
/// (Clopper-Pearson) confidence interval. Degenerate (all fields absent)
/// when there are no conclusive verdicts.
struct ScoreRecord {
  std::optional<double> point_estimate;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  double confidence_level = 0.95;
  std::size_t n_pass = 0;
  std::size_t n_fail = 0;
  std::size_t n_inconclusive = 0;

  bool degenerate() const { return !point_estimate.has_value(); }
  /// Interval width; a degenerate record carries no information (width 1).
  double width() const { return degenerate() ? 1.0 : *ci_high - *ci_low; }
};

enum class Requirement {
  Monotonicity,
  Consistency,
  Reproducibility,
  UnionCompatibility,
  AccuracyTrend,
};

std::string_view to_string(Requirement r);

struct AuditReport {
  Requirement requirement = Requirement::Monotonicity;
  std::size_t trials = 0;
  std::vector<std::string> violations;  // witness descriptions
  bool passed = true;
};

/// Similarity degree on scores: similar iff point estimates differ by <= delta.
struct SimilarityDegree {
  double delta = 0.0;

  bool similar(const ScoreRecord& a, const ScoreRecord& b) const {
    if (a.degenerate() || b.degenerate()) return a.degenerate() == b.degenerate();
    return std::abs(*a.point_estimate - *b.point_estimate) <= delta;
  }
};

// Numeric tolerance for efficiency-value comparisons throughout the audits.
inline constexpr double kEffTolerance = 1e-12;

// ---------------------------------------------------------------------------
// Built-in efficiency and score functions
// ---------------------------------------------------------------------------

/// Weighted class coverage: eff(T) = covered weight / total universe weight.
/// Requires the classifier to declare an explicit universe.
EfficiencyFunction class_coverage_eff(std::shared_ptr<const EquivalenceClassifier> classifier);

/// Exact Clopper-Pearson interval at the given confidence level over the
/// conclusive (Pass/Fail) verdicts. Inconclusive verdicts are counted but
/// excluded from both the estimate and the interval.
ScoreRecord success_score(const std::vector<Verdict>& verdicts, double confidence_level);

/// Exact binomial interval bounds for k successes in n trials, via inversion
/// of the regularized incomplete beta function.
std::pair<double, double> clopper_pearson(std::size_t k, std::size_t n, double confidence_level);

/// Regularized incomplete beta function I_x(a,b), continued-fraction
/// evaluation. Exposed for the metrics tests.
double regularized_incomplete_beta(double a, double b, double x);

// ---------------------------------------------------------------------------
// Samplers used by the audits
// ---------------------------------------------------------------------------

using TestSetSampler = std::function<TestSet(Rng&)>;
using TestSetPairSampler = std::function<std::pair<TestSet, TestSet>(Rng&)>;

struct TestSetQuad {
  TestSet t1, t2, t3, t4;
};
using TestSetQuadSampler = std::function<TestSetQuad(Rng&)>;

/// Uniform random subsets (possibly empty) of a fixed pool.
TestSetSampler subset_sampler(TestSet pool);

/// Draws the same number of cases per class from a pool, without
/// replacement, twice independently. Both draws cover the same classes, so
/// they are equally efficient under class coverage.
TestSetPairSampler stratified_pair_sampler(TestSet pool,
                                           std::shared_ptr<const EquivalenceClassifier> classifier,
                                           std::size_t per_class);

/// Quadruples whose premise pairs cover identical class SETS (t2 re-drawn
/// from exactly the classes covered by t1, likewise t4 from t3's classes).
TestSetQuadSampler set_aligned_quad_sampler(
    TestSet pool, std::shared_ptr<const EquivalenceClassifier> classifier);

/// Quadruples whose premise pairs merely have equal coverage VALUE: t2 covers
/// the same NUMBER of classes as t1 but possibly different ones (and likewise
/// t4 vs t3). Under weighted coverage this samples the regime where equal
/// efficiency does not pin down the covered-class set.
TestSetQuadSampler value_aligned_quad_sampler(
    TestSet pool, std::shared_ptr<const EquivalenceClassifier> classifier);

// ---------------------------------------------------------------------------
// Audits
// ---------------------------------------------------------------------------

/// Draws T1 and a superset T2 per trial; witnesses eff(T1) > eff(T2).
AuditReport audit_monotonicity(const EfficiencyFunction& eff, const TestSetSampler& sampler,
                               std::size_t trials, std::uint64_t seed);

/// Samples within-class pairs; witnesses differing singleton efficiencies.
AuditReport audit_consistency(const EfficiencyFunction& eff,
                              const EquivalenceClassifier& classifier,
                              const TestSetSampler& sampler, std::size_t trials,
                              std::uint64_t seed);

/// Draws equally-efficient test-set pairs, runs both through the context and
/// witnesses score dissimilarity under the given degree.
AuditReport audit_reproducibility(const EfficiencyFunction& eff, const Context& context,
                                  const std::vector<SystemUnderTest*>& systems,
                                  const Property& property, const TestSetPairSampler& sampler,
                                  SimilarityDegree similarity, std::size_t trials,
                                  std::uint64_t seed, double confidence_level = 0.95);

/// Samples quadruples satisfying eff(T1)=eff(T2) and eff(T3)=eff(T4);
/// witnesses eff(T1 u T3) != eff(T2 u T4).
AuditReport audit_union_compatibility(const EfficiencyFunction& eff,
                                      const TestSetQuadSampler& sampler, std::size_t trials,
                                      std::uint64_t seed);

/// Accuracy proxied by interval width: along a series of strictly increasing
/// efficiency, widths must not increase (tolerance 1e-9).
AuditReport audit_accuracy_trend(const std::vector<std::pair<double, ScoreRecord>>& sc_series);

}  // namespace standin
