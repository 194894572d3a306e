#include "standin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace standin {

std::string_view to_string(Requirement r) {
  switch (r) {
    case Requirement::Monotonicity: return "monotonicity";
    case Requirement::Consistency: return "consistency";
    case Requirement::Reproducibility: return "reproducibility";
    case Requirement::UnionCompatibility: return "union-compatibility";
    case Requirement::AccuracyTrend: return "accuracy-trend";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Class coverage
// ---------------------------------------------------------------------------

EfficiencyFunction class_coverage_eff(std::shared_ptr<const EquivalenceClassifier> classifier) {
  if (!classifier || !classifier->universe) {
    throw Error(ErrorKind::MissingUniverse,
                "class coverage requires a classifier with an explicit universe");
  }
  double total_weight = 0.0;
  for (const auto& key : *classifier->universe) total_weight += classifier->weight_of(key);
  if (total_weight <= 0.0)
    throw Error(ErrorKind::Precondition, "universe weights must sum to a positive value");

  EfficiencyFunction eff;
  eff.name = "class-coverage(" + classifier->name + ")";
  eff.classifier = classifier;
  eff.eval = [classifier, total_weight](const TestSet& testset) {
    std::set<std::string> covered;
    for (const auto& tc : testset.cases) covered.insert(classifier->classify_checked(tc));
    double w = 0.0;
    for (const auto& key : covered) w += classifier->weight_of(key);
    return w / total_weight;
  };
  return eff;
}

// ---------------------------------------------------------------------------
// Exact binomial interval
// ---------------------------------------------------------------------------

namespace {

// Continued fraction for the incomplete beta function (Lentz's method).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(b) - std::lgamma(a) +
                        b * std::log1p(-x) + a * std::log(x)) *
                   beta_continued_fraction(b, a, 1.0 - x) / b;
}

namespace {

// Quantile of the Beta(a,b) distribution by bisection on I_x(a,b) = p.
double beta_quantile(double p, double a, double b) {
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (regularized_incomplete_beta(a, b, mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::pair<double, double> clopper_pearson(std::size_t k, std::size_t n, double confidence_level) {
  if (n == 0) throw Error(ErrorKind::Precondition, "clopper_pearson with n = 0");
  if (k > n) throw Error(ErrorKind::Precondition, "clopper_pearson with k > n");
  if (confidence_level <= 0.0 || confidence_level >= 1.0)
    throw Error(ErrorKind::Precondition, "confidence level must be in (0,1)");
  const double alpha = 1.0 - confidence_level;
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  const double lo = (k == 0) ? 0.0 : beta_quantile(alpha / 2.0, kd, nd - kd + 1.0);
  const double hi = (k == n) ? 1.0 : beta_quantile(1.0 - alpha / 2.0, kd + 1.0, nd - kd);
  return {lo, hi};
}

ScoreRecord success_score(const std::vector<Verdict>& verdicts, double confidence_level) {
  if (confidence_level <= 0.0 || confidence_level >= 1.0)
    throw Error(ErrorKind::Precondition, "confidence level must be in (0,1)");
  ScoreRecord record;
  record.confidence_level = confidence_level;
  for (const auto& v : verdicts) {
    switch (v.outcome) {
      case Outcome::Pass: ++record.n_pass; break;
      case Outcome::Fail: ++record.n_fail; break;
      case Outcome::Inconclusive: ++record.n_inconclusive; break;
    }
  }
  const std::size_t n = record.n_pass + record.n_fail;
  if (n == 0) return record;  // degenerate: counts only
  record.point_estimate = static_cast<double>(record.n_pass) / static_cast<double>(n);
  auto [lo, hi] = clopper_pearson(record.n_pass, n, confidence_level);
  record.ci_low = lo;
  record.ci_high = hi;
  return record;
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

namespace {

TestSet subset_of(const TestSet& pool, const std::vector<std::size_t>& indices,
                  const std::string& name) {
  TestSet out;
  out.name = name;
  out.cases.reserve(indices.size());
  for (std::size_t i : indices) out.cases.push_back(pool.cases[i]);
  return out;
}

std::vector<std::size_t> random_subset_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.coin()) picked.push_back(i);
  }
  return picked;
}

// Sample k distinct elements from items (order deterministic in the rng).
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> items, std::size_t k, Rng& rng) {
  std::vector<T> out;
  k = std::min(k, items.size());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.index(items.size() - i);
    std::swap(items[i], items[j]);
    out.push_back(items[i]);
  }
  return out;
}

std::map<std::string, std::vector<std::size_t>> pool_by_class(
    const TestSet& pool, const EquivalenceClassifier& classifier) {
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < pool.cases.size(); ++i) {
    by_class[classifier.classify_checked(pool.cases[i])].push_back(i);
  }
  return by_class;
}

}  // namespace

TestSetSampler subset_sampler(TestSet pool) {
  validate_testset(pool);
  return [pool = std::move(pool)](Rng& rng) {
    return subset_of(pool, random_subset_indices(pool.cases.size(), rng), "subset");
  };
}

TestSetPairSampler stratified_pair_sampler(
    TestSet pool, std::shared_ptr<const EquivalenceClassifier> classifier,
    std::size_t per_class) {
  validate_testset(pool);
  return [pool = std::move(pool), classifier, per_class](Rng& rng) {
    const auto by_class = pool_by_class(pool, *classifier);
    auto draw = [&](const std::string& name) {
      std::vector<std::size_t> picked;
      for (const auto& [key, members] : by_class) {
        auto chosen = sample_without_replacement(members, per_class, rng);
        picked.insert(picked.end(), chosen.begin(), chosen.end());
      }
      std::sort(picked.begin(), picked.end());
      return subset_of(pool, picked, name);
    };
    TestSet a = draw("stratified-a");
    TestSet b = draw("stratified-b");
    return std::make_pair(std::move(a), std::move(b));
  };
}

namespace {

// Draw a nonempty subset of classes, then one or more members of each.
TestSet draw_class_aligned(const TestSet& pool,
                           const std::map<std::string, std::vector<std::size_t>>& by_class,
                           const std::vector<std::string>& class_keys, Rng& rng,
                           const std::string& name) {
  std::vector<std::size_t> picked;
  for (const auto& key : class_keys) {
    const auto& members = by_class.at(key);
    const std::size_t take = 1 + rng.index(members.size());
    auto chosen = sample_without_replacement(members, take, rng);
    picked.insert(picked.end(), chosen.begin(), chosen.end());
  }
  std::sort(picked.begin(), picked.end());
  return subset_of(pool, picked, name);
}

std::vector<std::string> covered_keys(const std::map<std::string, std::vector<std::size_t>>& by_class,
                                      Rng& rng) {
  std::vector<std::string> keys;
  for (const auto& [key, members] : by_class) keys.push_back(key);
  const std::size_t take = 1 + rng.index(keys.size());
  return sample_without_replacement(keys, take, rng);
}

}  // namespace

TestSetQuadSampler set_aligned_quad_sampler(
    TestSet pool, std::shared_ptr<const EquivalenceClassifier> classifier) {
  validate_testset(pool);
  return [pool = std::move(pool), classifier](Rng& rng) {
    const auto by_class = pool_by_class(pool, *classifier);
    TestSetQuad quad;
    auto keys13 = covered_keys(by_class, rng);
    quad.t1 = draw_class_aligned(pool, by_class, keys13, rng, "t1");
    quad.t2 = draw_class_aligned(pool, by_class, keys13, rng, "t2");
    auto keys24 = covered_keys(by_class, rng);
    quad.t3 = draw_class_aligned(pool, by_class, keys24, rng, "t3");
    quad.t4 = draw_class_aligned(pool, by_class, keys24, rng, "t4");
    return quad;
  };
}

TestSetQuadSampler value_aligned_quad_sampler(
    TestSet pool, std::shared_ptr<const EquivalenceClassifier> classifier) {
  validate_testset(pool);
  // Each set covers an independently drawn class subset; only the audit's
  // premise filter equalizes efficiency VALUES, so equal eff can arise from
  // different covered-class sets (e.g. one heavy class vs two light ones).
  return [pool = std::move(pool), classifier](Rng& rng) {
    const auto by_class = pool_by_class(pool, *classifier);
    TestSetQuad quad;
    quad.t1 = draw_class_aligned(pool, by_class, covered_keys(by_class, rng), rng, "t1");
    quad.t2 = draw_class_aligned(pool, by_class, covered_keys(by_class, rng), rng, "t2");
    quad.t3 = draw_class_aligned(pool, by_class, covered_keys(by_class, rng), rng, "t3");
    quad.t4 = draw_class_aligned(pool, by_class, covered_keys(by_class, rng), rng, "t4");
    return quad;
  };
}

// ---------------------------------------------------------------------------
// Audits
// ---------------------------------------------------------------------------

namespace {

void require_trials(std::size_t trials) {
  if (trials < 1) throw Error(ErrorKind::Precondition, "audit requires trials >= 1");
}

std::string describe_set(const TestSet& t) {
  std::string s = "{";
  for (std::size_t i = 0; i < t.cases.size() && i < 8; ++i) {
    if (i) s += ",";
    s += t.cases[i].id;
  }
  if (t.cases.size() > 8) s += ",...";
  s += "}";
  return s;
}

}  // namespace

AuditReport audit_monotonicity(const EfficiencyFunction& eff, const TestSetSampler& sampler,
                               std::size_t trials, std::uint64_t seed) {
  require_trials(trials);
  AuditReport report;
  report.requirement = Requirement::Monotonicity;
  report.trials = trials;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, "trial", trial));
    TestSet t2 = sampler(rng);
    // T1 is a random subset of T2, so T1 is contained in T2 by construction.
    std::vector<std::size_t> sub = random_subset_indices(t2.cases.size(), rng);
    TestSet t1 = subset_of(t2, sub, "t1");
    const double e1 = eff(t1);
    const double e2 = eff(t2);
    if (e1 > e2 + kEffTolerance) {
      std::ostringstream os;
      os << "trial " << trial << ": eff(" << describe_set(t1) << ") = " << e1 << " > eff("
         << describe_set(t2) << ") = " << e2;
      report.violations.push_back(os.str());
    }
  }
  report.passed = report.violations.empty();
  return report;
}

AuditReport audit_consistency(const EfficiencyFunction& eff,
                              const EquivalenceClassifier& classifier,
                              const TestSetSampler& sampler, std::size_t trials,
                              std::uint64_t seed) {
  require_trials(trials);
  AuditReport report;
  report.requirement = Requirement::Consistency;
  report.trials = trials;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, "trial", trial));
    TestSet t = sampler(rng);
    // Group the draw by class and probe a random within-class pair.
    std::map<std::string, std::vector<const TestCase*>> by_class;
    for (const auto& tc : t.cases) by_class[classifier.classify_checked(tc)].push_back(&tc);
    std::vector<const std::vector<const TestCase*>*> rich;
    for (const auto& [key, members] : by_class) {
      if (members.size() >= 2) rich.push_back(&members);
    }
    if (rich.empty()) continue;  // nothing comparable this trial
    const auto& members = *rich[rng.index(rich.size())];
    const std::size_t i = rng.index(members.size());
    std::size_t j = rng.index(members.size() - 1);
    if (j >= i) ++j;
    const double e1 = eff.singleton(*members[i]);
    const double e2 = eff.singleton(*members[j]);
    if (std::abs(e1 - e2) > kEffTolerance) {
      std::ostringstream os;
      os << "trial " << trial << ": eff({" << members[i]->id << "}) = " << e1 << " != eff({"
         << members[j]->id << "}) = " << e2 << " within one class";
      report.violations.push_back(os.str());
    }
  }
  report.passed = report.violations.empty();
  return report;
}

namespace {

constexpr int kEqualizeAttempts = 64;

}  // namespace

AuditReport audit_reproducibility(const EfficiencyFunction& eff, const Context& context,
                                  const std::vector<SystemUnderTest*>& systems,
                                  const Property& property, const TestSetPairSampler& sampler,
                                  SimilarityDegree similarity, std::size_t trials,
                                  std::uint64_t seed, double confidence_level) {
  require_trials(trials);
  AuditReport report;
  report.requirement = Requirement::Reproducibility;
  report.trials = trials;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, "trial", trial));
    std::optional<std::pair<TestSet, TestSet>> pair;
    for (int attempt = 0; attempt < kEqualizeAttempts; ++attempt) {
      auto candidate = sampler(rng);
      if (std::abs(eff(candidate.first) - eff(candidate.second)) <= kEffTolerance) {
        pair = std::move(candidate);
        break;
      }
    }
    if (!pair) {
      throw Error(ErrorKind::SamplerCannotEqualize,
                  "no equally-efficient pair after " + std::to_string(kEqualizeAttempts) +
                      " attempts (trial " + std::to_string(trial) + ")");
    }
    auto score_of = [&](const TestSet& t) {
      std::vector<Verdict> verdicts;
      verdicts.reserve(t.cases.size());
      for (const auto& tc : t.cases) {
        const std::uint64_t case_seed = derive_seed(seed, "case-" + tc.id);
        Run run = run_experiment(context, systems, tc, case_seed);
        verdicts.push_back(property.judge(tc, run));
      }
      return success_score(verdicts, confidence_level);
    };
    const ScoreRecord s1 = score_of(pair->first);
    const ScoreRecord s2 = score_of(pair->second);
    if (!similarity.similar(s1, s2)) {
      std::ostringstream os;
      os << "trial " << trial << ": equally efficient sets scored ";
      if (s1.degenerate() || s2.degenerate()) {
        os << "one degenerate record against a non-degenerate one";
      } else {
        os << *s1.point_estimate << " vs " << *s2.point_estimate << " (delta " << similarity.delta
           << ")";
      }
      report.violations.push_back(os.str());
    }
  }
  report.passed = report.violations.empty();
  return report;
}

AuditReport audit_union_compatibility(const EfficiencyFunction& eff,
                                      const TestSetQuadSampler& sampler, std::size_t trials,
                                      std::uint64_t seed) {
  require_trials(trials);
  AuditReport report;
  report.requirement = Requirement::UnionCompatibility;
  report.trials = trials;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, "trial", trial));
    std::optional<TestSetQuad> quad;
    for (int attempt = 0; attempt < kEqualizeAttempts; ++attempt) {
      TestSetQuad candidate = sampler(rng);
      if (std::abs(eff(candidate.t1) - eff(candidate.t2)) <= kEffTolerance &&
          std::abs(eff(candidate.t3) - eff(candidate.t4)) <= kEffTolerance) {
        quad = std::move(candidate);
        break;
      }
    }
    if (!quad) {
      throw Error(ErrorKind::SamplerCannotEqualize,
                  "no premise-satisfying quadruple after " + std::to_string(kEqualizeAttempts) +
                      " attempts (trial " + std::to_string(trial) + ")");
    }
    const double u13 = eff(testset_union(quad->t1, quad->t3));
    const double u24 = eff(testset_union(quad->t2, quad->t4));
    if (std::abs(u13 - u24) > kEffTolerance) {
      std::ostringstream os;
      os << "trial " << trial << ": eff(T1 u T3) = " << u13 << " != eff(T2 u T4) = " << u24
         << " although eff(T1)=eff(T2) and eff(T3)=eff(T4)";
      report.violations.push_back(os.str());
    }
  }
  report.passed = report.violations.empty();
  return report;
}

AuditReport audit_accuracy_trend(const std::vector<std::pair<double, ScoreRecord>>& sc_series) {
  AuditReport report;
  report.requirement = Requirement::AccuracyTrend;
  report.trials = sc_series.size();
  constexpr double kWidthTolerance = 1e-9;
  for (std::size_t i = 1; i < sc_series.size(); ++i) {
    if (sc_series[i].first <= sc_series[i - 1].first) {
      throw Error(ErrorKind::UnsortedSeries,
                  "series must be sorted by strictly increasing efficiency");
    }
  }
  for (std::size_t i = 1; i < sc_series.size(); ++i) {
    const double prev = sc_series[i - 1].second.width();
    const double next = sc_series[i].second.width();
    if (next > prev + kWidthTolerance) {
      std::ostringstream os;
      os << "entry " << i << ": interval width grew from " << prev << " to " << next
         << " while efficiency rose from " << sc_series[i - 1].first << " to "
         << sc_series[i].first;
      report.violations.push_back(os.str());
    }
  }
  report.passed = report.violations.empty();
  return report;
}

}  // namespace standin
