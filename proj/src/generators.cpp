#include "standin/generators.hpp"

#include <algorithm>
#include <set>

namespace standin {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Exhaustive: return "exhaustive";
    case Strategy::Random: return "random";
    case Strategy::Stratified: return "stratified";
    case Strategy::Adaptive: return "adaptive";
    case Strategy::BoundedSequence: return "bounded-sequence";
  }
  return "random";
}

Strategy strategy_from_string(std::string_view s) {
  if (s == "exhaustive") return Strategy::Exhaustive;
  if (s == "random") return Strategy::Random;
  if (s == "stratified") return Strategy::Stratified;
  if (s == "adaptive") return Strategy::Adaptive;
  if (s == "bounded-sequence") return Strategy::BoundedSequence;
  throw Error(ErrorKind::ConfigError, "unknown generator strategy: " + std::string(s));
}

namespace {

/// Appends a payload to the set, disambiguating repeated payloads by suffix.
void push_case(TestSet& out, std::set<std::string>& seen_ids, const DomainDescriptor& domain,
               const Value& payload) {
  TestCase tc = make_test_case(domain, payload);
  if (seen_ids.count(tc.id)) {
    int k = 2;
    std::string base = tc.id;
    do {
      tc.id = base + "#" + std::to_string(k++);
    } while (seen_ids.count(tc.id));
  }
  seen_ids.insert(tc.id);
  out.cases.push_back(std::move(tc));
}

}  // namespace

TestSet generate_exhaustive(const DomainDescriptor& domain) {
  if (!domain.enumerable())
    throw Error(ErrorKind::InfiniteDomain,
                "domain '" + domain.name + "' has no finite enumeration");
  TestSet out;
  out.name = "exhaustive(" + domain.name + ")";
  for (const auto& v : domain.values) out.cases.push_back(make_test_case(domain, v));
  return out;
}

TestSet generate_random(const DomainDescriptor& domain, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw Error(ErrorKind::Precondition, "generate_random requires count >= 1");
  TestSet out;
  out.name = "random(" + domain.name + ")";
  std::set<std::string> seen;
  Rng rng(derive_seed(seed, "random"));
  for (std::size_t i = 0; i < count; ++i) push_case(out, seen, domain, domain.sample(rng));
  return out;
}

std::map<std::string, std::size_t> largest_remainder_quotas(
    const std::map<std::string, double>& weights, std::size_t count, bool ensure_minimum) {
  double total = 0.0;
  for (const auto& [key, w] : weights) {
    if (w <= 0.0) throw Error(ErrorKind::Precondition, "weights must be positive");
    total += w;
  }
  struct Share {
    std::string key;
    double weight;
    double exact;
    std::size_t quota;
    double remainder;
  };
  std::vector<Share> shares;
  std::size_t assigned = 0;
  for (const auto& [key, w] : weights) {
    const double exact = static_cast<double>(count) * w / total;
    const auto quota = static_cast<std::size_t>(exact);
    shares.push_back({key, w, exact, quota, exact - static_cast<double>(quota)});
    assigned += quota;
  }
  // Distribute the leftover by largest remainder; ties go to the heavier
  // class, then to the lexicographically smaller key.
  std::sort(shares.begin(), shares.end(), [](const Share& a, const Share& b) {
    if (a.remainder != b.remainder) return a.remainder > b.remainder;
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.key < b.key;
  });
  for (std::size_t i = 0; assigned < count; ++i, ++assigned) shares[i % shares.size()].quota += 1;
  if (ensure_minimum && count >= weights.size()) {
    auto steal_from_largest = [&shares]() -> Share* {
      Share* best = nullptr;
      for (auto& s : shares) {
        if (s.quota >= 2 && (!best || s.quota > best->quota)) best = &s;
      }
      return best;
    };
    for (auto& s : shares) {
      if (s.quota == 0) {
        Share* donor = steal_from_largest();
        if (donor) {
          donor->quota -= 1;
          s.quota += 1;
        }
      }
    }
  }
  std::map<std::string, std::size_t> quotas;
  for (const auto& s : shares) quotas[s.key] = s.quota;
  return quotas;
}

namespace {

constexpr std::size_t kClassSampleAttempts = 20'000;

/// Draws a payload in the given class, by direct enumeration when the domain
/// is finite and by rejection sampling otherwise.
Value sample_in_class(const DomainDescriptor& domain, const EquivalenceClassifier& classifier,
                      const std::string& class_key, Rng& rng) {
  if (domain.enumerable()) {
    std::vector<const Value*> members;
    for (const auto& v : domain.values) {
      TestCase probe = make_test_case(domain, v);
      if (classifier.classify_checked(probe) == class_key) members.push_back(&v);
    }
    if (members.empty())
      throw Error(ErrorKind::EmptyClass,
                  "no domain value maps to class '" + class_key + "'");
    return *members[rng.index(members.size())];
  }
  for (std::size_t attempt = 0; attempt < kClassSampleAttempts; ++attempt) {
    Value v = domain.sample(rng);
    TestCase probe = make_test_case(domain, v);
    if (classifier.classify_checked(probe) == class_key) return v;
  }
  throw Error(ErrorKind::EmptyClass,
              "sampler failed to produce a member of class '" + class_key + "'");
}

std::map<std::string, double> universe_weights(const EquivalenceClassifier& classifier) {
  if (!classifier.universe)
    throw Error(ErrorKind::MissingUniverse,
                "classifier '" + classifier.name + "' has no explicit universe");
  std::map<std::string, double> weights;
  for (const auto& key : *classifier.universe) weights[key] = classifier.weight_of(key);
  return weights;
}

}  // namespace

TestSet generate_stratified(const DomainDescriptor& domain,
                            const EquivalenceClassifier& classifier, std::size_t count,
                            std::uint64_t seed) {
  const auto weights = universe_weights(classifier);
  if (count < weights.size())
    throw Error(ErrorKind::Precondition, "stratified count must cover every class");
  const auto quotas = largest_remainder_quotas(weights, count, /*ensure_minimum=*/true);
  TestSet out;
  out.name = "stratified(" + domain.name + ")";
  std::set<std::string> seen;
  for (const auto& [key, quota] : quotas) {
    Rng rng(derive_seed(seed, "class-" + key));
    for (std::size_t i = 0; i < quota; ++i) {
      push_case(out, seen, domain, sample_in_class(domain, classifier, key, rng));
    }
  }
  return out;
}

TestSet generate_adaptive(const Context& context, const std::vector<SystemUnderTest*>& systems,
                          const Property& property, const EquivalenceClassifier& classifier,
                          std::size_t budget, std::uint64_t seed) {
  if (budget < 1) throw Error(ErrorKind::Precondition, "adaptive budget must be >= 1");
  const auto weights = universe_weights(classifier);
  const DomainDescriptor& domain = context.input_domain();

  // Classes in seeding order: descending weight, then key.
  std::vector<std::string> order;
  for (const auto& [key, w] : weights) order.push_back(key);
  std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    const double wa = weights.at(a);
    const double wb = weights.at(b);
    if (wa != wb) return wa > wb;
    return a < b;
  });

  TestSet out;
  out.name = "adaptive(" + domain.name + ")";
  std::set<std::string> seen;
  std::map<std::string, std::size_t> passes, fails, allocated;
  Rng rng(derive_seed(seed, "adaptive"));

  auto run_one = [&](const std::string& key) {
    push_case(out, seen, domain, sample_in_class(domain, classifier, key, rng));
    const TestCase& tc = out.cases.back();
    const std::uint64_t case_seed = derive_seed(seed, "case-" + tc.id);
    Run run = run_experiment(context, systems, tc, case_seed);
    const Verdict verdict = property.judge(tc, run);
    allocated[key] += 1;
    if (verdict.outcome == Outcome::Pass) passes[key] += 1;
    if (verdict.outcome == Outcome::Fail) fails[key] += 1;
  };

  // Seeding pass: one case per class while budget lasts.
  for (const auto& key : order) {
    if (out.cases.size() >= budget) break;
    run_one(key);
  }

  while (out.cases.size() < budget) {
    const std::size_t remaining = budget - out.cases.size();
    const std::size_t batch = std::min(remaining, weights.size());
    // Score each class by uncovered weight plus observed failure rate; when
    // every class is covered and nothing fails, fall back to plain weights.
    std::map<std::string, double> scores;
    double total_score = 0.0;
    for (const auto& [key, w] : weights) {
      double score = 0.0;
      if (allocated[key] == 0) score += w;
      const std::size_t judged = passes[key] + fails[key];
      if (judged > 0) score += static_cast<double>(fails[key]) / static_cast<double>(judged);
      scores[key] = score;
      total_score += score;
    }
    if (total_score <= 0.0) scores = weights;
    const auto quotas = largest_remainder_quotas(scores.empty() ? weights : scores, batch,
                                                 /*ensure_minimum=*/false);
    for (const auto& key : order) {
      const auto it = quotas.find(key);
      if (it == quotas.end()) continue;
      for (std::size_t i = 0; i < it->second && out.cases.size() < budget; ++i) run_one(key);
    }
  }
  return out;
}

TestSet generate_bounded_sequences(const std::vector<Value>& alphabet, std::size_t max_length,
                                   std::optional<std::size_t> count, std::uint64_t seed,
                                   std::size_t guard_limit) {
  if (max_length < 1) throw Error(ErrorKind::Precondition, "max_length must be >= 1");
  if (alphabet.empty()) throw Error(ErrorKind::Precondition, "alphabet must be nonempty");

  const std::size_t a = alphabet.size();
  // Total number of words of length 1..max_length, saturating far above the
  // guard so the comparison below stays exact.
  const std::uint64_t cap = std::uint64_t{1} << 62;
  std::vector<std::uint64_t> block(max_length + 1, 0);
  std::uint64_t total = 0;
  std::uint64_t size = 1;
  for (std::size_t l = 1; l <= max_length; ++l) {
    size = (size > cap / a) ? cap : size * a;
    block[l] = size;
    total = (total > cap - size) ? cap : total + size;
  }

  DomainDescriptor domain = DomainDescriptor::sequences("sequences", alphabet, max_length);
  TestSet out;
  std::set<std::string> seen;

  auto word_at = [&](std::size_t length, std::uint64_t index) {
    Value word = Value::array();
    std::vector<std::size_t> digits(length, 0);
    for (std::size_t i = length; i-- > 0;) {
      digits[i] = static_cast<std::size_t>(index % a);
      index /= a;
    }
    for (std::size_t d : digits) word.push_back(alphabet[d]);
    return word;
  };

  if (!count) {
    if (total > guard_limit) {
      throw Error(ErrorKind::ExplosionGuard,
                  "full enumeration would produce " + std::to_string(total) +
                      " sequences, above the guard of " + std::to_string(guard_limit));
    }
    out.name = "sequences(exhaustive)";
    for (std::size_t l = 1; l <= max_length; ++l) {
      for (std::uint64_t i = 0; i < block[l]; ++i)
        push_case(out, seen, domain, word_at(l, i));
    }
    return out;
  }

  if (*count < 1) throw Error(ErrorKind::Precondition, "count must be >= 1");
  out.name = "sequences(sample)";
  Rng rng(derive_seed(seed, "sequences"));
  for (std::size_t i = 0; i < *count; ++i) {
    std::uint64_t pick = rng.below(total);
    std::size_t length = max_length;
    for (std::size_t l = 1; l <= max_length; ++l) {
      if (pick < block[l]) {
        length = l;
        break;
      }
      pick -= block[l];
    }
    push_case(out, seen, domain, word_at(length, pick));
  }
  return out;
}

}  // namespace standin
