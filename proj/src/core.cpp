#include "standin/core.hpp"

#include <algorithm>
#include <map>

namespace standin {

// ---------------------------------------------------------------------------
// DomainDescriptor
// ---------------------------------------------------------------------------

DomainDescriptor DomainDescriptor::finite(std::string name, std::vector<Value> values) {
  DomainDescriptor d;
  d.kind = DomainKind::FiniteEnumerable;
  d.name = std::move(name);
  d.values = std::move(values);
  if (d.values.empty())
    throw Error(ErrorKind::Precondition, "finite domain needs at least one value");
  return d;
}

DomainDescriptor DomainDescriptor::sequences(std::string name, std::vector<Value> alphabet,
                                             std::optional<std::size_t> max_length) {
  DomainDescriptor d;
  d.kind = DomainKind::SequenceOverAlphabet;
  d.name = std::move(name);
  d.alphabet = std::move(alphabet);
  d.max_length = max_length;
  if (d.alphabet.empty())
    throw Error(ErrorKind::Precondition, "sequence domain needs a nonempty alphabet");
  if (max_length && *max_length < 1)
    throw Error(ErrorKind::Precondition, "max_length must be >= 1");
  return d;
}

DomainDescriptor DomainDescriptor::structured(std::string name,
                                              std::function<bool(const Value&)> validator,
                                              std::function<Value(Rng&)> sampler) {
  DomainDescriptor d;
  d.kind = DomainKind::StructuredScenario;
  d.name = std::move(name);
  d.validator = std::move(validator);
  d.sampler = std::move(sampler);
  return d;
}

bool DomainDescriptor::contains(const Value& v) const {
  switch (kind) {
    case DomainKind::FiniteEnumerable:
      return std::find(values.begin(), values.end(), v) != values.end();
    case DomainKind::SequenceOverAlphabet: {
      if (!v.is_array() || v.empty()) return false;
      if (max_length && v.size() > *max_length) return false;
      for (const auto& sym : v) {
        if (std::find(alphabet.begin(), alphabet.end(), sym) == alphabet.end()) return false;
      }
      return true;
    }
    case DomainKind::StructuredScenario:
      return validator ? validator(v) : true;
  }
  return false;
}

Value DomainDescriptor::sample(Rng& rng) const {
  switch (kind) {
    case DomainKind::FiniteEnumerable:
      return values[rng.index(values.size())];
    case DomainKind::SequenceOverAlphabet: {
      // Uniform over all words of length 1..max_length (default bound 8 when
      // the domain is unbounded, so sampling stays total).
      const std::size_t bound = max_length.value_or(8);
      const std::size_t a = alphabet.size();
      // Count words per length; pick a length weighted by block size, capping
      // at 2^62 to avoid overflow for large alphabets.
      std::vector<std::uint64_t> block(bound + 1, 0);
      std::uint64_t total = 0;
      std::uint64_t size = 1;
      const std::uint64_t cap = std::uint64_t{1} << 62;
      for (std::size_t l = 1; l <= bound; ++l) {
        size = (size > cap / a) ? cap : size * a;
        block[l] = size;
        total = (total > cap - block[l]) ? cap : total + block[l];
      }
      std::uint64_t pick = rng.below(total);
      std::size_t length = bound;
      for (std::size_t l = 1; l <= bound; ++l) {
        if (pick < block[l]) {
          length = l;
          break;
        }
        pick -= block[l];
      }
      Value word = Value::array();
      for (std::size_t i = 0; i < length; ++i) word.push_back(alphabet[rng.index(a)]);
      return word;
    }
    case DomainKind::StructuredScenario:
      if (!sampler) throw Error(ErrorKind::Precondition, "structured domain has no sampler");
      return sampler(rng);
  }
  throw Error(ErrorKind::Precondition, "unknown domain kind");
}

namespace {
// Platform-independent digest for long ids (std::hash is not portable).
std::uint64_t fnv1a_digest(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace

TestCase make_test_case(const DomainDescriptor& domain, const Value& payload) {
  TestCase tc;
  tc.payload = payload;
  std::string key = value_key(payload);
  tc.id = key.size() <= 48 ? key : key.substr(0, 40) + "~" + std::to_string(fnv1a_digest(key) % 1000000);
  tc.length = (domain.kind == DomainKind::SequenceOverAlphabet && payload.is_array())
                  ? payload.size()
                  : 1;
  return tc;
}

// ---------------------------------------------------------------------------
// Run serialization
// ---------------------------------------------------------------------------

Value run_to_json(const Run& run) {
  Value steps = Value::array();
  for (const auto& s : run.steps) steps.push_back(Value::array({s.tick, s.observation}));
  return Value{{"steps", steps}, {"terminated", run.terminated}, {"seed", run.seed}};
}

Run run_from_json(const Value& v) {
  Run run;
  for (const auto& s : v.at("steps")) {
    run.steps.push_back({s.at(0).get<std::uint64_t>(), s.at(1)});
  }
  run.terminated = v.at("terminated").get<bool>();
  run.seed = v.at("seed").get<std::uint64_t>();
  return run;
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Pass: return "pass";
    case Outcome::Fail: return "fail";
    case Outcome::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Outcome outcome_from_string(std::string_view s) {
  if (s == "pass") return Outcome::Pass;
  if (s == "fail") return Outcome::Fail;
  if (s == "inconclusive") return Outcome::Inconclusive;
  throw Error(ErrorKind::ConfigError, "unknown outcome: " + std::string(s));
}

// ---------------------------------------------------------------------------
// RecordedVerdictsProperty
// ---------------------------------------------------------------------------

std::string RecordedVerdictsProperty::key(const Value& payload,
                                          const std::vector<Value>& observations) {
  Value obs = Value::array();
  for (const auto& o : observations) obs.push_back(o);
  return value_key(payload) + "->" + value_key(obs);
}

void RecordedVerdictsProperty::record(const Value& payload, const std::vector<Value>& observations,
                                      Outcome outcome) {
  table_[key(payload, observations)] = outcome;
}

Verdict RecordedVerdictsProperty::judge(const TestCase& testcase, const Run& run) const {
  auto it = table_.find(key(testcase.payload, observations_of(run)));
  if (it == table_.end()) return inconclusive_verdict("no recorded verdict for this pair");
  return {it->second, "recorded verdict"};
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

std::vector<Value> observations_of(const Run& run) {
  std::vector<Value> out;
  out.reserve(run.steps.size());
  for (const auto& s : run.steps) out.push_back(s.observation);
  return out;
}

Run run_experiment(const Context& context, std::span<SystemUnderTest* const> systems,
                   const TestCase& testcase, std::uint64_t seed) {
  if (systems.size() != context.arity()) {
    throw Error(ErrorKind::ArityMismatch,
                context.name() + " expects " + std::to_string(context.arity()) +
                    " system(s), got " + std::to_string(systems.size()));
  }
  for (const auto* sys : systems) {
    if (sys->stimulus_alphabet() != context.stimulus_alphabet() ||
        sys->response_alphabet() != context.response_alphabet()) {
      throw Error(ErrorKind::AlphabetMismatch,
                  "system '" + sys->name() + "' cannot be embedded in context '" + context.name() +
                      "'");
    }
  }
  if (!context.input_domain().contains(testcase.payload)) {
    throw Error(ErrorKind::DomainViolation,
                "payload of test case '" + testcase.id + "' is outside " +
                    context.input_domain().name);
  }
  for (std::size_t i = 0; i < systems.size(); ++i) {
    systems[i]->reset(derive_seed(seed, "system", i));
  }
  Run run = context.apply(systems, testcase, seed);
  run.seed = seed;
  for (std::size_t i = 1; i < run.steps.size(); ++i) {
    if (run.steps[i].tick <= run.steps[i - 1].tick)
      throw Error(ErrorKind::Precondition, "context produced non-increasing ticks");
  }
  return run;
}

Run run_experiment(const Context& context, const std::vector<SystemUnderTest*>& systems,
                   const TestCase& testcase, std::uint64_t seed) {
  return run_experiment(context, std::span<SystemUnderTest* const>(systems.data(), systems.size()),
                        testcase, seed);
}

Verdict judge(const Property& property, const TestCase& testcase, const Run& run) {
  return property.judge(testcase, run);
}

}  // namespace standin
