#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "standin/common.hpp"

namespace standin {

// ---------------------------------------------------------------------------
// Domains
// ---------------------------------------------------------------------------

enum class DomainKind { FiniteEnumerable, SequenceOverAlphabet, StructuredScenario };

/// Describes an input or output domain. Finite-enumerable domains expose a
/// total enumeration; sequence domains are words over an alphabet, optionally
/// length-bounded; structured domains supply their own membership test and
/// sampler.
struct DomainDescriptor {
  DomainKind kind = DomainKind::FiniteEnumerable;
  std::string name;
  std::vector<Value> values;    // finite-enumerable: the total enumeration
  std::vector<Value> alphabet;  // sequence-over-alphabet: the symbols
  std::optional<std::size_t> max_length;
  std::function<bool(const Value&)> validator;  // structured-scenario
  std::function<Value(Rng&)> sampler;           // structured-scenario

  static DomainDescriptor finite(std::string name, std::vector<Value> values);
  static DomainDescriptor sequences(std::string name, std::vector<Value> alphabet,
                                    std::optional<std::size_t> max_length);
  static DomainDescriptor structured(std::string name, std::function<bool(const Value&)> validator,
                                     std::function<Value(Rng&)> sampler);

  bool contains(const Value& v) const;
  bool enumerable() const { return kind == DomainKind::FiniteEnumerable; }
  /// Uniform draw from the domain; sequences draw uniformly over all words of
  /// length 1..max_length.
  Value sample(Rng& rng) const;
};

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct TestCase {
  std::string id;
  Value payload;
  std::size_t length = 1;  // input symbols; 1 for scalar payloads
};

/// Builds a test case whose id is derived from the payload and whose length
/// follows the domain kind (sequence payloads count their symbols).
TestCase make_test_case(const DomainDescriptor& domain, const Value& payload);

struct Step {
  std::uint64_t tick = 0;
  Value observation;

  bool operator==(const Step&) const = default;
};

struct Run {
  std::vector<Step> steps;
  bool terminated = true;
  std::uint64_t seed = 0;

  bool operator==(const Run&) const = default;
};

Value run_to_json(const Run& run);
Run run_from_json(const Value& v);

enum class Outcome { Pass, Fail, Inconclusive };

std::string_view to_string(Outcome outcome);
Outcome outcome_from_string(std::string_view s);

struct Verdict {
  Outcome outcome = Outcome::Inconclusive;
  std::string evidence;  // empty when there is none

  bool operator==(const Verdict&) const = default;
};

inline Verdict pass_verdict(std::string evidence = "") { return {Outcome::Pass, std::move(evidence)}; }
inline Verdict fail_verdict(std::string evidence = "") { return {Outcome::Fail, std::move(evidence)}; }
inline Verdict inconclusive_verdict(std::string evidence = "") {
  return {Outcome::Inconclusive, std::move(evidence)};
}

// ---------------------------------------------------------------------------
// Systems, contexts, properties
// ---------------------------------------------------------------------------

/// A black box driven through reset/react. Determinism contract: identical
/// (seed, stimulus sequence) must yield an identical response sequence.
class SystemUnderTest {
 public:
  virtual ~SystemUnderTest() = default;
  virtual const std::string& name() const = 0;
  virtual const std::string& stimulus_alphabet() const = 0;
  virtual const std::string& response_alphabet() const = 0;
  virtual void reset(std::uint64_t seed) = 0;
  virtual Value react(const Value& stimulus) = 0;
  /// Fresh instance with identical behavior; used to parallelize experiments.
  virtual std::unique_ptr<SystemUnderTest> clone() const = 0;
};

/// System defined by a react function. The function must be stateless or
/// reset via the seed hook.
class LambdaSystem final : public SystemUnderTest {
 public:
  using React = std::function<Value(const Value&)>;

  LambdaSystem(std::string name, std::string stimulus_alphabet, std::string response_alphabet,
               React react)
      : name_(std::move(name)),
        stimulus_alphabet_(std::move(stimulus_alphabet)),
        response_alphabet_(std::move(response_alphabet)),
        react_(std::move(react)) {}

  const std::string& name() const override { return name_; }
  const std::string& stimulus_alphabet() const override { return stimulus_alphabet_; }
  const std::string& response_alphabet() const override { return response_alphabet_; }
  void reset(std::uint64_t) override {}
  Value react(const Value& stimulus) override { return react_(stimulus); }
  std::unique_ptr<SystemUnderTest> clone() const override {
    return std::make_unique<LambdaSystem>(*this);
  }

 private:
  std::string name_;
  std::string stimulus_alphabet_;
  std::string response_alphabet_;
  React react_;
};

/// The experimental embedding C in y = C[S](x). Drives a tuple of systems on
/// one test case and records the observed run.
class Context {
 public:
  virtual ~Context() = default;
  virtual const std::string& name() const = 0;
  virtual std::size_t arity() const = 0;
  virtual const DomainDescriptor& input_domain() const = 0;
  virtual const DomainDescriptor& output_domain() const = 0;
  /// True only if the run depends solely on the current payload; gates
  /// conclusive exhaustive evaluation downstream.
  virtual bool memoryless() const = 0;
  virtual const std::string& stimulus_alphabet() const = 0;
  virtual const std::string& response_alphabet() const = 0;
  /// Drives already-reset systems. Called through run_experiment, which
  /// validates preconditions and performs the resets.
  virtual Run apply(std::span<SystemUnderTest* const> systems, const TestCase& testcase,
                    std::uint64_t seed) const = 0;
};

enum class OracleKind { AutomatedMonitor, RecordedHumanVerdicts };

/// Success predicate P over (test case, run). Total: every pair yields a
/// verdict (Inconclusive permitted), deterministically.
class Property {
 public:
  virtual ~Property() = default;
  virtual const std::string& name() const = 0;
  virtual OracleKind oracle_kind() const = 0;
  virtual Verdict judge(const TestCase& testcase, const Run& run) const = 0;
};

class LambdaProperty final : public Property {
 public:
  using Judge = std::function<Verdict(const TestCase&, const Run&)>;

  LambdaProperty(std::string name, Judge judge)
      : name_(std::move(name)), judge_(std::move(judge)) {}

  const std::string& name() const override { return name_; }
  OracleKind oracle_kind() const override { return OracleKind::AutomatedMonitor; }
  Verdict judge(const TestCase& testcase, const Run& run) const override {
    return judge_(testcase, run);
  }

 private:
  std::string name_;
  Judge judge_;
};

/// Oracle backed by a table of pre-recorded judgments keyed on the test case
/// payload and the run's observations. Pairs without a record judge
/// Inconclusive.
class RecordedVerdictsProperty final : public Property {
 public:
  explicit RecordedVerdictsProperty(std::string name) : name_(std::move(name)) {}

  void record(const Value& payload, const std::vector<Value>& observations, Outcome outcome);

  const std::string& name() const override { return name_; }
  OracleKind oracle_kind() const override { return OracleKind::RecordedHumanVerdicts; }
  Verdict judge(const TestCase& testcase, const Run& run) const override;

 private:
  static std::string key(const Value& payload, const std::vector<Value>& observations);
  std::string name_;
  std::map<std::string, Outcome> table_;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Runs one experiment y = C[S1..Sn](x). Validates arity, alphabets and the
/// payload's domain membership, resets every system with a seed derived from
/// (seed, index), then applies the context. Deterministic for fixed arguments.
Run run_experiment(const Context& context, std::span<SystemUnderTest* const> systems,
                   const TestCase& testcase, std::uint64_t seed);

Run run_experiment(const Context& context, const std::vector<SystemUnderTest*>& systems,
                   const TestCase& testcase, std::uint64_t seed);

/// Evaluates P(t, r). Repeated calls agree.
Verdict judge(const Property& property, const TestCase& testcase, const Run& run);

std::vector<Value> observations_of(const Run& run);

}  // namespace standin
