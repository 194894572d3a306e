// Shared fixtures for the test suites: tiny domains, table systems and
// properties over them.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "standin/contexts.hpp"
#include "standin/core.hpp"

namespace fixtures {

using namespace standin;

inline DomainDescriptor bitpair_domain() {
  return DomainDescriptor::finite(
      "bitpairs", {Value::array({0, 0}), Value::array({0, 1}), Value::array({1, 0}),
                   Value::array({1, 1})});
}

inline DomainDescriptor bit_domain() { return DomainDescriptor::finite("bits", {0, 1}); }

inline DomainDescriptor int_domain(int lo, int hi, std::string name = "ints") {
  std::vector<Value> values;
  for (int v = lo; v <= hi; ++v) values.push_back(v);
  return DomainDescriptor::finite(std::move(name), std::move(values));
}

inline DomainDescriptor any_domain(std::string name = "any") {
  return DomainDescriptor::structured(std::move(name), [](const Value&) { return true; },
                                      nullptr);
}

inline std::shared_ptr<FunctionTable> xor_table() {
  auto table = std::make_shared<FunctionTable>();
  for (int a = 0; a <= 1; ++a) {
    for (int b = 0; b <= 1; ++b) table->set(Value::array({a, b}), Value(a ^ b));
  }
  return table;
}

/// XOR except on (1,1), where it answers 1 instead of 0.
inline std::shared_ptr<FunctionTable> xor_wrong_on_11() {
  auto table = xor_table();
  table->set(Value::array({1, 1}), Value(1));
  return table;
}

inline std::unique_ptr<SystemUnderTest> table_system(const std::string& name,
                                                     std::shared_ptr<const FunctionTable> table,
                                                     const Context& context) {
  return std::make_unique<TableSystem>(name, std::move(table), context.stimulus_alphabet(),
                                       context.response_alphabet());
}

/// Pass iff the run's single observation equals the reference table's output.
inline std::unique_ptr<Property> matches_table_property(
    std::shared_ptr<const FunctionTable> reference) {
  return std::make_unique<LambdaProperty>(
      "matches-table", [reference](const TestCase& tc, const Run& run) {
        if (run.steps.size() != 1) return fail_verdict("expected one observation");
        const Value expected = reference->lookup(tc.payload);
        return run.steps[0].observation == expected
                   ? pass_verdict()
                   : fail_verdict("expected " + value_key(expected));
      });
}

inline std::unique_ptr<Property> equals_input_property() {
  return std::make_unique<LambdaProperty>("equals-input",
                                          [](const TestCase& tc, const Run& run) {
                                            if (run.steps.size() != 1)
                                              return fail_verdict("expected one observation");
                                            return run.steps[0].observation == tc.payload
                                                       ? pass_verdict()
                                                       : fail_verdict();
                                          });
}

/// Uniformly random lookup table over the given domain/codomain values.
inline std::shared_ptr<FunctionTable> random_table(const std::vector<Value>& domain_values,
                                                   const std::vector<Value>& codomain_values,
                                                   Rng& rng) {
  auto table = std::make_shared<FunctionTable>();
  for (const auto& v : domain_values) {
    table->set(v, codomain_values[rng.index(codomain_values.size())]);
  }
  return table;
}

}  // namespace fixtures
