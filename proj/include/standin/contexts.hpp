#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "standin/core.hpp"

namespace standin {

/// Token observed when a lookup-table system has no entry for a stimulus.
/// Keeps table-backed systems total; properties are free to judge it a Fail.
inline const Value kNoAnswer = Value("#no-answer");

/// Total map from finite input values to output values.
struct FunctionTable {
  std::map<std::string, Value> entries;  // value_key(input) -> output

  void set(const Value& input, const Value& output) { entries[value_key(input)] = output; }
  Value lookup(const Value& input) const {
    auto it = entries.find(value_key(input));
    return it == entries.end() ? kNoAnswer : it->second;
  }
  std::size_t size() const { return entries.size(); }
  bool operator==(const FunctionTable&) const = default;
};

/// Finite question -> answer correspondence; questions are token sequences of
/// bounded length, answers are token sequences.
struct DialogueTable {
  FunctionTable pairs;
  std::size_t max_question_length = 1;
};

/// Pure lookup-table system. Its behavior is the stored finite relation.
class TableSystem final : public SystemUnderTest {
 public:
  TableSystem(std::string name, std::shared_ptr<const FunctionTable> table,
              std::string stimulus_alphabet, std::string response_alphabet)
      : name_(std::move(name)),
        table_(std::move(table)),
        stimulus_alphabet_(std::move(stimulus_alphabet)),
        response_alphabet_(std::move(response_alphabet)) {}

  const std::string& name() const override { return name_; }
  const std::string& stimulus_alphabet() const override { return stimulus_alphabet_; }
  const std::string& response_alphabet() const override { return response_alphabet_; }
  void reset(std::uint64_t) override {}
  Value react(const Value& stimulus) override { return table_->lookup(stimulus); }
  std::unique_ptr<SystemUnderTest> clone() const override {
    return std::make_unique<TableSystem>(*this);
  }
  const FunctionTable& table() const { return *table_; }

 private:
  std::string name_;
  std::shared_ptr<const FunctionTable> table_;
  std::string stimulus_alphabet_;
  std::string response_alphabet_;
};

/// Memoryless arity-1 context over a finite input domain: the payload is fed
/// as a single stimulus and the response recorded as one observation at tick 0.
std::unique_ptr<Context> make_function_context(DomainDescriptor domain,
                                               DomainDescriptor codomain);

/// Finite Q/A context: one question per test case, one answer per run. The
/// input domain is the full enumeration of token sequences of length 1..L.
std::unique_ptr<Context> make_dialogue_context(const std::vector<Value>& question_alphabet,
                                               std::size_t max_question_length);

/// Runs the reference on every domain value and returns a pure lookup-table
/// system with identical observable behavior. Requires a finite-enumerable,
/// memoryless context. Uses a fixed internal seed; memoryless deterministic
/// systems make the choice immaterial.
std::unique_ptr<SystemUnderTest> tabulate_system(const Context& context,
                                                 const SystemUnderTest& reference);

// ---------------------------------------------------------------------------
// Table file format: one line per entry, input TAB output, tokens separated
// by spaces. Lines starting with '#' are comments. A single token parses as
// a scalar in function mode and as a one-token sequence in dialogue mode.
// ---------------------------------------------------------------------------

enum class TableMode { Function, Dialogue };

FunctionTable load_table(const std::string& path, TableMode mode);
FunctionTable parse_table(const std::string& text, TableMode mode);
void save_table(const FunctionTable& table, const std::string& path);
std::string format_table(const FunctionTable& table);

}  // namespace standin
