#include "standin/contexts.hpp"

#include <fstream>
#include <sstream>

#include "standin/generators.hpp"

namespace standin {

namespace {

class FunctionContext final : public Context {
 public:
  FunctionContext(DomainDescriptor domain, DomainDescriptor codomain)
      : name_("function(" + domain.name + "->" + codomain.name + ")"),
        input_(std::move(domain)),
        output_(std::move(codomain)),
        stimulus_alphabet_(input_.name),
        response_alphabet_(output_.name) {
    if (!input_.enumerable())
      throw Error(ErrorKind::InfiniteDomain,
                  "function context requires a finite-enumerable domain");
  }

  const std::string& name() const override { return name_; }
  std::size_t arity() const override { return 1; }
  const DomainDescriptor& input_domain() const override { return input_; }
  const DomainDescriptor& output_domain() const override { return output_; }
  bool memoryless() const override { return true; }
  const std::string& stimulus_alphabet() const override { return stimulus_alphabet_; }
  const std::string& response_alphabet() const override { return response_alphabet_; }

  Run apply(std::span<SystemUnderTest* const> systems, const TestCase& testcase,
            std::uint64_t seed) const override {
    Run run;
    run.seed = seed;
    run.steps.push_back({0, systems[0]->react(testcase.payload)});
    run.terminated = true;
    return run;
  }

 private:
  std::string name_;
  DomainDescriptor input_;
  DomainDescriptor output_;
  std::string stimulus_alphabet_;
  std::string response_alphabet_;
};

}  // namespace

std::unique_ptr<Context> make_function_context(DomainDescriptor domain,
                                               DomainDescriptor codomain) {
  return std::make_unique<FunctionContext>(std::move(domain), std::move(codomain));
}

std::unique_ptr<Context> make_dialogue_context(const std::vector<Value>& question_alphabet,
                                               std::size_t max_question_length) {
  if (max_question_length < 1)
    throw Error(ErrorKind::Precondition, "question length bound must be >= 1");
  // The question space is finite: enumerate it so exhaustive evaluation and
  // tabulation apply.
  TestSet questions = generate_bounded_sequences(question_alphabet, max_question_length,
                                                 std::nullopt, /*seed=*/0);
  std::vector<Value> values;
  values.reserve(questions.size());
  for (const auto& tc : questions.cases) values.push_back(tc.payload);
  DomainDescriptor domain = DomainDescriptor::finite("questions", std::move(values));
  domain.max_length = max_question_length;
  DomainDescriptor codomain = DomainDescriptor::structured(
      "answers", [](const Value&) { return true; }, nullptr);
  return std::make_unique<FunctionContext>(std::move(domain), std::move(codomain));
}

std::unique_ptr<SystemUnderTest> tabulate_system(const Context& context,
                                                 const SystemUnderTest& reference) {
  if (!context.input_domain().enumerable())
    throw Error(ErrorKind::InfiniteDomain, "tabulation requires a finite-enumerable domain");
  if (!context.memoryless())
    throw Error(ErrorKind::Precondition, "tabulation requires a memoryless context");
  auto table = std::make_shared<FunctionTable>();
  std::unique_ptr<SystemUnderTest> worker = reference.clone();
  std::vector<SystemUnderTest*> systems{worker.get()};
  for (const auto& v : context.input_domain().values) {
    TestCase tc = make_test_case(context.input_domain(), v);
    Run run = run_experiment(context, systems, tc, /*seed=*/0);
    if (run.steps.size() != 1)
      throw Error(ErrorKind::Precondition, "tabulation expects single-observation runs");
    table->set(v, run.steps[0].observation);
  }
  return std::make_unique<TableSystem>("tabulated(" + reference.name() + ")", table,
                                       reference.stimulus_alphabet(),
                                       reference.response_alphabet());
}

// ---------------------------------------------------------------------------
// Table files
// ---------------------------------------------------------------------------

namespace {

Value parse_token(const std::string& token) {
  if (!token.empty() &&
      (std::isdigit(static_cast<unsigned char>(token[0])) ||
       (token[0] == '-' && token.size() > 1 && std::isdigit(static_cast<unsigned char>(token[1]))))) {
    try {
      std::size_t pos = 0;
      const long long n = std::stoll(token, &pos);
      if (pos == token.size()) return Value(n);
    } catch (const std::exception&) {
      // fall through to string
    }
  }
  return Value(token);
}

Value parse_field(const std::string& field, TableMode mode) {
  std::istringstream is(field);
  std::vector<Value> tokens;
  std::string token;
  while (is >> token) tokens.push_back(parse_token(token));
  if (tokens.empty())
    throw Error(ErrorKind::MalformedSpec, "empty field in table line: '" + field + "'");
  if (mode == TableMode::Function && tokens.size() == 1) return tokens[0];
  Value seq = Value::array();
  for (auto& t : tokens) seq.push_back(std::move(t));
  return seq;
}

std::string format_field(const Value& v) {
  std::ostringstream os;
  auto emit = [&os](const Value& token) {
    if (token.is_string()) {
      os << token.get<std::string>();
    } else {
      os << token.dump();
    }
  };
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) os << ' ';
      emit(v[i]);
    }
  } else {
    emit(v);
  }
  return os.str();
}

}  // namespace

FunctionTable parse_table(const std::string& text, TableMode mode) {
  FunctionTable table;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(ErrorKind::MalformedSpec,
                  "table line " + std::to_string(lineno) + " has no tab separator");
    const Value input = parse_field(line.substr(0, tab), mode);
    const Value output = parse_field(line.substr(tab + 1),
                                     mode == TableMode::Dialogue ? TableMode::Dialogue
                                                                 : TableMode::Function);
    table.set(input, output);
  }
  return table;
}

FunctionTable load_table(const std::string& path, TableMode mode) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open table file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_table(buffer.str(), mode);
}

std::string format_table(const FunctionTable& table) {
  std::ostringstream os;
  for (const auto& [key, output] : table.entries) {
    os << format_field(Value::parse(key)) << '\t' << format_field(output) << '\n';
  }
  return os.str();
}

void save_table(const FunctionTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write table file: " + path);
  out << format_table(table);
}

}  // namespace standin
