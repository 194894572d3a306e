#include "standin/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace standin::campaign {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

CampaignConfig CampaignConfig::from_json(Value v, std::string base_dir) {
  if (!v.is_object()) throw Error(ErrorKind::ConfigError, "config must be a JSON object");
  if (!v.contains("schema_version") || v["schema_version"] != 1)
    throw Error(ErrorKind::ConfigError, "config requires schema_version 1");
  if (!v.contains("seed") || !v["seed"].is_number_unsigned())
    throw Error(ErrorKind::ConfigError, "config requires an explicit unsigned seed");
  CampaignConfig config;
  config.raw = std::move(v);
  config.base_dir = std::move(base_dir);
  return config;
}

CampaignConfig CampaignConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config file: " + path);
  Value v;
  try {
    in >> v;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(std::move(v), fs::path(path).parent_path().string());
}

std::uint64_t CampaignConfig::seed() const { return raw.at("seed").get<std::uint64_t>(); }

std::size_t CampaignConfig::jobs() const {
  return raw.contains("jobs") ? raw.at("jobs").get<std::size_t>() : 1;
}

void CampaignConfig::override_seed(std::uint64_t seed) { raw["seed"] = seed; }
void CampaignConfig::override_jobs(std::size_t jobs) { raw["jobs"] = jobs; }

// ---------------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------------

std::vector<SystemUnderTest*> ResolvedCampaign::tuple1_ptrs() const {
  std::vector<SystemUnderTest*> out;
  for (const auto& s : tuple1) out.push_back(s.get());
  return out;
}

std::vector<SystemUnderTest*> ResolvedCampaign::tuple2_ptrs() const {
  std::vector<SystemUnderTest*> out;
  for (const auto& s : tuple2) out.push_back(s.get());
  return out;
}

namespace {

struct ResolutionState {
  std::shared_ptr<const traffic::RoadNetwork> network;  // set for traffic contexts
  std::string context_kind;
};

std::string resolve_path(const CampaignConfig& config, const std::string& file) {
  fs::path p(file);
  if (p.is_absolute() || config.base_dir.empty()) return file;
  return (fs::path(config.base_dir) / p).string();
}

const Value& require_field(const Value& v, const char* field, const char* where) {
  if (!v.contains(field))
    throw Error(ErrorKind::ConfigError,
                std::string(where) + " requires field '" + field + "'");
  return v.at(field);
}

DomainDescriptor domain_from_config(const Value& v) {
  if (v.contains("builtin")) {
    const std::string name = v.at("builtin").get<std::string>();
    if (name == "bits") return DomainDescriptor::finite("bits", {Value(0), Value(1)});
    if (name == "bitpairs") {
      return DomainDescriptor::finite(
          "bitpairs", {Value::array({0, 0}), Value::array({0, 1}), Value::array({1, 0}),
                       Value::array({1, 1})});
    }
    throw Error(ErrorKind::ConfigError, "unknown builtin domain: " + name);
  }
  if (v.contains("values")) {
    std::vector<Value> values = v.at("values").get<std::vector<Value>>();
    const std::string name = v.contains("name") ? v.at("name").get<std::string>() : "domain";
    return DomainDescriptor::finite(name, std::move(values));
  }
  throw Error(ErrorKind::ConfigError, "domain needs 'values' or 'builtin'");
}

DomainDescriptor any_codomain() {
  return DomainDescriptor::structured("any", [](const Value&) { return true; }, nullptr);
}

std::unique_ptr<Context> context_from_config(const CampaignConfig& config,
                                             ResolutionState& state) {
  const Value& spec = require_field(config.raw, "context", "config");
  const std::string kind = require_field(spec, "kind", "context").get<std::string>();
  state.context_kind = kind;
  if (kind == "function") {
    DomainDescriptor domain = domain_from_config(require_field(spec, "domain", "function context"));
    DomainDescriptor codomain =
        spec.contains("codomain") ? domain_from_config(spec.at("codomain")) : any_codomain();
    return make_function_context(std::move(domain), std::move(codomain));
  }
  if (kind == "dialogue") {
    const auto alphabet =
        require_field(spec, "alphabet", "dialogue context").get<std::vector<Value>>();
    const auto max_length =
        require_field(spec, "max_length", "dialogue context").get<std::size_t>();
    return make_dialogue_context(alphabet, max_length);
  }
  if (kind == "traffic") {
    const std::string file =
        require_field(spec, "network", "traffic context").get<std::string>();
    auto network = std::make_shared<traffic::RoadNetwork>(
        traffic::load_network(resolve_path(config, file)));
    state.network = network;
    const auto n = require_field(spec, "n", "traffic context").get<std::size_t>();
    return traffic::make_traffic_context(network, n, network->v_max, network->a_max,
                                         network->rho);
  }
  if (kind == "crossing") {
    const auto fixture = traffic::crossing_fixture();
    state.network = fixture.network;
    const auto n = require_field(spec, "n", "crossing context").get<std::size_t>();
    return traffic::make_crossing_context(fixture, n);
  }
  throw Error(ErrorKind::ConfigError, "unknown context kind: " + kind);
}

std::unique_ptr<SystemUnderTest> system_from_config(const CampaignConfig& config,
                                                    const Value& spec, const Context& context,
                                                    const ResolutionState& state,
                                                    std::size_t index) {
  const std::string kind = require_field(spec, "kind", "system").get<std::string>();
  const std::string default_name = "system-" + std::to_string(index);
  const std::string name =
      spec.contains("name") ? spec.at("name").get<std::string>() : default_name;
  if (kind == "table" || kind == "table-inline") {
    FunctionTable table;
    const TableMode mode =
        state.context_kind == "dialogue" ? TableMode::Dialogue : TableMode::Function;
    if (kind == "table") {
      const std::string file = require_field(spec, "file", "table system").get<std::string>();
      table = load_table(resolve_path(config, file), mode);
    } else {
      for (const auto& entry : require_field(spec, "entries", "table system")) {
        table.set(entry.at(0), entry.at(1));
      }
    }
    return std::make_unique<TableSystem>(name, std::make_shared<FunctionTable>(std::move(table)),
                                         context.stimulus_alphabet(),
                                         context.response_alphabet());
  }
  if (kind == "identity") {
    return std::make_unique<LambdaSystem>(name, context.stimulus_alphabet(),
                                          context.response_alphabet(),
                                          [](const Value& v) { return v; });
  }
  if (kind == "policy") {
    const std::string policy =
        require_field(spec, "name", "policy system").get<std::string>();
    const auto policies = traffic::builtin_policies();
    if (policy == "cautious") return traffic::make_policy_system(policies.cautious);
    if (policy == "greedy") return traffic::make_policy_system(policies.greedy);
    throw Error(ErrorKind::ConfigError, "unknown policy: " + policy);
  }
  throw Error(ErrorKind::ConfigError, "unknown system kind: " + kind);
}

std::vector<std::unique_ptr<SystemUnderTest>> tuple_from_config(const CampaignConfig& config,
                                                                const Value& list,
                                                                const Context& context,
                                                                const ResolutionState& state) {
  if (!list.is_array())
    throw Error(ErrorKind::ConfigError, "system tuple must be a JSON array");
  std::vector<std::unique_ptr<SystemUnderTest>> tuple;
  for (std::size_t i = 0; i < list.size(); ++i) {
    tuple.push_back(system_from_config(config, list[i], context, state, i));
  }
  if (tuple.size() != context.arity())
    throw Error(ErrorKind::ConfigError,
                "system tuple size " + std::to_string(tuple.size()) +
                    " does not match context arity " + std::to_string(context.arity()));
  return tuple;
}

std::unique_ptr<Property> property_from_config(const CampaignConfig& config, const Value& spec,
                                               const ResolutionState& state) {
  const std::string kind = require_field(spec, "kind", "property").get<std::string>();
  if (kind == "equals-input") {
    return std::make_unique<LambdaProperty>(
        "equals-input", [](const TestCase& tc, const Run& run) {
          if (run.steps.size() != 1) return fail_verdict("expected a single observation");
          return run.steps[0].observation == tc.payload
                     ? pass_verdict()
                     : fail_verdict("observed " + value_key(run.steps[0].observation));
        });
  }
  if (kind == "matches-table") {
    FunctionTable table;
    const TableMode mode =
        state.context_kind == "dialogue" ? TableMode::Dialogue : TableMode::Function;
    if (spec.contains("file")) {
      table = load_table(resolve_path(config, spec.at("file").get<std::string>()), mode);
    } else {
      for (const auto& entry : require_field(spec, "entries", "matches-table property")) {
        table.set(entry.at(0), entry.at(1));
      }
    }
    auto shared = std::make_shared<FunctionTable>(std::move(table));
    return std::make_unique<LambdaProperty>(
        "matches-table", [shared](const TestCase& tc, const Run& run) {
          if (run.steps.size() != 1) return fail_verdict("expected a single observation");
          const Value expected = shared->lookup(tc.payload);
          return run.steps[0].observation == expected
                     ? pass_verdict()
                     : fail_verdict("expected " + value_key(expected) + ", observed " +
                                    value_key(run.steps[0].observation));
        });
  }
  if (kind == "collision-free") return traffic::collision_free_property();
  if (kind == "no-congestion") {
    return traffic::no_congestion_property(
        require_field(spec, "deadline", "no-congestion property").get<std::uint64_t>());
  }
  throw Error(ErrorKind::ConfigError, "unknown property kind: " + kind);
}

std::shared_ptr<EquivalenceClassifier> classifier_from_config(const Value& spec,
                                                              const ResolutionState& state) {
  const std::string kind = require_field(spec, "kind", "classifier").get<std::string>();
  auto classifier = std::make_shared<EquivalenceClassifier>();
  if (kind == "parity") {
    classifier->name = "parity";
    classifier->universe = std::set<std::string>{"even", "odd"};
    classifier->classify = [](const TestCase& tc) {
      if (!tc.payload.is_number_integer())
        throw Error(ErrorKind::UnclassifiableCase, "parity needs integer payloads");
      return tc.payload.get<long long>() % 2 == 0 ? "even" : "odd";
    };
  } else if (kind == "mod") {
    const auto mod = require_field(spec, "mod", "mod classifier").get<long long>();
    if (mod < 1) throw Error(ErrorKind::ConfigError, "mod must be >= 1");
    classifier->name = "mod" + std::to_string(mod);
    std::set<std::string> universe;
    for (long long i = 0; i < mod; ++i) universe.insert("m" + std::to_string(i));
    classifier->universe = std::move(universe);
    classifier->classify = [mod](const TestCase& tc) {
      if (!tc.payload.is_number_integer())
        throw Error(ErrorKind::UnclassifiableCase, "mod needs integer payloads");
      long long v = tc.payload.get<long long>() % mod;
      if (v < 0) v += mod;
      return "m" + std::to_string(v);
    };
  } else if (kind == "first-symbol") {
    classifier->name = "first-symbol";
    if (spec.contains("alphabet")) {
      std::set<std::string> universe;
      for (const auto& sym : spec.at("alphabet")) universe.insert(value_key(sym));
      classifier->universe = std::move(universe);
    }
    classifier->classify = [](const TestCase& tc) {
      if (!tc.payload.is_array() || tc.payload.empty())
        throw Error(ErrorKind::UnclassifiableCase, "first-symbol needs sequence payloads");
      return value_key(tc.payload[0]);
    };
  } else if (kind == "single-class") {
    classifier->name = "single-class";
    classifier->universe = std::set<std::string>{"all"};
    classifier->classify = [](const TestCase&) { return std::string("all"); };
  } else if (kind == "scenario-bands") {
    if (!state.network)
      throw Error(ErrorKind::ConfigError, "scenario-bands requires a traffic context");
    traffic::ScenarioBands bands;
    if (spec.contains("density_cuts"))
      bands.density_cuts = spec.at("density_cuts").get<std::vector<int>>();
    if (spec.contains("length_cuts"))
      bands.length_cuts = spec.at("length_cuts").get<std::vector<double>>();
    *classifier = traffic::scenario_classifier(state.network, bands);
  } else {
    throw Error(ErrorKind::ConfigError, "unknown classifier kind: " + kind);
  }
  if (spec.contains("weights")) {
    for (const auto& [key, w] : spec.at("weights").items()) {
      classifier->weights[key] = w.get<double>();
    }
  }
  return classifier;
}

}  // namespace

ResolvedCampaign resolve_campaign(const CampaignConfig& config) {
  ResolvedCampaign out;
  ResolutionState state;
  out.context = context_from_config(config, state);
  out.tuple1 = tuple_from_config(config, require_field(config.raw, "systems", "config"),
                                 *out.context, state);
  if (config.raw.contains("systems2") && !config.raw.at("systems2").is_null()) {
    out.tuple2 = tuple_from_config(config, config.raw.at("systems2"), *out.context, state);
  }
  out.property =
      property_from_config(config, require_field(config.raw, "property", "config"), state);
  if (config.raw.contains("classifier") && !config.raw.at("classifier").is_null()) {
    out.classifier = classifier_from_config(config.raw.at("classifier"), state);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

namespace {

TestSet generate_testset(const CampaignConfig& config, const ResolvedCampaign& campaign) {
  const Value& spec = require_field(config.raw, "generator", "config");
  const Strategy strategy =
      strategy_from_string(require_field(spec, "strategy", "generator").get<std::string>());
  const std::uint64_t gen_seed = derive_seed(config.seed(), "generator");
  const DomainDescriptor& domain = campaign.context->input_domain();
  switch (strategy) {
    case Strategy::Exhaustive:
      return generate_exhaustive(domain);
    case Strategy::Random:
      return generate_random(domain, require_field(spec, "count", "generator").get<std::size_t>(),
                             gen_seed);
    case Strategy::Stratified:
      if (!campaign.classifier)
        throw Error(ErrorKind::ConfigError, "stratified generation requires a classifier");
      return generate_stratified(domain, *campaign.classifier,
                                 require_field(spec, "count", "generator").get<std::size_t>(),
                                 gen_seed);
    case Strategy::Adaptive:
      if (!campaign.classifier)
        throw Error(ErrorKind::ConfigError, "adaptive generation requires a classifier");
      return generate_adaptive(*campaign.context, campaign.tuple1_ptrs(), *campaign.property,
                               *campaign.classifier,
                               require_field(spec, "budget", "generator").get<std::size_t>(),
                               gen_seed);
    case Strategy::BoundedSequence: {
      const auto alphabet =
          require_field(spec, "alphabet", "generator").get<std::vector<Value>>();
      const auto max_length =
          require_field(spec, "max_length", "generator").get<std::size_t>();
      std::optional<std::size_t> count;
      if (spec.contains("count")) count = spec.at("count").get<std::size_t>();
      return generate_bounded_sequences(alphabet, max_length, count, gen_seed);
    }
  }
  throw Error(ErrorKind::ConfigError, "unknown generator strategy");
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

void parallel_for(std::size_t jobs, std::size_t n, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, jobs);
  if (n > 0) jobs = std::min(jobs, n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) break;
          fn(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct CaseResult {
  std::string class_key;
  Verdict verdict1;
  Verdict verdict2;
  std::uint64_t ticks1 = 0;
  std::uint64_t ticks2 = 0;
};

std::uint64_t last_tick(const Run& run) {
  return run.steps.empty() ? 0 : run.steps.back().tick;
}

Value verdict_to_json(const Verdict& v) {
  return Value{{"outcome", std::string(to_string(v.outcome))},
               {"evidence", v.evidence.empty() ? Value(nullptr) : Value(v.evidence)}};
}

}  // namespace

Value score_to_json(const ScoreRecord& s) {
  auto opt = [](const std::optional<double>& v) { return v ? Value(*v) : Value(nullptr); };
  return Value{{"point_estimate", opt(s.point_estimate)},
               {"ci_low", opt(s.ci_low)},
               {"ci_high", opt(s.ci_high)},
               {"confidence_level", s.confidence_level},
               {"n_pass", s.n_pass},
               {"n_fail", s.n_fail},
               {"n_inconclusive", s.n_inconclusive}};
}

namespace {

Value rows_to_json(const std::vector<CasePairVerdicts>& rows) {
  Value out = Value::array();
  for (const auto& row : rows) {
    out.push_back(Value{{"id", row.testcase.id},
                        {"candidate", verdict_to_json(row.candidate)},
                        {"incumbent", verdict_to_json(row.incumbent)}});
  }
  return out;
}

}  // namespace

Value replacement_to_json(const ReplacementReport& report) {
  return Value{{"holds", report.holds},
               {"conclusive", report.conclusive},
               {"cases_evaluated", report.cases_evaluated},
               {"violations", rows_to_json(report.violations)},
               {"indeterminate", rows_to_json(report.indeterminate)}};
}

Value equivalence_to_json(const EquivalenceReport& report) {
  return Value{{"equivalent", report.equivalent},
               {"conclusive", report.conclusive},
               {"cases_evaluated", report.cases_evaluated},
               {"distinguishing_cases", rows_to_json(report.distinguishing_cases)}};
}

Value audit_to_json(const AuditReport& report) {
  return Value{{"requirement", std::string(to_string(report.requirement))},
               {"trials", report.trials},
               {"passed", report.passed},
               {"violations", report.violations}};
}

Value anomalies_to_json(const AnomalyReport& report) {
  Value anomalies = Value::array();
  for (const auto& a : report.anomalies) {
    anomalies.push_back(Value{{"class", a.class_key},
                              {"pass_case", a.first.id},
                              {"fail_case", a.second.id},
                              {"pass_evidence", a.verdict_first.evidence},
                              {"fail_evidence", a.verdict_second.evidence}});
  }
  Value divergent = Value::array();
  for (const auto& d : report.divergent) {
    divergent.push_back(
        Value{{"class", d.class_key}, {"pass_ids", d.pass_ids}, {"fail_ids", d.fail_ids}});
  }
  return Value{{"anomalies", anomalies}, {"divergent", divergent}};
}

std::string run_to_text(const Run& run) {
  std::ostringstream os;
  for (const auto& step : run.steps) {
    os << "step " << step.tick << ' ' << step.observation.dump() << '\n';
  }
  os << "terminated " << (run.terminated ? "true" : "false") << '\n';
  os << "seed " << run.seed << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Audits
// ---------------------------------------------------------------------------

namespace {

Value run_audit_block(const CampaignConfig& config, const ResolvedCampaign& campaign,
                      const TestSet& testset,
                      const std::vector<std::pair<double, ScoreRecord>>& sweep_series) {
  const Value& spec = config.raw.at("audits");
  if (!campaign.classifier)
    throw Error(ErrorKind::ConfigError, "audits require a classifier");
  const auto trials = spec.contains("trials") ? spec.at("trials").get<std::size_t>() : 100;
  const double delta = spec.contains("delta") ? spec.at("delta").get<double>() : 0.1;
  const double level =
      spec.contains("confidence_level") ? spec.at("confidence_level").get<double>() : 0.95;
  const auto per_class =
      spec.contains("per_class") ? spec.at("per_class").get<std::size_t>() : 2;
  std::vector<std::string> run_list;
  if (spec.contains("run")) {
    run_list = spec.at("run").get<std::vector<std::string>>();
  } else {
    run_list = {"monotonicity", "consistency"};
  }

  const std::uint64_t audit_seed = derive_seed(config.seed(), "audit");
  const EfficiencyFunction eff = class_coverage_eff(campaign.classifier);

  Value out = Value::array();
  for (const auto& name : run_list) {
    AuditReport report;
    if (name == "monotonicity") {
      report = audit_monotonicity(eff, subset_sampler(testset), trials,
                                  derive_seed(audit_seed, name));
    } else if (name == "consistency") {
      report = audit_consistency(eff, *campaign.classifier, subset_sampler(testset), trials,
                                 derive_seed(audit_seed, name));
    } else if (name == "reproducibility") {
      report = audit_reproducibility(
          eff, *campaign.context, campaign.tuple1_ptrs(), *campaign.property,
          stratified_pair_sampler(testset, campaign.classifier, per_class),
          SimilarityDegree{delta}, trials, derive_seed(audit_seed, name), level);
    } else if (name == "union-set-aligned") {
      report = audit_union_compatibility(eff,
                                         set_aligned_quad_sampler(testset, campaign.classifier),
                                         trials, derive_seed(audit_seed, name));
    } else if (name == "union-value-aligned") {
      report = audit_union_compatibility(
          eff, value_aligned_quad_sampler(testset, campaign.classifier), trials,
          derive_seed(audit_seed, name));
    } else if (name == "accuracy-trend") {
      // Built over the sweep restricted to strictly increasing efficiency.
      std::vector<std::pair<double, ScoreRecord>> series;
      for (const auto& entry : sweep_series) {
        if (series.empty() || entry.first > series.back().first + kEffTolerance) {
          series.push_back(entry);
        }
      }
      report = audit_accuracy_trend(series);
    } else {
      throw Error(ErrorKind::ConfigError, "unknown audit: " + name);
    }
    Value j = audit_to_json(report);
    j["name"] = name;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Campaign
// ---------------------------------------------------------------------------

CampaignReport run_campaign(const CampaignConfig& config) {
  CampaignReport report;
  report.json = Value{{"schema_version", 1},
                      {"config", config.raw},
                      {"generated", nullptr},
                      {"cases", nullptr},
                      {"scores", nullptr},
                      {"efficiency", nullptr},
                      {"replacement", nullptr},
                      {"anomalies", nullptr},
                      {"adversarial", nullptr},
                      {"audits", nullptr},
                      {"sweep", nullptr},
                      {"timing", nullptr},
                      {"aborted", nullptr}};
  try {
    const ResolvedCampaign campaign = resolve_campaign(config);
    const std::uint64_t seed = config.seed();
    TestSet testset = generate_testset(config, campaign);
    validate_testset(testset);
    report.json["generated"] = Value{{"name", testset.name}, {"count", testset.size()}};

    // Classify up front (deterministic, cheap relative to experiments).
    std::vector<std::string> class_keys(testset.size());
    if (campaign.classifier) {
      for (std::size_t i = 0; i < testset.size(); ++i) {
        class_keys[i] = campaign.classifier->classify_checked(testset.cases[i]);
      }
    }

    const bool has_tuple2 = !campaign.tuple2.empty();
    std::vector<CaseResult> results(testset.size());
    parallel_for(config.jobs(), testset.size(), [&](std::size_t i) {
      const TestCase& tc = testset.cases[i];
      const std::uint64_t case_seed = derive_seed(seed, "case-" + tc.id);
      CaseResult& r = results[i];
      r.class_key = class_keys[i];
      // Clone the tuples so parallel workers never share mutable systems.
      std::vector<std::unique_ptr<SystemUnderTest>> t1;
      std::vector<SystemUnderTest*> t1p;
      for (const auto& s : campaign.tuple1) {
        t1.push_back(s->clone());
        t1p.push_back(t1.back().get());
      }
      Run run1 = run_experiment(*campaign.context, t1p, tc, case_seed);
      r.verdict1 = campaign.property->judge(tc, run1);
      r.ticks1 = last_tick(run1);
      if (has_tuple2) {
        std::vector<std::unique_ptr<SystemUnderTest>> t2;
        std::vector<SystemUnderTest*> t2p;
        for (const auto& s : campaign.tuple2) {
          t2.push_back(s->clone());
          t2p.push_back(t2.back().get());
        }
        Run run2 = run_experiment(*campaign.context, t2p, tc, case_seed);
        r.verdict2 = campaign.property->judge(tc, run2);
        r.ticks2 = last_tick(run2);
      }
    });

    // Records sorted by test-case id, so output never depends on scheduling.
    std::vector<std::size_t> order(testset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return testset.cases[a].id < testset.cases[b].id;
    });

    Value cases = Value::array();
    std::vector<Verdict> verdicts1, verdicts2;
    std::vector<CasePairVerdicts> rows;
    std::uint64_t total_ticks = 0;
    for (std::size_t i : order) {
      const CaseResult& r = results[i];
      Value rec{{"id", testset.cases[i].id},
                {"class", r.class_key.empty() ? Value(nullptr) : Value(r.class_key)},
                {"tuple1",
                 Value{{"verdict", std::string(to_string(r.verdict1.outcome))},
                       {"evidence",
                        r.verdict1.evidence.empty() ? Value(nullptr) : Value(r.verdict1.evidence)},
                       {"ticks", r.ticks1}}},
                {"tuple2", nullptr}};
      verdicts1.push_back(r.verdict1);
      total_ticks += r.ticks1;
      if (has_tuple2) {
        rec["tuple2"] =
            Value{{"verdict", std::string(to_string(r.verdict2.outcome))},
                  {"evidence",
                   r.verdict2.evidence.empty() ? Value(nullptr) : Value(r.verdict2.evidence)},
                  {"ticks", r.ticks2}};
        verdicts2.push_back(r.verdict2);
        total_ticks += r.ticks2;
        rows.push_back({testset.cases[i], r.verdict1, r.verdict2});
      }
      cases.push_back(std::move(rec));
    }
    report.json["cases"] = std::move(cases);

    const double level = config.raw.contains("confidence_level")
                             ? config.raw.at("confidence_level").get<double>()
                             : 0.95;
    Value scores{{"tuple1", score_to_json(success_score(verdicts1, level))},
                 {"tuple2", nullptr}};
    if (has_tuple2) scores["tuple2"] = score_to_json(success_score(verdicts2, level));
    report.json["scores"] = std::move(scores);

    std::optional<EfficiencyFunction> eff;
    if (campaign.classifier) {
      eff = class_coverage_eff(campaign.classifier);
      report.json["efficiency"] = (*eff)(testset);
    }

    bool any_fail = std::any_of(verdicts1.begin(), verdicts1.end(), [](const Verdict& v) {
      return v.outcome == Outcome::Fail;
    });
    any_fail = any_fail || std::any_of(verdicts2.begin(), verdicts2.end(), [](const Verdict& v) {
                 return v.outcome == Outcome::Fail;
               });

    if (has_tuple2) {
      const bool conclusive = covers_domain_conclusively(*campaign.context, testset);
      const ReplacementReport forward = judge_replacement(rows, conclusive);
      std::vector<CasePairVerdicts> reversed;
      for (const auto& row : rows) reversed.push_back({row.testcase, row.incumbent, row.candidate});
      const ReplacementReport backward = judge_replacement(reversed, conclusive);
      const EquivalenceReport equiv = judge_equivalence(rows, conclusive);
      report.json["replacement"] =
          Value{{"candidate_replaces_incumbent", replacement_to_json(forward)},
                {"incumbent_replaces_candidate", replacement_to_json(backward)},
                {"equivalence", equivalence_to_json(equiv)}};
      if (!forward.holds) report.failures_found = true;
    }

    if (campaign.classifier) {
      const AnomalyReport anomalies =
          metamorphic_falsify(*campaign.context, campaign.tuple1_ptrs(), *campaign.property,
                              *campaign.classifier, testset, seed);
      report.json["anomalies"] = anomalies_to_json(anomalies);
      try {
        report.json["adversarial"] = anomalies_to_json(detect_adversarial(anomalies, *eff));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::InconsistentEff) throw;
        report.json["adversarial"] = Value{{"error", e.what()}};
      }
    }

    // Optional nested sweep for plot data: prefixes of the generated set.
    std::vector<std::pair<double, ScoreRecord>> sweep_series;
    if (config.raw.contains("sweep") && !config.raw.at("sweep").is_null()) {
      if (!eff) throw Error(ErrorKind::ConfigError, "sweep requires a classifier");
      Value sweep = Value::array();
      for (const auto& size_v : config.raw.at("sweep")) {
        const std::size_t size = std::min<std::size_t>(size_v.get<std::size_t>(), testset.size());
        TestSet prefix;
        prefix.name = testset.name + "[:" + std::to_string(size) + "]";
        prefix.cases.assign(testset.cases.begin(), testset.cases.begin() + size);
        std::vector<Verdict> verdicts;
        for (std::size_t i = 0; i < size; ++i) verdicts.push_back(results[i].verdict1);
        const double e = (*eff)(prefix);
        const ScoreRecord score = success_score(verdicts, level);
        sweep_series.emplace_back(e, score);
        Value row = score_to_json(score);
        row["size"] = size;
        row["eff"] = e;
        sweep.push_back(std::move(row));
      }
      report.json["sweep"] = std::move(sweep);
    }

    if (config.raw.contains("audits") && !config.raw.at("audits").is_null()) {
      report.json["audits"] = run_audit_block(config, campaign, testset, sweep_series);
      for (const auto& audit : report.json["audits"]) {
        if (!audit.at("passed").get<bool>()) report.failures_found = true;
      }
    }

    report.json["timing"] = Value{{"experiments", testset.size() * (has_tuple2 ? 2 : 1)},
                                  {"logical_ticks", total_ticks}};
    if (any_fail) report.failures_found = true;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;  // no partial report for bad configs
    report.aborted = true;
    report.json["aborted"] = std::string(e.what());
  }
  return report;
}

CampaignReport run_audits_only(const CampaignConfig& config) {
  CampaignReport report;
  report.json = Value{{"schema_version", 1},
                      {"config", config.raw},
                      {"generated", nullptr},
                      {"audits", nullptr},
                      {"aborted", nullptr}};
  try {
    if (!config.raw.contains("audits"))
      throw Error(ErrorKind::ConfigError, "audit mode requires an audits block");
    const ResolvedCampaign campaign = resolve_campaign(config);
    TestSet testset = generate_testset(config, campaign);
    validate_testset(testset);
    report.json["generated"] = Value{{"name", testset.name}, {"count", testset.size()}};
    report.json["audits"] = run_audit_block(config, campaign, testset, {});
    for (const auto& audit : report.json["audits"]) {
      if (!audit.at("passed").get<bool>()) report.failures_found = true;
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    report.aborted = true;
    report.json["aborted"] = std::string(e.what());
  }
  return report;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

ReportFormat format_from_string(std::string_view s) {
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "plotdata") return ReportFormat::Plotdata;
  throw Error(ErrorKind::ConfigError, "unknown report format: " + std::string(s));
}

namespace {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << contents;
}

std::string cases_csv(const Value& report) {
  std::ostringstream os;
  os << "test_id,class,verdict1,evidence1,ticks1,verdict2,evidence2,ticks2\n";
  if (report.at("cases").is_null()) return os.str();
  auto field = [](const Value& v) {
    if (v.is_null()) return std::string();
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
  };
  for (const auto& rec : report.at("cases")) {
    const Value& t1 = rec.at("tuple1");
    os << csv_escape(field(rec.at("id"))) << ',' << csv_escape(field(rec.at("class"))) << ','
       << field(t1.at("verdict")) << ',' << csv_escape(field(t1.at("evidence"))) << ','
       << t1.at("ticks").dump() << ',';
    if (rec.at("tuple2").is_null()) {
      os << ",,";
    } else {
      const Value& t2 = rec.at("tuple2");
      os << field(t2.at("verdict")) << ',' << csv_escape(field(t2.at("evidence"))) << ','
         << t2.at("ticks").dump();
    }
    os << '\n';
  }
  return os.str();
}

std::string plotdata_csv(const Value& report) {
  std::ostringstream os;
  os << "eff,score,ci_low,ci_high\n";
  if (!report.contains("sweep") || report.at("sweep").is_null()) return os.str();
  auto num = [](const Value& v) { return v.is_null() ? std::string() : v.dump(); };
  for (const auto& row : report.at("sweep")) {
    os << num(row.at("eff")) << ',' << num(row.at("point_estimate")) << ','
       << num(row.at("ci_low")) << ',' << num(row.at("ci_high")) << '\n';
  }
  return os.str();
}

}  // namespace

std::vector<std::string> emit_report(const CampaignReport& report, ReportFormat format,
                                     const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::string> written;
  const fs::path dir(out_dir);
  switch (format) {
    case ReportFormat::Json: {
      const fs::path path = dir / "campaign.json";
      write_file(path, report.json.dump(2) + "\n");
      written.push_back(path.string());
      break;
    }
    case ReportFormat::Csv: {
      const fs::path path = dir / "cases.csv";
      write_file(path, cases_csv(report.json));
      written.push_back(path.string());
      break;
    }
    case ReportFormat::Plotdata: {
      const fs::path path = dir / "plotdata.csv";
      write_file(path, plotdata_csv(report.json));
      written.push_back(path.string());
      break;
    }
  }
  return written;
}

}  // namespace standin::campaign
