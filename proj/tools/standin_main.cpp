#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "standin/campaign.hpp"

namespace {

using namespace standin;

constexpr int kExitSuccess = 0;
constexpr int kExitFailureFound = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

struct CommonOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> formats = {"json"};
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_config = true) {
  auto* config = cmd->add_option("--config", opts.config_path, "campaign config file (JSON)");
  if (needs_config) config->required();
  cmd->add_option("--out", opts.out_dir, "output directory for reports");
  cmd->add_option("--format", opts.formats, "report formats: json, csv, plotdata");
  cmd->add_option("--seed", opts.seed, "override the config seed");
  cmd->add_option("--jobs", opts.jobs, "parallel workers for per-case experiments");
}

campaign::CampaignConfig load_config(const CommonOptions& opts) {
  auto config = campaign::CampaignConfig::load(opts.config_path);
  if (opts.seed) config.override_seed(*opts.seed);
  if (opts.jobs) config.override_jobs(*opts.jobs);
  return config;
}

int emit_all(const campaign::CampaignReport& report, const CommonOptions& opts) {
  for (const auto& format : opts.formats) {
    for (const auto& path :
         campaign::emit_report(report, campaign::format_from_string(format), opts.out_dir)) {
      std::cout << "wrote " << path << "\n";
    }
  }
  if (report.aborted) {
    std::cerr << "campaign aborted: " << report.json.at("aborted").get<std::string>() << "\n";
    return kExitRuntimeError;
  }
  return report.failures_found ? kExitFailureFound : kExitSuccess;
}

int cmd_run(const CommonOptions& opts) {
  const auto config = load_config(opts);
  const auto report = campaign::run_campaign(config);
  const int code = emit_all(report, opts);
  if (!report.aborted) {
    const auto& scores = report.json.at("scores");
    std::cout << "cases: " << report.json.at("generated").at("count") << "\n";
    std::cout << "score(tuple1): " << scores.at("tuple1").at("point_estimate").dump() << "\n";
    if (!report.json.at("replacement").is_null()) {
      const auto& rep = report.json.at("replacement");
      std::cout << "candidate replaces incumbent: "
                << rep.at("candidate_replaces_incumbent").at("holds").dump() << "\n";
    }
  }
  return code;
}

int cmd_audit(const CommonOptions& opts) {
  const auto config = load_config(opts);
  const auto report = campaign::run_audits_only(config);
  const int code = emit_all(report, opts);
  if (!report.aborted && !report.json.at("audits").is_null()) {
    for (const auto& audit : report.json.at("audits")) {
      std::cout << audit.at("name").get<std::string>() << ": "
                << (audit.at("passed").get<bool>() ? "passed" : "failed") << " ("
                << audit.at("violations").size() << " violations)\n";
    }
  }
  return code;
}

int cmd_replace(const CommonOptions& opts) {
  const auto config = load_config(opts);
  if (!config.raw.contains("systems2") || config.raw.at("systems2").is_null()) {
    throw Error(ErrorKind::ConfigError, "replace mode requires a systems2 tuple");
  }
  const auto report = campaign::run_campaign(config);
  const int code = emit_all(report, opts);
  if (!report.aborted) {
    const auto& rep = report.json.at("replacement");
    const auto& forward = rep.at("candidate_replaces_incumbent");
    const auto& backward = rep.at("incumbent_replaces_candidate");
    const auto& equiv = rep.at("equivalence");
    std::cout << "candidate replaces incumbent: " << forward.at("holds").dump()
              << (forward.at("conclusive").get<bool>() ? " (conclusive)" : " (evidence only)")
              << "\n";
    std::cout << "incumbent replaces candidate: " << backward.at("holds").dump() << "\n";
    std::cout << "equivalent: " << equiv.at("equivalent").dump() << "\n";
    std::cout << "violations: " << forward.at("violations").size() << "\n";
  }
  return code;
}

struct SimulateOptions {
  std::string network_path;
  std::string scenario_path;
  std::vector<std::string> policies;
  std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateOptions& opts) {
  auto network =
      std::make_shared<traffic::RoadNetwork>(traffic::load_network(opts.network_path));
  const traffic::DrivingScenario scenario = traffic::load_scenario(opts.scenario_path);
  auto context = traffic::make_traffic_context(network, scenario.vehicles.size(),
                                               network->v_max, network->a_max, network->rho);
  const auto policies = traffic::builtin_policies();
  std::vector<std::unique_ptr<SystemUnderTest>> systems;
  for (std::size_t i = 0; i < scenario.vehicles.size(); ++i) {
    const std::string name =
        i < opts.policies.size() ? opts.policies[i]
                                 : (opts.policies.empty() ? "cautious" : opts.policies.back());
    if (name == "cautious") {
      systems.push_back(traffic::make_policy_system(policies.cautious));
    } else if (name == "greedy") {
      systems.push_back(traffic::make_policy_system(policies.greedy));
    } else {
      throw Error(ErrorKind::ConfigError, "unknown policy: " + name);
    }
  }
  std::vector<SystemUnderTest*> ptrs;
  for (const auto& s : systems) ptrs.push_back(s.get());
  const TestCase tc = make_test_case(context->input_domain(), traffic::scenario_to_json(scenario));
  const Run run = run_experiment(*context, ptrs, tc, opts.seed);
  std::cout << campaign::run_to_text(run);
  const Verdict collision = traffic::collision_free(run);
  std::cout << "collision_free " << to_string(collision.outcome);
  if (!collision.evidence.empty()) std::cout << " (" << collision.evidence << ")";
  std::cout << "\n";
  return collision.outcome == Outcome::Pass ? kExitSuccess : kExitFailureFound;
}

struct TabulateOptions {
  std::string config_path;
  std::string out_path = "tabulated.tbl";
};

int cmd_tabulate(const TabulateOptions& opts) {
  const auto config = campaign::CampaignConfig::load(opts.config_path);
  const auto campaign_parts = campaign::resolve_campaign(config);
  auto tabulated = tabulate_system(*campaign_parts.context, *campaign_parts.tuple1.at(0));
  const auto* table_system = dynamic_cast<const TableSystem*>(tabulated.get());
  save_table(table_system->table(), opts.out_path);
  std::cout << "wrote " << opts.out_path << " (" << table_system->table().size()
            << " entries)\n";
  return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"standin: black-box replacement testing harness"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "run a full campaign from a config");
  add_common(run, run_opts);

  CommonOptions audit_opts;
  auto* audit = app.add_subcommand("audit", "run only the metrics audits from a config");
  add_common(audit, audit_opts);

  CommonOptions replace_opts;
  auto* replace =
      app.add_subcommand("replace", "two-tuple replacement comparison shortcut");
  add_common(replace, replace_opts);

  SimulateOptions sim_opts;
  auto* simulate = app.add_subcommand("simulate", "run one traffic scenario and dump the run");
  simulate->add_option("--network", sim_opts.network_path, "network file")->required();
  simulate->add_option("--scenario", sim_opts.scenario_path, "scenario file")->required();
  simulate->add_option("--policy", sim_opts.policies,
                       "policy per vehicle (cautious|greedy); last repeats");
  simulate->add_option("--seed", sim_opts.seed, "experiment seed");

  TabulateOptions tab_opts;
  auto* tabulate =
      app.add_subcommand("tabulate", "tabulate the first configured system through its context");
  tabulate->add_option("--config", tab_opts.config_path, "campaign config file")->required();
  tabulate->add_option("--out", tab_opts.out_path, "output table file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (audit->parsed()) return cmd_audit(audit_opts);
    if (replace->parsed()) return cmd_replace(replace_opts);
    if (simulate->parsed()) return cmd_simulate(sim_opts);
    if (tabulate->parsed()) return cmd_tabulate(tab_opts);
  } catch (const standin::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == standin::ErrorKind::ConfigError || e.kind() == standin::ErrorKind::IoError
               ? kExitConfigError
               : kExitRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitSuccess;
}
