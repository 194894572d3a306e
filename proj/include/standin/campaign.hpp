#pragma once

#include <memory>
#include <string>
#include <vector>

#include "standin/contexts.hpp"
#include "standin/generators.hpp"
#include "standin/metrics.hpp"
#include "standin/replacement.hpp"
#include "standin/traffic.hpp"

namespace standin::campaign {

/// Parsed campaign configuration. The JSON schema is documented in the
/// repository README; schema_version 1.
struct CampaignConfig {
  Value raw;              // config echo for the report
  std::string base_dir;   // directory for resolving relative file references

  static CampaignConfig from_json(Value v, std::string base_dir);
  static CampaignConfig load(const std::string& path);

  std::uint64_t seed() const;
  std::size_t jobs() const;
  void override_seed(std::uint64_t seed);
  void override_jobs(std::size_t jobs);
};

/// Full campaign result. The JSON document is the report of record; the
/// flags summarize it for exit-code decisions.
struct CampaignReport {
  Value json;
  bool failures_found = false;   // any Fail verdict or replacement violation
  bool aborted = false;
};

/// Components resolved from a campaign config: context, system tuples,
/// property, optional classifier.
struct ResolvedCampaign {
  std::unique_ptr<Context> context;
  std::vector<std::unique_ptr<SystemUnderTest>> tuple1;
  std::vector<std::unique_ptr<SystemUnderTest>> tuple2;  // empty when single-tuple
  std::unique_ptr<Property> property;
  std::shared_ptr<EquivalenceClassifier> classifier;

  std::vector<SystemUnderTest*> tuple1_ptrs() const;
  std::vector<SystemUnderTest*> tuple2_ptrs() const;
};

/// Builds every component named in the config; throws ConfigError on any
/// unresolved reference.
ResolvedCampaign resolve_campaign(const CampaignConfig& config);

/// Generates the test set, runs all configured tuples, judges, scores, and
/// evaluates replacement/equivalence, anomalies and audits as configured.
/// Module errors mid-campaign abort the run and leave a partial report with
/// an "aborted" marker. Reports are byte-identical across re-runs and across
/// jobs settings.
CampaignReport run_campaign(const CampaignConfig& config);

enum class ReportFormat { Json, Csv, Plotdata };

ReportFormat format_from_string(std::string_view s);

/// Writes campaign.json / cases.csv / plotdata.csv into out_dir; returns the
/// paths written.
std::vector<std::string> emit_report(const CampaignReport& report, ReportFormat format,
                                     const std::string& out_dir);

/// Run audits only (classifier + audits block required).
CampaignReport run_audits_only(const CampaignConfig& config);

// JSON encoders shared with the CLI and the tests.
Value score_to_json(const ScoreRecord& score);
Value replacement_to_json(const ReplacementReport& report);
Value equivalence_to_json(const EquivalenceReport& report);
Value audit_to_json(const AuditReport& report);
Value anomalies_to_json(const AnomalyReport& report);

/// Run serialization as structured text: one `step <tick> <observation>`
/// line per step plus `terminated` / `seed` trailer lines.
std::string run_to_text(const Run& run);

}  // namespace standin::campaign
