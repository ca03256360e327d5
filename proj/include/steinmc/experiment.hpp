#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace steinmc {

// invalid configuration / malformed record (CLI exit code 2); runtime
// faults surface as std::runtime_error (exit code 3)
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StatisticRow {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  std::int64_t count = 0;
  std::optional<double> point;  // scaling abscissa (n, radius, k, ...)
  nlohmann::json components = nlohmann::json::object();
};

// Line-delimited record: one header object, then one object per
// statistic. Serialization is canonical (sorted keys, shortest float
// form), so parse -> serialize is byte-identical.
struct ExperimentRecord {
  std::string schema;
  std::string kind;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string library_version;
  double wall_clock_ms = 0.0;
  bool failed = false;
  std::string fault;
  std::vector<StatisticRow> rows;

  std::string to_jsonl() const;
  static ExperimentRecord from_jsonl(const std::string& text);
};

struct ExperimentConfig {
  std::string kind;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  int jobs = 1;

  // validates the kind, rejects unknown keys, fills defaults
  static ExperimentConfig parse(const nlohmann::json& file_json,
                                std::uint64_t seed, int jobs);
};

std::vector<std::string> known_experiment_kinds();

ExperimentRecord run_experiment(const ExperimentConfig& cfg);

// format: "table" (aligned, with log-log slope fits where a statistic
// recurs over a size axis) or "rows" (tab-separated machine rows)
std::string render_report(const std::vector<ExperimentRecord>& records,
                          const std::string& format);

struct VerifyResult {
  bool ok = true;
  std::vector<std::string> issues;
};

// round-trips the serialization and recomputes every bound row from its
// recorded components
VerifyResult verify_record(const std::string& jsonl_text);

}  // namespace steinmc
