#include <regex>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "steinmc/experiment.hpp"
#include "steinmc/version.hpp"

using namespace steinmc;
using nlohmann::json;

namespace {

std::string strip_wall_clock(std::string text) {
  return std::regex_replace(text, std::regex("\"wall_clock_ms\":[^,}]*"),
                            "\"wall_clock_ms\":0");
}

}  // namespace

TEST_CASE("config validation names the offending key") {
  json good{{"kind", "iid_sum_bound"}, {"n", 8}, {"replicas", 50}};
  CHECK_NOTHROW(ExperimentConfig::parse(good, 1, 1));

  json unknown = good;
  unknown["bogus"] = 1;
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse(unknown, 1, 1),
                       doctest::Contains("bogus"), ConfigError);

  json zero = good;
  zero["replicas"] = 0;
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse(zero, 1, 1),
                       doctest::Contains("replicas"), ConfigError);

  json missing{{"kind", "iid_sum_bound"}};
  CHECK_THROWS_WITH_AS(ExperimentConfig::parse(missing, 1, 1),
                       doctest::Contains("n"), ConfigError);

  json badkind{{"kind", "nope"}};
  CHECK_THROWS_AS(ExperimentConfig::parse(badkind, 1, 1), ConfigError);

  CHECK(!known_experiment_kinds().empty());
}

TEST_CASE("records are deterministic given (config, seed)") {
  json cfg_json{{"kind", "iid_sum_bound"}, {"n", 8}, {"replicas", 120}};
  auto a = run_experiment(ExperimentConfig::parse(cfg_json, 42, 2));
  auto b = run_experiment(ExperimentConfig::parse(cfg_json, 42, 1));
  CHECK(strip_wall_clock(a.to_jsonl()) == strip_wall_clock(b.to_jsonl()));

  auto c = run_experiment(ExperimentConfig::parse(cfg_json, 43, 1));
  CHECK(strip_wall_clock(a.to_jsonl()) != strip_wall_clock(c.to_jsonl()));
}

TEST_CASE("serialization round trip is byte-identical and verifiable") {
  json cfg_json{{"kind", "iid_sum_bound"}, {"n", 6}, {"replicas", 60}};
  auto rec = run_experiment(ExperimentConfig::parse(cfg_json, 7, 1));
  const std::string text = rec.to_jsonl();
  auto parsed = ExperimentRecord::from_jsonl(text);
  CHECK(parsed.to_jsonl() == text);
  CHECK(parsed.kind == "iid_sum_bound");
  CHECK(parsed.seed == 7);
  CHECK(parsed.library_version == kLibraryVersion);
  REQUIRE(!parsed.rows.empty());

  CHECK(verify_record(text).ok);

  // tampering with the stored bound breaks the recomputation check
  auto tampered = parsed;
  for (auto& r : tampered.rows)
    if (r.name == "theorem_bound") r.estimate += 0.01;
  auto verdict = verify_record(tampered.to_jsonl());
  CHECK(!verdict.ok);
  REQUIRE(!verdict.issues.empty());

  // schema version mismatch is a distinct diagnostic
  std::string wrong_schema = text;
  wrong_schema.replace(wrong_schema.find("steinmc.record.v1"),
                       std::string("steinmc.record.v1").size(),
                       "steinmc.record.v9");
  CHECK_THROWS_WITH_AS(ExperimentRecord::from_jsonl(wrong_schema),
                       doctest::Contains("schema"), ConfigError);
}

TEST_CASE("mst clt record carries distances, variance ratios, seeds") {
  json cfg_json{{"kind", "mst_clt"},
                {"radii", json::array({2, 3})},
                {"environments", 80}};
  auto rec = run_experiment(ExperimentConfig::parse(cfg_json, 11, 2));
  CHECK(!rec.failed);
  int ks_rows = 0, ratio_rows = 0;
  for (const auto& r : rec.rows) {
    if (r.name == "kolmogorov") {
      ++ks_rows;
      CHECK(r.point.has_value());
      CHECK(r.components.contains("radius_seed"));
    }
    if (r.name == "sigma_sq_over_volume") ++ratio_rows;
  }
  CHECK(ks_rows == 2);
  CHECK(ratio_rows == 2);
}

TEST_CASE("report: grouped sections, slope fits, machine rows") {
  json base{{"kind", "iid_sum_bound"}, {"replicas", 80}};
  std::vector<ExperimentRecord> records;
  for (int n : {16, 64, 256}) {
    json cfg = base;
    cfg["n"] = n;
    records.push_back(run_experiment(ExperimentConfig::parse(cfg, 5, 2)));
  }
  json lcfg{{"kind", "lindeberg"}, {"n", 8}, {"h", "quadratic"}, {"replicas", 50}};
  records.push_back(run_experiment(ExperimentConfig::parse(lcfg, 5, 1)));

  const std::string table = render_report(records, "table");
  CHECK(table.find("== iid_sum_bound (3 records)") != std::string::npos);
  CHECK(table.find("== lindeberg (1 record)") != std::string::npos);
  CHECK(table.find("slope[theorem_bound]") != std::string::npos);

  const std::string rows = render_report(records, "rows");
  CHECK(rows.rfind("kind\trecord\tstatistic\tpoint\testimate\tse\tcount\n", 0) == 0);
  CHECK(rows.find("theorem_bound") != std::string::npos);

  CHECK_THROWS_AS(render_report({}, "table"), ConfigError);
  CHECK_THROWS_AS(render_report(records, "csv"), ConfigError);
}

TEST_CASE("nu law experiment passes its own goodness-of-fit gate") {
  json cfg{{"kind", "nu_law"}, {"n", 4}, {"draws", 200000}};
  auto rec = run_experiment(ExperimentConfig::parse(cfg, 99, 2));
  CHECK(!rec.failed);
  int rows = 0;
  for (const auto& r : rec.rows)
    if (r.name == "chi_square") {
      ++rows;
      CHECK(r.components.at("pass").get<bool>());
      CHECK(r.components.at("dof").get<double>() == 7.0);
    }
  CHECK(rows == 4);
}

TEST_CASE("stein residual experiment reports the proof bounds") {
  json cfg{{"kind", "stein_residual"},
           {"grid_points", 201},
           {"thresholds", json::array({0.0})},
           {"widths", json::array({0.2})}};
  auto rec = run_experiment(ExperimentConfig::parse(cfg, 1, 1));
  CHECK(!rec.failed);
  REQUIRE(rec.rows.size() == 2);  // upper and lower
  for (const auto& r : rec.rows) {
    CHECK(r.estimate <= 1e-6);
    CHECK(r.components.at("bounds_hold").get<bool>());
  }
}

TEST_CASE("invalid parameter combinations surface as config errors") {
  // k must stay below the radius
  json bad{{"kind", "mst_localization"},
           {"n", 3},
           {"ks", json::array({3})},
           {"environments", 5}};
  CHECK_THROWS_AS(run_experiment(ExperimentConfig::parse(bad, 1, 1)),
                  ConfigError);
}

TEST_CASE("failed records round-trip with their fault flag") {
  ExperimentRecord rec;
  rec.schema = kRecordSchema;
  rec.kind = "iid_sum_bound";
  rec.config = json{{"kind", "iid_sum_bound"}, {"n", 4}};
  rec.seed = 3;
  rec.library_version = kLibraryVersion;
  rec.failed = true;
  rec.fault = "functional evaluation fault: f(X)";
  auto parsed = ExperimentRecord::from_jsonl(rec.to_jsonl());
  CHECK(parsed.failed);
  CHECK(parsed.fault == rec.fault);
  CHECK(parsed.to_jsonl() == rec.to_jsonl());
  CHECK(verify_record(rec.to_jsonl()).ok);  // no bound rows to recompute
}
