#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "steinmc/experiment.hpp"
#include "steinmc/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw steinmc::ConfigError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int cmd_run(const std::string& config_path, std::uint64_t seed, int jobs,
            const std::string& out_path) {
  nlohmann::json file_json;
  try {
    file_json = nlohmann::json::parse(read_file(config_path));
  } catch (const nlohmann::json::exception& e) {
    throw steinmc::ConfigError(std::string("config: invalid json: ") + e.what());
  }
  auto cfg = steinmc::ExperimentConfig::parse(file_json, seed, jobs);
  auto record = steinmc::run_experiment(cfg);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw steinmc::ConfigError("cannot write record: " + out_path);
  out << record.to_jsonl();
  out.close();
  if (record.failed) {
    std::cerr << "experiment fault: " << record.fault
              << " (partial record written)\n";
    return kExitRuntime;
  }
  std::cout << "wrote " << out_path << " (" << record.rows.size()
            << " statistics, " << record.wall_clock_ms << " ms)\n";
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& paths, const std::string& format) {
  std::vector<steinmc::ExperimentRecord> records;
  for (const auto& p : paths)
    records.push_back(steinmc::ExperimentRecord::from_jsonl(read_file(p)));
  std::cout << steinmc::render_report(records, format);
  return kExitOk;
}

int cmd_verify(const std::string& path) {
  auto result = steinmc::verify_record(read_file(path));
  if (result.ok) {
    std::cout << "verify: OK (" << path << ")\n";
    return kExitOk;
  }
  for (const auto& issue : result.issues)
    std::cerr << "verify: " << issue << "\n";
  return kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"steinmc: perturbative normal-approximation bounds and lattice "
               "MST experiments"};
  app.set_version_flag("--version", steinmc::kLibraryVersion);
  app.require_subcommand(1);

  std::string config_path, out_path, format = "table", record_path;
  std::vector<std::string> report_paths;
  std::uint64_t seed = 0;
  int jobs = 1;

  auto* run = app.add_subcommand("run", "execute an experiment configuration");
  run->add_option("--config", config_path, "config file (json)")->required();
  run->add_option("--seed", seed, "master seed (no implicit entropy)")->required();
  run->add_option("--jobs", jobs, "worker threads (1 = serial reference)");
  run->add_option("--out", out_path, "record output path")->required();

  auto* report = app.add_subcommand("report", "summarize experiment records");
  report->add_option("paths", report_paths, "record files")->required();
  report->add_option("--format", format, "table|rows");

  auto* verify = app.add_subcommand("verify", "recompute bounds from a record");
  verify->add_option("record", record_path, "record file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, seed, jobs, out_path);
    if (report->parsed()) return cmd_report(report_paths, format);
    return cmd_verify(record_path);
  } catch (const steinmc::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "fault: " << e.what() << "\n";
    return kExitRuntime;
  }
}
