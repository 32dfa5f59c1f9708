// Command-line front end: train policies, evaluate checkpoints, and run the
// sweep/breakdown experiments defined in the config file.
//
// Exit codes: 0 success, 2 config error, 3 runtime failure.
// SEMSAT_LOG={quiet,info,debug} controls stderr verbosity (default info).

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "semsat/config.hpp"
#include "semsat/errors.hpp"
#include "semsat/experiments.hpp"

namespace {

enum class LogLevel { QUIET = 0, INFO = 1, DEBUG = 2 };

LogLevel log_level() {
  const char* v = std::getenv("SEMSAT_LOG");
  if (v == nullptr) return LogLevel::INFO;
  const std::string s(v);
  if (s == "quiet") return LogLevel::QUIET;
  if (s == "debug") return LogLevel::DEBUG;
  return LogLevel::INFO;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::INFO) std::fprintf(stderr, "%s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::DEBUG) std::fprintf(stderr, "%s\n", msg.c_str());
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw semsat::IoFailure("cannot create output directory '" + dir + "': " + ec.message());
  }
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  out.flush();
  if (!out) {
    throw semsat::IoFailure("error writing '" + path.string() + "'");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw semsat::IoFailure("cannot open '" + path + "'");
  }
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw semsat::IoFailure("error reading '" + path + "'");
  }
  return content;
}

// A config or checkpoint the user pointed at but that cannot be read is an
// input problem (exit 2), unlike write failures later on (exit 3).
semsat::RunConfig load_input_config(const std::string& path) {
  try {
    return semsat::load_config(path);
  } catch (const semsat::IoFailure& e) {
    throw semsat::BadConfig(e.what());
  }
}

std::string read_input_file(const std::string& path) {
  try {
    return read_file(path);
  } catch (const semsat::IoFailure& e) {
    throw semsat::BadConfig(e.what());
  }
}

std::string stats_csv(const std::vector<semsat::UpdateStats>& stats) {
  std::string out = "update,mean_return,best_return,policy_loss,value_loss,entropy,grad_norm\n";
  for (const auto& s : stats) {
    out += std::to_string(s.update) + "," + semsat::format_double(s.mean_return) + "," +
           semsat::format_double(s.best_return) + "," + semsat::format_double(s.policy_loss) +
           "," + semsat::format_double(s.value_loss) + "," + semsat::format_double(s.entropy) +
           "," + semsat::format_double(s.grad_norm) + "\n";
  }
  return out;
}

int cmd_train(const std::string& config_path, const std::string& algo, std::uint64_t seed,
              const std::string& out_dir) {
  const semsat::RunConfig cfg = load_input_config(config_path);
  log_info("training " + algo + " for " + std::to_string(cfg.train.updates) + " updates");
  const semsat::TrainRun run = semsat::run_training(cfg, algo, seed);
  for (const auto& s : run.stats) {
    log_debug("update " + std::to_string(s.update) +
              " mean_return " + semsat::format_double(s.mean_return));
  }
  if (!run.stats.empty()) {
    log_info("final mean return " + semsat::format_double(run.stats.back().mean_return));
  }
  write_file(out_dir, "checkpoint.json", semsat::pack_checkpoint(run.bundle));
  write_file(out_dir, "training_stats.csv", stats_csv(run.stats));
  log_info("wrote " + out_dir + "/checkpoint.json");
  return 0;
}

int cmd_evaluate(const std::string& checkpoint_path, int episodes) {
  const semsat::CheckpointBundle bundle = semsat::unpack_checkpoint(read_input_file(checkpoint_path));
  const double score = semsat::evaluate_checkpoint(bundle, episodes);
  std::printf("mean_sem %s\n", semsat::format_double(score).c_str());
  return 0;
}

int cmd_sweep(const std::string& kind, const std::string& config_path,
              const std::string& out_dir) {
  const semsat::RunConfig cfg = load_input_config(config_path);
  semsat::ExperimentResults results;
  if (kind == "delay-weight") {
    log_info("running delay-weight sweep (" +
             std::to_string(cfg.experiment.theta_d_values.size()) + " points, " +
             std::to_string(cfg.experiment.replications) + " replications)");
    results.sweeps.push_back(semsat::run_delay_weight_sweep(cfg));
  } else {
    log_info("running power sweep (" + std::to_string(cfg.experiment.power_values_w.size()) +
             " points, " + std::to_string(cfg.experiment.replications) + " replications)");
    results.sweeps.push_back(semsat::run_power_sweep(cfg));
  }
  semsat::emit_outputs(cfg, results, out_dir);
  log_info("wrote results to " + out_dir);
  return 0;
}

int cmd_breakdown(const std::string& config_path, const std::string& out_dir) {
  const semsat::RunConfig cfg = load_input_config(config_path);
  semsat::ExperimentResults results;
  results.breakdown = semsat::run_mode_level_breakdown(cfg);
  semsat::emit_outputs(cfg, results, out_dir);
  log_info("wrote results to " + out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LEO/UAV semantic transmission simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string algo = "grpo";
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string checkpoint_path;
  int episodes = 8;
  std::string sweep_kind;

  auto* train = app.add_subcommand("train", "Train a policy on the configured scenario");
  train->add_option("--config", config_path, "config file")->required();
  train->add_option("--algo", algo, "grpo or ppo")
      ->check(CLI::IsMember({"grpo", "ppo"}));
  train->add_option("--seed", seed, "master seed");
  train->add_option("--out", out_dir, "output directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a saved checkpoint");
  evaluate->add_option("--checkpoint", checkpoint_path, "checkpoint.json path")->required();
  evaluate->add_option("--episodes", episodes, "evaluation episodes")
      ->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "Run a sweep experiment");
  sweep->add_option("kind", sweep_kind, "delay-weight or power")
      ->required()
      ->check(CLI::IsMember({"delay-weight", "power"}));
  sweep->add_option("--config", config_path, "config file")->required();
  sweep->add_option("--out", out_dir, "output directory")->required();

  auto* breakdown = app.add_subcommand("breakdown", "Per-level metric breakdown table");
  breakdown->add_option("--config", config_path, "config file")->required();
  breakdown->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return cmd_train(config_path, algo, seed, out_dir);
    if (evaluate->parsed()) return cmd_evaluate(checkpoint_path, episodes);
    if (sweep->parsed()) return cmd_sweep(sweep_kind, config_path, out_dir);
    return cmd_breakdown(config_path, out_dir);
  } catch (const semsat::BadConfig& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const semsat::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
