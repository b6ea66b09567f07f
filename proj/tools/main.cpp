#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "straggler/config.hpp"
#include "straggler/log.hpp"
#include "straggler/run.hpp"
#include "straggler/workload.hpp"

namespace fs = std::filesystem;
using namespace straggler;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string trace;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "config file (section.key = value)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "run seed");
  cmd->add_option("--out", c.out, "output directory (overrides sim.output_dir)");
  cmd->add_option("--trace", c.trace, "workload trace CSV to ingest instead of generating one");
}

SimConfig resolve(const Common& c) {
  SimConfig config = c.config_path.empty() ? SimConfig{} : load_config(c.config_path);
  if (c.seed) config.seed = *c.seed;
  if (!c.out.empty()) config.output_dir = c.out;
  if (!c.trace.empty()) config.workload.trace_path = c.trace;
  config.validate();
  return config;
}

std::string raw_config_hash(const Common& c) {
  return c.config_path.empty() ? std::string() : sha256_file(c.config_path);
}

void annotate_manifest(const fs::path& dir, const Common& c) {
  const fs::path path = dir / "manifest.json";
  std::ifstream in(path);
  auto manifest = nlohmann::json::parse(in);
  in.close();
  manifest["config_file"] = c.config_path;
  manifest["config_file_sha256"] = raw_config_hash(c);
  std::ofstream(path, std::ios::trunc) << manifest.dump(2) << "\n";
}

std::shared_ptr<const neural::Network> load_checkpoint(const std::string& path) {
  if (path.empty()) return nullptr;
  if (!fs::exists(path)) throw std::runtime_error(fmt::format("checkpoint {} not found", path));
  return std::make_shared<neural::Network>(neural::Network::load(fs::path(path)));
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

int cmd_generate(const Common& c) {
  const SimConfig config = resolve(c);
  fs::create_directories(config.output_dir);
  const fs::path path = fs::path(config.output_dir) / "trace.csv";
  const Trace trace = generate_trace(config);
  write_trace(path, trace);
  JobId jobs = 0;
  for (std::size_t i = 0; i < trace.size(); ++i)
    if (i == 0 || trace[i].job_id != trace[i - 1].job_id) ++jobs;
  fmt::print("wrote {} tasks in {} jobs to {}\n", trace.size(), jobs, path.string());
  return 0;
}

struct TrainFlags {
  std::optional<int> epochs;
  std::optional<double> lr;
  std::string checkpoint;
};

int cmd_train(const Common& c, const TrainFlags& f) {
  SimConfig config = resolve(c);
  if (f.epochs) config.train.epochs = *f.epochs;
  if (f.lr) config.train.lr = *f.lr;
  if (!f.checkpoint.empty()) config.checkpoint_path = f.checkpoint;
  config.validate();
  const fs::path dir = config.output_dir;
  fs::create_directories(dir);

  const auto harvest = harvest_dataset(config);
  if (harvest.examples.size() < 2)
    throw std::runtime_error(fmt::format("only {} labelled jobs harvested; need at least 2", harvest.examples.size()));
  predictor::write_dataset(dir / "features.csv", dir / "labels.csv", harvest.examples);
  const auto trained = train_predictor(config, harvest.examples);
  const fs::path ckpt = config.checkpoint_path.empty() ? dir / "checkpoint.bin" : fs::path(config.checkpoint_path);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  trained.net->save(ckpt);

  std::ofstream loss(dir / "loss.csv", std::ios::binary | std::ios::trunc);
  loss << "epoch,train_loss,test_loss\n";
  for (std::size_t e = 0; e < trained.result.train_loss.size(); ++e)
    loss << fmt::format("{},{},{}\n", e + 1, trained.result.train_loss[e], trained.result.test_loss[e]);

  const auto quality = evaluate_predictor(*trained.net, harvest.examples, trained.result, config);
  const nlohmann::json summary{
      {"examples", harvest.examples.size()},
      {"discarded_jobs", harvest.discarded},
      {"train_examples", trained.result.train_index.size()},
      {"test_examples", trained.result.test_index.size()},
      {"epochs", config.train.epochs},
      {"lr", config.train.lr},
      {"checkpoint", ckpt.string()},
      {"test_mape_network", quality.network.value ? nlohmann::json(*quality.network.value) : nlohmann::json()},
      {"test_mape_global_mean",
       quality.global_mean.value ? nlohmann::json(*quality.global_mean.value) : nlohmann::json()},
      {"test_intervals_scored", quality.network.included},
      {"mean_label", {{"alpha", quality.mean_params.alpha}, {"beta", quality.mean_params.beta}}}};
  std::ofstream(dir / "train_summary.json", std::ios::trunc) << summary.dump(2) << "\n";
  fmt::print("trained on {} examples ({} test); final test loss {}; checkpoint {}\n",
             trained.result.train_index.size(), trained.result.test_index.size(),
             trained.result.test_loss.empty() ? 0.0 : trained.result.test_loss.back(), ckpt.string());
  fmt::print("test straggler-count MAPE: network {} vs global mean {}\n", fmt_opt(quality.network.value),
             fmt_opt(quality.global_mean.value));
  return 0;
}

struct SimFlags {
  std::string policy;
  std::string checkpoint;
  bool f1_as_printed = false;
};

void apply_sim_flags(SimConfig& config, const SimFlags& f) {
  if (!f.policy.empty()) config.policy = parse_policy(f.policy);
  if (!f.checkpoint.empty()) config.checkpoint_path = f.checkpoint;
  if (f.f1_as_printed) config.metrics.f1_as_printed = true;
  config.validate();
}

void print_totals(const metrics::MetricsReport& r) {
  const auto& t = r.totals;
  fmt::print("{}: energy {} | avg exec {} | job completion {} | SLA rate {} | contention {} | mitigations {}\n",
             r.policy, t.total_energy, fmt_opt(t.avg_execution_time), fmt_opt(t.mean_job_completion),
             fmt_opt(t.sla_violation_rate), t.mean_contention, t.mitigations);
}

int cmd_simulate(const Common& c, const SimFlags& f) {
  SimConfig config = resolve(c);
  apply_sim_flags(config, f);
  if (config.policy == PolicyId::start && config.checkpoint_path.empty())
    throw std::runtime_error("policy start needs --checkpoint (run `train` first)");
  const auto net = config.policy == PolicyId::start ? load_checkpoint(config.checkpoint_path) : nullptr;
  const auto run = run_simulation(config, net);
  const fs::path dir = config.output_dir;
  write_run(dir, config, run);
  annotate_manifest(dir, c);
  print_totals(run.report);
  fmt::print("wrote {}\n", (dir / "report.json").string());
  return 0;
}

const std::vector<std::string>& compare_columns() {
  static const std::vector<std::string> cols{
      "policy",          "total_energy",        "avg_execution_time", "mean_job_completion",
      "sla_violation_rate", "mean_contention",  "mean_cpu_util",      "mean_ram_util",
      "mean_disk_util",  "mean_net_util",       "mape",               "f1",
      "tasks_completed", "tasks_failed",        "jobs_completed",     "mitigations"};
  return cols;
}

std::string compare_row(const metrics::MetricsReport& r) {
  const auto& t = r.totals;
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.policy, t.total_energy,
                     fmt_opt(t.avg_execution_time), fmt_opt(t.mean_job_completion), fmt_opt(t.sla_violation_rate),
                     t.mean_contention, t.mean_cpu_util, t.mean_ram_util, t.mean_disk_util, t.mean_net_util,
                     fmt_opt(t.mape), fmt_opt(t.f1), t.tasks_completed, t.tasks_failed, t.jobs_completed,
                     t.mitigations);
}

struct CompareFlags {
  std::vector<std::string> policies;
  std::string checkpoint;
  bool f1_as_printed = false;
  TrainFlags train;
};

int cmd_compare(const Common& c, const CompareFlags& f) {
  SimConfig config = resolve(c);
  if (f.f1_as_printed) config.metrics.f1_as_printed = true;
  if (f.train.epochs) config.train.epochs = *f.train.epochs;
  if (f.train.lr) config.train.lr = *f.train.lr;
  std::vector<PolicyId> policies;
  if (f.policies.empty())
    policies = all_policies();
  else
    for (const auto& p : f.policies) policies.push_back(parse_policy(p));
  if (policies.size() < 2) throw std::runtime_error("compare needs at least two policies");
  for (std::size_t i = 0; i < policies.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (policies[i] == policies[j]) throw std::runtime_error("policy listed twice: " + to_string(policies[i]));

  const fs::path dir = config.output_dir;
  fs::create_directories(dir);
  std::shared_ptr<const neural::Network> net;
  if (std::find(policies.begin(), policies.end(), PolicyId::start) != policies.end()) {
    const std::string ckpt = f.checkpoint.empty() ? config.checkpoint_path : f.checkpoint;
    if (!ckpt.empty()) {
      net = load_checkpoint(ckpt);
    } else {
      const auto harvest = harvest_dataset(config);
      if (harvest.examples.size() < 2) throw std::runtime_error("no labelled jobs harvested for training");
      auto trained = train_predictor(config, harvest.examples);
      trained.net->save(dir / "checkpoint.bin");
      net = trained.net;
      fmt::print("trained predictor on {} examples\n", trained.result.train_index.size());
    }
  }

  std::ofstream table(dir / "compare.csv", std::ios::binary | std::ios::trunc);
  for (std::size_t i = 0; i < compare_columns().size(); ++i)
    table << (i ? "," : "") << compare_columns()[i];
  table << "\n";
  int status = 0;
  for (PolicyId p : policies) {
    SimConfig cfg = config;
    cfg.policy = p;
    try {
      const auto run = run_simulation(cfg, p == PolicyId::start ? net : nullptr);
      write_run(dir / to_string(p), cfg, run);
      annotate_manifest(dir / to_string(p), c);
      table << compare_row(run.report) << std::flush;
      print_totals(run.report);
    } catch (const std::exception& e) {
      fmt::print(stderr, "policy {} failed: {}\n", to_string(p), e.what());
      status = 1;
      break;
    }
  }
  fmt::print("wrote {}\n", (dir / "compare.csv").string());
  return status;
}

int cmd_evaluate(const std::vector<std::string>& dirs) {
  int status = 0;
  for (const auto& d : dirs) {
    const auto r = evaluate_run(d);
    if (r.consistent()) {
      fmt::print("{}: consistent\n", d);
    } else {
      status = 1;
      fmt::print("{}: {} mismatches\n", d, r.mismatches.size());
      for (const auto& m : r.mismatches) fmt::print("  {}\n", m);
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event cloud simulator with straggler prediction and mitigation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  TrainFlags train_flags;
  SimFlags sim_flags;
  CompareFlags compare_flags;
  std::vector<std::string> eval_dirs;

  auto* gen = app.add_subcommand("generate", "write a synthetic workload trace");
  add_common(gen, common);

  auto* train = app.add_subcommand("train", "harvest training windows and train the predictor");
  add_common(train, common);
  train->add_option("--epochs", train_flags.epochs, "training epochs");
  train->add_option("--lr", train_flags.lr, "Adam learning rate");
  train->add_option("--checkpoint", train_flags.checkpoint, "checkpoint path to write");

  auto* simulate = app.add_subcommand("simulate", "run one policy and write its report");
  add_common(simulate, common);
  simulate->add_option("--policy", sim_flags.policy, "start|none|reactive|nearestfit|dolly|wrangler");
  simulate->add_option("--checkpoint", sim_flags.checkpoint, "trained predictor for policy start");
  simulate->add_flag("--f1-as-printed", sim_flags.f1_as_printed, "literal F1 denominator tp + (fp + tp) / 2");

  auto* compare = app.add_subcommand("compare", "run several policies on the same seed and trace");
  add_common(compare, common);
  compare->add_option("--policy", compare_flags.policies, "policies to compare (default all)")->delimiter(',');
  compare->add_option("--checkpoint", compare_flags.checkpoint, "trained predictor; trained on the fly if absent");
  compare->add_option("--epochs", compare_flags.train.epochs, "training epochs when training on the fly");
  compare->add_option("--lr", compare_flags.train.lr, "learning rate when training on the fly");
  compare->add_flag("--f1-as-printed", compare_flags.f1_as_printed, "literal F1 denominator");

  auto* evaluate = app.add_subcommand("evaluate", "recompute aggregates from stored series");
  evaluate->add_option("runs", eval_dirs, "run directories")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(common);
    if (train->parsed()) return cmd_train(common, train_flags);
    if (simulate->parsed()) return cmd_simulate(common, sim_flags);
    if (compare->parsed()) return cmd_compare(common, compare_flags);
    if (evaluate->parsed()) return cmd_evaluate(eval_dirs);
  } catch (const std::exception& e) {
    sim_log().error("{}", e.what());
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
