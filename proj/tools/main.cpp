// ccgl command line: train, sweep, ablate, validate, eval.
//
// Exit codes: 0 ok, 1 invalid config or arguments, 2 invalid bundle,
// 3 numerical failure, 4 other I/O failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ccgl/ccgl.hpp"

namespace fs = std::filesystem;
using namespace ccgl;

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

struct CommonOptions {
  std::string data;
  std::string config;
  std::vector<std::string> overrides;
  long long seed = -1;
  int seeds = 1;
  int log_every = 50;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--data", o.data, "graph bundle directory");
  cmd->add_option("--config", o.config, "config file (key = value lines)")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.overrides, "override one config key, e.g. --set train.epochs=100");
  cmd->add_option("--seed", o.seed, "master seed (overrides train.seed)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seeds", o.seeds, "number of consecutive seeds to run")->check(CLI::PositiveNumber);
  cmd->add_option("--log-every", o.log_every, "print progress every N epochs to stderr (0 = quiet)");
}

TrainConfig resolve_config(const CommonOptions& o) {
  TrainConfig c = o.config.empty() ? TrainConfig{} : load_config(o.config);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(c, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
  }
  if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
  c.validate();
  return c;
}

GraphBundle require_bundle(const std::string& dir) {
  if (dir.empty()) throw ConfigError("--data is required");
  return load_bundle(dir);
}

Trainer::EpochCallback progress(int every, const std::string& tag) {
  if (every <= 0) return {};
  return [every, tag](const EpochRecord& e) {
    if ((e.epoch + 1) % every != 0) return;
    std::cerr << tag << "epoch " << e.epoch + 1 << " loss " << e.loss << " n_ct " << e.n_ct;
    if (e.scores) std::cerr << " acc " << pct(e.scores->acc);
    std::cerr << "\n";
  };
}

struct RunRow {
  std::string setting;
  std::uint64_t seed;
  std::optional<metrics::Scores> scores;
};

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Sample standard deviation; 0 for a single run.
double std_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

/// CSV: setting,seed,acc,nmi,ari (x100), then mean and std rows per setting.
void write_csv(std::ostream& out, const std::vector<RunRow>& rows) {
  out << "setting,seed,acc,nmi,ari\n";
  std::vector<std::string> order;
  for (const auto& r : rows)
    if (std::find(order.begin(), order.end(), r.setting) == order.end()) order.push_back(r.setting);
  for (const auto& setting : order) {
    std::vector<double> acc, nmi, ari;
    for (const auto& r : rows) {
      if (r.setting != setting) continue;
      out << r.setting << "," << r.seed << ",";
      if (!r.scores) {
        out << ",,\n";
        continue;
      }
      out << pct(r.scores->acc) << "," << pct(r.scores->nmi) << "," << pct(r.scores->ari) << "\n";
      acc.push_back(r.scores->acc);
      nmi.push_back(r.scores->nmi);
      ari.push_back(r.scores->ari);
    }
    if (acc.empty()) continue;
    out << setting << ",mean," << pct(mean_of(acc)) << "," << pct(mean_of(nmi)) << ","
        << pct(mean_of(ari)) << "\n";
    out << setting << ",std," << pct(std_of(acc)) << "," << pct(std_of(nmi)) << ","
        << pct(std_of(ari)) << "\n";
  }
}

void write_run_outputs(const TrainReport& r, const TrainConfig& cfg, const std::string& data,
                       const std::string& started, const fs::path& out) {
  fs::create_directories(out);
  std::ofstream(out / "metrics.json") << metrics_json(r).dump(2) << "\n";
  const auto manifest = manifest_json(cfg, fs::absolute(data).string(), bundle_checksum(data),
                                      started, utc_now());
  std::ofstream(out / "manifest.json") << manifest.dump(2) << "\n";
  write_embedding(r.embedding, out);
  write_labels(r.labels, out / "labels_pred.tsv");
  save_checkpoint(r.params, cfg.adam, out / "params");
}

void print_scores(const std::string& tag, const std::optional<metrics::Scores>& s) {
  if (!s) {
    std::cout << tag << "no ground-truth labels\n";
    return;
  }
  std::cout << tag << "acc " << pct(s->acc) << " nmi " << pct(s->nmi) << " ari " << pct(s->ari) << "\n";
}

int cmd_train(CommonOptions& o, const std::string& out, const std::string& manifest_path) {
  TrainConfig cfg;
  std::string data = o.data;
  if (!manifest_path.empty()) {
    std::ifstream in(manifest_path);
    if (!in) throw ConfigError("cannot read manifest " + manifest_path);
    nlohmann::json m;
    try {
      m = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("manifest " + manifest_path + ": " + e.what());
    }
    cfg = config_from_manifest(m);
    if (data.empty()) data = m.value("data", "");
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  } else {
    cfg = resolve_config(o);
  }
  const auto graph = require_bundle(data);
  std::vector<RunRow> rows;
  for (int s = 0; s < o.seeds; ++s) {
    TrainConfig run = cfg;
    run.seed = cfg.seed + static_cast<std::uint64_t>(s);
    const std::string started = utc_now();
    const std::string tag = o.seeds > 1 ? "[seed " + std::to_string(run.seed) + "] " : "";
    const auto report = train(graph, run, progress(o.log_every, tag));
    const fs::path dir = o.seeds > 1 ? fs::path(out) / ("seed_" + std::to_string(run.seed)) : fs::path(out);
    write_run_outputs(report, run, data, started, dir);
    print_scores(tag, report.final_scores);
    rows.push_back({"train", run.seed, report.final_scores});
  }
  if (o.seeds > 1) {
    std::ofstream csv(fs::path(out) / "summary.csv");
    write_csv(csv, rows);
    write_csv(std::cout, rows);
  }
  return 0;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim(item);
    if (!item.empty()) out.push_back(detail::to_double(what, item));
  }
  if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
  return out;
}

std::string label(const char* key, double v) {
  std::ostringstream ss;
  ss << key << "=" << v;
  return ss.str();
}

int run_grid(CommonOptions& o, const std::vector<std::pair<std::string, TrainConfig>>& settings,
             const std::string& out_csv) {
  const auto graph = require_bundle(o.data);
  std::vector<RunRow> rows;
  for (const auto& [name, base] : settings) {
    for (int s = 0; s < o.seeds; ++s) {
      TrainConfig run = base;
      run.seed = base.seed + static_cast<std::uint64_t>(s);
      const std::string tag = "[" + name + " seed " + std::to_string(run.seed) + "] ";
      const auto report = train(graph, run, progress(o.log_every, tag));
      print_scores(tag, report.final_scores);
      rows.push_back({name, run.seed, report.final_scores});
    }
  }
  if (out_csv.empty()) {
    write_csv(std::cout, rows);
  } else {
    if (const auto parent = fs::path(out_csv).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream csv(out_csv);
    if (!csv) throw Error("cannot write " + out_csv);
    write_csv(csv, rows);
  }
  return 0;
}

int cmd_sweep(CommonOptions& o, const std::string& paces, const std::string& ratios,
              const std::string& out_csv) {
  const TrainConfig base = resolve_config(o);
  std::vector<std::pair<std::string, TrainConfig>> settings;
  if (!paces.empty()) {
    for (double p : parse_list(paces, "--pace")) {
      TrainConfig c = base;
      c.pace = p;
      c.fixed_ratio.reset();
      c.validate();
      settings.emplace_back(label("pace", p), c);
    }
  } else {
    for (double r : parse_list(ratios, "--ratio")) {
      TrainConfig c = base;
      c.fixed_ratio = r;
      c.validate();
      settings.emplace_back(label("ratio", r), c);
    }
  }
  return run_grid(o, settings, out_csv);
}

int cmd_ablate(CommonOptions& o, const std::vector<std::string>& modes, const std::string& out_csv) {
  const TrainConfig base = resolve_config(o);
  std::vector<std::pair<std::string, TrainConfig>> settings;
  for (const auto& m : modes) {
    TrainConfig c = base;
    c.ablation = parse_ablation(m);
    settings.emplace_back(m, c);
  }
  return run_grid(o, settings, out_csv);
}

int cmd_validate(const std::string& dir) {
  const auto g = load_bundle(dir);
  std::cout << g.n << " " << g.edges.size() << " " << g.d << " " << g.k << "\n";
  return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& truth_path, const std::string& data,
             bool json) {
  const auto pred = read_labels(pred_path);
  std::vector<int> truth;
  if (!truth_path.empty()) {
    truth = read_labels(truth_path);
  } else {
    const auto g = require_bundle(data);
    if (!g.labels) throw BundleError(data + ": bundle has no labels.tsv");
    truth.assign(g.labels->begin(), g.labels->end());
  }
  if (pred.size() != truth.size())
    throw BundleError("prediction has " + std::to_string(pred.size()) + " labels, truth has " +
                      std::to_string(truth.size()));
  const auto s = metrics::evaluate(pred, truth);
  if (json) {
    std::cout << nlohmann::json{{"acc", s.acc}, {"nmi", s.nmi}, {"ari", s.ari}}.dump() << "\n";
  } else {
    print_scores("", s);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustering-guided curriculum graph contrastive learning"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonOptions train_opts, sweep_opts, ablate_opts;
  std::string out = "run", manifest;
  auto* train_cmd = app.add_subcommand("train", "train on a bundle and write run outputs");
  add_common(train_cmd, train_opts);
  train_cmd->add_option("--out", out, "output directory");
  auto* manifest_opt = train_cmd->add_option("--manifest", manifest, "re-run from a manifest.json")
                           ->check(CLI::ExistingFile);
  manifest_opt->excludes(train_cmd->get_option("--config"));
  manifest_opt->excludes(train_cmd->get_option("--set"));

  std::string paces, ratios, sweep_csv;
  auto* sweep_cmd = app.add_subcommand("sweep", "curriculum pace or fixed task-ratio sweep (CSV)");
  add_common(sweep_cmd, sweep_opts);
  auto* pace_opt = sweep_cmd->add_option("--pace", paces, "comma-separated pace values");
  auto* ratio_opt = sweep_cmd->add_option("--ratio", ratios, "comma-separated fixed ratios in [0, 1]");
  pace_opt->excludes(ratio_opt);
  sweep_cmd->add_option("--out", sweep_csv, "CSV path (default stdout)");
  sweep_cmd->callback([&] {
    if (paces.empty() && ratios.empty()) throw CLI::RequiredError("--pace or --ratio");
  });

  std::vector<std::string> modes = {"none", "wo_cl", "wo_ce", "wo_cud", "wo_cuc"};
  std::string ablate_csv;
  auto* ablate_cmd = app.add_subcommand("ablate", "run ablation variants (CSV)");
  add_common(ablate_cmd, ablate_opts);
  ablate_cmd->add_option("--modes", modes, "ablation modes")->delimiter(',');
  ablate_cmd->add_option("--out", ablate_csv, "CSV path (default stdout)");

  std::string validate_dir;
  auto* validate_cmd = app.add_subcommand("validate", "print n, edge count, d, k of a bundle");
  validate_cmd->add_option("dir", validate_dir, "bundle directory")->required();

  std::string pred, truth, eval_data;
  bool eval_json = false;
  auto* eval_cmd = app.add_subcommand("eval", "score saved labels against ground truth");
  eval_cmd->add_option("--pred", pred, "predicted labels, one per line")->required();
  auto* truth_opt = eval_cmd->add_option("--truth", truth, "true labels, one per line");
  auto* data_opt = eval_cmd->add_option("--data", eval_data, "bundle with labels.tsv");
  truth_opt->excludes(data_opt);
  eval_cmd->add_flag("--json", eval_json, "print fractions as JSON");
  eval_cmd->callback([&] {
    if (truth.empty() && eval_data.empty()) throw CLI::RequiredError("--truth or --data");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return cmd_train(train_opts, out, manifest);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, paces, ratios, sweep_csv);
    if (*ablate_cmd) return cmd_ablate(ablate_opts, modes, ablate_csv);
    if (*validate_cmd) return cmd_validate(validate_dir);
    if (*eval_cmd) return cmd_eval(pred, truth, eval_data, eval_json);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const BundleError& e) {
    std::cerr << "bundle error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
