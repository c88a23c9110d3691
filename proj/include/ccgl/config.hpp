#pragma once

// Plain-text configuration: one `section.key = value` per line, `#` starts a
// comment. Every key has a default; unknown keys are rejected.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ccgl/augment.hpp"
#include "ccgl/contrast.hpp"
#include "ccgl/encoder.hpp"
#include "ccgl/error.hpp"

namespace ccgl {

enum class Ablation { none, wo_cl, wo_ce, wo_cud, wo_cuc };

inline std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::none: return "none";
    case Ablation::wo_cl: return "wo_cl";
    case Ablation::wo_ce: return "wo_ce";
    case Ablation::wo_cud: return "wo_cud";
    case Ablation::wo_cuc: return "wo_cuc";
  }
  return "none";
}

inline Ablation parse_ablation(const std::string& s) {
  if (s == "none") return Ablation::none;
  if (s == "wo_cl") return Ablation::wo_cl;
  if (s == "wo_ce") return Ablation::wo_ce;
  if (s == "wo_cud") return Ablation::wo_cud;
  if (s == "wo_cuc") return Ablation::wo_cuc;
  throw ConfigError("unknown ablation mode '" + s + "' (none|wo_cl|wo_ce|wo_cud|wo_cuc)");
}

struct TrainConfig {
  int epochs = 400;
  std::uint64_t seed = 0;
  double gamma = 1.0;
  int hidden = 256;
  int out = 64;
  int kmeans_max_iter = 100;
  AdamOptions adam;
  ContrastConfig contrast;
  AugmentOptions aug;
  double pace = 1.5;
  std::optional<double> fixed_ratio;
  Ablation ablation = Ablation::none;

  void validate() const {
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (!(gamma >= 0.0)) throw ConfigError("train.gamma must be >= 0");
    if (hidden < 1 || out < 1) throw ConfigError("encoder.hidden and encoder.out must be >= 1");
    if (kmeans_max_iter < 1) throw ConfigError("kmeans.max_iter must be >= 1");
    if (!(adam.lr > 0.0)) throw ConfigError("optim.lr must be > 0");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("optim.beta1 must lie in [0, 1)");
    if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("optim.beta2 must lie in [0, 1)");
    if (!(adam.eps > 0.0)) throw ConfigError("optim.eps must be > 0");
    if (!(adam.weight_decay >= 0.0)) throw ConfigError("optim.weight_decay must be >= 0");
    contrast.validate();
    aug.validate();
    if (!(pace >= 0.0)) throw ConfigError("curriculum.pace must be >= 0");
    if (fixed_ratio && !(*fixed_ratio >= 0.0 && *fixed_ratio <= 1.0))
      throw ConfigError("curriculum.fixed_ratio must lie in [0, 1]");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

inline long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an integer, got '" + v + "'");
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

// Shortest text that parses back to the same double.
inline std::string fmt_double(double d) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, r.ptr);
}

}  // namespace detail

/// Applies one key/value pair.
inline void set_config_value(TrainConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  static const std::map<std::string, std::function<void(TrainConfig&, const std::string&)>> setters = {
      {"train.epochs", [](TrainConfig& cfg, const std::string& v) { cfg.epochs = static_cast<int>(to_int("train.epochs", v)); }},
      {"train.seed", [](TrainConfig& cfg, const std::string& v) { cfg.seed = static_cast<std::uint64_t>(to_int("train.seed", v)); }},
      {"train.gamma", [](TrainConfig& cfg, const std::string& v) { cfg.gamma = to_double("train.gamma", v); }},
      {"train.ablation", [](TrainConfig& cfg, const std::string& v) { cfg.ablation = parse_ablation(v); }},
      {"encoder.hidden", [](TrainConfig& cfg, const std::string& v) { cfg.hidden = static_cast<int>(to_int("encoder.hidden", v)); }},
      {"encoder.out", [](TrainConfig& cfg, const std::string& v) { cfg.out = static_cast<int>(to_int("encoder.out", v)); }},
      {"kmeans.max_iter", [](TrainConfig& cfg, const std::string& v) { cfg.kmeans_max_iter = static_cast<int>(to_int("kmeans.max_iter", v)); }},
      {"optim.lr", [](TrainConfig& cfg, const std::string& v) { cfg.adam.lr = to_double("optim.lr", v); }},
      {"optim.beta1", [](TrainConfig& cfg, const std::string& v) { cfg.adam.beta1 = to_double("optim.beta1", v); }},
      {"optim.beta2", [](TrainConfig& cfg, const std::string& v) { cfg.adam.beta2 = to_double("optim.beta2", v); }},
      {"optim.eps", [](TrainConfig& cfg, const std::string& v) { cfg.adam.eps = to_double("optim.eps", v); }},
      {"optim.weight_decay", [](TrainConfig& cfg, const std::string& v) { cfg.adam.weight_decay = to_double("optim.weight_decay", v); }},
      {"contrast.tau", [](TrainConfig& cfg, const std::string& v) { cfg.contrast.tau = to_double("contrast.tau", v); }},
      {"aug.mode", [](TrainConfig& cfg, const std::string& v) {
         if (v == "semantic") cfg.aug.mode = EdgeProbMode::semantic;
         else if (v == "literal") cfg.aug.mode = EdgeProbMode::literal;
         else throw ConfigError("aug.mode: expected semantic|literal, got '" + v + "'");
       }},
      {"aug.p_e", [](TrainConfig& cfg, const std::string& v) { cfg.aug.p_e = to_double("aug.p_e", v); }},
      {"aug.p_f", [](TrainConfig& cfg, const std::string& v) { cfg.aug.p_f = to_double("aug.p_f", v); }},
      {"aug.p_tau", [](TrainConfig& cfg, const std::string& v) { cfg.aug.p_tau = to_double("aug.p_tau", v); }},
      {"aug.mu", [](TrainConfig& cfg, const std::string& v) { cfg.aug.mu = to_double("aug.mu", v); }},
      {"aug.random", [](TrainConfig& cfg, const std::string& v) { cfg.aug.random = to_bool("aug.random", v); }},
      {"curriculum.pace", [](TrainConfig& cfg, const std::string& v) { cfg.pace = to_double("curriculum.pace", v); }},
      {"curriculum.fixed_ratio", [](TrainConfig& cfg, const std::string& v) {
         if (v == "none" || v.empty()) cfg.fixed_ratio.reset();
         else cfg.fixed_ratio = to_double("curriculum.fixed_ratio", v);
       }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(c, value);
}

inline TrainConfig parse_config(const std::string& text, TrainConfig base = {}) {
  std::istringstream in(text);
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    try {
      set_config_value(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  base.validate();
  return base;
}

inline TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

/// Fully resolved key/value listing; parse_config(render_config(c)) == c.
inline std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& c) {
  using detail::fmt_double;
  return {
      {"train.epochs", std::to_string(c.epochs)},
      {"train.seed", std::to_string(c.seed)},
      {"train.gamma", fmt_double(c.gamma)},
      {"train.ablation", to_string(c.ablation)},
      {"encoder.hidden", std::to_string(c.hidden)},
      {"encoder.out", std::to_string(c.out)},
      {"kmeans.max_iter", std::to_string(c.kmeans_max_iter)},
      {"optim.lr", fmt_double(c.adam.lr)},
      {"optim.beta1", fmt_double(c.adam.beta1)},
      {"optim.beta2", fmt_double(c.adam.beta2)},
      {"optim.eps", fmt_double(c.adam.eps)},
      {"optim.weight_decay", fmt_double(c.adam.weight_decay)},
      {"contrast.tau", fmt_double(c.contrast.tau)},
      {"aug.mode", c.aug.mode == EdgeProbMode::semantic ? "semantic" : "literal"},
      {"aug.p_e", fmt_double(c.aug.p_e)},
      {"aug.p_f", fmt_double(c.aug.p_f)},
      {"aug.p_tau", fmt_double(c.aug.p_tau)},
      {"aug.mu", fmt_double(c.aug.mu)},
      {"aug.random", c.aug.random ? "true" : "false"},
      {"curriculum.pace", fmt_double(c.pace)},
      {"curriculum.fixed_ratio", c.fixed_ratio ? fmt_double(*c.fixed_ratio) : "none"},
  };
}

inline std::string render_config(const TrainConfig& c) {
  std::string out;
  for (const auto& [k, v] : config_entries(c)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace ccgl
