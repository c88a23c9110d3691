#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccgl/binary.hpp"
#include "ccgl/config.hpp"
#include "ccgl/trainer.hpp"

namespace ccgl {

inline constexpr const char* kVersion = "0.1.0";

namespace detail {

inline nlohmann::json score_or_null(const std::optional<metrics::Scores>& s, double metrics::Scores::*field) {
  if (!s) return nullptr;
  return (*s).*field;
}

}  // namespace detail

/// metrics.json content. Scores are fractions in [0, 1]; null without labels.
/// Contains nothing time-dependent, so identical runs serialize identically.
inline nlohmann::json metrics_json(const TrainReport& r) {
  using detail::score_or_null;
  nlohmann::json history = nlohmann::json::array();
  for (const auto& e : r.history) {
    history.push_back({{"epoch", e.epoch},
                       {"loss", e.loss},
                       {"loss_dt", e.loss_dt},
                       {"loss_ct", e.loss_ct},
                       {"loss_en", e.loss_en},
                       {"n_ct", e.n_ct},
                       {"acc", score_or_null(e.scores, &metrics::Scores::acc)},
                       {"nmi", score_or_null(e.scores, &metrics::Scores::nmi)},
                       {"ari", score_or_null(e.scores, &metrics::Scores::ari)}});
  }
  return {{"acc", score_or_null(r.final_scores, &metrics::Scores::acc)},
          {"nmi", score_or_null(r.final_scores, &metrics::Scores::nmi)},
          {"ari", score_or_null(r.final_scores, &metrics::Scores::ari)},
          {"history", std::move(history)},
          {"ablation", to_string(r.ablation)},
          {"metadata",
           {{"nmi_normalization", "arithmetic"},
            {"score_scale", "fraction"},
            {"final_epoch_policy", "last"}}}};
}

/// FNV-1a over the bundle files in a fixed order.
inline std::string bundle_checksum(const std::filesystem::path& dir) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char* name :
       {"meta.json", "edges.tsv", "features.tsv", "features.f32le", "labels.tsv"}) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) continue;
    for (const char c : std::string(name)) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
      for (std::streamsize i = 0; i < in.gcount(); ++i)
        h = (h ^ static_cast<unsigned char>(buf[i])) * 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

inline nlohmann::json manifest_json(const TrainConfig& cfg, const std::string& data_dir,
                                    const std::string& checksum, const std::string& started,
                                    const std::string& finished) {
  nlohmann::json resolved = nlohmann::json::object();
  for (const auto& [k, v] : config_entries(cfg)) resolved[k] = v;
  return {{"config", resolved},
          {"seed", cfg.seed},
          {"data", data_dir},
          {"bundle_checksum", checksum},
          {"version", kVersion},
          {"started", started},
          {"finished", finished}};
}

/// Rebuilds the configuration frozen in a manifest.
inline TrainConfig config_from_manifest(const nlohmann::json& m) {
  TrainConfig c;
  try {
    for (const auto& [k, v] : m.at("config").items()) set_config_value(c, k, v.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  c.validate();
  return c;
}

inline void write_f32le(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_f32le(out, m(i, j));
}

/// embedding.f32le plus embedding.json shape sidecar.
inline void write_embedding(const Matrix& z, const std::filesystem::path& dir) {
  write_f32le(z, dir / "embedding.f32le");
  nlohmann::json shape = {{"rows", z.rows()}, {"cols", z.cols()}, {"dtype", "f32le"}};
  std::ofstream(dir / "embedding.json") << shape.dump(2) << "\n";
}

inline void write_labels(const std::vector<int>& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (int l : labels) out << l << "\n";
}

/// One integer per line; error messages name the offending line.
inline std::vector<int> read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw BundleError("missing file: " + path.string());
  std::vector<int> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (detail::blank(line)) continue;
    const auto v = detail::parse_ints(line, 1, path.filename().string() + ":" + std::to_string(lineno));
    if (v[0] < 0) throw BundleError(path.filename().string() + ":" + std::to_string(lineno) + ": negative label");
    out.push_back(static_cast<int>(v[0]));
  }
  return out;
}

}  // namespace ccgl
