#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccgl/binary.hpp"
#include "ccgl/error.hpp"
#include "ccgl/linalg.hpp"

namespace ccgl {

using NodeId = std::int32_t;
using Label = std::int32_t;

struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable attributed graph: canonical undirected edge list, dense node
/// features, and optional evaluation labels.
struct GraphBundle {
  std::string name;
  int n = 0;
  int d = 0;
  int k = 0;
  std::vector<Edge> edges;  // u < v, sorted, unique
  Matrix features;          // n x d
  std::optional<std::vector<Label>> labels;

  std::size_t num_edges() const { return edges.size(); }
};

/// Sorts, orients (u < v) and deduplicates; drops self-loops.
inline std::vector<Edge> canonicalize_edges(std::vector<Edge> edges) {
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (auto e : edges) {
    if (e.u == e.v) continue;
    if (e.u > e.v) std::swap(e.u, e.v);
    out.push_back(e);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Throws BundleError on the first invariant violation.
inline void validate(const GraphBundle& g) {
  if (g.n < 1) throw BundleError("bundle has no nodes");
  if (g.d < 1) throw BundleError("bundle has zero feature dimensions");
  if (g.k < 1) throw BundleError("bundle has k < 1");
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto& e = g.edges[i];
    if (e.u < 0 || e.v >= g.n || !(e.u < e.v))
      throw BundleError("edge " + std::to_string(i) + " (" + std::to_string(e.u) + "," +
                        std::to_string(e.v) + ") is not canonical or out of range");
    if (i > 0 && !(g.edges[i - 1] < e))
      throw BundleError("edge list not sorted/unique at index " + std::to_string(i));
  }
  if (g.features.rows() != g.n || g.features.cols() != g.d)
    throw BundleError("feature matrix is " + std::to_string(g.features.rows()) + "x" +
                      std::to_string(g.features.cols()) + ", expected " + std::to_string(g.n) +
                      "x" + std::to_string(g.d));
  if (!g.features.allFinite()) throw BundleError("feature matrix contains non-finite values");
  if (g.labels) {
    if (static_cast<int>(g.labels->size()) != g.n)
      throw BundleError("labels length " + std::to_string(g.labels->size()) + " != n");
    for (std::size_t i = 0; i < g.labels->size(); ++i) {
      const auto l = (*g.labels)[i];
      if (l < 0 || l >= g.k)
        throw BundleError("label " + std::to_string(l) + " of node " + std::to_string(i) +
                          " outside [0, k)");
    }
  }
}

namespace detail {

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw BundleError("missing file: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

// Parses exactly `count` integers from a line; error messages carry file:line.
inline std::vector<long long> parse_ints(const std::string& line, std::size_t count,
                                         const std::string& where) {
  std::istringstream ss(line);
  std::vector<long long> out;
  std::string tok;
  while (ss >> tok) {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(tok, &pos);
    } catch (const std::exception&) {
      throw BundleError(where + ": not an integer: '" + tok + "'");
    }
    if (pos != tok.size()) throw BundleError(where + ": not an integer: '" + tok + "'");
    out.push_back(v);
  }
  if (out.size() != count)
    throw BundleError(where + ": expected " + std::to_string(count) + " values, got " +
                      std::to_string(out.size()));
  return out;
}

}  // namespace detail

/// Reads a bundle directory (meta.json, edges.tsv, features.{tsv,f32le},
/// optional labels.tsv) and validates it.
inline GraphBundle load_bundle(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw BundleError("bundle directory not found: " + dir.string());

  GraphBundle g;
  std::string features_format;
  {
    const auto text = detail::read_text(dir / "meta.json");
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(text);
      g.n = meta.at("n").get<int>();
      g.d = meta.at("d").get<int>();
      g.k = meta.at("k").get<int>();
      g.name = meta.value("name", dir.filename().string());
      features_format = meta.value("features_format", "tsv");
    } catch (const nlohmann::json::exception& e) {
      throw BundleError("meta.json: " + std::string(e.what()));
    }
    if (g.n < 1 || g.d < 1 || g.k < 1) throw BundleError("meta.json: n, d, k must be positive");
  }

  {
    std::istringstream in(detail::read_text(dir / "edges.tsv"));
    std::string line;
    std::vector<Edge> raw;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
      if (detail::blank(line)) continue;
      const auto where = "edges.tsv:" + std::to_string(lineno);
      const auto ids = detail::parse_ints(line, 2, where);
      for (auto id : ids)
        if (id < 0 || id >= g.n)
          throw BundleError(where + ": node id " + std::to_string(id) + " out of range [0, " +
                            std::to_string(g.n) + ")");
      raw.push_back({static_cast<NodeId>(ids[0]), static_cast<NodeId>(ids[1])});
    }
    g.edges = canonicalize_edges(std::move(raw));
  }

  g.features.resize(g.n, g.d);
  if (features_format == "f32le") {
    const auto bytes = detail::read_text(dir / "features.f32le");
    const auto expected = static_cast<std::size_t>(g.n) * g.d * 4;
    if (bytes.size() != expected)
      throw BundleError("features.f32le: " + std::to_string(bytes.size()) + " bytes, expected " +
                        std::to_string(expected));
    for (std::size_t i = 0; i < static_cast<std::size_t>(g.n) * g.d; ++i) {
      const float f = get_f32le(bytes.data() + 4 * i);
      if (!std::isfinite(f))
        throw BundleError("features.f32le: non-finite value at row " + std::to_string(i / g.d) +
                          " col " + std::to_string(i % g.d));
      g.features(static_cast<Eigen::Index>(i / g.d), static_cast<Eigen::Index>(i % g.d)) = f;
    }
  } else if (features_format == "tsv") {
    std::istringstream in(detail::read_text(dir / "features.tsv"));
    std::string line;
    int row = 0;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
      if (detail::blank(line)) continue;
      const auto where = "features.tsv:" + std::to_string(lineno);
      if (row >= g.n) throw BundleError(where + ": more than n=" + std::to_string(g.n) + " rows");
      std::istringstream ss(line);
      std::string tok;
      int col = 0;
      while (ss >> tok) {
        if (col >= g.d) throw BundleError(where + ": more than d=" + std::to_string(g.d) + " values");
        double v;
        try {
          std::size_t pos = 0;
          v = std::stod(tok, &pos);
          if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          throw BundleError(where + ": not a number: '" + tok + "'");
        }
        if (!std::isfinite(v)) throw BundleError(where + ": non-finite feature value");
        g.features(row, col++) = v;
      }
      if (col != g.d)
        throw BundleError(where + ": " + std::to_string(col) + " values, expected d=" +
                          std::to_string(g.d));
      ++row;
    }
    if (row != g.n)
      throw BundleError("features.tsv: " + std::to_string(row) + " rows, expected n=" +
                        std::to_string(g.n));
  } else {
    throw BundleError("meta.json: unknown features_format '" + features_format + "'");
  }

  if (fs::exists(dir / "labels.tsv")) {
    std::istringstream in(detail::read_text(dir / "labels.tsv"));
    std::string line;
    std::vector<Label> labels;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
      if (detail::blank(line)) continue;
      const auto where = "labels.tsv:" + std::to_string(lineno);
      const auto v = detail::parse_ints(line, 1, where)[0];
      if (v < 0 || v >= g.k)
        throw BundleError(where + ": label " + std::to_string(v) + " outside [0, " +
                          std::to_string(g.k) + ")");
      labels.push_back(static_cast<Label>(v));
    }
    if (static_cast<int>(labels.size()) != g.n)
      throw BundleError("labels.tsv: " + std::to_string(labels.size()) + " labels, expected n=" +
                        std::to_string(g.n));
    g.labels = std::move(labels);
  }

  validate(g);
  return g;
}

enum class FeatureFormat { tsv, f32le };

/// Writes `g` in the canonical bundle layout. f32le storage rounds features to float.
inline void save_bundle(const GraphBundle& g, const std::filesystem::path& dir,
                        FeatureFormat format = FeatureFormat::f32le) {
  validate(g);
  std::filesystem::create_directories(dir);
  nlohmann::json meta = {{"n", g.n},
                         {"d", g.d},
                         {"k", g.k},
                         {"name", g.name},
                         {"features_format", format == FeatureFormat::f32le ? "f32le" : "tsv"}};
  std::ofstream(dir / "meta.json") << meta.dump(2) << "\n";
  {
    std::ofstream out(dir / "edges.tsv");
    for (const auto& e : g.edges) out << e.u << "\t" << e.v << "\n";
  }
  if (format == FeatureFormat::f32le) {
    std::ofstream out(dir / "features.f32le", std::ios::binary);
    for (Eigen::Index i = 0; i < g.features.rows(); ++i)
      for (Eigen::Index j = 0; j < g.features.cols(); ++j) put_f32le(out, g.features(i, j));
  } else {
    std::ofstream out(dir / "features.tsv");
    out.precision(17);
    for (Eigen::Index i = 0; i < g.features.rows(); ++i) {
      for (Eigen::Index j = 0; j < g.features.cols(); ++j) {
        if (j) out << "\t";
        out << g.features(i, j);
      }
      out << "\n";
    }
  }
  if (g.labels) {
    std::ofstream out(dir / "labels.tsv");
    for (auto l : *g.labels) out << l << "\n";
  } else {
    std::filesystem::remove(dir / "labels.tsv");
  }
}

/// Renormalized propagation operator D^{-1/2}(A + I)D^{-1/2} for an edge list
/// over n nodes.
inline SparseMatrix normalize_adjacency(int n, const std::vector<Edge>& edges) {
  std::vector<double> degree(static_cast<std::size_t>(n), 1.0);
  for (const auto& e : edges) {
    degree[e.u] += 1.0;
    degree[e.v] += 1.0;
  }
  std::vector<Eigen::Triplet<double, int>> trips;
  trips.reserve(static_cast<std::size_t>(n) + 2 * edges.size());
  for (int i = 0; i < n; ++i) trips.emplace_back(i, i, 1.0 / degree[i]);
  for (const auto& e : edges) {
    // product is commutative in IEEE arithmetic, so (u,v) and (v,u) match bitwise
    const double w = 1.0 / std::sqrt(degree[e.u] * degree[e.v]);
    trips.emplace_back(e.u, e.v, w);
    trips.emplace_back(e.v, e.u, w);
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  return a;
}

inline SparseMatrix normalize_adjacency(const GraphBundle& g) {
  return normalize_adjacency(g.n, g.edges);
}

}  // namespace ccgl
