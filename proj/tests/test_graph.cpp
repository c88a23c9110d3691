#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "ccgl/graph.hpp"
#include "support/sbm.hpp"
#include "support/tempdir.hpp"

namespace ccgl {
namespace {

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

std::filesystem::path tiny_bundle(const testing::TempDir& tmp) {
  const auto dir = tmp.path() / "tiny";
  std::filesystem::create_directories(dir);
  write(dir / "meta.json", R"({"n":3,"d":2,"k":2,"name":"tiny","features_format":"tsv"})");
  write(dir / "edges.tsv", "0 1\n");
  write(dir / "features.tsv", "1 0\n0 1\n0.5 0.5\n");
  write(dir / "labels.tsv", "0\n1\n1\n");
  return dir;
}

TEST(LoadBundle, MinimalWellFormed) {
  testing::TempDir tmp;
  const auto g = load_bundle(tiny_bundle(tmp));
  EXPECT_EQ(g.n, 3);
  EXPECT_EQ(g.d, 2);
  EXPECT_EQ(g.k, 2);
  ASSERT_EQ(g.num_edges(), 1u);
  EXPECT_EQ(g.edges[0], (Edge{0, 1}));
  ASSERT_TRUE(g.labels.has_value());
  EXPECT_EQ((*g.labels)[2], 1);
  EXPECT_DOUBLE_EQ(g.features(2, 1), 0.5);
}

TEST(LoadBundle, CanonicalizesReversedAndDuplicateEdges) {
  testing::TempDir tmp;
  const auto dir = tiny_bundle(tmp);
  write(dir / "edges.tsv", "1 0\n0 1\n2 2\n\n");
  const auto g = load_bundle(dir);
  ASSERT_EQ(g.num_edges(), 1u);
  EXPECT_EQ(g.edges[0], (Edge{0, 1}));
}

TEST(LoadBundle, DistinctErrors) {
  testing::TempDir tmp;
  const auto dir = tiny_bundle(tmp);

  std::filesystem::remove(dir / "features.tsv");
  try {
    load_bundle(dir);
    FAIL();
  } catch (const BundleError& e) {
    EXPECT_NE(std::string(e.what()).find("missing file"), std::string::npos);
  }
  write(dir / "features.tsv", "1 0\n0 1\n");
  try {
    load_bundle(dir);
    FAIL();
  } catch (const BundleError& e) {
    EXPECT_NE(std::string(e.what()).find("expected n=3"), std::string::npos);
  }
  write(dir / "features.tsv", "1 0\n0 1\nnan 1\n");
  EXPECT_THROW(load_bundle(dir), BundleError);
  write(dir / "features.tsv", "1 0\n0 1\n0 1\n");

  write(dir / "edges.tsv", "0 3\n");
  try {
    load_bundle(dir);
    FAIL();
  } catch (const BundleError& e) {
    EXPECT_NE(std::string(e.what()).find("edges.tsv:1"), std::string::npos);
  }
  write(dir / "edges.tsv", "0 1\n");

  write(dir / "labels.tsv", "0\n5\n1\n");
  try {
    load_bundle(dir);
    FAIL();
  } catch (const BundleError& e) {
    EXPECT_NE(std::string(e.what()).find("labels.tsv:2"), std::string::npos);
  }
}

TEST(LoadBundle, BinaryFeaturesLengthChecked) {
  testing::TempDir tmp;
  const auto dir = tiny_bundle(tmp);
  write(dir / "meta.json", R"({"n":3,"d":2,"k":2,"features_format":"f32le"})");
  write(dir / "features.f32le", std::string(20, '\0'));
  EXPECT_THROW(load_bundle(dir), BundleError);
  write(dir / "features.f32le", std::string(24, '\0'));
  EXPECT_NO_THROW(load_bundle(dir));
}

TEST(SaveBundle, RoundTripIsIdentity) {
  testing::TempDir tmp;
  auto g = testing::make_sbm({.n = 40, .blocks = 3, .p_in = 0.3, .p_out = 0.02, .seed = 9});
  for (auto format : {FeatureFormat::f32le, FeatureFormat::tsv}) {
    const auto dir = tmp.path() / (format == FeatureFormat::f32le ? "bin" : "txt");
    save_bundle(g, dir, format);
    const auto back = load_bundle(dir);
    EXPECT_EQ(back.n, g.n);
    EXPECT_EQ(back.k, g.k);
    EXPECT_EQ(back.edges, g.edges);
    EXPECT_EQ(back.labels, g.labels);
    EXPECT_EQ(back.features, g.features);  // binary features survive float32
  }
}

TEST(NormalizeAdjacency, IsolatedNode) {
  const auto a = normalize_adjacency(1, {});
  EXPECT_DOUBLE_EQ(Matrix(a)(0, 0), 1.0);
}

TEST(NormalizeAdjacency, SingleEdgeAllHalf) {
  const Matrix a(normalize_adjacency(2, {{0, 1}}));
  EXPECT_EQ(a, Matrix::Constant(2, 2, 0.5));
}

TEST(NormalizeAdjacency, StarHubDiagonal) {
  const Matrix a(normalize_adjacency(4, {{0, 1}, {0, 2}, {0, 3}}));
  EXPECT_DOUBLE_EQ(a(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(a(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(a(0, 1), 1.0 / std::sqrt(8.0));
}

TEST(NormalizeAdjacency, BitwiseSymmetricWithSelfLoops) {
  std::mt19937 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 30;
    std::vector<Edge> edges;
    for (int i = 0; i < 60; ++i) {
      const int u = static_cast<int>(gen() % n), v = static_cast<int>(gen() % n);
      edges.push_back({u, v});
    }
    const Matrix a(normalize_adjacency(n, canonicalize_edges(edges)));
    for (int i = 0; i < n; ++i) {
      EXPECT_GT(a(i, i), 0.0);
      for (int j = 0; j < n; ++j) {
        EXPECT_EQ(std::memcmp(&a(i, j), &a(j, i), sizeof(double)), 0);
        EXPECT_TRUE(std::isfinite(a(i, j)));
        EXPECT_GE(a(i, j), 0.0);
      }
    }
  }
}

}  // namespace
}  // namespace ccgl
