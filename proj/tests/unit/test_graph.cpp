#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "otalign/graph.hpp"
#include "oracles.hpp"

namespace otalign {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("otalign_graph_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& contents) {
        const auto p = dir_ / name;
        std::ofstream(p) << contents;
        return p;
    }

    fs::path dir_;
};

TEST(Graph, SingleEdgeIsStoredBothWays) {
    const Graph g = Graph::from_edges(2, {{0, 1}});
    EXPECT_EQ(g.num_edges(), 1);
    EXPECT_EQ(g.adjacency().coeff(0, 1), 1.0);
    EXPECT_EQ(g.adjacency().coeff(1, 0), 1.0);
    EXPECT_EQ(g.adjacency().nonZeros(), 2);
}

TEST(Graph, DuplicatesCollapseAndSelfLoopsDrop) {
    const Graph g = Graph::from_edges(3, {{0, 1}, {0, 1}, {1, 0}, {2, 2}});
    EXPECT_EQ(g.num_edges(), 1);
    EXPECT_EQ(g.adjacency().coeff(0, 1), 1.0);
    EXPECT_EQ(g.adjacency().coeff(2, 2), 0.0);
}

TEST(Graph, OutOfRangeEdgeIsRangeError) {
    try {
        Graph::from_edges(2, {{0, 2}});
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Range);
    }
}

TEST(Graph, FromAdjacencyRejectsAsymmetric) {
    SparseMatrix a(2, 2);
    a.insert(0, 1) = 1.0;
    a.makeCompressed();
    EXPECT_THROW(Graph::from_adjacency(a), Error);
}

TEST(Graph, AttributeRowMismatchIsShapeError) {
    try {
        Graph::from_edges(3, {{0, 1}}, Matrix::Zero(2, 4));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Shape);
    }
}

TEST(Graph, InducedSubgraphKeepsInternalEdges) {
    const Graph g = Graph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
    const Graph sub = g.induced({1, 2, 3});
    EXPECT_EQ(sub.num_nodes(), 3);
    EXPECT_EQ(sub.num_edges(), 2);
    EXPECT_TRUE(sub.has_edge(0, 1));
    EXPECT_TRUE(sub.has_edge(1, 2));
    EXPECT_FALSE(sub.has_edge(0, 2));
}

TEST_F(TempDir, LoadDatasetParsesFiles) {
    const auto e1 = write("e1.txt", "# comment\n0\t1\n1 2\n0 1\n");
    const auto e2 = write("e2.txt", "0 1\n");
    const auto a1 = write("a1.csv", "1,0\n0,1\n1,1\n");
    const auto a2 = write("a2.csv", "0,0\n1,0\n");
    const auto an = write("anchors.txt", "0 1\n2 0\n");
    const Dataset d = load_dataset({e1, e2, a1, a2, an});
    EXPECT_EQ(d.g1.num_nodes(), 3);
    EXPECT_EQ(d.g1.num_edges(), 2);
    EXPECT_EQ(d.g2.num_nodes(), 2);
    EXPECT_EQ(d.g1.attribute_dim(), 2);
    ASSERT_EQ(d.anchors.size(), 2u);
    EXPECT_EQ(d.anchors.pairs[1], (AnchorPair{2, 0}));
}

TEST_F(TempDir, MalformedLineReportsLineNumber) {
    const auto e1 = write("bad.txt", "0 1\n1 x\n");
    try {
        read_edge_list(e1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
        EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
    }
}

TEST_F(TempDir, NodeIdBeyondAttributeRowsIsRangeError) {
    const auto e1 = write("e.txt", "0 5\n");
    const auto a1 = write("a.csv", "1\n0\n");
    try {
        load_graph(e1, a1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Range);
    }
}

TEST_F(TempDir, RaggedAttributesAreShapeError) {
    const auto a1 = write("a.csv", "1,0\n0\n");
    try {
        read_attributes(a1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Shape);
    }
}

TEST_F(TempDir, EdgeListRoundTrip) {
    std::mt19937_64 rng(3);
    const Graph g = oracle::random_graph(12, 0.3, rng);
    const auto p = dir_ / "rt.txt";
    write_edge_list(g, p);
    const Graph back = load_graph(p, std::nullopt, g.num_nodes());
    EXPECT_EQ(back.edge_list(), g.edge_list());
}

AnchorSet identity_anchors(Index n) {
    AnchorSet a;
    for (Index i = 0; i < n; ++i) {
        a.pairs.push_back({i, i});
    }
    return a;
}

TEST(SplitAnchors, TenPairsGiveTwoAndEight) {
    const auto [train, test] = split_anchors(identity_anchors(10), 0.2, 7);
    EXPECT_EQ(train.size(), 2u);
    EXPECT_EQ(test.size(), 8u);
    EXPECT_EQ(train.role, AnchorRole::Train);
    EXPECT_EQ(test.role, AnchorRole::Test);
}

TEST(SplitAnchors, RoundsLikeTheHandArithmetic) {
    const auto [train, test] = split_anchors(identity_anchors(1609), 0.2, 1);
    EXPECT_EQ(train.size(), 322u);  // 0.2 * 1609 = 321.8
    EXPECT_EQ(test.size(), 1287u);
}

TEST(SplitAnchors, DeterministicDisjointAndCovering) {
    const AnchorSet all = identity_anchors(50);
    const auto a = split_anchors(all, 0.3, 99);
    const auto b = split_anchors(all, 0.3, 99);
    EXPECT_EQ(a.first.pairs, b.first.pairs);
    EXPECT_EQ(a.second.pairs, b.second.pairs);
    std::set<Index> seen;
    for (const auto& p : a.first.pairs) seen.insert(p.source);
    for (const auto& p : a.second.pairs) EXPECT_TRUE(seen.insert(p.source).second);
    EXPECT_EQ(seen.size(), 50u);
    const auto c = split_anchors(all, 0.3, 100);
    EXPECT_NE(a.first.pairs, c.first.pairs);
}

TEST(SplitAnchors, EmptyIsAnError) { EXPECT_THROW(split_anchors(AnchorSet{}, 0.2, 1), Error); }

TEST(WalkMatrix, PathGraphSwapsMass) {
    const Matrix w(walk_matrix(Graph::from_edges(2, {{0, 1}})).matrix);
    Matrix expected(2, 2);
    expected << 0, 1, 1, 0;
    EXPECT_EQ(w, expected);
}

TEST(WalkMatrix, StarCenterColumn) {
    const Matrix w(walk_matrix(Graph::from_edges(3, {{0, 1}, {0, 2}})).matrix);
    EXPECT_DOUBLE_EQ(w(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(w(1, 0), 0.5);
    EXPECT_DOUBLE_EQ(w(2, 0), 0.5);
    EXPECT_DOUBLE_EQ(w(0, 1), 1.0);
}

TEST(WalkMatrix, IsolatedNodeColumnIsZero) {
    const Matrix w(walk_matrix(Graph::from_edges(3, {{0, 1}})).matrix);
    EXPECT_EQ(w.col(2).cwiseAbs().sum(), 0.0);
    EXPECT_EQ(w.row(2).cwiseAbs().sum(), 0.0);
}

TEST(WalkMatrix, ColumnsSumToOneOrZero) {
    std::mt19937_64 rng(11);
    const Graph g = oracle::random_graph(30, 0.1, rng);
    const Matrix w(walk_matrix(g).matrix);
    for (Index i = 0; i < g.num_nodes(); ++i) {
        const double expected = g.degree(i) > 0 ? 1.0 : 0.0;
        EXPECT_NEAR(w.col(i).sum(), expected, 1e-15);
        EXPECT_GE(w.col(i).minCoeff(), 0.0);
    }
}

TEST(Noise, ZeroPercentIsIdentity) {
    std::mt19937_64 rng(5);
    const Graph g = oracle::random_graph(20, 0.2, rng);
    EXPECT_EQ(inject_noise(g, NoiseKind::Structural, 0.0, 1).edge_list(), g.edge_list());
}

TEST(Noise, SingleFlipOnEmptyGraph) {
    const Graph g = Graph::from_edges(4, {});
    // round(p/100 * 16 / 2) = 1 for p = 12.5
    EXPECT_EQ(noise_flip_count(g, NoiseKind::Structural, 12.5), 1u);
    const Graph noisy = inject_noise(g, NoiseKind::Structural, 12.5, 3);
    EXPECT_EQ(noisy.num_edges(), 1);
    const Matrix a(noisy.adjacency());
    EXPECT_EQ(a, a.transpose());
    EXPECT_EQ(a.diagonal().sum(), 0.0);
}

TEST(Noise, StructuralFlipsExactCountAndIsDeterministic) {
    std::mt19937_64 rng(8);
    const Graph g = oracle::random_graph(40, 0.15, rng);
    const double p = 10.0;
    const auto flips = noise_flip_count(g, NoiseKind::Structural, p);
    EXPECT_EQ(flips, 80u);  // round(0.1 * 1600 / 2)
    const Graph a = inject_noise(g, NoiseKind::Structural, p, 42);
    const Graph b = inject_noise(g, NoiseKind::Structural, p, 42);
    EXPECT_EQ(a.edge_list(), b.edge_list());
    const Matrix diff = (Matrix(a.adjacency()) - Matrix(g.adjacency())).cwiseAbs();
    EXPECT_EQ(diff.sum(), 2.0 * static_cast<double>(flips));
    // Flipping the same positions again restores the original graph.
    const Graph back = inject_noise(a, NoiseKind::Structural, p, 42);
    EXPECT_EQ(back.edge_list(), g.edge_list());
}

TEST(Noise, FlipCountIsClampedToAvailablePairs) {
    const Graph g = Graph::from_edges(3, {});
    EXPECT_EQ(noise_flip_count(g, NoiseKind::Structural, 100.0), 3u);
}

TEST(Noise, AttributeTogglesBinaryEntries) {
    Matrix x = Matrix::Zero(10, 5);
    x(0, 0) = 1.0;
    const Graph g = Graph::from_edges(10, {}, x);
    const auto flips = noise_flip_count(g, NoiseKind::Attribute, 20.0);
    EXPECT_EQ(flips, 10u);
    const Graph noisy = inject_noise(g, NoiseKind::Attribute, 20.0, 9);
    const Matrix d = (noisy.attributes() - x).cwiseAbs();
    EXPECT_EQ(d.sum(), 10.0);
    EXPECT_TRUE((noisy.attributes().array() == 0.0 || noisy.attributes().array() == 1.0).all());
}

TEST(Noise, AttributeNoiseOnPlainGraphIsAnError) {
    EXPECT_THROW(inject_noise(Graph::from_edges(3, {}), NoiseKind::Attribute, 5.0, 1), Error);
}

}  // namespace
}  // namespace otalign
