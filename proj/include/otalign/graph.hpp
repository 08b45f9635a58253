#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "otalign/common.hpp"

namespace otalign {

/// Undirected, unweighted network with optional dense node attributes.
///
/// The adjacency is stored as a symmetric binary CSR matrix with an empty
/// diagonal. Instances are immutable after construction.
class Graph {
public:
    Graph() = default;

    /// Builds a graph from an undirected edge list. Each pair is stored in both
    /// directions; duplicates and self loops are dropped.
    static Graph from_edges(Index n, const std::vector<std::pair<Index, Index>>& edges,
                            std::optional<Matrix> attributes = std::nullopt);

    /// Wraps an existing adjacency. Throws if it is not square, symmetric,
    /// binary, or has diagonal entries.
    static Graph from_adjacency(SparseMatrix adjacency,
                                std::optional<Matrix> attributes = std::nullopt);

    Index num_nodes() const noexcept { return n_; }
    /// Number of undirected edges.
    Index num_edges() const noexcept { return adjacency_.nonZeros() / 2; }
    const SparseMatrix& adjacency() const noexcept { return adjacency_; }

    bool has_attributes() const noexcept { return attributes_.has_value(); }
    const Matrix& attributes() const;
    Index attribute_dim() const noexcept { return attributes_ ? attributes_->cols() : 0; }

    Index degree(Index node) const;
    bool has_edge(Index a, Index b) const;

    /// Undirected edge list with a < b, in row-major order.
    std::vector<std::pair<Index, Index>> edge_list() const;

    /// Subgraph induced by `nodes` (relabelled 0..k-1 in the given order).
    Graph induced(const std::vector<Index>& nodes) const;

private:
    Index n_ = 0;
    SparseMatrix adjacency_;
    std::optional<Matrix> attributes_;
};

struct AnchorPair {
    Index source = 0;  // node in G1
    Index target = 0;  // node in G2

    friend bool operator==(const AnchorPair&, const AnchorPair&) = default;
};

enum class AnchorRole { All, Train, Test };

/// Known cross-network correspondences.
struct AnchorSet {
    std::vector<AnchorPair> pairs;
    AnchorRole role = AnchorRole::All;

    std::size_t size() const noexcept { return pairs.size(); }
    bool empty() const noexcept { return pairs.empty(); }

    /// Throws if a node appears twice on one side or is out of range.
    void validate(Index n1, Index n2) const;
};

/// W = (D^{-1} A)^T, stored column-compressed-as-rows: row j of `matrix`
/// holds the incoming walk probabilities W(j, i).
struct WalkMatrix {
    SparseMatrix matrix;
};

struct DatasetPaths {
    std::filesystem::path edges1;
    std::filesystem::path edges2;
    std::optional<std::filesystem::path> attrs1;
    std::optional<std::filesystem::path> attrs2;
    std::filesystem::path anchors;
};

struct Dataset {
    Graph g1;
    Graph g2;
    AnchorSet anchors;
};

/// Reads "a b" edge lines (tab or space separated, '#' comments).
std::vector<std::pair<Index, Index>> read_edge_list(const std::filesystem::path& path);

/// Comma-separated dense matrix, one row per line.
Matrix read_attributes(const std::filesystem::path& path);

AnchorSet read_anchors(const std::filesystem::path& path);

/// Node count is the attribute row count when attributes are given, else
/// `declared_n` when given, else max id + 1.
Graph load_graph(const std::filesystem::path& edge_path,
                 const std::optional<std::filesystem::path>& attr_path,
                 std::optional<Index> declared_n = std::nullopt);

Dataset load_dataset(const DatasetPaths& paths);

void write_edge_list(const Graph& g, const std::filesystem::path& path);
void write_attributes(const Matrix& attributes, const std::filesystem::path& path);
void write_anchors(const AnchorSet& anchors, const std::filesystem::path& path);

/// Deterministic shuffle-and-split. |train| = round(train_ratio * |pairs|).
std::pair<AnchorSet, AnchorSet> split_anchors(const AnchorSet& anchors, double train_ratio,
                                              std::uint64_t seed);

WalkMatrix walk_matrix(const Graph& g);

enum class NoiseKind { Structural, Attribute };

/// Flips round(p% * n^2 / 2) distinct upper-triangle adjacency positions
/// (structural) or round(p% * n * d) binary attribute entries (attribute).
Graph inject_noise(const Graph& g, NoiseKind kind, double percent, std::uint64_t seed);

/// Number of positions `inject_noise` flips for the given graph and percent.
std::uint64_t noise_flip_count(const Graph& g, NoiseKind kind, double percent);

}  // namespace otalign
