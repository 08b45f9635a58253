#include "otalign/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>

namespace otalign {

namespace {

std::string location(const std::filesystem::path& path, std::size_t line_no) {
    return path.string() + ":" + std::to_string(line_no);
}

std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    return in;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    out.precision(17);
    return out;
}

bool is_blank_or_comment(const std::string& line) {
    auto pos = line.find_first_not_of(" \t\r");
    return pos == std::string::npos || line[pos] == '#';
}

// Parses exactly two non-negative integer ids separated by tabs/spaces.
std::pair<Index, Index> parse_id_pair(const std::string& line, const std::filesystem::path& path,
                                      std::size_t line_no) {
    std::istringstream ss(line);
    long long a = 0;
    long long b = 0;
    std::string rest;
    if (!(ss >> a >> b) || (ss >> rest)) {
        throw Error(ErrorKind::Parse, "malformed id pair at " + location(path, line_no));
    }
    if (a < 0 || b < 0) {
        throw Error(ErrorKind::Range, "negative node id at " + location(path, line_no));
    }
    return {static_cast<Index>(a), static_cast<Index>(b)};
}

void check_attribute_rows(const std::optional<Matrix>& attributes, Index n) {
    if (attributes && attributes->rows() != n) {
        throw Error(ErrorKind::Shape, "attribute matrix has " + std::to_string(attributes->rows()) +
                                          " rows, graph has " + std::to_string(n) + " nodes");
    }
}

}  // namespace

Graph Graph::from_edges(Index n, const std::vector<std::pair<Index, Index>>& edges,
                        std::optional<Matrix> attributes) {
    if (n < 0) {
        throw Error(ErrorKind::InvalidArgument, "negative node count");
    }
    std::vector<Triplet> triplets;
    triplets.reserve(edges.size() * 2);
    for (const auto& [a, b] : edges) {
        if (a < 0 || b < 0 || a >= n || b >= n) {
            throw Error(ErrorKind::Range, "edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                              ") outside node range [0, " + std::to_string(n) + ")");
        }
        if (a == b) {
            continue;
        }
        triplets.emplace_back(a, b, 1.0);
        triplets.emplace_back(b, a, 1.0);
    }
    SparseMatrix adjacency(n, n);
    // Duplicates collapse to a single binary entry.
    adjacency.setFromTriplets(triplets.begin(), triplets.end(), [](double, double) { return 1.0; });
    adjacency.makeCompressed();

    check_attribute_rows(attributes, n);
    Graph g;
    g.n_ = n;
    g.adjacency_ = std::move(adjacency);
    g.attributes_ = std::move(attributes);
    return g;
}

Graph Graph::from_adjacency(SparseMatrix adjacency, std::optional<Matrix> attributes) {
    if (adjacency.rows() != adjacency.cols()) {
        throw Error(ErrorKind::Shape, "adjacency must be square");
    }
    adjacency.prune(0.0);
    adjacency.makeCompressed();
    const Index n = adjacency.rows();
    for (Index i = 0; i < n; ++i) {
        for (SparseMatrix::InnerIterator it(adjacency, i); it; ++it) {
            if (it.value() != 1.0) {
                throw Error(ErrorKind::InvalidArgument, "adjacency must be binary");
            }
            if (it.col() == i) {
                throw Error(ErrorKind::InvalidArgument, "adjacency must have an empty diagonal");
            }
        }
    }
    const SparseMatrix transposed = adjacency.transpose();
    const SparseMatrix asymmetry = adjacency - transposed;
    if (asymmetry.norm() != 0.0) {
        throw Error(ErrorKind::InvalidArgument, "adjacency must be symmetric");
    }
    check_attribute_rows(attributes, n);
    Graph g;
    g.n_ = n;
    g.adjacency_ = std::move(adjacency);
    g.attributes_ = std::move(attributes);
    return g;
}

const Matrix& Graph::attributes() const {
    if (!attributes_) {
        throw Error(ErrorKind::InvalidArgument, "graph has no attributes");
    }
    return *attributes_;
}

Index Graph::degree(Index node) const {
    return adjacency_.outerIndexPtr()[node + 1] - adjacency_.outerIndexPtr()[node];
}

bool Graph::has_edge(Index a, Index b) const {
    const auto* begin = adjacency_.innerIndexPtr() + adjacency_.outerIndexPtr()[a];
    const auto* end = adjacency_.innerIndexPtr() + adjacency_.outerIndexPtr()[a + 1];
    return std::binary_search(begin, end, static_cast<SparseMatrix::StorageIndex>(b));
}

std::vector<std::pair<Index, Index>> Graph::edge_list() const {
    std::vector<std::pair<Index, Index>> edges;
    edges.reserve(static_cast<std::size_t>(num_edges()));
    for (Index i = 0; i < n_; ++i) {
        for (SparseMatrix::InnerIterator it(adjacency_, i); it; ++it) {
            if (it.col() > i) {
                edges.emplace_back(i, it.col());
            }
        }
    }
    return edges;
}

Graph Graph::induced(const std::vector<Index>& nodes) const {
    std::vector<Index> relabel(static_cast<std::size_t>(n_), -1);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        relabel[static_cast<std::size_t>(nodes[k])] = static_cast<Index>(k);
    }
    std::vector<std::pair<Index, Index>> edges;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        for (SparseMatrix::InnerIterator it(adjacency_, nodes[k]); it; ++it) {
            const Index other = relabel[static_cast<std::size_t>(it.col())];
            if (other > static_cast<Index>(k)) {
                edges.emplace_back(static_cast<Index>(k), other);
            }
        }
    }
    std::optional<Matrix> attrs;
    if (attributes_) {
        attrs = Matrix(static_cast<Index>(nodes.size()), attributes_->cols());
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            attrs->row(static_cast<Index>(k)) = attributes_->row(nodes[k]);
        }
    }
    return from_edges(static_cast<Index>(nodes.size()), edges, std::move(attrs));
}

void AnchorSet::validate(Index n1, Index n2) const {
    std::unordered_set<Index> seen_source;
    std::unordered_set<Index> seen_target;
    for (const auto& p : pairs) {
        if (p.source < 0 || p.source >= n1 || p.target < 0 || p.target >= n2) {
            throw Error(ErrorKind::Range, "anchor (" + std::to_string(p.source) + ", " +
                                              std::to_string(p.target) + ") outside graph ranges");
        }
        if (!seen_source.insert(p.source).second) {
            throw Error(ErrorKind::InvalidArgument,
                        "node " + std::to_string(p.source) + " appears twice in G1 anchors");
        }
        if (!seen_target.insert(p.target).second) {
            throw Error(ErrorKind::InvalidArgument,
                        "node " + std::to_string(p.target) + " appears twice in G2 anchors");
        }
    }
}

std::vector<std::pair<Index, Index>> read_edge_list(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    std::vector<std::pair<Index, Index>> edges;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank_or_comment(line)) {
            continue;
        }
        edges.push_back(parse_id_pair(line, path, line_no));
    }
    return edges;
}

Matrix read_attributes(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank_or_comment(line)) {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t\r", used) != std::string::npos) {
                    throw std::invalid_argument("trailing characters");
                }
            } catch (const std::exception&) {
                throw Error(ErrorKind::Parse, "malformed attribute value '" + cell + "' at " +
                                                  location(path, line_no));
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw Error(ErrorKind::Shape, "attribute row width " + std::to_string(row.size()) +
                                              " differs from " + std::to_string(rows.front().size()) +
                                              " at " + location(path, line_no));
        }
        rows.push_back(std::move(row));
    }
    const Index width = rows.empty() ? 0 : static_cast<Index>(rows.front().size());
    Matrix m(static_cast<Index>(rows.size()), width);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < width; ++j) {
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return m;
}

AnchorSet read_anchors(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    AnchorSet anchors;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank_or_comment(line)) {
            continue;
        }
        auto [a, b] = parse_id_pair(line, path, line_no);
        anchors.pairs.push_back({a, b});
    }
    return anchors;
}

Graph load_graph(const std::filesystem::path& edge_path,
                 const std::optional<std::filesystem::path>& attr_path,
                 std::optional<Index> declared_n) {
    auto edges = read_edge_list(edge_path);
    std::optional<Matrix> attributes;
    if (attr_path) {
        attributes = read_attributes(*attr_path);
        if (declared_n && *declared_n != attributes->rows()) {
            throw Error(ErrorKind::Shape, "attribute file " + attr_path->string() + " has " +
                                              std::to_string(attributes->rows()) + " rows, expected " +
                                              std::to_string(*declared_n));
        }
        declared_n = attributes->rows();
    }
    Index n = 0;
    if (declared_n) {
        n = *declared_n;
    } else {
        for (const auto& [a, b] : edges) {
            n = std::max({n, a + 1, b + 1});
        }
    }
    for (const auto& [a, b] : edges) {
        if (a >= n || b >= n) {
            throw Error(ErrorKind::Range, "node id " + std::to_string(std::max(a, b)) + " in " +
                                              edge_path.string() + " exceeds node count " +
                                              std::to_string(n));
        }
    }
    return Graph::from_edges(n, edges, std::move(attributes));
}

Dataset load_dataset(const DatasetPaths& paths) {
    Dataset data;
    data.g1 = load_graph(paths.edges1, paths.attrs1);
    data.g2 = load_graph(paths.edges2, paths.attrs2);
    if (data.g1.has_attributes() != data.g2.has_attributes() ||
        data.g1.attribute_dim() != data.g2.attribute_dim()) {
        throw Error(ErrorKind::Shape, "both graphs must carry attributes of the same width");
    }
    data.anchors = read_anchors(paths.anchors);
    data.anchors.validate(data.g1.num_nodes(), data.g2.num_nodes());
    return data;
}

void write_edge_list(const Graph& g, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    for (const auto& [a, b] : g.edge_list()) {
        out << a << '\t' << b << '\n';
    }
}

void write_attributes(const Matrix& attributes, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    for (Index i = 0; i < attributes.rows(); ++i) {
        for (Index j = 0; j < attributes.cols(); ++j) {
            if (j > 0) {
                out << ',';
            }
            out << attributes(i, j);
        }
        out << '\n';
    }
}

void write_anchors(const AnchorSet& anchors, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    for (const auto& p : anchors.pairs) {
        out << p.source << '\t' << p.target << '\n';
    }
}

std::pair<AnchorSet, AnchorSet> split_anchors(const AnchorSet& anchors, double train_ratio,
                                              std::uint64_t seed) {
    if (anchors.empty()) {
        throw Error(ErrorKind::InvalidArgument, "cannot split an empty anchor set");
    }
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "train_ratio must lie in (0, 1)");
    }
    std::vector<std::size_t> order(anchors.size());
    std::iota(order.begin(), order.end(), 0);
    // Explicit Fisher-Yates so the permutation does not depend on the
    // standard library's shuffle implementation.
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    const auto n_train =
        static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(anchors.size())));

    AnchorSet train{{}, AnchorRole::Train};
    AnchorSet test{{}, AnchorRole::Test};
    for (std::size_t k = 0; k < order.size(); ++k) {
        (k < n_train ? train : test).pairs.push_back(anchors.pairs[order[k]]);
    }
    return {std::move(train), std::move(test)};
}

WalkMatrix walk_matrix(const Graph& g) {
    const auto& a = g.adjacency();
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(a.nonZeros()));
    for (Index i = 0; i < g.num_nodes(); ++i) {
        const auto deg = static_cast<double>(g.degree(i));
        for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
            // W(j, i) = A(i, j) / deg(i)
            triplets.emplace_back(it.col(), i, it.value() / deg);
        }
    }
    WalkMatrix w;
    w.matrix.resize(g.num_nodes(), g.num_nodes());
    w.matrix.setFromTriplets(triplets.begin(), triplets.end());
    w.matrix.makeCompressed();
    return w;
}

std::uint64_t noise_flip_count(const Graph& g, NoiseKind kind, double percent) {
    if (percent < 0.0 || percent > 100.0) {
        throw Error(ErrorKind::InvalidArgument, "noise percent must lie in [0, 100]");
    }
    const auto n = static_cast<double>(g.num_nodes());
    if (kind == NoiseKind::Structural) {
        const auto upper = static_cast<std::uint64_t>(g.num_nodes()) *
                           static_cast<std::uint64_t>(std::max<Index>(g.num_nodes() - 1, 0)) / 2;
        const auto wanted = static_cast<std::uint64_t>(std::llround(percent / 100.0 * n * n / 2.0));
        return std::min(wanted, upper);
    }
    const auto d = static_cast<double>(g.attribute_dim());
    return static_cast<std::uint64_t>(std::llround(percent / 100.0 * n * d));
}

namespace {

// Floyd's algorithm: `count` distinct values from [0, universe).
std::vector<std::uint64_t> sample_distinct(std::uint64_t universe, std::uint64_t count,
                                           std::mt19937_64& rng) {
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t j = universe - count; j < universe; ++j) {
        const std::uint64_t t = rng() % (j + 1);
        if (!chosen.insert(t).second) {
            chosen.insert(j);
        }
    }
    std::vector<std::uint64_t> out(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

Graph inject_noise(const Graph& g, NoiseKind kind, double percent, std::uint64_t seed) {
    const std::uint64_t flips = noise_flip_count(g, kind, percent);
    std::mt19937_64 rng(seed);

    if (kind == NoiseKind::Attribute) {
        if (!g.has_attributes()) {
            throw Error(ErrorKind::InvalidArgument, "attribute noise requires node attributes");
        }
        Matrix attrs = g.attributes();
        if (((attrs.array() != 0.0) && (attrs.array() != 1.0)).any()) {
            throw Error(ErrorKind::InvalidArgument, "attribute noise requires binary attributes");
        }
        const auto d = static_cast<std::uint64_t>(attrs.cols());
        const auto universe = static_cast<std::uint64_t>(attrs.rows()) * d;
        for (std::uint64_t pos : sample_distinct(universe, flips, rng)) {
            double& v = attrs(static_cast<Index>(pos / d), static_cast<Index>(pos % d));
            v = 1.0 - v;
        }
        return Graph::from_adjacency(g.adjacency(), std::move(attrs));
    }

    const Index n = g.num_nodes();
    const auto upper = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(std::max<Index>(n - 1, 0)) / 2;
    // Row i of the strict upper triangle starts at offset i*n - i*(i+1)/2.
    auto row_start = [n](Index i) {
        const auto ii = static_cast<std::uint64_t>(i);
        return ii * static_cast<std::uint64_t>(n) - ii * (ii + 1) / 2;
    };
    std::vector<std::pair<Index, Index>> toggles;
    toggles.reserve(static_cast<std::size_t>(flips));
    Index row = 0;
    for (std::uint64_t pos : sample_distinct(upper, flips, rng)) {
        while (row + 1 < n && row_start(row + 1) <= pos) {
            ++row;
        }
        const Index col = row + 1 + static_cast<Index>(pos - row_start(row));
        toggles.emplace_back(row, col);
    }

    std::vector<std::pair<Index, Index>> edges;
    std::size_t t = 0;
    auto existing = g.edge_list();
    // Both lists are sorted lexicographically; merge them, keeping the symmetric difference.
    for (const auto& e : existing) {
        while (t < toggles.size() && toggles[t] < e) {
            edges.push_back(toggles[t++]);
        }
        if (t < toggles.size() && toggles[t] == e) {
            ++t;
            continue;
        }
        edges.push_back(e);
    }
    while (t < toggles.size()) {
        edges.push_back(toggles[t++]);
    }
    std::optional<Matrix> attrs;
    if (g.has_attributes()) {
        attrs = g.attributes();
    }
    return Graph::from_edges(n, edges, std::move(attrs));
}

}  // namespace otalign
