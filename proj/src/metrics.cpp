#include "otalign/metrics.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace otalign {

std::vector<RankRecord> compute_ranks(const Matrix& plan, const AnchorSet& test, TieRule rule) {
    test.validate(plan.rows(), plan.cols());
    std::vector<RankRecord> ranks;
    ranks.reserve(test.size());
    for (const auto& pair : test.pairs) {
        const double score = plan(pair.source, pair.target);
        Index better = 0;
        for (Index y = 0; y < plan.cols(); ++y) {
            const double other = plan(pair.source, y);
            if (other > score || (rule == TieRule::Pessimistic && y != pair.target && other == score)) {
                ++better;
            }
        }
        ranks.push_back({pair, better + 1});
    }
    return ranks;
}

AlignmentMetrics alignment_metrics(const std::vector<RankRecord>& ranks, const std::vector<int>& ks) {
    if (ranks.empty()) {
        throw Error(ErrorKind::InvalidArgument, "cannot compute metrics over no test pairs");
    }
    AlignmentMetrics m;
    m.count = ranks.size();
    const auto total = static_cast<double>(ranks.size());
    for (int k : ks) {
        if (k < 1) {
            throw Error(ErrorKind::InvalidArgument, "Hits@K needs K >= 1");
        }
        std::size_t hits = 0;
        for (const auto& r : ranks) {
            hits += r.rank <= k ? 1 : 0;
        }
        m.hits[k] = static_cast<double>(hits) / total;
    }
    double reciprocal = 0.0;
    for (const auto& r : ranks) {
        reciprocal += 1.0 / static_cast<double>(r.rank);
    }
    m.mrr = reciprocal / total;
    return m;
}

void write_metrics_text(const AlignmentMetrics& metrics, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    out.precision(10);
    for (const auto& [k, v] : metrics.hits) {
        out << "Hits@" << k << '\t' << v << '\n';
    }
    out << "MRR\t" << metrics.mrr << '\n';
}

void write_metrics_json(const AlignmentMetrics& metrics, const std::filesystem::path& path) {
    nlohmann::json j;
    for (const auto& [k, v] : metrics.hits) {
        j["hits"][std::to_string(k)] = v;
    }
    j["mrr"] = metrics.mrr;
    j["count"] = metrics.count;
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

}  // namespace otalign
