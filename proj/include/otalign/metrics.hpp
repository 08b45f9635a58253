#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "otalign/common.hpp"
#include "otalign/graph.hpp"

namespace otalign {

struct RankRecord {
    AnchorPair pair;
    Index rank = 1;
};

enum class TieRule {
    /// 1 + #{y' : S(x,y') > S(x,y)}; ties do not penalize.
    Competition,
    /// 1 + #{y' != y : S(x,y') >= S(x,y)}; every tie counts against the pair.
    Pessimistic,
};

std::vector<RankRecord> compute_ranks(const Matrix& plan, const AnchorSet& test,
                                      TieRule rule = TieRule::Competition);

struct AlignmentMetrics {
    std::map<int, double> hits;  // K -> Hits@K
    double mrr = 0.0;
    std::size_t count = 0;
};

AlignmentMetrics alignment_metrics(const std::vector<RankRecord>& ranks, const std::vector<int>& ks);

inline AlignmentMetrics evaluate_plan(const Matrix& plan, const AnchorSet& test,
                                      const std::vector<int>& ks,
                                      TieRule rule = TieRule::Competition) {
    return alignment_metrics(compute_ranks(plan, test, rule), ks);
}

/// "Hits@K<TAB>value" lines followed by "MRR<TAB>value".
void write_metrics_text(const AlignmentMetrics& metrics, const std::filesystem::path& path);
void write_metrics_json(const AlignmentMetrics& metrics, const std::filesystem::path& path);

}  // namespace otalign
