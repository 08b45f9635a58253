#pragma once

#include <utility>

#include "otalign/common.hpp"
#include "otalign/graph.hpp"

namespace otalign {

struct RwrOptions {
    double beta = 0.15;  // restart probability
    double tol = 1e-8;   // L1 fixed-point residual
    int max_iter = 1000;
};

/// Encoder input for one graph: RWR scores for each train anchor (in anchor
/// order) followed by the raw attribute columns.
struct FeatureMatrix {
    Matrix values;
    Index rwr_columns = 0;

    Index rows() const noexcept { return values.rows(); }
    Index cols() const noexcept { return values.cols(); }
};

/// Fixed-point iteration r <- (1-beta) W r + beta e_anchor from r = e_anchor.
/// Throws ErrorKind::Numerical (with the last residual) if the L1 residual does
/// not drop to `tol` within `max_iter` sweeps.
Vector rwr_vector(const WalkMatrix& w, Index anchor, const RwrOptions& options = {});

std::pair<FeatureMatrix, FeatureMatrix> build_features(const Graph& g1, const Graph& g2,
                                                       const AnchorSet& train_anchors,
                                                       const RwrOptions& options = {});

}  // namespace otalign
