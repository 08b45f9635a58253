#include "otalign/rwr.hpp"

#include <sstream>

namespace otalign {

Vector rwr_vector(const WalkMatrix& w, Index anchor, const RwrOptions& options) {
    const Index n = w.matrix.rows();
    if (!(options.beta > 0.0 && options.beta <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "restart probability must lie in (0, 1]");
    }
    if (!(options.tol > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "rwr tolerance must be positive");
    }
    if (anchor < 0 || anchor >= n) {
        throw Error(ErrorKind::Range, "rwr anchor " + std::to_string(anchor) + " out of range");
    }

    Vector r = Vector::Zero(n);
    r(anchor) = 1.0;
    Vector next(n);
    double residual = 0.0;
    for (int iter = 0; iter < options.max_iter; ++iter) {
        next.noalias() = (1.0 - options.beta) * (w.matrix * r);
        next(anchor) += options.beta;
        residual = (next - r).lpNorm<1>();
        r.swap(next);
        // The map is a (1-beta)-contraction in L1, so the new iterate's residual
        // is bounded by the one just measured.
        if (residual <= options.tol) {
            return r;
        }
    }
    std::ostringstream msg;
    msg << "rwr did not converge for anchor " << anchor << " after " << options.max_iter
        << " iterations (residual " << residual << ")";
    throw Error(ErrorKind::Numerical, msg.str());
}

namespace {

FeatureMatrix assemble(const Graph& g, const std::vector<Index>& anchors, const RwrOptions& options) {
    const WalkMatrix w = walk_matrix(g);
    const auto k = static_cast<Index>(anchors.size());
    FeatureMatrix f;
    f.rwr_columns = k;
    f.values.resize(g.num_nodes(), k + g.attribute_dim());
    for (Index c = 0; c < k; ++c) {
        f.values.col(c) = rwr_vector(w, anchors[static_cast<std::size_t>(c)], options);
    }
    if (g.has_attributes()) {
        f.values.rightCols(g.attribute_dim()) = g.attributes();
    }
    return f;
}

}  // namespace

std::pair<FeatureMatrix, FeatureMatrix> build_features(const Graph& g1, const Graph& g2,
                                                       const AnchorSet& train_anchors,
                                                       const RwrOptions& options) {
    train_anchors.validate(g1.num_nodes(), g2.num_nodes());
    if (g1.attribute_dim() != g2.attribute_dim()) {
        throw Error(ErrorKind::Shape, "graphs have different attribute widths");
    }
    std::vector<Index> sources;
    std::vector<Index> targets;
    for (const auto& p : train_anchors.pairs) {
        sources.push_back(p.source);
        targets.push_back(p.target);
    }
    return {assemble(g1, sources, options), assemble(g2, targets, options)};
}

}  // namespace otalign
