#include "otalign/encoder.hpp"

#include <cmath>
#include <random>

namespace otalign {

EncoderWeights EncoderWeights::zeros_like(const EncoderWeights& other) {
    return {Matrix::Zero(other.w1.rows(), other.w1.cols()), Vector::Zero(other.b1.size()),
            Matrix::Zero(other.w2.rows(), other.w2.cols()), Vector::Zero(other.b2.size())};
}

bool EncoderWeights::all_finite() const {
    return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
}

double& EncoderWeights::at(Index flat) {
    if (flat < w1.size()) {
        return w1.data()[flat];
    }
    flat -= w1.size();
    if (flat < b1.size()) {
        return b1.data()[flat];
    }
    flat -= b1.size();
    if (flat < w2.size()) {
        return w2.data()[flat];
    }
    flat -= w2.size();
    if (flat < b2.size()) {
        return b2.data()[flat];
    }
    throw Error(ErrorKind::Range, "flat parameter index out of range");
}

double EncoderWeights::at(Index flat) const {
    return const_cast<EncoderWeights*>(this)->at(flat);
}

EncoderParams init_encoder(Index in_dim, std::uint64_t seed, Index hidden, Index out) {
    if (in_dim < 1) {
        throw Error(ErrorKind::InvalidArgument, "encoder input dimension must be at least 1");
    }
    if (hidden != out) {
        throw Error(ErrorKind::InvalidArgument, "residual encoder needs hidden == out");
    }
    std::mt19937_64 rng(seed);
    // 53-bit uniform in [0, 1), independent of the standard library's distributions.
    auto uniform = [&rng](double scale) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        return (2.0 * u - 1.0) * scale;
    };
    EncoderParams params;
    auto& w = params.weights;
    w.w1.resize(in_dim, hidden);
    w.w2.resize(hidden, out);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (Index k = 0; k < w.w1.size(); ++k) {
        w.w1.data()[k] = uniform(s1);
    }
    for (Index k = 0; k < w.w2.size(); ++k) {
        w.w2.data()[k] = uniform(s2);
    }
    w.b1 = Vector::Zero(hidden);
    w.b2 = Vector::Zero(out);
    params.first_moment = EncoderWeights::zeros_like(w);
    params.second_moment = EncoderWeights::zeros_like(w);
    return params;
}

namespace {

struct Forward {
    Matrix pre1;
    Matrix hidden;
    Matrix pre2;
    Matrix out;
};

Forward forward(const EncoderWeights& w, const Matrix& features) {
    if (features.cols() != w.in_dim()) {
        throw Error(ErrorKind::Shape, "feature width " + std::to_string(features.cols()) +
                                          " does not match encoder input " +
                                          std::to_string(w.in_dim()));
    }
    Forward f;
    f.pre1.noalias() = features * w.w1;
    f.pre1.rowwise() += w.b1.transpose();
    f.hidden = f.pre1.cwiseMax(0.0);
    f.pre2.noalias() = f.hidden * w.w2;
    f.pre2.rowwise() += w.b2.transpose();
    f.out = f.hidden + f.pre2.cwiseMax(0.0);
    return f;
}

// Accumulates parameter gradients given dJ/dE for one graph.
void backward(const EncoderWeights& w, const Matrix& features, const Forward& f, const Matrix& d_out,
              EncoderWeights& grad) {
    const Matrix d_pre2 = d_out.cwiseProduct((f.pre2.array() > 0.0).cast<double>().matrix());
    grad.w2.noalias() += f.hidden.transpose() * d_pre2;
    grad.b2 += d_pre2.colwise().sum().transpose();
    Matrix d_hidden = d_out;
    d_hidden.noalias() += d_pre2 * w.w2.transpose();
    const Matrix d_pre1 = d_hidden.cwiseProduct((f.pre1.array() > 0.0).cast<double>().matrix());
    grad.w1.noalias() += features.transpose() * d_pre1;
    grad.b1 += d_pre1.colwise().sum().transpose();
}

double clamp_exponent(double s) {
    return std::clamp(s, -kExponentClamp, kExponentClamp);
}

bool inside_clamp(double s) {
    return s > -kExponentClamp && s < kExponentClamp;
}

SparseMatrix intra_cost(const Matrix& e, const Graph& g) {
    SparseMatrix c = g.adjacency();
    for (Index a = 0; a < c.outerSize(); ++a) {
        for (SparseMatrix::InnerIterator it(c, a); it; ++it) {
            it.valueRef() = std::exp(-clamp_exponent(e.row(a).dot(e.row(it.col()))));
        }
    }
    return c;
}

// dJ/dS_ab for the stored edge entries of one intra-network cost, mapped back
// through the clamped exponential: returns the sparse matrix of dJ/ds_ab with
// s_ab = <E(a), E(b)>. `pair_term(a, b)` is sum_{y,y'} S_n(a,y) C_other(y,y') S_n(b,y').
template <class PairTerm>
SparseMatrix intra_grad(const SparseMatrix& c, const Vector& marg, const Matrix& e, double alpha,
                        PairTerm pair_term) {
    SparseMatrix g = c;
    for (Index a = 0; a < g.outerSize(); ++a) {
        for (SparseMatrix::InnerIterator it(g, a); it; ++it) {
            const Index b = it.col();
            const double cab = it.value();
            const double s = e.row(a).dot(e.row(b));
            const double d_cost = 2.0 * cab * marg(a) * marg(b) - 2.0 * pair_term(a, b);
            it.valueRef() = inside_clamp(s) ? alpha * d_cost * (-cab) : 0.0;
        }
    }
    return g;
}

}  // namespace

Matrix encode(const EncoderWeights& weights, const Matrix& features) {
    return forward(weights, features).out;
}

CostSet cost_matrices(const EmbeddingPair& embeddings, const Graph& g1, const Graph& g2) {
    if (embeddings.e1.cols() != embeddings.e2.cols()) {
        throw Error(ErrorKind::Shape, "embedding widths differ");
    }
    if (embeddings.e1.rows() != g1.num_nodes() || embeddings.e2.rows() != g2.num_nodes()) {
        throw Error(ErrorKind::Shape, "embedding rows do not match graph sizes");
    }
    CostSet costs;
    costs.cross = (-(embeddings.e1 * embeddings.e2.transpose())
                        .array()
                        .max(-kExponentClamp)
                        .min(kExponentClamp))
                      .exp()
                      .matrix();
    costs.intra1 = intra_cost(embeddings.e1, g1);
    costs.intra2 = intra_cost(embeddings.e2, g2);
    return costs;
}

ObjectiveTerms encoder_objective(const EncoderWeights& weights, const Matrix& f1, const Matrix& f2,
                                 const Graph& g1, const Graph& g2, const Matrix& plan,
                                 SamplingShift shift, double alpha) {
    const EmbeddingPair emb{encode(weights, f1), encode(weights, f2)};
    return fgw_objective_terms(cost_matrices(emb, g1, g2), plan, shift, alpha);
}

LossAndGrad loss_and_grad(const EncoderWeights& weights, const Matrix& f1, const Matrix& f2,
                          const Graph& g1, const Graph& g2, const Matrix& plan, SamplingShift shift,
                          double alpha) {
    if (alpha < 0.0 || alpha > 1.0) {
        throw Error(ErrorKind::InvalidArgument, "alpha must lie in [0, 1]");
    }
    const Forward fw1 = forward(weights, f1);
    const Forward fw2 = forward(weights, f2);
    const EmbeddingPair emb{fw1.out, fw2.out};
    const CostSet costs = cost_matrices(emb, g1, g2);

    LossAndGrad out;
    out.terms = fgw_objective_terms(costs, plan, shift, alpha);
    out.loss = out.terms.total;
    if (!std::isfinite(out.loss)) {
        throw Error(ErrorKind::Numerical, "encoder loss is not finite");
    }

    const Matrix shifted = plan.array() - shift.lambda;
    const Matrix& e1 = emb.e1;
    const Matrix& e2 = emb.e2;

    // Wasserstein term through M = exp(-clamp(E1 E2^T)).
    const Matrix inner = e1 * e2.transpose();
    const Matrix d_inner = (-(1.0 - alpha) * shifted.array() * costs.cross.array() *
                            (inner.array() > -kExponentClamp && inner.array() < kExponentClamp)
                                .cast<double>())
                               .matrix();
    Matrix d_e1 = d_inner * e2;
    Matrix d_e2 = d_inner.transpose() * e1;

    if (alpha > 0.0) {
        const Vector row_mass = shifted.rowwise().sum();
        const Vector col_mass = shifted.colwise().sum().transpose();
        const Matrix shifted_t = shifted.transpose();

        // sum_{y,y'} S_n(a,y) C2(y,y') S_n(b,y') = <(C2 S_n^T)(:,a), S_n^T(:,b)>
        const Matrix c2_st = costs.intra2 * shifted_t;  // n2 x n1
        const SparseMatrix grad_s1 = intra_grad(costs.intra1, row_mass, e1, alpha, [&](Index a, Index b) {
            return c2_st.col(a).dot(shifted_t.col(b));
        });
        // sum_{x,x'} S_n(x,a) C1(x,x') S_n(x',b) = <S_n(:,a), (C1 S_n)(:,b)>
        const Matrix c1_s = costs.intra1 * shifted;  // n1 x n2
        const SparseMatrix grad_s2 = intra_grad(costs.intra2, col_mass, e2, alpha, [&](Index a, Index b) {
            return shifted.col(a).dot(c1_s.col(b));
        });
        const SparseMatrix sym1 = SparseMatrix(grad_s1.transpose()) + grad_s1;
        const SparseMatrix sym2 = SparseMatrix(grad_s2.transpose()) + grad_s2;
        d_e1.noalias() += sym1 * e1;
        d_e2.noalias() += sym2 * e2;
    }

    out.grad = EncoderWeights::zeros_like(weights);
    backward(weights, f1, fw1, d_e1, out.grad);
    backward(weights, f2, fw2, d_e2, out.grad);
    return out;
}

EncoderParams adam_step(EncoderParams params, const EncoderWeights& grads, double lr,
                        const AdamOptions& options) {
    if (!grads.all_finite()) {
        throw Error(ErrorKind::Numerical, "adam_step received non-finite gradients");
    }
    params.step += 1;
    const double t = static_cast<double>(params.step);
    const double bias1 = 1.0 - std::pow(options.beta1, t);
    const double bias2 = 1.0 - std::pow(options.beta2, t);

    auto update = [&](auto& value, auto& m, auto& v, const auto& g) {
        m = options.beta1 * m + (1.0 - options.beta1) * g;
        v = options.beta2 * v + (1.0 - options.beta2) * g.cwiseProduct(g);
        value.array() -= lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + options.eps);
    };
    auto& w = params.weights;
    auto& m = params.first_moment;
    auto& v = params.second_moment;
    update(w.w1, m.w1, v.w1, grads.w1);
    update(w.b1, m.b1, v.b1, grads.b1);
    update(w.w2, m.w2, v.w2, grads.w2);
    update(w.b2, m.b2, v.b2, grads.b2);
    return params;
}

double mean_pairwise_distance(const EmbeddingPair& embeddings) {
    const Vector n1 = embeddings.e1.rowwise().squaredNorm();
    const Vector n2 = embeddings.e2.rowwise().squaredNorm();
    Matrix sq = -2.0 * embeddings.e1 * embeddings.e2.transpose();
    sq.colwise() += n1;
    sq.rowwise() += n2.transpose();
    return sq.cwiseMax(0.0).cwiseSqrt().mean();
}

}  // namespace otalign
