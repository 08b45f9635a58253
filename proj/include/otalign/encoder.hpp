#pragma once

#include <cstdint>

#include "otalign/common.hpp"
#include "otalign/graph.hpp"
#include "otalign/ot.hpp"
#include "otalign/rwr.hpp"

namespace otalign {

/// Tensors of the shared two-layer residual perceptron
///   h = relu(F W1 + b1),  E = h + relu(h W2 + b2).
/// Also used for gradients and Adam moments, which share the same shapes.
struct EncoderWeights {
    Matrix w1;  // in_dim x hidden
    Vector b1;  // hidden
    Matrix w2;  // hidden x out (hidden == out)
    Vector b2;  // out

    static EncoderWeights zeros_like(const EncoderWeights& other);

    Index in_dim() const noexcept { return w1.rows(); }
    Index hidden_dim() const noexcept { return w1.cols(); }
    Index out_dim() const noexcept { return w2.cols(); }
    Index parameter_count() const noexcept { return w1.size() + b1.size() + w2.size() + b2.size(); }
    bool all_finite() const;

    /// Flat view helpers, in the order w1, b1, w2, b2 (column-major within each).
    double& at(Index flat);
    double at(Index flat) const;
};

struct EncoderParams {
    EncoderWeights weights;
    EncoderWeights first_moment;
    EncoderWeights second_moment;
    std::int64_t step = 0;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
EncoderParams init_encoder(Index in_dim, std::uint64_t seed, Index hidden = 128, Index out = 128);

Matrix encode(const EncoderWeights& weights, const Matrix& features);

inline Matrix encode(const EncoderParams& params, const FeatureMatrix& features) {
    return encode(params.weights, features.values);
}

struct EmbeddingPair {
    Matrix e1;
    Matrix e2;
};

/// Inner products are clamped to [-kExponentClamp, kExponentClamp] before exp.
inline constexpr double kExponentClamp = 50.0;

/// M = exp(-E1 E2^T), C_i = exp(-E_i E_i^T) masked to the edges of G_i.
CostSet cost_matrices(const EmbeddingPair& embeddings, const Graph& g1, const Graph& g2);

struct LossAndGrad {
    double loss = 0.0;
    ObjectiveTerms terms;
    EncoderWeights grad;
};

/// The shifted FGW objective through encode -> cost_matrices with the plan and
/// shift held fixed, and its exact gradient with respect to every weight.
LossAndGrad loss_and_grad(const EncoderWeights& weights, const Matrix& f1, const Matrix& f2,
                          const Graph& g1, const Graph& g2, const Matrix& plan, SamplingShift shift,
                          double alpha);

/// Objective value only (no backward pass).
ObjectiveTerms encoder_objective(const EncoderWeights& weights, const Matrix& f1, const Matrix& f2,
                                 const Graph& g1, const Graph& g2, const Matrix& plan,
                                 SamplingShift shift, double alpha);

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam update; increments the step counter.
EncoderParams adam_step(EncoderParams params, const EncoderWeights& grads, double lr,
                        const AdamOptions& options = {});

/// Mean Euclidean distance over all cross-network pairs (E1(x), E2(y)).
double mean_pairwise_distance(const EmbeddingPair& embeddings);

}  // namespace otalign
