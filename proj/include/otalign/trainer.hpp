#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "otalign/encoder.hpp"
#include "otalign/graph.hpp"
#include "otalign/metrics.hpp"
#include "otalign/ot.hpp"
#include "otalign/rwr.hpp"

namespace otalign {

enum class TrainMode {
    Full,       // alternating OT / lambda / encoder updates
    FixedCost,  // costs from raw [R||X] features, encoder never trained
    Collapse,   // lambda frozen at 0
};

const char* to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& name);

struct TrainConfig {
    double alpha = 0.75;
    double beta = 0.15;
    double gamma_p = 1e-2;
    double lr = 1e-4;
    int epochs = 50;       // K
    int inner_steps = 20;  // encoder updates per alternating iteration
    int prox_iters = 10;   // T
    int sinkhorn_iters = 50;  // N
    double sinkhorn_tol = 1e-6;
    double rwr_tol = 1e-8;
    int rwr_max_iter = 1000;
    Index hidden = 128;
    /// Nodes sampled per graph for each encoder step; 0 means full batch.
    Index batch_size = 0;
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::Full;
    /// Relative slack for the end-of-iteration monotonicity record.
    double monotone_rel_slack = 1e-6;
    /// Reject an encoder step that raises the objective.
    bool guard_encoder_steps = true;
    std::optional<std::filesystem::path> trace_dir;

    void validate() const;
    RwrOptions rwr_options() const { return {beta, rwr_tol, rwr_max_iter}; }
    ProximalOptions proximal_options() const;
};

/// Reductions of the quadratic in lambda:
/// J(lambda) = const - lambda ((1-a) K1 + a K2) + lambda^2 a K3.
struct LambdaTerms {
    double k1 = 0.0;  // sum M
    double k2 = 0.0;  // sum d_e (S(x,y) + S(x',y'))
    double k3 = 0.0;  // sum d_e
};

LambdaTerms lambda_terms(const CostSet& costs, const Matrix& plan);

/// Minimizer of the objective in lambda for fixed plan and costs. Throws
/// ErrorKind::Numerical when alpha == 0 or K3 == 0 (no unique minimizer; keep
/// the previous lambda).
double lambda_closed_form(const CostSet& costs, const TransportPlan& plan, double alpha);

struct EpochRecord {
    int epoch = 0;
    double lambda_used = 0.0;     // lambda^(k)
    double objective_after_ot = 0.0;
    double lambda_next = 0.0;     // lambda^(k+1)
    double objective_after_lambda = 0.0;
    double objective_after_encoder = 0.0;
    double mean_embedding_distance = 0.0;  // E^(k), before this epoch's encoder steps
    int rejected_encoder_steps = 0;
    double seconds = 0.0;
    bool monotone = true;
    std::optional<AlignmentMetrics> metrics;
};

struct TrainHistory {
    double initial_objective = 0.0;
    std::vector<EpochRecord> epochs;
    double final_embedding_distance = 0.0;
    std::vector<std::string> warnings;

    /// End-of-iteration objectives, starting with the initial value.
    std::vector<double> objective_sequence() const;
    void write_csv(const std::filesystem::path& path) const;
};

struct TrainResult {
    TransportPlan plan;
    EncoderParams params;
    double lambda = 0.0;
    TrainHistory history;
    FeatureMatrix features1;
    FeatureMatrix features2;
};

/// Alternating optimization. When `test` is given, per-epoch alignment
/// metrics of S^(k+1) are recorded in the history.
TrainResult train(const TrainConfig& cfg, const Graph& g1, const Graph& g2,
                  const AnchorSet& train_anchors, const AnchorSet* test = nullptr);

/// One-pass inference: encode both graphs, build costs, run the proximal
/// solver from the uniform plan under the given lambda.
TransportPlan infer(const EncoderParams& params, const TrainConfig& cfg, const Graph& g1,
                    const Graph& g2, const AnchorSet& train_anchors, double lambda);

/// Costs used by the given mode: encoder embeddings, or raw features in
/// fixed-cost mode.
CostSet mode_costs(const EncoderParams& params, const TrainConfig& cfg, const FeatureMatrix& f1,
                   const FeatureMatrix& f2, const Graph& g1, const Graph& g2);

}  // namespace otalign
