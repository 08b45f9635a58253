#include "otalign/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace otalign {

const char* to_string(TrainMode mode) {
    switch (mode) {
        case TrainMode::Full:
            return "full";
        case TrainMode::FixedCost:
            return "fixed-cost";
        case TrainMode::Collapse:
            return "collapse";
    }
    return "unknown";
}

TrainMode parse_train_mode(const std::string& name) {
    if (name == "full") {
        return TrainMode::Full;
    }
    if (name == "fixed-cost") {
        return TrainMode::FixedCost;
    }
    if (name == "collapse") {
        return TrainMode::Collapse;
    }
    throw Error(ErrorKind::Config, "unknown mode '" + name + "'");
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::Config, what); };
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must lie in [0, 1]");
    if (!(beta > 0.0 && beta <= 1.0)) fail("beta must lie in (0, 1]");
    if (!(gamma_p > 0.0)) fail("gamma_p must be positive");
    if (!(lr > 0.0)) fail("lr must be positive");
    if (epochs < 1) fail("epochs must be at least 1");
    if (inner_steps < 0) fail("inner_steps must be non-negative");
    if (prox_iters < 0) fail("T must be non-negative");
    if (sinkhorn_iters < 1) fail("N must be at least 1");
    if (!(sinkhorn_tol > 0.0)) fail("tol must be positive");
    if (hidden < 1) fail("hidden must be at least 1");
    if (batch_size < 0) fail("batch_size must be non-negative");
}

ProximalOptions TrainConfig::proximal_options() const {
    ProximalOptions opts;
    opts.outer_iters = prox_iters;
    opts.sinkhorn_iters = sinkhorn_iters;
    opts.tol = sinkhorn_tol;
    opts.enforce_monotone = false;
    return opts;
}

LambdaTerms lambda_terms(const CostSet& costs, const Matrix& plan) {
    const auto n1 = static_cast<double>(plan.rows());
    const auto n2 = static_cast<double>(plan.cols());
    const SparseMatrix& c1 = costs.intra1;
    const SparseMatrix& c2 = costs.intra2;
    const SparseMatrix c1_sq = c1.cwiseProduct(c1);
    const SparseMatrix c2_sq = c2.cwiseProduct(c2);

    const Vector ones1 = Vector::Ones(plan.rows());
    const Vector ones2 = Vector::Ones(plan.cols());
    const Vector c1_rows = c1 * ones1;
    const Vector c2_rows = c2 * ones2;
    const Vector c1_sq_rows = c1_sq * ones1;
    const Vector c2_sq_rows = c2_sq * ones2;
    const double c1_sum = c1_rows.sum();
    const double c2_sum = c2_rows.sum();

    LambdaTerms t;
    t.k1 = costs.cross.sum();
    t.k3 = n2 * n2 * c1_sq_rows.sum() + n1 * n1 * c2_sq_rows.sum() - 2.0 * c1_sum * c2_sum;
    // sum_{x,x',y,y'} d_e S(x,y) = sum_{x,y} S(x,y) [n2 q1(x) + n1 q2(y) - 2 c1(x) c2(y)];
    // the S(x',y') half is equal by the symmetry of C1 and C2.
    const Vector plan_rows = plan.rowwise().sum();
    const Vector plan_cols = plan.colwise().sum().transpose();
    const double one_side = n2 * plan_rows.dot(c1_sq_rows) + n1 * plan_cols.dot(c2_sq_rows) -
                            2.0 * c1_rows.dot(plan * c2_rows);
    t.k2 = 2.0 * one_side;
    return t;
}

double lambda_closed_form(const CostSet& costs, const TransportPlan& plan, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw Error(ErrorKind::Numerical, "closed-form lambda needs alpha in (0, 1]; keep previous lambda");
    }
    const LambdaTerms t = lambda_terms(costs, plan.values);
    if (!(t.k3 > 0.0)) {
        throw Error(ErrorKind::Numerical, "closed-form lambda needs K3 > 0; keep previous lambda");
    }
    return ((1.0 - alpha) * t.k1 + alpha * t.k2) / (2.0 * alpha * t.k3);
}

std::vector<double> TrainHistory::objective_sequence() const {
    std::vector<double> seq{initial_objective};
    for (const auto& e : epochs) {
        seq.push_back(e.objective_after_encoder);
    }
    return seq;
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    }
    out.precision(17);
    out << "epoch,lambda,objective_after_ot,lambda_next,objective_after_lambda,"
           "objective_after_encoder,mean_embedding_distance,rejected_steps,seconds,monotone,"
           "hits1,hits10,mrr\n";
    out << 0 << ",,,,," << initial_objective << ",,,,,,,\n";
    for (const auto& e : epochs) {
        out << e.epoch << ',' << e.lambda_used << ',' << e.objective_after_ot << ',' << e.lambda_next
            << ',' << e.objective_after_lambda << ',' << e.objective_after_encoder << ','
            << e.mean_embedding_distance << ',' << e.rejected_encoder_steps << ',' << e.seconds << ','
            << (e.monotone ? 1 : 0) << ',';
        if (e.metrics) {
            auto hit = [&](int k) {
                auto it = e.metrics->hits.find(k);
                return it == e.metrics->hits.end() ? std::string() : std::to_string(it->second);
            };
            out << hit(1) << ',' << hit(10) << ',' << e.metrics->mrr;
        } else {
            out << ",,";
        }
        out << '\n';
    }
}

CostSet mode_costs(const EncoderParams& params, const TrainConfig& cfg, const FeatureMatrix& f1,
                   const FeatureMatrix& f2, const Graph& g1, const Graph& g2) {
    if (cfg.mode == TrainMode::FixedCost) {
        return cost_matrices({f1.values, f2.values}, g1, g2);
    }
    return cost_matrices({encode(params, f1), encode(params, f2)}, g1, g2);
}

namespace {

// Draws `count` distinct node ids (sorted) from [0, n).
std::vector<Index> sample_nodes(Index n, Index count, std::mt19937_64& rng) {
    std::vector<Index> nodes(static_cast<std::size_t>(n));
    std::iota(nodes.begin(), nodes.end(), 0);
    for (Index i = 0; i < count; ++i) {
        const Index j = i + static_cast<Index>(rng() % static_cast<std::uint64_t>(n - i));
        std::swap(nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>(j)]);
    }
    nodes.resize(static_cast<std::size_t>(count));
    std::sort(nodes.begin(), nodes.end());
    return nodes;
}

Matrix select_rows(const Matrix& m, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out.row(static_cast<Index>(k)) = m.row(rows[k]);
    }
    return out;
}

Matrix select_block(const Matrix& m, const std::vector<Index>& rows, const std::vector<Index>& cols) {
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
        }
    }
    return out;
}

double relative_slack(double reference, double rel) {
    return rel * std::max(std::abs(reference), 1e-300);
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Graph& g1, const Graph& g2,
                  const AnchorSet& train_anchors, const AnchorSet* test) {
    cfg.validate();
    using Clock = std::chrono::steady_clock;

    TrainResult result;
    std::tie(result.features1, result.features2) =
        build_features(g1, g2, train_anchors, cfg.rwr_options());
    const Matrix& f1 = result.features1.values;
    const Matrix& f2 = result.features2.values;
    if (f1.cols() == 0) {
        throw Error(ErrorKind::InvalidArgument, "no input features: need train anchors or attributes");
    }

    const Index n1 = g1.num_nodes();
    const Index n2 = g2.num_nodes();
    result.plan = uniform_plan(n1, n2);
    result.lambda =
        cfg.mode == TrainMode::Collapse ? 0.0 : 1.0 / (static_cast<double>(n1) * static_cast<double>(n2));
    result.params = init_encoder(f1.cols(), split_seed(cfg.seed, seed_stream::kEncoderInit), cfg.hidden,
                                 cfg.hidden);
    std::mt19937_64 batch_rng(split_seed(cfg.seed, seed_stream::kBatch));

    const bool trains_encoder = cfg.mode != TrainMode::FixedCost;
    std::optional<CostSet> fixed_costs;
    if (!trains_encoder) {
        fixed_costs = mode_costs(result.params, cfg, result.features1, result.features2, g1, g2);
    }

    auto& history = result.history;
    history.initial_objective =
        fixed_costs ? fgw_objective(*fixed_costs, result.plan, {result.lambda}, cfg.alpha)
                    : encoder_objective(result.params.weights, f1, f2, g1, g2, result.plan.values,
                                        {result.lambda}, cfg.alpha)
                          .total;
    double previous_end = history.initial_objective;

    for (int k = 1; k <= cfg.epochs; ++k) {
        const auto start = Clock::now();
        EpochRecord rec;
        rec.epoch = k;
        rec.lambda_used = result.lambda;

        CostSet costs;
        if (fixed_costs) {
            costs = *fixed_costs;
            rec.mean_embedding_distance = mean_pairwise_distance({f1, f2});
        } else {
            EmbeddingPair emb{encode(result.params, result.features1), encode(result.params, result.features2)};
            rec.mean_embedding_distance = mean_pairwise_distance(emb);
            costs = cost_matrices(emb, g1, g2);
        }

        ProximalOptions prox_opts = cfg.proximal_options();
        if (cfg.trace_dir) {
            prox_opts.trace_path = *cfg.trace_dir / ("proximal_epoch_" + std::to_string(k) + ".csv");
        }
        ProximalResult prox =
            proximal_fgw(costs, {result.lambda}, cfg.alpha, cfg.gamma_p, result.plan, prox_opts);
        result.plan = std::move(prox.plan);
        rec.objective_after_ot = prox.objective_trace.back();

        if (cfg.mode != TrainMode::Collapse) {
            try {
                result.lambda = lambda_closed_form(costs, result.plan, cfg.alpha);
            } catch (const Error& e) {
                history.warnings.push_back("epoch " + std::to_string(k) + ": " + e.what());
            }
        }
        rec.lambda_next = result.lambda;
        rec.objective_after_lambda = fgw_objective(costs, result.plan, {result.lambda}, cfg.alpha);

        double current = rec.objective_after_lambda;
        if (trains_encoder) {
            const bool full_batch =
                cfg.batch_size == 0 || (cfg.batch_size >= n1 && cfg.batch_size >= n2);
            for (int step = 0; step < cfg.inner_steps; ++step) {
                LossAndGrad lg;
                if (full_batch) {
                    lg = loss_and_grad(result.params.weights, f1, f2, g1, g2, result.plan.values,
                                       {result.lambda}, cfg.alpha);
                } else {
                    const auto b1 = sample_nodes(n1, std::min(cfg.batch_size, n1), batch_rng);
                    const auto b2 = sample_nodes(n2, std::min(cfg.batch_size, n2), batch_rng);
                    lg = loss_and_grad(result.params.weights, select_rows(f1, b1), select_rows(f2, b2),
                                       g1.induced(b1), g2.induced(b2),
                                       select_block(result.plan.values, b1, b2), {result.lambda},
                                       cfg.alpha);
                }
                EncoderParams candidate = adam_step(result.params, lg.grad, cfg.lr);
                if (full_batch && cfg.guard_encoder_steps) {
                    const double trial = encoder_objective(candidate.weights, f1, f2, g1, g2,
                                                           result.plan.values, {result.lambda}, cfg.alpha)
                                             .total;
                    if (trial > current) {
                        // Keep the moment estimates but not the weights.
                        candidate.weights = result.params.weights;
                        ++rec.rejected_encoder_steps;
                    } else {
                        current = trial;
                    }
                }
                result.params = std::move(candidate);
            }
            if (!full_batch || !cfg.guard_encoder_steps) {
                current = encoder_objective(result.params.weights, f1, f2, g1, g2, result.plan.values,
                                            {result.lambda}, cfg.alpha)
                              .total;
            }
        }
        rec.objective_after_encoder = current;

        rec.monotone = current <= previous_end + relative_slack(previous_end, cfg.monotone_rel_slack);
        if (!rec.monotone) {
            std::ostringstream msg;
            msg.precision(12);
            msg << "epoch " << k << ": objective rose from " << previous_end << " to " << current;
            history.warnings.push_back(msg.str());
        }
        previous_end = current;

        if (test != nullptr) {
            rec.metrics = evaluate_plan(result.plan.values, *test, {1, 5, 10, 30});
        }
        rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        history.epochs.push_back(std::move(rec));
    }

    if (fixed_costs) {
        history.final_embedding_distance = mean_pairwise_distance({f1, f2});
    } else {
        history.final_embedding_distance = mean_pairwise_distance(
            {encode(result.params, result.features1), encode(result.params, result.features2)});
    }

    const double final_objective = history.epochs.back().objective_after_encoder;
    if (final_objective >
        history.initial_objective + relative_slack(history.initial_objective, cfg.monotone_rel_slack)) {
        std::ostringstream msg;
        msg.precision(12);
        msg << "final objective " << final_objective << " exceeds initial " << history.initial_objective;
        throw Error(ErrorKind::Numerical, msg.str());
    }
    return result;
}

TransportPlan infer(const EncoderParams& params, const TrainConfig& cfg, const Graph& g1,
                    const Graph& g2, const AnchorSet& train_anchors, double lambda) {
    cfg.validate();
    const auto [f1, f2] = build_features(g1, g2, train_anchors, cfg.rwr_options());
    const CostSet costs = mode_costs(params, cfg, f1, f2, g1, g2);
    return proximal_fgw(costs, {lambda}, cfg.alpha, cfg.gamma_p,
                        uniform_plan(g1.num_nodes(), g2.num_nodes()), cfg.proximal_options())
        .plan;
}

}  // namespace otalign
