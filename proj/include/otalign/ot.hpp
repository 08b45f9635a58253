#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "otalign/common.hpp"

namespace otalign {

/// Soft alignment S with its prescribed marginals.
struct TransportPlan {
    Matrix values;
    Vector mu1;
    Vector mu2;

    Index rows() const noexcept { return values.rows(); }
    Index cols() const noexcept { return values.cols(); }
};

/// S = mu1 mu2^T with uniform marginals.
TransportPlan uniform_plan(Index n1, Index n2);

/// max(||S 1 - mu1||_1, ||S^T 1 - mu2||_1)
double marginal_violation(const TransportPlan& plan);

/// Cross-network cost M and intra-network costs C1, C2 (supported on edges).
struct CostSet {
    Matrix cross;
    SparseMatrix intra1;
    SparseMatrix intra2;
};

/// Threshold turning S into signed sampling weights S_n = S - lambda.
struct SamplingShift {
    double lambda = 0.0;
};

struct SinkhornOptions {
    int max_iter = 1000;
    double tol = 1e-6;
};

struct SinkhornResult {
    TransportPlan plan;
    /// log S, exact even where S underflows.
    Matrix log_plan;
    int iterations = 0;
    double violation = 0.0;
    bool converged = false;
};

/// Log-stabilized Sinkhorn for min <cost, S> + reg <log S, S> over Pi(mu1, mu2).
/// Runs at most `max_iter` sweeps and reports whether the marginal violation
/// reached `tol`; it does not throw on non-convergence.
SinkhornResult sinkhorn_run(const Matrix& cost, const Vector& mu1, const Vector& mu2, double reg,
                            const SinkhornOptions& options = {});

/// As sinkhorn_run, but throws ErrorKind::Numerical carrying the final
/// violation when the tolerance is not met.
TransportPlan sinkhorn(const Matrix& cost, const Vector& mu1, const Vector& mu2, double reg,
                       const SinkhornOptions& options = {});

/// L_gw = C1^2 S_n 1 + 1 S_n C2^2^T - 2 C1 S_n C2^T (squares entrywise).
/// The all-ones products are row/column-sum broadcasts.
Matrix gw_linearization(const SparseMatrix& c1, const SparseMatrix& c2, const Matrix& shifted);

struct ObjectiveTerms {
    double wasserstein = 0.0;  // sum M .* S_n
    double gromov = 0.0;       // sum |C1 - C2|^2 S_n S_n
    double total = 0.0;        // (1 - alpha) wasserstein + alpha gromov
};

ObjectiveTerms fgw_objective_terms(const CostSet& costs, const Matrix& plan, SamplingShift shift,
                                   double alpha);

double fgw_objective(const CostSet& costs, const TransportPlan& plan, SamplingShift shift,
                     double alpha);

struct ProximalOptions {
    int outer_iters = 10;      // T
    int sinkhorn_iters = 50;   // N, sweep budget per subproblem
    double tol = 1e-6;         // early exit for each subproblem
    double monotone_slack = 1e-8;
    /// Throw ErrorKind::Numerical when the objective rises by more than the slack.
    bool enforce_monotone = true;
    std::optional<std::filesystem::path> trace_path;
};

struct ProximalResult {
    TransportPlan plan;
    /// Objective at the warm start followed by the value after each iteration.
    std::vector<double> objective_trace;
    int sinkhorn_sweeps = 0;
};

/// Proximal point iterations for the shifted FGW objective: each step solves
/// an entropic OT problem with cost (1-a)M + a L_gw(S_t - lambda) - g log S_t
/// and regularization g = gamma_p.
ProximalResult proximal_fgw(const CostSet& costs, SamplingShift shift, double alpha, double gamma_p,
                            const TransportPlan& warm_start, const ProximalOptions& options = {});

}  // namespace otalign
