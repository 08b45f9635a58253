#include "otalign/ot.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace otalign {

TransportPlan uniform_plan(Index n1, Index n2) {
    if (n1 <= 0 || n2 <= 0) {
        throw Error(ErrorKind::InvalidArgument, "transport plan needs positive dimensions");
    }
    TransportPlan plan;
    plan.mu1 = Vector::Constant(n1, 1.0 / static_cast<double>(n1));
    plan.mu2 = Vector::Constant(n2, 1.0 / static_cast<double>(n2));
    plan.values = plan.mu1 * plan.mu2.transpose();
    return plan;
}

double marginal_violation(const TransportPlan& plan) {
    const double rows = (plan.values.rowwise().sum() - plan.mu1).lpNorm<1>();
    const double cols = (plan.values.colwise().sum().transpose() - plan.mu2).lpNorm<1>();
    return std::max(rows, cols);
}

namespace {

void check_marginals(const Matrix& cost, const Vector& mu1, const Vector& mu2) {
    if (cost.rows() != mu1.size() || cost.cols() != mu2.size()) {
        throw Error(ErrorKind::Shape, "cost matrix shape does not match marginals");
    }
    if ((mu1.array() <= 0.0).any() || (mu2.array() <= 0.0).any()) {
        throw Error(ErrorKind::InvalidArgument, "marginals must be strictly positive");
    }
    if (std::abs(mu1.sum() - 1.0) > 1e-9 || std::abs(mu2.sum() - 1.0) > 1e-9) {
        throw Error(ErrorKind::InvalidArgument, "marginals must each sum to 1");
    }
}

// log-sum-exp of each row of z.
Vector row_logsumexp(const Matrix& z) {
    const Vector mx = z.rowwise().maxCoeff();
    return mx.array() + ((z.colwise() - mx).array().exp().rowwise().sum()).log();
}

// Potentials (f, g) with plan_ij = exp((f_i + g_j - C_ij) / reg) * u_i * v_j.
struct Potentials {
    Vector f;
    Vector g;
};

// One exact log-domain sweep; afterwards column marginals hold exactly.
void log_domain_sweep(const Matrix& cost, const Vector& log_mu1, const Vector& log_mu2, double reg,
                      Potentials& pot) {
    Matrix z = ((-cost).rowwise() + pot.g.transpose()) / reg;
    pot.f = reg * (log_mu1 - row_logsumexp(z));
    z = ((-cost).colwise() + pot.f) / reg;
    pot.g = reg * (log_mu2 - row_logsumexp(z.transpose()));
}

Matrix kernel(const Matrix& cost, const Potentials& pot, double reg) {
    return ((((-cost).colwise() + pot.f).rowwise() + pot.g.transpose()) / reg).array().exp().matrix();
}

constexpr double kAbsorbAbove = 1e30;

bool needs_absorb(const Vector& x) {
    for (Index i = 0; i < x.size(); ++i) {
        const double v = x(i);
        if (!std::isfinite(v) || v > kAbsorbAbove || v < 1.0 / kAbsorbAbove) {
            return true;
        }
    }
    return false;
}

}  // namespace

SinkhornResult sinkhorn_run(const Matrix& cost, const Vector& mu1, const Vector& mu2, double reg,
                            const SinkhornOptions& options) {
    check_marginals(cost, mu1, mu2);
    if (!(reg > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "sinkhorn regularization must be positive");
    }
    if (!cost.allFinite()) {
        throw Error(ErrorKind::Numerical, "sinkhorn cost matrix has non-finite entries");
    }
    const Vector log_mu1 = mu1.array().log();
    const Vector log_mu2 = mu2.array().log();

    Potentials pot{Vector::Zero(cost.rows()), Vector::Zero(cost.cols())};
    log_domain_sweep(cost, log_mu1, log_mu2, reg, pot);
    Matrix k = kernel(cost, pot, reg);
    Vector u = Vector::Ones(cost.rows());
    Vector v = Vector::Ones(cost.cols());
    Vector kv(cost.rows());
    Vector ktu(cost.cols());

    SinkhornResult result;
    // The exact sweep above counts as the first iteration.
    result.iterations = 1;
    while (true) {
        kv.noalias() = k * v;
        result.violation = (u.cwiseProduct(kv) - mu1).lpNorm<1>();
        if (result.violation <= options.tol) {
            result.converged = true;
            break;
        }
        if (result.iterations >= options.max_iter) {
            break;
        }
        Vector u_next = mu1.cwiseQuotient(kv);
        ktu.noalias() = k.transpose() * u_next;
        Vector v_next = mu2.cwiseQuotient(ktu);
        ++result.iterations;
        if (needs_absorb(u_next) || needs_absorb(v_next)) {
            // Fold the last well-scaled state into the potentials and redo the
            // sweep in the log domain, which cannot overflow.
            pot.f += reg * u.array().log().matrix();
            pot.g += reg * v.array().log().matrix();
            log_domain_sweep(cost, log_mu1, log_mu2, reg, pot);
            k = kernel(cost, pot, reg);
            u.setOnes();
            v.setOnes();
            continue;
        }
        u.swap(u_next);
        v.swap(v_next);
    }

    pot.f += reg * u.array().log().matrix();
    pot.g += reg * v.array().log().matrix();
    result.log_plan = (((-cost).colwise() + pot.f).rowwise() + pot.g.transpose()) / reg;
    // Entries below the smallest normal double are floored so the plan stays
    // strictly positive; the log plan keeps the exact value.
    result.plan.values =
        result.log_plan.array().exp().max(std::numeric_limits<double>::min()).matrix();
    result.plan.mu1 = mu1;
    result.plan.mu2 = mu2;
    if (!result.plan.values.allFinite()) {
        throw Error(ErrorKind::Numerical, "sinkhorn produced non-finite plan entries");
    }
    return result;
}

TransportPlan sinkhorn(const Matrix& cost, const Vector& mu1, const Vector& mu2, double reg,
                       const SinkhornOptions& options) {
    SinkhornResult r = sinkhorn_run(cost, mu1, mu2, reg, options);
    if (!r.converged) {
        std::ostringstream msg;
        msg << "sinkhorn did not converge in " << r.iterations << " iterations (marginal violation "
            << r.violation << ", tol " << options.tol << ")";
        throw Error(ErrorKind::Numerical, msg.str());
    }
    return std::move(r.plan);
}

Matrix gw_linearization(const SparseMatrix& c1, const SparseMatrix& c2, const Matrix& shifted) {
    if (c1.rows() != c1.cols() || c2.rows() != c2.cols() || c1.rows() != shifted.rows() ||
        c2.rows() != shifted.cols()) {
        throw Error(ErrorKind::Shape, "gw_linearization: inconsistent shapes");
    }
    const SparseMatrix c1_sq = c1.cwiseProduct(c1);
    const SparseMatrix c2_sq = c2.cwiseProduct(c2);
    const Vector row_term = c1_sq * shifted.rowwise().sum();
    const Vector col_term = c2_sq * shifted.colwise().sum().transpose();

    const Matrix left = c1 * shifted;                       // n1 x n2
    Matrix cross = (c2 * left.transpose()).transpose();     // C1 S_n C2^T
    cross *= -2.0;
    cross.colwise() += row_term;
    cross.rowwise() += col_term.transpose();
    return cross;
}

ObjectiveTerms fgw_objective_terms(const CostSet& costs, const Matrix& plan, SamplingShift shift,
                                   double alpha) {
    if (costs.cross.rows() != plan.rows() || costs.cross.cols() != plan.cols()) {
        throw Error(ErrorKind::Shape, "fgw_objective: plan and cost shapes differ");
    }
    const Matrix shifted = plan.array() - shift.lambda;
    ObjectiveTerms terms;
    terms.wasserstein = costs.cross.cwiseProduct(shifted).sum();
    terms.gromov = gw_linearization(costs.intra1, costs.intra2, shifted).cwiseProduct(shifted).sum();
    terms.total = (1.0 - alpha) * terms.wasserstein + alpha * terms.gromov;
    return terms;
}

double fgw_objective(const CostSet& costs, const TransportPlan& plan, SamplingShift shift,
                     double alpha) {
    return fgw_objective_terms(costs, plan.values, shift, alpha).total;
}

ProximalResult proximal_fgw(const CostSet& costs, SamplingShift shift, double alpha, double gamma_p,
                            const TransportPlan& warm_start, const ProximalOptions& options) {
    if (!(gamma_p > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "proximal weight gamma_p must be positive");
    }
    if (alpha < 0.0 || alpha > 1.0) {
        throw Error(ErrorKind::InvalidArgument, "alpha must lie in [0, 1]");
    }
    if ((warm_start.values.array() <= 0.0).any()) {
        throw Error(ErrorKind::InvalidArgument, "proximal warm start must be strictly positive");
    }
    if (warm_start.rows() != costs.cross.rows() || warm_start.cols() != costs.cross.cols()) {
        throw Error(ErrorKind::Shape, "warm start shape does not match costs");
    }

    std::optional<std::ofstream> trace;
    if (options.trace_path) {
        trace.emplace(*options.trace_path);
        if (!*trace) {
            throw Error(ErrorKind::Io, "cannot write trace " + options.trace_path->string());
        }
        trace->precision(17);
        *trace << "iteration,objective\n";
    }

    ProximalResult result;
    result.plan = warm_start;
    Matrix log_plan = warm_start.values.array().log();
    double current = fgw_objective(costs, result.plan, shift, alpha);
    result.objective_trace.push_back(current);
    if (trace) {
        *trace << 0 << ',' << current << '\n';
    }

    const SinkhornOptions inner{options.sinkhorn_iters, options.tol};
    for (int t = 0; t < options.outer_iters; ++t) {
        const Matrix shifted = result.plan.values.array() - shift.lambda;
        Matrix total = (1.0 - alpha) * costs.cross;
        total.noalias() += alpha * gw_linearization(costs.intra1, costs.intra2, shifted);
        total.noalias() -= gamma_p * log_plan;

        // The sweep budget N is a cap: subproblems are solved inexactly, so
        // non-convergence here is not an error.
        SinkhornResult step = sinkhorn_run(total, warm_start.mu1, warm_start.mu2, gamma_p, inner);
        result.sinkhorn_sweeps += step.iterations;
        result.plan = std::move(step.plan);
        log_plan = std::move(step.log_plan);

        const double next = fgw_objective(costs, result.plan, shift, alpha);
        result.objective_trace.push_back(next);
        if (trace) {
            *trace << t + 1 << ',' << next << '\n';
        }
        if (options.enforce_monotone && next > current + options.monotone_slack) {
            std::ostringstream msg;
            msg << "proximal point objective increased at iteration " << t + 1 << ": " << current
                << " -> " << next;
            throw Error(ErrorKind::Numerical, msg.str());
        }
        current = next;
    }
    return result;
}

}  // namespace otalign
