#pragma once

/**
 * @file delta.hpp
 * @brief Chen delta-invariants by optimization over orthogonal subspace tuples, and the
 *        right-hand sides of the sharp inequalities for real space forms and Lagrangian submanifolds.
 */

#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dideal/curvature.hpp"
#include "dideal/rng.hpp"

namespace dideal {

struct PartitionTuple {
    int n = 0;
    std::vector<int> parts;

    int sum() const { return std::accumulate(parts.begin(), parts.end(), 0); }
    int k() const { return static_cast<int>(parts.size()); }

    void validate() const
    {
        if (parts.empty()) throw UsageError("partition tuple is empty");
        for (std::size_t j = 0; j < parts.size(); ++j) {
            if (parts[j] < 2 || parts[j] > n - 1)
                throw UsageError("partition entries must lie in [2, n-1]");
            if (j > 0 && parts[j] < parts[j - 1]) throw UsageError("partition entries must be non-decreasing");
        }
        if (sum() > n) throw UsageError("partition entries sum beyond n");
    }

    std::string str() const
    {
        std::string s = "(";
        for (std::size_t j = 0; j < parts.size(); ++j) s += (j ? "," : "") + std::to_string(parts[j]);
        return s + ")";
    }
};

enum class Theorem { RealSpaceForm, LagrangianStrict, LagrangianFull, Delta2N2 };

inline std::string to_string(Theorem t)
{
    switch (t) {
    case Theorem::RealSpaceForm: return "RealSpaceForm";
    case Theorem::LagrangianStrict: return "LagrangianStrict";
    case Theorem::LagrangianFull: return "LagrangianFull";
    case Theorem::Delta2N2: return "Delta2N2";
    }
    return "?";
}

/// b(n_1..n_k) = n(n-1)/2 - sum n_j(n_j-1)/2.
inline double b_coefficient(const PartitionTuple& t)
{
    double b = t.n * (t.n - 1) / 2.0;
    for (int nj : t.parts) b -= nj * (nj - 1) / 2.0;
    return b;
}

/// Coefficient of H^2 in the selected inequality.
inline double h2_coefficient(const PartitionTuple& t, Theorem th)
{
    t.validate();
    const double n = t.n, k = t.k(), S = t.sum();
    switch (th) {
    case Theorem::RealSpaceForm: return n * n * (n + k - 1 - S) / (2.0 * (n + k - S));
    case Theorem::LagrangianStrict: {
        if (t.sum() >= t.n) throw UsageError("LagrangianStrict needs n_1+...+n_k < n");
        double inv = 0.0;
        for (int nj : t.parts) inv += 1.0 / (2.0 + nj);
        return n * n * (n - S + 3 * k - 1 - 6 * inv) / (2.0 * (n - S + 3 * k + 2 - 6 * inv));
    }
    case Theorem::LagrangianFull: {
        if (t.sum() != t.n) throw UsageError("LagrangianFull needs n_1+...+n_k = n");
        double inv = 0.0;
        for (std::size_t j = 1; j < t.parts.size(); ++j) inv += 1.0 / (t.parts[j] + 2.0);
        return n * n * (k - 1 - 2 * inv) / (2.0 * (k - 2 * inv));
    }
    case Theorem::Delta2N2: {
        if (t.n < 5 || t.parts != std::vector<int>{2, t.n - 2})
            throw UsageError("Delta2N2 needs the tuple (2, n-2) with n >= 5");
        return n * n * (n - 2) / (4.0 * (n - 1));
    }
    }
    throw UsageError("unknown theorem selector");
}

inline double inequality_rhs(int n, const PartitionTuple& tuple, double c, double H2, Theorem theorem)
{
    if (tuple.n != n) throw UsageError("tuple dimension does not match n");
    return h2_coefficient(tuple, theorem) * H2 + b_coefficient(tuple) * c;
}

struct DeltaOptions {
    int n_samples = 20000;
    int n_starts = 10;
    int restarts = 20;
    double simplex_tol = 1e-8;
    double initial_step = 0.2;
    int max_iter = 4000;
    int stall_iter = 300;        ///< stop once the best value moved by <= stall_tol over this many iterations
    double stall_tol = 1e-13;
    double ideal_tol = 1e-4;
    std::uint64_t seed = 0x5eed;
};

struct OptimizerTrace {
    int restarts_used = 0;
    double best_sampled = 0.0;
    double best_refined = 0.0;
    bool converged = false;
    long evaluations = 0;
};

struct DeltaResult {
    double delta_value = 0.0;
    std::vector<Mat> minimizing_bases;
    double rhs = 0.0;
    double residual = 0.0;
    double tau_full = 0.0;
    OptimizerTrace optimizer_trace;
};

namespace detail {

/// tau without the orthonormality check, for the optimizer's inner loop.
inline double tau_fast(const CurvatureOperator& R, const Mat& U)
{
    const int n = R.n;
    const Mat P = U * U.transpose();
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double* base = &R.R[((i * n + j) * n) * n];
            for (int k = 0; k < n; ++k) {
                const double* row = base + k * n;
                double t = 0.0;
                for (int l = 0; l < n; ++l) t += row[l] * P(i, l);
                s += t * P(j, k);
            }
        }
    return 0.5 * s;
}

struct TupleProblem {
    const CurvatureOperator* R = nullptr;
    std::vector<std::pair<int, int>> groups;   ///< (first column, size); the first k are the tuple blocks
    int k = 0;
    std::vector<std::pair<int, int>> pairs;    ///< rotation generators between distinct groups
    Mat base;
    long evals = 0;

    double objective(const Mat& Q)
    {
        ++evals;
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += tau_fast(*R, Q.middleCols(groups[j].first, groups[j].second));
        return s;
    }

    Mat rotated(const double* x) const
    {
        const int n = R->n;
        Mat S = Mat::Zero(n, n);
        for (std::size_t q = 0; q < pairs.size(); ++q) {
            S(pairs[q].first, pairs[q].second) = x[q];
            S(pairs[q].second, pairs[q].first) = -x[q];
        }
        const Mat I = Mat::Identity(n, n);
        const Mat C = (I - 0.5 * S).partialPivLu().solve(I + 0.5 * S);
        return base * C;
    }
};

inline double nm_objective(const gsl_vector* x, void* p)
{
    auto* prob = static_cast<TupleProblem*>(p);
    return prob->objective(prob->rotated(x->data));
}

inline Mat random_orthogonal(int n, SplitMix64& rng)
{
    Mat G(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) G(i, j) = rng.normal();
    Eigen::HouseholderQR<Mat> qr(G);
    Mat Q = qr.householderQ() * Mat::Identity(n, n);
    return Q;
}

} // namespace detail

/**
 * delta(n_1..n_k) = tau(full) - min sum_j tau(L_j).
 * Stage 1 samples orthogonal matrices (QR of Gaussian matrices); stage 2 runs Nelder-Mead
 * on rotations Q Cayley(S) with S skew and supported between distinct column groups.
 */
inline DeltaResult delta_invariant(const CurvatureOperator& R, const PartitionTuple& tuple, const DeltaOptions& opts = {})
{
    tuple.validate();
    if (tuple.n != R.n) throw UsageError("tuple dimension does not match curvature operator");
    const int n = R.n;
    detail::TupleProblem prob;
    prob.R = &R;
    int col = 0;
    for (int nj : tuple.parts) {
        prob.groups.emplace_back(col, nj);
        col += nj;
    }
    prob.k = tuple.k();
    if (col < n) prob.groups.emplace_back(col, n - col);
    std::vector<int> group_of(n);
    for (std::size_t g = 0; g < prob.groups.size(); ++g)
        for (int c = 0; c < prob.groups[g].second; ++c) group_of[prob.groups[g].first + c] = static_cast<int>(g);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if (group_of[a] != group_of[b]) prob.pairs.emplace_back(a, b);

    DeltaResult res;
    res.tau_full = detail::tau_fast(R, Mat::Identity(n, n));

    SplitMix64 rng(opts.seed);
    std::vector<std::pair<double, Mat>> best;
    const int keep = std::max(1, opts.n_starts);
    for (int s = 0; s < std::max(1, opts.n_samples); ++s) {
        Mat Q = detail::random_orthogonal(n, rng);
        const double f = prob.objective(Q);
        if (static_cast<int>(best.size()) < keep || f < best.back().first) {
            best.emplace_back(f, std::move(Q));
            std::stable_sort(best.begin(), best.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            if (static_cast<int>(best.size()) > keep) best.pop_back();
        }
    }
    res.optimizer_trace.best_sampled = best.front().first;

    double global = best.front().first;
    Mat global_Q = best.front().second;
    bool all_converged = true;
    const std::size_t dim = prob.pairs.size();
    if (dim > 0) {
        gsl_vector* x = gsl_vector_alloc(dim);
        gsl_vector* step = gsl_vector_alloc(dim);
        gsl_multimin_fminimizer* mm = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
        gsl_multimin_function fn{&detail::nm_objective, dim, &prob};
        for (auto& [f0, Q0] : best) {
            prob.base = Q0;
            double current = f0;
            for (int r = 0; r < std::max(1, opts.restarts); ++r) {
                gsl_vector_set_zero(x);
                gsl_vector_set_all(step, r == 0 ? opts.initial_step : 0.25 * opts.initial_step);
                gsl_multimin_fminimizer_set(mm, &fn, x, step);
                int status = GSL_CONTINUE;
                double anchor = gsl_multimin_fminimizer_minimum(mm);
                int anchor_it = 0;
                for (int it = 0; it < opts.max_iter && status == GSL_CONTINUE; ++it) {
                    if (gsl_multimin_fminimizer_iterate(mm) != GSL_SUCCESS) break;
                    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(mm), opts.simplex_tol);
                    // Flat valleys of minimizers keep the simplex wide; stop on a stalled value instead.
                    const double fm = gsl_multimin_fminimizer_minimum(mm);
                    if (anchor - fm > opts.stall_tol) {
                        anchor = fm;
                        anchor_it = it;
                    } else if (opts.stall_iter > 0 && it - anchor_it >= opts.stall_iter) {
                        status = GSL_SUCCESS;
                    }
                }
                const bool conv = status == GSL_SUCCESS;
                const double fmin = gsl_multimin_fminimizer_minimum(mm);
                ++res.optimizer_trace.restarts_used;
                const double gain = current - fmin;
                if (fmin < current) {
                    prob.base = prob.rotated(gsl_multimin_fminimizer_x(mm)->data);
                    current = fmin;
                }
                if (gain <= 1e-13) {
                    all_converged = all_converged && conv;
                    break;
                }
                if (r + 1 == std::max(1, opts.restarts)) all_converged = false;
            }
            if (current < global) {
                global = current;
                global_Q = prob.base;
            }
        }
        gsl_multimin_fminimizer_free(mm);
        gsl_vector_free(step);
        gsl_vector_free(x);
    }
    res.optimizer_trace.best_refined = global;
    res.optimizer_trace.converged = all_converged;
    res.optimizer_trace.evaluations = prob.evals;
    res.delta_value = res.tau_full - global;
    for (int j = 0; j < prob.k; ++j)
        res.minimizing_bases.push_back(global_Q.middleCols(prob.groups[j].first, prob.groups[j].second));
    return res;
}

/// delta_invariant plus the right-hand side of the chosen inequality and the signed gap rhs - delta.
inline DeltaResult certify_delta(const CurvatureOperator& R, const PartitionTuple& tuple, double c, double H2,
                                 Theorem theorem, const DeltaOptions& opts = {})
{
    DeltaResult res = delta_invariant(R, tuple, opts);
    res.rhs = inequality_rhs(tuple.n, tuple, c, H2, theorem);
    res.residual = res.rhs - res.delta_value;
    return res;
}

inline double ideality_residual(const CurvatureOperator& R, const PartitionTuple& tuple, double c, double H2,
                                Theorem theorem, const DeltaOptions& opts = {})
{
    return certify_delta(R, tuple, c, H2, theorem, opts).residual;
}

inline bool is_ideal(double residual, const DeltaOptions& opts = {}) { return std::abs(residual) <= opts.ideal_tol; }

} // namespace dideal
