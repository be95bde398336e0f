#pragma once

/**
 * @file shape.hpp
 * @brief Induced metric, cubic form, mean curvature and the adapted normal form.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "dideal/jets.hpp"

namespace dideal {

/// Fully symmetric h[C][A][B] = <h(E_A,E_B), J E_C> in an orthonormal frame.
struct CubicTensor {
    int n = 0;
    std::vector<double> coeffs;   ///< n^3, index (C*n + A)*n + B
    Vec mean_vector;              ///< trace(h^C)/n: components of H along J E_C
    double H2 = 0.0;
    double outside_residual = 0.0;   ///< component along J(position) for lifts
    double position_residual = 0.0;  ///< deviation of the position component from -eps <X,Y>

    CubicTensor() = default;
    explicit CubicTensor(int dim) : n(dim), coeffs(static_cast<std::size_t>(dim) * dim * dim, 0.0), mean_vector(Vec::Zero(dim)) {}

    double& operator()(int C, int A, int B) { return coeffs[(C * n + A) * n + B]; }
    double operator()(int C, int A, int B) const { return coeffs[(C * n + A) * n + B]; }

    void update_mean()
    {
        mean_vector = Vec::Zero(n);
        for (int C = 0; C < n; ++C)
            for (int A = 0; A < n; ++A) mean_vector[C] += (*this)(C, A, A);
        mean_vector /= n;
        H2 = mean_vector.squaredNorm();
    }

    double max_abs() const
    {
        double m = 0.0;
        for (double v : coeffs) m = std::max(m, std::abs(v));
        return m;
    }
};

/// Cubic tensor in the rotated frame e'_a = sum_b U(b,a) e_b.
inline CubicTensor rotate_cubic(const CubicTensor& h, const Mat& U)
{
    const int n = h.n;
    CubicTensor t1(n), t2(n), out(n);
    for (int c = 0; c < n; ++c)
        for (int a = 0; a < n; ++a)
            for (int B = 0; B < n; ++B) {
                double s = 0.0;
                for (int b = 0; b < n; ++b) s += h(c, a, b) * U(b, B);
                t1(c, a, B) = s;
            }
    for (int c = 0; c < n; ++c)
        for (int A = 0; A < n; ++A)
            for (int B = 0; B < n; ++B) {
                double s = 0.0;
                for (int a = 0; a < n; ++a) s += t1(c, a, B) * U(a, A);
                t2(c, A, B) = s;
            }
    for (int C = 0; C < n; ++C)
        for (int A = 0; A < n; ++A)
            for (int B = 0; B < n; ++B) {
                double s = 0.0;
                for (int c = 0; c < n; ++c) s += t2(c, A, B) * U(c, C);
                out(C, A, B) = s;
            }
    out.update_mean();
    return out;
}

inline Mat induced_metric(const Jet3& jet, const AmbientSpace& space)
{
    const int n = jet.n;
    Mat g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) g(i, j) = g(j, i) = inner(space, jet.d1[i], jet.d1[j]);
    return g;
}

inline bool is_positive_definite(const Mat& g)
{
    Eigen::LLT<Mat> llt(g);
    return llt.info() == Eigen::Success;
}

/// Raw Kaehler-form residual max_{i<j} |<J d_i L, d_j L>| in coordinates.
inline double lagrangian_residual(const Jet3& jet, const AmbientSpace& space)
{
    double r = 0.0;
    for (int i = 0; i < jet.n; ++i) {
        const AmbientVector Ji = apply_J(space, jet.d1[i]);
        for (int j = i + 1; j < jet.n; ++j) r = std::max(r, std::abs(inner(space, Ji, jet.d1[j])));
    }
    return r;
}

inline CubicTensor second_fundamental_form(const Jet3& jet, const AmbientSpace& space, const TangentFrame& frame,
                                           double outside_tol = 1e-5)
{
    if (jet.order < 2) throw UsageError("second fundamental form needs an order-2 jet");
    const int n = jet.n;
    std::vector<AmbientVector> basis;
    for (const auto& e : frame.vectors) basis.push_back(e);
    for (const auto& e : frame.vectors) basis.push_back(apply_J(space, e));
    if (space.is_lift()) {
        basis.push_back(jet.value);
        basis.push_back(apply_J(space, jet.value));
    }
    const int m = static_cast<int>(basis.size());
    Mat G(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) G(a, b) = G(b, a) = inner(space, basis[a], basis[b]);
    Eigen::PartialPivLU<Mat> lu(G);

    const Mat& T = frame.coeffs;
    CubicTensor h(n);
    double outside = 0.0, position = 0.0;
    Vec rhs(m);
    for (int A = 0; A < n; ++A)
        for (int B = A; B < n; ++B) {
            AmbientVector V = AmbientVector::Zero(jet.value.size());
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double w = T(A, i) * T(B, j);
                    if (w != 0.0) V += w * jet.D2(i, j);
                }
            for (int a = 0; a < m; ++a) rhs[a] = inner(space, basis[a], V);
            const Vec coef = lu.solve(rhs);
            for (int C = 0; C < n; ++C) h(C, A, B) = h(C, B, A) = coef[n + C];
            if (space.is_lift()) {
                const double expect = -space.epsilon * (A == B ? 1.0 : 0.0);
                position = std::max(position, std::abs(coef[2 * n] - expect));
                outside = std::max(outside, std::abs(coef[2 * n + 1]));
            }
        }
    h.outside_residual = outside;
    h.position_residual = position;
    if (outside > outside_tol)
        throw DegeneracyError("second derivatives leave span{E, JE, position}: frame is not Lagrangian/horizontal");
    h.update_mean();
    return h;
}

/// max |h[C][A][B] - h[sigma(C)][sigma(A)][sigma(B)]| over all permutations.
inline double cubic_symmetry_residual(const CubicTensor& h)
{
    double r = 0.0;
    const int n = h.n;
    for (int C = 0; C < n; ++C)
        for (int A = 0; A < n; ++A)
            for (int B = 0; B < n; ++B) {
                const double v = h(C, A, B);
                r = std::max({r, std::abs(v - h(A, C, B)), std::abs(v - h(B, A, C)), std::abs(v - h(C, B, A)),
                              std::abs(v - h(A, B, C)), std::abs(v - h(B, C, A))});
            }
    return r;
}

struct AdaptedCoefficients {
    double gamma = 0.0;
    double lam = 0.0;
    double mu = 0.0;
    std::vector<double> residual_block;   ///< (n-2)^3, index ((k*(n-2)+i)*(n-2)+j) for frame slots k+2, i+2, j+2
    double violation = 0.0;
};

/// The normal form with scalars (gamma, lambda, mu) and a block on span{e3..en}.
inline CubicTensor synthesize_adapted(int n, double gamma, double lam, double mu, const std::vector<double>& block)
{
    CubicTensor h(n);
    const int m = n - 2;
    auto sym = [&](int a, int b, int c, double v) {
        h(a, b, c) = h(a, c, b) = h(b, a, c) = h(b, c, a) = h(c, a, b) = h(c, b, a) = v;
    };
    sym(0, 0, 0, gamma);
    sym(1, 0, 1, n * lam - gamma);
    sym(1, 1, 1, n * mu);
    sym(0, 1, 1, n * lam - gamma);
    for (int i = 2; i < n; ++i) {
        sym(0, i, i, lam);
        sym(1, i, i, mu);
    }
    if (!block.empty())
        for (int k = 0; k < m; ++k)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) h(k + 2, i + 2, j + 2) = block[(k * m + i) * m + j];
    h.update_mean();
    return h;
}

/// Reads (gamma, lambda, mu) in an adapted frame and measures the departure from the normal form.
inline AdaptedCoefficients adapted_coefficients(const CubicTensor& cubic, const TangentFrame& basis)
{
    const int n = cubic.n;
    const CubicTensor h = rotate_cubic(cubic, basis.rotation);
    AdaptedCoefficients a;
    a.gamma = h(0, 0, 0);
    a.lam = h(0, 2, 2);
    a.mu = h(1, 2, 2);
    const int m = n - 2;
    a.residual_block.assign(static_cast<std::size_t>(m) * m * m, 0.0);
    for (int k = 0; k < m; ++k)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) a.residual_block[(k * m + i) * m + j] = h(k + 2, i + 2, j + 2);
    const CubicTensor s = synthesize_adapted(n, a.gamma, a.lam, a.mu, a.residual_block);
    double v = 0.0;
    for (std::size_t q = 0; q < h.coeffs.size(); ++q) v = std::max(v, std::abs(h.coeffs[q] - s.coeffs[q]));
    for (int k = 0; k < m; ++k) {
        double tr = 0.0;
        for (int i = 0; i < m; ++i) tr += a.residual_block[(k * m + i) * m + i];
        v = std::max(v, std::abs(tr));
    }
    a.violation = v;
    return a;
}

inline AdaptedCoefficients extract_adapted(const CubicTensor& cubic, const TangentFrame& basis, double threshold = 1e-6)
{
    AdaptedCoefficients a = adapted_coefficients(cubic, basis);
    if (a.violation > threshold)
        throw NormalFormError("cubic tensor departs from the adapted normal form by " + std::to_string(a.violation));
    return a;
}

} // namespace dideal
