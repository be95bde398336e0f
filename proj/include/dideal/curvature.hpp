#pragma once

/**
 * @file curvature.hpp
 * @brief Riemann tensor from the Gauss equation and from metric finite differences; Codazzi residual.
 *
 * Convention: R[i][j][k][l] = <R(e_i,e_j)e_k, e_l> with R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y],
 * so the unit sphere has K(e_i ^ e_j) = R[i][j][j][i] = +1.
 */

#include <algorithm>
#include <cmath>
#include <vector>

#include "dideal/shape.hpp"

namespace dideal {

enum class CurvatureSource { GaussEquation, MetricFiniteDifference, Analytic };

struct CurvatureOperator {
    int n = 0;
    std::vector<double> R;   ///< n^4, index ((i*n+j)*n+k)*n+l
    CurvatureSource source = CurvatureSource::Analytic;

    CurvatureOperator() = default;
    CurvatureOperator(int dim, CurvatureSource s)
        : n(dim), R(static_cast<std::size_t>(dim) * dim * dim * dim, 0.0), source(s) {}

    double& operator()(int i, int j, int k, int l) { return R[((i * n + j) * n + k) * n + l]; }
    double operator()(int i, int j, int k, int l) const { return R[((i * n + j) * n + k) * n + l]; }

    double sectional(int i, int j) const { return (*this)(i, j, j, i); }

    double max_abs() const
    {
        double m = 0.0;
        for (double v : R) m = std::max(m, std::abs(v));
        return m;
    }
};

inline double max_abs_difference(const CurvatureOperator& a, const CurvatureOperator& b)
{
    if (a.n != b.n) throw UsageError("curvature operators of different dimension");
    double m = 0.0;
    for (std::size_t q = 0; q < a.R.size(); ++q) m = std::max(m, std::abs(a.R[q] - b.R[q]));
    return m;
}

/// Operator of constant sectional curvature c.
inline CurvatureOperator constant_curvature(int n, double c)
{
    CurvatureOperator R(n, CurvatureSource::Analytic);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            R(i, j, j, i) = c;
            R(i, j, i, j) = -c;
        }
    return R;
}

/// Riemannian product S^{p}(1) x S^{q}(1) in an orthonormal frame adapted to the factors.
inline CurvatureOperator product_of_spheres(int p, int q)
{
    const int n = p + q;
    CurvatureOperator R(n, CurvatureSource::Analytic);
    auto factor = [&](int i) { return i < p ? 0 : 1; };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j || factor(i) != factor(j)) continue;
            R(i, j, j, i) = 1.0;
            R(i, j, i, j) = -1.0;
        }
    return R;
}

inline CurvatureOperator curvature_from_gauss(const CubicTensor& h, double c)
{
    const int n = h.n;
    CurvatureOperator R(n, CurvatureSource::GaussEquation);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double v = c * ((i == l && j == k ? 1.0 : 0.0) - (i == k && j == l ? 1.0 : 0.0));
                    for (int C = 0; C < n; ++C) v += h(C, i, l) * h(C, j, k) - h(C, i, k) * h(C, j, l);
                    R(i, j, k, l) = v;
                }
    return R;
}

/// Largest violation of the algebraic symmetries and of the first Bianchi identity.
inline double bianchi_residual(const CurvatureOperator& R)
{
    const int n = R.n;
    double r = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    const double v = R(i, j, k, l);
                    r = std::max({r, std::abs(v + R(j, i, k, l)), std::abs(v + R(i, j, l, k)), std::abs(v - R(k, l, i, j)),
                                  std::abs(v + R(j, k, i, l) + R(k, i, j, l))});
                }
    return r;
}

/// tau(L) = sum_{a<b} K(u_a ^ u_b) for the span of the orthonormal columns of U (frame coordinates).
inline double tau_subspace(const CurvatureOperator& R, const Mat& U, double ortho_tol = 1e-8)
{
    const int n = R.n;
    if (U.rows() != n) throw UsageError("tau_subspace: basis vectors have wrong length");
    const Mat G = U.transpose() * U;
    if ((G - Mat::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff() > ortho_tol)
        throw UsageError("tau_subspace: basis is not orthonormal");
    const Mat P = U * U.transpose();
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const double pjk = P(j, k);
                if (pjk == 0.0) continue;
                const double* row = &R.R[((i * n + j) * n + k) * n];
                double t = 0.0;
                for (int l = 0; l < n; ++l) t += row[l] * P(i, l);
                s += t * pjk;
            }
    return 0.5 * s;
}

/// Transform a coordinate 4-tensor to the frame E_A = T(A,i) d_i.
inline CurvatureOperator to_frame(const std::vector<double>& Rm, int n, const Mat& T, CurvatureSource src)
{
    std::vector<double> a = Rm, b(Rm.size());
    auto idx = [n](int i, int j, int k, int l) { return ((i * n + j) * n + k) * n + l; };
    for (int slot = 0; slot < 4; ++slot) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) {
                        int I[4] = {i, j, k, l};
                        double s = 0.0;
                        for (int q = 0; q < n; ++q) {
                            int J[4] = {i, j, k, l};
                            J[slot] = q;
                            s += T(I[slot], q) * a[idx(J[0], J[1], J[2], J[3])];
                        }
                        b[idx(i, j, k, l)] = s;
                    }
        std::swap(a, b);
    }
    CurvatureOperator R(n, src);
    R.R = a;
    return R;
}

struct MetricFdSteps {
    double metric_step = 5e-3;
    JetSteps jet{};
};

/**
 * Independent oracle: Riemann tensor from Christoffel symbols of the induced metric,
 * with metric derivatives by fourth-order central differences of g itself.
 */
inline CurvatureOperator riemann_fd(const ImmersionChart& chart, const Vec& params, const AmbientSpace& space,
                                    const MetricFdSteps& steps = {})
{
    const int n = chart.param_dim;
    const double h = steps.metric_step;
    check_margin(chart, params, 2.0 * h + stencil_reach(1, steps.jet));
    auto metric = [&](const Vec& p) { return induced_metric(evaluate_jet(chart, p, 1, steps.jet), space); };
    using namespace stencil;

    const Mat g = metric(params);
    std::vector<Mat> dg(n, Mat::Zero(n, n));
    std::vector<Mat> ddg(n * n, Mat::Zero(n, n));
    for (int a = 0; a < n; ++a) {
        std::array<Mat, 5> gs;
        for (std::size_t s = 0; s < d2_off.size(); ++s) {
            if (d2_off[s] == 0) {
                gs[s] = g;
                continue;
            }
            Vec p = params;
            p[a] += d2_off[s] * h;
            gs[s] = metric(p);
        }
        // d1_off {-2,-1,1,2} are slots {0,1,3,4} of d2_off
        dg[a] = (d1_w[0] * gs[0] + d1_w[1] * gs[1] + d1_w[2] * gs[3] + d1_w[3] * gs[4]) / h;
        Mat acc = Mat::Zero(n, n);
        for (std::size_t s = 0; s < d2_off.size(); ++s) acc += d2_w[s] * gs[s];
        ddg[a * n + a] = acc / (h * h);
    }
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            Mat acc = Mat::Zero(n, n);
            for (std::size_t s = 0; s < d1_off.size(); ++s)
                for (std::size_t t = 0; t < d1_off.size(); ++t) {
                    Vec p = params;
                    p[a] += d1_off[s] * h;
                    p[b] += d1_off[t] * h;
                    acc += d1_w[s] * d1_w[t] * metric(p);
                }
            ddg[a * n + b] = ddg[b * n + a] = acc / (h * h);
        }

    const Mat gi = g.inverse();
    // Gamma_{q,jk} and its derivative d_i Gamma_{q,jk}
    auto G1 = [&](int q, int j, int k) { return 0.5 * (dg[j](q, k) + dg[k](q, j) - dg[q](j, k)); };
    auto dG1 = [&](int i, int q, int j, int k) {
        return 0.5 * (ddg[i * n + j](q, k) + ddg[i * n + k](q, j) - ddg[i * n + q](j, k));
    };
    std::vector<double> Gam(n * n * n), dGam(n * n * n * n);
    for (int p = 0; p < n; ++p)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                for (int q = 0; q < n; ++q) s += gi(p, q) * G1(q, j, k);
                Gam[(p * n + j) * n + k] = s;
            }
    for (int i = 0; i < n; ++i) {
        const Mat dgi = -gi * dg[i] * gi;
        for (int p = 0; p < n; ++p)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    double s = 0.0;
                    for (int q = 0; q < n; ++q) s += dgi(p, q) * G1(q, j, k) + gi(p, q) * dG1(i, q, j, k);
                    dGam[((i * n + p) * n + j) * n + k] = s;
                }
    }
    auto Gm = [&](int p, int j, int k) { return Gam[(p * n + j) * n + k]; };
    auto dGm = [&](int i, int p, int j, int k) { return dGam[((i * n + p) * n + j) * n + k]; };

    std::vector<double> Rup(n * n * n * n);   // R^p_{kij}, stored [p][k][i][j]
    for (int p = 0; p < n; ++p)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double v = dGm(i, p, j, k) - dGm(j, p, i, k);
                    for (int m = 0; m < n; ++m) v += Gm(m, j, k) * Gm(p, i, m) - Gm(m, i, k) * Gm(p, j, m);
                    Rup[((p * n + k) * n + i) * n + j] = v;
                }
    std::vector<double> Rm(n * n * n * n);   // <R(d_i,d_j) d_k, d_l>
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double s = 0.0;
                    for (int p = 0; p < n; ++p) s += g(l, p) * Rup[((p * n + k) * n + i) * n + j];
                    Rm[((i * n + j) * n + k) * n + l] = s;
                }
    const TangentFrame frame = orthonormal_frame(evaluate_jet(chart, params, 1, steps.jet), space);
    return to_frame(Rm, n, frame.coeffs, CurvatureSource::MetricFiniteDifference);
}

/**
 * Codazzi residual max_{A,B,C} || (nabla_A h)(B,C) - (nabla_B h)(A,C) || in the orthonormal frame,
 * from the coordinate cubic form C_ijk = <L_ij, J L_k> and its covariant derivative.
 */
inline double codazzi_residual(const Jet3& jet, const AmbientSpace& space)
{
    if (jet.order < 3) throw UsageError("Codazzi residual needs an order-3 jet");
    const int n = jet.n;
    const Mat g = induced_metric(jet, space);
    const Mat gi = g.inverse();
    std::vector<AmbientVector> Jd1(n);
    for (int i = 0; i < n; ++i) Jd1[i] = apply_J(space, jet.d1[i]);

    auto id3 = [n](int a, int b, int c) { return (a * n + b) * n + c; };
    std::vector<double> C(n * n * n), Gam(n * n * n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            for (int l = 0; l < n; ++l) C[id3(j, k, l)] = inner(space, jet.D2(j, k), Jd1[l]);
            Vec low(n);
            for (int q = 0; q < n; ++q) low[q] = inner(space, jet.D2(j, k), jet.d1[q]);
            const Vec up = gi * low;
            for (int m = 0; m < n; ++m) Gam[id3(m, j, k)] = up[m];
        }
    // JL_il = J d2(i,l)
    std::vector<AmbientVector> Jd2(n * n);
    for (int i = 0; i < n; ++i)
        for (int l = 0; l < n; ++l) Jd2[i * n + l] = apply_J(space, jet.D2(i, l));

    std::vector<double> nabC(n * n * n * n);   // (nabla_i C)_{jkl}
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double v = inner(space, jet.D3(i, j, k), Jd1[l]) + inner(space, jet.D2(j, k), Jd2[i * n + l]);
                    for (int m = 0; m < n; ++m)
                        v -= Gam[id3(m, i, j)] * C[id3(m, k, l)] + Gam[id3(m, i, k)] * C[id3(j, m, l)] +
                             Gam[id3(m, i, l)] * C[id3(j, k, m)];
                    nabC[((i * n + j) * n + k) * n + l] = v;
                }
    std::vector<double> cod(n * n * n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                    cod[((i * n + j) * n + k) * n + l] =
                        nabC[((i * n + j) * n + k) * n + l] - nabC[((j * n + i) * n + k) * n + l];
    const TangentFrame frame = orthonormal_frame(jet, space);
    const CurvatureOperator F = to_frame(cod, n, frame.coeffs, CurvatureSource::Analytic);
    double worst = 0.0;
    for (int A = 0; A < n; ++A)
        for (int B = 0; B < n; ++B)
            for (int Cc = 0; Cc < n; ++Cc) {
                double s = 0.0;
                for (int D = 0; D < n; ++D) s += F(A, B, Cc, D) * F(A, B, Cc, D);
                worst = std::max(worst, std::sqrt(s));
            }
    return worst;
}

inline double codazzi_residual(const ImmersionChart& chart, const Vec& params, const AmbientSpace& space,
                               const JetSteps& steps = {})
{
    return codazzi_residual(evaluate_jet(chart, params, 3, steps), space);
}

} // namespace dideal
