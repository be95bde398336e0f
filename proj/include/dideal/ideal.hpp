#pragma once

/**
 * @file ideal.hpp
 * @brief Adapted frames at delta(2,n-2)-ideal points, the K-tensor, and the case classifier.
 */

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "dideal/shape.hpp"

namespace dideal {

enum class CaseLabel { MinimalI, CaseII, CaseIII, NotIdeal, Ambiguous };

inline std::string to_string(CaseLabel c)
{
    switch (c) {
    case CaseLabel::MinimalI: return "MinimalI";
    case CaseLabel::CaseII: return "CaseII";
    case CaseLabel::CaseIII: return "CaseIII";
    case CaseLabel::NotIdeal: return "NotIdeal";
    case CaseLabel::Ambiguous: return "Ambiguous";
    }
    return "?";
}

struct ClassifyOptions {
    double ideal_tol = 1e-4;
    double minimal_H2 = 1e-10;
    double rel_tol = 1e-6;
    double ambiguity_factor = 2.0;
    double pattern_tol = 1e-4;
};

namespace detail {

/// h(x, y, z) for frame-coordinate vectors.
inline double cubic_eval(const CubicTensor& h, const Vec& x, const Vec& y, const Vec& z)
{
    const int n = h.n;
    double s = 0.0;
    for (int C = 0; C < n; ++C) {
        if (z[C] == 0.0) continue;
        double t = 0.0;
        for (int A = 0; A < n; ++A) {
            if (x[A] == 0.0) continue;
            for (int B = 0; B < n; ++B) t += h(C, A, B) * x[A] * y[B];
        }
        s += t * z[C];
    }
    return s;
}

/// Vector with components h(x, y, e_C).
inline Vec cubic_contract2(const CubicTensor& h, const Vec& x, const Vec& y)
{
    Vec out = Vec::Zero(h.n);
    for (int C = 0; C < h.n; ++C)
        for (int A = 0; A < h.n; ++A)
            for (int B = 0; B < h.n; ++B) out[C] += h(C, A, B) * x[A] * y[B];
    return out;
}

/// Orthonormal completion: first columns span `lead`, the rest come from a Householder QR.
inline Mat householder_complete(const Mat& lead)
{
    const int n = static_cast<int>(lead.rows());
    Eigen::HouseholderQR<Mat> qr(lead);
    Mat Q = qr.householderQ() * Mat::Identity(n, n);
    Mat out = Q;
    out.leftCols(lead.cols()) = lead;
    return out;
}

} // namespace detail

struct KTensor {
    Mat K;                        ///< matrix of X -> pi_D J h(JH, X) in the basis `D_basis`
    Mat D_basis;                  ///< n x (n-1), orthonormal basis of D = (JH)^perp in frame coordinates
    std::vector<double> spectrum; ///< ascending
    Mat eigenvectors;             ///< columns in D_basis coordinates, matching spectrum
};

/**
 * K(X) = pi_D J h(JH, X). With mean_vector m (components of H along J E_C),
 * JH = -m and J h(JH, X) has frame components sum_{A,B} h[C][A][B] m_A X_B.
 */
inline KTensor k_tensor(const CubicTensor& cubic, const TangentFrame& frame)
{
    (void)frame;
    const int n = cubic.n;
    const Vec& m = cubic.mean_vector;
    if (m.norm() <= 1e-8) throw NormalFormError("K-tensor undefined: mean curvature vanishes");
    const Vec a = -m / m.norm();
    const Mat full = detail::householder_complete(a);
    KTensor k;
    k.D_basis = full.rightCols(n - 1);
    Mat Kt = Mat::Zero(n, n);
    for (int C = 0; C < n; ++C)
        for (int B = 0; B < n; ++B)
            for (int A = 0; A < n; ++A) Kt(C, B) += cubic(C, A, B) * m[A];
    k.K = k.D_basis.transpose() * Kt * k.D_basis;
    k.K = 0.5 * (k.K + k.K.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(k.K);
    k.spectrum.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    k.eigenvectors = es.eigenvectors();
    return k;
}

struct AdaptedBasisResult {
    TangentFrame frame;
    std::string route;              ///< "minimal", "h(JH,JH)", "K-eigenvector" or "K-isotropic"
    double parallel_test = 0.0;     ///< |h(JH,JH) perp to H| / |h(JH,JH)|
    double k_spread = 0.0;          ///< (max - min eigenvalue of K) / max |eigenvalue|
    double phi_max = 0.0;
    double h2_11 = 0.0;             ///< <h(e1,e1), J e2> at the maximizer
    double second_order_margin = 0.0;  ///< h^1_11 - 2 h^1_22
    KTensor k;
    bool k_available = false;
};

namespace detail {

inline double phi_on_circle(double c3, double c2, double c1, double c0, double t)
{
    const double c = std::cos(t), s = std::sin(t);
    return c3 * c * c * c + 3.0 * c2 * c * c * s + 3.0 * c1 * c * s * s + c0 * s * s * s;
}

/// Global maximizer of a cubic trigonometric form: 720-point grid, golden-section polish, Newton on phi' = 0.
inline double maximize_phi(double c3, double c2, double c1, double c0)
{
    constexpr int N = 720;
    const double dt = 2.0 * std::numbers::pi / N;
    int best = 0;
    double fb = -1e300;
    for (int k = 0; k < N; ++k) {
        const double f = phi_on_circle(c3, c2, c1, c0, k * dt);
        if (f > fb) {
            fb = f;
            best = k;
        }
    }
    double lo = (best - 1) * dt, hi = (best + 1) * dt;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = phi_on_circle(c3, c2, c1, c0, x1), f2 = phi_on_circle(c3, c2, c1, c0, x2);
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = phi_on_circle(c3, c2, c1, c0, x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = phi_on_circle(c3, c2, c1, c0, x1);
        }
    }
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 4; ++it) {
        const double c = std::cos(t), s = std::sin(t);
        const double d1 = -3.0 * c3 * c * c * s + 3.0 * c2 * (c * c * c - 2.0 * c * s * s) +
                          3.0 * c1 * (2.0 * c * c * s - s * s * s) + 3.0 * c0 * s * s * c;
        const double d2 = -3.0 * c3 * (c * c * c - 2.0 * c * s * s) + 3.0 * c2 * (2.0 * s * s * s - 7.0 * c * c * s) +
                          3.0 * c1 * (2.0 * c * c * c - 7.0 * c * s * s) + 3.0 * c0 * (2.0 * c * c * s - s * s * s);
        if (!(d2 < 0.0)) break;
        const double tn = t - d1 / d2;
        if (std::abs(tn - t) > dt || phi_on_circle(c3, c2, c1, c0, tn) < phi_on_circle(c3, c2, c1, c0, t) - 1e-15) break;
        t = tn;
    }
    return t;
}

} // namespace detail

/**
 * Frame in which the cubic tensor takes the normal form of the equality case:
 * locate the distinguished plane D1, maximize phi(u) = <h(u,u), Ju> on its unit circle,
 * take e2 as the quarter turn of e1 (sign fixed by mu >= 0) and complete by Householder QR.
 */
inline AdaptedBasisResult adapted_basis_ex(const CubicTensor& cubic, const TangentFrame& frame,
                                           const ClassifyOptions& opts = {})
{
    const int n = cubic.n;
    AdaptedBasisResult r;
    r.frame = frame;
    r.frame.rotation = Mat::Identity(n, n);
    const Vec& m = cubic.mean_vector;
    if (cubic.H2 < opts.minimal_H2 || m.norm() <= 1e-8) {
        r.route = "minimal";
        r.frame.minimal_marker = true;
        return r;
    }
    const Vec a = -m / m.norm();
    const Vec w = detail::cubic_contract2(cubic, a, a);
    const Vec w_perp = w - w.dot(a) * a;
    r.parallel_test = w.norm() > 0.0 ? w_perp.norm() / w.norm() : 0.0;
    r.k = k_tensor(cubic, frame);
    r.k_available = true;
    const auto& sp = r.k.spectrum;
    const double emax = std::max(std::abs(sp.front()), std::abs(sp.back()));
    r.k_spread = emax > 0.0 ? (sp.back() - sp.front()) / emax : 0.0;

    Vec x2;
    if (r.parallel_test > opts.rel_tol) {
        r.route = "h(JH,JH)";
        x2 = w_perp / w_perp.norm();
    } else if (r.k_spread > opts.rel_tol) {
        r.route = "K-eigenvector";
        std::vector<double> sorted = sp;
        const double median = sorted[sorted.size() / 2];
        int pick = 0;
        for (int q = 1; q < static_cast<int>(sp.size()); ++q)
            if (std::abs(sp[q] - median) > std::abs(sp[pick] - median)) pick = q;
        x2 = r.k.D_basis * r.k.eigenvectors.col(pick);
    } else {
        r.route = "K-isotropic";
        const int d = n - 1;
        const Mat full = detail::householder_complete(a);
        // slots 1..n-1 of the rotated tensor are the D directions
        const CubicTensor T = rotate_cubic(cubic, full);
        Mat M = Mat::Zero(d, d);
        for (int p = 0; p < d; ++p)
            for (int q = 0; q < d; ++q)
                for (int s = 0; s < d; ++s)
                    for (int t = 0; t < d; ++t) M(p, q) += T(p + 1, s + 1, t + 1) * T(q + 1, s + 1, t + 1);
        Eigen::SelfAdjointEigenSolver<Mat> es(M);
        x2 = full.rightCols(d) * es.eigenvectors().col(0);
    }
    x2 -= x2.dot(a) * a;
    x2.normalize();

    const double c3 = detail::cubic_eval(cubic, a, a, a);
    const double c2 = detail::cubic_eval(cubic, a, a, x2);
    const double c1 = detail::cubic_eval(cubic, a, x2, x2);
    const double c0 = detail::cubic_eval(cubic, x2, x2, x2);
    const double t = detail::maximize_phi(c3, c2, c1, c0);
    Vec e1 = std::cos(t) * a + std::sin(t) * x2;
    Vec e2 = -std::sin(t) * a + std::cos(t) * x2;
    // mu = trace of h(e2,.,.) over span{e1,e2}^perp divided by n-2
    double tr = 0.0;
    for (int A = 0; A < n; ++A) tr += detail::cubic_eval(cubic, e2, Vec::Unit(n, A), Vec::Unit(n, A));
    const double mu = (tr - detail::cubic_eval(cubic, e2, e1, e1) - detail::cubic_eval(cubic, e2, e2, e2)) / (n - 2);
    if (mu < 0.0) e2 = -e2;

    Mat lead(n, 2);
    lead.col(0) = e1;
    lead.col(1) = e2;
    const Mat U = detail::householder_complete(lead);
    r.phi_max = detail::cubic_eval(cubic, e1, e1, e1);
    r.h2_11 = detail::cubic_eval(cubic, e1, e1, e2);
    r.second_order_margin = r.phi_max - 2.0 * detail::cubic_eval(cubic, e2, e2, e1);

    r.frame.rotation = U;
    r.frame.coeffs = U.transpose() * frame.coeffs;
    if (!frame.vectors.empty()) {
        r.frame.vectors.assign(n, AmbientVector::Zero(frame.vectors[0].size()));
        for (int A = 0; A < n; ++A)
            for (int b = 0; b < n; ++b) r.frame.vectors[A] += U(b, A) * frame.vectors[b];
    }
    r.frame.gram = Mat::Identity(n, n);
    return r;
}

inline TangentFrame adapted_basis(const CubicTensor& cubic, const TangentFrame& frame, const ClassifyOptions& opts = {})
{
    AdaptedBasisResult r = adapted_basis_ex(cubic, frame, opts);
    if (!r.frame.minimal_marker) {
        const AdaptedCoefficients c = adapted_coefficients(cubic, r.frame);
        if (c.violation > opts.pattern_tol)
            throw NormalFormError("no adapted frame: normal-form violation " + std::to_string(c.violation));
    }
    return r.frame;
}

/// Departure from the case-II pattern in a frame whose first vector is along JH.
inline double case2_pattern_residual(const CubicTensor& cubic, const TangentFrame& basis, double* lambda_out = nullptr)
{
    const int n = cubic.n;
    const CubicTensor h = rotate_cubic(cubic, basis.rotation);
    double lam = 0.0;
    for (int i = 1; i < n; ++i) lam += h(0, i, i);
    lam /= (n - 1);
    double v = std::abs(h(0, 0, 0) - (n - 1) * lam);
    for (int i = 1; i < n; ++i) {
        v = std::max(v, std::abs(h(0, 0, i)));
        for (int j = 1; j < n; ++j) v = std::max(v, std::abs(h(0, i, j) - (i == j ? lam : 0.0)));
    }
    for (int k = 1; k < n; ++k) {
        double tr = 0.0;
        for (int i = 1; i < n; ++i) tr += h(k, i, i);
        v = std::max(v, std::abs(tr));
    }
    if (lambda_out) *lambda_out = lam;
    return v;
}

struct CaseClassification {
    CaseLabel label = CaseLabel::NotIdeal;
    TangentFrame adapted_frame;
    AdaptedCoefficients coeffs;
    double pattern_residual = 0.0;
    std::vector<double> K_spectrum;
    std::string route;
    double parallel_test = 0.0;
    double k_spread = 0.0;
    double margin_half = 0.0;         ///< gamma - n lambda / 2
    double margin_two_thirds = 0.0;   ///< gamma - 2 n lambda / 3
    std::string note;
};

/**
 * Thresholded case decision. Each test value v against threshold t is ambiguous when
 * t / f < v < t * f (f = ambiguity_factor); the ideality test keeps NotIdeal for anything above tolerance.
 */
inline CaseClassification classify_case(const CubicTensor& cubic, const TangentFrame& frame, double H2,
                                        double ideal_residual, const ClassifyOptions& opts = {})
{
    CaseClassification out;
    out.adapted_frame = frame;
    const double f = opts.ambiguity_factor;
    auto near = [f](double v, double t) { return v > t / f && v < t * f; };
    const double r = std::abs(ideal_residual);
    if (r > opts.ideal_tol) {
        out.label = CaseLabel::NotIdeal;
        return out;
    }
    bool ambiguous = r > opts.ideal_tol / f;
    if (ambiguous) out.note = "ideality residual near tolerance";

    if (H2 < opts.minimal_H2) {
        out.label = near(H2, opts.minimal_H2) ? CaseLabel::Ambiguous : CaseLabel::MinimalI;
        if (ambiguous) out.label = CaseLabel::Ambiguous;
        out.coeffs = adapted_coefficients(cubic, frame);
        out.pattern_residual = std::sqrt(std::max(H2, 0.0));
        out.route = "minimal";
        return out;
    }
    if (near(H2, opts.minimal_H2)) {
        ambiguous = true;
        out.note = "squared mean curvature near the minimal threshold";
    }

    const AdaptedBasisResult ab = adapted_basis_ex(cubic, frame, opts);
    out.adapted_frame = ab.frame;
    out.route = ab.route;
    out.parallel_test = ab.parallel_test;
    out.k_spread = ab.k_spread;
    if (ab.k_available) out.K_spectrum = ab.k.spectrum;
    if (near(ab.parallel_test, opts.rel_tol) || near(ab.k_spread, opts.rel_tol)) {
        ambiguous = true;
        out.note = "case II/III test near threshold";
    }
    const bool case2 = ab.parallel_test <= opts.rel_tol && ab.k_spread <= opts.rel_tol;
    out.coeffs = adapted_coefficients(cubic, ab.frame);
    if (case2) {
        out.pattern_residual = case2_pattern_residual(cubic, ab.frame);
        out.label = CaseLabel::CaseII;
    } else {
        out.pattern_residual = out.coeffs.violation;
        out.label = CaseLabel::CaseIII;
    }
    const int n = cubic.n;
    out.margin_half = out.coeffs.gamma - n * out.coeffs.lam / 2.0;
    out.margin_two_thirds = out.coeffs.gamma - 2.0 * n * out.coeffs.lam / 3.0;
    if (ambiguous) out.label = CaseLabel::Ambiguous;
    return out;
}

} // namespace dideal
