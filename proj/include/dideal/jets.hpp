#pragma once

/**
 * @file jets.hpp
 * @brief Immersion charts, finite-difference jets up to order three, orthonormal frames.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dideal/ambient.hpp"

namespace dideal {

enum class FamilyTag {
    UserDefined,
    FlatPlane,
    LagrangianGraph,
    Block,
    Case2_Cn,
    Case2_CPn,
    Case2_CHn_a,
    Case2_CHn_b,
    Case2_CHn_c,
    Case3_Cn,
    Case3_CPn,
    Case3_CHn_a,
    Case3_CHn_b,
    Case3_CHn_c,
};

inline std::string to_string(FamilyTag t)
{
    switch (t) {
    case FamilyTag::UserDefined: return "UserDefined";
    case FamilyTag::FlatPlane: return "FlatPlane";
    case FamilyTag::LagrangianGraph: return "LagrangianGraph";
    case FamilyTag::Block: return "Block";
    case FamilyTag::Case2_Cn: return "Case2_Cn";
    case FamilyTag::Case2_CPn: return "Case2_CPn";
    case FamilyTag::Case2_CHn_a: return "Case2_CHn_a";
    case FamilyTag::Case2_CHn_b: return "Case2_CHn_b";
    case FamilyTag::Case2_CHn_c: return "Case2_CHn_c";
    case FamilyTag::Case3_Cn: return "Case3_Cn";
    case FamilyTag::Case3_CPn: return "Case3_CPn";
    case FamilyTag::Case3_CHn_a: return "Case3_CHn_a";
    case FamilyTag::Case3_CHn_b: return "Case3_CHn_b";
    case FamilyTag::Case3_CHn_c: return "Case3_CHn_c";
    }
    return "?";
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
};

struct ImmersionChart {
    FamilyTag family_tag = FamilyTag::UserDefined;
    int param_dim = 0;
    std::vector<Interval> domain_box;
    std::function<AmbientVector(const Vec&)> eval;
    std::map<std::string, double> metadata;
    std::map<std::string, std::string> labels;

    Vec box_center() const
    {
        Vec p(param_dim);
        for (int i = 0; i < param_dim; ++i) p[i] = domain_box[i].mid();
        return p;
    }
};

/// Steps of the central stencils, one per derivative order.
struct JetSteps {
    double h1 = 1e-4;
    double h2 = 1e-3;
    double h3 = 5e-3;
};

/// Distance from the evaluation point reached by the stencils of a given order.
inline double stencil_reach(int order, const JetSteps& s = {})
{
    double r = 2.0 * s.h1;
    if (order >= 2) r = std::max(r, 2.0 * s.h2);
    if (order >= 3) r = std::max(r, 3.0 * s.h3);
    return r;
}

inline void check_margin(const ImmersionChart& chart, const Vec& params, double reach)
{
    if (params.size() != chart.param_dim) throw UsageError("parameter count does not match chart");
    for (int i = 0; i < chart.param_dim; ++i) {
        const Interval& I = chart.domain_box[i];
        if (!(params[i] - reach >= I.lo && params[i] + reach <= I.hi))
            throw DomainError("parameter " + std::to_string(i + 1) + " = " + std::to_string(params[i]) +
                              " is within stencil reach of the box [" + std::to_string(I.lo) + ", " +
                              std::to_string(I.hi) + "]");
    }
}

struct Jet3 {
    int n = 0;
    int order = 0;
    AmbientVector value;
    std::vector<AmbientVector> d1;
    std::vector<AmbientVector> d2;   ///< n*n, row-major
    std::vector<AmbientVector> d3;   ///< n*n*n, row-major

    const AmbientVector& D2(int i, int j) const { return d2[i * n + j]; }
    const AmbientVector& D3(int i, int j, int k) const { return d3[(i * n + j) * n + k]; }
};

namespace stencil {
// Fourth-order central weights.
inline constexpr std::array<int, 4> d1_off{-2, -1, 1, 2};
inline constexpr std::array<double, 4> d1_w{1.0 / 12, -8.0 / 12, 8.0 / 12, -1.0 / 12};
inline constexpr std::array<int, 5> d2_off{-2, -1, 0, 1, 2};
inline constexpr std::array<double, 5> d2_w{-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
inline constexpr std::array<int, 6> d3_off{-3, -2, -1, 1, 2, 3};
inline constexpr std::array<double, 6> d3_w{1.0 / 8, -1.0, 13.0 / 8, -13.0 / 8, 1.0, -1.0 / 8};
} // namespace stencil

namespace detail {

/// Smallest Gram-Schmidt pivot of the columns, relative to the largest column norm (Euclidean).
inline double relative_min_pivot(const std::vector<AmbientVector>& cols)
{
    double scale = 0.0;
    for (const auto& c : cols) scale = std::max(scale, c.norm());
    if (scale == 0.0) return 0.0;
    std::vector<AmbientVector> q;
    double pmin = 1.0;
    for (const auto& c : cols) {
        AmbientVector v = c;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& e : q) v -= e.dot(v) * e;
        const double nv = v.norm();
        pmin = std::min(pmin, nv / scale);
        if (nv == 0.0) return 0.0;
        q.push_back(v / nv);
    }
    return pmin;
}

} // namespace detail

/**
 * Derivatives of a chart by fourth-order central differences.
 * Mixed third derivatives use tensor products of first- and second-derivative stencils.
 */
inline Jet3 evaluate_jet(const ImmersionChart& chart, const Vec& params, int order, const JetSteps& steps = {})
{
    if (order < 1 || order > 3) throw UsageError("jet order must be 1, 2 or 3");
    check_margin(chart, params, stencil_reach(order, steps));
    using namespace stencil;
    const int n = chart.param_dim;
    Jet3 jet;
    jet.n = n;
    jet.order = order;
    jet.value = chart.eval(params);
    const Eigen::Index D = jet.value.size();

    auto at = [&](std::initializer_list<std::pair<int, double>> shifts) {
        Vec p = params;
        for (auto [i, s] : shifts) p[i] += s;
        return chart.eval(p);
    };

    jet.d1.assign(n, AmbientVector::Zero(D));
    const double h1 = steps.h1;
    for (int i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < d1_off.size(); ++a) jet.d1[i] += d1_w[a] * at({{i, d1_off[a] * h1}});
        jet.d1[i] /= h1;
    }
    if (detail::relative_min_pivot(jet.d1) < 1e-8)
        throw DegeneracyError("Jacobian is rank deficient at the requested parameters");

    if (order >= 2) {
        const double h = steps.h2;
        jet.d2.assign(n * n, AmbientVector::Zero(D));
        for (int i = 0; i < n; ++i) {
            AmbientVector acc = AmbientVector::Zero(D);
            for (std::size_t a = 0; a < d2_off.size(); ++a)
                acc += d2_w[a] * (d2_off[a] == 0 ? jet.value : at({{i, d2_off[a] * h}}));
            jet.d2[i * n + i] = acc / (h * h);
            for (int j = i + 1; j < n; ++j) {
                AmbientVector m = AmbientVector::Zero(D);
                for (std::size_t a = 0; a < d1_off.size(); ++a)
                    for (std::size_t b = 0; b < d1_off.size(); ++b)
                        m += d1_w[a] * d1_w[b] * at({{i, d1_off[a] * h}, {j, d1_off[b] * h}});
                m /= h * h;
                jet.d2[i * n + j] = m;
                jet.d2[j * n + i] = m;
            }
        }
    }

    if (order >= 3) {
        const double h = steps.h3;
        const double h3 = h * h * h;
        jet.d3.assign(n * n * n, AmbientVector::Zero(D));
        auto store = [&](int i, int j, int k, const AmbientVector& v) {
            const std::array<int, 3> idx{i, j, k};
            std::array<int, 3> p{0, 1, 2};
            do {
                jet.d3[(idx[p[0]] * n + idx[p[1]]) * n + idx[p[2]]] = v;
            } while (std::next_permutation(p.begin(), p.end()));
        };
        for (int i = 0; i < n; ++i) {
            AmbientVector acc = AmbientVector::Zero(D);
            for (std::size_t a = 0; a < d3_off.size(); ++a) acc += d3_w[a] * at({{i, d3_off[a] * h}});
            store(i, i, i, acc / h3);
            for (int k = 0; k < n; ++k) {
                if (k == i) continue;
                AmbientVector m = AmbientVector::Zero(D);
                for (std::size_t a = 0; a < d2_off.size(); ++a)
                    for (std::size_t b = 0; b < d1_off.size(); ++b)
                        m += d2_w[a] * d1_w[b] * at({{i, d2_off[a] * h}, {k, d1_off[b] * h}});
                store(i, i, k, m / h3);
            }
        }
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                for (int k = j + 1; k < n; ++k) {
                    AmbientVector m = AmbientVector::Zero(D);
                    for (std::size_t a = 0; a < d1_off.size(); ++a)
                        for (std::size_t b = 0; b < d1_off.size(); ++b)
                            for (std::size_t c = 0; c < d1_off.size(); ++c)
                                m += d1_w[a] * d1_w[b] * d1_w[c] *
                                     at({{i, d1_off[a] * h}, {j, d1_off[b] * h}, {k, d1_off[c] * h}});
                    store(i, j, k, m / h3);
                }
    }
    return jet;
}

/// Largest relative asymmetry ||d2[i][j] - d2[j][i]|| / (1 + max ||d2||).
inline double jet_symmetry_residual(const Jet3& jet)
{
    if (jet.d2.empty()) return 0.0;
    double scale = 0.0, worst = 0.0;
    for (const auto& v : jet.d2) scale = std::max(scale, v.norm());
    for (int i = 0; i < jet.n; ++i)
        for (int j = 0; j < jet.n; ++j) worst = std::max(worst, (jet.D2(i, j) - jet.D2(j, i)).norm());
    return worst / (1.0 + scale);
}

/**
 * Orthonormal tangent basis E_A = sum_i coeffs(A,i) d_i L.
 * `rotation` relates this frame to the frame a cubic tensor is expressed in
 * (identity for frames built from a jet).
 */
struct TangentFrame {
    std::vector<AmbientVector> vectors;
    Mat gram;
    Mat coeffs;
    Mat rotation;
    bool minimal_marker = false;

    int dim() const { return static_cast<int>(rotation.rows()); }

    /// Frame with no ambient realization, for work purely in frame coordinates.
    static TangentFrame abstract(int n)
    {
        TangentFrame f;
        f.gram = Mat::Identity(n, n);
        f.coeffs = Mat::Identity(n, n);
        f.rotation = Mat::Identity(n, n);
        return f;
    }
};

/// Modified Gram-Schmidt with one reorthogonalization pass, under the ambient (pseudo-)inner product.
inline TangentFrame orthonormal_frame(const Jet3& jet, const AmbientSpace& space)
{
    const int n = jet.n;
    TangentFrame f;
    f.coeffs = Mat::Zero(n, n);
    double scale = 0.0;
    for (const auto& d : jet.d1) scale = std::max(scale, std::sqrt(std::abs(inner(space, d, d))));
    for (int i = 0; i < n; ++i) {
        AmbientVector v = jet.d1[i];
        Vec coef = Vec::Zero(n);
        coef[i] = 1.0;
        for (int pass = 0; pass < 2; ++pass)
            for (int k = 0; k < i; ++k) {
                const double a = inner(space, f.vectors[k], v);
                v -= a * f.vectors[k];
                coef -= a * f.coeffs.row(k).transpose();
            }
        const double nn = inner(space, v, v);
        if (nn <= 0.0 || std::sqrt(nn) < 1e-8 * std::max(scale, 1e-300))
            throw DegeneracyError("tangent vectors are nearly dependent or not spacelike");
        const double nv = std::sqrt(nn);
        f.vectors.push_back(v / nv);
        f.coeffs.row(i) = coef.transpose() / nv;
    }
    f.gram.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) f.gram(i, j) = inner(space, f.vectors[i], f.vectors[j]);
    f.rotation = Mat::Identity(n, n);
    return f;
}

} // namespace dideal
