#pragma once

/**
 * @file blocks.hpp
 * @brief Building blocks Phi and G of the families, certified numerically on construction.
 */

#include <cmath>
#include <string>
#include <vector>

#include "dideal/pipeline.hpp"

namespace dideal {

enum class BlockName { TotallyGeodesicLegendreSphere, TotallyGeodesicLegendreHyperbolic, FlatLagrangianSubspace, MinimalLagrangianTorus };

inline std::string to_string(BlockName b)
{
    switch (b) {
    case BlockName::TotallyGeodesicLegendreSphere: return "TotallyGeodesicLegendreSphere";
    case BlockName::TotallyGeodesicLegendreHyperbolic: return "TotallyGeodesicLegendreHyperbolic";
    case BlockName::FlatLagrangianSubspace: return "FlatLagrangianSubspace";
    case BlockName::MinimalLagrangianTorus: return "MinimalLagrangianTorus";
    }
    return "?";
}

inline BlockName block_name_from_string(const std::string& s)
{
    for (auto b : {BlockName::TotallyGeodesicLegendreSphere, BlockName::TotallyGeodesicLegendreHyperbolic,
                   BlockName::FlatLagrangianSubspace, BlockName::MinimalLagrangianTorus})
        if (to_string(b) == s) return b;
    throw UsageError("unknown block '" + s + "'");
}

/// Ambient kind each block lives in.
inline AmbientKind block_ambient(BlockName b)
{
    switch (b) {
    case BlockName::TotallyGeodesicLegendreSphere: return AmbientKind::SphereLift;
    case BlockName::TotallyGeodesicLegendreHyperbolic: return AmbientKind::AdSLift;
    case BlockName::FlatLagrangianSubspace: return AmbientKind::FlatC;
    case BlockName::MinimalLagrangianTorus: return AmbientKind::SphereLift;
    }
    throw UsageError("unknown block");
}

struct BlockCertification {
    int samples = 0;
    double max_H2 = 0.0;
    double max_lagrangian = 0.0;
    double max_lift = 0.0;
    double max_cubic = 0.0;
    double max_abs_ideality = std::numeric_limits<double>::quiet_NaN();   ///< |rhs - delta(dim-1)|
};

struct BuildingBlock {
    BlockName name = BlockName::TotallyGeodesicLegendreSphere;
    int dim = 0;
    AmbientSpace ambient;
    ImmersionChart chart;
    bool certified_minimal = false;         ///< H = 0 on every sample
    bool certified_minimal_ideal = false;   ///< H = 0 and delta(dim-1) equality on every sample
    BlockCertification certification;

    /// Phi(u) as complex coordinates.
    CVec eval(const Vec& u) const { return to_complex(chart.eval(u)); }
};

struct BlockCertifyOptions {
    int samples = 3;
    std::uint64_t seed = 0xB10C;
    double h2_tol = 1e-10;
    double ideal_tol = 1e-4;
    double residual_tol = 1e-6;
};

namespace detail {

/// Point of S^m in R^{m+1} from m angles.
inline Vec sphere_point(const Vec& a)
{
    const int m = static_cast<int>(a.size());
    Vec x(m + 1);
    double s = 1.0;
    for (int k = 0; k < m; ++k) {
        x[k] = s * std::cos(a[k]);
        s *= std::sin(a[k]);
    }
    x[m] = s;
    return x;
}

inline ImmersionChart block_chart(BlockName name, int dim)
{
    ImmersionChart ch;
    ch.family_tag = FamilyTag::Block;
    ch.param_dim = dim;
    ch.labels["block"] = to_string(name);
    switch (name) {
    case BlockName::TotallyGeodesicLegendreSphere:
        ch.domain_box.assign(dim, Interval{0.4, 2.7});
        ch.eval = [dim](const Vec& u) {
            CVec z = sphere_point(u).cast<cplx>();
            (void)dim;
            return to_real(z);
        };
        break;
    case BlockName::TotallyGeodesicLegendreHyperbolic:
        ch.domain_box.assign(dim, Interval{0.4, 2.7});
        ch.domain_box[0] = Interval{0.2, 1.0};
        ch.eval = [dim](const Vec& u) {
            CVec z = CVec::Zero(dim + 1);
            z[0] = std::cosh(u[0]);
            const Vec s = sphere_point(u.tail(dim - 1));
            for (int k = 0; k < dim; ++k) z[k + 1] = std::sinh(u[0]) * s[k];
            return to_real(z);
        };
        break;
    case BlockName::FlatLagrangianSubspace:
        ch.domain_box.assign(dim, Interval{-0.5, 0.5});
        ch.eval = [](const Vec& u) { return to_real(u.cast<cplx>()); };
        break;
    case BlockName::MinimalLagrangianTorus:
        ch.domain_box.assign(dim, Interval{0.2, 2.9});
        ch.eval = [dim](const Vec& u) {
            CVec z(dim + 1);
            const double s = 1.0 / std::sqrt(dim + 1.0);
            for (int k = 0; k < dim; ++k) z[k] = s * std::polar(1.0, u[k]);
            z[dim] = s * std::polar(1.0, -u.sum());
            return to_real(z);
        };
        break;
    }
    return ch;
}

} // namespace detail

/**
 * Runs the pipeline at a few interior points: minimality (H^2), Lagrangian and lift residuals,
 * cubic symmetry, and for dim >= 3 the delta(dim-1) equality with the Lagrangian inequality.
 */
inline void certify_block(BuildingBlock& b, const BlockCertifyOptions& o = {})
{
    PipelineOptions po;
    po.checks = {false, false, b.dim >= 3, false};
    if (b.dim >= 3) {
        po.tuple = PartitionTuple{b.dim, {b.dim - 1}};
        po.theorem = Theorem::LagrangianStrict;
    }
    const std::vector<Vec> pts = sample_interior(b.chart, o.samples, o.seed, pipeline_margin(po));
    BlockCertification& c = b.certification;
    c = {};
    c.samples = o.samples;
    double ideal = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const PointRecord r = certify_point(b.chart, b.ambient, pts[k], po, point_seed(o.seed, static_cast<int>(k)));
        c.max_H2 = std::max(c.max_H2, r.H2);
        c.max_lagrangian = std::max(c.max_lagrangian, r.lagrangian_res);
        c.max_lift = std::max({c.max_lift, r.lift_norm_res, r.lift_horizontal_res});
        c.max_cubic = std::max(c.max_cubic, r.cubic_sym_res);
        if (b.dim >= 3) ideal = std::max(ideal, std::abs(r.ideality_res));
    }
    if (b.dim >= 3) c.max_abs_ideality = ideal;
    const bool structural = c.max_lagrangian <= o.residual_tol && c.max_lift <= o.residual_tol && c.max_cubic <= o.residual_tol;
    b.certified_minimal = structural && c.max_H2 <= o.h2_tol;
    b.certified_minimal_ideal = b.certified_minimal && b.dim >= 3 && ideal <= o.ideal_tol;
}

/// Builds the chart of a catalog block and certifies it.
inline BuildingBlock builtin_block(BlockName name, int dim, AmbientKind ambient, const BlockCertifyOptions& o = {})
{
    if (ambient != block_ambient(name))
        throw UsageError(to_string(name) + " lives in " + to_string(block_ambient(name)) + ", not " + to_string(ambient));
    const int min_dim = name == BlockName::TotallyGeodesicLegendreHyperbolic ? 2 : 1;
    if (dim < min_dim || dim > 12) throw UsageError("unsupported block dimension " + std::to_string(dim));
    BuildingBlock b;
    b.name = name;
    b.dim = dim;
    b.ambient = AmbientSpace::make(ambient, dim);
    b.chart = detail::block_chart(name, dim);
    certify_block(b, o);
    return b;
}

inline BuildingBlock builtin_block(BlockName name, int dim, const BlockCertifyOptions& o = {})
{
    return builtin_block(name, dim, block_ambient(name), o);
}

} // namespace dideal
