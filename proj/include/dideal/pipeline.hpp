#pragma once

/**
 * @file pipeline.hpp
 * @brief Per-point verification: jets, frame, cubic form, curvature cross-check, Codazzi,
 *        delta(2, n-2) certification and case classification at one parameter value.
 */

#include <optional>
#include <string>
#include <vector>

#include "dideal/curvature.hpp"
#include "dideal/delta.hpp"
#include "dideal/ideal.hpp"

namespace dideal {

struct PipelineChecks {
    bool gauss = true;
    bool codazzi = true;
    bool delta = true;
    bool classify = true;
};

struct PipelineOptions {
    JetSteps jet{};
    MetricFdSteps metric{};
    DeltaOptions delta{};
    ClassifyOptions classify{};
    std::optional<PartitionTuple> tuple;   ///< default (2, n-2)
    Theorem theorem = Theorem::Delta2N2;
    PipelineChecks checks{};
    double outside_tol = 1e-5;
};

struct PointRecord {
    Vec params;
    double lagrangian_res = 0.0;
    double lift_norm_res = 0.0;
    double lift_horizontal_res = 0.0;
    double cubic_sym_res = 0.0;
    double position_res = 0.0;
    double gauss_res = std::numeric_limits<double>::quiet_NaN();     ///< max |R_gauss - R_fd| / (1 + max |R_gauss|)
    double codazzi_res = std::numeric_limits<double>::quiet_NaN();
    double H2 = 0.0;
    double tau = 0.0;
    double delta = std::numeric_limits<double>::quiet_NaN();
    double rhs = std::numeric_limits<double>::quiet_NaN();
    double ideality_res = std::numeric_limits<double>::quiet_NaN();  ///< rhs - delta
    bool optimizer_converged = true;
    CaseLabel label = CaseLabel::NotIdeal;
    bool classified = false;
    double gamma = std::numeric_limits<double>::quiet_NaN();
    double lambda = std::numeric_limits<double>::quiet_NaN();
    double mu = std::numeric_limits<double>::quiet_NaN();
    double pattern_res = std::numeric_limits<double>::quiet_NaN();
    double margin_half = std::numeric_limits<double>::quiet_NaN();
    double margin_two_thirds = std::numeric_limits<double>::quiet_NaN();
    std::string route;
    std::vector<double> K_spectrum;
};

inline PartitionTuple default_tuple(int n) { return PartitionTuple{n, {2, n - 2}}; }

/// Distance kept from the box boundary so every stencil of the pipeline stays inside.
inline double pipeline_margin(const PipelineOptions& o)
{
    return std::max(stencil_reach(3, o.jet), 2.0 * o.metric.metric_step + stencil_reach(1, o.metric.jet)) + 1e-3;
}

inline PointRecord certify_point(const ImmersionChart& chart, const AmbientSpace& space, const Vec& params,
                                 const PipelineOptions& opts = {}, std::uint64_t seed = 0)
{
    const int n = chart.param_dim;
    if (space.complex_dim_n != n) throw UsageError("chart parameter count does not match the ambient dimension n");
    PointRecord rec;
    rec.params = params;
    const Jet3 jet = evaluate_jet(chart, params, opts.checks.codazzi ? 3 : 2, opts.jet);
    rec.lagrangian_res = lagrangian_residual(jet, space);
    const TangentFrame frame = orthonormal_frame(jet, space);
    if (space.is_lift()) {
        const LiftResiduals lr = lift_constraint_residuals(space, jet.value, jet.d1);
        rec.lift_norm_res = lr.norm_residual;
        rec.lift_horizontal_res = lr.horizontality_residual;
    }
    const CubicTensor cubic = second_fundamental_form(jet, space, frame, opts.outside_tol);
    rec.cubic_sym_res = cubic_symmetry_residual(cubic);
    rec.position_res = cubic.position_residual;
    rec.H2 = cubic.H2;
    const CurvatureOperator R = curvature_from_gauss(cubic, space.c);
    rec.tau = detail::tau_fast(R, Mat::Identity(n, n));
    if (opts.checks.gauss) {
        const CurvatureOperator Rfd = riemann_fd(chart, params, space, opts.metric);
        rec.gauss_res = max_abs_difference(R, Rfd) / (1.0 + R.max_abs());
    }
    if (opts.checks.codazzi) rec.codazzi_res = codazzi_residual(jet, space);
    if (opts.checks.delta) {
        DeltaOptions dopt = opts.delta;
        dopt.seed = seed;
        const PartitionTuple tuple = opts.tuple ? *opts.tuple : default_tuple(n);
        const DeltaResult d = certify_delta(R, tuple, space.c, cubic.H2, opts.theorem, dopt);
        rec.delta = d.delta_value;
        rec.rhs = d.rhs;
        rec.ideality_res = d.residual;
        rec.optimizer_converged = d.optimizer_trace.converged;
    }
    if (opts.checks.classify && opts.checks.delta) {
        const CaseClassification cc = classify_case(cubic, frame, cubic.H2, rec.ideality_res, opts.classify);
        rec.classified = true;
        rec.label = cc.label;
        rec.route = cc.route;
        rec.K_spectrum = cc.K_spectrum;
        if (cc.label != CaseLabel::NotIdeal) {
            rec.gamma = cc.coeffs.gamma;
            rec.lambda = cc.coeffs.lam;
            rec.mu = cc.coeffs.mu;
            rec.pattern_res = cc.pattern_residual;
            rec.margin_half = cc.margin_half;
            rec.margin_two_thirds = cc.margin_two_thirds;
        }
    }
    return rec;
}

/// Uniform points in the box shrunk by `margin`; point k draws from stream split(k).
inline std::vector<Vec> sample_interior(const ImmersionChart& chart, int count, std::uint64_t seed, double margin)
{
    const SplitMix64 root(seed);
    std::vector<Vec> pts;
    for (int k = 0; k < count; ++k) {
        SplitMix64 rng = root.split(static_cast<std::uint64_t>(k));
        Vec p(chart.param_dim);
        for (int i = 0; i < chart.param_dim; ++i) {
            const Interval& I = chart.domain_box[i];
            if (I.width() <= 2.0 * margin) throw DomainError("chart box too narrow for the stencil margin");
            p[i] = rng.uniform(I.lo + margin, I.hi - margin);
        }
        pts.push_back(p);
    }
    return pts;
}

/// Seed used for the optimizer at point k.
inline std::uint64_t point_seed(std::uint64_t seed, int k)
{
    return SplitMix64(seed ^ 0xD1B54A32D192ED03ULL).split(static_cast<std::uint64_t>(k)).next();
}

} // namespace dideal
