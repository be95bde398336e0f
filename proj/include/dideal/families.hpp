#pragma once

/**
 * @file families.hpp
 * @brief Immersion charts of the classified delta(2,n-2)-ideal families, plus the flat plane
 *        and Lagrangian graphs used as non-family references.
 *
 * Case II charts have parameters (t, u_2..u_n); case III charts (x, y, u_3..u_n).
 */

#include <boost/math/quadrature/gauss.hpp>

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "dideal/blocks.hpp"
#include "dideal/companions.hpp"
#include "dideal/profiles.hpp"

namespace dideal {

struct FamilyChart {
    ImmersionChart chart;
    AmbientSpace space;
    std::shared_ptr<const ProfileSolution> profile;
    std::shared_ptr<const CompanionFields> companions;
    std::string block;
    std::map<std::string, std::string> selections;   ///< formula variants in use
};

/// Which closed form of the CH^n case (c) coefficient to evaluate.
enum class Case2cForm { Corrected, AsPrinted };

inline std::string to_string(Case2cForm f) { return f == Case2cForm::Corrected ? "Corrected" : "AsPrinted"; }

inline Case2cForm case2c_form_from_string(const std::string& s)
{
    if (s == "Corrected") return Case2cForm::Corrected;
    if (s == "AsPrinted") return Case2cForm::AsPrinted;
    throw UsageError("unknown case (c) form '" + s + "'");
}

struct StructuralThresholds {
    double lagrangian = 1e-6;
    double lift = 1e-6;
    double cubic = 1e-6;
    double gauss = 1e-3;
    double codazzi = 1e-3;
};

inline bool structural_pass(const PointRecord& r, const StructuralThresholds& t)
{
    auto ok = [](double v, double tol) { return std::isnan(v) || v <= tol; };
    return r.lagrangian_res <= t.lagrangian && r.lift_norm_res <= t.lift && r.lift_horizontal_res <= t.lift &&
           r.cubic_sym_res <= t.cubic && ok(r.gauss_res, t.gauss) && ok(r.codazzi_res, t.codazzi);
}

namespace detail {

inline double real_inner(const CVec& a, const CVec& b) { return (a.array() * b.conjugate().array()).real().sum(); }

/**
 * Line integral from the block's box center of the 1-form <Phi, i dPhi>, along the straight segment.
 * Derivatives along the segment by five-point central differences.
 */
inline double legendre_potential(const BuildingBlock& b, const Vec& u)
{
    const Vec u0 = b.chart.box_center();
    const Vec d = u - u0;
    if (d.norm() == 0.0) return 0.0;
    const double h = 1e-4;
    auto integrand = [&](double s) {
        const Vec p = u0 + s * d;
        const CVec Dphi = (b.eval(p - 2 * h * d) - 8.0 * b.eval(p - h * d) + 8.0 * b.eval(p + h * d) - b.eval(p + 2 * h * d)) /
                          (12.0 * h);
        return real_inner(b.eval(p), cplx(0.0, 1.0) * Dphi);
    };
    return boost::math::quadrature::gauss<double, 10>::integrate(integrand, 0.0, 1.0);
}

inline void require_block(const BuildingBlock& b, AmbientKind kind, int dim, bool ideal, const std::string& who)
{
    if (b.ambient.kind != kind || b.dim != dim)
        throw UsageError(who + " needs a block of dimension " + std::to_string(dim) + " in " + to_string(kind) + ", got " +
                         to_string(b.name) + " of dimension " + std::to_string(b.dim) + " in " + to_string(b.ambient.kind));
    if (ideal ? !b.certified_minimal_ideal : !b.certified_minimal)
        throw UsageError(who + ": block " + to_string(b.name) + " is not certified " + (ideal ? "minimal ideal" : "minimal"));
}

/// Cumulative quadrature on the profile grid: (ln rho, Re I, Im I) for CH^n case (c).
inline HermiteTable chc_integrals(const ProfileSolution& p, Case2cForm form, int n)
{
    const double k = n - 3.0;
    const OdeRhs rhs = [&](const State& y, State& d, double t) {
        d.assign(3, 0.0);
        if (form == Case2cForm::Corrected) {
            double l, ph, th;
            p.at(t, l, ph, th);
            d[0] = ph;
            const double r2 = std::exp(-2.0 * y[0]);
            d[1] = -l * r2;
            d[2] = -ph * r2;
        } else {
            const double a = 2.0 * std::atan(std::tanh(0.5 * k * t));
            const double m = std::pow(std::cosh(0.5 * k * t), -2.0 / k);
            d[1] = m * std::cos(a);
            d[2] = m * std::sin(a);
        }
    };
    HermiteTable tab;
    tab.t0 = p.t.front();
    tab.dt = p.step;
    State y(3, 0.0);
    for (std::size_t j = 0; j < p.t.size(); ++j) {
        if (j > 0) rk4_step(rhs, y, p.t[j - 1], p.step);
        State d;
        rhs(y, d, p.t[j]);
        tab.y.push_back(y);
        tab.dy.push_back(d);
    }
    return tab;
}

inline Interval intersect(Interval a, Interval b, const std::string& what)
{
    Interval r{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
    if (!(r.hi > r.lo)) throw DomainError(what + ": requested range does not overlap the integrated range");
    return r;
}

} // namespace detail

/// Runs the pipeline (no finite-difference curvature, no Codazzi) at a few points and stores the summary in metadata.
inline void self_certify(FamilyChart& fc, CaseLabel expected, int samples, std::uint64_t seed)
{
    PipelineOptions po;
    po.checks = {false, false, true, true};
    const std::vector<Vec> pts = sample_interior(fc.chart, samples, seed, pipeline_margin(po));
    double lag = 0.0, lift = 0.0, ideal = 0.0;
    int hits = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const PointRecord r = certify_point(fc.chart, fc.space, pts[k], po, point_seed(seed, static_cast<int>(k)));
        lag = std::max(lag, r.lagrangian_res);
        lift = std::max({lift, r.lift_norm_res, r.lift_horizontal_res});
        ideal = std::max(ideal, std::abs(r.ideality_res));
        hits += r.label == expected;
    }
    fc.chart.metadata["self_cert_lagrangian"] = lag;
    fc.chart.metadata["self_cert_lift"] = lift;
    fc.chart.metadata["self_cert_ideality"] = ideal;
    fc.chart.metadata["self_cert_case_fraction"] = samples > 0 ? static_cast<double>(hits) / samples : 0.0;
    fc.chart.labels["self_cert_expected"] = to_string(expected);
}

struct Case2Options {
    std::optional<Interval> t_range;
    Case2cForm chc_form = Case2cForm::Corrected;
    int self_cert_samples = 3;
    std::uint64_t seed = 0xC2;
};

inline FamilyTag case2_tag(ProfileKind k)
{
    switch (k) {
    case ProfileKind::Cn_II: return FamilyTag::Case2_Cn;
    case ProfileKind::CPn_II: return FamilyTag::Case2_CPn;
    case ProfileKind::CHn_IIa: return FamilyTag::Case2_CHn_a;
    case ProfileKind::CHn_IIb: return FamilyTag::Case2_CHn_b;
    case ProfileKind::CHn_IIc: return FamilyTag::Case2_CHn_c;
    }
    throw UsageError("unknown profile kind");
}

/// Case-II chart from a profile and a certified block, evaluating the displayed lift formula.
inline FamilyChart build_case2_chart(const ProfileSolution& profile, const BuildingBlock& block, const Case2Options& opts = {})
{
    const int n = profile.n;
    const ProfileKind kind = profile.kind;
    const std::string who = "case II " + to_string(kind);
    FamilyChart fc;
    switch (kind) {
    case ProfileKind::Cn_II:
        detail::require_block(block, AmbientKind::SphereLift, n - 1, true, who);
        fc.space = AmbientSpace::make(AmbientKind::FlatC, n);
        break;
    case ProfileKind::CPn_II:
        detail::require_block(block, AmbientKind::SphereLift, n - 1, true, who);
        fc.space = AmbientSpace::make(AmbientKind::SphereLift, n);
        break;
    case ProfileKind::CHn_IIa:
        detail::require_block(block, AmbientKind::AdSLift, n - 1, true, who);
        fc.space = AmbientSpace::make(AmbientKind::AdSLift, n);
        break;
    case ProfileKind::CHn_IIb:
        detail::require_block(block, AmbientKind::SphereLift, n - 1, true, who);
        fc.space = AmbientSpace::make(AmbientKind::AdSLift, n);
        break;
    case ProfileKind::CHn_IIc:
        detail::require_block(block, AmbientKind::FlatC, n - 1, true, who);
        fc.space = AmbientSpace::make(AmbientKind::AdSLift, n);
        break;
    }
    auto prof = std::make_shared<const ProfileSolution>(profile);
    auto blk = std::make_shared<const BuildingBlock>(block);
    fc.profile = prof;
    fc.block = to_string(block.name);

    ImmersionChart& ch = fc.chart;
    ch.family_tag = case2_tag(kind);
    ch.param_dim = n;
    const Interval full{prof->t_begin(), prof->t_end()};
    ch.domain_box.push_back(opts.t_range ? detail::intersect(*opts.t_range, full, who) : full);
    for (const Interval& I : block.chart.domain_box) ch.domain_box.push_back(I);
    ch.labels["block"] = fc.block;
    ch.labels["profile"] = to_string(kind);

    const cplx I(0.0, 1.0);
    switch (kind) {
    case ProfileKind::Cn_II:
        ch.eval = [prof, blk](const Vec& p) {
            double l, ph, th;
            prof->at(p[0], l, ph, th);
            const CVec z = std::polar(1.0, th) / cplx(ph, l) * blk->eval(p.tail(p.size() - 1));
            return to_real(z);
        };
        break;
    case ProfileKind::CPn_II:
    case ProfileKind::CHn_IIa:
    case ProfileKind::CHn_IIb:
        ch.eval = [prof, blk, n, kind, I](const Vec& p) {
            double l, ph, th;
            prof->at(p[0], l, ph, th);
            const double r2 = l * l + ph * ph;
            const double s = std::sqrt(kind == ProfileKind::CPn_II ? 1.0 + r2 : kind == ProfileKind::CHn_IIa ? 1.0 - r2 : r2 - 1.0);
            const CVec phi = blk->eval(p.tail(p.size() - 1));
            CVec z(n + 1);
            const cplx tail = std::polar(1.0, (n - 2.0) * th) * (I * l - ph) / s;
            if (kind == ProfileKind::CHn_IIb) {
                z[0] = tail;
                z.tail(n) = std::polar(1.0, th) * phi / s;
            } else {
                z.head(n) = std::polar(1.0, th) * phi / s;
                z[n] = tail;
            }
            return to_real(z);
        };
        break;
    case ProfileKind::CHn_IIc: {
        const double k = n - 3.0;
        auto integrals = std::make_shared<const HermiteTable>(detail::chc_integrals(*prof, opts.chc_form, n));
        const Case2cForm form = opts.chc_form;
        fc.selections["case2c_form"] = to_string(form);
        ch.labels["case2c_form"] = to_string(form);
        const double theta0 = prof->theta.front();
        ch.eval = [prof, blk, integrals, n, k, form, theta0, I](const Vec& p) {
            const double t = p[0];
            State q;
            integrals->eval(t, q);
            cplx pre;
            if (form == Case2cForm::Corrected) {
                double l, ph, th;
                prof->at(t, l, ph, th);
                pre = std::exp(q[0]) * std::polar(1.0, -(th - theta0));
            } else {
                pre = std::pow(std::cosh(0.5 * k * t), 2.0 / k) * std::polar(1.0, -2.0 / k * std::atan(std::tanh(0.5 * k * t)));
            }
            const Vec u = p.tail(p.size() - 1);
            const CVec phi = blk->eval(u);
            const cplx A = detail::legendre_potential(*blk, u) + 0.5 * I * phi.squaredNorm();
            const cplx Iq(q[1], q[2]);
            CVec z(n + 1);
            z[0] = A + I + Iq;
            z.segment(1, n - 1) = phi;
            z[n] = A + Iq;
            return to_real(pre * z);
        };
        break;
    }
    }
    if (opts.self_cert_samples > 0) self_certify(fc, CaseLabel::CaseII, opts.self_cert_samples, opts.seed);
    return fc;
}

struct Case3Options {
    Interval x_range{-0.3, 0.3};
    Interval y_range{-0.4, 0.4};
    int self_cert_samples = 3;
    std::uint64_t seed = 0xC3;
};

inline FamilyTag case3_tag(WarpKind k)
{
    switch (k) {
    case WarpKind::C: return FamilyTag::Case3_Cn;
    case WarpKind::CP: return FamilyTag::Case3_CPn;
    case WarpKind::CHa: return FamilyTag::Case3_CHn_a;
    case WarpKind::CHb: return FamilyTag::Case3_CHn_b;
    case WarpKind::CHc: return FamilyTag::Case3_CHn_c;
    }
    throw UsageError("unknown warp kind");
}

/// Case-III chart from integrated companion fields and a certified minimal block.
inline FamilyChart build_case3_chart(const CompanionFields& comp, const BuildingBlock& block, const Case3Options& opts = {})
{
    const WarpField& warp = comp.warp;
    const int n = warp.n;
    const WarpKind kind = warp.kind;
    const std::string who = "case III " + to_string(kind);
    FamilyChart fc;
    switch (kind) {
    case WarpKind::C:
        detail::require_block(block, AmbientKind::SphereLift, n - 2, false, who);
        fc.space = AmbientSpace::make(AmbientKind::FlatC, n);
        break;
    case WarpKind::CP:
        detail::require_block(block, AmbientKind::SphereLift, n - 2, false, who);
        fc.space = AmbientSpace::make(AmbientKind::SphereLift, n);
        break;
    case WarpKind::CHa:
        detail::require_block(block, AmbientKind::SphereLift, n - 2, false, who);
        fc.space = AmbientSpace::make(AmbientKind::AdSLift, n);
        break;
    case WarpKind::CHb:
        detail::require_block(block, AmbientKind::AdSLift, n - 2, false, who);
        fc.space = AmbientSpace::make(AmbientKind::AdSLift, n);
        break;
    case WarpKind::CHc:
        detail::require_block(block, AmbientKind::FlatC, n - 2, false, who);
        fc.space = AmbientSpace::make(AmbientKind::AdSLift, n);
        break;
    }
    const Interval xr = detail::intersect(opts.x_range, {comp.xline.t_begin(), comp.xline.t_end()}, who);
    const Interval yr = detail::intersect(opts.y_range, warp.y_range(), who);
    for (double f : warp.f) {
        if (kind == WarpKind::CP && !(f < 1.0)) throw DomainError(who + " needs f < 1 on the grid");
        if (kind == WarpKind::CHb && !(f > 1.0)) throw DomainError(who + " needs f > 1 on the grid");
    }
    auto cp = std::make_shared<const CompanionFields>(comp);
    auto blk = std::make_shared<const BuildingBlock>(block);
    fc.companions = cp;
    fc.block = to_string(block.name);
    if (kind == WarpKind::CHc) fc.selections["chc_sign_variant"] = to_string(comp.options.chc_variant);
    if (kind == WarpKind::CHb) fc.selections["chb_phase"] = comp.options.chb_phase == ChbPhase::Corrected ? "Corrected" : "AsPrinted";

    ImmersionChart& ch = fc.chart;
    ch.family_tag = case3_tag(kind);
    ch.param_dim = n;
    ch.domain_box = {xr, yr};
    for (const Interval& I : block.chart.domain_box) ch.domain_box.push_back(I);
    ch.labels["block"] = fc.block;
    ch.labels["warp"] = to_string(kind);
    for (const auto& [key, val] : fc.selections) ch.labels[key] = val;

    ch.eval = [cp, blk, n, kind](const Vec& p) {
        const double x = p[0], y = p[1];
        const Vec u = p.tail(n - 2);
        const WarpSample w = cp->warp_at(x, y);
        const double f = w.f;
        const State s = cp->state_at(x, y);
        const CVec phi = blk->eval(u);
        const cplx ex = std::polar(1.0, x), exn = std::polar(1.0, (n - 1.0) * x);
        const cplx I(0.0, 1.0);
        auto theta2 = [&]() {
            CVec t(2);
            t << cplx(s[4], s[5]), cplx(s[6], s[7]);
            return t;
        };
        switch (kind) {
        case WarpKind::C: {
            CVec z(n);
            z.head(n - 1) = f * ex * phi;
            z[n - 1] = cplx(s[0], s[1]);
            return to_real(z);
        }
        case WarpKind::CP: {
            CVec z(n + 1);
            z.head(n - 1) = ex * f * phi;
            z.tail(2) = exn * std::sqrt(1.0 - f * f) * theta2();
            return to_real(z);
        }
        case WarpKind::CHa: {
            CVec z(n + 1);
            z.head(2) = exn * std::sqrt(1.0 + f * f) * theta2();
            z.tail(n - 1) = -ex * f * phi;
            return to_real(z);
        }
        case WarpKind::CHb: {
            CVec z(n + 1);
            z.head(n - 1) = ex * f * phi;
            z.tail(2) = -exn * std::sqrt(f * f - 1.0) * theta2();
            return to_real(z);
        }
        case WarpKind::CHc: {
            const cplx F(s[0], s[1]);
            const double uu = 0.5 * (phi.squaredNorm() + std::norm(F) - 1.0) + 0.5 / (f * f);
            const double v = s[2] - detail::legendre_potential(*blk, u);
            CVec z(n + 1);
            z[0] = cplx(uu + 1.0, v);
            z[1] = cplx(uu, v);
            z.segment(2, n - 2) = phi;
            z[n] = cp->options.chc_variant == ChcSignVariant::Conjugate ? std::conj(F) : F;
            return to_real(f * ex * z);
        }
        }
        throw UsageError("unknown warp kind");
    };
    if (opts.self_cert_samples > 0) self_certify(fc, CaseLabel::CaseIII, opts.self_cert_samples, opts.seed);
    return fc;
}

/// Flat Lagrangian R^n in C^n.
inline FamilyChart flat_plane_chart(int n)
{
    FamilyChart fc;
    fc.space = AmbientSpace::make(AmbientKind::FlatC, n);
    fc.chart.family_tag = FamilyTag::FlatPlane;
    fc.chart.param_dim = n;
    fc.chart.domain_box.assign(n, Interval{-1.0, 1.0});
    fc.chart.eval = [](const Vec& u) { return to_real(u.cast<cplx>()); };
    return fc;
}

/// Gradient graph u -> u + i grad F(u) with F a random quadratic plus cubic polynomial of size `scale`.
inline FamilyChart lagrangian_graph_chart(int n, std::uint64_t seed, double scale = 0.3)
{
    SplitMix64 rng(seed);
    auto B = std::make_shared<Mat>(Mat::Zero(n, n));
    auto C = std::make_shared<std::vector<double>>(n * n * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) (*B)(i, j) = (*B)(j, i) = scale * rng.normal();
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            for (int k = j; k < n; ++k) {
                const double v = scale * rng.normal();
                const int perm[6][3] = {{i, j, k}, {i, k, j}, {j, i, k}, {j, k, i}, {k, i, j}, {k, j, i}};
                for (const auto& q : perm) (*C)[(q[0] * n + q[1]) * n + q[2]] = v;
            }
    FamilyChart fc;
    fc.space = AmbientSpace::make(AmbientKind::FlatC, n);
    fc.chart.family_tag = FamilyTag::LagrangianGraph;
    fc.chart.param_dim = n;
    fc.chart.domain_box.assign(n, Interval{-0.5, 0.5});
    fc.chart.eval = [B, C, n](const Vec& u) {
        Vec g = (*B) * u;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) g[i] += 0.5 * (*C)[(i * n + j) * n + k] * u[j] * u[k];
        CVec z(n);
        for (int i = 0; i < n; ++i) z[i] = cplx(u[i], g[i]);
        return to_real(z);
    };
    return fc;
}

/// Default parameters of every family; all fields are overridable through the scenario file.
struct FamilySpec {
    FamilyTag tag = FamilyTag::Case2_Cn;
    int n = 5;
    ProfileInit init{};
    Interval t_span{0.0, 0.3};
    double f0 = 1.0;
    double fx0 = 0.0;                         ///< slope of f along warp_axis at the base point
    double x0 = 0.0;
    double y0 = 0.0;
    WarpAxis warp_axis = WarpAxis::X;
    Interval x_range{-0.3, 0.3};
    Interval y_range{-0.4, 0.4};
    std::optional<BlockName> block;
    Case2cForm chc_form = Case2cForm::Corrected;
    ChcSignVariant chc_variant = ChcSignVariant::Conjugate;
    ChbPhase chb_phase = ChbPhase::Corrected;
    ProfileOptions profile{};
    WarpOptions warp{};
    CompanionOptions companion{};
    int self_cert_samples = 3;
    std::uint64_t graph_seed = 1;
};

inline FamilySpec default_family_spec(FamilyTag tag, int n)
{
    FamilySpec s;
    s.tag = tag;
    s.n = n;
    switch (tag) {
    case FamilyTag::Case2_Cn:
        s.init = closed_form::cn_init(n, 0.5, 1.0);
        s.t_span = {0.0, 1.0};
        break;
    case FamilyTag::Case2_CPn: s.init = {0.5, 0.7, 0.0}; break;
    case FamilyTag::Case2_CHn_a: s.init = {0.4, 0.5, 0.0}; break;
    case FamilyTag::Case2_CHn_b: s.init = {0.8, 0.9, 0.0}; break;
    case FamilyTag::Case2_CHn_c:
        s.init = {1.0, 0.0, 0.0};
        s.t_span = {0.0, 0.4};
        break;
    case FamilyTag::Case3_Cn: s.x_range = {-1.2 / (n - 1), 1.2 / (n - 1)}; break;
    case FamilyTag::Case3_CPn:
        s.f0 = 0.6;
        s.x_range = {-0.2, 0.2};
        break;
    case FamilyTag::Case3_CHn_a: s.f0 = 0.5; break;
    case FamilyTag::Case3_CHn_b: s.f0 = 1.5; break;
    case FamilyTag::Case3_CHn_c: s.warp_axis = WarpAxis::Y; break;
    default: break;
    }
    return s;
}

inline bool is_case2(FamilyTag t)
{
    return t == FamilyTag::Case2_Cn || t == FamilyTag::Case2_CPn || t == FamilyTag::Case2_CHn_a || t == FamilyTag::Case2_CHn_b ||
           t == FamilyTag::Case2_CHn_c;
}

inline bool is_case3(FamilyTag t)
{
    return t == FamilyTag::Case3_Cn || t == FamilyTag::Case3_CPn || t == FamilyTag::Case3_CHn_a || t == FamilyTag::Case3_CHn_b ||
           t == FamilyTag::Case3_CHn_c;
}

inline ProfileKind profile_kind_of(FamilyTag t)
{
    switch (t) {
    case FamilyTag::Case2_Cn: return ProfileKind::Cn_II;
    case FamilyTag::Case2_CPn: return ProfileKind::CPn_II;
    case FamilyTag::Case2_CHn_a: return ProfileKind::CHn_IIa;
    case FamilyTag::Case2_CHn_b: return ProfileKind::CHn_IIb;
    case FamilyTag::Case2_CHn_c: return ProfileKind::CHn_IIc;
    default: throw UsageError(to_string(t) + " is not a case II family");
    }
}

inline WarpKind warp_kind_of(FamilyTag t)
{
    switch (t) {
    case FamilyTag::Case3_Cn: return WarpKind::C;
    case FamilyTag::Case3_CPn: return WarpKind::CP;
    case FamilyTag::Case3_CHn_a: return WarpKind::CHa;
    case FamilyTag::Case3_CHn_b: return WarpKind::CHb;
    case FamilyTag::Case3_CHn_c: return WarpKind::CHc;
    default: throw UsageError(to_string(t) + " is not a case III family");
    }
}

/// Totally geodesic (or flat) block matching the family's formula.
inline BlockName default_block(FamilyTag t)
{
    switch (t) {
    case FamilyTag::Case2_CHn_a:
    case FamilyTag::Case3_CHn_b: return BlockName::TotallyGeodesicLegendreHyperbolic;
    case FamilyTag::Case2_CHn_c:
    case FamilyTag::Case3_CHn_c: return BlockName::FlatLagrangianSubspace;
    default: return BlockName::TotallyGeodesicLegendreSphere;
    }
}

inline FamilyChart build_family(const FamilySpec& s)
{
    if (s.tag == FamilyTag::FlatPlane) return flat_plane_chart(s.n);
    if (s.tag == FamilyTag::LagrangianGraph) return lagrangian_graph_chart(s.n, s.graph_seed);
    const BlockName bn = s.block ? *s.block : default_block(s.tag);
    if (is_case2(s.tag)) {
        const BuildingBlock b = builtin_block(bn, s.n - 1);
        const ProfileSolution p = integrate_profile(profile_kind_of(s.tag), s.n, s.init, s.t_span.lo, s.t_span.hi, s.profile);
        Case2Options o;
        o.chc_form = s.chc_form;
        o.self_cert_samples = s.self_cert_samples;
        return build_case2_chart(p, b, o);
    }
    if (is_case3(s.tag)) {
        const BuildingBlock b = builtin_block(bn, s.n - 2);
        const Interval along = s.warp_axis == WarpAxis::X ? s.x_range : s.y_range;
        const WarpField w = solve_warp_reduced(warp_kind_of(s.tag), s.n, s.warp_axis, s.x0, s.y0, s.f0, s.fx0, along.lo,
                                               along.hi, s.warp);
        CompanionOptions co = s.companion;
        co.chc_variant = s.chc_variant;
        co.chb_phase = s.chb_phase;
        const Interval yr = s.warp_axis == WarpAxis::Y ? Interval{w.table.t_begin(), w.table.t_end()} : s.y_range;
        const CompanionFields c = integrate_companions(w, s.x_range, yr, co);
        Case3Options o;
        o.x_range = s.x_range;
        o.y_range = s.y_range;
        o.self_cert_samples = s.self_cert_samples;
        return build_case3_chart(c, b, o);
    }
    throw UsageError("no builder for family " + to_string(s.tag));
}

struct VariantOutcome {
    ChcSignVariant variant = ChcSignVariant::Conjugate;
    bool passes = false;
    int points = 0;
    int passing_points = 0;
    double max_lagrangian = 0.0;
    double max_lift = 0.0;
    double max_cubic = 0.0;
    double max_gauss = 0.0;
    double max_codazzi = 0.0;
    std::string failure;
};

struct SignResolution {
    std::vector<VariantOutcome> outcomes;
    std::optional<ChcSignVariant> selected;   ///< set iff exactly one variant passes
};

/// Structural suite over `samples` interior points of a chart; thrown numerical errors count as failures.
inline VariantOutcome structural_suite(const FamilyChart& fc, int samples, std::uint64_t seed,
                                       const StructuralThresholds& thr = {})
{
    VariantOutcome o;
    PipelineOptions po;
    po.checks = {true, true, false, false};
    const std::vector<Vec> pts = sample_interior(fc.chart, samples, seed, pipeline_margin(po));
    for (const Vec& p : pts) {
        ++o.points;
        try {
            const PointRecord r = certify_point(fc.chart, fc.space, p, po);
            o.max_lagrangian = std::max(o.max_lagrangian, r.lagrangian_res);
            o.max_lift = std::max({o.max_lift, r.lift_norm_res, r.lift_horizontal_res});
            o.max_cubic = std::max(o.max_cubic, r.cubic_sym_res);
            o.max_gauss = std::max(o.max_gauss, r.gauss_res);
            o.max_codazzi = std::max(o.max_codazzi, r.codazzi_res);
            o.passing_points += structural_pass(r, thr);
        } catch (const std::runtime_error& e) {
            if (o.failure.empty()) o.failure = e.what();
        }
    }
    o.passes = o.passing_points == o.points;
    return o;
}

/// Builds the CH^n case (c) chart with both sign variants and keeps the one passing the structural suite.
inline SignResolution resolve_sign_variant(FamilySpec spec, int samples, std::uint64_t seed,
                                           const StructuralThresholds& thr = {})
{
    spec.tag = FamilyTag::Case3_CHn_c;
    SignResolution res;
    int passing = 0;
    for (ChcSignVariant v : {ChcSignVariant::Conjugate, ChcSignVariant::Direct}) {
        spec.chc_variant = v;
        VariantOutcome o;
        try {
            spec.self_cert_samples = 0;
            o = structural_suite(build_family(spec), samples, seed, thr);
        } catch (const std::runtime_error& e) {
            o.failure = e.what();
        }
        o.variant = v;
        if (o.passes) {
            ++passing;
            res.selected = v;
        }
        res.outcomes.push_back(o);
    }
    if (passing != 1) res.selected.reset();
    return res;
}

} // namespace dideal
