#pragma once

/**
 * @file scenario.hpp
 * @brief Scenario runner: JSON config in, report.json / points.csv / profile.csv / field.csv out.
 */

#include <atomic>
#include <cmath>
#include <exception>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dideal/families.hpp"

namespace dideal {

using json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes of the runner.
enum ExitCode { ExitPass = 0, ExitCheckFailure = 1, ExitUsage = 2, ExitNumerical = 3 };

inline FamilyTag family_tag_from_string(const std::string& s)
{
    for (auto t : {FamilyTag::FlatPlane, FamilyTag::LagrangianGraph, FamilyTag::Case2_Cn, FamilyTag::Case2_CPn,
                   FamilyTag::Case2_CHn_a, FamilyTag::Case2_CHn_b, FamilyTag::Case2_CHn_c, FamilyTag::Case3_Cn,
                   FamilyTag::Case3_CPn, FamilyTag::Case3_CHn_a, FamilyTag::Case3_CHn_b, FamilyTag::Case3_CHn_c})
        if (to_string(t) == s) return t;
    throw UsageError("unknown family kind '" + s + "'");
}

inline CaseLabel case_label_from_string(const std::string& s)
{
    for (auto c : {CaseLabel::MinimalI, CaseLabel::CaseII, CaseLabel::CaseIII, CaseLabel::NotIdeal, CaseLabel::Ambiguous})
        if (to_string(c) == s) return c;
    throw UsageError("unknown case label '" + s + "'");
}

inline Theorem theorem_from_string(const std::string& s)
{
    for (auto t : {Theorem::RealSpaceForm, Theorem::LagrangianStrict, Theorem::LagrangianFull, Theorem::Delta2N2})
        if (to_string(t) == s) return t;
    throw UsageError("unknown theorem '" + s + "'");
}

/// Ambient kind a family lives in.
inline AmbientKind family_ambient(FamilyTag t)
{
    switch (t) {
    case FamilyTag::Case2_CPn:
    case FamilyTag::Case3_CPn: return AmbientKind::SphereLift;
    case FamilyTag::Case2_CHn_a:
    case FamilyTag::Case2_CHn_b:
    case FamilyTag::Case2_CHn_c:
    case FamilyTag::Case3_CHn_a:
    case FamilyTag::Case3_CHn_b:
    case FamilyTag::Case3_CHn_c: return AmbientKind::AdSLift;
    default: return AmbientKind::FlatC;
    }
}

struct SampleSpec {
    std::string mode = "random";   ///< "random" or "grid"
    int count = 20;                ///< random mode
    int per_axis = 3;              ///< grid mode: per_axis^n points
    std::uint64_t seed = 1;
};

struct Tolerances {
    double lagrangian = 1e-6;
    double lift = 1e-6;
    double cubic = 1e-6;
    double gauss = 1e-3;
    double codazzi = 1e-3;
    double inequality = 1e-4;        ///< rhs - delta >= -tol
    double ideality = 1e-4;          ///< |rhs - delta| <= tol
    double pattern = 1e-4;
    double case_fraction = 0.99;     ///< share of points carrying the expected label
    double closed_form_warp = 1e-8;
    double closed_form_profile = 1e-7;
    double conserved = 1e-8;         ///< relative drift per unit time
};

inline const std::vector<std::string>& known_checks()
{
    static const std::vector<std::string> k = {"lagrangian", "lift",     "cubic",       "gauss",    "codazzi",
                                               "inequality", "ideality", "classify",    "closed_form", "conserved"};
    return k;
}

struct Scenario {
    int schema = 1;
    std::string name;
    FamilySpec family;
    bool chc_variant_auto = false;
    int sign_samples = 3;
    SampleSpec samples;
    std::vector<std::string> checks;
    Tolerances tol;
    std::optional<CaseLabel> expect;
    PipelineOptions pipeline;
    int plot_stride = 10;
    json echo;
};

namespace detail {

struct Reader {
    const json& j;
    std::string path;

    bool has(const char* k) const { return j.contains(k); }
    std::string at(const char* k) const { return path.empty() ? std::string(k) : path + "." + k; }

    const json& get(const char* k) const
    {
        if (!j.contains(k)) throw UsageError("missing field '" + at(k) + "'");
        return j[k];
    }
    double num(const char* k, double dflt) const
    {
        if (!has(k)) return dflt;
        if (!j[k].is_number()) throw UsageError("field '" + at(k) + "' must be a number");
        return j[k].get<double>();
    }
    long long integer(const char* k, long long dflt) const
    {
        if (!has(k)) return dflt;
        if (!j[k].is_number_integer()) throw UsageError("field '" + at(k) + "' must be an integer");
        return j[k].get<long long>();
    }
    std::string str(const char* k, const std::string& dflt) const
    {
        if (!has(k)) return dflt;
        if (!j[k].is_string()) throw UsageError("field '" + at(k) + "' must be a string");
        return j[k].get<std::string>();
    }
    Interval interval(const char* k, Interval dflt) const
    {
        if (!has(k)) return dflt;
        const json& v = j[k];
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number() || !(v[0].get<double>() < v[1].get<double>()))
            throw UsageError("field '" + at(k) + "' must be [lo, hi] with lo < hi");
        return {v[0].get<double>(), v[1].get<double>()};
    }
    Reader sub(const char* k) const
    {
        const json& v = get(k);
        if (!v.is_object()) throw UsageError("field '" + at(k) + "' must be an object");
        return {v, at(k)};
    }
    void only(std::initializer_list<const char*> keys) const
    {
        for (auto it = j.begin(); it != j.end(); ++it) {
            bool ok = false;
            for (const char* k : keys) ok = ok || it.key() == k;
            if (!ok) throw UsageError("unknown field '" + at(it.key().c_str()) + "'");
        }
    }
};

template <class F>
auto wrap(const std::string& path, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const UsageError& e) {
        throw UsageError(std::string(e.what()) + " (at '" + path + "')");
    } catch (const DomainError& e) {
        throw UsageError(std::string(e.what()) + " (at '" + path + "')");
    }
}

} // namespace detail

/// Validates a parsed config against schema 1; errors name the offending field.
inline Scenario parse_scenario(const json& j)
{
    if (!j.is_object()) throw UsageError("scenario must be a JSON object");
    const detail::Reader r{j, ""};
    r.only({"schema", "name", "n", "ambient", "family", "samples", "checks", "tolerances", "expect", "delta", "jet",
            "metric_step", "plot_stride"});
    Scenario s;
    s.echo = j;
    if (!r.has("schema") || !j["schema"].is_number_integer() || j["schema"].get<int>() != 1)
        throw UsageError("field 'schema' must be 1");
    s.name = r.str("name", "unnamed");
    const int n = static_cast<int>(r.integer("n", 5));
    if (n < 2 || n > 12) throw UsageError("field 'n' must lie in [2, 12]");

    const detail::Reader f = r.sub("family");
    f.only({"kind", "block", "lambda", "phi", "theta", "c", "t_span", "f0", "fx0", "x0", "y0", "warp_axis", "x_range",
            "y_range", "chc_form", "chc_variant", "chb_phase", "graph_seed", "profile_step", "warp_step", "sign_samples"});
    const FamilyTag tag = detail::wrap("family.kind", [&] { return family_tag_from_string(f.str("kind", "")); });
    if ((is_case2(tag) && n < 4) || (is_case3(tag) && n < 5)) throw UsageError("field 'n' too small for " + to_string(tag));
    FamilySpec& fs = s.family;
    fs = default_family_spec(tag, n);
    if (f.has("block")) fs.block = detail::wrap("family.block", [&] { return block_name_from_string(f.str("block", "")); });
    if (f.has("c")) {
        if (tag != FamilyTag::Case2_Cn) throw UsageError("field 'family.c' applies to Case2_Cn only");
        fs.init = detail::wrap("family.c", [&] { return closed_form::cn_init(n, f.num("lambda", fs.init.lam), f.num("c", 1.0)); });
    } else {
        fs.init.lam = f.num("lambda", fs.init.lam);
        fs.init.phi = f.num("phi", fs.init.phi);
        fs.init.theta = f.num("theta", fs.init.theta);
    }
    fs.t_span = f.interval("t_span", fs.t_span);
    fs.f0 = f.num("f0", fs.f0);
    fs.fx0 = f.num("fx0", fs.fx0);
    fs.x0 = f.num("x0", fs.x0);
    fs.y0 = f.num("y0", fs.y0);
    if (f.has("warp_axis")) {
        const std::string a = f.str("warp_axis", "x");
        if (a != "x" && a != "y") throw UsageError("field 'family.warp_axis' must be \"x\" or \"y\"");
        fs.warp_axis = a == "x" ? WarpAxis::X : WarpAxis::Y;
    }
    fs.x_range = f.interval("x_range", fs.x_range);
    fs.y_range = f.interval("y_range", fs.y_range);
    if (f.has("chc_form")) fs.chc_form = detail::wrap("family.chc_form", [&] { return case2c_form_from_string(f.str("chc_form", "")); });
    if (f.has("chc_variant")) {
        const std::string v = f.str("chc_variant", "");
        if (v == "auto") s.chc_variant_auto = true;
        else fs.chc_variant = detail::wrap("family.chc_variant", [&] { return chc_variant_from_string(v); });
    }
    if (f.has("chb_phase")) {
        const std::string v = f.str("chb_phase", "");
        if (v != "Corrected" && v != "AsPrinted") throw UsageError("field 'family.chb_phase' must be \"Corrected\" or \"AsPrinted\"");
        fs.chb_phase = v == "Corrected" ? ChbPhase::Corrected : ChbPhase::AsPrinted;
    }
    fs.graph_seed = static_cast<std::uint64_t>(f.integer("graph_seed", static_cast<long long>(fs.graph_seed)));
    fs.profile.step = f.num("profile_step", fs.profile.step);
    fs.warp.step = f.num("warp_step", fs.warp.step);
    s.sign_samples = static_cast<int>(f.integer("sign_samples", s.sign_samples));

    if (r.has("ambient")) {
        const AmbientKind a = detail::wrap("ambient", [&] { return ambient_kind_from_string(r.str("ambient", "")); });
        if (a != family_ambient(tag))
            throw UsageError("field 'ambient' is " + to_string(a) + " but " + to_string(tag) + " lives in " +
                             to_string(family_ambient(tag)));
    }

    if (r.has("samples")) {
        const detail::Reader sm = r.sub("samples");
        sm.only({"mode", "count", "per_axis", "seed"});
        s.samples.mode = sm.str("mode", s.samples.mode);
        if (s.samples.mode != "random" && s.samples.mode != "grid") throw UsageError("field 'samples.mode' must be \"random\" or \"grid\"");
        s.samples.count = static_cast<int>(sm.integer("count", s.samples.count));
        s.samples.per_axis = static_cast<int>(sm.integer("per_axis", s.samples.per_axis));
        if (sm.has("seed") && !j["samples"]["seed"].is_number_unsigned()) throw UsageError("field 'samples.seed' must be a non-negative integer");
        if (sm.has("seed")) s.samples.seed = j["samples"]["seed"].get<std::uint64_t>();
        if (s.samples.count < 1 || s.samples.per_axis < 1) throw UsageError("field 'samples' needs positive counts");
    }

    if (r.has("checks")) {
        const json& c = j["checks"];
        if (!c.is_array()) throw UsageError("field 'checks' must be an array");
        for (std::size_t i = 0; i < c.size(); ++i) {
            const std::string p = "checks[" + std::to_string(i) + "]";
            if (!c[i].is_string()) throw UsageError("field '" + p + "' must be a string");
            const std::string name = c[i].get<std::string>();
            bool ok = false;
            for (const auto& k : known_checks()) ok = ok || k == name;
            if (!ok) throw UsageError("field '" + p + "': unknown check '" + name + "'");
            s.checks.push_back(name);
        }
    } else {
        s.checks = {"lagrangian", "lift", "cubic", "gauss", "codazzi", "inequality"};
    }

    if (r.has("tolerances")) {
        const detail::Reader t = r.sub("tolerances");
        t.only({"lagrangian", "lift", "cubic", "gauss", "codazzi", "inequality", "ideality", "pattern", "case_fraction",
                "closed_form_warp", "closed_form_profile", "conserved"});
        Tolerances& T = s.tol;
        T.lagrangian = t.num("lagrangian", T.lagrangian);
        T.lift = t.num("lift", T.lift);
        T.cubic = t.num("cubic", T.cubic);
        T.gauss = t.num("gauss", T.gauss);
        T.codazzi = t.num("codazzi", T.codazzi);
        T.inequality = t.num("inequality", T.inequality);
        T.ideality = t.num("ideality", T.ideality);
        T.pattern = t.num("pattern", T.pattern);
        T.case_fraction = t.num("case_fraction", T.case_fraction);
        T.closed_form_warp = t.num("closed_form_warp", T.closed_form_warp);
        T.closed_form_profile = t.num("closed_form_profile", T.closed_form_profile);
        T.conserved = t.num("conserved", T.conserved);
    }
    s.pipeline.classify.ideal_tol = s.tol.ideality;
    s.pipeline.classify.pattern_tol = s.tol.pattern;
    s.pipeline.delta.ideal_tol = s.tol.ideality;

    if (r.has("expect")) s.expect = detail::wrap("expect", [&] { return case_label_from_string(r.str("expect", "")); });

    if (r.has("delta")) {
        const detail::Reader d = r.sub("delta");
        d.only({"n_samples", "n_starts", "restarts", "tuple", "theorem"});
        DeltaOptions& D = s.pipeline.delta;
        D.n_samples = static_cast<int>(d.integer("n_samples", D.n_samples));
        D.n_starts = static_cast<int>(d.integer("n_starts", D.n_starts));
        D.restarts = static_cast<int>(d.integer("restarts", D.restarts));
        if (d.has("tuple")) {
            const json& t = j["delta"]["tuple"];
            if (!t.is_array()) throw UsageError("field 'delta.tuple' must be an array");
            PartitionTuple pt{n, {}};
            for (const auto& v : t) {
                if (!v.is_number_integer()) throw UsageError("field 'delta.tuple' must hold integers");
                pt.parts.push_back(v.get<int>());
            }
            detail::wrap("delta.tuple", [&] { pt.validate(); return 0; });
            s.pipeline.tuple = pt;
        }
        if (d.has("theorem")) s.pipeline.theorem = detail::wrap("delta.theorem", [&] { return theorem_from_string(d.str("theorem", "")); });
    }
    if (r.has("jet")) {
        const detail::Reader jt = r.sub("jet");
        jt.only({"h1", "h2", "h3"});
        s.pipeline.jet.h1 = jt.num("h1", s.pipeline.jet.h1);
        s.pipeline.jet.h2 = jt.num("h2", s.pipeline.jet.h2);
        s.pipeline.jet.h3 = jt.num("h3", s.pipeline.jet.h3);
        s.pipeline.metric.jet = s.pipeline.jet;
    }
    s.pipeline.metric.metric_step = r.num("metric_step", s.pipeline.metric.metric_step);
    s.plot_stride = static_cast<int>(r.integer("plot_stride", s.plot_stride));
    if (s.plot_stride < 1) throw UsageError("field 'plot_stride' must be positive");
    return s;
}

inline Scenario load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_scenario(j);
}

enum class Command { Construct, Verify, Delta, Classify, Run };

inline std::string to_string(Command c)
{
    switch (c) {
    case Command::Construct: return "construct";
    case Command::Verify: return "verify";
    case Command::Delta: return "delta";
    case Command::Classify: return "classify";
    case Command::Run: return "run";
    }
    return "?";
}

/// Checks of the scenario that a subcommand executes.
inline std::vector<std::string> active_checks(const Scenario& s, Command c)
{
    auto in = [](const std::string& k, std::initializer_list<const char*> l) {
        for (const char* x : l)
            if (k == x) return true;
        return false;
    };
    std::vector<std::string> out;
    for (const auto& k : s.checks) {
        bool take = false;
        switch (c) {
        case Command::Construct: take = in(k, {"closed_form", "conserved"}); break;
        case Command::Verify: take = in(k, {"lagrangian", "lift", "cubic", "gauss", "codazzi"}); break;
        case Command::Delta: take = in(k, {"inequality", "ideality"}); break;
        case Command::Classify: take = in(k, {"inequality", "ideality", "classify"}); break;
        case Command::Run: take = true; break;
        }
        if (take) out.push_back(k);
    }
    return out;
}

struct CheckOutcome {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string note;
};

struct Report {
    Scenario scenario;
    Command command = Command::Run;
    std::uint64_t seed = 0;
    FamilyChart family;
    std::optional<SignResolution> sign;
    std::vector<PointRecord> points;
    std::vector<CheckOutcome> checks;
    std::string error;
    int exit_code = ExitPass;
    bool pass = false;
};

namespace detail {

inline std::vector<Vec> grid_points(const ImmersionChart& chart, int per_axis, double margin)
{
    const int n = chart.param_dim;
    std::vector<Vec> pts;
    std::vector<int> idx(n, 0);
    while (true) {
        Vec p(n);
        for (int i = 0; i < n; ++i) {
            const Interval& I = chart.domain_box[i];
            if (I.width() <= 2.0 * margin) throw DomainError("chart box too narrow for the stencil margin");
            const double lo = I.lo + margin, hi = I.hi - margin;
            p[i] = per_axis == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * idx[i] / (per_axis - 1);
        }
        pts.push_back(p);
        int k = 0;
        while (k < n && ++idx[k] == per_axis) idx[k++] = 0;
        if (k == n) break;
    }
    return pts;
}

inline bool has(const std::vector<std::string>& v, const std::string& k)
{
    return std::find(v.begin(), v.end(), k) != v.end();
}

/// Max of a residual over the points, ignoring NaN entries.
template <class F>
double max_over(const std::vector<PointRecord>& pts, F&& f)
{
    double m = 0.0;
    for (const auto& r : pts) {
        const double v = f(r);
        if (!std::isnan(v)) m = std::max(m, v);
    }
    return m;
}

/// Closed-form warp for x-reduced C and CHc fields started with zero slope.
inline bool warp_has_closed_form(const WarpField& w, double fx0)
{
    return (w.kind == WarpKind::C || w.kind == WarpKind::CHc) && w.axis == WarpAxis::X && fx0 == 0.0;
}

inline double warp_closed_form(const WarpField& w, double f0, double x)
{
    const double m = w.kind == WarpKind::C ? w.n - 1.0 : w.n - 3.0;
    return closed_form::warp_cos_power(w.kind, w.n, std::pow(f0, m), w.x0, x);
}

/// Certifies every point; workers fill index slots so output does not depend on scheduling.
inline std::vector<PointRecord> certify_all(const ImmersionChart& chart, const AmbientSpace& space, const std::vector<Vec>& pts,
                                            const PipelineOptions& po, std::uint64_t seed)
{
    const std::size_t N = pts.size();
    std::vector<PointRecord> out(N);
    std::vector<std::exception_ptr> err(N);
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), N));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < N;) {
            try {
                out[k] = certify_point(chart, space, pts[k], po, point_seed(seed, static_cast<int>(k)));
            } catch (...) {
                err[k] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (const auto& e : err)
        if (e) std::rethrow_exception(e);
    return out;
}

} // namespace detail

/// Builds the family, samples points, runs the active checks. Never throws for numerical failures:
/// those are recorded in `error` with exit code 3.
inline Report run_scenario(const Scenario& sc, Command cmd, std::optional<std::uint64_t> seed_override = {})
{
    Report rep;
    rep.scenario = sc;
    rep.command = cmd;
    rep.seed = seed_override ? *seed_override : sc.samples.seed;
    const std::vector<std::string> active = active_checks(sc, cmd);
    const Tolerances& T = sc.tol;
    try {
        FamilySpec spec = sc.family;
        if (sc.chc_variant_auto) {
            if (spec.tag != FamilyTag::Case3_CHn_c) throw UsageError("chc_variant \"auto\" applies to Case3_CHn_c only");
            rep.sign = resolve_sign_variant(spec, sc.sign_samples, rep.seed);
            if (!rep.sign->selected) throw InconsistentFieldError("sign-variant resolution did not select exactly one variant");
            spec.chc_variant = *rep.sign->selected;
        }
        rep.family = build_family(spec);

        const bool need_points = cmd != Command::Construct;
        if (need_points) {
            PipelineOptions po = sc.pipeline;
            po.checks.gauss = detail::has(active, "gauss");
            po.checks.codazzi = detail::has(active, "codazzi");
            po.checks.delta = detail::has(active, "inequality") || detail::has(active, "ideality") || detail::has(active, "classify");
            po.checks.classify = detail::has(active, "classify");
            const double margin = pipeline_margin(po);
            const std::vector<Vec> pts = sc.samples.mode == "grid" ? detail::grid_points(rep.family.chart, sc.samples.per_axis, margin)
                                                                   : sample_interior(rep.family.chart, sc.samples.count, rep.seed, margin);
            rep.points = detail::certify_all(rep.family.chart, rep.family.space, pts, po, rep.seed);
        }

        const auto& P = rep.points;
        auto add = [&](const std::string& name, double value, double tol, bool pass, const std::string& note = "") {
            rep.checks.push_back({name, pass, value, tol, note});
        };
        for (const auto& k : active) {
            if (k == "lagrangian") {
                const double v = detail::max_over(P, [](const PointRecord& r) { return r.lagrangian_res; });
                add(k, v, T.lagrangian, v <= T.lagrangian);
            } else if (k == "lift") {
                const double v = detail::max_over(P, [](const PointRecord& r) { return std::max(r.lift_norm_res, r.lift_horizontal_res); });
                add(k, v, T.lift, v <= T.lift);
            } else if (k == "cubic") {
                const double v = detail::max_over(P, [](const PointRecord& r) { return r.cubic_sym_res; });
                add(k, v, T.cubic, v <= T.cubic);
            } else if (k == "gauss") {
                const double v = detail::max_over(P, [](const PointRecord& r) { return r.gauss_res; });
                add(k, v, T.gauss, v <= T.gauss);
            } else if (k == "codazzi") {
                const double v = detail::max_over(P, [](const PointRecord& r) { return r.codazzi_res; });
                add(k, v, T.codazzi, v <= T.codazzi);
            } else if (k == "inequality") {
                double worst = std::numeric_limits<double>::infinity();
                for (const auto& r : P) worst = std::min(worst, r.ideality_res);
                if (P.empty()) worst = 0.0;
                add(k, worst, -T.inequality, worst >= -T.inequality, "min of rhs - delta");
            } else if (k == "ideality") {
                const double v = detail::max_over(P, [](const PointRecord& r) { return std::abs(r.ideality_res); });
                add(k, v, T.ideality, v <= T.ideality, "max of |rhs - delta|");
            } else if (k == "classify") {
                if (!sc.expect) {
                    add(k, 0.0, T.case_fraction, false, "no expected label in the scenario");
                    continue;
                }
                int hits = 0, wrong = 0;
                for (const auto& r : P) {
                    if (r.label == *sc.expect && (std::isnan(r.pattern_res) || r.pattern_res <= T.pattern)) ++hits;
                    else if (r.label != CaseLabel::Ambiguous) ++wrong;
                }
                const double frac = P.empty() ? 0.0 : static_cast<double>(hits) / P.size();
                add(k, frac, T.case_fraction, frac >= T.case_fraction && wrong == 0,
                    "share labelled " + to_string(*sc.expect) + "; " + std::to_string(wrong) + " wrong");
            } else if (k == "closed_form") {
                const FamilyChart& fc = rep.family;
                if (fc.companions && detail::warp_has_closed_form(fc.companions->warp, spec.fx0)) {
                    const WarpField& w = fc.companions->warp;
                    double e = 0.0;
                    for (std::size_t i = 0; i < w.f.size(); ++i)
                        e = std::max(e, std::abs(w.f[i] - detail::warp_closed_form(w, spec.f0, w.x[i])));
                    add(k, e, T.closed_form_warp, e <= T.closed_form_warp, "max |f - (A cos(m x))^(1/m)|");
                } else if (fc.profile && fc.profile->kind == ProfileKind::Cn_II) {
                    const ProfileSolution& p = *fc.profile;
                    const double c = closed_form::cn_c_from_state(p.n, p.lam.front(), p.phi.front());
                    double e = 0.0;
                    for (std::size_t i = 0; i < p.t.size(); ++i) {
                        if (c * std::pow(p.lam[i], (p.n - 2.0) / (p.n - 3.0)) > 0.99 || p.phi[i] <= 0.0) continue;
                        e = std::max({e, std::abs(p.phi[i] - closed_form::cn_phi(p.n, c, p.lam[i])),
                                      std::abs(p.theta[i] - closed_form::cn_theta(p.n, c, p.lam[i]))});
                    }
                    add(k, e, T.closed_form_profile, e <= T.closed_form_profile, "max error of phi and theta");
                } else {
                    add(k, 0.0, 0.0, false, "no closed form for this family");
                }
            } else if (k == "conserved") {
                const FamilyChart& fc = rep.family;
                if (fc.profile && fc.profile->kind == ProfileKind::Cn_II) {
                    const ProfileSolution& p = *fc.profile;
                    const double v = conserved_relative_drift(p) / std::max(1e-300, p.t_end() - p.t_begin());
                    add(k, v, T.conserved, v <= T.conserved, "relative drift per unit time");
                } else {
                    add(k, 0.0, 0.0, false, "no conserved quantity for this family");
                }
            }
        }
        rep.pass = true;
        for (const auto& c : rep.checks) rep.pass = rep.pass && c.pass;
        rep.exit_code = rep.pass ? ExitPass : ExitCheckFailure;
    } catch (const UsageError&) {
        throw;
    } catch (const std::runtime_error& e) {
        rep.error = e.what();
        rep.pass = false;
        rep.exit_code = ExitNumerical;
    }
    return rep;
}

namespace detail {

inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::string fmt(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline json point_json(const PointRecord& r)
{
    json p;
    json params = json::array();
    for (int i = 0; i < r.params.size(); ++i) params.push_back(r.params[i]);
    p["params"] = params;
    p["lagrangian_res"] = num(r.lagrangian_res);
    p["lift_norm_res"] = num(r.lift_norm_res);
    p["lift_horizontal_res"] = num(r.lift_horizontal_res);
    p["cubic_sym_res"] = num(r.cubic_sym_res);
    p["position_res"] = num(r.position_res);
    p["gauss_res"] = num(r.gauss_res);
    p["codazzi_res"] = num(r.codazzi_res);
    p["H2"] = num(r.H2);
    p["tau"] = num(r.tau);
    p["delta"] = num(r.delta);
    p["rhs"] = num(r.rhs);
    p["ideality_res"] = num(r.ideality_res);
    p["optimizer_converged"] = r.optimizer_converged;
    p["case"] = r.classified ? to_string(r.label) : "";
    p["gamma"] = num(r.gamma);
    p["lambda"] = num(r.lambda);
    p["mu"] = num(r.mu);
    p["pattern_res"] = num(r.pattern_res);
    p["margin_half"] = num(r.margin_half);
    p["margin_two_thirds"] = num(r.margin_two_thirds);
    p["route"] = r.route;
    return p;
}

} // namespace detail

inline json report_json(const Report& rep)
{
    json j;
    j["schema"] = 1;
    j["command"] = to_string(rep.command);
    j["scenario"] = rep.scenario.echo;
    j["seed"] = rep.seed;
    const PipelineOptions& po = rep.scenario.pipeline;
    j["environment"] = {{"version", kVersion},
                        {"jet_steps", {{"h1", po.jet.h1}, {"h2", po.jet.h2}, {"h3", po.jet.h3}}},
                        {"metric_step", po.metric.metric_step},
                        {"profile_step", rep.scenario.family.profile.step},
                        {"warp_step", rep.scenario.family.warp.step},
                        {"delta", {{"n_samples", po.delta.n_samples}, {"n_starts", po.delta.n_starts}, {"restarts", po.delta.restarts}}},
                        {"prng", "SplitMix64"}};
    const FamilyChart& fc = rep.family;
    json fam;
    fam["tag"] = to_string(rep.scenario.family.tag);
    fam["n"] = rep.scenario.family.n;
    fam["ambient"] = to_string(fc.space.kind);
    fam["block"] = fc.block;
    json sel = json::object();
    for (const auto& [k, v] : fc.selections) sel[k] = v;
    fam["selections"] = sel;
    json box = json::array();
    for (const auto& I : fc.chart.domain_box) box.push_back({I.lo, I.hi});
    fam["domain_box"] = box;
    json meta = json::object();
    for (const auto& [k, v] : fc.chart.metadata) meta[k] = detail::num(v);
    fam["metadata"] = meta;
    if (fc.profile) fam["profile"] = {{"kind", to_string(fc.profile->kind)}, {"t_begin", fc.profile->t_begin()},
                                      {"t_end", fc.profile->t_end()}, {"truncated", fc.profile->truncated},
                                      {"reason", fc.profile->reason}};
    if (fc.companions) {
        const WarpField& w = fc.companions->warp;
        fam["warp"] = {{"kind", to_string(w.kind)}, {"axis", to_string(w.axis)}, {"max_residual", w.max_residual},
                       {"richardson_change", w.richardson_change}, {"truncation_low", w.truncation_low},
                       {"truncation_high", w.truncation_high}};
        fam["companions"] = {{"compatibility_residual", fc.companions->compatibility_residual},
                             {"theta_unit_drift", fc.companions->theta_unit_drift}};
    }
    j["family"] = fam;
    if (rep.sign) {
        json s;
        s["selected"] = rep.sign->selected ? to_string(*rep.sign->selected) : "";
        json outs = json::array();
        for (const auto& o : rep.sign->outcomes)
            outs.push_back({{"variant", to_string(o.variant)}, {"passes", o.passes}, {"points", o.points},
                            {"passing_points", o.passing_points}, {"max_lagrangian", detail::num(o.max_lagrangian)},
                            {"max_lift", detail::num(o.max_lift)}, {"max_cubic", detail::num(o.max_cubic)},
                            {"max_gauss", detail::num(o.max_gauss)}, {"max_codazzi", detail::num(o.max_codazzi)},
                            {"failure", o.failure}});
        s["outcomes"] = outs;
        j["sign_resolution"] = s;
    }
    json pts = json::array();
    for (const auto& r : rep.points) pts.push_back(detail::point_json(r));
    j["points"] = pts;

    json agg;
    const char* keys[] = {"lagrangian_res", "lift_norm_res", "lift_horizontal_res", "cubic_sym_res", "gauss_res",
                          "codazzi_res", "ideality_res", "pattern_res"};
    json mx, mean;
    for (const char* k : keys) {
        double m = 0.0, s = 0.0;
        int cnt = 0;
        for (const auto& p : pts) {
            if (p[k].is_null()) continue;
            const double v = std::abs(p[k].get<double>());
            m = std::max(m, v);
            s += v;
            ++cnt;
        }
        mx[k] = cnt ? json(m) : json(nullptr);
        mean[k] = cnt ? json(s / cnt) : json(nullptr);
    }
    agg["max_abs"] = mx;
    agg["mean_abs"] = mean;
    json counts = json::object();
    for (const auto& r : rep.points)
        if (r.classified) counts[to_string(r.label)] = counts.value(to_string(r.label), 0) + 1;
    agg["case_counts"] = counts;
    agg["point_count"] = rep.points.size();
    j["aggregates"] = agg;

    json checks = json::object();
    for (const auto& c : rep.checks)
        checks[c.name] = {{"pass", c.pass}, {"value", detail::num(c.value)}, {"tolerance", detail::num(c.tolerance)}, {"note", c.note}};
    j["checks"] = checks;
    if (!rep.error.empty()) j["error"] = rep.error;
    j["pass"] = rep.pass;
    j["exit_code"] = rep.exit_code;
    return j;
}

/// points.csv: one row per sample point.
inline std::string points_csv(const Report& rep)
{
    std::ostringstream os;
    const int n = rep.scenario.family.n;
    for (int i = 1; i <= n; ++i) os << "param_" << i << ",";
    os << "lagrangian_res,cubic_sym_res,gauss_res,codazzi_res,delta,rhs,ideality_res,case,gamma,lambda,mu\n";
    using detail::fmt;
    for (const auto& r : rep.points) {
        for (int i = 0; i < r.params.size(); ++i) os << fmt(r.params[i]) << ",";
        os << fmt(r.lagrangian_res) << "," << fmt(r.cubic_sym_res) << "," << fmt(r.gauss_res) << "," << fmt(r.codazzi_res)
           << "," << fmt(r.delta) << "," << fmt(r.rhs) << "," << fmt(r.ideality_res) << ","
           << (r.classified ? to_string(r.label) : "") << "," << fmt(r.gamma) << "," << fmt(r.lambda) << "," << fmt(r.mu)
           << "\n";
    }
    return os.str();
}

/// profile.csv for case II families: t, lambda, phi, theta (+ conserved and closed forms for Cn_II).
inline std::string profile_csv(const ProfileSolution& p, int stride)
{
    std::ostringstream os;
    const bool cn = p.kind == ProfileKind::Cn_II;
    os << "t,lambda,phi,theta";
    if (cn) os << ",conserved,phi_closed_form,theta_closed_form";
    os << "\n";
    const double c = cn ? closed_form::cn_c_from_state(p.n, p.lam.front(), p.phi.front()) : 0.0;
    using detail::fmt;
    for (std::size_t i = 0; i < p.t.size(); ++i) {
        if (i % stride != 0 && i + 1 != p.t.size()) continue;
        os << fmt(p.t[i]) << "," << fmt(p.lam[i]) << "," << fmt(p.phi[i]) << "," << fmt(p.theta[i]);
        if (cn) {
            const bool ok = c * std::pow(p.lam[i], (p.n - 2.0) / (p.n - 3.0)) < 1.0 && p.phi[i] > 0.0;
            os << "," << fmt(p.conserved[i]) << "," << fmt(ok ? closed_form::cn_phi(p.n, c, p.lam[i]) : NAN) << ","
               << fmt(ok ? closed_form::cn_theta(p.n, c, p.lam[i]) : NAN);
        }
        os << "\n";
    }
    return os.str();
}

/// field.csv for case III families: x, y, f, residual (+ closed form where one exists).
inline std::string field_csv(const WarpField& w, double f0, double fx0, int stride)
{
    std::ostringstream os;
    const bool closed = detail::warp_has_closed_form(w, fx0);
    os << "x,y,f,residual";
    if (closed) os << ",f_closed_form";
    os << "\n";
    using detail::fmt;
    const std::size_t nx = w.x.size();
    for (std::size_t k = 0; k < w.f.size(); ++k) {
        if (w.reduced_1d && k % stride != 0 && k + 1 != w.f.size()) continue;
        const double x = w.x[k % nx], y = w.y[k / nx];
        os << fmt(x) << "," << fmt(y) << "," << fmt(w.f[k]) << "," << fmt(w.pde_residual[k]);
        if (closed) os << "," << fmt(detail::warp_closed_form(w, f0, x));
        os << "\n";
    }
    return os.str();
}

inline std::set<std::string> parse_formats(const std::string& s)
{
    std::set<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item != "json" && item != "csv" && item != "plotdata") throw UsageError("unknown format '" + item + "'");
        out.insert(item);
    }
    if (out.empty()) throw UsageError("empty --format list");
    return out;
}

/// Writes the requested outputs into `dir` (created if missing).
inline void emit_outputs(const Report& rep, const std::filesystem::path& dir, const std::set<std::string>& formats)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw UsageError("cannot write '" + (dir / name).string() + "'");
        out << text;
        if (!out) throw UsageError("write failed for '" + (dir / name).string() + "'");
    };
    if (formats.count("json")) write("report.json", report_json(rep).dump(2) + "\n");
    if (formats.count("csv") && rep.command != Command::Construct) write("points.csv", points_csv(rep));
    if (formats.count("plotdata")) {
        if (rep.family.profile) write("profile.csv", profile_csv(*rep.family.profile, rep.scenario.plot_stride));
        if (rep.family.companions)
            write("field.csv", field_csv(rep.family.companions->warp, rep.scenario.family.f0, rep.scenario.family.fx0,
                                         rep.scenario.plot_stride));
    }
}

} // namespace dideal
