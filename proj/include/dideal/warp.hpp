#pragma once

/**
 * @file warp.hpp
 * @brief Warping functions f(x, y) of the case-III families.
 *
 * Every warp equation has the shape
 *   a f^{2n-3} f_xx + a f f_yy + b f^{2n-4} f_x^2 - d f_y^2 + e f^{2n-2} = 0
 * with coefficients a, b, d, e depending on f and the ambient case. With f_y = 0 this
 * reduces to f_xx = -(b f_x^2 + e f^2) / (a f).
 */

#include <cmath>
#include <string>
#include <vector>

#include "dideal/jets.hpp"
#include "dideal/ode.hpp"

namespace dideal {

enum class WarpKind { C, CP, CHa, CHb, CHc };

inline std::string to_string(WarpKind k)
{
    switch (k) {
    case WarpKind::C: return "C";
    case WarpKind::CP: return "CP";
    case WarpKind::CHa: return "CHa";
    case WarpKind::CHb: return "CHb";
    case WarpKind::CHc: return "CHc";
    }
    return "?";
}

inline WarpKind warp_kind_from_string(const std::string& s)
{
    for (auto k : {WarpKind::C, WarpKind::CP, WarpKind::CHa, WarpKind::CHb, WarpKind::CHc})
        if (to_string(k) == s) return k;
    throw UsageError("unknown warp kind '" + s + "'");
}

enum class WarpMode { Reduced1D, Relax2D };

struct WarpCoefficients {
    double a, b, d, e;
};

inline WarpCoefficients warp_coefficients(WarpKind kind, int n, double f)
{
    const double f2 = f * f;
    switch (kind) {
    case WarpKind::C: return {1.0, n - 2.0, n - 2.0, n - 1.0};
    case WarpKind::CP: {
        const double s = 1.0 - f2;
        return {s, (n - 2) * s + 2 * f2, (n - 2) * s - 2 * f2, (n - 1) * s + 2 * f2};
    }
    case WarpKind::CHa: {
        const double s = 1.0 + f2;
        return {s, (n - 2) * s - 2 * f2, (n - 2) * s + 2 * f2, (n - 1) * s - 2 * f2};
    }
    case WarpKind::CHb: {
        const double s = f2 - 1.0;
        return {s, (n - 2) * s - 2 * f2, (n - 2) * s + 2 * f2, (n - 1) * s - 2 * f2};
    }
    case WarpKind::CHc: return {1.0, n - 4.0, n - 0.0, n - 3.0};
    }
    throw UsageError("unknown warp kind");
}

/// Left-hand side of the warp equation.
inline double warp_pde(WarpKind kind, int n, double f, double fx, double fy, double fxx, double fyy)
{
    const auto [a, b, d, e] = warp_coefficients(kind, n, f);
    const double p = std::pow(f, 2 * n - 4);
    return a * p * f * fxx + a * f * fyy + b * p * fx * fx - d * fy * fy + e * p * f * f;
}

/// Same equation divided by a f^{2n-3}, so that f_xx enters with unit weight.
inline double warp_pde_scaled(WarpKind kind, int n, double f, double fx, double fy, double fxx, double fyy)
{
    const double a = warp_coefficients(kind, n, f).a;
    return warp_pde(kind, n, f, fx, fy, fxx, fyy) / (a * std::pow(f, 2 * n - 3));
}

/// Coordinate the warp depends on in Reduced1D mode.
enum class WarpAxis { X, Y };

inline std::string to_string(WarpAxis a) { return a == WarpAxis::X ? "x" : "y"; }

/// Second derivative along the axis from the reduced equation (f_y = 0 for X, f_x = 0 for Y).
inline double reduced_second(WarpKind kind, int n, WarpAxis axis, double f, double fp)
{
    const auto [a, b, d, e] = warp_coefficients(kind, n, f);
    if (axis == WarpAxis::X) return -(b * fp * fp + e * f * f) / (a * f);
    return (d * fp * fp - e * std::pow(f, 2 * n - 2)) / (a * f);
}

inline double reduced_fxx(WarpKind kind, int n, double f, double fx) { return reduced_second(kind, n, WarpAxis::X, f, fx); }

struct WarpOptions {
    double step = 1e-4;
    double margin = 1e-3;
    int max_iters = 100000;
    double relax_tol = 1e-10;
    double damping = 0.5;
    double steepness = 1e-3;   ///< Reduced1D stops once |f_x| step > steepness f
};

/// Reason f leaves the admissible range of `kind`, or "".
inline std::string warp_violation(WarpKind kind, double f, double fx, const WarpOptions& o)
{
    if (!std::isfinite(f) || !std::isfinite(fx) || std::abs(fx) > 1e6) return "blow-up";
    if (!(f > o.margin)) return "f reached 0 (margin)";
    if (std::abs(fx) * o.step > o.steepness * f) return "f too steep for the step (approaching f = 0)";
    if (kind == WarpKind::CP && !(f < 1.0 - o.margin)) return "f reached 1 (margin)";
    if (kind == WarpKind::CHb && !(f > 1.0 + o.margin)) return "f reached 1 from above (margin)";
    return "";
}

struct WarpField {
    WarpKind kind = WarpKind::C;
    int n = 0;
    WarpMode mode = WarpMode::Reduced1D;
    bool reduced_1d = true;
    WarpAxis axis = WarpAxis::X;         ///< Reduced1D: the coordinate f depends on
    std::vector<double> x, y;            ///< grid; Reduced1D stores the other coordinate as a single value
    std::vector<double> f;               ///< row-major [iy * nx + ix]
    std::vector<double> pde_residual;    ///< same layout; zero on boundary nodes
    double max_residual = 0.0;
    double richardson_change = 0.0;      ///< max |f_h - f_{h/2}| on shared nodes
    bool converged = true;
    int iterations = 0;
    std::string truncation_low, truncation_high;
    double x0 = 0.0, y0 = 0.0;
    HermiteTable table;                  ///< Reduced1D: (f, f') along the axis

    /// Range of x (resp. y) on which the field is available; the other coordinate is unrestricted in Reduced1D.
    Interval x_range() const
    {
        if (reduced_1d && axis == WarpAxis::Y) return {-1e300, 1e300};
        return reduced_1d ? Interval{table.t_begin(), table.t_end()} : Interval{x.front(), x.back()};
    }
    Interval y_range() const
    {
        if (reduced_1d && axis == WarpAxis::X) return {-1e300, 1e300};
        return reduced_1d ? Interval{table.t_begin(), table.t_end()} : Interval{y.front(), y.back()};
    }

    /// f, f_x, f_y at (xx, yy). Reduced1D only.
    void sample(double xx, double yy, double& fv, double& fx, double& fy) const
    {
        if (!reduced_1d) throw UsageError("pointwise warp evaluation is available in Reduced1D mode");
        State s;
        table.eval(axis == WarpAxis::X ? xx : yy, s);
        fv = s[0];
        fx = axis == WarpAxis::X ? s[1] : 0.0;
        fy = axis == WarpAxis::Y ? s[1] : 0.0;
    }
};

namespace detail {

inline TwoSidedResult reduced_sweep(WarpKind kind, int n, WarpAxis axis, double s0, double f0, double fp0, double lo,
                                    double hi, const WarpOptions& o)
{
    const OdeRhs rhs = [kind, n, axis](const State& s, State& d, double) {
        d[0] = s[1];
        d[1] = reduced_second(kind, n, axis, s[0], s[1]);
    };
    return tabulate_two_sided(rhs, {f0, fp0}, s0, lo, hi, o.step,
                              [&](const State& s) { return warp_violation(kind, s[0], s[1], o); });
}

} // namespace detail

/**
 * Reduced1D: f depends on one coordinate only; RK4 from (f, f') at the base point toward both
 * ends of [lo, hi] along that axis. The residual uses five-point stencils on every 10th node;
 * the Richardson check re-solves at half step.
 */
inline WarpField solve_warp_reduced(WarpKind kind, int n, WarpAxis axis, double x0, double y0, double f0, double fp0,
                                    double lo, double hi, const WarpOptions& opts = {})
{
    if (n < 5) throw UsageError("warp families need n >= 5");
    if (const std::string why = warp_violation(kind, f0, fp0, opts); !why.empty())
        throw DomainError("warp initial value inadmissible for " + to_string(kind) + ": " + why);
    WarpField w;
    w.kind = kind;
    w.n = n;
    w.mode = WarpMode::Reduced1D;
    w.reduced_1d = true;
    w.axis = axis;
    w.x0 = x0;
    w.y0 = y0;
    const double s0 = axis == WarpAxis::X ? x0 : y0;
    TwoSidedResult r = detail::reduced_sweep(kind, n, axis, s0, f0, fp0, lo, hi, opts);
    w.table = std::move(r.table);
    w.truncation_low = r.stop_low;
    w.truncation_high = r.stop_high;
    std::vector<double> nodes;
    for (std::size_t k = 0; k < w.table.size(); ++k) {
        nodes.push_back(w.table.node(k));
        w.f.push_back(w.table.y[k][0]);
    }
    if (axis == WarpAxis::X) {
        w.x = nodes;
        w.y = {y0};
    } else {
        w.x = {x0};
        w.y = nodes;
    }
    w.pde_residual.assign(w.f.size(), 0.0);
    const int stride = std::max(1, static_cast<int>(std::lround(1e-3 / opts.step)));
    const double H = stride * opts.step;
    for (std::size_t k = 2 * stride; k + 2 * stride < w.f.size(); k += stride) {
        auto F = [&](int j) { return w.f[k + j * stride]; };
        const double fp = (F(-2) - 8 * F(-1) + 8 * F(1) - F(2)) / (12 * H);
        const double fpp = (-F(-2) + 16 * F(-1) - 30 * F(0) + 16 * F(1) - F(2)) / (12 * H * H);
        w.pde_residual[k] = std::abs(fpp - reduced_second(kind, n, axis, F(0), fp));
        w.max_residual = std::max(w.max_residual, w.pde_residual[k]);
    }
    WarpOptions half = opts;
    half.step = 0.5 * opts.step;
    const TwoSidedResult fine =
        detail::reduced_sweep(kind, n, axis, s0, f0, fp0, w.table.t_begin(), w.table.t_end(), half);
    for (std::size_t k = 0; k < w.table.size(); ++k) {
        const double t = w.table.node(k);
        const auto j = static_cast<std::size_t>(std::lround((t - fine.table.t0) / half.step));
        if (j < fine.table.size()) w.richardson_change = std::max(w.richardson_change, std::abs(fine.table.y[j][0] - w.f[k]));
    }
    return w;
}

/// Reduced1D along x with f_y = 0.
inline WarpField solve_warp_reduced(WarpKind kind, int n, double x0, double f0, double fx0, double x_lo, double x_hi,
                                    double y0 = 0.0, const WarpOptions& opts = {})
{
    return solve_warp_reduced(kind, n, WarpAxis::X, x0, y0, f0, fx0, x_lo, x_hi, opts);
}

namespace detail {

struct RelaxResult {
    std::vector<double> f;
    int iterations = 0;
    bool converged = false;
};

inline RelaxResult relax_grid(WarpKind kind, int n, const std::vector<double>& xs, const std::vector<double>& ys,
                              std::vector<double> f, const WarpOptions& o)
{
    const std::size_t nx = xs.size(), ny = ys.size();
    const double hx = xs[1] - xs[0], hy = ys[1] - ys[0];
    auto F = [&](std::size_t i, std::size_t j, double c) {
        const double E = f[j * nx + i + 1], W = f[j * nx + i - 1], N = f[(j + 1) * nx + i], S = f[(j - 1) * nx + i];
        return warp_pde_scaled(kind, n, c, (E - W) / (2 * hx), (N - S) / (2 * hy), (E - 2 * c + W) / (hx * hx),
                               (N - 2 * c + S) / (hy * hy));
    };
    RelaxResult r;
    for (int it = 1; it <= o.max_iters; ++it) {
        double upd = 0.0;
        for (std::size_t j = 1; j + 1 < ny; ++j)
            for (std::size_t i = 1; i + 1 < nx; ++i) {
                double& c = f[j * nx + i];
                const double dc = 1e-6 * std::max(1.0, std::abs(c));
                const double r0 = F(i, j, c);
                const double slope = (F(i, j, c + dc) - F(i, j, c - dc)) / (2 * dc);
                if (slope == 0.0 || !std::isfinite(slope)) continue;
                const double step = -o.damping * r0 / slope;
                c += step;
                upd = std::max(upd, std::abs(step));
            }
        r.iterations = it;
        if (!std::isfinite(upd)) break;
        if (upd < o.relax_tol) {
            r.converged = true;
            break;
        }
    }
    r.f = std::move(f);
    return r;
}

} // namespace detail

/**
 * Relax2D: Dirichlet data from `boundary` on the rectangle, lexicographic Gauss-Seidel with a
 * damped scalar Newton update per node on the second-order central discretization.
 * A non-converged field is returned with `converged = false`.
 */
inline WarpField solve_warp_relax(WarpKind kind, int n, Interval xr, Interval yr, int nx, int ny,
                                  const std::function<double(double, double)>& boundary, const WarpOptions& opts = {})
{
    if (nx < 3 || ny < 3 || nx > 201 || ny > 201) throw UsageError("relaxation grid must be between 3x3 and 201x201");
    auto grid = [](Interval I, int m) {
        std::vector<double> g(m);
        for (int k = 0; k < m; ++k) g[k] = I.lo + (I.hi - I.lo) * k / (m - 1);
        return g;
    };
    auto init = [&](const std::vector<double>& xs, const std::vector<double>& ys) {
        std::vector<double> f(xs.size() * ys.size());
        for (std::size_t j = 0; j < ys.size(); ++j)
            for (std::size_t i = 0; i < xs.size(); ++i) f[j * xs.size() + i] = boundary(xs[i], ys[j]);
        return f;
    };
    WarpField w;
    w.kind = kind;
    w.n = n;
    w.mode = WarpMode::Relax2D;
    w.reduced_1d = false;
    w.x = grid(xr, nx);
    w.y = grid(yr, ny);
    detail::RelaxResult r = detail::relax_grid(kind, n, w.x, w.y, init(w.x, w.y), opts);
    w.f = std::move(r.f);
    w.iterations = r.iterations;
    w.converged = r.converged;
    for (double v : w.f)
        if (const std::string why = warp_violation(kind, v, 0.0, opts); !why.empty()) {
            w.converged = false;
            w.truncation_low = why;
        }
    const double hx = w.x[1] - w.x[0], hy = w.y[1] - w.y[0];
    w.pde_residual.assign(w.f.size(), 0.0);
    for (int j = 1; j + 1 < ny; ++j)
        for (int i = 1; i + 1 < nx; ++i) {
            auto f = [&](int di, int dj) { return w.f[(j + dj) * nx + i + di]; };
            const double res = warp_pde_scaled(kind, n, f(0, 0), (f(1, 0) - f(-1, 0)) / (2 * hx), (f(0, 1) - f(0, -1)) / (2 * hy),
                                               (f(1, 0) - 2 * f(0, 0) + f(-1, 0)) / (hx * hx),
                                               (f(0, 1) - 2 * f(0, 0) + f(0, -1)) / (hy * hy));
            w.pde_residual[j * nx + i] = std::abs(res);
            w.max_residual = std::max(w.max_residual, std::abs(res));
        }
    const std::vector<double> xf = grid(xr, 2 * nx - 1), yf = grid(yr, 2 * ny - 1);
    const detail::RelaxResult fine = detail::relax_grid(kind, n, xf, yf, init(xf, yf), opts);
    w.converged = w.converged && fine.converged;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            w.richardson_change = std::max(w.richardson_change,
                                           std::abs(fine.f[(2 * j) * xf.size() + 2 * i] - w.f[j * nx + i]));
    return w;
}

namespace closed_form {

/// f = (A cos(m (x - x0)))^{1/m} with m = n-1 (kind C) or n-3 (kind CHc); solves the reduced equation.
inline double warp_cos_power(WarpKind kind, int n, double A, double x0, double x)
{
    double m = 0.0;
    if (kind == WarpKind::C) m = n - 1.0;
    else if (kind == WarpKind::CHc) m = n - 3.0;
    else throw UsageError("closed-form warp is available for kinds C and CHc");
    return std::pow(A * std::cos(m * (x - x0)), 1.0 / m);
}

} // namespace closed_form

} // namespace dideal
