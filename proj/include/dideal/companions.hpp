#pragma once

/**
 * @file companions.hpp
 * @brief First-order systems riding on a warp field: z for C^n, (Theta1, Theta2) for the
 *        CP^n and CH^n cases (a), (b), and (F, v) for CH^n case (c).
 *
 * Each system is a Pfaffian pair s_x = P(x, y, s), s_y = Q(x, y, s). The state at (x, y) is
 * obtained by RK4 along the line y = y0 (tabulated) and then along x = const.
 */

#include <complex>
#include <string>
#include <vector>

#include "dideal/ambient.hpp"
#include "dideal/warp.hpp"

namespace dideal {

/// Two sign conventions for the F and v equations in CH^n case (c).
enum class ChcSignVariant { Conjugate, Direct };

inline std::string to_string(ChcSignVariant v) { return v == ChcSignVariant::Conjugate ? "Conjugate" : "Direct"; }

inline ChcSignVariant chc_variant_from_string(const std::string& s)
{
    if (s == "Conjugate") return ChcSignVariant::Conjugate;
    if (s == "Direct") return ChcSignVariant::Direct;
    throw UsageError("unknown sign variant '" + s + "'");
}

/// Phase coefficient of (Theta2)_x in CH^n case (b): the corrected sign or the printed one.
enum class ChbPhase { Corrected, AsPrinted };

struct CompanionOptions {
    int y_substeps = 64;             ///< RK4 steps from y0 to y
    ChcSignVariant chc_variant = ChcSignVariant::Conjugate;
    ChbPhase chb_phase = ChbPhase::Corrected;
    double compat_error = 1e-3;
    int grid_nx = 21;
    int grid_ny = 21;
};

/// Values of the warp needed by the right-hand sides.
struct WarpSample {
    double f, fx, fy;
};

namespace detail {

using cd = std::complex<double>;

inline cd cexp_i(double a) { return {std::cos(a), std::sin(a)}; }

/// Right-hand sides of the companion system for one warp kind.
struct PfaffSystem {
    WarpKind kind = WarpKind::C;
    int n = 0;
    CompanionOptions opt;

    int dim() const
    {
        switch (kind) {
        case WarpKind::C: return 2;
        case WarpKind::CHc: return 3;
        default: return 8;
        }
    }

    /// Theta system coefficients A (x-equation) and B (y-equation), acting on (Theta1, Theta2).
    void theta_mats(double x, const WarpSample& w, cd A[2][2], cd B[2][2]) const
    {
        (void)x;
        const double f = w.f, f2 = f * f, q = w.fy / std::pow(f, n - 2), p = std::pow(f, n - 2);
        const cd I(0.0, 1.0);
        switch (kind) {
        case WarpKind::CP: {
            const double al = 1.0 / (1.0 - f2);
            A[0][0] = al * I * f2;
            A[0][1] = -al * q;
            A[1][0] = al * q;
            A[1][1] = al * I * ((1.0 - n) * (1.0 - f2) - f2);
            B[0][0] = B[1][1] = 0.0;
            B[0][1] = al * p * cd(w.fx, f);
            B[1][0] = al * p * cd(-w.fx, f);
            break;
        }
        case WarpKind::CHa: {
            const double al = 1.0 / (1.0 + f2);
            A[0][0] = -al * I * f2;
            A[0][1] = -al * q;
            A[1][0] = -al * q;
            A[1][1] = -al * I * ((n - 1.0) * (1.0 + f2) - f2);
            B[0][0] = B[1][1] = 0.0;
            B[0][1] = al * p * cd(w.fx, f);
            B[1][0] = al * p * cd(w.fx, -f);
            break;
        }
        case WarpKind::CHb: {
            const double al = 1.0 / (f2 - 1.0);
            const double sign = opt.chb_phase == ChbPhase::Corrected ? -1.0 : 1.0;
            A[0][0] = -al * I * f2;
            A[0][1] = -al * q;
            A[1][0] = al * q;
            A[1][1] = sign * al * I * ((n - 1.0) * (f2 - 1.0) - f2);
            B[0][0] = B[1][1] = 0.0;
            B[0][1] = al * p * cd(w.fx, f);
            B[1][0] = al * p * cd(-w.fx, f);
            break;
        }
        default: throw UsageError("no Theta system for this warp kind");
        }
    }

    static void apply(const cd M[2][2], const State& s, State& d)
    {
        for (int r = 0; r < 2; ++r)
            for (int comp = 0; comp < 2; ++comp) {
                cd acc = 0.0;
                for (int c = 0; c < 2; ++c) acc += M[r][c] * cd(s[4 * c + 2 * comp], s[4 * c + 2 * comp + 1]);
                d[4 * r + 2 * comp] = acc.real();
                d[4 * r + 2 * comp + 1] = acc.imag();
            }
    }

    /// which = 0 gives P (x-equation), which = 1 gives Q (y-equation).
    void rhs(int which, double x, const WarpSample& w, const State& s, State& d) const
    {
        d.resize(dim());
        const double f = w.f;
        switch (kind) {
        case WarpKind::C: {
            const cd e = cexp_i((n - 1.0) * x);
            const cd v = which == 0 ? e * (w.fy / std::pow(f, n - 2)) : e * std::pow(f, n - 1) * cd(-w.fx / f, 1.0);
            d[0] = v.real();
            d[1] = v.imag();
            return;
        }
        case WarpKind::CHc: {
            const double k = n - 3.0;
            const cd F(s[0], s[1]);
            const bool a = opt.chc_variant == ChcSignVariant::Conjugate;
            const cd ep = cexp_i(k * x), em = cexp_i(-k * x);
            const cd eF = ep * F;
            cd dF;
            double dv;
            if (which == 0) {
                dF = -(a ? em : ep) * (w.fy / std::pow(f, n));
                dv = -1.0 / (f * f) - w.fy / std::pow(f, n) * eF.imag();
            } else {
                dF = a ? em * std::pow(f, n - 4) * cd(w.fx, f) : ep * std::pow(f, n - 4) * cd(w.fx, -f);
                const double im = a ? eF.imag() : (ep * std::conj(F)).imag();
                dv = -std::pow(f, n - 3) * eF.real() + std::pow(f, n - 4) * w.fx * im;
            }
            d[0] = dF.real();
            d[1] = dF.imag();
            d[2] = dv;
            return;
        }
        default: {
            cd A[2][2], B[2][2];
            theta_mats(x, w, A, B);
            apply(which == 0 ? A : B, s, d);
            return;
        }
        }
    }
};

} // namespace detail

/// Initial data at (x0, y0): z = 0; Theta on its quadric; F = 0, v = 0.
inline State companion_initial_state(WarpKind kind)
{
    switch (kind) {
    case WarpKind::C: return State(2, 0.0);
    case WarpKind::CHc: return State(3, 0.0);
    case WarpKind::CHa: return {0, 0, 1, 0, 1, 0, 0, 0};   // Theta1 = (0,1), Theta2 = (1,0) in C^2_1
    default: return {1, 0, 0, 0, 0, 0, 1, 0};              // Theta1 = (1,0), Theta2 = (0,1) in C^2
    }
}

struct CompanionFields {
    WarpKind kind = WarpKind::C;
    int n = 0;
    CompanionOptions options;
    WarpField warp;
    HermiteTable xline;                    ///< state along y = y0
    std::vector<double> grid_x, grid_y;    ///< output grid
    std::vector<cplx> z;                   ///< C^n case
    std::vector<std::array<cplx, 2>> Theta1, Theta2;
    std::vector<cplx> F;
    std::vector<double> u, v;              ///< CH^n case (c); u excludes the <G,G> term
    CVec c0;                               ///< constant ambient offset; the charts use 0
    double compatibility_residual = 0.0;
    double theta_unit_drift = 0.0;

    WarpSample warp_at(double x, double y) const
    {
        WarpSample w;
        warp.sample(x, y, w.f, w.fx, w.fy);
        return w;
    }

    /// Companion state at (x, y).
    State state_at(double x, double y) const
    {
        detail::PfaffSystem sys{kind, n, options};
        State s;
        xline.eval(x, s);
        const int N = options.y_substeps;
        const double y0 = warp.y0, h = (y - y0) / N;
        const OdeRhs rhs = [&](const State& st, State& d, double t) { sys.rhs(1, x, warp_at(x, t), st, d); };
        for (int k = 0; k < N; ++k) rk4_step(rhs, s, y0 + k * h, h);
        return s;
    }

    /// Right-hand sides P and Q evaluated on the integrated state.
    void pq_at(double x, double y, State& P, State& Q) const
    {
        detail::PfaffSystem sys{kind, n, options};
        const State s = state_at(x, y);
        const WarpSample w = warp_at(x, y);
        sys.rhs(0, x, w, s, P);
        sys.rhs(1, x, w, s, Q);
    }
};

namespace detail {

/// <Theta, Theta> with the signature of the target quadric of each component.
inline void theta_norms(WarpKind kind, const State& s, double& n1, double& n2)
{
    auto sq = [&](int off, int comp) { return s[off + 2 * comp] * s[off + 2 * comp] + s[off + 2 * comp + 1] * s[off + 2 * comp + 1]; };
    const double sign0 = kind == WarpKind::CHa ? -1.0 : 1.0;
    n1 = sign0 * sq(0, 0) + sq(0, 1);
    n2 = sign0 * sq(4, 0) + sq(4, 1);
}

} // namespace detail

/**
 * Integrates the companion system of `warp` (Reduced1D mode) over x_range x y_range, which must
 * lie in the ranges of the warp. Reports the mixed-partial compatibility residual
 * |d/dy P - d/dx Q| (relative to max(1, |P|, |Q|)) on an output grid; throws
 * InconsistentFieldError beyond options.compat_error.
 */
inline CompanionFields integrate_companions(const WarpField& warp, Interval x_range, Interval y_range,
                                            const CompanionOptions& opts = {})
{
    if (!warp.reduced_1d) throw UsageError("companion integration needs a Reduced1D warp field");
    const Interval wx = warp.x_range(), wy = warp.y_range();
    if (x_range.lo < wx.lo || x_range.hi > wx.hi || y_range.lo < wy.lo || y_range.hi > wy.hi)
        throw DomainError("companion range exceeds the range of the warp field");
    CompanionFields c;
    c.kind = warp.kind;
    c.n = warp.n;
    c.options = opts;
    c.warp = warp;
    detail::PfaffSystem sys{warp.kind, warp.n, opts};
    const OdeRhs xrhs = [&](const State& s, State& d, double x) {
        sys.rhs(0, x, c.warp_at(x, warp.y0), s, d);
    };
    TwoSidedResult xl = tabulate_two_sided(xrhs, companion_initial_state(warp.kind), warp.x0, x_range.lo, x_range.hi,
                                           warp.table.dt, [](const State&) { return std::string(); });
    c.xline = std::move(xl.table);
    c.c0 = CVec::Zero(1);

    const double hd = 1e-3;
    const double xlo = c.xline.t_begin() + 2 * hd, xhi = c.xline.t_end() - 2 * hd;
    for (int i = 0; i < opts.grid_nx; ++i) c.grid_x.push_back(xlo + (xhi - xlo) * i / std::max(1, opts.grid_nx - 1));
    for (int j = 0; j < opts.grid_ny; ++j)
        c.grid_y.push_back(y_range.lo + 2 * hd + (y_range.hi - y_range.lo - 4 * hd) * j / std::max(1, opts.grid_ny - 1));

    double drift = 0.0, compat = 0.0;
    for (double y : c.grid_y)
        for (double x : c.grid_x) {
            const State s = c.state_at(x, y);
            switch (warp.kind) {
            case WarpKind::C: c.z.emplace_back(s[0], s[1]); break;
            case WarpKind::CHc: {
                const cplx F(s[0], s[1]);
                const double f = c.warp_at(x, y).f;
                c.F.push_back(F);
                c.v.push_back(s[2]);
                c.u.push_back(0.5 * (std::norm(F) - 1.0) + 0.5 / (f * f));
                break;
            }
            default: {
                c.Theta1.push_back({cplx(s[0], s[1]), cplx(s[2], s[3])});
                c.Theta2.push_back({cplx(s[4], s[5]), cplx(s[6], s[7])});
                double n1, n2;
                detail::theta_norms(warp.kind, s, n1, n2);
                const double t2 = warp.kind == WarpKind::CHa ? -1.0 : 1.0;
                drift = std::max({drift, std::abs(n1 - 1.0), std::abs(n2 - t2)});
            }
            }
            State Pp, Pm, Pp2, Pm2, Qp, Qm, Qp2, Qm2, P0, Q0, dummy;
            c.pq_at(x, y + hd, Pp, dummy);
            c.pq_at(x, y - hd, Pm, dummy);
            c.pq_at(x, y + 2 * hd, Pp2, dummy);
            c.pq_at(x, y - 2 * hd, Pm2, dummy);
            c.pq_at(x + hd, y, dummy, Qp);
            c.pq_at(x - hd, y, dummy, Qm);
            c.pq_at(x + 2 * hd, y, dummy, Qp2);
            c.pq_at(x - 2 * hd, y, dummy, Qm2);
            c.pq_at(x, y, P0, Q0);
            double scale = 1.0;
            for (std::size_t q = 0; q < P0.size(); ++q) scale = std::max({scale, std::abs(P0[q]), std::abs(Q0[q])});
            for (std::size_t q = 0; q < P0.size(); ++q) {
                const double dyP = (Pm2[q] - 8 * Pm[q] + 8 * Pp[q] - Pp2[q]) / (12 * hd);
                const double dxQ = (Qm2[q] - 8 * Qm[q] + 8 * Qp[q] - Qp2[q]) / (12 * hd);
                compat = std::max(compat, std::abs(dyP - dxQ) / scale);
            }
        }
    c.theta_unit_drift = drift;
    c.compatibility_residual = compat;
    if (compat > opts.compat_error)
        throw InconsistentFieldError("companion system incompatible: mixed-partial residual " + std::to_string(compat));
    return c;
}

/// Companions over the x-range of an x-reduced warp.
inline CompanionFields integrate_companions(const WarpField& warp, Interval y_range, const CompanionOptions& opts = {})
{
    return integrate_companions(warp, warp.x_range(), y_range, opts);
}

} // namespace dideal
