#pragma once

/**
 * @file profiles.hpp
 * @brief Profile curves (lambda, phi, theta)(t) of the case-II families.
 *
 * All kinds share lambda' = (n-3) lambda phi. The phi and theta equations are
 *   Cn_II:              phi' = -phi^2 - (n-2) lambda^2,      theta' = (n-1) lambda
 *   CPn_II:             phi' = -1 - phi^2 - (n-2) lambda^2,  theta' = lambda
 *   CHn_IIa/b/c:        phi' =  1 - phi^2 - (n-2) lambda^2,  theta' = lambda
 * with lambda^2 + phi^2 below, above, or on the unit circle for a, b, c respectively.
 */

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dideal/ode.hpp"

namespace dideal {

enum class ProfileKind { Cn_II, CPn_II, CHn_IIa, CHn_IIb, CHn_IIc };

inline std::string to_string(ProfileKind k)
{
    switch (k) {
    case ProfileKind::Cn_II: return "Cn_II";
    case ProfileKind::CPn_II: return "CPn_II";
    case ProfileKind::CHn_IIa: return "CHn_IIa";
    case ProfileKind::CHn_IIb: return "CHn_IIb";
    case ProfileKind::CHn_IIc: return "CHn_IIc";
    }
    return "?";
}

inline ProfileKind profile_kind_from_string(const std::string& s)
{
    for (auto k : {ProfileKind::Cn_II, ProfileKind::CPn_II, ProfileKind::CHn_IIa, ProfileKind::CHn_IIb, ProfileKind::CHn_IIc})
        if (to_string(k) == s) return k;
    throw UsageError("unknown profile kind '" + s + "'");
}

struct ProfileInit {
    double lam = 0.5;
    double phi = 0.7;
    double theta = 0.0;
};

struct ProfileOptions {
    double step = 1e-4;
    double margin = 1e-3;      ///< distance kept from phi = 0 (Cn_II) and from the unit circle (CHn_IIa/b)
    double blowup = 1e6;
    double circle_tol = 1e-10; ///< CHn_IIc start must lie on the unit circle to this accuracy
};

struct ProfileSolution {
    ProfileKind kind = ProfileKind::Cn_II;
    int n = 0;
    double step = 0.0;
    std::vector<double> t, lam, phi, theta;
    std::vector<double> conserved;   ///< lambda^{2/(n-3)} (lambda^2 + phi^2), Cn_II only
    bool truncated = false;
    std::string reason;
    HermiteTable table;              ///< (lambda, phi, theta) with exact derivatives at the nodes

    double t_begin() const { return t.front(); }
    double t_end() const { return t.back(); }

    /// Cubic Hermite interpolation of (lambda, phi, theta) at time s.
    void at(double s, double& l, double& p, double& th) const
    {
        State y;
        table.eval(s, y);
        l = y[0];
        p = y[1];
        th = y[2];
    }
};

inline OdeRhs profile_rhs(ProfileKind kind, int n)
{
    const double k = n - 3.0, m = n - 2.0;
    switch (kind) {
    case ProfileKind::Cn_II:
        return [=](const State& y, State& d, double) {
            d[0] = k * y[0] * y[1];
            d[1] = -y[1] * y[1] - m * y[0] * y[0];
            d[2] = (n - 1.0) * y[0];
        };
    case ProfileKind::CPn_II:
        return [=](const State& y, State& d, double) {
            d[0] = k * y[0] * y[1];
            d[1] = -1.0 - y[1] * y[1] - m * y[0] * y[0];
            d[2] = y[0];
        };
    default:
        return [=](const State& y, State& d, double) {
            d[0] = k * y[0] * y[1];
            d[1] = 1.0 - y[1] * y[1] - m * y[0] * y[0];
            d[2] = y[0];
        };
    }
}

inline double cn_conserved(int n, double lam, double phi)
{
    return std::pow(lam, 2.0 / (n - 3)) * (lam * lam + phi * phi);
}

/// Reason the state violates the side conditions of `kind`, or "" if admissible.
inline std::string profile_violation(ProfileKind kind, const State& y, const ProfileOptions& o)
{
    const double l = y[0], p = y[1], r2 = l * l + p * p;
    for (double v : y)
        if (!std::isfinite(v) || std::abs(v) > o.blowup) return "blow-up";
    if (!(l > 0.0)) return "lambda reached 0";
    switch (kind) {
    case ProfileKind::Cn_II:
        if (!(p > o.margin)) return "phi reached the crossing margin";
        break;
    case ProfileKind::CHn_IIa:
        if (!(r2 < 1.0 - o.margin)) return "lambda^2+phi^2 reached 1 - margin";
        break;
    case ProfileKind::CHn_IIb:
        if (!(r2 > 1.0 + o.margin)) return "lambda^2+phi^2 reached 1 + margin";
        break;
    default: break;
    }
    return "";
}

/// Fixed-step RK4 on [span_lo, span_hi], truncated before the first inadmissible step.
inline ProfileSolution integrate_profile(ProfileKind kind, int n, const ProfileInit& init, double span_lo, double span_hi,
                                         const ProfileOptions& opts = {})
{
    if (n < 5) throw UsageError("profile families need n >= 5");
    if (!(span_hi > span_lo)) throw UsageError("profile span must be increasing");
    if (!(opts.step > 0.0)) throw UsageError("profile step must be positive");
    State y{init.lam, init.phi, init.theta};
    if (kind == ProfileKind::CHn_IIc && std::abs(init.lam * init.lam + init.phi * init.phi - 1.0) > opts.circle_tol)
        throw DomainError("CHn_IIc needs lambda^2 + phi^2 = 1 at the start");
    if (const std::string why = profile_violation(kind, y, opts); !why.empty())
        throw DomainError("side condition violated at the start of " + to_string(kind) + ": " + why);

    ProfileSolution sol;
    sol.kind = kind;
    sol.n = n;
    sol.step = opts.step;
    const OdeRhs rhs = profile_rhs(kind, n);
    const int steps = static_cast<int>(std::floor((span_hi - span_lo) / opts.step + 1e-9));
    auto push = [&](double t, const State& s) {
        sol.t.push_back(t);
        sol.lam.push_back(s[0]);
        sol.phi.push_back(s[1]);
        sol.theta.push_back(s[2]);
        if (kind == ProfileKind::Cn_II) sol.conserved.push_back(cn_conserved(n, s[0], s[1]));
        sol.table.y.push_back(s);
        State d(3);
        rhs(s, d, t);
        sol.table.dy.push_back(d);
    };
    push(span_lo, y);
    for (int k = 0; k < steps; ++k) {
        State next = y;
        rk4_step(rhs, next, span_lo + k * opts.step, opts.step);
        if (const std::string why = profile_violation(kind, next, opts); !why.empty()) {
            sol.truncated = true;
            sol.reason = why;
            break;
        }
        y = next;
        push(span_lo + (k + 1) * opts.step, y);
    }
    sol.table.t0 = span_lo;
    sol.table.dt = opts.step;
    if (sol.t.size() < 2) throw DomainError("profile truncated after the first step: " + sol.reason);
    return sol;
}

/// Max over the trajectory of |Q(t) - Q(0)| / Q(0) for the Cn_II conserved quantity Q.
inline double conserved_relative_drift(const ProfileSolution& sol)
{
    if (sol.conserved.empty()) throw UsageError("conserved quantity is only tracked for Cn_II");
    double d = 0.0;
    for (double q : sol.conserved) d = std::max(d, std::abs(q - sol.conserved.front()) / sol.conserved.front());
    return d;
}

namespace closed_form {

/// c = 1/r with r^2 = lambda^{2/(n-3)} (lambda^2 + phi^2).
inline double cn_c_from_state(int n, double lam, double phi) { return 1.0 / std::sqrt(cn_conserved(n, lam, phi)); }

inline double cn_phi(int n, double c, double lam)
{
    return std::sqrt(1.0 / (c * c * std::pow(lam, 2.0 / (n - 3))) - lam * lam);
}

inline double cn_theta(int n, double c, double lam)
{
    return (n - 1.0) / (n - 2.0) * std::asin(c * std::pow(lam, (n - 2.0) / (n - 3.0)));
}

/// Start on the closed-form branch: (lambda0, phi(lambda0), theta(lambda0)).
inline ProfileInit cn_init(int n, double lam0, double c)
{
    const double arg = c * std::pow(lam0, (n - 2.0) / (n - 3.0));
    if (!(lam0 > 0.0) || !(arg < 1.0)) throw DomainError("closed-form Cn_II start needs 0 < c lambda^((n-2)/(n-3)) < 1");
    return {lam0, cn_phi(n, c, lam0), cn_theta(n, c, lam0)};
}

/// The unit-circle solution of the CH system through (1, 0) at t = 0.
inline void chc_profile(int n, double t, double& lam, double& phi, double& theta)
{
    const double k = n - 3.0;
    lam = 1.0 / std::cosh(k * t);
    phi = -std::tanh(k * t);
    theta = 2.0 * std::atan(std::tanh(0.5 * k * t)) / k;
}

} // namespace closed_form

} // namespace dideal
