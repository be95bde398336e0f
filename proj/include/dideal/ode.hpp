#pragma once

/**
 * @file ode.hpp
 * @brief Fixed-step classical RK4 driving and cubic Hermite tables on uniform grids.
 */

#include <boost/numeric/odeint/stepper/runge_kutta4.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "dideal/errors.hpp"

namespace dideal {

using State = std::vector<double>;
using OdeRhs = std::function<void(const State& y, State& dydt, double t)>;

/// One classical RK4 step of size dt, in place.
inline void rk4_step(const OdeRhs& rhs, State& y, double t, double dt)
{
    boost::numeric::odeint::runge_kutta4<State> stepper;
    stepper.do_step([&rhs](const State& x, State& dx, double tt) { rhs(x, dx, tt); }, y, t, dt);
}

/// Integrates from t0 to t1 with exactly `steps` equal RK4 steps.
inline State rk4_integrate(const OdeRhs& rhs, State y, double t0, double t1, int steps)
{
    if (steps < 1) throw UsageError("RK4 needs at least one step");
    const double dt = (t1 - t0) / steps;
    for (int k = 0; k < steps; ++k) rk4_step(rhs, y, t0 + k * dt, dt);
    return y;
}

/**
 * Values and first derivatives of a vector function on a uniform ascending grid;
 * evaluation by componentwise cubic Hermite interpolation.
 */
struct HermiteTable {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<State> y;
    std::vector<State> dy;

    std::size_t size() const { return y.size(); }
    double t_begin() const { return t0; }
    double t_end() const { return t0 + dt * static_cast<double>(y.size() - 1); }
    double node(std::size_t k) const { return t0 + dt * static_cast<double>(k); }

    void eval(double t, State& out, State* dout = nullptr) const
    {
        if (y.size() < 2) throw UsageError("Hermite table needs two nodes");
        const double eps = 1e-12 * std::max(1.0, std::abs(dt) * static_cast<double>(y.size()));
        if (t < t_begin() - eps || t > t_end() + eps)
            throw DomainError("interpolation outside the tabulated range [" + std::to_string(t_begin()) + ", " +
                              std::to_string(t_end()) + "] at " + std::to_string(t));
        double s = (t - t0) / dt;
        auto k = static_cast<std::size_t>(std::clamp(std::floor(s), 0.0, static_cast<double>(y.size() - 2)));
        s -= static_cast<double>(k);
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        const std::size_t m = y[k].size();
        out.resize(m);
        for (std::size_t c = 0; c < m; ++c)
            out[c] = h00 * y[k][c] + h10 * dt * dy[k][c] + h01 * y[k + 1][c] + h11 * dt * dy[k + 1][c];
        if (dout) {
            const double g00 = (6 * s2 - 6 * s) / dt, g10 = 3 * s2 - 4 * s + 1, g01 = (-6 * s2 + 6 * s) / dt,
                         g11 = 3 * s2 - 2 * s;
            dout->resize(m);
            for (std::size_t c = 0; c < m; ++c)
                (*dout)[c] = g00 * y[k][c] + g10 * dy[k][c] + g01 * y[k + 1][c] + g11 * dy[k + 1][c];
        }
    }

    State operator()(double t) const
    {
        State out;
        eval(t, out);
        return out;
    }
};

/**
 * Tabulates an ODE solution from (t_start, y_start) in both directions on a uniform grid of
 * spacing dt, stopping each direction at the range end or when `keep` rejects a state.
 * Returns the table and the reasons each side stopped ("" when the full range was covered).
 */
struct TwoSidedResult {
    HermiteTable table;
    std::string stop_low;
    std::string stop_high;
};

inline TwoSidedResult tabulate_two_sided(const OdeRhs& rhs, const State& y_start, double t_start, double t_lo, double t_hi,
                                         double dt, const std::function<std::string(const State&)>& keep)
{
    if (!(t_lo <= t_start && t_start <= t_hi)) throw UsageError("start point outside the requested range");
    auto sweep = [&](double sign, double t_end, std::string& reason) {
        std::vector<State> ys{y_start};
        State y = y_start;
        const int steps = static_cast<int>(std::floor(std::abs(t_end - t_start) / dt + 1e-9));
        for (int k = 0; k < steps; ++k) {
            State next = y;
            rk4_step(rhs, next, t_start + sign * k * dt, sign * dt);
            const std::string why = keep(next);
            if (!why.empty()) {
                reason = why;
                break;
            }
            y = next;
            ys.push_back(y);
        }
        return ys;
    };
    TwoSidedResult r;
    std::vector<State> lo = sweep(-1.0, t_lo, r.stop_low);
    std::vector<State> hi = sweep(1.0, t_hi, r.stop_high);
    std::reverse(lo.begin(), lo.end());
    r.table.t0 = t_start - dt * static_cast<double>(lo.size() - 1);
    r.table.dt = dt;
    r.table.y = lo;
    r.table.y.insert(r.table.y.end(), hi.begin() + 1, hi.end());
    r.table.dy.resize(r.table.y.size());
    for (std::size_t k = 0; k < r.table.y.size(); ++k) {
        r.table.dy[k].resize(r.table.y[k].size());
        rhs(r.table.y[k], r.table.dy[k], r.table.node(k));
    }
    return r;
}

} // namespace dideal
