#include <gtest/gtest.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_odeiv2.h>

#include "dideal/warp.hpp"

using namespace dideal;

namespace {

/// f_yy from f f_yy - (n-2) f_y^2 + (n-1) f^{2n-2} = 0, the C-kind equation with f_x = 0.
int c_kind_y_rhs(double, const double y[], double d[], void* p)
{
    const int n = *static_cast<int*>(p);
    d[0] = y[1];
    d[1] = ((n - 2) * y[1] * y[1] - (n - 1) * std::pow(y[0], 2 * n - 2)) / y[0];
    return GSL_SUCCESS;
}

double oracle_c_kind_y(int n, double f0, double fy0, double y1)
{
    gsl_odeiv2_system sys{c_kind_y_rhs, nullptr, 2, &n};
    gsl_odeiv2_driver* d = gsl_odeiv2_driver_alloc_y_new(&sys, gsl_odeiv2_step_rk8pd, y1 >= 0 ? 1e-6 : -1e-6, 1e-13, 1e-13);
    double y[2] = {f0, fy0}, t = 0.0;
    gsl_odeiv2_driver_apply(d, &t, y1, y);
    gsl_odeiv2_driver_free(d);
    return y[0];
}

} // namespace

TEST(Warp, ClosedFormExampleInDimensionFive)
{
    const WarpField w = solve_warp_reduced(WarpKind::C, 5, 0.0, 1.0, 0.0, -0.3, 0.3);
    EXPECT_TRUE(w.truncation_low.empty());
    EXPECT_TRUE(w.truncation_high.empty());
    double worst = 0.0;
    for (std::size_t k = 0; k < w.x.size(); ++k)
        worst = std::max(worst, std::abs(w.f[k] - std::pow(std::cos(4.0 * w.x[k]), 0.25)));
    EXPECT_LE(worst, 1e-8);
    double f, fx, fy;
    w.sample(0.123456, 7.0, f, fx, fy);
    EXPECT_NEAR(f, std::pow(std::cos(4.0 * 0.123456), 0.25), 1e-8);
    EXPECT_NEAR(fx, -f * std::tan(4.0 * 0.123456), 1e-8);
    EXPECT_EQ(fy, 0.0);
    EXPECT_LT(w.richardson_change, 1e-10);
    EXPECT_LT(w.max_residual, 1e-6);
}

TEST(Warp, CosinePowerSolvesTheEquationProperty)
{
    // f = (A cos(m u))^{1/m}: f' = -f tan(m u), f'' = f tan^2(m u) - m f sec^2(m u).
    for (WarpKind kind : {WarpKind::C, WarpKind::CHc})
        for (int n : {5, 6, 7, 9})
            for (double x : {-0.1, 0.0, 0.05, 0.12}) {
                const double A = 1.3, x0 = 0.02;
                const double m = kind == WarpKind::C ? n - 1.0 : n - 3.0;
                const double f = closed_form::warp_cos_power(kind, n, A, x0, x);
                const double t = std::tan(m * (x - x0));
                const double fx = -f * t, fxx = f * t * t - m * f * (1 + t * t);
                EXPECT_NEAR(warp_pde_scaled(kind, n, f, fx, 0.0, fxx, 0.0), 0.0, 1e-11) << to_string(kind) << n;
                EXPECT_NEAR(reduced_fxx(kind, n, f, fx), fxx, 1e-11);
            }
}

TEST(Warp, ClosedFormForHigherDimensionsAndCHc)
{
    for (int n : {6, 7}) {
        const WarpField w = solve_warp_reduced(WarpKind::C, n, 0.0, 1.0, 0.0, -0.2, 0.2);
        for (std::size_t k = 0; k < w.x.size(); k += 37)
            EXPECT_NEAR(w.f[k], closed_form::warp_cos_power(WarpKind::C, n, 1.0, 0.0, w.x[k]), 1e-8);
    }
    const WarpField w = solve_warp_reduced(WarpKind::CHc, 5, 0.0, 1.0, 0.0, -0.4, 0.4);
    for (std::size_t k = 0; k < w.x.size(); k += 37)
        EXPECT_NEAR(w.f[k], closed_form::warp_cos_power(WarpKind::CHc, 5, 1.0, 0.0, w.x[k]), 1e-8);
}

TEST(Warp, YReductionMatchesIndependentIntegrator)
{
    const int n = 5;
    WarpOptions o;
    const WarpField w = solve_warp_reduced(WarpKind::C, n, WarpAxis::Y, 0.3, 0.0, 0.8, 0.1, -0.3, 0.3, o);
    EXPECT_EQ(w.x.size(), 1u);
    EXPECT_EQ(w.x_range().lo, -1e300);
    for (double y : {-0.25, -0.1, 0.07, 0.29}) {
        double f, fx, fy;
        w.sample(123.0, y, f, fx, fy);
        EXPECT_NEAR(f, oracle_c_kind_y(n, 0.8, 0.1, y), 1e-9);
        EXPECT_EQ(fx, 0.0);
    }
}

TEST(Warp, ReducedSolutionsSatisfyTheFullEquationProperty)
{
    struct Case {
        WarpKind kind;
        WarpAxis axis;
        double f0, fp0;
    };
    for (const Case& c : {Case{WarpKind::CP, WarpAxis::X, 0.6, 0.1}, Case{WarpKind::CHa, WarpAxis::X, 0.9, -0.2},
                          Case{WarpKind::CHb, WarpAxis::Y, 1.5, 0.1}, Case{WarpKind::CHc, WarpAxis::Y, 0.9, 0.0},
                          Case{WarpKind::CP, WarpAxis::Y, 0.6, 0.0}}) {
        const WarpField w = solve_warp_reduced(c.kind, 5, c.axis, 0.0, 0.0, c.f0, c.fp0, -0.15, 0.15);
        const Interval r = c.axis == WarpAxis::X ? w.x_range() : w.y_range();
        const double h = 1e-3;
        for (double s = r.lo + 0.01; s < r.hi - 0.01; s += 0.013) {
            auto F = [&](double t) {
                double f, fx, fy;
                c.axis == WarpAxis::X ? w.sample(t, 0.0, f, fx, fy) : w.sample(0.0, t, f, fx, fy);
                return f;
            };
            const double f = F(s), fp = (F(s + h) - F(s - h)) / (2 * h), fpp = (F(s + h) - 2 * f + F(s - h)) / (h * h);
            const double res = c.axis == WarpAxis::X ? warp_pde_scaled(c.kind, 5, f, fp, 0.0, fpp, 0.0)
                                                     : warp_pde_scaled(c.kind, 5, f, 0.0, fp, 0.0, fpp);
            EXPECT_LT(std::abs(res), 1e-5) << to_string(c.kind) << " " << to_string(c.axis) << " s=" << s;
        }
    }
}

TEST(Warp, TruncationAtAdmissibleBoundary)
{
    // (cos 4x)^{1/4} vanishes at x = pi/8; the sweep must stop before.
    const WarpField w = solve_warp_reduced(WarpKind::C, 5, 0.0, 1.0, 0.0, -1.0, 1.0);
    EXPECT_FALSE(w.truncation_high.empty());
    EXPECT_FALSE(w.truncation_low.empty());
    EXPECT_LT(w.x_range().hi, M_PI / 8);
    EXPECT_GT(w.x_range().hi, 0.3);
    for (double v : w.f) EXPECT_GT(v, 1e-3);
}

TEST(Warp, InitialValueValidation)
{
    EXPECT_THROW(solve_warp_reduced(WarpKind::C, 4, 0.0, 1.0, 0.0, -0.1, 0.1), UsageError);
    EXPECT_THROW(solve_warp_reduced(WarpKind::C, 5, 0.0, 0.0, 0.0, -0.1, 0.1), DomainError);
    EXPECT_THROW(solve_warp_reduced(WarpKind::CP, 5, 0.0, 1.2, 0.0, -0.1, 0.1), DomainError);
    EXPECT_THROW(solve_warp_reduced(WarpKind::CHb, 5, 0.0, 0.8, 0.0, -0.1, 0.1), DomainError);
    EXPECT_THROW(closed_form::warp_cos_power(WarpKind::CP, 5, 1.0, 0.0, 0.0), UsageError);
}

TEST(Warp, RelaxationRecoversKnownSolution)
{
    const int n = 5;
    auto exact = [](double x, double) { return std::pow(std::cos(4.0 * x), 0.25); };
    WarpOptions o;
    o.relax_tol = 1e-12;
    const WarpField w = solve_warp_relax(WarpKind::C, n, {-0.2, 0.2}, {-0.2, 0.2}, 21, 21, exact, o);
    EXPECT_TRUE(w.converged);
    double err = 0.0;
    for (std::size_t j = 0; j < w.y.size(); ++j)
        for (std::size_t i = 0; i < w.x.size(); ++i) err = std::max(err, std::abs(w.f[j * w.x.size() + i] - exact(w.x[i], w.y[j])));
    EXPECT_LT(err, 1e-4);
    EXPECT_GT(err, 0.0);
    // Second order: the half-spacing solve moves nodes by about 3/4 of the coarse error.
    EXPECT_LT(w.richardson_change, err);
    EXPECT_GT(w.richardson_change, 0.5 * err);
    EXPECT_LT(w.max_residual, 1e-7);
    double f, fx, fy;
    EXPECT_THROW(w.sample(0.0, 0.0, f, fx, fy), UsageError);
    EXPECT_THROW(solve_warp_relax(WarpKind::C, n, {-0.2, 0.2}, {-0.2, 0.2}, 2, 21, exact), UsageError);
}
