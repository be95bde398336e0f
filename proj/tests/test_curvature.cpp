#include <gtest/gtest.h>

#include "dideal/families.hpp"
#include "support.hpp"

using namespace dideal;

namespace {

using support::interior_point;
using support::random_symmetric_cubic;

double h_norm2(const CubicTensor& h)
{
    double s = 0.0;
    for (double v : h.coeffs) s += v * v;
    return s;
}

} // namespace

TEST(Curvature, ConstantCurvatureExamples)
{
    const CurvatureOperator R = constant_curvature(4, 0.7);
    EXPECT_DOUBLE_EQ(R.sectional(0, 3), 0.7);
    EXPECT_EQ(bianchi_residual(R), 0.0);
    EXPECT_NEAR(tau_subspace(R, Mat::Identity(4, 4)), 0.7 * 6, 1e-14);
    EXPECT_NEAR(tau_subspace(R, Mat::Identity(4, 4).leftCols(2)), 0.7, 1e-14);
}

TEST(Curvature, ProductOfSpheresExamples)
{
    const CurvatureOperator R = product_of_spheres(2, 3);
    EXPECT_EQ(bianchi_residual(R), 0.0);
    EXPECT_DOUBLE_EQ(R.sectional(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(R.sectional(0, 2), 0.0);
    EXPECT_DOUBLE_EQ(R.sectional(3, 4), 1.0);
    EXPECT_NEAR(tau_subspace(R, Mat::Identity(5, 5)), 4.0, 1e-14);
}

TEST(Curvature, TauRejectsNonOrthonormalColumns)
{
    Mat U = Mat::Identity(3, 2);
    U(0, 0) = 2.0;
    EXPECT_THROW(tau_subspace(constant_curvature(3, 1.0), U), UsageError);
}

TEST(Curvature, GaussOperatorSymmetriesAndScalarTraceProperty)
{
    SplitMix64 rng(17);
    for (int n : {3, 5, 7})
        for (int trial = 0; trial < 10; ++trial) {
            const double c = rng.uniform(-1.0, 1.0);
            const CubicTensor h = random_symmetric_cubic(n, rng);
            const CurvatureOperator R = curvature_from_gauss(h, c);
            EXPECT_LT(bianchi_residual(R), 1e-12);
            // Traced Gauss equation: 2 tau = n(n-1)c + n^2 H^2 - |h|^2.
            const double tau = tau_subspace(R, Mat::Identity(n, n));
            EXPECT_NEAR(2.0 * tau, n * (n - 1) * c + n * n * h.H2 - h_norm2(h), 1e-10 * (1 + h_norm2(h)));
        }
}

TEST(Curvature, GaussOperatorIsFrameCovariantProperty)
{
    SplitMix64 rng(23);
    const int n = 5;
    const CubicTensor h = random_symmetric_cubic(n, rng);
    const Mat U = support::random_rotation(n, rng);
    const CurvatureOperator R = curvature_from_gauss(h, 0.3);
    const CurvatureOperator Rr = curvature_from_gauss(rotate_cubic(h, U), 0.3);
    // tau of a 2-plane spanned by columns of U in the old frame equals tau of e_0, e_1 in the rotated frame.
    EXPECT_NEAR(tau_subspace(R, U.leftCols(2)), Rr.sectional(0, 1), 1e-11);
    EXPECT_NEAR(tau_subspace(R, U.leftCols(3)), tau_subspace(Rr, Mat::Identity(n, n).leftCols(3)), 1e-11);
}

TEST(Curvature, ZeroCubicGivesConstantCurvature)
{
    const CurvatureOperator R = curvature_from_gauss(CubicTensor(4), -1.0);
    EXPECT_EQ(max_abs_difference(R, constant_curvature(4, -1.0)), 0.0);
}

TEST(Curvature, MetricRouteOnConstantCurvatureBlocks)
{
    struct Case {
        BlockName name;
        double c;
    };
    for (const Case& k : {Case{BlockName::TotallyGeodesicLegendreSphere, 1.0}, Case{BlockName::TotallyGeodesicLegendreHyperbolic, -1.0},
                          Case{BlockName::FlatLagrangianSubspace, 0.0}, Case{BlockName::MinimalLagrangianTorus, 0.0}}) {
        const BuildingBlock b = builtin_block(k.name, 3);
        SplitMix64 rng(3);
        for (int t = 0; t < 3; ++t) {
            const Vec p = interior_point(b.chart, rng, 0.05);
            const CurvatureOperator R = riemann_fd(b.chart, p, b.ambient);
            EXPECT_LT(max_abs_difference(R, constant_curvature(3, k.c)), 1e-5) << to_string(k.name);
            EXPECT_LT(bianchi_residual(R), 1e-6) << to_string(k.name);
        }
    }
}

TEST(Curvature, FlatTorusGaussRouteAgreesWithMetricRoute)
{
    const BuildingBlock b = builtin_block(BlockName::MinimalLagrangianTorus, 3);
    const Vec p = b.chart.box_center();
    const Jet3 jet = evaluate_jet(b.chart, p, 2);
    const TangentFrame fr = orthonormal_frame(jet, b.ambient);
    const CubicTensor h = second_fundamental_form(jet, b.ambient, fr);
    EXPECT_GT(h.max_abs(), 0.1);
    EXPECT_LT(h.H2, 1e-10);
    const CurvatureOperator Rg = curvature_from_gauss(h, b.ambient.c);
    EXPECT_LT(Rg.max_abs(), 1e-6);
    EXPECT_LT(max_abs_difference(Rg, riemann_fd(b.chart, p, b.ambient)), 1e-5);
}

TEST(Curvature, GaussAndMetricRoutesAgreeOnFamilies)
{
    for (auto tag : {FamilyTag::Case2_Cn, FamilyTag::Case2_CHn_c, FamilyTag::Case3_CHn_b}) {
        FamilySpec spec = default_family_spec(tag, 5);
        spec.self_cert_samples = 0;
        const FamilyChart fc = build_family(spec);
        SplitMix64 rng(9);
        for (int t = 0; t < 2; ++t) {
            const Vec p = interior_point(fc.chart, rng, 0.03);
            const Jet3 jet = evaluate_jet(fc.chart, p, 2);
            const TangentFrame fr = orthonormal_frame(jet, fc.space);
            const CurvatureOperator Rg = curvature_from_gauss(second_fundamental_form(jet, fc.space, fr), fc.space.c);
            const CurvatureOperator Rf = riemann_fd(fc.chart, p, fc.space);
            EXPECT_LT(max_abs_difference(Rg, Rf) / (1.0 + Rg.max_abs()), 1e-3) << to_string(tag);
            EXPECT_LT(codazzi_residual(fc.chart, p, fc.space), 1e-3) << to_string(tag);
        }
    }
}

TEST(Curvature, CodazziVanishesOnBlocks)
{
    const BuildingBlock b = builtin_block(BlockName::TotallyGeodesicLegendreSphere, 3);
    EXPECT_LT(codazzi_residual(b.chart, b.chart.box_center(), b.ambient), 1e-5);
    const FamilyChart flat = flat_plane_chart(5);
    EXPECT_EQ(codazzi_residual(flat.chart, flat.chart.box_center(), flat.space), 0.0);
}
