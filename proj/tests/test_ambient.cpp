#include <gtest/gtest.h>

#include "dideal/ambient.hpp"
#include "dideal/rng.hpp"

using namespace dideal;

namespace {

AmbientVector random_vector(int dim, SplitMix64& rng)
{
    AmbientVector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = rng.normal();
    return v;
}

AmbientVector basis(int dim, int k)
{
    AmbientVector v = AmbientVector::Zero(dim);
    v[k] = 1.0;
    return v;
}

} // namespace

TEST(Ambient, KindFixesCurvatureAndSignature)
{
    for (auto k : {AmbientKind::FlatC, AmbientKind::SphereLift, AmbientKind::AdSLift}) {
        const AmbientSpace s = AmbientSpace::make(k, 5);
        const int negatives = static_cast<int>((s.signature_mask.array() < 0).count());
        switch (k) {
        case AmbientKind::FlatC:
            EXPECT_EQ(s.c, 0.0);
            EXPECT_EQ(s.real_dim(), 10);
            EXPECT_EQ(negatives, 0);
            break;
        case AmbientKind::SphereLift:
            EXPECT_EQ(s.c, 1.0);
            EXPECT_EQ(s.epsilon, 1.0);
            EXPECT_EQ(s.real_dim(), 12);
            EXPECT_EQ(negatives, 0);
            break;
        case AmbientKind::AdSLift:
            EXPECT_EQ(s.c, -1.0);
            EXPECT_EQ(s.epsilon, -1.0);
            EXPECT_EQ(s.real_dim(), 12);
            EXPECT_EQ(negatives, 2);
            EXPECT_EQ(s.signature_mask[0], -1.0);
            EXPECT_EQ(s.signature_mask[1], -1.0);
            break;
        }
        EXPECT_EQ(ambient_kind_from_string(to_string(k)), k);
    }
    EXPECT_EQ(ambient_for_curvature(-1.0, 3).kind, AmbientKind::AdSLift);
    EXPECT_THROW(ambient_for_curvature(2.0, 3), UsageError);
}

TEST(Ambient, InnerProductExamples)
{
    const AmbientSpace flat = AmbientSpace::make(AmbientKind::FlatC, 5);
    EXPECT_EQ(inner(flat, basis(10, 0), basis(10, 0)), 1.0);
    EXPECT_EQ(inner(flat, basis(10, 0), basis(10, 3)), 0.0);
    const AmbientSpace ads = AmbientSpace::make(AmbientKind::AdSLift, 5);
    EXPECT_EQ(inner(ads, basis(12, 0), basis(12, 0)), -1.0);
    EXPECT_EQ(inner(ads, basis(12, 1), basis(12, 1)), -1.0);
    EXPECT_EQ(inner(ads, basis(12, 2), basis(12, 2)), 1.0);
    EXPECT_THROW(inner(flat, basis(12, 0), basis(10, 0)), UsageError);
}

TEST(Ambient, JExamples)
{
    const AmbientSpace flat = AmbientSpace::make(AmbientKind::FlatC, 3);
    const AmbientVector e0 = basis(6, 0);
    EXPECT_EQ(apply_J(flat, e0), basis(6, 1));
    SplitMix64 rng(3);
    const AmbientVector X = random_vector(6, rng);
    EXPECT_EQ(apply_J(flat, apply_J(flat, X)), -X);
    EXPECT_NEAR(inner(flat, apply_J(flat, X), X), 0.0, 1e-15);
}

TEST(Ambient, JIsLinearIsometryProperty)
{
    SplitMix64 rng(11);
    for (auto k : {AmbientKind::FlatC, AmbientKind::SphereLift, AmbientKind::AdSLift})
        for (int trial = 0; trial < 50; ++trial) {
            const AmbientSpace s = AmbientSpace::make(k, 2 + trial % 6);
            const AmbientVector X = random_vector(s.real_dim(), rng), Y = random_vector(s.real_dim(), rng);
            const double a = rng.normal(), b = rng.normal();
            const double scale = 1.0 + std::abs(inner(s, X, Y));
            EXPECT_NEAR(inner(s, apply_J(s, X), apply_J(s, Y)), inner(s, X, Y), 1e-14 * scale);
            EXPECT_EQ(apply_J(s, a * X + b * Y), a * apply_J(s, X) + b * apply_J(s, Y));
            EXPECT_EQ(apply_J(s, apply_J(s, X)), -X);
        }
}

TEST(Ambient, DefinitenessMatchesKindProperty)
{
    SplitMix64 rng(5);
    for (auto k : {AmbientKind::FlatC, AmbientKind::SphereLift}) {
        const AmbientSpace s = AmbientSpace::make(k, 4);
        for (int t = 0; t < 100; ++t) {
            const AmbientVector X = random_vector(s.real_dim(), rng);
            EXPECT_GT(inner(s, X, X), 0.0);
        }
    }
    const AmbientSpace ads = AmbientSpace::make(AmbientKind::AdSLift, 4);
    EXPECT_LT(inner(ads, basis(10, 0), basis(10, 0)), 0.0);
}

TEST(Ambient, LiftResidualExamples)
{
    const AmbientSpace sph = AmbientSpace::make(AmbientKind::SphereLift, 2);
    CVec p(3);
    p << 1.0, 0.0, 0.0;
    CVec t1(3), t2(3);
    t1 << 0.0, 1.0, 0.0;
    t2 << 0.0, 0.0, 1.0;
    LiftResiduals r = lift_constraint_residuals(sph, to_real(p), {to_real(t1), to_real(t2)});
    EXPECT_EQ(r.norm_residual, 0.0);
    EXPECT_EQ(r.horizontality_residual, 0.0);

    r = lift_constraint_residuals(sph, to_real(1.1 * p), {});
    EXPECT_NEAR(r.norm_residual, 0.21, 1e-15);

    CVec vertical(3);
    vertical << cplx(0.0, 1.0), 0.0, 0.0;
    r = lift_constraint_residuals(sph, to_real(p), {to_real(vertical)});
    EXPECT_NEAR(r.horizontality_residual, 1.0, 1e-15);

    const AmbientSpace ads = AmbientSpace::make(AmbientKind::AdSLift, 2);
    CVec q(3);
    q << std::cosh(0.7), std::sinh(0.7) * std::polar(1.0, 0.3), 0.0;
    q *= std::polar(1.0, 1.1);
    r = lift_constraint_residuals(ads, to_real(q), {});
    EXPECT_NEAR(r.norm_residual, 0.0, 1e-14);

    EXPECT_THROW(lift_constraint_residuals(AmbientSpace::make(AmbientKind::FlatC, 2), to_real(p.head(2)), {}), UsageError);
}

TEST(Ambient, ComplexRealRoundTrip)
{
    CVec z(3);
    z << cplx(1, 2), cplx(-3, 0.5), cplx(0, -1);
    const AmbientVector r = to_real(z);
    EXPECT_EQ(r[0], 1.0);
    EXPECT_EQ(r[1], 2.0);
    EXPECT_EQ(to_complex(r), z);
}
