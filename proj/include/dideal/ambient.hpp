#pragma once

/**
 * @file ambient.hpp
 * @brief The three complex space forms and their real models.
 *
 * Flat C^n is used directly. CP^n(4) and CH^n(-4) are handled through horizontal
 * lifts into the unit sphere of C^{n+1} and the anti-de Sitter quadric of C^{n+1}_1.
 * Complex vectors are stored as interleaved (Re z1, Im z1, Re z2, ...) real arrays.
 */

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "dideal/errors.hpp"

namespace dideal {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using AmbientVector = Vec;

enum class AmbientKind { FlatC, SphereLift, AdSLift };

inline std::string to_string(AmbientKind k)
{
    switch (k) {
    case AmbientKind::FlatC: return "FlatC";
    case AmbientKind::SphereLift: return "SphereLift";
    case AmbientKind::AdSLift: return "AdSLift";
    }
    return "?";
}

inline AmbientKind ambient_kind_from_string(const std::string& s)
{
    if (s == "FlatC") return AmbientKind::FlatC;
    if (s == "SphereLift") return AmbientKind::SphereLift;
    if (s == "AdSLift") return AmbientKind::AdSLift;
    throw UsageError("unknown ambient kind '" + s + "'");
}

struct AmbientSpace {
    AmbientKind kind = AmbientKind::FlatC;
    int complex_dim_n = 0;     ///< dimension n of the Lagrangian submanifold
    double c = 0.0;            ///< holomorphic sectional curvature is 4c
    double epsilon = 0.0;      ///< <p,p> on the lift quadric; unused for FlatC
    Vec signature_mask;        ///< per real coordinate

    static AmbientSpace make(AmbientKind kind, int n)
    {
        if (n < 1) throw UsageError("ambient dimension must be positive");
        AmbientSpace s;
        s.kind = kind;
        s.complex_dim_n = n;
        switch (kind) {
        case AmbientKind::FlatC: s.c = 0.0; s.epsilon = 0.0; break;
        case AmbientKind::SphereLift: s.c = 1.0; s.epsilon = 1.0; break;
        case AmbientKind::AdSLift: s.c = -1.0; s.epsilon = -1.0; break;
        }
        s.signature_mask = Vec::Ones(s.real_dim());
        if (kind == AmbientKind::AdSLift) {
            s.signature_mask[0] = -1.0;
            s.signature_mask[1] = -1.0;
        }
        return s;
    }

    bool is_lift() const { return kind != AmbientKind::FlatC; }
    int complex_slots() const { return is_lift() ? complex_dim_n + 1 : complex_dim_n; }
    int real_dim() const { return 2 * complex_slots(); }
};

inline AmbientSpace ambient_for_curvature(double c, int n)
{
    if (c == 0.0) return AmbientSpace::make(AmbientKind::FlatC, n);
    if (c == 1.0) return AmbientSpace::make(AmbientKind::SphereLift, n);
    if (c == -1.0) return AmbientSpace::make(AmbientKind::AdSLift, n);
    throw UsageError("curvature constant must be -1, 0 or 1");
}

inline double inner(const AmbientSpace& space, const AmbientVector& X, const AmbientVector& Y)
{
    if (X.size() != space.real_dim() || Y.size() != space.real_dim())
        throw UsageError("inner: dimension mismatch");
    return (space.signature_mask.array() * X.array() * Y.array()).sum();
}

/// Multiplication by i, with the space only consulted for the dimension.
inline AmbientVector apply_J(const AmbientSpace& space, const AmbientVector& X)
{
    if (X.size() != space.real_dim()) throw UsageError("apply_J: dimension mismatch");
    AmbientVector out(X.size());
    for (Eigen::Index k = 0; k + 1 < X.size(); k += 2) {
        out[k] = -X[k + 1];
        out[k + 1] = X[k];
    }
    return out;
}

struct LiftResiduals {
    double norm_residual = 0.0;
    double horizontality_residual = 0.0;
};

inline LiftResiduals lift_constraint_residuals(const AmbientSpace& space, const AmbientVector& point,
                                               const std::vector<AmbientVector>& tangent_frame)
{
    if (!space.is_lift()) throw UsageError("lift constraints are undefined on flat C^n");
    LiftResiduals r;
    r.norm_residual = std::abs(inner(space, point, point) - space.epsilon);
    const AmbientVector Jp = apply_J(space, point);
    for (const auto& V : tangent_frame)
        r.horizontality_residual = std::max(r.horizontality_residual, std::abs(inner(space, V, Jp)));
    return r;
}

inline AmbientVector to_real(const CVec& z)
{
    AmbientVector r(2 * z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) {
        r[2 * k] = z[k].real();
        r[2 * k + 1] = z[k].imag();
    }
    return r;
}

inline CVec to_complex(const AmbientVector& r)
{
    CVec z(r.size() / 2);
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = cplx(r[2 * k], r[2 * k + 1]);
    return z;
}

} // namespace dideal
