#pragma once

// Random inputs shared by the test programs.

#include "dideal/jets.hpp"
#include "dideal/rng.hpp"
#include "dideal/shape.hpp"

namespace support {

using dideal::Mat;
using dideal::Vec;

inline Vec interior_point(const dideal::ImmersionChart& ch, dideal::SplitMix64& rng, double margin = 0.02)
{
    Vec p(ch.param_dim);
    for (int i = 0; i < ch.param_dim; ++i) p[i] = rng.uniform(ch.domain_box[i].lo + margin, ch.domain_box[i].hi - margin);
    return p;
}

inline Mat random_rotation(int n, dideal::SplitMix64& rng)
{
    Mat G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = rng.normal();
    return Eigen::HouseholderQR<Mat>(G).householderQ();
}

inline dideal::CubicTensor random_symmetric_cubic(int n, dideal::SplitMix64& rng, double scale = 1.0)
{
    dideal::CubicTensor h(n);
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b)
            for (int c = b; c < n; ++c) {
                const double v = scale * rng.normal();
                h(a, b, c) = h(a, c, b) = h(b, a, c) = h(b, c, a) = h(c, a, b) = h(c, b, a) = v;
            }
    h.update_mean();
    return h;
}

/// Fully symmetric (n-2)^3 block with h^k_ii summed over i equal to zero for every k.
inline std::vector<double> traceless_block(int n, dideal::SplitMix64& rng, double scale = 1.0)
{
    const int m = n - 2;
    std::vector<double> b(static_cast<std::size_t>(m) * m * m);
    auto at = [&](int k, int i, int j) -> double& { return b[(k * m + i) * m + j]; };
    for (int k = 0; k < m; ++k)
        for (int i = k; i < m; ++i)
            for (int j = i; j < m; ++j) {
                const double v = scale * rng.normal();
                at(k, i, j) = at(k, j, i) = at(i, k, j) = at(i, j, k) = at(j, k, i) = at(j, i, k) = v;
            }
    // Subtracting the symmetrization of c_k (e_k x delta) removes traces; iterate since the pieces couple.
    for (int pass = 0; pass < 200; ++pass) {
        double worst = 0.0;
        for (int k = 0; k < m; ++k) {
            double tr = 0.0;
            for (int i = 0; i < m; ++i) tr += at(k, i, i);
            worst = std::max(worst, std::abs(tr));
            const double c = tr / (m + 2.0);
            at(k, k, k) -= 3.0 * c;
            for (int i = 0; i < m; ++i)
                if (i != k) {
                    at(k, i, i) -= c;
                    at(i, k, i) -= c;
                    at(i, i, k) -= c;
                }
        }
        if (worst < 1e-15) break;
    }
    return b;
}

/// phi(t) = h(u, u, u) with u = cos t e1 + sin t e2, for the normal form.
inline double phi_normal_form(int n, double gamma, double lam, double mu, double t)
{
    const double c = std::cos(t), s = std::sin(t);
    return gamma * c * c * c + 3.0 * (n * lam - gamma) * c * s * s + n * mu * s * s * s;
}

/// Normal-form scalars for which e1 is the strict global maximizer of phi on the D1 circle.
inline bool e1_is_strict_max(int n, double gamma, double lam, double mu)
{
    for (int g = 1; g < 3600; ++g) {
        const double t = g * 2.0 * M_PI / 3600;
        if (std::abs(std::sin(t)) < 0.05) continue;
        if (phi_normal_form(n, gamma, lam, mu, t) > gamma - 1e-3) return false;
    }
    return true;
}

} // namespace support
