#pragma once

// Integration over unit spheres S^(m-1) in even dimension m: exact rational
// values for monomials and product quadrature rules for general smooth
// integrands. Exactness matters because the leading trace coefficients are
// sphere integrals of polynomial data; keeping them rational lets equality
// tests and the closed-form comparisons stay exact.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "shubin/term_bundle.hpp"

namespace shubin::quad {

using poly::GaussianRational;
using poly::Rational;
using poly::TermBundle;

// ============================================================================
// Exact monomial integrals
// ============================================================================

/// Gamma(k + 1/2) / sqrt(pi) as an exact rational: (2k)! / (4^k k!).
[[nodiscard]] inline Rational half_integer_gamma_ratio(long k) {
    if (k < 0) throw std::invalid_argument("half_integer_gamma_ratio: negative argument");
    Rational r(1);
    // Gamma(k+1/2) = (k-1/2)(k-3/2)...(1/2) Gamma(1/2)
    for (long i = 0; i < k; ++i) r *= Rational(2 * i + 1, 2);
    return r;
}

/// Integral of w^alpha over the unit sphere S^(m-1), m = alpha.size(), as the
/// rational multiplier of pi^(m/2). Zero when any exponent is odd; m must be
/// even so the normalizing Gamma factor is a factorial.
[[nodiscard]] inline Rational sphere_monomial_integral(std::span<const int> alpha) {
    std::size_t m = alpha.size();
    if (m == 0 || m % 2 != 0)
        throw std::invalid_argument("sphere_monomial_integral: dimension must be even and positive");
    long total = 0;
    for (int a : alpha) {
        if (a < 0) throw std::invalid_argument("sphere_monomial_integral: negative exponent");
        if (a % 2 != 0) return Rational(0);
        total += a;
    }
    // 2 prod Gamma((a_i+1)/2) / Gamma((|a|+m)/2) with each factor carrying
    // sqrt(pi); the m factors assemble pi^(m/2) and the denominator argument
    // (|a|+m)/2 is a positive integer.
    Rational numer(2);
    for (int a : alpha) numer *= half_integer_gamma_ratio(a / 2);
    long arg = (total + static_cast<long>(m)) / 2;
    return numer / Rational(poly::factorial(static_cast<unsigned long>(arg - 1)));
}

/// Integral of a bundle over S^(m-1) as the rational multiplier of pi^(m/2).
/// Radial factors |w|^s equal one on the sphere and drop out, so the bundle
/// need not be polynomial.
[[nodiscard]] inline GaussianRational sphere_integral(const TermBundle& b) {
    GaussianRational acc;
    for (const auto& t : b.terms()) acc = acc + t.coeff * GaussianRational(sphere_monomial_integral(t.exponents));
    return acc;
}

/// Surface area of S^(m-1) as the rational multiplier of pi^(m/2):
/// 2 / (m/2 - 1)!.
[[nodiscard]] inline Rational sphere_area_rational(std::size_t m) {
    std::vector<int> zero(m, 0);
    return sphere_monomial_integral(zero);
}

// ============================================================================
// Numeric product rules
// ============================================================================

struct SpherePoint {
    std::vector<double> w;
    double weight = 0.0;
};

namespace detail {

/// Gauss-Legendre nodes and weights on [0, 1] via Newton iteration on the
/// Legendre polynomial; standard Golub-Welsch alternatives need a solver and
/// this stays dependency-free and deterministic.
inline void gauss_legendre_unit(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Chebyshev-based initial guess on [-1, 1].
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                double pk = ((2.0 * static_cast<double>(k) - 1.0) * x * p1 -
                             (static_cast<double>(k) - 1.0) * p0) /
                            static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            double dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            double pk = ((2.0 * static_cast<double>(k) - 1.0) * x * p1 - (static_cast<double>(k) - 1.0) * p0) /
                        static_cast<double>(k);
            p0 = p1;
            p1 = pk;
        }
        double dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 0.5 * w;
    }
}

}  // namespace detail

/// Quadrature rule on S^(m-1) for even m. The circle uses the trapezoid rule,
/// which is spectrally accurate there; higher even dimensions write the
/// sphere as h = m/2 circles with squared radii on a simplex and apply
/// Gauss-Legendre to the simplex factors, so polynomial integrands of modest
/// degree are integrated exactly once points_per_axis is large enough.
[[nodiscard]] inline std::vector<SpherePoint> sphere_rule(std::size_t m, std::size_t points_per_axis) {
    if (m == 0 || m % 2 != 0) throw std::invalid_argument("sphere_rule: dimension must be even and positive");
    if (points_per_axis < 2) throw std::invalid_argument("sphere_rule: need at least two points per axis");
    std::vector<SpherePoint> pts;
    if (m == 2) {
        pts.reserve(points_per_axis);
        double w = 2.0 * std::numbers::pi / static_cast<double>(points_per_axis);
        for (std::size_t i = 0; i < points_per_axis; ++i) {
            double th = w * static_cast<double>(i);
            pts.push_back(SpherePoint{{std::cos(th), std::sin(th)}, w});
        }
        return pts;
    }

    // z = (sqrt(s_1) e^{i th_1}, ..., sqrt(s_h) e^{i th_h}) with s on the
    // (h-1)-simplex carries the surface measure 2^(1-h) ds' dth_1...dth_h.
    // Map the simplex from the unit cube: s_i = u_i prod_{j<i}(1-u_j) with
    // Jacobian prod (1-u_i)^(h-1-i).
    std::size_t h = m / 2;
    std::vector<double> gl_nodes, gl_weights;
    detail::gauss_legendre_unit(points_per_axis, gl_nodes, gl_weights);
    double dth = 2.0 * std::numbers::pi / static_cast<double>(points_per_axis);

    std::vector<std::size_t> idx(h - 1, 0);  // cube indices for u
    for (;;) {
        // Simplex point and Jacobian for this combination of u nodes.
        std::vector<double> s(h, 0.0);
        double jac = 1.0, rest = 1.0, wu = 1.0;
        for (std::size_t i = 0; i + 1 < h; ++i) {
            double u = gl_nodes[idx[i]];
            s[i] = u * rest;
            rest *= 1.0 - u;
            wu *= gl_weights[idx[i]];
            for (std::size_t p = i + 2; p < h; ++p) jac *= 1.0 - u;
        }
        s[h - 1] = rest;
        double base_weight = std::pow(0.5, static_cast<double>(h - 1)) * wu * jac *
                             std::pow(dth, static_cast<double>(h));

        std::vector<std::size_t> tidx(h, 0);  // angle indices
        for (;;) {
            SpherePoint pt;
            pt.w.resize(m);
            for (std::size_t i = 0; i < h; ++i) {
                double th = dth * static_cast<double>(tidx[i]);
                double r = std::sqrt(std::max(s[i], 0.0));
                pt.w[2 * i] = r * std::cos(th);
                pt.w[2 * i + 1] = r * std::sin(th);
            }
            pt.weight = base_weight;
            pts.push_back(std::move(pt));

            std::size_t c = 0;
            while (c < h && ++tidx[c] == points_per_axis) tidx[c++] = 0;
            if (c == h) break;
        }

        std::size_t c = 0;
        while (c + 1 < h && ++idx[c] == points_per_axis) idx[c++] = 0;
        if (h == 1 || c + 1 == h) break;
    }
    return pts;
}

}  // namespace shubin::quad
