#pragma once

// Composition calculus for symbol expansions. The product rule is the usual
// asymptotic one for left quantization,
//
//     (a1 # a0)(z) = sum_alpha (1/alpha!) (d_xi^alpha a1) (D_x^alpha a0),
//
// organized by joint homogeneity: component j of the product collects all
// contributions with k + l + 2|alpha| = j, which is a finite exact sum. On
// top of it sit the parametrix recursion for mu^d - p0 and truncated powers.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "shubin/symbol.hpp"

namespace shubin::symbols {

/// All multi-indices over nvars slots with |alpha| = weight, in lexicographic
/// order.
[[nodiscard]] inline std::vector<std::vector<int>> multi_indices(std::size_t nvars, int weight) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(nvars, 0);
    auto rec = [&](auto&& self, std::size_t pos, int left) -> void {
        if (pos + 1 == nvars) {
            cur[pos] = left;
            out.push_back(cur);
            return;
        }
        for (int v = left; v >= 0; --v) {
            cur[pos] = v;
            self(self, pos + 1, left - v);
        }
    };
    if (nvars == 0) {
        if (weight == 0) out.push_back({});
        return out;
    }
    rec(rec, 0, weight);
    return out;
}

[[nodiscard]] inline Rational multi_factorial(const std::vector<int>& alpha) {
    Rational f(1);
    for (int a : alpha) f *= Rational(poly::factorial(static_cast<unsigned long>(a)));
    return f;
}

// ============================================================================
// Full product of polynomial symbols
// ============================================================================

/// Exact composition symbol of two polynomial symbols in 2n variables. The
/// derivative sum terminates because every xi derivative lowers the degree.
[[nodiscard]] inline TermBundle leibniz_full(const TermBundle& a1, const TermBundle& a0, std::size_t n) {
    if (a1.nvars() != 2 * n || a0.nvars() != 2 * n)
        throw std::invalid_argument("leibniz_full: symbols must live in 2n variables");
    if (!a1.is_polynomial() || !a0.is_polynomial())
        throw std::invalid_argument("leibniz_full: requires polynomial symbols");
    long max_w = mpz_get_si(Rational(std::min(a1.max_degree(), a0.max_degree())).get_num().get_mpz_t());
    TermBundle acc(2 * n);
    for (long w = 0; w <= max_w; ++w) {
        for (const auto& alpha : multi_indices(n, static_cast<int>(w))) {
            std::vector<int> dxi(2 * n, 0), dx(2 * n, 0);
            for (std::size_t i = 0; i < n; ++i) {
                dxi[n + i] = alpha[i];
                dx[i] = alpha[i];
            }
            TermBundle left = a1.differentiate_multi(dxi);
            if (left.is_zero()) continue;
            TermBundle right = a0.differentiate_multi(dx, poly::DiffKind::dee);
            if (right.is_zero()) continue;
            acc += left * right * GaussianRational(Rational(1) / multi_factorial(alpha));
        }
    }
    return acc;
}

// ============================================================================
// Truncated product of expansions
// ============================================================================

namespace detail {

/// Lazily computed xi derivatives of expansion components.
class XiDerivativeCache {
public:
    XiDerivativeCache(const SymbolExpansion& e, const RBase& base) : e_(&e), base_(base) {}

    const RationalSymbol& get(std::size_t k, const std::vector<int>& alpha) {
        auto key = std::make_pair(k, alpha);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        RationalSymbol s = e_->component_or_zero(k);
        for (std::size_t i = 0; i < alpha.size(); ++i)
            for (int r = 0; r < alpha[i]; ++r) s = s.differentiate(e_->n + i, base_);
        return cache_.emplace(std::move(key), std::move(s)).first->second;
    }

private:
    const SymbolExpansion* e_;
    RBase base_;
    std::map<std::pair<std::size_t, std::vector<int>>, RationalSymbol> cache_;
};

}  // namespace detail

/// Truncated composition of two expansions. Component j of the output is the
/// exact finite sum over k + l + 2|alpha| = j; keeping count components
/// leaves a remainder of order pair (orderA + orderB - count, regA + regB -
/// count). Throws when the operands carry different denominator bases.
[[nodiscard]] inline SymbolExpansion leibniz_truncated(const SymbolExpansion& A, const SymbolExpansion& B,
                                                       std::optional<std::size_t> count = std::nullopt) {
    if (A.n != B.n) throw std::invalid_argument("leibniz_truncated: dimension mismatch");
    if (A.base && B.base && !(*A.base == *B.base))
        throw std::invalid_argument("leibniz_truncated: mismatched denominator bases");

    constexpr std::size_t kNoLimit = std::numeric_limits<std::size_t>::max();
    std::size_t limitA = A.exact ? kNoLimit : A.J();
    std::size_t limitB = B.exact ? kNoLimit : B.J();
    std::size_t avail = std::min(limitA, limitB);
    std::size_t full = A.J() + B.J() - 1;  // both exact: everything beyond is zero
    if (avail == kNoLimit) avail = full;
    std::size_t Jout = count ? std::min(*count, avail) : avail;
    if (Jout == 0) throw std::invalid_argument("leibniz_truncated: empty truncation");

    SymbolExpansion R;
    R.n = A.n;
    R.order = A.order + B.order;
    R.reg = A.reg + B.reg;
    R.base = A.base ? A.base : B.base;
    R.exact = A.exact && B.exact && Jout >= full;
    RBase base = R.base ? *R.base : RBase{1, TermBundle(2 * A.n)};

    detail::XiDerivativeCache dcache(A, base);
    R.components.assign(Jout, RationalSymbol(2 * A.n));
    for (std::size_t j = 0; j < Jout; ++j) {
        RationalSymbol acc(2 * A.n);
        for (std::size_t k = 0; k <= j; ++k) {
            for (std::size_t l = 0; l + k <= j; ++l) {
                std::size_t rest = j - k - l;
                if (rest % 2 != 0) continue;
                int w = static_cast<int>(rest / 2);
                RationalSymbol bl = B.component_or_zero(l);
                if (bl.is_zero()) continue;
                for (const auto& alpha : multi_indices(A.n, w)) {
                    const RationalSymbol& left = dcache.get(k, alpha);
                    if (left.is_zero()) continue;
                    RationalSymbol right = bl;
                    for (std::size_t i = 0; i < alpha.size(); ++i)
                        for (int r = 0; r < alpha[i]; ++r)
                            right = right.differentiate(i, base, poly::DiffKind::dee);
                    if (right.is_zero()) continue;
                    acc += left * right * GaussianRational(Rational(1) / multi_factorial(alpha));
                }
            }
        }
        R.components[j] = std::move(acc);
    }
    return R;
}

/// Truncated composition power a^(#N) with N >= 1 factors.
[[nodiscard]] inline SymbolExpansion symbol_power(const SymbolExpansion& A, int N,
                                                  std::optional<std::size_t> count = std::nullopt) {
    if (N < 1) throw std::invalid_argument("symbol_power: exponent must be >= 1");
    SymbolExpansion R = A;
    if (count && R.components.size() > *count) R.components.resize(*count);
    for (int i = 1; i < N; ++i) R = leibniz_truncated(R, A, count);
    return R;
}

// ============================================================================
// Parametrix
// ============================================================================

/// Resolvent parametrix for mu^d - p0: components b_0 = R^-1 and, for j >= 1,
///
///   b_j = R^-1 * sum over k + l + 2|alpha| = j, k <= j-1 of
///            (1/alpha!) (d_xi^alpha b_k) (D_x^alpha p0^(d-l)).
///
/// The sign follows from solving component j of b # (mu^d - p0) = 1 after
/// moving the lower-order parts of p0 to the right-hand side; the defect of
/// the product then vanishes identically, which the tests check term by term.
[[nodiscard]] inline SymbolExpansion parametrix(const EllipticOperator& op, std::size_t J) {
    if (J == 0) throw std::invalid_argument("parametrix: need at least one component");
    std::size_t n = op.n();
    RBase base = op.base();

    SymbolExpansion B;
    B.n = n;
    B.order = -op.d();
    B.reg = 0;
    B.exact = false;
    B.base = base;
    B.components.reserve(J);
    B.components.push_back(RationalSymbol::r_power(TermBundle::constant(2 * n, GaussianRational(1)), 1));

    // Cache of d_xi^alpha b_k, filled as components appear.
    std::map<std::pair<std::size_t, std::vector<int>>, RationalSymbol> dcache;
    auto xi_derivative = [&](std::size_t k, const std::vector<int>& alpha) -> const RationalSymbol& {
        auto key = std::make_pair(k, alpha);
        auto it = dcache.find(key);
        if (it != dcache.end()) return it->second;
        RationalSymbol s = B.components[k];
        for (std::size_t i = 0; i < alpha.size(); ++i)
            for (int r = 0; r < alpha[i]; ++r) s = s.differentiate(n + i, base);
        return dcache.emplace(std::move(key), std::move(s)).first->second;
    };

    for (std::size_t j = 1; j < J; ++j) {
        RationalSymbol acc(2 * n);
        for (std::size_t l = 0; l <= std::min<std::size_t>(j, static_cast<std::size_t>(op.d())); ++l) {
            const TermBundle& pl = op.component(l);
            if (pl.is_zero()) continue;
            for (std::size_t k = 0; k + l <= j && k <= j - 1; ++k) {
                std::size_t rest = j - k - l;
                if (rest % 2 != 0) continue;
                int w = static_cast<int>(rest / 2);
                for (const auto& alpha : multi_indices(n, w)) {
                    const RationalSymbol& left = xi_derivative(k, alpha);
                    if (left.is_zero()) continue;
                    std::vector<int> dx(2 * n, 0);
                    for (std::size_t i = 0; i < n; ++i) dx[i] = alpha[i];
                    TermBundle right = pl.differentiate_multi(dx, poly::DiffKind::dee);
                    if (right.is_zero()) continue;
                    acc += left * right * GaussianRational(Rational(1) / multi_factorial(alpha));
                }
            }
        }
        B.components.push_back(acc.shifted(1));  // multiply by R^-1
    }
    return B;
}

// ============================================================================
// Ellipticity of the principal part
// ============================================================================

struct EllipticityReport {
    bool elliptic = false;
    double margin = 0.0;                // smallest distance to the ray [0, inf)
    std::size_t samples = 0;
    std::vector<double> witness;        // sphere point violating the margin, if any
    std::complex<double> witness_value{0.0, 0.0};
};

namespace detail {

/// Distance from a complex value to the closed ray [0, inf).
[[nodiscard]] inline double ray_distance(std::complex<double> v) {
    if (v.real() <= 0.0) return std::abs(v);
    return std::abs(v.imag());
}

/// Deterministic product grid on the unit sphere in dimension m >= 2.
inline void for_each_sphere_point(std::size_t m, std::size_t per_axis,
                                  const std::function<void(std::span<const double>)>& fn) {
    if (m < 2) throw std::invalid_argument("sphere grid: dimension must be >= 2");
    const double pi = 3.14159265358979323846;
    std::vector<double> pt(m);
    if (m == 2) {
        for (std::size_t i = 0; i < per_axis; ++i) {
            double phi = 2.0 * pi * static_cast<double>(i) / static_cast<double>(per_axis);
            pt[0] = std::cos(phi);
            pt[1] = std::sin(phi);
            fn(pt);
        }
        return;
    }
    // Spherical angles: theta_1..theta_{m-2} in (0, pi), phi in [0, 2 pi).
    std::vector<std::size_t> idx(m - 1, 0);
    std::vector<double> ang(m - 1);
    bool done = false;
    while (!done) {
        for (std::size_t a = 0; a + 1 < m - 1; ++a)
            ang[a] = pi * (static_cast<double>(idx[a]) + 0.5) / static_cast<double>(per_axis);
        ang[m - 2] = 2.0 * pi * static_cast<double>(idx[m - 2]) / static_cast<double>(per_axis);
        double sinprod = 1.0;
        for (std::size_t c = 0; c < m; ++c) {
            double v = sinprod;
            if (c < m - 1) v *= std::cos(ang[c]);
            pt[c] = v;
            if (c < m - 1) sinprod *= std::sin(ang[c]);
        }
        fn(pt);
        for (std::size_t a = m - 1; a-- > 0;) {
            if (++idx[a] < per_axis) break;
            idx[a] = 0;
            done = (a == 0);
        }
    }
}

}  // namespace detail

/// Sample the principal part over the unit sphere and measure its distance
/// to the closed positive real axis. The operator family mu^d - p0 is
/// uniformly invertible exactly when the principal values stay away from
/// that ray; a violation is reported with the offending point.
[[nodiscard]] inline EllipticityReport check_ellipticity(const EllipticOperator& op, double eps = 1e-9,
                                                         std::size_t per_axis = 720) {
    EllipticityReport rep;
    rep.margin = std::numeric_limits<double>::infinity();
    CompiledBundle principal(op.principal());
    detail::for_each_sphere_point(2 * op.n(), per_axis, [&](std::span<const double> pt) {
        std::complex<double> v = principal.evaluate(pt);
        double dist = detail::ray_distance(v);
        ++rep.samples;
        if (dist < rep.margin) {
            rep.margin = dist;
            rep.witness.assign(pt.begin(), pt.end());
            rep.witness_value = v;
        }
    });
    rep.elliptic = rep.margin > eps;
    if (rep.elliptic) {
        rep.witness.clear();
        rep.witness_value = {0.0, 0.0};
    }
    return rep;
}

}  // namespace shubin::symbols
