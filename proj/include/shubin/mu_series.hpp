#pragma once

// Expansion of rational symbols in the large parameter direction. Every part
// numer(z) R^-M of a component expands through the geometric series
//
//   R^-M = sum_k  C(M+k-1, k) P(z)^k mu^(-d (M+k)),
//
// which is finite for M <= 0 and asymptotic for M >= 1. Collecting powers of
// mu across components gives the series coefficients q_{j,l}, the limit
// coefficients ("braces") as their column sums, and the weighted-limit
// variant ("brackets") through a triangular change of basis built from the
// Taylor polynomials of <t z>^rho at t = 0.

#include <algorithm>
#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "shubin/calculus.hpp"
#include "shubin/symbol.hpp"

namespace shubin::symbols {

// ============================================================================
// Taylor polynomials of the smoothed radial weight
// ============================================================================

/// Coefficient polynomial p_{rho,l}(z): the l-th Taylor coefficient in t of
/// (1 + t^2 |z|^2)^(rho/2) at t = 0. Vanishes for odd l; for l = 2k it is
/// C(rho/2, k) |z|^(2k).
[[nodiscard]] inline TermBundle coefficient_polynomial(const Rational& rho, long l, std::size_t nvars) {
    TermBundle out(nvars);
    if (l < 0 || l % 2 != 0) return out;
    long k = l / 2;
    Rational c = poly::binomial(rho / 2, static_cast<unsigned long>(k));
    if (c == 0) return out;
    return TermBundle::radial(nvars, GaussianRational(c), Rational(2 * k));
}

// ============================================================================
// Series in the parameter
// ============================================================================

struct MuEntry {
    std::size_t j = 0;  // component index
    long ell = 0;       // series index; the mu exponent is order - reg - ell
    TermBundle coeff;   // z-homogeneous of degree reg - j + ell
};

struct MuExpansion {
    std::size_t n = 1;
    int order = 0;
    int reg = 0;
    long L = 0;
    std::vector<MuEntry> entries;  // sorted by (j, ell), zero coefficients dropped

    [[nodiscard]] long mu_exponent(long ell) const { return order - reg - ell; }

    /// Sum of the coefficients at a fixed series index over all components.
    [[nodiscard]] TermBundle total(long ell) const {
        TermBundle t(2 * n);
        for (const auto& e : entries)
            if (e.ell == ell) t += e.coeff;
        return t;
    }

    [[nodiscard]] const TermBundle* find(std::size_t j, long ell) const {
        for (const auto& e : entries)
            if (e.j == j && e.ell == ell) return &e.coeff;
        return nullptr;
    }
};

/// Number of series terms k >= 0 of a part with power M that land below the
/// truncation index L; the k-th term sits at index order - reg + d (M + k).
[[nodiscard]] inline long included_series_terms(int order, int reg, int d, int M, long L) {
    long k = 0;
    while (order - reg + static_cast<long>(d) * (M + k) < L) ++k;
    return k;
}

/// Expand all components of a symbol expansion in the parameter, keeping
/// series indices below L. Entries beyond the stored components are absent;
/// when every numerator is polynomial the column sums are complete for
/// ell < J - reg.
[[nodiscard]] inline MuExpansion mu_series(const SymbolExpansion& e, long L) {
    if (L <= 0) throw std::invalid_argument("mu_series: truncation must be positive");
    for (const auto& c : e.components)
        if (c.uses_r() && !e.base) throw std::invalid_argument("mu_series: R powers present but no base");

    MuExpansion out;
    out.n = e.n;
    out.order = e.order;
    out.reg = e.reg;
    out.L = L;

    const int d = e.base ? e.base->d : 1;
    std::vector<TermBundle> p_pow{TermBundle::constant(2 * e.n, GaussianRational(1))};
    auto p_power = [&](long k) -> const TermBundle& {
        while (static_cast<long>(p_pow.size()) <= k) p_pow.push_back(p_pow.back() * e.base->P);
        return p_pow[static_cast<std::size_t>(k)];
    };

    std::map<std::pair<std::size_t, long>, TermBundle> acc;
    for (std::size_t j = 0; j < e.components.size(); ++j) {
        for (const auto& [M, numer] : e.components[j].parts()) {
            long k_cap = M <= 0 ? -static_cast<long>(M) : -1;  // finite expansion for positive R powers
            for (long k = 0;; ++k) {
                if (k_cap >= 0 && k > k_cap) break;
                long ell = out.order - out.reg + static_cast<long>(d) * (M + k);
                if (ell >= L) {
                    if (k_cap < 0) break;  // indices only grow with k
                    continue;
                }
                Rational c = poly::integer_binomial(M + k - 1, k);
                if (c == 0) continue;
                if (ell < 0)
                    throw std::logic_error("mu_series: component exceeds the stated order pair");
                TermBundle coeff = numer * p_power(k) * GaussianRational(c);
                if (coeff.is_zero()) continue;
                auto [it, inserted] = acc.try_emplace(std::make_pair(j, ell), 2 * e.n);
                it->second += coeff;
            }
        }
    }
    for (auto& [key, coeff] : acc) {
        if (coeff.is_zero()) continue;
        out.entries.push_back(MuEntry{key.first, key.second, std::move(coeff)});
    }
    return out;
}

// ============================================================================
// Limit coefficients
// ============================================================================

struct BraceSet {
    int order = 0;
    int reg = 0;
    long L = 0;
    std::vector<TermBundle> braces;  // index ell = 0..L-1
    long complete_below = 0;         // indices below this are exact for the full symbol
    std::vector<std::string> notes;
};

/// Column sums of the parameter series: the coefficient of mu^(order-reg-ell)
/// in the large-mu limit after scaling out mu^(order-reg).
[[nodiscard]] inline BraceSet brace_coefficients(const SymbolExpansion& e, long L) {
    MuExpansion series = mu_series(e, L);
    BraceSet out;
    out.order = e.order;
    out.reg = e.reg;
    out.L = L;
    out.braces.reserve(static_cast<std::size_t>(L));
    for (long ell = 0; ell < L; ++ell) out.braces.push_back(series.total(ell));

    if (e.exact) {
        out.complete_below = L;
    } else {
        bool polynomial = true;
        for (const auto& c : e.components)
            for (const auto& [M, numer] : c.parts())
                if (!numer.is_polynomial()) polynomial = false;
        // A missing component j >= J could only contribute at indices
        // ell >= j - reg when its coefficients are polynomial.
        long bound = static_cast<long>(e.J()) - e.reg;
        out.complete_below = polynomial ? std::clamp(bound, 0L, L) : 0;
    }

    bool positive_tail = false;
    for (std::size_t ell = 1; ell < out.braces.size(); ++ell)
        if (!out.braces[ell].is_zero()) positive_tail = true;
    if (e.base && positive_tail) {
        out.notes.push_back(
            "limit coefficients follow the positive sign convention fixed by the convolution "
            "identity sum_{j+k=l} brace_j(b) # brace_k(p) = delta_{0l}; an alternating sign "
            "(-1)^l sometimes quoted for resolvent parametrices fails that identity");
    }
    return out;
}

/// Change of basis from plain limit coefficients to the weighted family:
/// brace_k = sum_{l <= k} p_{order-reg-l, k-l} bracket_l, solved by forward
/// substitution (the diagonal blocks are the identity).
[[nodiscard]] inline std::vector<TermBundle> bracket_coefficients(const BraceSet& bs, std::size_t nvars) {
    std::vector<TermBundle> bracket;
    bracket.reserve(bs.braces.size());
    Rational base_rho(bs.order - bs.reg);
    for (std::size_t k = 0; k < bs.braces.size(); ++k) {
        TermBundle v = bs.braces[k];
        for (std::size_t l = 0; l < k; ++l) {
            TermBundle w = coefficient_polynomial(base_rho - Rational(static_cast<long>(l)),
                                                  static_cast<long>(k - l), nvars);
            if (w.is_zero() || bracket[l].is_zero()) continue;
            v -= w * bracket[l];
        }
        bracket.push_back(std::move(v));
    }
    return bracket;
}

/// Rebuild braces from brackets; inverse of bracket_coefficients.
[[nodiscard]] inline std::vector<TermBundle> braces_from_brackets(const std::vector<TermBundle>& bracket,
                                                                  int order, int reg, std::size_t nvars) {
    std::vector<TermBundle> brace;
    brace.reserve(bracket.size());
    Rational base_rho(order - reg);
    for (std::size_t k = 0; k < bracket.size(); ++k) {
        TermBundle v(nvars);
        for (std::size_t l = 0; l <= k; ++l) {
            TermBundle w = coefficient_polynomial(base_rho - Rational(static_cast<long>(l)),
                                                  static_cast<long>(k - l), nvars);
            if (w.is_zero() || bracket[l].is_zero()) continue;
            v += w * bracket[l];
        }
        brace.push_back(std::move(v));
    }
    return brace;
}

// ============================================================================
// Cancellation-free series tails
// ============================================================================

/// Tail of the geometric series for R^-M at mu = 1 after removing the first
/// K terms:  (1-P)^-M - sum_{k<K} C(M+k-1, k) P^k,  evaluated without
/// subtracting nearly equal quantities. For M >= 1 the value satisfies
///   T_{M,K} = (T_{M-1,K} + C(M+K-2, K-1) P^K) / (1 - P),  T_{0,K} = 0,
/// whose terms all carry the factor P^K; for M <= 0 the series is finite and
/// the tail is summed term by term.
[[nodiscard]] inline std::complex<double> series_tail(int M, long K, std::complex<double> P) {
    if (K < 0) K = 0;
    if (M <= 0) {
        std::complex<double> acc{0.0, 0.0};
        std::complex<double> pk = cpow_int(P, static_cast<int>(K));
        for (long k = K; k <= -static_cast<long>(M); ++k) {
            acc += poly::integer_binomial(M + k - 1, k).get_d() * pk;
            pk *= P;
        }
        return acc;
    }
    std::complex<double> one_minus = 1.0 - P;
    if (K == 0) return cpow_int(one_minus, -M);
    std::complex<double> pK = cpow_int(P, static_cast<int>(K));
    std::complex<double> T{0.0, 0.0};
    for (int m = 1; m <= M; ++m)
        T = (T + poly::integer_binomial(m + static_cast<int>(K) - 2, static_cast<int>(K) - 1).get_d() * pK) /
            one_minus;
    return T;
}

}  // namespace shubin::symbols
