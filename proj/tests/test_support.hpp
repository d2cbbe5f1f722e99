#pragma once

// Shared helpers for the test suites: seeded random generators for exact
// scalars and term bundles. Every suite fixes its own seed so failures
// reproduce deterministically.

#include <random>
#include <vector>

#include "shubin/rational.hpp"
#include "shubin/term_bundle.hpp"

namespace test_support {

using shubin::poly::GaussianRational;
using shubin::poly::Rational;
using shubin::poly::TermBundle;

inline std::mt19937 make_rng(unsigned seed) { return std::mt19937(seed); }

inline Rational random_rational(std::mt19937& rng, int num_range = 9, int den_range = 9) {
    std::uniform_int_distribution<int> num(-num_range, num_range);
    std::uniform_int_distribution<int> den(1, den_range);
    Rational q(num(rng), den(rng));
    q.canonicalize();
    return q;
}

inline GaussianRational random_scalar(std::mt19937& rng) {
    return {random_rational(rng), random_rational(rng)};
}

inline std::vector<int> random_exponents(std::mt19937& rng, std::size_t nvars, int max_total_degree) {
    std::uniform_int_distribution<int> pick(0, max_total_degree);
    int budget = pick(rng);
    std::vector<int> e(nvars, 0);
    std::uniform_int_distribution<std::size_t> var(0, nvars - 1);
    for (int k = 0; k < budget; ++k) e[var(rng)] += 1;
    return e;
}

/// Random polynomial bundle; with allow_radial, terms may carry an even
/// radial power in [-4, 4].
inline TermBundle random_bundle(std::mt19937& rng, std::size_t nvars, int max_degree, int max_terms,
                                bool allow_radial = false) {
    std::uniform_int_distribution<int> count(1, max_terms);
    std::uniform_int_distribution<int> rad(-2, 2);
    TermBundle b(nvars);
    int n = count(rng);
    for (int k = 0; k < n; ++k) {
        Rational s(0);
        if (allow_radial) s = Rational(2 * rad(rng));
        b.add_term(random_scalar(rng), random_exponents(rng, nvars, max_degree), s);
    }
    return b;
}

/// Random homogeneous bundle of the given degree (exponents sum to degree).
inline TermBundle random_homogeneous(std::mt19937& rng, std::size_t nvars, int degree, int max_terms) {
    std::uniform_int_distribution<int> count(1, max_terms);
    std::uniform_int_distribution<std::size_t> var(0, nvars - 1);
    TermBundle b(nvars);
    int n = count(rng);
    for (int k = 0; k < n; ++k) {
        std::vector<int> e(nvars, 0);
        for (int d = 0; d < degree; ++d) e[var(rng)] += 1;
        b.add_term(random_scalar(rng), std::move(e), Rational(0));
    }
    return b;
}

inline std::vector<double> random_point(std::mt19937& rng, std::size_t nvars, double lo = 0.3,
                                        double hi = 1.7) {
    std::uniform_real_distribution<double> mag(lo, hi);
    std::uniform_int_distribution<int> sign(0, 1);
    std::vector<double> z(nvars);
    for (auto& v : z) v = (sign(rng) ? 1.0 : -1.0) * mag(rng);
    return z;
}

/// Independent check model for symbol composition: apply the operator
/// a(x, D) of a polynomial symbol a in 2n variables to a polynomial u(x)
/// in n variables, term by term as x^beta D^gamma u with D = -i d/dx.
inline TermBundle apply_operator(const TermBundle& a, const TermBundle& u, std::size_t n) {
    if (a.nvars() != 2 * n || u.nvars() != n)
        throw std::invalid_argument("apply_operator: variable count mismatch");
    TermBundle out(n);
    for (const auto& [expo, coeff] : a.monomials()) {
        std::vector<int> beta(expo.begin(), expo.begin() + static_cast<long>(n));
        std::vector<int> gamma(expo.begin() + static_cast<long>(n), expo.end());
        TermBundle du = u.differentiate_multi(gamma, shubin::poly::DiffKind::dee);
        if (du.is_zero()) continue;
        out += TermBundle::monomial(n, coeff, std::move(beta)) * du;
    }
    return out;
}

/// All monomials x^k in n variables with every k_i <= cap.
inline std::vector<TermBundle> monomial_basis(std::size_t n, int cap) {
    std::vector<TermBundle> basis;
    std::vector<int> k(n, 0);
    bool done = false;
    while (!done) {
        basis.push_back(TermBundle::monomial(n, shubin::poly::GaussianRational(1), k));
        for (std::size_t i = n; i-- > 0;) {
            if (++k[i] <= cap) break;
            k[i] = 0;
            done = (i == 0);
        }
    }
    return basis;
}

}  // namespace test_support
