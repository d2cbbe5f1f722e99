#pragma once

// Generalized polynomials in k real variables z_1..z_k: finite sums of terms
//
//     c * z^alpha * |z|^s
//
// with exact complex rational coefficient c, nonnegative integer exponent
// vector alpha, and rational radial power s. The radial factor makes the
// class closed under differentiation of non-polynomial weights such as
// |z|^-2, which show up as numerators of resolvent-type symbols.
//
// Because |z|^2 = z_1^2 + .. + z_k^2, the flat term list is not unique: the
// same function has many spellings. TermBundle therefore normalizes after
// every operation. Terms are grouped by the fractional part of the radial
// power, each group's numerator is expanded over a common radial power, and
// maximal factors of |z|^2 are divided out exactly. Structural equality of
// two bundles is then exact equality of the functions they represent.

#include <algorithm>
#include <complex>
#include <cstddef>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "shubin/compensated.hpp"
#include "shubin/rational.hpp"

namespace shubin::poly {

enum class DiffKind {
    partial,  // d/dz_i
    dee,      // D_i = -i d/dz_i
};

struct GeneralizedMonomial {
    GaussianRational coeff;
    std::vector<int> exponents;  // one entry per variable, each >= 0
    Rational radial_power;       // exponent s of |z|^s

    [[nodiscard]] Rational degree() const {
        long total = 0;
        for (int e : exponents) total += e;
        return Rational(total) + radial_power;
    }
};

class TermBundle {
    using MonoMap = std::map<std::vector<int>, GaussianRational>;
    using RawKey = std::pair<std::vector<int>, Rational>;  // exponents, radial power
    using RawMap = std::map<RawKey, GaussianRational>;

public:
    TermBundle() : nvars_(0) {}
    explicit TermBundle(std::size_t nvars) : nvars_(nvars) {}

    static TermBundle constant(std::size_t nvars, GaussianRational c) {
        TermBundle b(nvars);
        b.add_term(std::move(c), std::vector<int>(nvars, 0), Rational(0));
        return b;
    }

    /// The pure radial weight c * |z|^s.
    static TermBundle radial(std::size_t nvars, GaussianRational c, Rational s) {
        TermBundle b(nvars);
        b.add_term(std::move(c), std::vector<int>(nvars, 0), std::move(s));
        return b;
    }

    static TermBundle monomial(std::size_t nvars, GaussianRational c, std::vector<int> exponents) {
        TermBundle b(nvars);
        b.add_term(std::move(c), std::move(exponents), Rational(0));
        return b;
    }

    [[nodiscard]] std::size_t nvars() const { return nvars_; }
    [[nodiscard]] bool is_zero() const { return terms_.empty(); }
    [[nodiscard]] std::size_t term_count() const { return terms_.size(); }
    [[nodiscard]] const std::vector<GeneralizedMonomial>& terms() const { return terms_; }

    void add_term(GaussianRational coeff, std::vector<int> exponents, Rational radial_power) {
        if (exponents.size() != nvars_)
            throw std::invalid_argument("TermBundle: exponent vector has wrong length");
        for (int e : exponents)
            if (e < 0) throw std::invalid_argument("TermBundle: negative exponent");
        if (nvars_ == 0 && radial_power != 0)
            throw std::invalid_argument("TermBundle: radial power needs at least one variable");
        if (coeff.is_zero()) return;
        RawMap raw = to_raw();
        raw[RawKey{std::move(exponents), std::move(radial_power)}] += coeff;
        assign_normalized(std::move(raw));
    }

    TermBundle& operator+=(const TermBundle& o) {
        check_same_vars(o);
        RawMap raw = to_raw();
        for (const auto& t : o.terms_) raw[RawKey{t.exponents, t.radial_power}] += t.coeff;
        assign_normalized(std::move(raw));
        return *this;
    }
    TermBundle& operator-=(const TermBundle& o) {
        check_same_vars(o);
        RawMap raw = to_raw();
        for (const auto& t : o.terms_) raw[RawKey{t.exponents, t.radial_power}] -= t.coeff;
        assign_normalized(std::move(raw));
        return *this;
    }
    TermBundle& operator*=(const GaussianRational& c) {
        if (c.is_zero()) {
            terms_.clear();
            return *this;
        }
        for (auto& t : terms_) t.coeff *= c;  // scaling cannot break canonicity
        return *this;
    }

    friend TermBundle operator+(TermBundle a, const TermBundle& b) { return a += b; }
    friend TermBundle operator-(TermBundle a, const TermBundle& b) { return a -= b; }
    friend TermBundle operator-(const TermBundle& a) {
        TermBundle r(a.nvars_);
        r.terms_ = a.terms_;
        for (auto& t : r.terms_) t.coeff = -t.coeff;
        return r;
    }
    friend TermBundle operator*(TermBundle a, const GaussianRational& c) { return a *= c; }
    friend TermBundle operator*(const GaussianRational& c, TermBundle a) { return a *= c; }

    friend TermBundle operator*(const TermBundle& a, const TermBundle& b) {
        a.check_same_vars(b);
        RawMap raw;
        for (const auto& ta : a.terms_) {
            for (const auto& tb : b.terms_) {
                RawKey key;
                key.first.resize(a.nvars_);
                for (std::size_t i = 0; i < a.nvars_; ++i) key.first[i] = ta.exponents[i] + tb.exponents[i];
                key.second = ta.radial_power + tb.radial_power;
                raw[std::move(key)] += ta.coeff * tb.coeff;
            }
        }
        TermBundle r(a.nvars_);
        r.assign_normalized(std::move(raw));
        return r;
    }

    friend bool operator==(const TermBundle& a, const TermBundle& b) {
        if (a.nvars_ != b.nvars_ || a.terms_.size() != b.terms_.size()) return false;
        for (std::size_t i = 0; i < a.terms_.size(); ++i) {
            const auto& ta = a.terms_[i];
            const auto& tb = b.terms_[i];
            if (ta.exponents != tb.exponents || ta.radial_power != tb.radial_power || ta.coeff != tb.coeff)
                return false;
        }
        return true;
    }
    friend bool operator!=(const TermBundle& a, const TermBundle& b) { return !(a == b); }

    /// Derivative with respect to variable i. For a single term,
    ///   d/dz_i (c z^a |z|^s) = c a_i z^(a-e_i) |z|^s + c s z^(a+e_i) |z|^(s-2),
    /// and DiffKind::dee applies an extra factor -sqrt(-1).
    [[nodiscard]] TermBundle differentiate(std::size_t i, DiffKind kind = DiffKind::partial) const {
        if (i >= nvars_) throw std::invalid_argument("TermBundle::differentiate: variable out of range");
        GaussianRational unit = (kind == DiffKind::dee) ? -GaussianRational::i() : GaussianRational(1);
        RawMap raw;
        for (const auto& t : terms_) {
            if (t.exponents[i] > 0) {
                auto e = t.exponents;
                e[i] -= 1;
                raw[RawKey{std::move(e), t.radial_power}] += t.coeff * GaussianRational(Rational(t.exponents[i])) * unit;
            }
            if (t.radial_power != 0) {
                auto e = t.exponents;
                e[i] += 1;
                raw[RawKey{std::move(e), t.radial_power - 2}] += t.coeff * GaussianRational(t.radial_power) * unit;
            }
        }
        TermBundle r(nvars_);
        r.assign_normalized(std::move(raw));
        return r;
    }

    [[nodiscard]] TermBundle differentiate_multi(std::span<const int> alpha, DiffKind kind = DiffKind::partial) const {
        if (alpha.size() != nvars_)
            throw std::invalid_argument("TermBundle::differentiate_multi: bad multi-index length");
        TermBundle r = *this;
        for (std::size_t i = 0; i < alpha.size(); ++i)
            for (int k = 0; k < alpha[i]; ++k) r = r.differentiate(i, kind);
        return r;
    }

    /// Split into homogeneous parts, keyed by total degree |alpha| + s. Each
    /// part is renormalized; a degree slice of a reduced numerator can pick
    /// up a fresh |z|^2 factor.
    [[nodiscard]] std::map<Rational, TermBundle> homogeneous_parts() const {
        std::map<Rational, RawMap> split;
        for (const auto& t : terms_) split[t.degree()][RawKey{t.exponents, t.radial_power}] += t.coeff;
        std::map<Rational, TermBundle> parts;
        for (auto& [g, raw] : split) {
            TermBundle part(nvars_);
            part.assign_normalized(std::move(raw));
            parts.emplace(g, std::move(part));
        }
        return parts;
    }

    [[nodiscard]] bool is_homogeneous() const {
        if (terms_.empty()) return true;
        Rational g = terms_.front().degree();
        for (const auto& t : terms_)
            if (t.degree() != g) return false;
        return true;
    }

    /// Degree of a nonzero homogeneous bundle. Throws for zero or mixed input.
    [[nodiscard]] Rational degree() const {
        if (terms_.empty()) throw std::domain_error("TermBundle::degree: zero bundle");
        Rational g = terms_.front().degree();
        for (const auto& t : terms_)
            if (t.degree() != g) throw std::domain_error("TermBundle::degree: not homogeneous");
        return g;
    }

    /// True when every radial power is a nonnegative even integer, so the
    /// bundle is a polynomial after expanding |z|^2k.
    [[nodiscard]] bool is_polynomial() const {
        for (const auto& t : terms_) {
            if (t.radial_power.get_den() != 1) return false;
            if (t.radial_power < 0) return false;
            if (mpz_odd_p(t.radial_power.get_num().get_mpz_t())) return false;
        }
        return true;
    }

    /// Expand |z|^2k factors and return plain monomials. Throws when the
    /// bundle is not a polynomial in the sense of is_polynomial().
    [[nodiscard]] std::map<std::vector<int>, GaussianRational> monomials() const {
        if (!is_polynomial()) throw std::domain_error("TermBundle::monomials: not a polynomial");
        MonoMap out;
        for (const auto& t : terms_) {
            long k = mpz_get_si(Rational(t.radial_power / 2).get_num().get_mpz_t());
            MonoMap expanded{{t.exponents, t.coeff}};
            for (long j = 0; j < k; ++j) expanded = multiply_by_r2(expanded, nvars_);
            for (auto& [e, c] : expanded) {
                out[e] += c;
                if (out[e].is_zero()) out.erase(e);
            }
        }
        return out;
    }

    /// Maximum |alpha| + s over terms, as a rational; zero bundle gives 0.
    [[nodiscard]] Rational max_degree() const {
        Rational g(0);
        bool first = true;
        for (const auto& t : terms_) {
            Rational d = t.degree();
            if (first || d > g) g = d;
            first = false;
        }
        return g;
    }

    /// Evaluate at a real point. Terms are accumulated in canonical order with
    /// compensated summation. A negative radial power at z = 0 is a domain
    /// error since |z|^s is singular there.
    [[nodiscard]] std::complex<double> evaluate(std::span<const double> z) const {
        if (z.size() != nvars_) throw std::invalid_argument("TermBundle::evaluate: bad point dimension");
        double r2 = 0.0;
        for (double v : z) r2 += v * v;
        ComplexCompensatedSum acc;
        for (const auto& t : terms_) {
            double mono = 1.0;
            for (std::size_t i = 0; i < nvars_; ++i) {
                double f = z[i];
                for (int k = 0; k < t.exponents[i]; ++k) mono *= f;
            }
            double radial = 1.0;
            if (t.radial_power != 0) {
                if (r2 == 0.0) {
                    if (t.radial_power < 0)
                        throw std::domain_error("TermBundle::evaluate: negative radial power at z = 0");
                    radial = 0.0;
                } else {
                    radial = std::pow(r2, t.radial_power.get_d() / 2.0);
                }
            }
            acc.add(t.coeff.to_complex() * (mono * radial));
        }
        return acc.value();
    }

    [[nodiscard]] std::string str() const {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& t : terms_) {
            if (!first) os << " + ";
            first = false;
            os << t.coeff.str();
            for (std::size_t i = 0; i < nvars_; ++i) {
                if (t.exponents[i] == 0) continue;
                os << " z" << (i + 1);
                if (t.exponents[i] > 1) os << "^" << t.exponents[i];
            }
            if (t.radial_power != 0) os << " |z|^" << t.radial_power.get_str();
        }
        return os.str();
    }

private:
    void check_same_vars(const TermBundle& o) const {
        if (nvars_ != o.nvars_)
            throw std::invalid_argument("TermBundle: operands have different variable counts");
    }

    [[nodiscard]] RawMap to_raw() const {
        RawMap raw;
        for (const auto& t : terms_) raw.emplace(RawKey{t.exponents, t.radial_power}, t.coeff);
        return raw;
    }

    static MonoMap multiply_by_r2(const MonoMap& f, std::size_t nvars) {
        MonoMap out;
        for (const auto& [e, c] : f) {
            for (std::size_t i = 0; i < nvars; ++i) {
                auto e2 = e;
                e2[i] += 2;
                out[std::move(e2)] += c;
            }
        }
        for (auto it = out.begin(); it != out.end();)
            it = it->second.is_zero() ? out.erase(it) : std::next(it);
        return out;
    }

    /// Exact division of f by |z|^2 = z_1^2 + .. + z_k^2. Returns true and
    /// fills the quotient when the division is exact. Standard multivariate
    /// division against the leading monomial z_1^2; lexicographic descent
    /// guarantees termination.
    static bool try_divide_r2(MonoMap f, std::size_t nvars, MonoMap& quotient) {
        quotient.clear();
        if (nvars == 0) return false;
        while (!f.empty()) {
            // Largest key in lex order; divisible terms must have z_1 power >= 2.
            auto it = std::prev(f.end());
            const auto e = it->first;
            const auto c = it->second;
            if (e[0] < 2) return false;
            auto q = e;
            q[0] -= 2;
            quotient[q] += c;
            for (std::size_t i = 0; i < nvars; ++i) {
                auto e2 = q;
                e2[i] += 2;
                auto jt = f.find(e2);
                if (jt == f.end()) {
                    f.emplace(std::move(e2), -c);
                } else {
                    jt->second -= c;
                    if (jt->second.is_zero()) f.erase(jt);
                }
            }
        }
        return true;
    }

    /// Bring a raw exponent/radial map into canonical form: group by the
    /// fractional class of the radial power, expand each group over its
    /// smallest radial power, then divide out |z|^2 as often as possible.
    void assign_normalized(RawMap&& raw) {
        struct ClassData {
            long k_min = 0;
            bool first = true;
            std::vector<std::pair<RawKey, GaussianRational>> entries;
        };
        std::map<Rational, ClassData> classes;
        for (auto& [key, coeff] : raw) {
            if (coeff.is_zero()) continue;
            // radial = 2k + sigma with integer k and sigma in [0, 2)
            Rational half = key.second / 2;
            mpz_class kz;
            mpz_fdiv_q(kz.get_mpz_t(), half.get_num().get_mpz_t(), half.get_den().get_mpz_t());
            long k = mpz_get_si(kz.get_mpz_t());
            Rational sigma = key.second - 2 * Rational(kz);
            auto& cls = classes[sigma];
            if (cls.first || k < cls.k_min) cls.k_min = k;
            cls.first = false;
            cls.entries.emplace_back(RawKey{key.first, Rational(k)}, coeff);
        }

        terms_.clear();
        for (auto& [sigma, cls] : classes) {
            MonoMap numerator;
            for (auto& [key, coeff] : cls.entries) {
                long excess = mpz_get_si(key.second.get_num().get_mpz_t()) - cls.k_min;
                MonoMap piece{{key.first, coeff}};
                for (long j = 0; j < excess; ++j) piece = multiply_by_r2(piece, nvars_);
                for (auto& [e, c] : piece) {
                    numerator[e] += c;
                    if (numerator[e].is_zero()) numerator.erase(e);
                }
            }
            long k_min = cls.k_min;
            MonoMap quotient;
            while (!numerator.empty() && try_divide_r2(numerator, nvars_, quotient)) {
                numerator = std::move(quotient);
                quotient.clear();
                ++k_min;
            }
            Rational radial = 2 * Rational(k_min) + sigma;
            for (auto& [e, c] : numerator)
                terms_.push_back(GeneralizedMonomial{c, e, radial});
        }

        std::sort(terms_.begin(), terms_.end(), [](const GeneralizedMonomial& a, const GeneralizedMonomial& b) {
            if (a.exponents != b.exponents) return a.exponents < b.exponents;
            return a.radial_power < b.radial_power;
        });
    }

    std::size_t nvars_;
    std::vector<GeneralizedMonomial> terms_;  // canonical, sorted, no zeros
};

// ============================================================================
// Compiled form for numeric inner loops
// ============================================================================

/// Flat double-precision image of a TermBundle. Building one performs all
/// rational-to-double conversions up front; evaluation is then allocation
/// free and runs in the bundle's canonical term order.
class CompiledBundle {
public:
    CompiledBundle() = default;

    explicit CompiledBundle(const TermBundle& b) : nvars_(b.nvars()) {
        for (const auto& t : b.terms()) {
            Entry e;
            e.coeff = t.coeff.to_complex();
            e.exponents = t.exponents;
            e.radial_half = t.radial_power.get_d() / 2.0;
            entries_.push_back(std::move(e));
        }
    }

    [[nodiscard]] std::size_t nvars() const { return nvars_; }
    [[nodiscard]] bool empty() const { return entries_.empty(); }

    [[nodiscard]] std::complex<double> evaluate(std::span<const double> z) const {
        double r2 = 0.0;
        for (double v : z) r2 += v * v;
        ComplexCompensatedSum acc;
        for (const auto& e : entries_) {
            double mono = 1.0;
            for (std::size_t i = 0; i < nvars_; ++i) {
                double f = z[i];
                for (int k = 0; k < e.exponents[i]; ++k) mono *= f;
            }
            double radial = 1.0;
            if (e.radial_half != 0.0) radial = std::pow(r2, e.radial_half);
            acc.add(e.coeff * (mono * radial));
        }
        return acc.value();
    }

private:
    struct Entry {
        std::complex<double> coeff;
        std::vector<int> exponents;
        double radial_half = 0.0;
    };

    std::size_t nvars_ = 0;
    std::vector<Entry> entries_;
};

}  // namespace shubin::poly
