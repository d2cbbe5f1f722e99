#pragma once

// Parameter-dependent symbols on R^n x R^n, written in 2n real variables
// z = (x_1..x_n, xi_1..xi_n). The resolvent-type symbols handled here are
// finite sums
//
//     sum_M  numer_M(z) * R^-M,      R = mu^d - P(z),
//
// with TermBundle numerators and a fixed z-homogeneous principal part P of
// degree d that never meets the closed ray [0, inf) on the unit sphere. All
// mu dependence flows through R, so the representation is unique and exact
// equality of symbols is structural equality of their part maps.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "shubin/term_bundle.hpp"

namespace shubin::symbols {

using poly::CompiledBundle;
using poly::DiffKind;
using poly::GaussianRational;
using poly::Rational;
using poly::TermBundle;

[[nodiscard]] inline std::complex<double> cpow_int(std::complex<double> base, int e) {
    if (e == 0) return {1.0, 0.0};
    bool invert = e < 0;
    unsigned k = invert ? static_cast<unsigned>(-(long long)e) : static_cast<unsigned>(e);
    std::complex<double> acc{1.0, 0.0};
    std::complex<double> b = base;
    while (k > 0) {
        if (k & 1u) acc *= b;
        b *= b;
        k >>= 1;
    }
    return invert ? 1.0 / acc : acc;
}

// ============================================================================
// Denominator base
// ============================================================================

/// The shared denominator R = mu^d - P(z) of a family of rational symbols.
struct RBase {
    int d = 0;      // homogeneity degree of R in (z, mu); P is z-homogeneous of degree d
    TermBundle P;   // principal part

    friend bool operator==(const RBase& a, const RBase& b) { return a.d == b.d && a.P == b.P; }
    friend bool operator!=(const RBase& a, const RBase& b) { return !(a == b); }

    [[nodiscard]] std::complex<double> evaluate(std::span<const double> z, double mu) const {
        return std::pow(mu, static_cast<double>(d)) - P.evaluate(z);
    }
};

// ============================================================================
// Radial cutoff
// ============================================================================

/// Zero-excision cutoff chi(|z|): vanishes near the origin, equals one for
/// |z| >= r1. The smooth variant is a C-infinity bump ramp on [r0, r1]; the
/// sharp variant is the indicator of |z| >= r1.
struct CutoffSpec {
    enum class Kind { smooth_bump, sharp };

    double r0 = 0.5;
    double r1 = 1.0;
    Kind kind = Kind::smooth_bump;

    void validate() const {
        if (!(r0 > 0.0) || !(r1 > r0))
            throw std::invalid_argument("CutoffSpec: need 0 < r0 < r1");
    }

    [[nodiscard]] double operator()(double r) const {
        if (kind == Kind::sharp) return r >= r1 ? 1.0 : 0.0;
        if (r <= r0) return 0.0;
        if (r >= r1) return 1.0;
        auto ramp = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
        double t = (r - r0) / (r1 - r0);
        double a = ramp(t);
        double b = ramp(1.0 - t);
        return a / (a + b);
    }
};

// ============================================================================
// Rational symbols
// ============================================================================

/// A finite sum of terms numer_M(z) * R^-M, keyed by the integer power M.
/// Negative M means positive powers of R. Addition and multiplication do not
/// need the base; differentiation and evaluation do.
class RationalSymbol {
public:
    RationalSymbol() : nvars_(0) {}
    explicit RationalSymbol(std::size_t nvars) : nvars_(nvars) {}

    static RationalSymbol from_bundle(TermBundle numer) {
        RationalSymbol s(numer.nvars());
        s.add_part(0, std::move(numer));
        return s;
    }

    /// numer * R^-M.
    static RationalSymbol r_power(TermBundle numer, int M) {
        RationalSymbol s(numer.nvars());
        s.add_part(M, std::move(numer));
        return s;
    }

    [[nodiscard]] std::size_t nvars() const { return nvars_; }
    [[nodiscard]] bool is_zero() const { return parts_.empty(); }
    [[nodiscard]] const std::map<int, TermBundle>& parts() const { return parts_; }
    [[nodiscard]] bool uses_r() const {
        for (const auto& [M, numer] : parts_)
            if (M != 0) return true;
        return false;
    }

    void add_part(int M, TermBundle numer) {
        if (numer.nvars() != nvars_)
            throw std::invalid_argument("RationalSymbol: numerator variable count mismatch");
        if (numer.is_zero()) return;
        auto it = parts_.find(M);
        if (it == parts_.end()) {
            parts_.emplace(M, std::move(numer));
        } else {
            it->second += numer;
            if (it->second.is_zero()) parts_.erase(it);
        }
    }

    RationalSymbol& operator+=(const RationalSymbol& o) {
        check_same_vars(o);
        for (const auto& [M, numer] : o.parts_) add_part(M, numer);
        return *this;
    }
    RationalSymbol& operator-=(const RationalSymbol& o) {
        check_same_vars(o);
        for (const auto& [M, numer] : o.parts_) add_part(M, -numer);
        return *this;
    }

    friend RationalSymbol operator+(RationalSymbol a, const RationalSymbol& b) { return a += b; }
    friend RationalSymbol operator-(RationalSymbol a, const RationalSymbol& b) { return a -= b; }
    friend RationalSymbol operator-(const RationalSymbol& a) {
        RationalSymbol r(a.nvars_);
        for (const auto& [M, numer] : a.parts_) r.parts_.emplace(M, -numer);
        return r;
    }

    friend RationalSymbol operator*(const RationalSymbol& a, const RationalSymbol& b) {
        a.check_same_vars(b);
        RationalSymbol r(a.nvars_);
        for (const auto& [Ma, na] : a.parts_)
            for (const auto& [Mb, nb] : b.parts_) r.add_part(Ma + Mb, na * nb);
        return r;
    }

    friend RationalSymbol operator*(const RationalSymbol& a, const TermBundle& f) {
        RationalSymbol r(a.nvars_);
        for (const auto& [M, numer] : a.parts_) r.add_part(M, numer * f);
        return r;
    }
    friend RationalSymbol operator*(const TermBundle& f, const RationalSymbol& a) { return a * f; }

    friend RationalSymbol operator*(RationalSymbol a, const GaussianRational& c) {
        if (c.is_zero()) return RationalSymbol(a.nvars_);
        for (auto& [M, numer] : a.parts_) numer *= c;
        return a;
    }
    friend RationalSymbol operator*(const GaussianRational& c, RationalSymbol a) { return std::move(a) * c; }

    /// Multiply by R^-shift, shifting every part.
    [[nodiscard]] RationalSymbol shifted(int shift) const {
        RationalSymbol r(nvars_);
        for (const auto& [M, numer] : parts_) r.parts_.emplace(M + shift, numer);
        return r;
    }

    friend bool operator==(const RationalSymbol& a, const RationalSymbol& b) {
        return a.nvars_ == b.nvars_ && a.parts_ == b.parts_;
    }
    friend bool operator!=(const RationalSymbol& a, const RationalSymbol& b) { return !(a == b); }

    /// d/dz_i with the chain rule through R:
    ///   d(numer R^-M) = (d numer) R^-M + M numer (d P) R^-(M+1).
    [[nodiscard]] RationalSymbol differentiate(std::size_t i, const RBase& base,
                                               DiffKind kind = DiffKind::partial) const {
        RationalSymbol r(nvars_);
        for (const auto& [M, numer] : parts_) {
            r.add_part(M, numer.differentiate(i));
            if (M != 0)
                r.add_part(M + 1, numer * base.P.differentiate(i) * GaussianRational(Rational(M)));
        }
        if (kind == DiffKind::dee) r = r * (-GaussianRational::i());
        return r;
    }

    /// Joint homogeneity degree in (z, mu): every part must satisfy
    /// deg(numer) - d M = g for one common g. Returns nothing for the zero
    /// symbol; throws when parts disagree or numerators are inhomogeneous.
    [[nodiscard]] std::optional<Rational> joint_degree(const RBase& base) const {
        std::optional<Rational> g;
        for (const auto& [M, numer] : parts_) {
            Rational gm = numer.degree() - Rational(base.d) * Rational(M);
            if (!g)
                g = gm;
            else if (*g != gm)
                throw std::domain_error("RationalSymbol: parts have different joint degrees");
        }
        return g;
    }

    [[nodiscard]] std::complex<double> evaluate(std::span<const double> z, double mu, const RBase& base) const {
        std::complex<double> R = base.evaluate(z, mu);
        ComplexCompensatedSum acc;
        for (const auto& [M, numer] : parts_) acc.add(numer.evaluate(z) * cpow_int(R, -M));
        return acc.value();
    }

    [[nodiscard]] std::string str() const {
        if (parts_.empty()) return "0";
        std::string s;
        bool first = true;
        for (const auto& [M, numer] : parts_) {
            if (!first) s += "  +  ";
            first = false;
            s += "[" + numer.str() + "]";
            if (M != 0) s += " R^" + std::to_string(-M);
        }
        return s;
    }

private:
    void check_same_vars(const RationalSymbol& o) const {
        if (nvars_ != o.nvars_)
            throw std::invalid_argument("RationalSymbol: operands have different variable counts");
    }

    std::size_t nvars_;
    std::map<int, TermBundle> parts_;
};

// ============================================================================
// Elliptic operators
// ============================================================================

/// A differential-type operator symbol given by its z-homogeneous components
/// p0 = p0^(d) + p0^(d-1) + ... + p0^(0). The principal component must be
/// nonzero; lower components may vanish.
class EllipticOperator {
public:
    EllipticOperator(std::size_t n, int d, std::vector<TermBundle> components)
        : n_(n), d_(d), comps_(std::move(components)) {
        if (n_ == 0) throw std::invalid_argument("EllipticOperator: dimension must be positive");
        if (d_ <= 0) throw std::invalid_argument("EllipticOperator: order must be positive");
        if (comps_.size() != static_cast<std::size_t>(d_) + 1)
            throw std::invalid_argument("EllipticOperator: need exactly d+1 homogeneous components");
        for (std::size_t l = 0; l < comps_.size(); ++l) {
            if (comps_[l].nvars() != 2 * n_)
                throw std::invalid_argument("EllipticOperator: components must live in 2n variables");
            if (comps_[l].is_zero()) continue;
            if (!comps_[l].is_polynomial())
                throw std::invalid_argument("EllipticOperator: components must be polynomial");
            if (comps_[l].degree() != Rational(d_ - static_cast<long>(l)))
                throw std::invalid_argument("EllipticOperator: component " + std::to_string(l) +
                                            " has the wrong homogeneity degree");
        }
        if (comps_[0].is_zero())
            throw std::invalid_argument("EllipticOperator: principal component vanishes");
    }

    /// Build from a full polynomial by splitting into homogeneous parts;
    /// d is the top degree.
    static EllipticOperator from_polynomial(std::size_t n, const TermBundle& p0) {
        if (p0.is_zero()) throw std::invalid_argument("EllipticOperator: zero symbol");
        int d = static_cast<int>(mpz_get_si(p0.max_degree().get_num().get_mpz_t()));
        std::vector<TermBundle> comps(static_cast<std::size_t>(d) + 1, TermBundle(p0.nvars()));
        for (const auto& [g, part] : p0.homogeneous_parts()) {
            long l = d - mpz_get_si(Rational(g).get_num().get_mpz_t());
            if (g.get_den() != 1 || l < 0 || l > d)
                throw std::invalid_argument("EllipticOperator: degrees outside 0..d");
            comps[static_cast<std::size_t>(l)] += part;
        }
        return EllipticOperator(n, d, std::move(comps));
    }

    [[nodiscard]] std::size_t n() const { return n_; }
    [[nodiscard]] int d() const { return d_; }
    [[nodiscard]] const TermBundle& principal() const { return comps_[0]; }
    /// Component p0^(d-l).
    [[nodiscard]] const TermBundle& component(std::size_t l) const { return comps_.at(l); }
    [[nodiscard]] const std::vector<TermBundle>& components() const { return comps_; }

    [[nodiscard]] TermBundle full_symbol() const {
        TermBundle f(2 * n_);
        for (const auto& c : comps_) f += c;
        return f;
    }

    [[nodiscard]] RBase base() const { return RBase{d_, principal()}; }

private:
    std::size_t n_;
    int d_;
    std::vector<TermBundle> comps_;
};

// ============================================================================
// Symbol expansions
// ============================================================================

/// A symbol of order pair (order, reg) given through finitely many jointly
/// homogeneous components; component j has joint degree order - j. When
/// exact is set the finite sum is the whole symbol; otherwise the list
/// truncates an asymptotic expansion and the remainder has order pair
/// (order - J, reg - J) for J = components.size().
struct SymbolExpansion {
    std::size_t n = 1;
    int order = 0;
    int reg = 0;
    bool exact = false;
    std::optional<RBase> base;
    std::vector<RationalSymbol> components;

    [[nodiscard]] std::size_t J() const { return components.size(); }
    [[nodiscard]] int remainder_order() const { return order - static_cast<int>(components.size()); }
    [[nodiscard]] int remainder_reg() const { return reg - static_cast<int>(components.size()); }

    [[nodiscard]] RationalSymbol component_or_zero(std::size_t j) const {
        if (j < components.size()) return components[j];
        return RationalSymbol(2 * n);
    }

    /// A plain symbol with a single exact component (a polynomial or a
    /// radial-weighted bundle), order pair (order, reg) supplied by the caller.
    static SymbolExpansion single(std::size_t n, int order, int reg, RationalSymbol sym,
                                  std::optional<RBase> base = std::nullopt) {
        SymbolExpansion e;
        e.n = n;
        e.order = order;
        e.reg = reg;
        e.exact = true;
        e.base = std::move(base);
        e.components.push_back(std::move(sym));
        return e;
    }

    /// An exact expansion of a full polynomial q: component j is the
    /// homogeneous part of degree order - j, order = reg = deg q.
    static SymbolExpansion from_polynomial(std::size_t n, const TermBundle& q) {
        if (q.nvars() != 2 * n)
            throw std::invalid_argument("SymbolExpansion: polynomial must live in 2n variables");
        SymbolExpansion e;
        e.n = n;
        e.exact = true;
        if (q.is_zero()) {
            e.order = 0;
            e.reg = 0;
            e.components.push_back(RationalSymbol(2 * n));
            return e;
        }
        int deg = static_cast<int>(mpz_get_si(q.max_degree().get_num().get_mpz_t()));
        e.order = deg;
        e.reg = deg;
        e.components.assign(static_cast<std::size_t>(deg) + 1, RationalSymbol(2 * n));
        for (const auto& [g, part] : q.homogeneous_parts()) {
            long j = deg - mpz_get_si(Rational(g).get_num().get_mpz_t());
            if (g.get_den() != 1 || j < 0 || j > deg)
                throw std::invalid_argument("SymbolExpansion: polynomial degrees outside 0..deg");
            e.components[static_cast<std::size_t>(j)] += RationalSymbol::from_bundle(part);
        }
        return e;
    }

    /// The resolvent-type symbol mu^d - p0 of order pair (d, 0), written over
    /// the base R = mu^d - p0^(d): component 0 is R itself (a positive power,
    /// M = -1) and component l >= 1 is -p0^(d-l). The expansion is exact.
    static SymbolExpansion resolvent_target(const EllipticOperator& op) {
        SymbolExpansion e;
        e.n = op.n();
        e.order = op.d();
        e.reg = 0;
        e.exact = true;
        e.base = op.base();
        e.components.reserve(static_cast<std::size_t>(op.d()) + 1);
        e.components.push_back(RationalSymbol::r_power(TermBundle::constant(2 * op.n(), GaussianRational(1)), -1));
        for (std::size_t l = 1; l <= static_cast<std::size_t>(op.d()); ++l) {
            RationalSymbol c(2 * op.n());
            if (!op.component(l).is_zero()) c = RationalSymbol::from_bundle(-op.component(l));
            e.components.push_back(std::move(c));
        }
        return e;
    }

    /// Check that component j is jointly homogeneous of degree order - j and
    /// that any R powers come with a base. Throws on failure.
    void validate() const {
        for (std::size_t j = 0; j < components.size(); ++j) {
            const auto& c = components[j];
            if (c.nvars() != 2 * n)
                throw std::invalid_argument("SymbolExpansion: component variable count mismatch");
            if (c.uses_r() && !base)
                throw std::invalid_argument("SymbolExpansion: R powers present but no base given");
            if (c.is_zero()) continue;
            RBase b = base ? *base : RBase{1, TermBundle(2 * n)};
            auto g = c.joint_degree(b);
            if (g && *g != Rational(order - static_cast<long>(j)))
                throw std::invalid_argument("SymbolExpansion: component " + std::to_string(j) +
                                            " has joint degree " + Rational(*g).get_str() +
                                            ", expected " + std::to_string(order - static_cast<long>(j)));
        }
    }

    /// Evaluate the truncated symbol (sum of stored components) at (z, mu).
    [[nodiscard]] std::complex<double> evaluate(std::span<const double> z, double mu) const {
        RBase b = base ? *base : RBase{1, TermBundle(2 * n)};
        ComplexCompensatedSum acc;
        for (const auto& c : components) acc.add(c.evaluate(z, mu, b));
        return acc.value();
    }
};

// ============================================================================
// Compiled evaluators
// ============================================================================

/// Double-precision image of one rational symbol over a fixed base.
class CompiledRationalSymbol {
public:
    CompiledRationalSymbol() = default;

    CompiledRationalSymbol(const RationalSymbol& s, const RBase& base) : d_(base.d), P_(base.P) {
        for (const auto& [M, numer] : s.parts()) parts_.emplace_back(M, CompiledBundle(numer));
    }

    [[nodiscard]] std::complex<double> evaluate(std::span<const double> z, double mu) const {
        std::complex<double> R = std::pow(mu, static_cast<double>(d_)) - P_.evaluate(z);
        ComplexCompensatedSum acc;
        for (const auto& [M, numer] : parts_) acc.add(numer.evaluate(z) * cpow_int(R, -M));
        return acc.value();
    }

private:
    int d_ = 1;
    CompiledBundle P_;
    std::vector<std::pair<int, CompiledBundle>> parts_;
};

/// Double-precision image of a whole expansion; evaluates the sum of the
/// stored components.
class CompiledExpansion {
public:
    explicit CompiledExpansion(const SymbolExpansion& e) {
        RBase b = e.base ? *e.base : RBase{1, TermBundle(2 * e.n)};
        for (const auto& c : e.components) comps_.emplace_back(c, b);
    }

    [[nodiscard]] std::size_t size() const { return comps_.size(); }

    [[nodiscard]] std::complex<double> evaluate(std::span<const double> z, double mu) const {
        ComplexCompensatedSum acc;
        for (const auto& c : comps_) acc.add(c.evaluate(z, mu));
        return acc.value();
    }

    [[nodiscard]] std::complex<double> evaluate_component(std::size_t j, std::span<const double> z,
                                                          double mu) const {
        return comps_[j].evaluate(z, mu);
    }

private:
    std::vector<CompiledRationalSymbol> comps_;
};

}  // namespace shubin::symbols
