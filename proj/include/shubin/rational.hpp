#pragma once

// Exact scalar arithmetic used throughout the symbol algebra: arbitrary
// precision rationals (GMP) and complex numbers with rational parts.

#include <gmpxx.h>

#include <complex>
#include <stdexcept>
#include <string>

namespace shubin::poly {

using Rational = mpq_class;

/// Parse "p", "-p", or "p/q" into an exact rational. Throws
/// std::invalid_argument on malformed input or zero denominator.
inline Rational parse_rational(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("parse_rational: empty string");
    mpq_class q;
    if (q.set_str(text, 10) != 0)
        throw std::invalid_argument("parse_rational: cannot parse '" + text + "'");
    if (q.get_den() == 0)
        throw std::invalid_argument("parse_rational: zero denominator in '" + text + "'");
    q.canonicalize();
    return q;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

/// Canonicalized fraction from integer numerator and denominator.
[[nodiscard]] inline Rational make_fraction(long num, long den) {
    if (den == 0) throw std::invalid_argument("make_fraction: zero denominator");
    Rational q(num);
    q /= Rational(den);
    return q;
}

[[nodiscard]] inline Rational rational_pow(const Rational& base, long e) {
    if (e == 0) return Rational(1);
    if (base == 0 && e < 0) throw std::domain_error("rational_pow: 0 to a negative power");
    Rational b = e > 0 ? base : Rational(1) / base;
    long k = e > 0 ? e : -e;
    Rational acc(1);
    while (k > 0) {
        if (k & 1) acc *= b;
        b *= b;
        k >>= 1;
    }
    return acc;
}

[[nodiscard]] inline mpz_class factorial(unsigned long k) {
    mpz_class f;
    mpz_fac_ui(f.get_mpz_t(), k);
    return f;
}

/// Generalized binomial coefficient a over k, a rational, k a nonnegative
/// integer: a(a-1)...(a-k+1) / k!.
[[nodiscard]] inline Rational binomial(const Rational& a, unsigned long k) {
    Rational num(1);
    for (unsigned long i = 0; i < k; ++i) num *= a - Rational(static_cast<long>(i));
    return num / Rational(factorial(k));
}

/// Integer binomial, zero outside the usual range (k < 0 or k > n for n >= 0).
/// Negative n follows the polynomial extension used by series expansions.
[[nodiscard]] inline Rational integer_binomial(long n, long k) {
    if (k < 0) return Rational(0);
    if (n >= 0 && k > n) return Rational(0);
    return binomial(Rational(n), static_cast<unsigned long>(k));
}

// ============================================================================
// GaussianRational: complex numbers with exact rational real/imaginary parts
// ============================================================================

class GaussianRational {
public:
    GaussianRational() : re_(0), im_(0) {}
    GaussianRational(long v) : re_(v), im_(0) {}  // NOLINT(google-explicit-constructor)
    GaussianRational(Rational re) : re_(std::move(re)), im_(0) {}  // NOLINT
    GaussianRational(Rational re, Rational im) : re_(std::move(re)), im_(std::move(im)) {}

    static GaussianRational i() { return {Rational(0), Rational(1)}; }

    [[nodiscard]] const Rational& re() const { return re_; }
    [[nodiscard]] const Rational& im() const { return im_; }
    [[nodiscard]] bool is_zero() const { return re_ == 0 && im_ == 0; }
    [[nodiscard]] bool is_real() const { return im_ == 0; }

    [[nodiscard]] GaussianRational conj() const { return {re_, -im_}; }
    [[nodiscard]] Rational norm_squared() const { return re_ * re_ + im_ * im_; }

    GaussianRational& operator+=(const GaussianRational& o) {
        re_ += o.re_;
        im_ += o.im_;
        return *this;
    }
    GaussianRational& operator-=(const GaussianRational& o) {
        re_ -= o.re_;
        im_ -= o.im_;
        return *this;
    }
    GaussianRational& operator*=(const GaussianRational& o) {
        Rational r = re_ * o.re_ - im_ * o.im_;
        Rational i = re_ * o.im_ + im_ * o.re_;
        re_ = std::move(r);
        im_ = std::move(i);
        return *this;
    }
    GaussianRational& operator/=(const GaussianRational& o) {
        Rational d = o.norm_squared();
        if (d == 0) throw std::domain_error("GaussianRational: division by zero");
        Rational r = (re_ * o.re_ + im_ * o.im_) / d;
        Rational i = (im_ * o.re_ - re_ * o.im_) / d;
        re_ = std::move(r);
        im_ = std::move(i);
        return *this;
    }

    friend GaussianRational operator+(GaussianRational a, const GaussianRational& b) { return a += b; }
    friend GaussianRational operator-(GaussianRational a, const GaussianRational& b) { return a -= b; }
    friend GaussianRational operator*(GaussianRational a, const GaussianRational& b) { return a *= b; }
    friend GaussianRational operator/(GaussianRational a, const GaussianRational& b) { return a /= b; }
    friend GaussianRational operator-(const GaussianRational& a) { return {-a.re_, -a.im_}; }
    friend bool operator==(const GaussianRational& a, const GaussianRational& b) {
        return a.re_ == b.re_ && a.im_ == b.im_;
    }
    friend bool operator!=(const GaussianRational& a, const GaussianRational& b) { return !(a == b); }

    [[nodiscard]] std::complex<double> to_complex() const { return {re_.get_d(), im_.get_d()}; }

    [[nodiscard]] std::string str() const {
        if (im_ == 0) return re_.get_str();
        std::string s = "(" + re_.get_str();
        s += (im_ < 0) ? "-" : "+";
        s += Rational(abs(im_)).get_str() + "i)";
        return s;
    }

private:
    Rational re_, im_;
};

}  // namespace shubin::poly
