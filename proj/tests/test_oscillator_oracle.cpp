#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "shubin/oscillator.hpp"

using namespace shubin::oracle;
using shubin::poly::Rational;
using shubin::trace::LambdaTerm;
using shubin::trace::LambdaView;

TEST_CASE("bernoulli numbers satisfy the defining recurrence values") {
    CHECK(bernoulli(0) == Rational(1));
    CHECK(bernoulli(1) == Rational(-1, 2));
    CHECK(bernoulli(2) == Rational(1, 6));
    CHECK(bernoulli(3) == Rational(0));
    CHECK(bernoulli(4) == Rational(-1, 30));
    CHECK(bernoulli(10) == Rational(5, 66));
    CHECK(bernoulli(12) == Rational(-691, 2730));
}

TEST_CASE("multiplicity polynomial reproduces binomial eigenvalue counts") {
    auto p1 = multiplicity_polynomial(1);
    REQUIRE(p1.size() == 1);
    CHECK(p1[0] == Rational(1));

    // n = 3: binom(t+2, 2) = (t+1)(t+2)/2 = 1 + (3/2)t + (1/2)t^2.
    auto p3 = multiplicity_polynomial(3);
    REQUIRE(p3.size() == 3);
    CHECK(p3[0] == Rational(1));
    CHECK(p3[1] == Rational(3, 2));
    CHECK(p3[2] == Rational(1, 2));
}

TEST_CASE("eigenvalue sums match closed forms") {
    double pi2 = std::numbers::pi * std::numbers::pi;
    // n=1, N=2, lambda=1: sum (2t+2)^-2 = (1/4) zeta(2).
    CHECK(oscillator_trace(1.0, 2, 1) == Catch::Approx(pi2 / 24.0).margin(1e-13));
    // n=1, N=2, lambda=3: sum (2t+4)^-2 = (1/4)(zeta(2) - 1).
    CHECK(oscillator_trace(3.0, 2, 1) == Catch::Approx((pi2 / 6.0 - 1.0) / 4.0).margin(1e-13));
    // n=2, N=3, lambda=0: sum (t+1)(2t+2)^-3 = (1/8) zeta(2).
    CHECK(oscillator_trace(0.0, 3, 2) == Catch::Approx(pi2 / 48.0).margin(1e-13));
}

TEST_CASE("tail closure is insensitive to the explicit block size") {
    for (double lambda : {0.5, 4.0, 50.0}) {
        double coarse = oscillator_trace(lambda, 2, 1, 500);
        double medium = oscillator_trace(lambda, 2, 1, 2000);
        double fine = oscillator_trace(lambda, 2, 1, 10000);
        CHECK(coarse == Catch::Approx(fine).margin(1e-13));
        CHECK(medium == Catch::Approx(fine).margin(1e-13));
    }
    double c3 = oscillator_trace(2.0, 4, 3, 800);
    double f3 = oscillator_trace(2.0, 4, 3, 10000);
    CHECK(c3 == Catch::Approx(f3).margin(1e-13));
}

TEST_CASE("trace decreases along the spectral parameter") {
    double prev = oscillator_trace(0.1, 2, 1);
    for (double lambda : {0.5, 1.0, 2.0, 5.0, 20.0}) {
        double cur = oscillator_trace(lambda, 2, 1);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("n=1 squared resolvent equals a quarter trigamma") {
    for (double lambda : {0.5, 2.7, 10.0}) {
        double lhs = oscillator_trace(lambda, 2, 1);
        double rhs = 0.25 * detail::trigamma((lambda + 1.0) / 2.0);
        CHECK(lhs == Catch::Approx(rhs).margin(1e-12));
    }
}

TEST_CASE("reference expansion reproduces exact rational coefficients") {
    // n=1, N=2: trace = (1/4) psi_1((lambda+1)/2), whose expansion starts
    // 1/(2 lambda) + 0 - 1/(6 lambda^3).
    auto ref = oscillator_expansion_reference(1, 2, 3);
    REQUIRE(ref.count(-1) == 1);
    REQUIRE(ref.count(-2) == 1);
    REQUIRE(ref.count(-3) == 1);
    CHECK(ref.at(-1) == Rational(1, 2));
    CHECK(ref.at(-2) == Rational(0));
    CHECK(ref.at(-3) == Rational(-1, 6));

    // Deeper slots by hand from the shifted trigamma series: the lambda^-4
    // coefficient cancels (-1/2 + 3/2 - 1) and lambda^-5 carries
    // 1/2 - 2 + 2 - 4/15 = 7/30.
    auto deep = oscillator_expansion_reference(1, 2, 5);
    CHECK(deep.at(-4) == Rational(0));
    CHECK(deep.at(-5) == Rational(7, 30));

    // Leading coefficients: 1/(2(N-1)) in one dimension.
    CHECK(oscillator_expansion_reference(1, 3, 1).at(-2) == Rational(1, 4));
    CHECK(oscillator_expansion_reference(1, 4, 1).at(-3) == Rational(1, 6));
    // n=2, N=3: integral (1/2) t (lambda+2t)^-3 dt = lambda^-1 / 8.
    CHECK(oscillator_expansion_reference(2, 3, 1).at(-1) == Rational(1, 8));
}

TEST_CASE("truncated reference converges at the first nonzero dropped power") {
    // Through lambda^-4 the next live coefficient sits at lambda^-5 (the
    // lambda^-4 slot is exactly zero), so the residual must decay one order
    // faster than the truncation depth suggests.
    auto ref = oscillator_expansion_reference(1, 2, 4);
    std::vector<double> xs, ys;
    for (double lambda : {20.0, 40.0, 80.0}) {
        double model = 0.0;
        for (const auto& [e, c] : ref) model += c.get_d() * std::pow(lambda, static_cast<double>(e));
        double resid = std::abs(oscillator_trace(lambda, 2, 1) - model);
        REQUIRE(resid > 1e-13);
        xs.push_back(std::log(lambda));
        ys.push_back(std::log(resid));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    double k = static_cast<double>(xs.size());
    double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    CHECK(slope == Catch::Approx(-5.0).margin(0.3));

    // And the dropped coefficient itself: residual * lambda^5 -> 7/30.
    double resid40 = std::abs(oscillator_trace(40.0, 2, 1) -
                              [&] {
                                  double m = 0.0;
                                  for (const auto& [e, c] : ref)
                                      m += c.get_d() * std::pow(40.0, static_cast<double>(e));
                                  return m;
                              }());
    CHECK(resid40 * std::pow(40.0, 5.0) == Catch::Approx(7.0 / 30.0).margin(5e-3));
}

TEST_CASE("oracle rejects divergent or out-of-range requests") {
    CHECK_THROWS_AS(oscillator_trace(1.0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(oscillator_trace(1.0, 2, 2), std::invalid_argument);
    CHECK_THROWS_AS(oscillator_trace(-1.0, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(oscillator_trace(1.0, 2, 0), std::invalid_argument);
    CHECK_THROWS_AS(oscillator_expansion_reference(1, 1, 2), std::invalid_argument);
    CHECK_THROWS_AS(oscillator_expansion_reference(1, 2, 0), std::invalid_argument);
}

TEST_CASE("comparison report scores complete slots only") {
    auto ref = oscillator_expansion_reference(1, 2, 4);

    LambdaView view;
    view.d = 2;
    LambdaTerm t1;
    t1.exponent = Rational(-1);
    t1.value = {0.5, 0.0};
    LambdaTerm t2;
    t2.exponent = Rational(-2);
    t2.value = {3e-6, 0.0};
    LambdaTerm t3;
    t3.exponent = Rational(-3);
    t3.value = {-1.0 / 6.0 + 2e-5, 0.0};
    LambdaTerm t4;  // truncated partial sum, far off, must not be scored
    t4.exponent = Rational(-4);
    t4.value = {0.7, 0.0};
    t4.complete = false;
    view.terms = {t1, t2, t3, t4};

    auto report = compare_expansions(view, ref, 1e-4);
    CHECK(report.all_pass);
    CHECK(report.compared == 3);
    REQUIRE(report.rows.size() == 4);
    CHECK(report.rows.front().exponent == -1);
    CHECK(report.rows.front().pass);
    CHECK_FALSE(report.rows.back().complete);

    auto strict = compare_expansions(view, ref, 1e-7);
    CHECK_FALSE(strict.all_pass);

    // Log content in a scored slot counts against the match.
    view.terms[0].has_log = true;
    view.terms[0].log_value = {0.01, 0.0};
    auto logged = compare_expansions(view, ref, 1e-4);
    CHECK_FALSE(logged.all_pass);
}
