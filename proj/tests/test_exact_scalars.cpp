#include <catch2/catch_amalgamated.hpp>

#include "shubin/rational.hpp"

using namespace shubin::poly;

TEST_CASE("rational parsing handles integers, fractions, and signs") {
    CHECK(parse_rational("3/4") == Rational(3, 4));
    CHECK(parse_rational("-7") == Rational(-7));
    CHECK(parse_rational("-6/4") == Rational(-3, 2));
    CHECK(parse_rational("0") == 0);
    CHECK_THROWS_AS(parse_rational(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_rational("x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_rational("1/0"), std::invalid_argument);
}

TEST_CASE("rational_pow matches repeated multiplication and inverts cleanly") {
    CHECK(rational_pow(Rational(2, 3), 3) == Rational(8, 27));
    CHECK(rational_pow(Rational(2, 3), -2) == Rational(9, 4));
    CHECK(rational_pow(Rational(5), 0) == 1);
    CHECK_THROWS_AS(rational_pow(Rational(0), -1), std::domain_error);
}

TEST_CASE("generalized binomial agrees with hand values") {
    // (1/2 choose 2) = (1/2)(-1/2)/2 = -1/8
    CHECK(binomial(Rational(1, 2), 2) == Rational(-1, 8));
    // (-2 choose 3) = (-2)(-3)(-4)/6 = -4
    CHECK(binomial(Rational(-2), 3) == Rational(-4));
    CHECK(binomial(Rational(7, 3), 0) == 1);
    CHECK(integer_binomial(5, 2) == Rational(10));
    CHECK(integer_binomial(5, 7) == 0);
    CHECK(integer_binomial(5, -1) == 0);
    // (-1 choose 0) = 1 shows up as the first coefficient of every
    // geometric-type series.
    CHECK(integer_binomial(-1, 0) == 1);
    CHECK(integer_binomial(-2, 3) == Rational(-4));
}

TEST_CASE("gaussian rational field operations") {
    GaussianRational a(Rational(1, 2), Rational(-3));
    GaussianRational b(Rational(2), Rational(1, 3));

    CHECK((a + b) == GaussianRational(Rational(5, 2), Rational(-8, 3)));
    CHECK((a * b) == GaussianRational(Rational(2), Rational(-35, 6)));
    CHECK(a * a.conj() == GaussianRational(a.norm_squared()));
    CHECK((a / b) * b == a);
    CHECK_THROWS_AS(a / GaussianRational(0), std::domain_error);

    auto i = GaussianRational::i();
    CHECK(i * i == GaussianRational(-1));
    CHECK((-i) * i == GaussianRational(1));
}

TEST_CASE("gaussian rational converts to floating complex") {
    GaussianRational a(Rational(1, 4), Rational(-1, 8));
    auto z = a.to_complex();
    CHECK(z.real() == 0.25);
    CHECK(z.imag() == -0.125);
}
