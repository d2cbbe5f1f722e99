#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <vector>

#include "shubin/calculus.hpp"
#include "shubin/estimates.hpp"

using namespace shubin::estimates;
using shubin::poly::GaussianRational;
using shubin::poly::Rational;
using shubin::poly::TermBundle;
using shubin::symbols::EllipticOperator;
using shubin::symbols::RationalSymbol;
using shubin::symbols::SymbolExpansion;

namespace {

EllipticOperator oscillator_op() {
    TermBundle p0(2);
    p0.add_term(GaussianRational(-1), {2, 0}, Rational(0));
    p0.add_term(GaussianRational(-1), {0, 2}, Rational(0));
    return EllipticOperator::from_polynomial(1, p0);
}

EstimateSpec quick_spec() {
    EstimateSpec spec;
    spec.directions = 8;
    spec.radii = 10;
    spec.mu_points = 5;
    return spec;
}

}  // namespace

TEST_CASE("nested differences recover polynomial derivatives") {
    auto f = [](const std::vector<double>& x) {
        return std::complex<double>(x[0] * x[0] * x[1] + x[2], 0.0);
    };
    std::vector<double> x{1.3, -0.7, 2.0};
    // Wide steps keep roundoff noise out of the triple-nested difference;
    // Richardson handles the truncation side.
    std::vector<double> steps{1e-2, 1e-2, 1e-2};

    std::vector<int> mixed{0, 0, 1};
    auto d = detail::nested_difference(f, x, std::span<const int>(mixed), steps);
    CHECK(d.real() == Catch::Approx(2.0).margin(1e-6));

    std::vector<int> param{2};
    CHECK(detail::nested_difference(f, x, std::span<const int>(param), steps).real() ==
          Catch::Approx(1.0).margin(1e-9));

    std::vector<int> cross{0, 2};
    CHECK(std::abs(detail::nested_difference(f, x, std::span<const int>(cross), steps)) < 1e-7);

    // the point comes back to where it started, up to float add/sub noise
    CHECK(x[0] == Catch::Approx(1.3).margin(1e-12));
    CHECK(x[2] == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("oscillator parametrix components satisfy their claimed bounds") {
    auto op = oscillator_op();
    auto b = shubin::symbols::parametrix(op, 5);
    auto spec = quick_spec();
    for (std::size_t j = 0; j < 5; ++j) {
        auto rep = check_symbol_estimates(b, j, spec);
        CHECK(rep.component == j);
        CHECK(rep.order == -2 - static_cast<int>(j));
        CHECK(rep.reg == -static_cast<int>(j));
        // |alpha| + k <= 2 in two z-variables: 3 + 4 + 3 rows by total order
        REQUIRE(rep.rows.size() == 10);
        INFO("component " << j << " worst ratio " << rep.worst_ratio);
        CHECK(rep.within(1e3));
    }
    // The base resolvent power is tame; nothing near the ceiling.
    CHECK(check_symbol_estimates(b, 0, spec).worst_ratio < 100.0);
}

TEST_CASE("overclaimed joint decay is detected") {
    auto op = oscillator_op();
    auto one = TermBundle::constant(2, GaussianRational(1));

    // R^-1 genuinely carries the pair (-2, 0); claiming (-6, 0) demands four
    // extra powers of joint decay and the ratio runs off with mu.
    auto wrong = SymbolExpansion::single(1, -6, 0, RationalSymbol::r_power(one, 1), op.base());
    auto rep = check_symbol_estimates(wrong, 0, quick_spec());
    CHECK_FALSE(rep.within(1e3));

    auto right = SymbolExpansion::single(1, -2, 0, RationalSymbol::r_power(one, 1), op.base());
    CHECK(check_symbol_estimates(right, 0, quick_spec()).within(1e3));
}

TEST_CASE("estimate checker validates its inputs") {
    auto op = oscillator_op();
    auto b = shubin::symbols::parametrix(op, 2);
    CHECK_THROWS_AS(check_symbol_estimates(b, 7, quick_spec()), std::invalid_argument);

    EstimateSpec bad = quick_spec();
    bad.radii = 0;
    CHECK_THROWS_AS(check_symbol_estimates(b, 0, bad), std::invalid_argument);
    bad = quick_spec();
    bad.step_scale = 0.5;
    CHECK_THROWS_AS(check_symbol_estimates(b, 0, bad), std::invalid_argument);
    bad = quick_spec();
    bad.r_min = -1.0;
    CHECK_THROWS_AS(check_symbol_estimates(b, 0, bad), std::invalid_argument);
}
