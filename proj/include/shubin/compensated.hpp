#pragma once

// Kahan-Babuska compensated accumulators. All quadrature and polynomial
// evaluation loops sum through these in a fixed traversal order so that
// repeated runs produce bit-identical results.

#include <complex>

namespace shubin {

struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            carry += (sum - t) + x;
        else
            carry += (x - t) + sum;
        sum = t;
    }

    [[nodiscard]] double value() const { return sum + carry; }
};

struct ComplexCompensatedSum {
    CompensatedSum re, im;

    void add(const std::complex<double>& z) {
        re.add(z.real());
        im.add(z.imag());
    }

    [[nodiscard]] std::complex<double> value() const { return {re.value(), im.value()}; }
};

}  // namespace shubin
