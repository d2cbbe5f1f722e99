#pragma once

// Numeric verification of the weighted derivative bounds that define the
// parameter-dependent symbol classes. A component carrying the degree pair
// (d, nu) must satisfy
//
//   | d_z^alpha d_mu^k a(z, mu) |  <=  C <z>^(nu-|alpha|) <z,mu>^(d-nu-k)
//
// with <z> = (1+|z|^2)^1/2 and <z,mu> = (1+|z|^2+mu^2)^1/2. The checker
// samples a deterministic grid of directions, radii and parameter values,
// forms Richardson-extrapolated central differences, and reports the worst
// observed ratio against the weight for every derivative order in range.
// It never decides pass or fail by itself; callers pin their own ceiling.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "shubin/symbol.hpp"

namespace shubin::estimates {

struct EstimateSpec {
    std::size_t directions = 20;  // unit vectors in z
    std::size_t radii = 20;       // |z| values, log spaced
    std::size_t mu_points = 10;   // parameter values, log spaced
    double r_min = 0.25;
    double r_max = 64.0;
    double mu_min = 1.0;
    double mu_max = 32.0;
    int max_order = 2;         // total derivative order |alpha| + k up to this
    double step_scale = 1e-4;  // finite-difference step relative to <z> or mu

    void validate() const {
        if (directions == 0 || radii == 0 || mu_points == 0)
            throw std::invalid_argument("EstimateSpec: empty grid");
        if (!(0.0 < r_min && r_min <= r_max) || !(0.0 < mu_min && mu_min <= mu_max))
            throw std::invalid_argument("EstimateSpec: bad ranges");
        if (max_order < 0)
            throw std::invalid_argument("EstimateSpec: negative derivative order");
        if (!(step_scale > 0.0) || step_scale >= 0.1)
            throw std::invalid_argument("EstimateSpec: step scale out of range");
    }
};

struct EstimateRow {
    std::vector<int> alpha;  // z multi-index
    int mu_order = 0;
    double worst_ratio = 0.0;
    std::vector<double> worst_z;
    double worst_mu = 0.0;
};

struct EstimateReport {
    std::size_t component = 0;
    int order = 0;  // degree pair claimed for this component
    int reg = 0;
    double worst_ratio = 0.0;
    std::vector<EstimateRow> rows;

    [[nodiscard]] bool within(double ceiling) const { return worst_ratio <= ceiling; }
};

namespace detail {

/// Nested Richardson central differences along the listed coordinates.
/// Depth grows the cost by four evaluations per derivative order.
template <class F>
std::complex<double> nested_difference(const F& f, std::vector<double>& x, std::span<const int> dirs,
                                       const std::vector<double>& steps) {
    if (dirs.empty()) return f(x);
    int v = dirs.front();
    auto rest = dirs.subspan(1);
    double h = steps[static_cast<std::size_t>(v)];
    auto at = [&](double shift) {
        x[static_cast<std::size_t>(v)] += shift;
        auto val = nested_difference(f, x, rest, steps);
        x[static_cast<std::size_t>(v)] -= shift;
        return val;
    };
    auto central = [&](double hh) { return (at(hh) - at(-hh)) / (2.0 * hh); };
    auto coarse = central(h);
    auto fine = central(h / 2.0);
    return (4.0 * fine - coarse) / 3.0;
}

/// Deterministic unit vectors: equally spaced angles in the plane, fixed
/// pseudo-random directions from raw generator words in higher dimension.
[[nodiscard]] inline std::vector<std::vector<double>> unit_directions(std::size_t m, std::size_t count) {
    std::vector<std::vector<double>> out;
    out.reserve(count);
    if (m == 2) {
        for (std::size_t i = 0; i < count; ++i) {
            double th = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
            out.push_back({std::cos(th), std::sin(th)});
        }
        return out;
    }
    std::uint64_t state = 0x9e3779b97f4a7c15ull;
    auto next_uniform = [&state]() {
        state += 0x9e3779b97f4a7c15ull;
        std::uint64_t x = state;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        x ^= x >> 31;
        return static_cast<double>(x >> 11) * 0x1.0p-53;
    };
    while (out.size() < count) {
        std::vector<double> w(m);
        double norm2 = 0.0;
        for (std::size_t i = 0; i < m; i += 2) {
            double u1 = next_uniform(), u2 = next_uniform();
            if (u1 < 1e-300) u1 = 1e-300;
            double r = std::sqrt(-2.0 * std::log(u1));
            w[i] = r * std::cos(2.0 * std::numbers::pi * u2);
            if (i + 1 < m) w[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
        }
        for (double c : w) norm2 += c * c;
        if (norm2 < 1e-12) continue;
        double inv = 1.0 / std::sqrt(norm2);
        for (double& c : w) c *= inv;
        out.push_back(std::move(w));
    }
    return out;
}

[[nodiscard]] inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    std::vector<double> out;
    out.reserve(count);
    if (count == 1) {
        out.push_back(lo);
        return out;
    }
    double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out.push_back(lo * std::exp(step * static_cast<double>(i)));
    return out;
}

/// All z multi-indices with |alpha| <= bound, graded order.
[[nodiscard]] inline std::vector<std::vector<int>> multi_indices(std::size_t m, int bound) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(m, 0);
    for (int total = 0; total <= bound; ++total) {
        // odometer over compositions of `total` into m parts
        std::fill(cur.begin(), cur.end(), 0);
        cur[0] = total;
        while (true) {
            out.push_back(cur);
            // next composition in colex order
            std::size_t i = 0;
            while (i + 1 < m && cur[i] == 0) ++i;
            if (i + 1 >= m) break;
            int v = cur[i];
            cur[i] = 0;
            cur[0] = v - 1;
            cur[i + 1] += 1;
        }
    }
    return out;
}

}  // namespace detail

/// Worst weighted-derivative ratios for component j of an expansion, whose
/// claimed degree pair is (order - j, reg - j). Report only; no verdicts.
[[nodiscard]] inline EstimateReport check_symbol_estimates(const symbols::SymbolExpansion& a, std::size_t j,
                                                           const EstimateSpec& spec = {}) {
    spec.validate();
    if (j >= a.J()) throw std::invalid_argument("check_symbol_estimates: no such component");
    std::size_t m = 2 * a.n;

    symbols::CompiledExpansion ce(a);
    auto f = [&](const std::vector<double>& x) {
        return ce.evaluate_component(j, std::span<const double>(x.data(), m), x[m]);
    };

    EstimateReport report;
    report.component = j;
    report.order = a.order - static_cast<int>(j);
    report.reg = a.reg - static_cast<int>(j);

    auto dirs = detail::unit_directions(m, spec.directions);
    auto radii = detail::log_grid(spec.r_min, spec.r_max, spec.radii);
    auto mus = detail::log_grid(spec.mu_min, spec.mu_max, spec.mu_points);
    auto alphas = detail::multi_indices(m, spec.max_order);

    for (const auto& alpha : alphas) {
        int ord = 0;
        std::vector<int> z_coords;
        for (std::size_t i = 0; i < m; ++i) {
            ord += alpha[i];
            for (int rep = 0; rep < alpha[i]; ++rep) z_coords.push_back(static_cast<int>(i));
        }
        for (int k = 0; ord + k <= spec.max_order; ++k) {
            EstimateRow row;
            row.alpha = alpha;
            row.mu_order = k;
            std::vector<int> coords = z_coords;
            for (int rep = 0; rep < k; ++rep) coords.push_back(static_cast<int>(m));

            std::vector<double> x(m + 1, 0.0);
            std::vector<double> steps(m + 1, 0.0);
            for (const auto& w : dirs) {
                for (double r : radii) {
                    double znorm = std::sqrt(1.0 + r * r);
                    for (double mu : mus) {
                        for (std::size_t i = 0; i < m; ++i) {
                            x[i] = r * w[i];
                            steps[i] = spec.step_scale * znorm;
                        }
                        x[m] = mu;
                        steps[m] = spec.step_scale * mu;
                        auto val = detail::nested_difference(f, x, std::span<const int>(coords), steps);
                        double joint = std::sqrt(1.0 + r * r + mu * mu);
                        double weight = std::pow(znorm, static_cast<double>(report.reg - ord)) *
                                        std::pow(joint, static_cast<double>(report.order - report.reg - k));
                        double ratio = std::abs(val) / weight;
                        if (ratio > row.worst_ratio) {
                            row.worst_ratio = ratio;
                            row.worst_z.assign(x.begin(), x.begin() + static_cast<long>(m));
                            row.worst_mu = mu;
                        }
                    }
                }
            }
            if (row.worst_ratio > report.worst_ratio) report.worst_ratio = row.worst_ratio;
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

}  // namespace shubin::estimates
