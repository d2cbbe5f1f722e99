#pragma once

// Trace expansion assembly. The normalized trace of a truncated symbol,
// (2 pi)^-n Integral chi(|z|) a(z, mu) dz, expands for large mu into
//
//   sum_j c_j mu^(d + m - j)
//   + sum_l (c'_l log mu + c''_l) mu^(d - nu - l),      m = 2n,
//
// where d and nu are the order pair of the traced symbol. The engine computes
// the c_j by splitting each component integral at radius one and recombining
// the pieces by homogeneity: an outer quadrature of the component itself, an
// inner quadrature of the series tail (evaluated through the stable
// tail recurrence, never by subtraction), and exact sphere moments divided by
// nu - j + l + m. The c'_l are exact rational sphere moments at the unique
// logarithmic index l = j - m - nu, and the c''_l absorb everything the
// finite data cannot represent; they are recovered by least squares against
// sampled trace integrals.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "shubin/calculus.hpp"
#include "shubin/mu_series.hpp"
#include "shubin/quadrature.hpp"
#include "shubin/sphere.hpp"
#include "shubin/symbol.hpp"

namespace shubin::trace {

using poly::GaussianRational;
using poly::Rational;
using poly::TermBundle;
using symbols::CutoffSpec;
using symbols::SymbolExpansion;

// ============================================================================
// Result types
// ============================================================================

enum class Provenance { exact, quadrature, fitted };

[[nodiscard]] inline const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::exact: return "exact";
        case Provenance::quadrature: return "quadrature";
        case Provenance::fitted: return "fitted";
    }
    return "?";
}

struct Coefficient {
    Provenance provenance = Provenance::quadrature;
    std::complex<double> value{0.0, 0.0};
    std::optional<GaussianRational> exact_value;  // populated for exact provenance
    double error = 0.0;                           // quadrature/fit error scale
};

struct TraceExpansion {
    std::size_t n = 1;
    int sym_order = 0;  // order d of the traced symbol
    int sym_reg = 0;    // regularity nu of the traced symbol
    std::size_t J = 0;
    long L = 0;
    // Every series index below this bound is either fitted or vanishes
    // identically; indices at or above it were dropped by the column cap.
    long fitted_below = 0;
    std::map<std::size_t, Coefficient> power_coeffs;  // j -> c_j at mu^(d + m - j)
    std::map<long, Coefficient> log_coeffs;           // l -> c'_l at mu^(d - nu - l) log mu
    std::map<long, Coefficient> const_coeffs;         // l -> c''_l at mu^(d - nu - l)
    double fit_condition = 0.0;
    double fit_residual = 0.0;
    std::vector<std::string> notes;

    [[nodiscard]] long power_exponent(std::size_t j) const {
        return sym_order + 2 * static_cast<long>(n) - static_cast<long>(j);
    }
    [[nodiscard]] long series_exponent(long l) const { return sym_order - sym_reg - l; }

    /// Value of all stored terms at a given parameter. Used when subtracting
    /// the known part of the model from samples and in residual diagnostics.
    [[nodiscard]] std::complex<double> evaluate_model(double mu) const {
        ComplexCompensatedSum acc;
        for (const auto& [j, c] : power_coeffs)
            acc.add(c.value * std::pow(mu, static_cast<double>(power_exponent(j))));
        double lg = std::log(mu);
        for (const auto& [l, c] : log_coeffs)
            acc.add(c.value * lg * std::pow(mu, static_cast<double>(series_exponent(l))));
        for (const auto& [l, c] : const_coeffs)
            acc.add(c.value * std::pow(mu, static_cast<double>(series_exponent(l))));
        return acc.value();
    }
};

// ============================================================================
// Controls
// ============================================================================

struct TraceSpec {
    quad::QuadratureSpec quadrature;
    CutoffSpec cutoff;
    double mu_min = 10.0;
    double mu_max = 320.0;
    std::size_t mu_points = 16;
    std::size_t max_fit_terms = 4;  // cap on least-squares columns

    void validate() const {
        quadrature.validate();
        cutoff.validate();
        if (!(mu_min >= 1.0) || !(mu_max > mu_min))
            throw std::invalid_argument("TraceSpec: need 1 <= mu_min < mu_max");
        if (mu_points < 2) throw std::invalid_argument("TraceSpec: need at least two samples");
    }

    [[nodiscard]] std::vector<double> mu_grid() const {
        std::vector<double> g(mu_points);
        double ratio = std::pow(mu_max / mu_min, 1.0 / static_cast<double>(mu_points - 1));
        double v = mu_min;
        for (std::size_t i = 0; i < mu_points; ++i) {
            g[i] = v;
            v *= ratio;
        }
        g.back() = mu_max;
        return g;
    }
};

// ============================================================================
// Exact sphere moments of the parameter series
// ============================================================================

/// Sphere moments S_{j,l} = (integral over S^(m-1) of q_{j,l}) as rational
/// multipliers of pi^(m/2), for all stored entries with l < L.
[[nodiscard]] inline std::map<std::pair<std::size_t, long>, GaussianRational> sphere_moments(
    const SymbolExpansion& a, long L) {
    auto series = symbols::mu_series(a, L);
    std::map<std::pair<std::size_t, long>, GaussianRational> out;
    for (const auto& e : series.entries) {
        GaussianRational s = quad::sphere_integral(e.coeff);
        if (!s.is_zero()) out.emplace(std::make_pair(e.j, e.ell), s);
    }
    return out;
}

/// Exact logarithmic coefficients: c'_l collects (2 pi)^-n sphere moments of
/// q_{j,l} at the unique index l = j - m - nu per component. With m = 2n the
/// pi powers cancel and the result is rational. Admissible indices are
/// reported even when the moment vanishes.
[[nodiscard]] inline std::map<long, GaussianRational> log_coefficients(const SymbolExpansion& a) {
    long m = 2 * static_cast<long>(a.n);
    std::map<long, GaussianRational> out;
    long l_max = -1;
    for (std::size_t j = 0; j < a.J(); ++j) {
        long l0 = static_cast<long>(j) - m - a.reg;
        if (l0 >= 0) {
            out.emplace(l0, GaussianRational());
            l_max = std::max(l_max, l0);
        }
    }
    if (l_max < 0) return out;
    auto series = symbols::mu_series(a, l_max + 1);
    Rational half_pow = poly::rational_pow(Rational(1, 2), static_cast<long>(a.n));
    for (const auto& e : series.entries) {
        long l0 = static_cast<long>(e.j) - m - a.reg;
        if (e.ell != l0) continue;
        out[e.ell] = out[e.ell] + quad::sphere_integral(e.coeff) * GaussianRational(half_pow);
    }
    return out;
}

// ============================================================================
// Numeric trace integral
// ============================================================================

/// (2 pi)^-n Integral over R^m of chi(|z|) a(z, mu) dz by polar product
/// quadrature. Without a cutoff the integrand must be integrable at the
/// origin (true for mu > 0 over an elliptic base). Requires order < -m for
/// decay at infinity.
[[nodiscard]] inline quad::QuadratureResult trace_integral_numeric(
    const SymbolExpansion& a, double mu, const quad::QuadratureSpec& spec,
    const std::optional<CutoffSpec>& cutoff = std::nullopt) {
    std::size_t m = 2 * a.n;
    if (a.order + static_cast<int>(m) >= 0)
        throw std::invalid_argument("trace_integral_numeric: symbol order must lie below -2n");
    if (mu < 0.0) throw std::invalid_argument("trace_integral_numeric: parameter must be nonnegative");

    symbols::CompiledExpansion ce(a);
    quad::QuadratureSpec qs = spec;
    if (cutoff) {
        qs.seed_points.push_back(cutoff->r0);
        qs.seed_points.push_back(cutoff->r1);
    }

    auto pts = quad::sphere_rule(m, qs.sphere_points_per_axis);
    auto radial = [&](double r) -> std::complex<double> {
        double chi = cutoff ? (*cutoff)(r) : 1.0;
        if (chi == 0.0) return {0.0, 0.0};
        ComplexCompensatedSum acc;
        std::vector<double> z(m);
        for (const auto& pt : pts) {
            for (std::size_t i = 0; i < m; ++i) z[i] = r * pt.w[i];
            acc.add(pt.weight * ce.evaluate(z, mu));
        }
        return chi * std::pow(r, static_cast<double>(m - 1)) * acc.value();
    };
    auto res = quad::integrate_halfline(radial, qs);
    double norm = std::pow(2.0 * std::numbers::pi, -static_cast<double>(a.n));
    res.value *= norm;
    res.imag *= norm;
    res.error_estimate *= norm;
    return res;
}

namespace detail {

/// Per-part data for evaluating the series tail of one component at mu = 1
/// without cancellation.
struct TailPart {
    int M = 0;
    long K = 0;  // series terms of this part already subtracted below L
    poly::CompiledBundle numer;
};

struct ComponentTail {
    std::vector<TailPart> parts;
    poly::CompiledBundle P;

    [[nodiscard]] std::complex<double> evaluate(std::span<const double> z) const {
        std::complex<double> p = P.evaluate(z);
        ComplexCompensatedSum acc;
        for (const auto& part : parts)
            acc.add(part.numer.evaluate(z) * symbols::series_tail(part.M, part.K, p));
        return acc.value();
    }
};

[[nodiscard]] inline ComponentTail make_component_tail(const SymbolExpansion& a, std::size_t j, long L) {
    ComponentTail t;
    const symbols::RBase base = a.base ? *a.base : symbols::RBase{1, TermBundle(2 * a.n)};
    t.P = poly::CompiledBundle(base.P);
    for (const auto& [M, numer] : a.components[j].parts()) {
        TailPart part;
        part.M = M;
        part.K = symbols::included_series_terms(a.order, a.reg, base.d, M, L);
        part.numer = poly::CompiledBundle(numer);
        t.parts.push_back(std::move(part));
    }
    return t;
}

}  // namespace detail

// ============================================================================
// Power coefficients
// ============================================================================

/// The coefficients c_j of mu^(d + m - j), one per component:
///   c_j = (2 pi)^-n [ Integral_{|z|>=1} a_j(z,1) dz
///                     + Integral_{|w|<=1} s_j(w,1) dw ]
///         + sum_{l < L, l != j-m-nu} S_{j,l} / (nu - j + l + m) / 2^n,
/// where s_j is the series tail below L. The sphere-moment sum is exact; the
/// two radial integrals carry a quadrature error estimate. No cutoff enters,
/// which is what makes these coefficients cutoff independent.
[[nodiscard]] inline std::map<std::size_t, Coefficient> power_coefficients(const SymbolExpansion& a, long L,
                                                                           const quad::QuadratureSpec& spec) {
    std::size_t m = 2 * a.n;
    if (a.order + static_cast<int>(m) >= 0)
        throw std::invalid_argument("power_coefficients: symbol order must lie below -2n");
    // Local integrability of the slowest tail |w|^(reg - (J-1) + L) at the
    // origin.
    if (a.reg - static_cast<long>(a.J()) + 1 + L + static_cast<long>(m) <= 0)
        throw std::invalid_argument("power_coefficients: truncation L too small for the component count");

    auto moments = sphere_moments(a, L);
    auto pts = quad::sphere_rule(m, spec.sphere_points_per_axis);
    symbols::CompiledExpansion ce(a);
    double norm = std::pow(2.0 * std::numbers::pi, -static_cast<double>(a.n));
    Rational half_pow = poly::rational_pow(Rational(1, 2), static_cast<long>(a.n));

    std::map<std::size_t, Coefficient> out;
    for (std::size_t j = 0; j < a.J(); ++j) {
        auto outer_f = [&](double r) -> std::complex<double> {
            ComplexCompensatedSum acc;
            std::vector<double> z(m);
            for (const auto& pt : pts) {
                for (std::size_t i = 0; i < m; ++i) z[i] = r * pt.w[i];
                acc.add(pt.weight * ce.evaluate_component(j, z, 1.0));
            }
            return std::pow(r, static_cast<double>(m - 1)) * acc.value();
        };
        auto outer = quad::integrate_tail(outer_f, 1.0, spec);

        auto tail = detail::make_component_tail(a, j, L);
        auto inner_f = [&](double r) -> std::complex<double> {
            ComplexCompensatedSum acc;
            std::vector<double> z(m);
            for (const auto& pt : pts) {
                for (std::size_t i = 0; i < m; ++i) z[i] = r * pt.w[i];
                acc.add(pt.weight * tail.evaluate(z));
            }
            return std::pow(r, static_cast<double>(m - 1)) * acc.value();
        };
        auto inner = quad::integrate_interval(inner_f, 0.0, 1.0, spec);

        GaussianRational moment_sum;
        long l0 = static_cast<long>(j) - static_cast<long>(m) - a.reg;
        for (long l = 0; l < L; ++l) {
            if (l == l0) continue;
            auto it = moments.find(std::make_pair(j, l));
            if (it == moments.end()) continue;
            Rational denom(a.reg - static_cast<long>(j) + l + static_cast<long>(m));
            moment_sum = moment_sum + it->second * GaussianRational(half_pow / denom);
        }

        Coefficient c;
        c.provenance = Provenance::quadrature;
        c.value = norm * (outer.complex_value() + inner.complex_value()) + moment_sum.to_complex();
        c.error = norm * (outer.error_estimate + inner.error_estimate);
        if (!outer.converged || !inner.converged)
            throw std::runtime_error("power_coefficients: radial quadrature did not converge");
        out.emplace(j, c);
    }
    return out;
}

// ============================================================================
// Cutoff-complement corrections
// ============================================================================

/// Constants relating the cutoff trace integral to the uncut one: for each
/// series index l the integral (2 pi)^-n Integral (1-chi)(|z|) q_{j,l}(z) dz
struct CutoffCorrections {
    std::map<long, std::complex<double>> shifts;  // series index -> uncut-minus-cut constant shift
    std::vector<long> divergent;                  // indices where the uncut integral diverges
};

/// summed over components. Subtracting the cutoff only shifts the series
/// family by these values, so adding them to the fitted constants recovers
/// the coefficients of the uncut trace, which is what spectral references
/// expand. The radial integral is finite only while m + reg - j + l > 0
/// wherever the sphere moment is nonzero. Where it is not, the uncut trace
/// itself diverges and no cutoff-free constant exists: those indices are
/// reported as divergent instead of shifted, since the constant genuinely
/// depends on the cutoff there while any log coefficient stays universal.
[[nodiscard]] inline CutoffCorrections cutoff_corrections(const SymbolExpansion& a, long L,
                                                          const CutoffSpec& cutoff,
                                                          const quad::QuadratureSpec& spec) {
    cutoff.validate();
    long m = 2 * static_cast<long>(a.n);
    auto moments = sphere_moments(a, L);
    double pi_half = std::pow(std::numbers::pi, static_cast<double>(a.n));
    double norm = std::pow(2.0 * std::numbers::pi, -static_cast<double>(a.n));

    CutoffCorrections out;
    for (const auto& [key, s] : moments) {
        auto [j, l] = key;
        if (m + a.reg - static_cast<long>(j) + l <= 0 &&
            std::find(out.divergent.begin(), out.divergent.end(), l) == out.divergent.end())
            out.divergent.push_back(l);
    }
    std::sort(out.divergent.begin(), out.divergent.end());
    for (const auto& [key, s] : moments) {
        auto [j, l] = key;
        if (std::binary_search(out.divergent.begin(), out.divergent.end(), l)) continue;
        long p = m + a.reg - static_cast<long>(j) + l;
        quad::QuadratureSpec qs = spec;
        qs.seed_points = {cutoff.r0};
        auto radial = [&](double r) -> std::complex<double> {
            return {(1.0 - cutoff(r)) * std::pow(r, static_cast<double>(p - 1)), 0.0};
        };
        auto k = quad::integrate_interval(radial, 0.0, cutoff.r1, qs);
        if (!k.converged) throw std::runtime_error("cutoff_corrections: radial quadrature did not converge");
        out.shifts[l] += norm * pi_half * k.value * s.to_complex();
    }
    return out;
}

// ============================================================================
// Least-squares recovery of the constant coefficients
// ============================================================================

struct FitTermSpec {
    double exponent = 0.0;   // power of mu
    bool log_factor = false; // multiply by log mu
};

struct FitOutcome {
    std::vector<std::complex<double>> coefficients;  // aligned with the basis
    double residual_norm = 0.0;
    double condition_number = 0.0;
    std::vector<double> residuals;  // per-sample |data - model| after the fit
};

/// Least squares for the coefficients of the supplied basis terms after
/// subtracting a known model from the samples. Columns are normalized before
/// the solve; the condition number reported is that of the normalized matrix.
[[nodiscard]] inline FitOutcome fit_constant_coefficients(
    const std::vector<std::pair<double, std::complex<double>>>& samples,
    const std::function<std::complex<double>(double)>& known, const std::vector<FitTermSpec>& basis) {
    if (basis.empty()) {
        FitOutcome out;
        out.condition_number = 1.0;
        CompensatedSum rn;
        for (const auto& [mu, val] : samples) {
            std::complex<double> r = val - (known ? known(mu) : std::complex<double>{0.0, 0.0});
            out.residuals.push_back(std::abs(r));
            rn.add(std::norm(r));
        }
        out.residual_norm = std::sqrt(rn.value());
        return out;
    }
    if (samples.size() < 2 * basis.size())
        throw std::invalid_argument("fit_constant_coefficients: need at least twice as many samples as terms");

    const auto S = static_cast<Eigen::Index>(samples.size());
    const auto B = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd A(S, B);
    Eigen::VectorXcd y(S);
    for (Eigen::Index i = 0; i < S; ++i) {
        double mu = samples[static_cast<std::size_t>(i)].first;
        std::complex<double> rhs = samples[static_cast<std::size_t>(i)].second -
                                   (known ? known(mu) : std::complex<double>{0.0, 0.0});
        y(i) = rhs;
        for (Eigen::Index b = 0; b < B; ++b) {
            const auto& t = basis[static_cast<std::size_t>(b)];
            double v = std::pow(mu, t.exponent);
            if (t.log_factor) v *= std::log(mu);
            A(i, b) = v;
        }
    }

    Eigen::VectorXd scale(B);
    for (Eigen::Index b = 0; b < B; ++b) {
        double nrm = A.col(b).norm();
        scale(b) = nrm > 0.0 ? nrm : 1.0;
        A.col(b) /= scale(b);
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd xr = svd.solve(y.real().eval());
    Eigen::VectorXd xi = svd.solve(y.imag().eval());

    FitOutcome out;
    out.coefficients.resize(static_cast<std::size_t>(B));
    for (Eigen::Index b = 0; b < B; ++b)
        out.coefficients[static_cast<std::size_t>(b)] = std::complex<double>(xr(b), xi(b)) / scale(b);
    double smin = svd.singularValues()(B - 1);
    double smax = svd.singularValues()(0);
    out.condition_number = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();

    Eigen::VectorXd fitted_re = A * xr;
    Eigen::VectorXd fitted_im = A * xi;
    CompensatedSum rn;
    for (Eigen::Index i = 0; i < S; ++i) {
        double r = std::abs(y(i) - std::complex<double>(fitted_re(i), fitted_im(i)));
        out.residuals.push_back(r);
        rn.add(r * r);
    }
    out.residual_norm = std::sqrt(rn.value());
    return out;
}

// ============================================================================
// Lambda view and oracle-facing reshaping
// ============================================================================

struct LambdaTerm {
    Rational exponent;  // power of lambda = mu^d
    std::complex<double> value{0.0, 0.0};
    bool has_log = false;
    std::complex<double> log_value{0.0, 0.0};  // coefficient of lambda^e log lambda
    // A slot is complete when every family that can feed this exponent
    // (scaling part, series constant, log slot) lies inside the computed
    // truncation. Incomplete slots are partial sums and move with J and L.
    bool complete = true;
    // Set when the uncut integral diverges at this exponent. The constant
    // then has no cutoff-free value, only the log coefficient is universal,
    // and the slot cannot be compared against a cutoff-free reference.
    bool cutoff_dependent = false;
    std::vector<std::string> sources;
};

struct LambdaView {
    int d = 1;
    std::vector<LambdaTerm> terms;  // sorted by descending exponent

    [[nodiscard]] const LambdaTerm* find(const Rational& e) const {
        for (const auto& t : terms)
            if (t.exponent == e) return &t;
        return nullptr;
    }
};

/// Re-index the expansion in lambda = mu^d: mu^e becomes lambda^(e/d) and
/// log mu becomes (1/d) log lambda. Terms with equal lambda exponent merge,
/// which is where distinct mu families meet (power terms at d+m-j and series
/// terms at d-nu-l can share an exponent).
[[nodiscard]] inline LambdaView lambda_view(const TraceExpansion& te, int d) {
    if (d < 1) throw std::invalid_argument("lambda_view: base degree must be positive");
    std::map<Rational, LambdaTerm, std::greater<Rational>> merged;
    auto slot = [&](const Rational& e) -> LambdaTerm& {
        auto [it, inserted] = merged.try_emplace(e);
        if (inserted) it->second.exponent = e;
        return it->second;
    };
    for (const auto& [j, c] : te.power_coeffs) {
        Rational e = poly::make_fraction(te.power_exponent(j), d);
        auto& t = slot(e);
        t.value += c.value;
        t.sources.push_back("c_" + std::to_string(j));
    }
    for (const auto& [l, c] : te.const_coeffs) {
        Rational e = poly::make_fraction(te.series_exponent(l), d);
        auto& t = slot(e);
        t.value += c.value;
        t.sources.push_back("c''_" + std::to_string(l));
    }
    for (const auto& [l, c] : te.log_coeffs) {
        Rational e = poly::make_fraction(te.series_exponent(l), d);
        auto& t = slot(e);
        t.has_log = true;
        t.log_value += c.value / static_cast<double>(d);
        t.sources.push_back("c'_" + std::to_string(l));
    }
    long max_j = te.power_coeffs.empty() ? -1 : static_cast<long>(te.power_coeffs.rbegin()->first);
    long m = 2 * static_cast<long>(te.n);
    for (auto& [e, t] : merged) {
        Rational me = e * Rational(d);
        if (me.get_den() != 1) continue;  // never produced by the merges above
        long mu_exp = static_cast<long>(me.get_num().get_si());
        long pj = static_cast<long>(te.sym_order) + m - mu_exp;
        long sl = static_cast<long>(te.sym_order) - static_cast<long>(te.sym_reg) - mu_exp;
        bool power_ok = pj < 0 || pj <= max_j;
        bool series_ok = sl < 0 || sl < te.fitted_below;
        bool log_ok = sl < 0 || sl + m + static_cast<long>(te.sym_reg) <= max_j;
        t.complete = power_ok && series_ok && log_ok;
    }
    LambdaView out;
    out.d = d;
    out.terms.reserve(merged.size());
    for (auto& [e, t] : merged) out.terms.push_back(std::move(t));
    return out;
}

// ============================================================================
// End-to-end pipeline
// ============================================================================

struct TraceRun {
    TraceExpansion expansion;  // coefficients of the sampled (cutoff) integral
    LambdaView lambda;         // cutoff-corrected view in lambda = mu^d, oracle comparable
    std::vector<std::pair<double, std::complex<double>>> samples;  // (mu, trace integral)
    std::map<long, std::complex<double>> chi_corrections;  // series-family shifts applied in lambda
    std::vector<long> chi_divergent;  // series indices with no cutoff-free constant
    symbols::EllipticityReport ellipticity;
    std::vector<FitTermSpec> fit_basis;
    double residual_slope = std::numeric_limits<double>::quiet_NaN();
    bool samples_converged = true;  // every sample integral met its tolerance
    std::vector<std::string> notes;
};

namespace detail {

/// Log-log slope of per-sample residuals against mu, skipping values at the
/// numeric noise floor.
[[nodiscard]] inline double residual_slope(const std::vector<std::pair<double, std::complex<double>>>& samples,
                                           const std::vector<double>& residuals, double floor) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < samples.size() && i < residuals.size(); ++i)
        if (residuals[i] > floor) pts.emplace_back(std::log(samples[i].first), std::log(residuals[i]));
    if (pts.size() < 3) return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double nn = static_cast<double>(pts.size());
    double denom = nn * sxx - sx * sx;
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return (nn * sxy - sx * sy) / denom;
}

}  // namespace detail

/// Full pipeline for Tr q(x,D) (mu^d - p0(x,D))^-N: compose the operator
/// parametrix to N-th power with q, truncate to J components, then extract
/// exact log coefficients, quadrature power coefficients, sampled trace
/// integrals, and fitted constants. Refuses inputs whose symbol order does
/// not give a trace-class truncation or whose principal symbol fails the
/// spectral-ray check.
[[nodiscard]] inline TraceRun resolvent_trace_expansion(const symbols::EllipticOperator& p0,
                                                        const SymbolExpansion& q, int N, std::size_t J,
                                                        long L, const TraceSpec& spec) {
    spec.validate();
    if (N < 1) throw std::invalid_argument("resolvent_trace_expansion: power must be positive");
    if (q.base) throw std::invalid_argument("resolvent_trace_expansion: weight symbol must not carry the parameter");
    long m = 2 * static_cast<long>(p0.n());
    long traced_order = static_cast<long>(q.order) - static_cast<long>(p0.d()) * N;
    if (traced_order + m >= 0)
        throw std::invalid_argument(
            "resolvent_trace_expansion: need order - d N < -2n for a trace-class truncation");

    TraceRun run;
    run.ellipticity = symbols::check_ellipticity(p0);
    if (!run.ellipticity.elliptic) {
        std::ostringstream os;
        os << "principal symbol meets the spectral ray near (";
        for (double v : run.ellipticity.witness) os << v << " ";
        os << ")";
        throw std::runtime_error("resolvent_trace_expansion: " + os.str());
    }

    auto b = symbols::parametrix(p0, J);
    auto bn = symbols::symbol_power(b, N, J);
    auto a = symbols::leibniz_truncated(q, bn, J);

    TraceExpansion& te = run.expansion;
    te.n = p0.n();
    te.sym_order = a.order;
    te.sym_reg = a.reg;
    te.J = a.J();
    te.L = L;

    for (const auto& [l, v] : log_coefficients(a)) {
        Coefficient c;
        c.provenance = Provenance::exact;
        c.exact_value = v;
        c.value = v.to_complex();
        te.log_coeffs.emplace(l, c);
    }
    te.power_coeffs = power_coefficients(a, L, spec.quadrature);

    for (double mu : spec.mu_grid()) {
        auto sample = trace_integral_numeric(a, mu, spec.quadrature, spec.cutoff);
        run.samples_converged = run.samples_converged && sample.converged;
        run.samples.emplace_back(mu, sample.complex_value());
    }
    if (!run.samples_converged)
        run.notes.push_back("one or more sample integrals stopped at the interval cap before reaching tolerance");

    // Fit columns: series indices whose sphere moments are not all zero, the
    // only indices where the constant coefficients can be nonzero. Smallest
    // indices first; they carry the largest exponents and dominate.
    auto moments = sphere_moments(a, L);
    std::vector<long> live_indices;
    for (long l = 0; l < L; ++l) {
        bool live = false;
        for (std::size_t j = 0; j < te.J && !live; ++j)
            if (moments.count(std::make_pair(j, l))) live = true;
        if (live) live_indices.push_back(l);
    }
    std::vector<long> fit_indices(
        live_indices.begin(),
        live_indices.begin() + static_cast<long>(std::min(live_indices.size(), spec.max_fit_terms)));
    te.fitted_below = live_indices.size() > spec.max_fit_terms ? live_indices[spec.max_fit_terms] : L;
    for (long l : fit_indices)
        run.fit_basis.push_back(FitTermSpec{static_cast<double>(te.series_exponent(l)), false});

    auto known = [&te](double mu) { return te.evaluate_model(mu); };
    auto fit = fit_constant_coefficients(run.samples, known, run.fit_basis);
    te.fit_condition = fit.condition_number;
    te.fit_residual = fit.residual_norm;
    for (std::size_t i = 0; i < fit_indices.size(); ++i) {
        Coefficient c;
        c.provenance = Provenance::fitted;
        c.value = fit.coefficients[i];
        c.error = fit.residual_norm;
        te.const_coeffs.emplace(fit_indices[i], c);
    }

    // Residuals of the completed model, for the decay-rate diagnostic.
    std::vector<double> final_residuals;
    for (const auto& [mu, val] : run.samples) final_residuals.push_back(std::abs(val - te.evaluate_model(mu)));
    run.residual_slope = detail::residual_slope(run.samples, final_residuals, 1e-15);

    if (a.base) {
        run.notes.push_back(
            "series limit coefficients follow the positive sign convention fixed by the convolution "
            "identity sum_{j+k=l} brace_j(b) # brace_k(p) = delta_{0l}");
    }
    std::ostringstream os;
    os << "fit over " << run.fit_basis.size() << " column(s), condition " << te.fit_condition
       << ", residual " << te.fit_residual;
    run.notes.push_back(os.str());

    // The lambda view targets the uncut trace: shift the series constants by
    // the exact chi-complement integrals before merging. The reported
    // const_coeffs stay as fitted so they describe the sampled integral.
    auto corr = cutoff_corrections(a, L, spec.cutoff, spec.quadrature);
    run.chi_corrections = std::move(corr.shifts);
    run.chi_divergent = std::move(corr.divergent);
    TraceExpansion corrected = te;
    for (const auto& [l, delta] : run.chi_corrections) {
        auto [it, inserted] = corrected.const_coeffs.try_emplace(l);
        if (inserted) it->second.provenance = Provenance::quadrature;
        it->second.value += delta;
    }
    run.lambda = lambda_view(corrected, p0.d());
    for (long l : run.chi_divergent) {
        Rational e = poly::make_fraction(te.series_exponent(l), p0.d());
        for (auto& t : run.lambda.terms)
            if (t.exponent == e) t.cutoff_dependent = true;
    }
    if (!run.chi_divergent.empty())
        run.notes.push_back(
            "the uncut integral diverges at " + std::to_string(run.chi_divergent.size()) +
            " series index(es); the constants there keep their cutoff dependence");
    return run;
}

}  // namespace shubin::trace
