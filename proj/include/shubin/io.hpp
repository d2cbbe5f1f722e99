#pragma once

// Configuration schema, run driver, and serialization for the batch front
// end. A run is described by one JSON document (schema "shubin-trace/1")
// naming the operator polynomial, the weight symbol, truncation depths,
// cutoff and quadrature controls, and an optional comparison against the
// oscillator eigenvalue sum. Outputs are a structured JSON report plus
// comma-separated tables. Exact rationals travel as "p/q" strings, complex
// values as [re, im] pairs, and everything is emitted in a fixed order with
// full precision so rerunning an identical config is byte-identical.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shubin/calculus.hpp"
#include "shubin/oscillator.hpp"
#include "shubin/quadrature.hpp"
#include "shubin/rational.hpp"
#include "shubin/symbol.hpp"
#include "shubin/term_bundle.hpp"
#include "shubin/trace.hpp"

namespace shubin::io {

using json = nlohmann::ordered_json;
using poly::GaussianRational;
using poly::Rational;
using poly::TermBundle;

inline constexpr const char* kSchema = "shubin-trace/1";

// ============================================================================
// Exact scalars and term bundles in JSON
// ============================================================================

/// Rationals are accepted as JSON integers or "p/q" strings. Floats are
/// rejected outright: a config that writes 0.5 for 1/2 would silently pass
/// through binary rounding, and these fields feed exact arithmetic.
[[nodiscard]] inline Rational rational_from_json(const json& v, const std::string& where) {
    if (v.is_number_integer()) return Rational(static_cast<long>(v.get<long long>()));
    if (v.is_string()) {
        try {
            return poly::parse_rational(v.get<std::string>());
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(where + ": " + e.what());
        }
    }
    throw std::invalid_argument(where + ": expected an integer or a \"p/q\" string, got " + v.dump());
}

/// Canonical emission: a plain JSON integer when that is lossless, otherwise
/// a "p/q" string.
[[nodiscard]] inline json rational_to_json(const Rational& q) {
    if (q.get_den() == 1 && q.get_num().fits_slong_p())
        return json(static_cast<long long>(q.get_num().get_si()));
    return json(poly::to_string(q));
}

/// Result files always spell rationals as strings, even integers, so exact
/// columns are typed uniformly.
[[nodiscard]] inline json rational_string(const Rational& q) { return json(poly::to_string(q)); }

[[nodiscard]] inline json complex_to_json(const std::complex<double>& z) {
    return json::array({z.real(), z.imag()});
}

/// One term is [re, im, [exponents...], radial_power].
[[nodiscard]] inline json bundle_to_json(const TermBundle& b) {
    json arr = json::array();
    for (const auto& t : b.terms()) {
        json term = json::array();
        term.push_back(rational_to_json(t.coeff.re()));
        term.push_back(rational_to_json(t.coeff.im()));
        term.push_back(json(t.exponents));
        term.push_back(rational_to_json(t.radial_power));
        arr.push_back(std::move(term));
    }
    return arr;
}

[[nodiscard]] inline TermBundle bundle_from_json(std::size_t nvars, const json& v, const std::string& where) {
    if (!v.is_array()) throw std::invalid_argument(where + ": expected an array of terms");
    TermBundle b(nvars);
    for (const auto& term : v) {
        if (!term.is_array() || term.size() != 4)
            throw std::invalid_argument(where + ": each term is [re, im, [exponents...], radial_power]");
        GaussianRational c(rational_from_json(term[0], where + "/re"),
                           rational_from_json(term[1], where + "/im"));
        if (!term[2].is_array())
            throw std::invalid_argument(where + ": exponents must be an array of integers");
        std::vector<int> exps;
        exps.reserve(term[2].size());
        for (const auto& e : term[2]) {
            if (!e.is_number_integer())
                throw std::invalid_argument(where + ": exponents must be an array of integers");
            exps.push_back(e.get<int>());
        }
        b.add_term(std::move(c), std::move(exps), rational_from_json(term[3], where + "/radial_power"));
    }
    return b;
}

// ============================================================================
// Run configuration
// ============================================================================

struct MuGrid {
    double min = 10.0;
    double max = 320.0;
    std::size_t points = 12;
};

struct OracleOptions {
    bool enabled = false;
    double tolerance = 1e-4;
    std::size_t depth = 3;  // reference exponents lambda^(n-N) .. lambda^(n-N-depth+1)
};

struct OutputNames {
    std::string results = "result.json";
    std::string coefficients = "coefficients.csv";
    std::string samples = "mu_samples.csv";
    std::string log = "run_log.txt";
};

struct RunConfig {
    std::size_t n = 1;  // space dimension; symbols live on R^(2n)
    int d = 2;          // declared operator order, cross-checked against p0
    TermBundle p0;      // operator polynomial in 2n variables
    TermBundle q;       // weight symbol, polynomial or single homogeneous bundle
    int q_order = 0;    // declared weight order
    int N = 2;          // resolvent power
    std::size_t J = 4;  // parametrix components
    long L = 6;         // series depth for log/constant families
    symbols::CutoffSpec cutoff;
    quad::QuadratureSpec quadrature;
    MuGrid mu;
    OracleOptions oracle;
    OutputNames outputs;

    void validate() const;
};

/// Lift the configured weight to a symbol expansion. Polynomials split into
/// exact homogeneous components; anything carrying genuine radial weights
/// must be homogeneous of a single (possibly fractional or negative) degree
/// so the engine can treat it as its own leading component.
[[nodiscard]] inline symbols::SymbolExpansion weight_expansion(const RunConfig& cfg) {
    if (cfg.q.is_zero()) throw std::invalid_argument("config: weight symbol must be nonzero");
    if (cfg.q.is_polynomial()) {
        auto e = symbols::SymbolExpansion::from_polynomial(cfg.n, cfg.q);
        if (e.order != cfg.q_order)
            throw std::invalid_argument("config: declared weight order " + std::to_string(cfg.q_order) +
                                        " does not match the polynomial degree " + std::to_string(e.order));
        return e;
    }
    auto parts = cfg.q.homogeneous_parts();
    if (parts.size() != 1)
        throw std::invalid_argument(
            "config: a weight with radial factors must be homogeneous of a single degree");
    if (parts.begin()->first != Rational(cfg.q_order))
        throw std::invalid_argument("config: declared weight order " + std::to_string(cfg.q_order) +
                                    " does not match the homogeneity degree " +
                                    poly::to_string(parts.begin()->first));
    return symbols::SymbolExpansion::single(cfg.n, cfg.q_order, cfg.q_order,
                                            symbols::RationalSymbol::from_bundle(cfg.q));
}

inline void RunConfig::validate() const {
    if (n < 1) throw std::invalid_argument("config: dimension n must be at least 1");
    if (d < 1) throw std::invalid_argument("config: operator order d must be at least 1");
    if (N < 1) throw std::invalid_argument("config: resolvent power N must be at least 1");
    if (J < 1) throw std::invalid_argument("config: truncation J must be at least 1");
    if (L < 1) throw std::invalid_argument("config: series depth L must be at least 1");
    if (p0.nvars() != 2 * n)
        throw std::invalid_argument("config: operator polynomial must live in 2n variables");
    if (q.nvars() != 2 * n)
        throw std::invalid_argument("config: weight symbol must live in 2n variables");
    cutoff.validate();
    quadrature.validate();
    if (!(mu.min >= 1.0) || !(mu.max > mu.min))
        throw std::invalid_argument("config: need 1 <= mu_grid.min < mu_grid.max");
    if (mu.points < 2) throw std::invalid_argument("config: mu_grid needs at least two points");

    auto op = symbols::EllipticOperator::from_polynomial(n, p0);
    if (op.d() != d)
        throw std::invalid_argument("config: declared operator order " + std::to_string(d) +
                                    " does not match the polynomial order " + std::to_string(op.d()));
    (void)weight_expansion(*this);
    long m = 2 * static_cast<long>(n);
    if (static_cast<long>(q_order) - static_cast<long>(d) * N + m >= 0)
        throw std::invalid_argument("config: need q_order - d*N < -2n for a trace-class truncation");

    if (oracle.enabled) {
        if (oracle.depth < 1) throw std::invalid_argument("config: oracle depth must be at least 1");
        if (!(oracle.tolerance > 0.0))
            throw std::invalid_argument("config: oracle tolerance must be positive");
        if (N < static_cast<int>(n) + 1)
            throw std::invalid_argument("config: the eigenvalue-sum reference needs N >= n+1");
        TermBundle ho(2 * n);
        for (std::size_t i = 0; i < 2 * n; ++i) {
            std::vector<int> e(2 * n, 0);
            e[i] = 2;
            ho.add_term(GaussianRational(-1), std::move(e), Rational(0));
        }
        if (!(p0 == ho))
            throw std::invalid_argument(
                "config: the eigenvalue-sum reference is only available for p0 = -|x|^2 - |xi|^2");
        if (!(q == TermBundle::constant(2 * n, GaussianRational(1))))
            throw std::invalid_argument("config: the eigenvalue-sum reference needs weight q = 1");
    }
}

// ============================================================================
// Parsing and canonical emission
// ============================================================================

namespace detail {

[[nodiscard]] inline const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw std::invalid_argument(where + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw std::invalid_argument(where + ": missing field '" + key + "'");
    return *it;
}

[[nodiscard]] inline long long integer_at(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number_integer())
        throw std::invalid_argument(where + "/" + key + ": expected an integer");
    return v.get<long long>();
}

[[nodiscard]] inline double number_at(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number()) throw std::invalid_argument(where + "/" + key + ": expected a number");
    return v.get<double>();
}

[[nodiscard]] inline bool boolean_at(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_boolean()) throw std::invalid_argument(where + "/" + key + ": expected a boolean");
    return v.get<bool>();
}

[[nodiscard]] inline std::string string_at(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_string()) throw std::invalid_argument(where + "/" + key + ": expected a string");
    return v.get<std::string>();
}

inline void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                           const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find_if(known.begin(), known.end(),
                         [&key](const char* k) { return key == k; }) == known.end())
            throw std::invalid_argument(where + ": unknown field '" + key + "'");
    }
}

}  // namespace detail

[[nodiscard]] inline json config_to_json(const RunConfig& cfg) {
    json j;
    j["schema"] = kSchema;
    j["n"] = cfg.n;
    j["operator"] = json{{"d", cfg.d}, {"p0", bundle_to_json(cfg.p0)}};
    j["weight"] = json{{"order", cfg.q_order}, {"q", bundle_to_json(cfg.q)}};
    j["resolvent_power"] = cfg.N;
    j["truncation"] = json{{"J", cfg.J}, {"L", cfg.L}};
    j["cutoff"] = json{{"r0", cfg.cutoff.r0},
                       {"r1", cfg.cutoff.r1},
                       {"kind", cfg.cutoff.kind == symbols::CutoffSpec::Kind::sharp ? "sharp" : "smooth_bump"}};
    j["quadrature"] = json{{"abs_tol", cfg.quadrature.abs_tol},
                           {"rel_tol", cfg.quadrature.rel_tol},
                           {"max_intervals", cfg.quadrature.max_intervals},
                           {"sphere_points_per_axis", cfg.quadrature.sphere_points_per_axis},
                           {"seed_points", json(cfg.quadrature.seed_points)}};
    j["mu_grid"] = json{{"min", cfg.mu.min}, {"max", cfg.mu.max}, {"points", cfg.mu.points}};
    j["oracle"] = json{{"enabled", cfg.oracle.enabled},
                       {"tolerance", cfg.oracle.tolerance},
                       {"depth", cfg.oracle.depth}};
    j["outputs"] = json{{"results", cfg.outputs.results},
                        {"coefficients", cfg.outputs.coefficients},
                        {"samples", cfg.outputs.samples},
                        {"log", cfg.outputs.log}};
    return j;
}

[[nodiscard]] inline RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("config: document must be a JSON object");
    detail::reject_unknown(doc,
                           {"schema", "n", "operator", "weight", "resolvent_power", "truncation",
                            "cutoff", "quadrature", "mu_grid", "oracle", "outputs"},
                           "config");
    if (detail::string_at(doc, "schema", "config") != kSchema)
        throw std::invalid_argument(std::string("config: schema must be \"") + kSchema + "\"");

    RunConfig cfg;
    long long n = detail::integer_at(doc, "n", "config");
    if (n < 1) throw std::invalid_argument("config: dimension n must be at least 1");
    cfg.n = static_cast<std::size_t>(n);

    const json& op = detail::require(doc, "operator", "config");
    detail::reject_unknown(op, {"d", "p0"}, "config/operator");
    cfg.d = static_cast<int>(detail::integer_at(op, "d", "config/operator"));
    cfg.p0 = bundle_from_json(2 * cfg.n, detail::require(op, "p0", "config/operator"), "config/operator/p0");

    const json& w = detail::require(doc, "weight", "config");
    detail::reject_unknown(w, {"order", "q"}, "config/weight");
    cfg.q_order = static_cast<int>(detail::integer_at(w, "order", "config/weight"));
    cfg.q = bundle_from_json(2 * cfg.n, detail::require(w, "q", "config/weight"), "config/weight/q");

    cfg.N = static_cast<int>(detail::integer_at(doc, "resolvent_power", "config"));

    const json& tr = detail::require(doc, "truncation", "config");
    detail::reject_unknown(tr, {"J", "L"}, "config/truncation");
    long long J = detail::integer_at(tr, "J", "config/truncation");
    if (J < 0) throw std::invalid_argument("config/truncation: J must be nonnegative");
    cfg.J = static_cast<std::size_t>(J);
    cfg.L = static_cast<long>(detail::integer_at(tr, "L", "config/truncation"));

    if (doc.contains("cutoff")) {
        const json& c = doc["cutoff"];
        detail::reject_unknown(c, {"r0", "r1", "kind"}, "config/cutoff");
        cfg.cutoff.r0 = detail::number_at(c, "r0", "config/cutoff");
        cfg.cutoff.r1 = detail::number_at(c, "r1", "config/cutoff");
        std::string kind = detail::string_at(c, "kind", "config/cutoff");
        if (kind == "sharp")
            cfg.cutoff.kind = symbols::CutoffSpec::Kind::sharp;
        else if (kind == "smooth_bump")
            cfg.cutoff.kind = symbols::CutoffSpec::Kind::smooth_bump;
        else
            throw std::invalid_argument("config/cutoff: kind must be \"smooth_bump\" or \"sharp\"");
    }

    if (doc.contains("quadrature")) {
        const json& qd = doc["quadrature"];
        detail::reject_unknown(qd, {"abs_tol", "rel_tol", "max_intervals", "sphere_points_per_axis", "seed_points"},
                               "config/quadrature");
        cfg.quadrature.abs_tol = detail::number_at(qd, "abs_tol", "config/quadrature");
        cfg.quadrature.rel_tol = detail::number_at(qd, "rel_tol", "config/quadrature");
        long long mi = detail::integer_at(qd, "max_intervals", "config/quadrature");
        long long sp = detail::integer_at(qd, "sphere_points_per_axis", "config/quadrature");
        if (mi < 1 || sp < 1)
            throw std::invalid_argument("config/quadrature: counts must be positive");
        cfg.quadrature.max_intervals = static_cast<std::size_t>(mi);
        cfg.quadrature.sphere_points_per_axis = static_cast<std::size_t>(sp);
        cfg.quadrature.seed_points.clear();
        const json& seeds = detail::require(qd, "seed_points", "config/quadrature");
        if (!seeds.is_array())
            throw std::invalid_argument("config/quadrature: seed_points must be an array of numbers");
        for (const auto& s : seeds) {
            if (!s.is_number())
                throw std::invalid_argument("config/quadrature: seed_points must be an array of numbers");
            cfg.quadrature.seed_points.push_back(s.get<double>());
        }
    }

    if (doc.contains("mu_grid")) {
        const json& mg = doc["mu_grid"];
        detail::reject_unknown(mg, {"min", "max", "points"}, "config/mu_grid");
        cfg.mu.min = detail::number_at(mg, "min", "config/mu_grid");
        cfg.mu.max = detail::number_at(mg, "max", "config/mu_grid");
        long long pts = detail::integer_at(mg, "points", "config/mu_grid");
        if (pts < 0) throw std::invalid_argument("config/mu_grid: points must be nonnegative");
        cfg.mu.points = static_cast<std::size_t>(pts);
    }

    if (doc.contains("oracle")) {
        const json& oc = doc["oracle"];
        detail::reject_unknown(oc, {"enabled", "tolerance", "depth"}, "config/oracle");
        cfg.oracle.enabled = detail::boolean_at(oc, "enabled", "config/oracle");
        cfg.oracle.tolerance = detail::number_at(oc, "tolerance", "config/oracle");
        long long depth = detail::integer_at(oc, "depth", "config/oracle");
        if (depth < 0) throw std::invalid_argument("config/oracle: depth must be nonnegative");
        cfg.oracle.depth = static_cast<std::size_t>(depth);
    }

    if (doc.contains("outputs")) {
        const json& out = doc["outputs"];
        detail::reject_unknown(out, {"results", "coefficients", "samples", "log"}, "config/outputs");
        cfg.outputs.results = detail::string_at(out, "results", "config/outputs");
        cfg.outputs.coefficients = detail::string_at(out, "coefficients", "config/outputs");
        cfg.outputs.samples = detail::string_at(out, "samples", "config/outputs");
        cfg.outputs.log = detail::string_at(out, "log", "config/outputs");
    }
    return cfg;
}

[[nodiscard]] inline json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config: '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

// ============================================================================
// Execution
// ============================================================================

struct RunResult {
    trace::TraceRun run;
    std::optional<oracle::OracleReport> oracle_report;
    std::map<long, Rational> oracle_reference;
    std::vector<std::string> messages;  // driver-level diagnostics
    double seconds = 0.0;               // wall time; kept out of the results file
};

[[nodiscard]] inline RunResult execute(const RunConfig& cfg) {
    cfg.validate();
    auto t0 = std::chrono::steady_clock::now();

    RunResult res;
    auto op = symbols::EllipticOperator::from_polynomial(cfg.n, cfg.p0);
    auto weight = weight_expansion(cfg);
    trace::TraceSpec spec;
    spec.quadrature = cfg.quadrature;
    spec.cutoff = cfg.cutoff;
    spec.mu_min = cfg.mu.min;
    spec.mu_max = cfg.mu.max;
    spec.mu_points = cfg.mu.points;
    res.run = trace::resolvent_trace_expansion(op, weight, cfg.N, cfg.J, cfg.L, spec);
    if (!res.run.samples_converged)
        throw std::runtime_error(
            "quadrature did not converge on every sample; raise max_intervals or loosen tolerances");

    if (cfg.oracle.enabled) {
        res.oracle_reference =
            oracle::oscillator_expansion_reference(static_cast<int>(cfg.n), cfg.N, cfg.oracle.depth);
        res.oracle_report =
            oracle::compare_expansions(res.run.lambda, res.oracle_reference, cfg.oracle.tolerance);
    }

    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

// ============================================================================
// Result emission
// ============================================================================

namespace detail {

[[nodiscard]] inline json finite_or_null(double v) {
    if (std::isfinite(v)) return json(v);
    return json(nullptr);
}

[[nodiscard]] inline json coefficient_json(long index, long mu_exponent, const trace::Coefficient& c) {
    json j;
    j["index"] = index;
    j["mu_exponent"] = mu_exponent;
    j["value"] = complex_to_json(c.value);
    j["provenance"] = trace::provenance_name(c.provenance);
    j["error"] = c.error;
    if (c.exact_value)
        j["exact"] = json::array({rational_string(c.exact_value->re()), rational_string(c.exact_value->im())});
    return j;
}

[[nodiscard]] inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

[[nodiscard]] inline json result_json(const RunConfig& cfg, const RunResult& res) {
    const trace::TraceExpansion& te = res.run.expansion;
    json j;
    j["schema"] = kSchema;
    j["config"] = config_to_json(cfg);

    json exp;
    exp["n"] = te.n;
    exp["symbol_order"] = te.sym_order;
    exp["symbol_regularity"] = te.sym_reg;
    exp["J"] = te.J;
    exp["L"] = te.L;
    exp["fitted_below"] = te.fitted_below;
    json power = json::array();
    for (const auto& [jj, c] : te.power_coeffs)
        power.push_back(detail::coefficient_json(static_cast<long>(jj), te.power_exponent(jj), c));
    exp["power"] = std::move(power);
    json logs = json::array();
    for (const auto& [l, c] : te.log_coeffs)
        logs.push_back(detail::coefficient_json(l, te.series_exponent(l), c));
    exp["log"] = std::move(logs);
    json consts = json::array();
    for (const auto& [l, c] : te.const_coeffs)
        consts.push_back(detail::coefficient_json(l, te.series_exponent(l), c));
    exp["constant"] = std::move(consts);
    exp["fit"] = json{{"columns", res.run.fit_basis.size()},
                      {"condition", detail::finite_or_null(te.fit_condition)},
                      {"residual", detail::finite_or_null(te.fit_residual)}};
    j["expansion"] = std::move(exp);

    json lam;
    lam["base_degree"] = res.run.lambda.d;
    json lterms = json::array();
    for (const auto& t : res.run.lambda.terms) {
        json lt;
        lt["exponent"] = rational_string(t.exponent);
        lt["value"] = complex_to_json(t.value);
        if (t.has_log) lt["log_value"] = complex_to_json(t.log_value);
        lt["complete"] = t.complete;
        lt["cutoff_dependent"] = t.cutoff_dependent;
        lt["sources"] = json(t.sources);
        lterms.push_back(std::move(lt));
    }
    lam["terms"] = std::move(lterms);
    j["lambda"] = std::move(lam);

    json corr;
    json applied = json::array();
    for (const auto& [l, v] : res.run.chi_corrections)
        applied.push_back(json{{"index", l}, {"value", complex_to_json(v)}});
    corr["applied"] = std::move(applied);
    corr["divergent_indices"] = json(res.run.chi_divergent);
    j["cutoff_corrections"] = std::move(corr);

    json diag;
    diag["ellipticity"] = json{{"elliptic", res.run.ellipticity.elliptic},
                               {"margin", res.run.ellipticity.margin},
                               {"samples", res.run.ellipticity.samples},
                               {"witness", json(res.run.ellipticity.witness)},
                               {"witness_value", complex_to_json(res.run.ellipticity.witness_value)}};
    diag["residual_slope"] = detail::finite_or_null(res.run.residual_slope);
    diag["samples_converged"] = res.run.samples_converged;
    diag["notes"] = json(res.run.notes);
    diag["messages"] = json(res.messages);
    j["diagnostics"] = std::move(diag);

    json orc;
    orc["enabled"] = cfg.oracle.enabled;
    if (res.oracle_report) {
        orc["tolerance"] = cfg.oracle.tolerance;
        orc["depth"] = cfg.oracle.depth;
        json ref = json::array();
        for (auto it = res.oracle_reference.rbegin(); it != res.oracle_reference.rend(); ++it)
            ref.push_back(json{{"exponent", it->first}, {"value", rational_string(it->second)}});
        orc["reference"] = std::move(ref);
        json rows = json::array();
        for (const auto& r : res.oracle_report->rows) {
            json row;
            row["exponent"] = r.exponent;
            row["reference"] = rational_string(r.reference);
            row["engine"] = r.found ? complex_to_json(r.engine) : json(nullptr);
            row["found"] = r.found;
            row["complete"] = r.complete;
            row["difference"] = r.found ? detail::finite_or_null(r.difference) : json(nullptr);
            row["log_magnitude"] = r.log_magnitude;
            row["pass"] = r.pass;
            rows.push_back(std::move(row));
        }
        orc["rows"] = std::move(rows);
        orc["compared"] = res.oracle_report->compared;
        orc["pass"] = res.oracle_report->all_pass;
    }
    j["oracle"] = std::move(orc);
    return j;
}

/// Flat per-coefficient table. lambda_exponent is the mu exponent divided by
/// the operator order, spelled as an exact fraction; exact columns are empty
/// for numeric provenance.
[[nodiscard]] inline std::string coefficients_csv(const RunConfig& cfg, const RunResult& res) {
    const trace::TraceExpansion& te = res.run.expansion;
    std::ostringstream os;
    os << "family,index,mu_exponent,lambda_exponent,re,im,provenance,error,exact_re,exact_im\n";
    auto row = [&](const char* family, long index, long mu_exp, const trace::Coefficient& c) {
        os << family << ',' << index << ',' << mu_exp << ','
           << poly::to_string(poly::make_fraction(mu_exp, cfg.d)) << ','
           << detail::format_double(c.value.real()) << ',' << detail::format_double(c.value.imag())
           << ',' << trace::provenance_name(c.provenance) << ',' << detail::format_double(c.error) << ',';
        if (c.exact_value)
            os << poly::to_string(c.exact_value->re()) << ',' << poly::to_string(c.exact_value->im());
        else
            os << ',';
        os << '\n';
    };
    for (const auto& [jj, c] : te.power_coeffs)
        row("power", static_cast<long>(jj), te.power_exponent(jj), c);
    for (const auto& [l, c] : te.log_coeffs) row("log", l, te.series_exponent(l), c);
    for (const auto& [l, c] : te.const_coeffs) row("constant", l, te.series_exponent(l), c);
    return os.str();
}

[[nodiscard]] inline std::string samples_csv(const RunResult& res) {
    std::ostringstream os;
    os << "mu,re,im\n";
    for (const auto& [mu, v] : res.run.samples)
        os << detail::format_double(mu) << ',' << detail::format_double(v.real()) << ','
           << detail::format_double(v.imag()) << '\n';
    return os.str();
}

enum class Emit { json_only, csv_only, all };

[[nodiscard]] inline Emit parse_emit(const std::string& s) {
    if (s == "json") return Emit::json_only;
    if (s == "csv") return Emit::csv_only;
    if (s == "all") return Emit::all;
    throw std::invalid_argument("emit mode must be one of json, csv, all");
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace detail

/// Emit the selected artifacts into out_dir and return the paths written.
/// The run log always goes out; it carries timing and notes that are kept
/// away from the deterministic files.
inline std::vector<std::filesystem::path> write_outputs(const RunConfig& cfg, const RunResult& res,
                                                        const std::filesystem::path& out_dir, Emit emit) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;
    if (emit != Emit::csv_only) {
        auto path = out_dir / cfg.outputs.results;
        detail::write_text_file(path, result_json(cfg, res).dump(2) + "\n");
        written.push_back(path);
    }
    if (emit != Emit::json_only) {
        auto cpath = out_dir / cfg.outputs.coefficients;
        detail::write_text_file(cpath, coefficients_csv(cfg, res));
        written.push_back(cpath);
        auto spath = out_dir / cfg.outputs.samples;
        detail::write_text_file(spath, samples_csv(res));
        written.push_back(spath);
    }
    std::ostringstream log;
    log << "completed in " << detail::format_double(res.seconds) << " s\n";
    for (const auto& note : res.run.notes) log << "note: " << note << '\n';
    for (const auto& msg : res.messages) log << "diagnostic: " << msg << '\n';
    if (res.oracle_report)
        log << "reference comparison: " << (res.oracle_report->all_pass ? "pass" : "FAIL") << " ("
            << res.oracle_report->compared << " coefficient(s) scored)\n";
    auto lpath = out_dir / cfg.outputs.log;
    detail::write_text_file(lpath, log.str());
    written.push_back(lpath);
    return written;
}

}  // namespace shubin::io
