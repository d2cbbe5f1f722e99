// Configuration schema, run driver, and command-line front end: round-trip
// identity of the config serialization, validation gates with their exit-code
// mapping, determinism of the structured output, and a few true process-level
// invocations of the installed binary.

#include <sys/wait.h>

#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "shubin/io.hpp"

using namespace shubin;
using io::json;

namespace {

io::RunConfig oscillator_config() {
    io::RunConfig cfg;
    cfg.n = 1;
    cfg.d = 2;
    cfg.p0 = poly::TermBundle(2);
    cfg.p0.add_term(poly::GaussianRational(-1), {2, 0}, poly::Rational(0));
    cfg.p0.add_term(poly::GaussianRational(-1), {0, 2}, poly::Rational(0));
    cfg.q = poly::TermBundle::constant(2, poly::GaussianRational(1));
    cfg.q_order = 0;
    cfg.N = 2;
    cfg.J = 4;
    cfg.L = 6;
    cfg.quadrature.sphere_points_per_axis = 16;
    cfg.mu.points = 8;
    return cfg;
}

std::filesystem::path scratch_dir(const std::string& leaf) {
    auto dir = std::filesystem::temp_directory_path() / "shubin_io_tests" / leaf;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct CommandOutcome {
    int exit_code = -1;
    std::string stderr_text;
};

CommandOutcome run_cli(const std::string& args, const std::filesystem::path& dir) {
    auto errfile = dir / "stderr.txt";
    std::string cmd = std::string(SHUBIN_CLI_PATH) + " " + args + " 2>" + errfile.string();
    int status = std::system(cmd.c_str());
    CommandOutcome out;
    REQUIRE(WIFEXITED(status));
    out.exit_code = WEXITSTATUS(status);
    out.stderr_text = slurp(errfile);
    return out;
}

}  // namespace

TEST_CASE("config serialization round-trips to the identity") {
    io::RunConfig cfg = oscillator_config();
    cfg.cutoff.r0 = 0.75;
    cfg.cutoff.r1 = 1.5;
    cfg.cutoff.kind = symbols::CutoffSpec::Kind::sharp;
    cfg.quadrature.seed_points = {0.5, 2.0};
    cfg.oracle.enabled = true;
    cfg.oracle.tolerance = 5e-4;
    cfg.oracle.depth = 2;
    cfg.outputs.results = "custom.json";

    json once = io::config_to_json(cfg);
    io::RunConfig back = io::parse_config(once);
    json twice = io::config_to_json(back);
    CHECK(once.dump(2) == twice.dump(2));
    CHECK(back.p0 == cfg.p0);
    CHECK(back.q == cfg.q);
    CHECK(back.cutoff.kind == symbols::CutoffSpec::Kind::sharp);
    CHECK(back.quadrature.seed_points == cfg.quadrature.seed_points);
    CHECK(back.outputs.results == "custom.json");
}

TEST_CASE("term bundles survive JSON with exact rational coefficients") {
    poly::TermBundle b(2);
    b.add_term(poly::GaussianRational(poly::Rational(1, 3), poly::Rational(-2, 7)), {1, 2},
               poly::Rational(0));
    b.add_term(poly::GaussianRational(5), {0, 0}, poly::Rational(-3, 2));
    json v = io::bundle_to_json(b);
    poly::TermBundle back = io::bundle_from_json(2, v, "test");
    CHECK(back == b);

    // canonical emission: integers stay integers, everything else is "p/q"
    bool saw_string = false, saw_int = false;
    for (const auto& term : v) {
        if (term[0].is_string()) saw_string = true;
        if (term[0].is_number_integer()) saw_int = true;
    }
    CHECK(saw_string);
    CHECK(saw_int);
}

TEST_CASE("malformed configs are rejected with config errors") {
    json good = io::config_to_json(oscillator_config());

    SECTION("wrong schema") {
        json j = good;
        j["schema"] = "shubin-trace/0";
        CHECK_THROWS_AS(io::parse_config(j), std::invalid_argument);
    }
    SECTION("missing required field") {
        json j = good;
        j.erase("operator");
        CHECK_THROWS_AS(io::parse_config(j), std::invalid_argument);
    }
    SECTION("unknown field") {
        json j = good;
        j["typo"] = 1;
        CHECK_THROWS_AS(io::parse_config(j), std::invalid_argument);
    }
    SECTION("float coefficients are rejected, not rounded") {
        json j = good;
        j["operator"]["p0"][0][0] = 0.5;
        CHECK_THROWS_WITH(io::parse_config(j),
                          Catch::Matchers::ContainsSubstring("integer or a \"p/q\" string"));
    }
    SECTION("bad rational string") {
        json j = good;
        j["weight"]["q"][0][0] = "1/0";
        CHECK_THROWS_AS(io::parse_config(j), std::invalid_argument);
    }
    SECTION("non-integer exponent") {
        json j = good;
        j["operator"]["p0"][0][2][0] = 1.5;
        CHECK_THROWS_AS(io::parse_config(j), std::invalid_argument);
    }
}

TEST_CASE("validation gates reject inconsistent runs") {
    SECTION("trace-class gate is strict: order - d N = -2n fails") {
        io::RunConfig cfg = oscillator_config();
        cfg.N = 1;  // 0 - 2*1 = -2 = -2n exactly
        CHECK_THROWS_WITH(cfg.validate(), Catch::Matchers::ContainsSubstring("trace-class"));
        cfg.N = 2;
        CHECK_NOTHROW(cfg.validate());
    }
    SECTION("declared operator order must match the polynomial") {
        io::RunConfig cfg = oscillator_config();
        cfg.d = 4;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SECTION("declared weight order must match the polynomial degree") {
        io::RunConfig cfg = oscillator_config();
        cfg.q_order = -2;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SECTION("radial weights must be homogeneous of one degree") {
        io::RunConfig cfg = oscillator_config();
        cfg.q = poly::TermBundle::radial(2, poly::GaussianRational(1), poly::Rational(-2));
        cfg.q.add_term(poly::GaussianRational(1), {0, 0}, poly::Rational(-4));
        cfg.q_order = -2;
        CHECK_THROWS_WITH(cfg.validate(), Catch::Matchers::ContainsSubstring("homogeneous"));
        io::RunConfig single = oscillator_config();
        single.q = poly::TermBundle::radial(2, poly::GaussianRational(1), poly::Rational(-2));
        single.q_order = -2;
        CHECK_NOTHROW(single.validate());
    }
    SECTION("reference comparison only on the pure oscillator") {
        io::RunConfig cfg = oscillator_config();
        cfg.oracle.enabled = true;
        CHECK_NOTHROW(cfg.validate());
        cfg.p0.add_term(poly::GaussianRational(-1), {1, 0}, poly::Rational(0));
        CHECK_THROWS_WITH(cfg.validate(), Catch::Matchers::ContainsSubstring("p0"));
    }
    SECTION("reference comparison needs a convergent eigenvalue sum") {
        io::RunConfig cfg = oscillator_config();
        cfg.oracle.enabled = true;
        cfg.N = 1;  // would need N >= n+1 = 2; also fails the trace-class gate
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
}

TEST_CASE("execute produces a verified, deterministic result document") {
    io::RunConfig cfg = oscillator_config();
    cfg.oracle.enabled = true;
    auto res = io::execute(cfg);

    REQUIRE(res.oracle_report.has_value());
    CHECK(res.oracle_report->all_pass);
    CHECK(res.oracle_report->compared >= 2);
    CHECK(res.run.samples.size() == 8);
    CHECK(res.run.samples_converged);

    const auto& c0 = res.run.expansion.power_coeffs.at(0);
    CHECK(c0.value.real() == Catch::Approx(0.5).margin(1e-6));

    json doc = io::result_json(cfg, res);
    CHECK(doc["schema"] == io::kSchema);
    CHECK(doc["expansion"]["power"].size() == 4);
    CHECK(doc["oracle"]["pass"] == true);
    CHECK(doc["diagnostics"]["ellipticity"]["elliptic"] == true);

    // exact rows carry rationals as strings
    for (const auto& row : doc["expansion"]["log"]) {
        REQUIRE(row["provenance"] == "exact");
        CHECK(row["exact"][0].is_string());
    }

    // rerunning the identical config reproduces the document byte for byte
    auto res2 = io::execute(cfg);
    CHECK(doc.dump(2) == io::result_json(cfg, res2).dump(2));
}

TEST_CASE("emitted files are complete and well-formed") {
    io::RunConfig cfg = oscillator_config();
    auto res = io::execute(cfg);
    auto dir = scratch_dir("emit");
    auto written = io::write_outputs(cfg, res, dir, io::Emit::all);
    REQUIRE(written.size() == 4);
    for (const auto& p : written) CHECK(std::filesystem::exists(p));

    // the results file parses back and echoes the canonical config
    json doc = json::parse(slurp(dir / "result.json"));
    io::RunConfig echoed = io::parse_config(doc["config"]);
    CHECK(echoed.p0 == cfg.p0);

    // coefficient table: header plus one row per coefficient
    std::istringstream coeffs(slurp(dir / "coefficients.csv"));
    std::string line;
    std::getline(coeffs, line);
    CHECK(line == "family,index,mu_exponent,lambda_exponent,re,im,provenance,error,exact_re,exact_im");
    std::size_t rows = 0;
    while (std::getline(coeffs, line))
        if (!line.empty()) ++rows;
    CHECK(rows == res.run.expansion.power_coeffs.size() + res.run.expansion.log_coeffs.size() +
                      res.run.expansion.const_coeffs.size());

    // sample table: header plus one row per mu point
    std::istringstream samples(slurp(dir / "mu_samples.csv"));
    std::getline(samples, line);
    CHECK(line == "mu,re,im");
    rows = 0;
    while (std::getline(samples, line))
        if (!line.empty()) ++rows;
    CHECK(rows == cfg.mu.points);

    // emit selection honours the mode
    auto jdir = scratch_dir("emit_json");
    auto jw = io::write_outputs(cfg, res, jdir, io::Emit::json_only);
    CHECK(std::filesystem::exists(jdir / "result.json"));
    CHECK(!std::filesystem::exists(jdir / "coefficients.csv"));
    CHECK(jw.size() == 2);  // results + log
}

TEST_CASE("weights with genuine radial factors run and flag divergent slots") {
    io::RunConfig cfg = oscillator_config();
    cfg.q = poly::TermBundle::radial(2, poly::GaussianRational(1), poly::Rational(-2));
    cfg.q_order = -2;
    auto res = io::execute(cfg);

    // |z|^-2 against the squared resolvent: log coefficient 1 at index 0,
    // where the uncut integral diverges logarithmically
    const auto& lc = res.run.expansion.log_coeffs.at(0);
    REQUIRE(lc.exact_value.has_value());
    CHECK(lc.exact_value->re() == poly::Rational(1));
    CHECK(lc.exact_value->im() == poly::Rational(0));
    REQUIRE(res.run.chi_divergent == std::vector<long>{0});

    bool saw_flag = false;
    for (const auto& t : res.run.lambda.terms)
        if (t.cutoff_dependent) {
            saw_flag = true;
            CHECK(t.exponent == poly::Rational(-2));
            CHECK(t.has_log);
        }
    CHECK(saw_flag);
}

TEST_CASE("command line driver maps failures to documented exit codes") {
    auto dir = scratch_dir("cli");
    {
        std::ofstream out(dir / "ho.json");
        out << io::config_to_json(oscillator_config()).dump(2);
    }

    SECTION("successful run writes artifacts and exits 0") {
        auto r = run_cli("run --config " + (dir / "ho.json").string() + " --out " +
                             (dir / "out").string() + " --seed 7",
                         dir);
        CHECK(r.exit_code == 0);
        CHECK(std::filesystem::exists(dir / "out" / "result.json"));
        CHECK(std::filesystem::exists(dir / "out" / "coefficients.csv"));
        CHECK(std::filesystem::exists(dir / "out" / "mu_samples.csv"));
        json doc = json::parse(slurp(dir / "out" / "result.json"));
        std::string messages = doc["diagnostics"]["messages"].dump();
        CHECK(messages.find("seed 7") != std::string::npos);
    }
    SECTION("validation failures exit 2") {
        io::RunConfig gate = oscillator_config();
        gate.N = 1;
        {
            std::ofstream out(dir / "gate.json");
            out << io::config_to_json(gate).dump(2);
        }
        auto r = run_cli("run --config " + (dir / "gate.json").string(), dir);
        CHECK(r.exit_code == 2);
        CHECK(r.stderr_text.find("trace-class") != std::string::npos);

        auto missing = run_cli("run --config " + (dir / "nope.json").string(), dir);
        CHECK(missing.exit_code == 2);

        auto badflag = run_cli("run --config " + (dir / "ho.json").string() + " --emit yaml", dir);
        CHECK(badflag.exit_code == 2);
    }
    SECTION("computational failures exit 1 with a witness") {
        io::RunConfig bad = oscillator_config();
        bad.p0 = poly::TermBundle(2);
        bad.p0.add_term(poly::GaussianRational(1), {2, 0}, poly::Rational(0));
        bad.p0.add_term(poly::GaussianRational(1), {0, 2}, poly::Rational(0));
        {
            std::ofstream out(dir / "nonelliptic.json");
            out << io::config_to_json(bad).dump(2);
        }
        auto r = run_cli("run --config " + (dir / "nonelliptic.json").string(), dir);
        CHECK(r.exit_code == 1);
        CHECK(r.stderr_text.find("spectral ray") != std::string::npos);
    }
    SECTION("validate prints the canonical form and exits 0") {
        auto r = run_cli("validate --config " + (dir / "ho.json").string() + " > " +
                             (dir / "canon.json").string(),
                         dir);
        CHECK(r.exit_code == 0);
        json canon = json::parse(slurp(dir / "canon.json"));
        CHECK(canon["schema"] == io::kSchema);
    }
    SECTION("oracle subcommand prints reference values") {
        auto r = run_cli("oracle --n 1 --N 2 --terms 3 > " + (dir / "oracle.txt").string(), dir);
        CHECK(r.exit_code == 0);
        std::string text = slurp(dir / "oracle.txt");
        CHECK(text.find("1/2") != std::string::npos);
        CHECK(text.find("-1/6") != std::string::npos);
    }
}
