// Batch driver for the resolvent-trace engine.
//
//   shubin-trace run      --config cfg.json [--out DIR] [--emit json|csv|all]
//                         [--seed INT] [--verbose]
//   shubin-trace validate --config cfg.json
//   shubin-trace oracle   --n 1 --N 2 [--lambda V ...] [--terms K]
//
// Exit codes: 0 success, 2 configuration or validation error, 1 runtime
// failure (ellipticity rejection, quadrature non-convergence, failed
// reference comparison, I/O trouble).

#include <complex>
#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shubin/io.hpp"
#include "shubin/oscillator.hpp"
#include "shubin/quadrature.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& out_dir, const std::string& emit,
                bool seeded, std::uint64_t seed, bool verbose) {
    auto cfg = shubin::io::parse_config(shubin::io::load_json_file(config_path));
    cfg.validate();
    if (verbose)
        std::cerr << "config ok: n=" << cfg.n << " d=" << cfg.d << " N=" << cfg.N << " J=" << cfg.J
                  << " L=" << cfg.L << '\n';

    auto res = shubin::io::execute(cfg);
    if (verbose)
        std::cerr << "pipeline done in " << res.seconds << " s, " << res.run.samples.size()
                  << " sample(s)\n";

    bool mc_failed = false;
    if (seeded) {
        auto mc = shubin::quad::mc_sphere_check(2 * cfg.n, seed);
        std::ostringstream os;
        os << "Monte-Carlo sphere cross-check (seed " << seed << "): worst deviation "
           << mc.worst_sigma << " standard errors over " << mc.samples << " samples -> "
           << (mc.pass ? "pass" : "FAIL");
        res.messages.push_back(os.str());
        mc_failed = !mc.pass;
    }

    auto written = shubin::io::write_outputs(cfg, res, out_dir, shubin::io::parse_emit(emit));
    for (const auto& p : written) std::cout << "wrote " << p.string() << '\n';

    if (mc_failed) {
        std::cerr << "error: Monte-Carlo sphere cross-check failed\n";
        return 1;
    }
    if (res.oracle_report && !res.oracle_report->all_pass) {
        std::cerr << "error: engine coefficients disagree with the eigenvalue-sum reference\n";
        for (const auto& r : res.oracle_report->rows)
            if (r.found && r.complete && !r.pass)
                std::cerr << "  lambda^" << r.exponent << ": reference " << r.reference.get_str()
                          << ", engine " << r.engine.real() << (r.engine.imag() < 0 ? "" : "+")
                          << r.engine.imag() << "i, difference " << r.difference << '\n';
        return 1;
    }
    return 0;
}

int validate_command(const std::string& config_path) {
    auto cfg = shubin::io::parse_config(shubin::io::load_json_file(config_path));
    cfg.validate();
    std::cout << shubin::io::config_to_json(cfg).dump(2) << '\n';
    return 0;
}

int oracle_command(int n, int N, std::vector<double> lambdas, std::size_t terms) {
    if (lambdas.empty()) lambdas = {10.0, 40.0, 160.0};
    std::cout << "isotropic oscillator, n=" << n << ", resolvent power N=" << N << "\n\n";
    std::cout << "trace values:\n";
    for (double lambda : lambdas)
        std::cout << "  lambda=" << lambda << "  Tr(lambda+H)^-" << N << " = "
                  << shubin::io::detail::format_double(shubin::oracle::oscillator_trace(lambda, N, n))
                  << '\n';
    std::cout << "\nlarge-lambda expansion coefficients:\n";
    auto ref = shubin::oracle::oscillator_expansion_reference(n, N, terms);
    for (auto it = ref.rbegin(); it != ref.rend(); ++it)
        std::cout << "  lambda^" << it->first << "  " << it->second.get_str() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Resolvent-trace asymptotics for confining quadratic-class operators"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::string emit = "all";
    std::uint64_t seed = 0;
    bool verbose = false;

    auto* run = app.add_subcommand("run", "execute a trace-expansion run from a JSON config");
    run->add_option("--config", config_path, "path to the run configuration")->required();
    run->add_option("--out", out_dir, "output directory (created if absent)");
    run->add_option("--emit", emit, "which artifacts to write")
        ->check(CLI::IsMember({"json", "csv", "all"}));
    auto* seed_opt = run->add_option("--seed", seed, "run the seeded Monte-Carlo sphere cross-check");
    run->add_flag("--verbose", verbose, "progress notes on stderr");

    auto* validate = app.add_subcommand("validate", "check a config and print its canonical form");
    validate->add_option("--config", config_path, "path to the run configuration")->required();

    int oracle_n = 1;
    int oracle_N = 2;
    std::vector<double> lambdas;
    std::size_t terms = 4;
    auto* oracle = app.add_subcommand("oracle", "print oscillator reference traces and coefficients");
    oracle->add_option("--n", oracle_n, "space dimension");
    oracle->add_option("--N", oracle_N, "resolvent power (needs N >= n+1)");
    oracle->add_option("--lambda", lambdas, "spectral parameter values to evaluate");
    oracle->add_option("--terms", terms, "number of expansion coefficients");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed())
            return run_command(config_path, out_dir, emit, seed_opt->count() > 0, seed, verbose);
        if (validate->parsed()) return validate_command(config_path);
        if (oracle->parsed()) return oracle_command(oracle_n, oracle_N, lambdas, terms);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
