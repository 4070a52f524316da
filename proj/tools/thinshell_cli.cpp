// thinshell: command-line front end for scans, fits, lemma suites and
// randomness diagnostics.
//
// Exit codes: 0 all assertions passed, 1 statistical assertion failure,
// 2 configuration or runtime error.

#include "thinshell/net.hpp"
#include "thinshell/report.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace thinshell;

namespace {

constexpr int kOk = 0, kAssertion = 1, kRuntime = 2;

int cmd_scan(const std::string& path, const std::optional<std::uint64_t>& seed, const std::optional<long long>& samples,
             const std::optional<std::string>& out, const std::string& formats) {
    ScanConfig config = load_config(path);
    if (seed) config.seed = *seed;
    if (samples) config.samples_per_run = *samples;
    if (out) config.output_dir = *out;
    validate(config);
    EmitFormats fmt{formats.find("csv") != std::string::npos, formats.find("json") != std::string::npos,
                    formats.find("svg") != std::string::npos};
    const auto report = run_scan(config);
    for (const auto& p : emit_report(report, config, fmt)) std::cout << "wrote " << p.string() << '\n';
    int errors = 0, violations = 0;
    for (const auto& r : report.rows) {
        if (r.statistic == "error") {
            ++errors;
            std::cerr << "error row: " << r.suite << " " << r.body << " n=" << r.n << " l=" << r.l << ": " << r.note << '\n';
        }
        if (r.statistic.ends_with("_violations") && r.value > 0.0) ++violations;
    }
    for (const auto& f : report.fits)
        std::cout << "fit " << f.suite << "/" << f.body << "/l=" << f.l << "/" << f.statistic << ": C=" << format_double(f.fit.c_hat)
                  << " kappa=" << format_double(f.fit.kappa_hat) << " r2=" << format_double(f.fit.r_squared) << '\n';
    std::cout << report.rows.size() << " rows, " << report.fits.size() << " fits, " << errors << " error rows\n";
    if (errors) return kRuntime;
    return violations ? kAssertion : kOk;
}

int cmd_fit(const std::string& path, const std::string& statistic, double min_kappa) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    auto rows = parse_csv(ss.str());
    if (!statistic.empty()) std::erase_if(rows, [&](const ScanRow& r) { return r.statistic != statistic; });
    const auto fits = fit_rows(rows);
    if (fits.empty()) throw FitError("no (suite, body, l, statistic) group with 3 distinct n and positive values");
    bool ok = true;
    for (const auto& f : fits) {
        const bool pass = f.fit.kappa_hat >= min_kappa;
        ok = ok && pass;
        std::cout << f.suite << "/" << f.body << "/l=" << f.l << "/" << f.statistic << ": C=" << format_double(f.fit.c_hat)
                  << " kappa=" << format_double(f.fit.kappa_hat) << " r2=" << format_double(f.fit.r_squared) << (pass ? "" : "  BELOW")
                  << '\n';
    }
    return ok ? kOk : kAssertion;
}

int cmd_lemmas(std::uint64_t seed, std::size_t count) {
    SuiteOptions opt;
    opt.seed = seed;
    opt.count = count;
    std::vector<SuiteResult> results;
    auto [frad, level] = landmark_suites(opt);
    results.push_back(frad);
    results.push_back(level);
    results.push_back(level_set_radius_suite(opt));
    results.push_back(decay_suite(opt));
    results.push_back(reweight_suite(opt));
    results.push_back(tilted_suite(opt));
    results.push_back(gradient_suite(opt));
    results.push_back(laplace_convexity_suite(opt));
    results.push_back(tp_suite(opt));
    bool ok = true;
    for (const auto& r : results) {
        ok = ok && r.passed();
        std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.instances << " instances, " << r.violations
                  << " violations, worst=" << format_double(r.worst);
        for (const auto& [k, v] : r.fitted) std::cout << " " << k << "=" << format_double(v);
        std::cout << '\n';
        for (const auto& f : r.failures) std::cout << "    " << f << '\n';
    }
    return ok ? kOk : kAssertion;
}

int cmd_net(int l, double radius, double eps, std::uint64_t seed, std::size_t probes) {
    const auto net = ball_net(l, radius, eps, seed);
    const double cover = net_coverage(net, probes, seed);
    std::cout << "points=" << net.points.rows() << " volumetric_bound=" << format_double(net.volumetric_bound)
              << " coverage=" << format_double(cover) << " eps=" << format_double(eps) << '\n';
    return cover <= eps && static_cast<double>(net.points.rows()) <= net.volumetric_bound ? kOk : kAssertion;
}

int cmd_haar(int n, std::size_t draws, std::uint64_t seed) {
    double residual = 0.0, det_err = 0.0;
    std::vector<double> first;
    for (std::size_t k = 0; k < draws; ++k) {
        const auto u = haar_rotation(n, seed, k);
        residual = std::max(residual, u.orthogonality_residual());
        det_err = std::max(det_err, std::abs(u.determinant() - 1.0));
        first.push_back(u.matrix()(0, 0));
    }
    const auto ks = ks_test(first, [n](double t) { return sphere_coordinate_cdf(n, t); });
    // E U11 = 0, so the raw second moment estimates the variance
    double s2 = 0.0;
    for (double x : first) s2 += x * x;
    const double variance = s2 / static_cast<double>(draws);
    std::cout << "n=" << n << " draws=" << draws << " max_residual=" << format_double(residual) << " max_det_error=" << format_double(det_err)
              << " ks_p=" << format_double(ks.p_value) << " var(U11)=" << format_double(variance) << " (1/n=" << format_double(1.0 / n)
              << ")\n";
    return residual <= 1e-12 && det_err <= 1e-12 && ks.p_value > 0.01 ? kOk : kAssertion;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"thin-shell and marginal CLT experiments for isotropic log-concave measures"};
    app.require_subcommand(1);

    auto* scan = app.add_subcommand("scan", "run a scan config and write CSV/JSON/SVG reports");
    std::string config_path, formats = "csv,json,svg";
    std::optional<std::uint64_t> seed_override;
    std::optional<long long> samples_override;
    std::optional<std::string> out_override;
    scan->add_option("config", config_path, "JSON scan config")->required();
    scan->add_option("--seed", seed_override, "override the config seed");
    scan->add_option("--samples", samples_override, "override samples_per_run");
    scan->add_option("--out", out_override, "override output_dir");
    scan->add_option("--formats", formats, "comma-separated subset of csv,json,svg");

    auto* fit = app.add_subcommand("fit", "refit power laws from a report CSV");
    std::string csv_path, statistic;
    double min_kappa = 0.0;
    fit->add_option("csv", csv_path, "report CSV")->required();
    fit->add_option("--statistic", statistic, "only fit this statistic");
    fit->add_option("--min-kappa", min_kappa, "fail (exit 1) when a fitted exponent is below this");

    auto* lemmas = app.add_subcommand("check-lemmas", "run the log-concave property suites");
    std::uint64_t seed = 0;
    std::size_t count = 100;
    lemmas->add_option("--seed", seed, "corpus seed");
    lemmas->add_option("--count", count, "instances per suite");

    auto* net = app.add_subcommand("net", "greedy eps-net of a ball and its coverage");
    int net_dim = 2;
    double radius = 1.0, eps = 0.25;
    std::size_t probes = 20000;
    net->add_option("--dim", net_dim, "ball dimension (1-10)");
    net->add_option("--radius", radius, "ball radius");
    net->add_option("--eps", eps, "net scale");
    net->add_option("--probes", probes, "uniform probes for the coverage check");
    net->add_option("--seed", seed, "grid offset seed");

    auto* haar = app.add_subcommand("haar", "Haar rotation diagnostics");
    int haar_dim = 16;
    std::size_t draws = 1000;
    haar->add_option("--dim", haar_dim, "n");
    haar->add_option("--draws", draws, "number of rotations");
    haar->add_option("--seed", seed, "seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kRuntime;
    }

    try {
        if (scan->parsed()) return cmd_scan(config_path, seed_override, samples_override, out_override, formats);
        if (fit->parsed()) return cmd_fit(csv_path, statistic, min_kappa);
        if (lemmas->parsed()) return cmd_lemmas(seed, count);
        if (net->parsed()) return cmd_net(net_dim, radius, eps, seed, probes);
        if (haar->parsed()) return cmd_haar(haar_dim, draws, seed);
    } catch (const ConfigError& e) {
        std::cerr << "config error" << (e.key.empty() ? "" : " [" + e.key + "]") << ": " << e.what() << '\n';
        return kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kRuntime;
}
