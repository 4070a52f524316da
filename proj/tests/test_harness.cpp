#include "oracles.hpp"

#include "thinshell/report.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace thinshell;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("thinshell-harness-" + name);
    std::filesystem::remove_all(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ScanConfig small_config(std::vector<std::string> suites) {
    ScanConfig c;
    c.bodies = {"cube"};
    c.dims = {16, 64, 256};
    c.samples_per_run = 20000;
    c.suites = std::move(suites);
    return c;
}

std::vector<ScanRow> synthetic(double c, double kappa, double noise, std::uint64_t seed) {
    std::vector<ScanRow> rows;
    int k = 0;
    for (int n : {16, 32, 64, 128, 256}) {
        CounterRng rng(seed, "synthetic", static_cast<std::uint64_t>(k++));
        const double v = c * std::pow(n, -kappa) * (1.0 + noise * rng.uniform(-1.0, 1.0));
        rows.push_back({"thinshell", "cube", n, 0, "shell_width", v, v, v, 0.0, seed, {}});
    }
    return rows;
}

}  // namespace

// ---------------------------------------------------------------- config

TEST(Config, MinimalGetsDefaults) {
    const auto c = parse_config(R"({"bodies": ["cube"], "dims": [16], "suites": ["thinshell"]})");
    EXPECT_EQ(c.samples_per_run, 200000);
    EXPECT_EQ(c.seed, 0u);
    EXPECT_EQ(c.dims, std::vector<int>{16});
    EXPECT_EQ(c.suites, std::vector<std::string>{"thinshell"});
}

TEST(Config, RejectsBadInput) {
    auto key_of = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return e.key + "|" + e.what();
        }
        return std::string("accepted");
    };
    EXPECT_NE(key_of(R"({"bodies": ["cube"], "dims": [32, 16]})").find("dims not increasing"), std::string::npos);
    EXPECT_EQ(key_of(R"({"bodies": ["cube"], "dims": [16], "foo": 1})").substr(0, 4), "foo|");
    EXPECT_EQ(key_of(R"({"bodies": ["cube"], "dims": [16], "samples_per_run": 9999})").substr(0, 16), "samples_per_run|");
    EXPECT_EQ(key_of(R"({"bodies": ["dodecahedron"], "dims": [16]})").substr(0, 7), "bodies|");
    EXPECT_EQ(key_of(R"({"bodies": ["cube"], "dims": [16], "suites": ["nope"]})").substr(0, 7), "suites|");
    EXPECT_EQ(key_of(R"({"bodies": ["cube"], "dims": "16"})").substr(0, 5), "dims|");
    EXPECT_NE(key_of("{\"bodies\": [\"cube\"],\n\"dims\": [16,]\n}").find("line 2"), std::string::npos);
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, HashIgnoresOutputDirOnly) {
    auto a = small_config({"thinshell"});
    auto b = a;
    b.output_dir = "elsewhere";
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed = 1;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
}

// ---------------------------------------------------------------- scans

TEST(Scan, ThinShellGivesOneWidthPerDimension) {
    const auto rep = run_scan(small_config({"thinshell"}));
    int widths = 0;
    for (const auto& r : rep.rows) {
        EXPECT_LE(r.ci_low, r.value);
        EXPECT_LE(r.value, r.ci_high);
        EXPECT_NE(r.statistic, "error") << r.note;
        if (r.statistic == "shell_width") {
            ++widths;
            EXPECT_NEAR(r.value, std::sqrt(0.2 / r.n), 0.15 * std::sqrt(0.2 / r.n));
        }
        if (r.statistic == "large_norm_tail") {
            EXPECT_EQ(r.value, 0.0);
        }
    }
    EXPECT_EQ(widths, 3);
    ASSERT_EQ(rep.fits.size(), 1u);
    EXPECT_NEAR(rep.fits[0].fit.kappa_hat, 0.5, 0.05);
}

TEST(Scan, EmptySuitesGiveEmptyReport) {
    auto c = small_config({});
    c.dims.clear();
    const auto rep = run_scan(c);
    EXPECT_TRUE(rep.rows.empty());
    EXPECT_TRUE(rep.fits.empty());
}

TEST(Scan, BallMarginalAgainstExactDensity) {
    // first coordinate of the uniform ball of radius sqrt(n + 2) has density
    // proportional to (1 - t^2 / (n + 2))^((n - 1) / 2)
    const int n = 64;
    const double r = std::sqrt(n + 2.0), e = 0.5 * (n - 1.0);
    const double z = oracle::gk([&](double t) { return std::pow(1.0 - t * t / (r * r), e); }, -r, r);
    const double exact =
        0.5 * oracle::gk([&](double t) { return std::abs((std::abs(t) < r ? std::pow(1.0 - t * t / (r * r), e) / z : 0.0) - oracle::phi(t)); },
                         -r, r) +
        oracle::Phi(-r);
    ScanConfig c;
    c.bodies = {"ball"};
    c.dims = {n};
    c.subspace_dims = {1};
    c.samples_per_run = 200000;
    c.suites = {"marginal_clt"};
    const auto rep = run_scan(c);
    const auto it = std::find_if(rep.rows.begin(), rep.rows.end(), [](const ScanRow& row) { return row.statistic == "tv"; });
    ASSERT_NE(it, rep.rows.end());
    EXPECT_NEAR(it->value, exact, 0.01 + 2.0 * it->noise_floor);
}

TEST(Scan, ErrorRowsDoNotStopTheScan) {
    ScanConfig c;
    c.bodies = {"cube"};
    c.dims = {8};
    c.subspace_dims = {2};
    c.samples_per_run = 10000;
    c.smoothing_v = 0.01;
    c.suites = {"flatness", "thinshell"};
    const auto rep = run_scan(c);
    ASSERT_FALSE(rep.rows.empty());
    EXPECT_EQ(rep.rows.front().statistic, "error");
    EXPECT_FALSE(rep.rows.front().note.empty());
    EXPECT_EQ(rep.rows.back().suite, "thinshell");
}

TEST(Scan, RowsReproduceInIsolation) {
    auto c = small_config({"thinshell", "marginal_clt", "so_concentration"});
    c.dims = {8, 16};
    const auto rep = run_scan(c);
    const auto cells = plan_cells(c);
    CounterRng rng(5, "spot-check");
    for (int k = 0; k < 3; ++k) {
        const auto& row = rep.rows[static_cast<std::size_t>(rng.uniform() * static_cast<double>(rep.rows.size()))];
        const auto cell = std::find_if(cells.begin(), cells.end(), [&](const ScanCell& s) { return s.seed == row.seed; });
        ASSERT_NE(cell, cells.end());
        const auto again = run_cell(c, *cell);
        EXPECT_NE(std::find(again.begin(), again.end(), row), again.end()) << row.suite << " " << row.statistic;
    }
}

TEST(Scan, IndependentOfThreadCount) {
    auto c = small_config({"thinshell", "marginal_clt"});
    c.dims = {8, 16, 32};
    setenv("THINSHELL_THREADS", "1", 1);
    const auto one = run_scan(c);
    setenv("THINSHELL_THREADS", "3", 1);
    const auto three = run_scan(c);
    unsetenv("THINSHELL_THREADS");
    EXPECT_EQ(to_csv(one.rows), to_csv(three.rows));
    EXPECT_EQ(to_json(one, c).dump(), to_json(three, c).dump());
}

// ---------------------------------------------------------------- fits

TEST(Fit, ExactRecovery) {
    std::vector<ScanRow> rows;
    for (int n : {16, 64, 256}) rows.push_back({"s", "b", n, 0, "x", 2.0 * std::pow(n, -0.5), 0, 0, 0, 0, {}});
    const auto f = fit_power_law(rows);
    EXPECT_NEAR(f.c_hat, 2.0, 1e-12);
    EXPECT_NEAR(f.kappa_hat, 0.5, 1e-12);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
}

TEST(Fit, Preconditions) {
    auto rows = synthetic(2.0, 0.5, 0.0, 1);
    EXPECT_THROW(fit_power_law({rows[0], rows[1]}), PreconditionError);
    rows[2].value = 0.0;
    rows[4].value = -1.0;
    try {
        fit_power_law(rows);
        ADD_FAILURE() << "expected a fit error";
    } catch (const FitError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("n=64"), std::string::npos);
        EXPECT_NE(what.find("n=256"), std::string::npos);
    }
}

TEST(Fit, NoisyRecoveryAndScaleEquivariance) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto rows = synthetic(2.0, 0.5, 0.05, seed);
        const auto f = fit_power_law(rows);
        EXPECT_NEAR(f.kappa_hat, 0.5, 0.1);
        auto scaled = rows;
        for (auto& r : scaled) r.value *= 7.5;
        const auto g = fit_power_law(scaled);
        EXPECT_NEAR(g.c_hat, 7.5 * f.c_hat, 1e-10 * g.c_hat);
        EXPECT_NEAR(g.kappa_hat, f.kappa_hat, 1e-10);
    }
}

// ---------------------------------------------------------------- reports

TEST(Report, SingleRowCsvMatchesSchema) {
    ScanReport rep{"0123456789abcdef", {{"thinshell", "cube", 16, 0, "shell_width", 0.25, 0.125, 0.5, 0.0625, 42, {}}}, {}};
    auto c = small_config({});
    c.output_dir = scratch("single").string();
    const auto paths = emit_report(rep, c);
    ASSERT_EQ(paths.size(), 2u);
    EXPECT_EQ(slurp(paths[0]),
              "suite,body,n,l,statistic,value,ci_low,ci_high,noise_floor,seed\n"
              "thinshell,cube,16,0,shell_width,0.25,0.125,0.5,0.0625,42\n");
    EXPECT_EQ(paths[0].filename(), "scan-0123456789abcdef.csv");
    EXPECT_EQ(parse_csv(slurp(paths[0])), rep.rows);
    const auto j = nlohmann::json::parse(slurp(paths[1]));
    EXPECT_EQ(j["rows"][0]["value"].get<double>(), 0.25);
}

TEST(Report, EmptyReportIsHeaderOnly) {
    ScanReport rep{"00000000000000ff", {}, {}};
    auto c = small_config({});
    c.output_dir = scratch("empty").string();
    const auto paths = emit_report(rep, c);
    EXPECT_EQ(slurp(paths[0]), std::string(kCsvHeader) + "\n");
    for (const auto& p : std::filesystem::directory_iterator(c.output_dir)) EXPECT_NE(p.path().extension(), ".svg");
}

TEST(Report, SameConfigSameBytes) {
    auto c = small_config({"thinshell", "so_concentration"});
    c.dims = {8, 16, 32};
    c.output_dir = scratch("det-a").string();
    const auto a = emit_report(run_scan(c), c);
    c.output_dir = scratch("det-b").string();
    const auto b = emit_report(run_scan(c), c);
    ASSERT_EQ(a.size(), b.size());
    ASSERT_GE(a.size(), 3u);  // csv, json, at least one svg
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].filename(), b[i].filename());
        EXPECT_EQ(slurp(a[i]), slurp(b[i])) << a[i];
    }
    const auto svg = slurp(a.back());
    EXPECT_NE(svg.find("<svg"), std::string::npos);
    EXPECT_NE(svg.find("kappa="), std::string::npos);
}

TEST(Report, UnwritableDirectoryNamesThePath) {
    auto c = small_config({});
    c.output_dir = "/proc/thinshell-cannot-write";
    try {
        emit_report(ScanReport{"x", {}, {}}, c);
        ADD_FAILURE() << "expected an I/O error";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("/proc/thinshell-cannot-write"), std::string::npos);
    }
}
