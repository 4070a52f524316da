#pragma once

// Experiment orchestration: a validated scan configuration, the grid of
// independent cells (suite x body x n x l), per-cell statistics rows, and
// power-law fits across n.
//
// Every cell draws from its own seed, derived from the config seed and the
// cell label, so a row can be reproduced in isolation and the report does
// not depend on the thread count.

#include "thinshell/lemma_suites.hpp"
#include "thinshell/marginal_stats.hpp"
#include "thinshell/parallel.hpp"
#include "thinshell/rotation.hpp"
#include "thinshell/sampling.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace thinshell {

inline const std::vector<std::string>& known_suites() {
    static const std::vector<std::string> s{"thinshell", "marginal_clt", "flatness", "lemmas", "so_concentration"};
    return s;
}

inline const std::vector<std::string>& known_bodies() {
    static const std::vector<std::string> b{"cube", "ball", "simplex", "cross_polytope", "halfspace_cube"};
    return b;
}

struct ScanConfig {
    std::vector<std::string> bodies;
    std::vector<int> dims;
    std::vector<int> subspace_dims{1, 2};
    long long samples_per_run = 200000;
    std::vector<double> eps_grid{0.05, 0.1, 0.2};
    double smoothing_v = 0.1;
    std::uint64_t seed = 0;
    std::string output_dir = "scan_out";
    std::vector<std::string> suites{"thinshell"};
};

inline nlohmann::ordered_json to_json(const ScanConfig& c) {
    nlohmann::ordered_json j;
    j["bodies"] = c.bodies;
    j["dims"] = c.dims;
    j["subspace_dims"] = c.subspace_dims;
    j["samples_per_run"] = c.samples_per_run;
    j["eps_grid"] = c.eps_grid;
    j["smoothing_v"] = c.smoothing_v;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["suites"] = c.suites;
    return j;
}

/// Checks the invariants; throws ConfigError naming the offending key.
inline void validate(const ScanConfig& c) {
    for (const auto& b : c.bodies)
        if (std::find(known_bodies().begin(), known_bodies().end(), b) == known_bodies().end())
            throw ConfigError("unknown body \"" + b + "\"", "bodies");
    if (c.dims.empty() && !c.suites.empty()) throw ConfigError("dims must not be empty", "dims");
    for (std::size_t i = 0; i < c.dims.size(); ++i) {
        if (c.dims[i] < 2) throw ConfigError("dims must be at least 2", "dims");
        if (i > 0 && c.dims[i] <= c.dims[i - 1]) throw ConfigError("dims not increasing", "dims");
    }
    for (int l : c.subspace_dims)
        if (l < 1) throw ConfigError("subspace_dims must be positive", "subspace_dims");
    if (c.samples_per_run < 10000) throw ConfigError("samples_per_run must be at least 1e4", "samples_per_run");
    for (double e : c.eps_grid)
        if (!(e > 0.0)) throw ConfigError("eps_grid entries must be positive", "eps_grid");
    if (!(c.smoothing_v > 0.0)) throw ConfigError("smoothing_v must be positive", "smoothing_v");
    for (const auto& s : c.suites)
        if (std::find(known_suites().begin(), known_suites().end(), s) == known_suites().end())
            throw ConfigError("unknown suite \"" + s + "\"", "suites");
}

/// Parses a JSON object; defaults fill missing keys, unknown keys are rejected.
inline ScanConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto upto = text.substr(0, std::min(text.size(), e.byte == 0 ? 0 : e.byte - 1));
        const auto line = 1 + std::count(upto.begin(), upto.end(), '\n');
        throw ConfigError("parse error at line " + std::to_string(line) + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ScanConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        try {
            if (key == "bodies") c.bodies = it->get<std::vector<std::string>>();
            else if (key == "dims") c.dims = it->get<std::vector<int>>();
            else if (key == "subspace_dims") c.subspace_dims = it->get<std::vector<int>>();
            else if (key == "samples_per_run") c.samples_per_run = it->get<long long>();
            else if (key == "eps_grid") c.eps_grid = it->get<std::vector<double>>();
            else if (key == "smoothing_v") c.smoothing_v = it->get<double>();
            else if (key == "seed") c.seed = it->get<std::uint64_t>();
            else if (key == "output_dir") c.output_dir = it->get<std::string>();
            else if (key == "suites") c.suites = it->get<std::vector<std::string>>();
            else throw ConfigError("unknown key \"" + key + "\"", key);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("bad value for \"" + key + "\": " + e.what(), key);
        }
    }
    validate(c);
    return c;
}

inline ScanConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// 16 hex digits of a hash of the canonical config (output_dir excluded).
inline std::string config_hash(const ScanConfig& c) {
    auto j = to_json(c);
    j.erase("output_dir");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(mix64(fnv1a(j.dump()))));
    return buf;
}

// ---------------------------------------------------------------- rows and cells

struct ScanRow {
    std::string suite;
    std::string body;
    int n = 0;
    int l = 0;
    std::string statistic;
    double value = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double noise_floor = 0.0;
    std::uint64_t seed = 0;
    /// free text (error message, provenance); JSON only
    std::string note;

    bool operator==(const ScanRow&) const = default;
};

struct PowerLawFit {
    double c_hat;
    double kappa_hat;
    double r_squared;
};

struct FitRow {
    std::string suite;
    std::string body;
    int l;
    std::string statistic;
    PowerLawFit fit;
};

struct ScanReport {
    std::string config_hash;
    std::vector<ScanRow> rows;
    std::vector<FitRow> fits;
};

struct ScanCell {
    std::string suite;
    std::string body;
    int n;
    int l;
    std::uint64_t seed;
};

inline std::uint64_t cell_seed(std::uint64_t seed, const std::string& suite, const std::string& body, int n, int l) {
    return stream_key(seed, suite + "/" + body + "/" + std::to_string(n) + "/" + std::to_string(l));
}

/// Cells in report order: suites, then bodies, then n, then l.
inline std::vector<ScanCell> plan_cells(const ScanConfig& c) {
    std::vector<ScanCell> cells;
    auto add = [&](const std::string& suite, const std::string& body, int n, int l) {
        cells.push_back({suite, body, n, l, cell_seed(c.seed, suite, body, n, l)});
    };
    for (const auto& suite : c.suites) {
        if (suite == "lemmas") {
            add(suite, "corpus", 2, 0);
            continue;
        }
        if (suite == "so_concentration") {
            for (int n : c.dims) add(suite, "haar", n, 1);
            continue;
        }
        for (const auto& body : c.bodies)
            for (int n : c.dims) {
                if (suite == "thinshell") {
                    add(suite, body, n, 0);
                    continue;
                }
                for (int l : c.subspace_dims) {
                    if (l > n) continue;
                    if (suite == "flatness" && l != 2 && l != 3) continue;
                    add(suite, body, n, l);
                }
            }
    }
    return cells;
}

namespace detail {

inline ConvexBody scan_body(const std::string& name, int n, std::uint64_t seed) {
    if (name == "halfspace_cube") return cube_halfspaces(n);
    const auto kind = body_kind_from_string(name);
    const auto b = make_body(kind, n);
    return b.needs_normalization() ? isotropic_normalize(b, kDefaultPilot, seed).first : b;
}

inline SampleBatch scan_batch(const ScanCell& cell, long long samples) {
    auto body = scan_body(cell.body, cell.n, cell.seed);
    return sample_body(body, samples, stream_key(cell.seed, "draw"));
}

inline double z99() { return 2.576; }

}  // namespace detail

/// Rows of one cell. Statistics failures become a single error row.
inline std::vector<ScanRow> run_cell(const ScanConfig& c, const ScanCell& cell) {
    std::vector<ScanRow> rows;
    auto row = [&](std::string stat, double value, double lo, double hi, double floor) {
        rows.push_back({cell.suite, cell.body, cell.n, cell.l, std::move(stat), value, std::min(lo, value), std::max(hi, value), floor,
                        cell.seed, {}});
    };
    const double z = detail::z99();
    try {
        if (cell.suite == "thinshell") {
            const auto batch = detail::scan_batch(cell, c.samples_per_run);
            const auto s = thin_shell_stats(batch, c.eps_grid);
            const double count = static_cast<double>(s.sample_count);
            row("shell_width", s.shell_width, s.shell_width - z * s.shell_width_se, s.shell_width + z * s.shell_width_se, s.shell_width_se);
            const double mse = s.shell_width / std::sqrt(count);
            row("mean_norm_ratio", s.mean_norm_ratio, s.mean_norm_ratio - z * mse, s.mean_norm_ratio + z * mse, mse);
            for (const auto& t : s.tail)
                row("tail_eps=" + format_double(t.eps), t.frequency, t.ci.lo, t.ci.hi, std::sqrt(t.frequency * (1.0 - t.frequency) / count));
            // large-norm tail: |X| >= 10 sqrt(n)
            const double big = static_cast<double>((batch.points.rowwise().norm().array() >= 10.0 * std::sqrt(static_cast<double>(cell.n))).count());
            const auto ci = wilson_interval(big, count);
            row("large_norm_tail", big / count, ci.lo, ci.hi, 0.0);
        } else if (cell.suite == "marginal_clt") {
            const auto e = random_subspace(cell.n, cell.l, stream_key(cell.seed, "subspace"));
            const auto p = project(detail::scan_batch(cell, c.samples_per_run), e);
            const auto tv = tv_to_gaussian(p, 1.0);
            const std::string name = tv.radial ? "radial_tv" : "tv";
            row(name, tv.value, std::max(0.0, tv.value - tv.estimator_bias_bound), tv.value + tv.noise_floor, tv.noise_floor);
            const double r = best_fit_variance(p);
            const Eigen::VectorXd q = p.points.rowwise().squaredNorm() / static_cast<double>(cell.l);
            const double se = std::sqrt((q.array() - r).square().sum() / (q.size() - 1.0) / q.size());
            row("best_fit_variance", r, r - z * se, r + z * se, se);
            const auto fit = tv_to_gaussian(p, r);
            row(name + "_best_fit", fit.value, std::max(0.0, fit.value - fit.estimator_bias_bound), fit.value + fit.noise_floor,
                fit.noise_floor);
        } else if (cell.suite == "flatness") {
            const auto e = random_subspace(cell.n, cell.l, stream_key(cell.seed, "subspace"));
            const auto p = add_gaussian(project(detail::scan_batch(cell, c.samples_per_run), e), c.smoothing_v,
                                        stream_key(cell.seed, "smooth"));
            const auto f = radial_flatness(p);
            row("flatness_oscillation", f.oscillation, std::max(0.0, f.oscillation - f.noise_floor), f.oscillation + f.noise_floor,
                f.noise_floor);
            const auto s = thin_shell_stats(p, {});
            row("smoothed_shell_width", s.shell_width, s.shell_width - z * s.shell_width_se, s.shell_width + z * s.shell_width_se,
                s.shell_width_se);
        } else if (cell.suite == "lemmas") {
            SuiteOptions opt;
            opt.seed = cell.seed;
            std::vector<SuiteResult> results;
            opt.count = 40;
            auto [frad, level] = landmark_suites(opt);
            results.push_back(frad);
            results.push_back(level);
            results.push_back(level_set_radius_suite(opt));
            opt.count = 100;
            results.push_back(reweight_suite(opt));
            results.push_back(tp_suite(opt));
            opt.count = 10;
            results.push_back(decay_suite(opt));
            results.push_back(tilted_suite(opt));
            for (const auto& r : results) {
                const double v = static_cast<double>(r.violations);
                row(r.name + "_violations", v, v, v, 0.0);
                if (std::isfinite(r.worst)) row(r.name + "_worst", r.worst, r.worst, r.worst, 0.0);
            }
        } else if (cell.suite == "so_concentration") {
            const auto trials = static_cast<std::size_t>(std::clamp<long long>(c.samples_per_run / 200, 200, 1000));
            const auto t = so_concentration_tail(
                cell.n, [](const Rotation& u) { return u.matrix()(0, 0); }, 1.0, trials, c.eps_grid, cell.seed);
            const double rel = z * std::sqrt(2.0 / (static_cast<double>(trials) - 1.0));
            row("variance", t.variance, t.variance * std::max(0.0, 1.0 - rel), t.variance * (1.0 + rel), t.variance * rel / z);
            row("median", t.median, t.median, t.median, 0.0);
            for (const auto& r : t.rows)
                row("tail_eps=" + format_double(r.eps), r.frequency, r.ci.lo, r.ci.hi,
                    std::sqrt(r.frequency * (1.0 - r.frequency) / static_cast<double>(trials)));
        } else {
            throw ConfigError("unknown suite \"" + cell.suite + "\"", "suites");
        }
    } catch (const std::exception& e) {
        rows.clear();
        row("error", 0.0, 0.0, 0.0, 0.0);
        rows.back().note = e.what();
    }
    return rows;
}

// ---------------------------------------------------------------- fits

/// Least squares on log value = log C - kappa log n.
inline PowerLawFit fit_power_law(const std::vector<ScanRow>& rows) {
    if (rows.size() < 3) throw PreconditionError("fit_power_law: need at least 3 rows, got " + std::to_string(rows.size()));
    std::string bad;
    std::set<int> ns;
    std::vector<double> x, y;
    for (const auto& r : rows) {
        if (!(r.value > 0.0) || !std::isfinite(r.value))
            bad += (bad.empty() ? "" : ", ") + r.statistic + "@n=" + std::to_string(r.n) + " (" + format_double(r.value) + ")";
        ns.insert(r.n);
        x.push_back(std::log(static_cast<double>(r.n)));
        y.push_back(std::log(r.value));
    }
    if (!bad.empty()) throw FitError("fit_power_law: non-positive values: " + bad);
    if (ns.size() < 3) throw PreconditionError("fit_power_law: need at least 3 distinct n");
    const auto fit = least_squares(x, y);
    return {std::exp(fit.intercept), -fit.slope, fit.r_squared};
}

/// Statistics fitted across n when a (suite, body, l) group has >= 3 distinct n.
inline bool fitted_statistic(const std::string& s) {
    return s == "shell_width" || s == "tv" || s == "radial_tv" || s == "flatness_oscillation" || s == "variance" ||
           s == "smoothed_shell_width";
}

inline std::vector<FitRow> fit_rows(const std::vector<ScanRow>& rows) {
    std::map<std::tuple<std::string, std::string, int, std::string>, std::vector<ScanRow>> groups;
    std::vector<std::tuple<std::string, std::string, int, std::string>> order;
    for (const auto& r : rows) {
        if (!fitted_statistic(r.statistic)) continue;
        const auto key = std::make_tuple(r.suite, r.body, r.l, r.statistic);
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(r);
    }
    std::vector<FitRow> fits;
    for (const auto& key : order) {
        const auto& g = groups[key];
        std::set<int> ns;
        for (const auto& r : g) ns.insert(r.n);
        if (ns.size() < 3) continue;
        try {
            fits.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), fit_power_law(g)});
        } catch (const Error&) {
            // zero values (e.g. an empty tail) leave the statistic unfitted
        }
    }
    return fits;
}

/// Runs every cell (in parallel) and assembles rows in plan order.
inline ScanReport run_scan(const ScanConfig& c) {
    validate(c);
    const auto cells = plan_cells(c);
    std::vector<std::vector<ScanRow>> out(cells.size());
    parallel_for(cells.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) out[i] = run_cell(c, cells[i]);
    });
    ScanReport rep{config_hash(c), {}, {}};
    for (auto& rows : out) rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
    rep.fits = fit_rows(rep.rows);
    return rep;
}

}  // namespace thinshell
