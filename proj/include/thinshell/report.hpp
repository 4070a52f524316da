#pragma once

// Report serialization: CSV with a fixed column order, a JSON mirror with
// fits and notes, and self-contained log-log SVG plots of fitted statistics.
// Output names derive from the config hash; all number formatting is
// shortest round-trip, so equal reports give equal bytes.

#include "thinshell/scan.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace thinshell {

inline constexpr const char* kCsvHeader = "suite,body,n,l,statistic,value,ci_low,ci_high,noise_floor,seed";

inline std::string to_csv(const std::vector<ScanRow>& rows) {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const auto& r : rows)
        out << r.suite << ',' << r.body << ',' << r.n << ',' << r.l << ',' << r.statistic << ',' << format_double(r.value) << ','
            << format_double(r.ci_low) << ',' << format_double(r.ci_high) << ',' << format_double(r.noise_floor) << ',' << r.seed
            << '\n';
    return out.str();
}

/// Inverse of to_csv (notes are not part of the CSV).
inline std::vector<ScanRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw ConfigError("report CSV: header does not match " + std::string(kCsvHeader));
    std::vector<ScanRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 10) throw ConfigError("report CSV line " + std::to_string(lineno) + ": expected 10 fields");
        try {
            rows.push_back({f[0], f[1], std::stoi(f[2]), std::stoi(f[3]), f[4], std::stod(f[5]), std::stod(f[6]), std::stod(f[7]),
                            std::stod(f[8]), std::stoull(f[9]), {}});
        } catch (const std::logic_error&) {
            throw ConfigError("report CSV line " + std::to_string(lineno) + ": malformed number");
        }
    }
    return rows;
}

inline nlohmann::ordered_json to_json(const ScanReport& rep, const ScanConfig& config) {
    nlohmann::ordered_json j;
    j["config_hash"] = rep.config_hash;
    // output_dir is excluded so that reports written to different places compare equal
    j["config"] = to_json(config);
    j["config"].erase("output_dir");
    // nlohmann prints doubles in shortest round-trip form
    auto num = [](double x) { return nlohmann::ordered_json(x); };
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rep.rows) {
        nlohmann::ordered_json o;
        o["suite"] = r.suite;
        o["body"] = r.body;
        o["n"] = r.n;
        o["l"] = r.l;
        o["statistic"] = r.statistic;
        o["value"] = num(r.value);
        o["ci_low"] = num(r.ci_low);
        o["ci_high"] = num(r.ci_high);
        o["noise_floor"] = num(r.noise_floor);
        o["seed"] = r.seed;
        if (!r.note.empty()) o["note"] = r.note;
        j["rows"].push_back(std::move(o));
    }
    j["fits"] = nlohmann::ordered_json::array();
    for (const auto& f : rep.fits) {
        nlohmann::ordered_json o;
        o["suite"] = f.suite;
        o["body"] = f.body;
        o["l"] = f.l;
        o["statistic"] = f.statistic;
        o["c_hat"] = num(f.fit.c_hat);
        o["kappa_hat"] = num(f.fit.kappa_hat);
        o["r_squared"] = num(f.fit.r_squared);
        j["fits"].push_back(std::move(o));
    }
    return j;
}

// ---------------------------------------------------------------- SVG

/// Log-log scatter of value against n with CI whiskers and the fitted line.
inline std::string svg_plot(const FitRow& fit, const std::vector<ScanRow>& rows) {
    const double w = 480, h = 360, ml = 70, mr = 20, mt = 40, mb = 50;
    double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
    for (const auto& r : rows) {
        xmin = std::min(xmin, std::log10(static_cast<double>(r.n)));
        xmax = std::max(xmax, std::log10(static_cast<double>(r.n)));
        ymin = std::min(ymin, std::log10(std::max(r.ci_low, r.value * 1e-3)));
        ymax = std::max(ymax, std::log10(r.ci_high));
    }
    const double xpad = 0.05 * std::max(xmax - xmin, 0.1), ypad = 0.1 * std::max(ymax - ymin, 0.1);
    xmin -= xpad, xmax += xpad, ymin -= ypad, ymax += ypad;
    auto px = [&](double lx) { return ml + (lx - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto py = [&](double ly) { return h - mb - (ly - ymin) / (ymax - ymin) * (h - mt - mb); };
    auto f = [](double v) { return format_double(std::round(v * 100.0) / 100.0); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << fit.suite << " / " << fit.body << " / "
      << fit.statistic << " (l=" << fit.l << ")</text>\n";
    s << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
    for (const auto& r : rows) {
        const double lx = std::log10(static_cast<double>(r.n));
        s << "<text x=\"" << f(px(lx)) << "\" y=\"" << h - mb + 16 << "\" text-anchor=\"middle\">" << r.n << "</text>\n";
    }
    for (int k = static_cast<int>(std::ceil(ymin)); k <= static_cast<int>(std::floor(ymax)); ++k)
        s << "<text x=\"" << ml - 6 << "\" y=\"" << f(py(k) + 4) << "\" text-anchor=\"end\">1e" << k << "</text>\n";
    s << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">n</text>\n";
    for (const auto& r : rows) {
        const double x = px(std::log10(static_cast<double>(r.n)));
        const double lo = std::log10(std::max(r.ci_low, r.value * 1e-3)), hi = std::log10(r.ci_high);
        s << "<line x1=\"" << f(x) << "\" y1=\"" << f(py(lo)) << "\" x2=\"" << f(x) << "\" y2=\"" << f(py(hi)) << "\" stroke=\"gray\"/>\n";
        s << "<circle cx=\"" << f(x) << "\" cy=\"" << f(py(std::log10(r.value))) << "\" r=\"3\" fill=\"black\"/>\n";
    }
    auto line_y = [&](double lx) { return std::log10(fit.fit.c_hat) - fit.fit.kappa_hat * lx; };
    s << "<line x1=\"" << f(px(xmin)) << "\" y1=\"" << f(py(line_y(xmin))) << "\" x2=\"" << f(px(xmax)) << "\" y2=\""
      << f(py(line_y(xmax))) << "\" stroke=\"steelblue\" stroke-dasharray=\"4 3\"/>\n";
    s << "<text x=\"" << w - mr << "\" y=\"" << mt << "\" text-anchor=\"end\" fill=\"steelblue\">C=" << format_double(fit.fit.c_hat)
      << " kappa=" << format_double(fit.fit.kappa_hat) << " r2=" << format_double(fit.fit.r_squared) << "</text>\n";
    s << "</svg>\n";
    return s.str();
}

// ---------------------------------------------------------------- files

struct EmitFormats {
    bool csv = true;
    bool json = true;
    bool svg = true;
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::string slug(std::string s) {
    for (char& ch : s)
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '.' && ch != '-') ch = '_';
    return s;
}

}  // namespace detail

/// Writes scan-<hash>.csv / .json and one SVG per fit; returns the paths written.
inline std::vector<std::filesystem::path> emit_report(const ScanReport& rep, const ScanConfig& config, const EmitFormats& formats = {}) {
    const std::filesystem::path dir(config.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
    const std::string stem = "scan-" + rep.config_hash;
    std::vector<std::filesystem::path> written;
    if (formats.csv) {
        written.push_back(dir / (stem + ".csv"));
        detail::write_text(written.back(), to_csv(rep.rows));
    }
    if (formats.json) {
        written.push_back(dir / (stem + ".json"));
        detail::write_text(written.back(), to_json(rep, config).dump(2) + "\n");
    }
    if (formats.svg) {
        for (const auto& fit : rep.fits) {
            std::vector<ScanRow> pts;
            for (const auto& r : rep.rows)
                if (r.suite == fit.suite && r.body == fit.body && r.l == fit.l && r.statistic == fit.statistic) pts.push_back(r);
            written.push_back(dir / (stem + "-" + detail::slug(fit.suite + "-" + fit.body + "-l" + std::to_string(fit.l) + "-" + fit.statistic) + ".svg"));
            detail::write_text(written.back(), svg_plot(fit, pts));
        }
    }
    return written;
}

}  // namespace thinshell
