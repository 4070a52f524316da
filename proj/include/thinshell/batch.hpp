#pragma once

// Sample batches with provenance, and their on-disk layouts: CSV, or a flat
// little-endian row-major binary file with a JSON sidecar.

#include "thinshell/core.hpp"

#include "json.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace thinshell {

struct ChainInfo {
    long long burn_in = 0;
    long long thinning = 1;
    long long chains = 1;
    std::string start = "origin";
};

struct Provenance {
    std::uint64_t seed = 0;
    std::string source;              ///< body or density id
    std::optional<ChainInfo> chain;  ///< nullopt for exact samples
    double gaussian_v_added = 0.0;
    std::vector<std::string> subspaces;  ///< projections applied, in order
};

struct SampleBatch {
    RowMatrix points;  ///< one point per row
    Provenance provenance;

    Eigen::Index count() const noexcept { return points.rows(); }
    Eigen::Index dim() const noexcept { return points.cols(); }

    /// Throws if any entry is NaN or the provenance has no source.
    void validate() const {
        if (points.hasNaN()) throw PreconditionError("SampleBatch: NaN entry");
        if (provenance.source.empty()) throw PreconditionError("SampleBatch: provenance has no source");
    }
};

inline nlohmann::json to_json(const Provenance& p) {
    nlohmann::json j{{"seed", p.seed}, {"source", p.source}, {"gaussian_v_added", p.gaussian_v_added}, {"subspaces", p.subspaces}};
    if (p.chain)
        j["chain"] = {{"burn_in", p.chain->burn_in}, {"thinning", p.chain->thinning}, {"chains", p.chain->chains}, {"start", p.chain->start}};
    else
        j["chain"] = "exact";
    return j;
}

inline Provenance provenance_from_json(const nlohmann::json& j) {
    Provenance p;
    p.seed = j.at("seed").get<std::uint64_t>();
    p.source = j.at("source").get<std::string>();
    p.gaussian_v_added = j.at("gaussian_v_added").get<double>();
    p.subspaces = j.at("subspaces").get<std::vector<std::string>>();
    const auto& c = j.at("chain");
    if (c.is_object())
        p.chain = ChainInfo{c.at("burn_in").get<long long>(), c.at("thinning").get<long long>(), c.at("chains").get<long long>(),
                            c.at("start").get<std::string>()};
    return p;
}

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

namespace detail {

inline std::string sidecar_path(const std::string& path) { return path + ".json"; }

inline void write_sidecar(const SampleBatch& b, const std::string& path, const std::string& layout) {
    std::ofstream out(sidecar_path(path));
    if (!out) throw Error("cannot write " + sidecar_path(path));
    nlohmann::json j{{"layout", layout}, {"rows", b.count()}, {"cols", b.dim()}, {"provenance", to_json(b.provenance)}};
    out << j.dump(2) << '\n';
}

inline nlohmann::json read_sidecar(const std::string& path) {
    std::ifstream in(sidecar_path(path));
    if (!in) throw Error("cannot read " + sidecar_path(path));
    return nlohmann::json::parse(in);
}

}  // namespace detail

/// CSV with header x0,...,x{n-1}; provenance goes to path + ".json".
inline void write_csv(const SampleBatch& b, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (Eigen::Index j = 0; j < b.dim(); ++j) out << (j ? "," : "") << 'x' << j;
    out << '\n';
    for (Eigen::Index i = 0; i < b.count(); ++i) {
        for (Eigen::Index j = 0; j < b.dim(); ++j) out << (j ? "," : "") << format_double(b.points(i, j));
        out << '\n';
    }
    if (!out) throw Error("write failed: " + path);
    detail::write_sidecar(b, path, "csv");
}

inline SampleBatch read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    const auto meta = detail::read_sidecar(path);
    const auto rows = meta.at("rows").get<Eigen::Index>(), cols = meta.at("cols").get<Eigen::Index>();
    SampleBatch b;
    b.points.resize(rows, cols);
    b.provenance = provenance_from_json(meta.at("provenance"));
    std::string line;
    std::getline(in, line);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw Error(path + ": fewer rows than the sidecar declares");
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (Eigen::Index j = 0; j < cols; ++j) {
            double v = 0.0;
            const auto r = std::from_chars(p, end, v);
            if (r.ec != std::errc()) throw Error(path + ": bad number on row " + std::to_string(i + 2));
            b.points(i, j) = v;
            p = r.ptr + (r.ptr < end ? 1 : 0);
        }
    }
    return b;
}

/// Raw little-endian doubles, row-major; provenance goes to path + ".json".
inline void write_binary(const SampleBatch& b, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(b.points.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(b.points.size())));
    if (!out) throw Error("write failed: " + path);
    detail::write_sidecar(b, path, "binary-f64-le-row-major");
}

inline SampleBatch read_binary(const std::string& path) {
    const auto meta = detail::read_sidecar(path);
    SampleBatch b;
    b.points.resize(meta.at("rows").get<Eigen::Index>(), meta.at("cols").get<Eigen::Index>());
    b.provenance = provenance_from_json(meta.at("provenance"));
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    in.read(reinterpret_cast<char*>(b.points.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(b.points.size())));
    if (!in) throw Error(path + ": shorter than the sidecar declares");
    return b;
}

}  // namespace thinshell
