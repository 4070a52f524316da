#pragma once

// Convex bodies: standard test bodies and H-polytopes, each stored as a raw
// body K together with an affine placement y = L x + c. All public
// coordinates are placed coordinates.

#include "thinshell/core.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace thinshell {

enum class BodyKind { cube, ball, simplex, cross_polytope, halfspaces };

inline std::string to_string(BodyKind k) {
    switch (k) {
        case BodyKind::cube: return "cube";
        case BodyKind::ball: return "ball";
        case BodyKind::simplex: return "simplex";
        case BodyKind::cross_polytope: return "cross_polytope";
        case BodyKind::halfspaces: return "halfspaces";
    }
    return "?";
}

inline BodyKind body_kind_from_string(const std::string& s) {
    for (BodyKind k : {BodyKind::cube, BodyKind::ball, BodyKind::simplex, BodyKind::cross_polytope, BodyKind::halfspaces})
        if (to_string(k) == s) return k;
    throw PreconditionError("unknown body kind '" + s + "'");
}

/// y = whitening (x - shift). whitening is symmetric positive definite.
struct IsotropicTransform {
    Point shift;
    Matrix whitening;
    long long sample_count_used = 0;
};

struct Halfspace {
    Point normal;  ///< unit length
    double offset;
};

/// Chord parameters of a line x + t u through a body: t in [lo, hi].
struct Chord {
    double lo;
    double hi;
};

class ConvexBody {
public:
    int dim() const noexcept { return dim_; }
    BodyKind kind() const noexcept { return kind_; }
    const std::string& id() const noexcept { return id_; }

    /// True for simplex and cross-polytope until isotropic_normalize has run.
    bool needs_normalization() const noexcept { return needs_normalization_; }
    const std::vector<IsotropicTransform>& placements() const noexcept { return placements_; }

    /// Placed halfspaces with unit normals; empty for non-halfspace kinds.
    const std::vector<Halfspace>& halfspaces() const noexcept { return placed_halfspaces_; }

    /// Radius of an origin-centred ball guaranteed to lie inside the body
    /// (exact for polytopes with few facets and balls, a lower bound for the
    /// cross-polytope).
    double inner_radius() const noexcept { return inner_radius_; }

    /// Raw half-width (cube), radius (ball) or 1 (simplex, cross-polytope).
    double raw_scale() const noexcept { return scale_; }
    const Matrix& linear() const noexcept { return linear_; }
    const Point& offset() const noexcept { return offset_; }
    bool linear_is_identity() const noexcept { return identity_linear_; }

    bool contains(const Point& y) const {
        if (y.size() != dim_) throw PreconditionError("contains: dimension mismatch");
        if (kind_ == BodyKind::halfspaces) {
            for (const auto& h : placed_halfspaces_)
                if (h.normal.dot(y) > h.offset + 1e-12) return false;
            return true;
        }
        return raw_contains(to_raw(y));
    }

    /// Raw coordinates of a placed point.
    Point to_raw(const Point& y) const {
        if (identity_linear_) return y - offset_;
        return inverse_linear_ * (y - offset_);
    }
    Point to_placed(const Point& x) const {
        if (identity_linear_) return x + offset_;
        return linear_ * x + offset_;
    }
    /// Direction in raw coordinates of a placed direction.
    Point raw_direction(const Point& u) const { return identity_linear_ ? u : Point(inverse_linear_ * u); }

    bool raw_contains(const Point& x) const {
        switch (kind_) {
            case BodyKind::cube: return x.cwiseAbs().maxCoeff() <= scale_;
            case BodyKind::ball: return x.squaredNorm() <= scale_ * scale_;
            case BodyKind::simplex: return x.minCoeff() >= 0.0 && x.sum() <= 1.0;
            case BodyKind::cross_polytope: return x.lpNorm<1>() <= 1.0;
            case BodyKind::halfspaces: return ((raw_normals_ * x).array() <= raw_offsets_.array() + 1e-12).all();
        }
        return false;
    }

    /// Exact chord of the raw body through raw point x along raw direction d.
    /// Returns nullopt if x is outside or the chord is unbounded.
    std::optional<Chord> raw_chord(const Point& x, const Point& d) const {
        double lo = -kInfinity, hi = kInfinity;
        auto slab = [&](double a_dot_d, double slack) {  // a.(x + t d) <= b with slack = b - a.x
            if (a_dot_d > 0.0) hi = std::min(hi, slack / a_dot_d);
            else if (a_dot_d < 0.0) lo = std::max(lo, slack / a_dot_d);
            else if (slack < 0.0) hi = -kInfinity;
        };
        switch (kind_) {
            case BodyKind::cube:
                for (int i = 0; i < dim_; ++i) {
                    slab(d[i], scale_ - x[i]);
                    slab(-d[i], scale_ + x[i]);
                }
                break;
            case BodyKind::ball: {
                const double a = d.squaredNorm(), b = x.dot(d), c = x.squaredNorm() - scale_ * scale_;
                const double disc = b * b - a * c;
                if (a <= 0.0 || disc < 0.0) return std::nullopt;
                const double s = std::sqrt(disc);
                // stable roots of a t^2 + 2 b t + c = 0
                const double q = b >= 0.0 ? -(b + s) : -(b - s);
                double t1 = q / a, t2 = q != 0.0 ? c / q : -t1;
                if (t1 > t2) std::swap(t1, t2);
                lo = t1;
                hi = t2;
                break;
            }
            case BodyKind::simplex:
                for (int i = 0; i < dim_; ++i) slab(-d[i], x[i]);
                slab(d.sum(), 1.0 - x.sum());
                break;
            case BodyKind::cross_polytope: {
                if (x.lpNorm<1>() > 1.0) return std::nullopt;
                hi = l1_exit(x, d);
                lo = -l1_exit(x, static_cast<Point>(-d));
                break;
            }
            case BodyKind::halfspaces: {
                const Point ad = raw_normals_ * d;
                const Point slack = raw_offsets_ - raw_normals_ * x;
                for (Eigen::Index i = 0; i < ad.size(); ++i) slab(ad[i], std::max(slack[i], 0.0));
                if ((slack.array() < -1e-9).any()) return std::nullopt;
                break;
            }
        }
        if (!(lo <= 0.0 && hi >= 0.0) || !std::isfinite(lo) || !std::isfinite(hi)) return std::nullopt;
        return Chord{lo, hi};
    }

    /// Distance from the origin to the boundary along the placed direction u.
    double radial_extent(const Point& u) const {
        const auto c = raw_chord(to_raw(Point::Zero(dim_)), raw_direction(u.normalized()));
        return c ? c->hi : kInfinity;
    }

    nlohmann::json to_json() const;
    static ConvexBody from_json(const nlohmann::json& j);

    friend ConvexBody make_body(BodyKind kind, int n);
    friend ConvexBody from_halfspaces(const std::vector<Halfspace>& constraints);
    friend ConvexBody affine_image(const ConvexBody& body, const Matrix& linear, const Point& shift, std::string tag);
    friend ConvexBody with_placement(const ConvexBody& body, const IsotropicTransform& t);

private:
    static constexpr double kInfinity = std::numeric_limits<double>::infinity();

    // largest t >= 0 with |x + t d|_1 <= 1: walk the breakpoints of the
    // convex piecewise-linear function t -> |x + t d|_1 in increasing order
    double l1_exit(const Point& x, const Point& d) const {
        std::vector<std::pair<double, double>> breaks;  // (t_i, |d_i|) where coordinate i changes sign
        double value = x.lpNorm<1>(), slope = 0.0;
        for (int i = 0; i < dim_; ++i) {
            if (d[i] == 0.0) continue;
            if (x[i] * d[i] > 0.0 || x[i] == 0.0) slope += std::abs(d[i]);
            else {
                slope -= std::abs(d[i]);
                breaks.emplace_back(-x[i] / d[i], std::abs(d[i]));
            }
        }
        std::sort(breaks.begin(), breaks.end());
        double t = 0.0;
        for (const auto& [tb, w] : breaks) {
            if (slope > 0.0 && value + slope * (tb - t) >= 1.0) return t + (1.0 - value) / slope;
            value += slope * (tb - t);
            t = tb;
            slope += 2.0 * w;
        }
        if (slope <= 0.0) return kInfinity;
        return t + (1.0 - value) / slope;
    }

    void finalize();

    int dim_ = 0;
    BodyKind kind_ = BodyKind::cube;
    std::string id_;
    double scale_ = 1.0;
    Matrix raw_normals_;
    Point raw_offsets_;
    Matrix linear_, inverse_linear_;
    Point offset_;
    bool identity_linear_ = true;
    bool needs_normalization_ = false;
    std::vector<IsotropicTransform> placements_;
    std::vector<Halfspace> placed_halfspaces_;
    double inner_radius_ = 0.0;
};

inline void ConvexBody::finalize() {
    identity_linear_ = linear_.isIdentity(0.0);
    inverse_linear_ = identity_linear_ ? linear_ : Matrix(linear_.inverse());
    const Point x0 = to_raw(Point::Zero(dim_));  // raw preimage of the origin
    // placed facet of raw facet a.x <= b: (L^{-T} a).y <= b - a.L^{-1} c
    auto facet_distance = [&](const Point& a, double b) {
        const Point na = inverse_linear_.transpose() * a;
        return (b - a.dot(x0)) / na.norm();
    };
    placed_halfspaces_.clear();
    double r = kInfinity;
    switch (kind_) {
        case BodyKind::cube:
            for (int i = 0; i < dim_; ++i)
                for (double s : {1.0, -1.0}) r = std::min(r, facet_distance(s * Point::Unit(dim_, i), scale_));
            break;
        case BodyKind::ball: {
            const double smin = Eigen::JacobiSVD<Matrix>(linear_).singularValues().minCoeff();
            r = (scale_ - x0.norm()) * smin;
            break;
        }
        case BodyKind::simplex:
            for (int i = 0; i < dim_; ++i) r = std::min(r, facet_distance(-Point::Unit(dim_, i), 0.0));
            r = std::min(r, facet_distance(Point::Ones(dim_), 1.0));
            break;
        case BodyKind::cross_polytope: {
            // every facet normal is a sign vector of norm sqrt(n)
            const double smax = Eigen::JacobiSVD<Matrix>(inverse_linear_).singularValues().maxCoeff();
            r = (1.0 - x0.lpNorm<1>()) / (smax * std::sqrt(static_cast<double>(dim_)));
            break;
        }
        case BodyKind::halfspaces:
            for (Eigen::Index i = 0; i < raw_normals_.rows(); ++i) {
                const Point a = raw_normals_.row(i).transpose();
                const Point na = inverse_linear_.transpose() * a;
                const double norm = na.norm();
                placed_halfspaces_.push_back({na / norm, (raw_offsets_[i] - a.dot(x0)) / norm});
                r = std::min(r, placed_halfspaces_.back().offset);
            }
            break;
    }
    inner_radius_ = r;
    if (!(inner_radius_ > 0.0))
        throw BodyConstructionError(id_ + ": origin is not interior after placement", Point::Zero(dim_));
}

/// Standard test body. Cube and ball come in isotropic position
/// ([-sqrt3, sqrt3]^n and the ball of radius sqrt(n+2)); simplex and
/// cross-polytope are centred at their barycenter and flagged for empirical
/// normalization.
inline ConvexBody make_body(BodyKind kind, int n) {
    if (n < 1) throw PreconditionError("make_body: dimension must be >= 1");
    if (kind == BodyKind::halfspaces) throw PreconditionError("make_body: use from_halfspaces for H-polytopes");
    ConvexBody b;
    b.dim_ = n;
    b.kind_ = kind;
    b.id_ = to_string(kind) + std::to_string(n);
    b.linear_ = Matrix::Identity(n, n);
    b.offset_ = Point::Zero(n);
    switch (kind) {
        case BodyKind::cube: b.scale_ = std::sqrt(3.0); break;
        case BodyKind::ball: b.scale_ = std::sqrt(n + 2.0); break;
        case BodyKind::simplex:
            b.offset_ = Point::Constant(n, -1.0 / (n + 1.0));
            b.needs_normalization_ = true;
            break;
        case BodyKind::cross_polytope: b.needs_normalization_ = true; break;
        case BodyKind::halfspaces: break;
    }
    b.finalize();
    return b;
}

/// H-polytope {x : <a_i, x> <= b_i}. Normals are rescaled to unit length.
/// The origin must be interior (all b_i > 0); boundedness is probed along
/// coordinate directions, minus each normal, and a fixed set of further
/// directions, and an unbounded probe is reported as the witness.
inline ConvexBody from_halfspaces(const std::vector<Halfspace>& constraints) {
    if (constraints.empty()) throw PreconditionError("from_halfspaces: no constraints");
    const int n = static_cast<int>(constraints.front().normal.size());
    if (n < 1) throw PreconditionError("from_halfspaces: zero-dimensional normal");
    ConvexBody b;
    b.dim_ = n;
    b.kind_ = BodyKind::halfspaces;
    b.raw_normals_.resize(static_cast<Eigen::Index>(constraints.size()), n);
    b.raw_offsets_.resize(static_cast<Eigen::Index>(constraints.size()));
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        const auto& h = constraints[i];
        if (h.normal.size() != n) throw PreconditionError("from_halfspaces: normals have different dimensions");
        const double norm = h.normal.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) throw PreconditionError("from_halfspaces: zero or non-finite normal");
        if (!(h.offset > 0.0))
            throw BodyConstructionError("from_halfspaces: region is empty or the origin is not interior (constraint " +
                                            std::to_string(i) + ")",
                                        h.normal / norm);
        b.raw_normals_.row(static_cast<Eigen::Index>(i)) = h.normal.transpose() / norm;
        b.raw_offsets_[static_cast<Eigen::Index>(i)] = h.offset / norm;
    }
    std::vector<Point> probes;
    for (int i = 0; i < n; ++i) {
        probes.push_back(Point::Unit(n, i));
        probes.push_back(-Point::Unit(n, i));
    }
    for (Eigen::Index i = 0; i < b.raw_normals_.rows(); ++i) probes.push_back(-b.raw_normals_.row(i).transpose());
    for (int k = 0; k < 4 * n + 16; ++k) {
        // deterministic quasi-random directions
        Point u(n);
        for (int i = 0; i < n; ++i) u[i] = std::sin(12.9898 * (k + 1) + 78.233 * (i + 1)) + 1e-3 * (i + 1);
        probes.push_back(u.normalized());
    }
    for (const Point& u : probes)
        if ((b.raw_normals_ * u).maxCoeff() <= 0.0)
            throw BodyConstructionError("from_halfspaces: region is unbounded along the witness direction", u);
    b.id_ = "halfspaces" + std::to_string(n) + "x" + std::to_string(constraints.size());
    b.linear_ = Matrix::Identity(n, n);
    b.offset_ = Point::Zero(n);
    b.finalize();
    return b;
}

/// The cube [-a, a]^n as 2n halfspaces.
inline ConvexBody cube_halfspaces(int n, double a = std::sqrt(3.0)) {
    std::vector<Halfspace> hs;
    for (int i = 0; i < n; ++i) {
        hs.push_back({Point::Unit(n, i), a});
        hs.push_back({-Point::Unit(n, i), a});
    }
    return from_halfspaces(hs);
}

/// { linear y + shift : y in body }.
inline ConvexBody affine_image(const ConvexBody& body, const Matrix& linear, const Point& shift, std::string tag) {
    if (linear.rows() != body.dim_ || linear.cols() != body.dim_ || shift.size() != body.dim_)
        throw PreconditionError("affine_image: dimension mismatch");
    ConvexBody b = body;
    b.linear_ = linear * body.linear_;
    b.offset_ = linear * body.offset_ + shift;
    b.id_ = body.id_ + "*" + tag;
    b.finalize();
    return b;
}

/// Applies y -> whitening (y - shift) and records it.
inline ConvexBody with_placement(const ConvexBody& body, const IsotropicTransform& t) {
    ConvexBody b = affine_image(body, t.whitening, -(t.whitening * t.shift), "iso");
    b.id_ = body.id_;
    b.placements_.push_back(t);
    b.needs_normalization_ = false;
    return b;
}

// ---------------------------------------------------------------- JSON

namespace detail {

inline nlohmann::json vec_json(const Point& p) { return std::vector<double>(p.data(), p.data() + p.size()); }

inline Point json_vec(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Point>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json mat_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
    return rows;
}

inline Matrix json_mat(const nlohmann::json& j, Eigen::Index cols) {
    Matrix m(static_cast<Eigen::Index>(j.size()), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Point r = json_vec(j[i]);
        if (r.size() != cols) throw PreconditionError("body JSON: ragged matrix");
        m.row(static_cast<Eigen::Index>(i)) = r.transpose();
    }
    return m;
}

}  // namespace detail

inline nlohmann::json ConvexBody::to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind_);
    j["dim"] = dim_;
    j["id"] = id_;
    if (kind_ == BodyKind::halfspaces) {
        nlohmann::json hs = nlohmann::json::array();
        for (Eigen::Index i = 0; i < raw_normals_.rows(); ++i)
            hs.push_back({{"normal", detail::vec_json(raw_normals_.row(i).transpose())}, {"offset", raw_offsets_[i]}});
        j["halfspaces"] = hs;
    }
    j["transform"] = {{"linear", detail::mat_json(linear_)}, {"offset", detail::vec_json(offset_)}};
    nlohmann::json ps = nlohmann::json::array();
    for (const auto& p : placements_)
        ps.push_back({{"shift", detail::vec_json(p.shift)},
                      {"whitening", detail::mat_json(p.whitening)},
                      {"sample_count_used", p.sample_count_used}});
    j["placements"] = ps;
    j["needs_normalization"] = needs_normalization_;
    return j;
}

inline ConvexBody ConvexBody::from_json(const nlohmann::json& j) {
    const BodyKind kind = body_kind_from_string(j.at("kind").get<std::string>());
    const int n = j.at("dim").get<int>();
    ConvexBody b;
    if (kind == BodyKind::halfspaces) {
        std::vector<Halfspace> hs;
        for (const auto& h : j.at("halfspaces")) hs.push_back({detail::json_vec(h.at("normal")), h.at("offset").get<double>()});
        b = from_halfspaces(hs);
    } else {
        b = make_body(kind, n);
    }
    if (j.contains("id")) b.id_ = j["id"].get<std::string>();
    if (j.contains("transform")) {
        b.linear_ = detail::json_mat(j["transform"].at("linear"), n);
        b.offset_ = detail::json_vec(j["transform"].at("offset"));
    }
    b.placements_.clear();
    if (j.contains("placements"))
        for (const auto& p : j["placements"])
            b.placements_.push_back({detail::json_vec(p.at("shift")), detail::json_mat(p.at("whitening"), n),
                                     p.at("sample_count_used").get<long long>()});
    if (j.contains("needs_normalization")) b.needs_normalization_ = j["needs_normalization"].get<bool>();
    b.finalize();
    return b;
}

}  // namespace thinshell
