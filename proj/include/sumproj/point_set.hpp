#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "sumproj/geometry.hpp"
#include "sumproj/scale.hpp"

namespace sumproj {

// Relative slack for "distance >= delta" comparisons. Grid-aligned inputs
// are exact, but sets assembled from rounded arithmetic may sit on the
// boundary a few ulps short.
inline constexpr double kSepSlack = 1e-9;

inline std::int64_t grid_cell(double x, const Scale& scale) {
    // x / delta = x * 2^m; ldexp is exact, so grid-aligned coordinates land
    // exactly on integers and floor is unambiguous.
    return static_cast<std::int64_t>(std::floor(std::ldexp(x, scale.m)));
}

struct PointSet1D {
    std::vector<double> points;  // sorted strictly increasing, within [0, 1]
    Scale scale;

    PointSet1D(std::vector<double> pts, Scale sc) : points(std::move(pts)), scale(sc) {
        std::sort(points.begin(), points.end());
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (points[i] < 0.0 || points[i] > 1.0)
                throw std::invalid_argument("PointSet1D: point outside [0, 1]");
            if (i > 0 && points[i] == points[i - 1])
                throw std::invalid_argument("PointSet1D: duplicate point");
        }
    }

    std::size_t size() const { return points.size(); }
};

struct PointSet2D {
    std::vector<Vec2> points;  // within the bounding box [0, 2]^2
    Scale scale;

    PointSet2D(std::vector<Vec2> pts, Scale sc) : points(std::move(pts)), scale(sc) {
        for (const Vec2& p : points)
            if (p.x < 0.0 || p.x > 2.0 || p.y < 0.0 || p.y > 2.0)
                throw std::invalid_argument("PointSet2D: point outside [0, 2]^2");
    }

    std::size_t size() const { return points.size(); }
};

// ---------------------------------------------------------------------------
// Covering numbers: nonempty delta-grid cells meeting the set. This is the
// deterministic stand-in for "number of delta-separated points"; a maximal
// separated subset is within factor 2 (1D) / 4 (2D) of it.
// ---------------------------------------------------------------------------

inline std::int64_t covering_number(std::span<const double> values, const Scale& scale) {
    std::unordered_set<std::int64_t> cells;
    cells.reserve(values.size() * 2);
    for (double v : values) cells.insert(grid_cell(v, scale));
    return static_cast<std::int64_t>(cells.size());
}

inline std::int64_t covering_number(std::span<const Vec2> pts, const Scale& scale) {
    std::unordered_set<std::int64_t> cells;
    cells.reserve(pts.size() * 2);
    for (const Vec2& p : pts) {
        // Pack the two cell indices; coordinates stay within |cell| < 2^24.
        std::int64_t cx = grid_cell(p.x, scale), cy = grid_cell(p.y, scale);
        cells.insert((cx << 26) ^ cy);
    }
    return static_cast<std::int64_t>(cells.size());
}

inline std::int64_t covering_number(const PointSet1D& X) {
    return covering_number(std::span<const double>(X.points), X.scale);
}
inline std::int64_t covering_number(const PointSet2D& X) {
    return covering_number(std::span<const Vec2>(X.points), X.scale);
}

// ---------------------------------------------------------------------------
// delta-separation
// ---------------------------------------------------------------------------

inline bool is_delta_separated(const PointSet1D& X) {
    const double lo = X.scale.delta() * (1.0 - kSepSlack);
    for (std::size_t i = 1; i < X.points.size(); ++i)
        if (X.points[i] - X.points[i - 1] < lo) return false;
    return true;
}

inline bool is_delta_separated(std::span<const Vec2> pts, const Scale& scale) {
    const double delta = scale.delta();
    const double lo_sq = delta * delta * (1.0 - 2.0 * kSepSlack);
    // Hash points into delta-cells; any pair closer than delta shares a
    // 3x3 cell neighbourhood.
    std::unordered_multimap<std::int64_t, std::size_t> grid;
    grid.reserve(pts.size() * 2);
    auto key = [&](std::int64_t cx, std::int64_t cy) { return (cx << 26) ^ cy; };
    for (std::size_t i = 0; i < pts.size(); ++i) {
        std::int64_t cx = grid_cell(pts[i].x, scale), cy = grid_cell(pts[i].y, scale);
        for (std::int64_t dx = -1; dx <= 1; ++dx)
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                auto range = grid.equal_range(key(cx + dx, cy + dy));
                for (auto it = range.first; it != range.second; ++it)
                    if ((pts[i] - pts[it->second]).norm_sq() < lo_sq) return false;
            }
        grid.emplace(key(cx, cy), i);
    }
    return true;
}

inline bool is_delta_separated(const PointSet2D& X) {
    return is_delta_separated(std::span<const Vec2>(X.points), X.scale);
}

// ---------------------------------------------------------------------------
// Non-concentration: the smallest K with |X ∩ B(x,r)| <= K (r/delta)^s over
// centers x in X and dyadic radii r = delta * 2^k, k = 0..m. Restricting
// centers to X and radii to dyadic values changes the true constant by at
// most a factor 2 * 2^s.
// ---------------------------------------------------------------------------

struct NonConReport {
    double s = 0.0;
    double constant = 0.0;      // max over tested (center, radius) of count / (r/delta)^s
    bool has_witness = false;
    double witness_x = 0.0;
    double witness_y = 0.0;     // unused for 1D sets
    double witness_radius = 0.0;
    std::int64_t witness_count = 0;
};

inline NonConReport nonconcentration(const PointSet1D& X, double s) {
    if (s <= 0.0 || s > 1.0) throw std::invalid_argument("nonconcentration: need 0 < s <= 1 in 1D");
    NonConReport rep;
    rep.s = s;
    if (X.points.empty()) return rep;
    const double delta = X.scale.delta();
    const auto& pts = X.points;
    for (double c : pts) {
        for (int k = 0; k <= X.scale.m; ++k) {
            const double r = std::ldexp(delta, k);
            auto lo = std::lower_bound(pts.begin(), pts.end(), c - r);
            auto hi = std::upper_bound(pts.begin(), pts.end(), c + r);
            const auto count = static_cast<std::int64_t>(hi - lo);
            const double ratio = static_cast<double>(count) / std::exp2(k * s);
            if (ratio > rep.constant) {
                rep.constant = ratio;
                rep.has_witness = true;
                rep.witness_x = c;
                rep.witness_radius = r;
                rep.witness_count = count;
            }
        }
    }
    return rep;
}

inline NonConReport nonconcentration(const PointSet2D& X, double s) {
    if (s <= 0.0 || s > 2.0) throw std::invalid_argument("nonconcentration: need 0 < s <= 2 in 2D");
    NonConReport rep;
    rep.s = s;
    if (X.points.empty()) return rep;
    const double delta = X.scale.delta();
    // Scan x-sorted points per center; the x-window prunes most of the set
    // at small radii.
    std::vector<Vec2> sorted = X.points;
    std::sort(sorted.begin(), sorted.end(), [](Vec2 a, Vec2 b) { return a.x < b.x; });
    std::vector<double> xs(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) xs[i] = sorted[i].x;
    for (const Vec2& c : X.points) {
        for (int k = 0; k <= X.scale.m; ++k) {
            const double r = std::ldexp(delta, k);
            const double r_sq = r * r;
            auto lo = std::lower_bound(xs.begin(), xs.end(), c.x - r) - xs.begin();
            auto hi = std::upper_bound(xs.begin(), xs.end(), c.x + r) - xs.begin();
            std::int64_t count = 0;
            for (auto i = lo; i < hi; ++i)
                if ((sorted[static_cast<std::size_t>(i)] - c).norm_sq() <= r_sq) ++count;
            const double ratio = static_cast<double>(count) / std::exp2(k * s);
            if (ratio > rep.constant) {
                rep.constant = ratio;
                rep.has_witness = true;
                rep.witness_x = c.x;
                rep.witness_y = c.y;
                rep.witness_radius = r;
                rep.witness_count = count;
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Greedy (delta, s)-subset extraction. Left-to-right pass; a point is kept
// iff it stays delta-separated from the last kept point and, for every
// dyadic radius r = delta * 2^k, the trailing half-open window (p - r, p]
// holds at most ceil((r/delta)^s) kept points. Capping trailing windows
// bounds every tested ball B(x, r) by 2 ceil((r/delta)^s) + 1, which keeps
// the measured non-concentration constant at most 4 for s >= 1/2.
// ---------------------------------------------------------------------------

inline PointSet1D extract_delta_s_subset(const PointSet1D& X, double s) {
    if (X.points.empty()) throw std::invalid_argument("extract_delta_s_subset: empty input");
    if (s <= 0.0 || s > 1.0) throw std::invalid_argument("extract_delta_s_subset: need 0 < s <= 1");
    const Scale& scale = X.scale;
    const double delta = scale.delta();
    const double sep = delta * (1.0 - kSepSlack);
    std::vector<double> caps(static_cast<std::size_t>(scale.m) + 1);
    for (int k = 0; k <= scale.m; ++k) caps[static_cast<std::size_t>(k)] = std::ceil(std::exp2(k * s));
    std::vector<double> kept;
    kept.reserve(X.points.size());
    for (double p : X.points) {
        if (!kept.empty() && p - kept.back() < sep) continue;
        bool ok = true;
        for (int k = 0; k <= scale.m && ok; ++k) {
            const double r = std::ldexp(delta, k);
            auto lo = std::upper_bound(kept.begin(), kept.end(), p - r);
            const auto in_window = static_cast<double>(kept.end() - lo) + 1.0;  // including p
            if (in_window > caps[static_cast<std::size_t>(k)]) ok = false;
        }
        if (ok) kept.push_back(p);
    }
    return PointSet1D(std::move(kept), scale);
}

}  // namespace sumproj
