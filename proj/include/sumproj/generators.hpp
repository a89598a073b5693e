#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "sumproj/direction.hpp"
#include "sumproj/point_set.hpp"
#include "sumproj/scale.hpp"

namespace sumproj {

namespace detail {
// Round to the delta-grid so bucket membership is unambiguous.
inline double snap_to_grid(double x, const Scale& scale) {
    return std::ldexp(std::nearbyint(std::ldexp(x, scale.m)), -scale.m);
}
}  // namespace detail

// Arithmetic progression {k * delta^s} ∩ [0, 1], snapped to the delta-grid.
// The canonical (delta, s)-set witness: cardinality within factor 2 of
// delta^-s, non-concentration constant <= 4.
inline PointSet1D ap_set(const Scale& scale, double s) {
    if (s <= 0.0 || s > 1.0) throw std::invalid_argument("ap_set: need 0 < s <= 1");
    const double gap = scale.delta_pow(s);
    std::vector<double> pts;
    for (double x = 0.0; x <= 1.0 + 1e-12; x += gap) {
        double snapped = detail::snap_to_grid(x, scale);
        if (snapped > 1.0) break;
        if (pts.empty() || snapped > pts.back()) pts.push_back(snapped);
    }
    return PointSet1D(std::move(pts), scale);
}

// Cantor-like set: keep b = 2^p of B = 2^q branches per level, evenly
// spread, for s = p/q with q dividing m. Cardinality 2^(m s) by
// construction.
inline PointSet1D cantor_set(const Scale& scale, double s) {
    int best_p = -1, best_q = -1;
    double nearest = -1.0, nearest_err = 2.0;
    for (int q = 1; q <= scale.m; ++q) {
        if (scale.m % q != 0) continue;
        for (int p = 1; p <= q; ++p) {
            const double cand = static_cast<double>(p) / q;
            const double err = std::fabs(cand - s);
            if (err < 1e-9 && best_q < 0) {
                best_p = p;
                best_q = q;
            }
            if (err < nearest_err) {
                nearest_err = err;
                nearest = cand;
            }
        }
    }
    if (best_q < 0)
        throw std::invalid_argument("cantor_set: s = " + std::to_string(s) +
                                    " not realizable at m = " + std::to_string(scale.m) +
                                    "; nearest realizable s = " + std::to_string(nearest));
    const std::int64_t branches_total = std::int64_t{1} << best_q;  // B per level
    const std::int64_t branches_kept = std::int64_t{1} << best_p;   // b per level
    std::vector<std::int64_t> kept_idx(static_cast<std::size_t>(branches_kept));
    for (std::int64_t i = 0; i < branches_kept; ++i)
        kept_idx[static_cast<std::size_t>(i)] = (i * branches_total) / branches_kept;

    const int levels = scale.m / best_q;
    std::vector<std::int64_t> offsets{0};  // positions in units of delta
    std::int64_t width = std::int64_t{1} << scale.m;
    for (int level = 0; level < levels; ++level) {
        width /= branches_total;
        std::vector<std::int64_t> next;
        next.reserve(offsets.size() * kept_idx.size());
        for (std::int64_t off : offsets)
            for (std::int64_t idx : kept_idx) next.push_back(off + idx * width);
        offsets = std::move(next);
    }
    std::vector<double> pts;
    pts.reserve(offsets.size());
    for (std::int64_t off : offsets) pts.push_back(std::ldexp(static_cast<double>(off), -scale.m));
    return PointSet1D(std::move(pts), scale);
}

// Uniform sample of ceil(delta^-s) grid cells, thinned to a (delta, s)-set.
// Deterministic for a fixed seed.
inline PointSet1D random_delta_s_set(const Scale& scale, double s, std::uint64_t seed) {
    if (s <= 0.0 || s > 1.0) throw std::invalid_argument("random_delta_s_set: need 0 < s <= 1");
    std::mt19937_64 rng(seed);
    const auto n_cells = std::int64_t{1} << scale.m;
    const auto target = static_cast<std::int64_t>(std::ceil(scale.delta_pow(-s)));
    std::uniform_int_distribution<std::int64_t> cell(0, n_cells - 1);
    std::unordered_set<std::int64_t> chosen;
    for (std::int64_t i = 0; i < target; ++i) chosen.insert(cell(rng));
    std::vector<double> pts;
    pts.reserve(chosen.size());
    for (std::int64_t c : chosen) pts.push_back(std::ldexp(static_cast<double>(c), -scale.m));
    std::sort(pts.begin(), pts.end());
    return extract_delta_s_subset(PointSet1D(std::move(pts), scale), s);
}

// Column staircase: ~delta^-1/2 columns at x-spacing delta^1/2, column i
// holding ~delta^-1/2 points at y-spacing delta starting at height
// i * delta^1/2. The set is a (delta, 1)-set whose projection collapses to
// ~delta^-1/2 cells for a ~delta^1/2-arc of directions around
// staircase_collapsing_center(), while generic projections stay ~delta^-1.
// Its collapsing directions cluster in one short arc, so they are not
// delta^s-separated for any s < 1; no fan survives the stated thresholds.
inline PointSet2D staircase_set(const Scale& scale) {
    if (scale.m % 2 != 0) throw std::invalid_argument("staircase_set: m must be even");
    const std::int64_t cols = std::int64_t{1} << (scale.m / 2);
    const double root_delta = std::ldexp(1.0, -scale.m / 2);
    const double delta = scale.delta();
    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(cols * cols));
    for (std::int64_t i = 0; i < cols; ++i)
        for (std::int64_t j = 0; j < cols; ++j)
            pts.push_back({static_cast<double>(i) * root_delta,
                           static_cast<double>(i) * root_delta + static_cast<double>(j) * delta});
    return PointSet2D(std::move(pts), scale);
}

// Center of the arc of directions with collapsed staircase projection:
// e ⟂ the staircase diagonal.
inline double staircase_collapsing_center() { return -std::numbers::pi / 4.0; }

// The cluster of ~2 delta^-1/2 delta-separated directions (one arc of
// length ~2 delta^1/2) in which the staircase projects into ~delta^-1/2
// cells. Deliberately fails delta^s-separation for every s < 1.
inline DirectionSet staircase_collapsing_directions(const Scale& scale) {
    if (scale.m % 2 != 0)
        throw std::invalid_argument("staircase_collapsing_directions: m must be even");
    const double delta = scale.delta();
    const std::int64_t half_count = std::int64_t{1} << (scale.m / 2);  // delta^-1/2
    std::vector<Direction> dirs;
    dirs.reserve(static_cast<std::size_t>(2 * half_count + 1));
    for (std::int64_t k = -half_count; k <= half_count; ++k)
        dirs.push_back(Direction::from_angle(staircase_collapsing_center() +
                                             static_cast<double>(k) * delta));
    return DirectionSet(std::move(dirs), scale);
}

// Cartesian product A x A2; both factors must share a scale. If the factors
// are (delta, s)-sets, the product is a 2D (delta, 2s)-set up to a bounded
// constant (checked in tests, not assumed).
inline PointSet2D product_set(const PointSet1D& A, const PointSet1D& A2) {
    if (A.scale != A2.scale) throw std::invalid_argument("product_set: mismatched scales");
    std::vector<Vec2> pts;
    pts.reserve(A.size() * A2.size());
    for (double a : A.points)
        for (double b : A2.points) pts.push_back({a, b});
    return PointSet2D(std::move(pts), A.scale);
}

// ---------------------------------------------------------------------------
// Synthetic fan instances: an apex, a spread of tube axes through it with
// angle gaps >= 2 delta^s, planted points along each axis, plus background
// noise. Used to exercise fan recovery end to end.
// ---------------------------------------------------------------------------

struct PlantedFanInstance {
    PointSet2D B;
    DirectionSet E;      // tube directions (normals of the planted lines)
    Vec2 apex;
    std::size_t planted_mass = 0;  // apex + points placed on the axes
    double s = 0.0;
};

inline PlantedFanInstance make_planted_fan_instance(const Scale& scale, double s,
                                                    std::size_t n_dirs,
                                                    std::size_t pts_per_tube,
                                                    double noise_fraction,
                                                    std::uint64_t seed) {
    if (n_dirs < 2) throw std::invalid_argument("make_planted_fan_instance: need >= 2 directions");
    const double delta = scale.delta();
    std::mt19937_64 rng(seed);

    const Vec2 apex{detail::snap_to_grid(0.5, scale), detail::snap_to_grid(0.5, scale)};

    // Axis fan across most of the first quadrant, gaps >= 2 delta^s.
    const double axis_lo = 0.10, axis_hi = std::numbers::pi / 2.0 - 0.10;
    const double gap = (axis_hi - axis_lo) / static_cast<double>(n_dirs - 1);
    if (gap < 2.0 * scale.delta_pow(s))
        throw std::invalid_argument("make_planted_fan_instance: too many directions for m");

    std::vector<Vec2> pts{apex};
    std::vector<Direction> dirs;
    std::uniform_real_distribution<double> dist_jitter(0.0, 1.0);
    const double d_lo = 0.05, d_hi = 0.62;
    for (std::size_t k = 0; k < n_dirs; ++k) {
        const double axis_angle = axis_lo + static_cast<double>(k) * gap;
        dirs.push_back(Direction::from_angle(axis_angle - std::numbers::pi / 2.0));
        const Vec2 u{std::cos(axis_angle), std::sin(axis_angle)};
        const double step = (d_hi - d_lo) / static_cast<double>(pts_per_tube);
        for (std::size_t t = 0; t < pts_per_tube; ++t) {
            const double d = d_lo + (static_cast<double>(t) + 0.5 * dist_jitter(rng)) * step;
            // Keep planted points exactly on the axis line so they share the
            // apex tube regardless of where the partition boundaries fall.
            pts.push_back(apex + d * u);
        }
    }
    const std::size_t planted = pts.size();

    // Background noise: delta-separated random grid points.
    const auto noise_target =
        static_cast<std::size_t>(std::ceil(noise_fraction * static_cast<double>(planted)));
    std::uniform_int_distribution<std::int64_t> cell(0, (std::int64_t{1} << scale.m) - 1);
    std::unordered_set<std::int64_t> used;
    auto key = [](std::int64_t cx, std::int64_t cy) { return (cx << 26) ^ cy; };
    for (const Vec2& p : pts) used.insert(key(grid_cell(p.x, scale), grid_cell(p.y, scale)));
    std::size_t placed = 0;
    for (std::size_t attempts = 0; placed < noise_target && attempts < 100 * noise_target;
         ++attempts) {
        const std::int64_t cx = cell(rng), cy = cell(rng);
        bool clear = true;
        for (std::int64_t dx = -1; dx <= 1 && clear; ++dx)
            for (std::int64_t dy = -1; dy <= 1 && clear; ++dy)
                if (used.count(key(cx + dx, cy + dy))) clear = false;
        if (!clear) continue;
        used.insert(key(cx, cy));
        pts.push_back({std::ldexp(static_cast<double>(cx), -scale.m),
                       std::ldexp(static_cast<double>(cy), -scale.m)});
        ++placed;
    }

    PlantedFanInstance out{PointSet2D(std::move(pts), scale),
                           DirectionSet(std::move(dirs), scale, s), apex, planted, s};
    return out;
}

}  // namespace sumproj
