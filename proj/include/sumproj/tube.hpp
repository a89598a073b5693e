#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "sumproj/direction.hpp"
#include "sumproj/geometry.hpp"
#include "sumproj/parallel.hpp"
#include "sumproj/scale.hpp"

namespace sumproj {

// Index of the 2delta-slab perpendicular to e containing x. Cells are
// half-open [2n delta, 2(n+1) delta), so a boundary value lands in the
// higher cell.
inline std::int64_t tube_index(Vec2 x, Direction e, const Scale& scale) {
    return static_cast<std::int64_t>(std::floor(std::ldexp(dot(e.unit(), x), scale.m - 1)));
}

// One slab of the 2delta-partition perpendicular to e:
// T = {x : |e.x - c| <= delta} with c = (2n + 1) delta, boundary membership
// resolved by tube_index.
struct Tube {
    Direction e;
    std::int64_t index = 0;

    double center_offset(const Scale& scale) const {
        return static_cast<double>(2 * index + 1) * scale.delta();
    }
    bool contains(Vec2 x, const Scale& scale) const { return tube_index(x, e, scale) == index; }
};

// Riesz-type energy over the points of one tube: sum over ordered pairs of
// |x - y|^(s-1). The double sum matches the paper-style convention; the
// exponent is negative, so coincident points are rejected.
inline double pair_energy(std::span<const Vec2> pts, double s) {
    if (s <= 0.0 || s >= 1.0) throw std::invalid_argument("pair_energy: need 0 < s < 1");
    const double expo = s - 1.0;
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const double d = dist(pts[i], pts[j]);
            if (d == 0.0) throw std::domain_error("pair_energy: coincident points");
            total += 2.0 * std::pow(d, expo);
        }
    return total;
}

struct TubeEnergy {
    Tube tube;
    double value = 0.0;
    std::int64_t point_count = 0;
};

inline TubeEnergy tube_energy(std::span<const Vec2> B, const Tube& tube, const Scale& scale,
                              double s) {
    std::vector<Vec2> inside;
    for (const Vec2& p : B)
        if (tube.contains(p, scale)) inside.push_back(p);
    return TubeEnergy{tube, pair_energy(inside, s), static_cast<std::int64_t>(inside.size())};
}

// Global Riesz energy: sum over ordered pairs of |x - y|^-1. Partial sums
// are accumulated per row and reduced in row order, so the result is
// independent of the worker count.
inline double riesz_energy(std::span<const Vec2> pts) {
    const std::size_t n = pts.size();
    std::vector<double> row(n, 0.0);
    std::atomic<bool> coincident{false};
    parallel_chunks(n, 64, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double d2 = (pts[i] - pts[j]).norm_sq();
                if (d2 == 0.0) {
                    coincident.store(true, std::memory_order_relaxed);
                    return;
                }
                acc += 1.0 / std::sqrt(d2);
            }
            row[i] = acc;
        }
    });
    if (coincident.load()) throw std::domain_error("riesz_energy: coincident points");
    double total = 0.0;
    for (double r : row) total += r;
    return total;
}

// The 2delta-partition of B perpendicular to one direction, with per-tube
// energies. Buckets are sorted by slab index.
struct TubeFamily {
    Direction e;
    struct Bucket {
        std::int64_t index = 0;
        std::vector<std::int32_t> ids;
        double energy = 0.0;
    };
    std::vector<Bucket> buckets;
    std::size_t total_points = 0;

    const Bucket* find(std::int64_t index) const {
        auto it = std::lower_bound(buckets.begin(), buckets.end(), index,
                                   [](const Bucket& b, std::int64_t v) { return b.index < v; });
        return (it != buckets.end() && it->index == index) ? &*it : nullptr;
    }
};

inline TubeFamily build_tube_family(std::span<const Vec2> B, Direction e, const Scale& scale,
                                    double s) {
    std::unordered_map<std::int64_t, std::vector<std::int32_t>> buckets;
    buckets.reserve(B.size());
    for (std::size_t i = 0; i < B.size(); ++i)
        buckets[tube_index(B[i], e, scale)].push_back(static_cast<std::int32_t>(i));
    TubeFamily family;
    family.e = e;
    family.total_points = B.size();
    family.buckets.reserve(buckets.size());
    for (auto& [index, ids] : buckets)
        family.buckets.push_back({index, std::move(ids), 0.0});
    std::sort(family.buckets.begin(), family.buckets.end(),
              [](const TubeFamily::Bucket& a, const TubeFamily::Bucket& b) {
                  return a.index < b.index;
              });
    for (auto& bucket : family.buckets) {
        std::vector<Vec2> pts;
        pts.reserve(bucket.ids.size());
        for (std::int32_t id : bucket.ids) pts.push_back(B[static_cast<std::size_t>(id)]);
        bucket.energy = pair_energy(pts, s);
    }
    return family;
}

}  // namespace sumproj
