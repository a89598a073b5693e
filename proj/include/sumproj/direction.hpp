#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sumproj/geometry.hpp"
#include "sumproj/point_set.hpp"
#include "sumproj/scale.hpp"

namespace sumproj {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Unit direction e on S^1; projections are x |-> e . x.
struct Direction {
    double theta = 0.0;  // normalized to [0, 2pi)

    static Direction from_angle(double t) {
        t = std::fmod(t, kTwoPi);
        if (t < 0.0) t += kTwoPi;
        return Direction{t};
    }

    // Slope-to-angle adapter: parameter t in [0, 1] of A + tA corresponds to
    // the direction (1, t)/|(1, t)|, so A + tA is a rescaled projection of
    // A x A.
    static Direction from_slope(double t) { return from_angle(std::atan(t)); }

    Vec2 unit() const { return {std::cos(theta), std::sin(theta)}; }

    // Tube axis: unit vector perpendicular to e.
    Vec2 axis() const { return rot90(unit()); }
};

inline double arc_distance(double a, double b) {
    double d = std::fabs(a - b);
    d = std::fmod(d, kTwoPi);
    return std::min(d, kTwoPi - d);
}

struct DirectionSet {
    std::vector<Direction> directions;  // sorted by theta, no exact duplicates
    Scale scale;
    std::optional<double> declared_s;

    DirectionSet(std::vector<Direction> dirs, Scale sc,
                 std::optional<double> s = std::nullopt)
        : directions(std::move(dirs)), scale(sc), declared_s(s) {
        std::sort(directions.begin(), directions.end(),
                  [](Direction a, Direction b) { return a.theta < b.theta; });
        directions.erase(std::unique(directions.begin(), directions.end(),
                                     [](Direction a, Direction b) { return a.theta == b.theta; }),
                         directions.end());
    }

    std::size_t size() const { return directions.size(); }

    // Angles theta_lo + k * delta^s, k >= 0, up to theta_hi.
    static DirectionSet angle_grid(Scale scale, double s, double theta_lo, double theta_hi) {
        if (theta_hi < theta_lo) throw std::invalid_argument("angle_grid: empty range");
        const double step = scale.delta_pow(s);
        std::vector<Direction> dirs;
        for (double t = theta_lo; t <= theta_hi + 1e-15; t += step)
            dirs.push_back(Direction::from_angle(t));
        return DirectionSet(std::move(dirs), scale, s);
    }

    static DirectionSet from_slopes(const std::vector<double>& slopes, Scale scale,
                                    std::optional<double> s = std::nullopt) {
        std::vector<Direction> dirs;
        dirs.reserve(slopes.size());
        for (double t : slopes) dirs.push_back(Direction::from_slope(t));
        return DirectionSet(std::move(dirs), scale, s);
    }
};

struct DirectionNonConReport {
    NonConReport base;               // witness_x holds the witness angle
    bool delta_s_separated = false;  // stronger hypothesis of the main pipeline
    double min_gap = 0.0;            // smallest circular gap between angles
};

// Non-concentration of a direction set in the arc-length metric: the
// smallest K with |E ∩ arc(x, r)| <= K (r/delta)^s over centers in E and
// dyadic radii r = delta * 2^k.
inline DirectionNonConReport direction_nonconcentration(const DirectionSet& E, double s) {
    if (s <= 0.0 || s > 1.0)
        throw std::invalid_argument("direction_nonconcentration: need 0 < s <= 1");
    DirectionNonConReport rep;
    rep.base.s = s;
    const auto n = E.directions.size();
    if (n == 0) return rep;
    const Scale& scale = E.scale;
    const double delta = scale.delta();

    // Unrolled circle: angles and angles + 2pi, so arc windows are plain
    // interval queries.
    std::vector<double> ang(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        ang[i] = E.directions[i].theta;
        ang[i + n] = E.directions[i].theta + kTwoPi;
    }

    rep.min_gap = kTwoPi;
    if (n >= 2) {
        for (std::size_t i = 0; i + 1 < n; ++i)
            rep.min_gap = std::min(rep.min_gap, ang[i + 1] - ang[i]);
        rep.min_gap = std::min(rep.min_gap, ang[n] - ang[n - 1]);  // wrap-around gap
    }
    rep.delta_s_separated = n < 2 || rep.min_gap >= scale.delta_pow(s) * (1.0 - kSepSlack);

    for (std::size_t i = 0; i < n; ++i) {
        const double c = ang[i + n];  // center in the unrolled copy
        for (int k = 0; k <= scale.m; ++k) {
            const double r = std::ldexp(delta, k);
            std::int64_t count;
            if (2.0 * r >= kTwoPi) {
                count = static_cast<std::int64_t>(n);
            } else {
                auto lo = std::lower_bound(ang.begin(), ang.end(), c - r);
                auto hi = std::upper_bound(ang.begin(), ang.end(), c + r);
                count = static_cast<std::int64_t>(hi - lo);
            }
            const double ratio = static_cast<double>(count) / std::exp2(k * s);
            if (ratio > rep.base.constant) {
                rep.base.constant = ratio;
                rep.base.has_witness = true;
                rep.base.witness_x = E.directions[i].theta;
                rep.base.witness_radius = r;
                rep.base.witness_count = count;
            }
        }
    }
    return rep;
}

}  // namespace sumproj
