#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "sumproj/direction.hpp"
#include "sumproj/geometry.hpp"
#include "sumproj/point_set.hpp"
#include "sumproj/scale.hpp"

namespace sumproj {

// Orthogonal projection pi_e(x) = e . x. The multiset is preserved in input
// order; sorted_values() is the sorted view.
struct Projection {
    std::vector<double> values;

    std::vector<double> sorted_values() const {
        std::vector<double> out = values;
        std::sort(out.begin(), out.end());
        return out;
    }
};

inline Projection project(std::span<const Vec2> B, Direction e) {
    Projection out;
    out.values.reserve(B.size());
    const Vec2 u = e.unit();
    for (const Vec2& p : B) out.values.push_back(dot(u, p));
    return out;
}

inline Projection project(const PointSet2D& B, Direction e) {
    return project(std::span<const Vec2>(B.points), e);
}

// Covering number of {a + t a' : a, a' in A} at scale delta. Equals, up to a
// bounded factor, the covering number of the projection of A x A in the
// direction (1, t); the two routes are cross-checked in tests.
inline std::int64_t sumset_entropy(const PointSet1D& A, double t, const Scale& scale) {
    std::unordered_set<std::int64_t> cells;
    cells.reserve(A.size() * A.size());
    for (double a : A.points)
        for (double b : A.points) cells.insert(grid_cell(a + t * b, scale));
    return static_cast<std::int64_t>(cells.size());
}

struct SweepRow {
    double t = 0.0;
    std::int64_t entropy = 0;
    double threshold = 0.0;
    bool exceptional = false;
};

struct ExceptionalSweep {
    std::vector<SweepRow> rows;            // in ascending t order
    std::vector<double> exceptional_ts;    // sorted
    double threshold = 0.0;
};

// Parameters t whose sumset entropy stays below C_E delta^-s; these play the
// role of exceptional directions for the projection of A x A.
inline ExceptionalSweep exceptional_parameters(const PointSet1D& A, const Scale& scale, double s,
                                               double C_E, std::vector<double> T) {
    if (C_E < 1.0) throw std::invalid_argument("exceptional_parameters: need C_E >= 1");
    ExceptionalSweep sweep;
    sweep.threshold = C_E * scale.delta_pow(-s);
    std::sort(T.begin(), T.end());
    sweep.rows.reserve(T.size());
    for (double t : T) {
        SweepRow row;
        row.t = t;
        row.entropy = sumset_entropy(A, t, scale);
        row.threshold = sweep.threshold;
        row.exceptional = static_cast<double>(row.entropy) <= sweep.threshold;
        if (row.exceptional) sweep.exceptional_ts.push_back(t);
        sweep.rows.push_back(row);
    }
    return sweep;
}

}  // namespace sumproj
