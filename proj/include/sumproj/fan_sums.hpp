#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "sumproj/fan.hpp"
#include "sumproj/generators.hpp"
#include "sumproj/geometry.hpp"
#include "sumproj/point_set.hpp"
#include "sumproj/projection.hpp"
#include "sumproj/scale.hpp"
#include "sumproj/tube.hpp"

namespace sumproj {

struct StageReport {
    std::string stage;
    bool flagged = false;
    std::string note;
    std::vector<std::pair<std::string, double>> measured;  // name -> value, insertion order

    void add(const std::string& key, double value) { measured.emplace_back(key, value); }
};

// ---------------------------------------------------------------------------
// Quadrant restriction. The "without loss of generality, northeast" step of
// the argument becomes an explicit pigeonhole: pick the quadrant (relative
// to the apex) retaining the most fan mass, keep only arms whose axis can
// be oriented into it, and restrict members accordingly. Costs at most a
// factor 4 of mass, which the budgets account for.
// ---------------------------------------------------------------------------

namespace detail {

// Quadrants are numbered NE=0, NW=1, SW=2, SE=3 and partition the plane
// around the apex via half-open sign conventions.
inline int quadrant_of(Vec2 d) {
    if (d.x >= 0.0 && d.y >= 0.0) return 0;
    if (d.x < 0.0 && d.y >= 0.0) return 1;
    if (d.x < 0.0 && d.y < 0.0) return 2;
    return 3;
}

// Closed-cone membership used for orienting tube axes.
inline bool in_closed_quadrant(Vec2 u, int q) {
    switch (q) {
        case 0: return u.x >= 0.0 && u.y >= 0.0;
        case 1: return u.x <= 0.0 && u.y >= 0.0;
        case 2: return u.x <= 0.0 && u.y <= 0.0;
        default: return u.x >= 0.0 && u.y <= 0.0;
    }
}

}  // namespace detail

struct QuadrantResult {
    Fan fan;
    StageReport report;
};

inline QuadrantResult restrict_to_quadrant(const Fan& fan, std::span<const Vec2> B,
                                           const FanParams& params) {
    (void)params;
    const std::size_t before = fan.mass();

    std::array<std::uint64_t, 4> masses{};
    for (int q = 0; q < 4; ++q) {
        std::vector<std::int32_t> ids;
        for (const FanArm& arm : fan.arms) {
            if (!detail::in_closed_quadrant(arm.axis, q) &&
                !detail::in_closed_quadrant(-1.0 * arm.axis, q))
                continue;
            for (std::int32_t id : arm.member_ids)
                if (detail::quadrant_of(B[static_cast<std::size_t>(id)] - fan.apex) == q)
                    ids.push_back(id);
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        masses[static_cast<std::size_t>(q)] = ids.size();
    }
    int best_q = 0;
    for (int q = 1; q < 4; ++q)
        if (masses[static_cast<std::size_t>(q)] > masses[static_cast<std::size_t>(best_q)])
            best_q = q;

    Fan out;
    out.apex = fan.apex;
    out.apex_id = fan.apex_id;
    out.tau = fan.tau;
    for (const FanArm& arm : fan.arms) {
        Vec2 axis = arm.axis;
        if (!detail::in_closed_quadrant(axis, best_q)) {
            if (!detail::in_closed_quadrant(-1.0 * axis, best_q)) continue;
            axis = -1.0 * axis;
        }
        FanArm kept;
        kept.e = arm.e;
        kept.tube_index = arm.tube_index;
        kept.axis = axis;
        for (std::int32_t id : arm.member_ids)
            if (detail::quadrant_of(B[static_cast<std::size_t>(id)] - fan.apex) == best_q)
                kept.member_ids.push_back(id);
        if (!kept.member_ids.empty()) out.arms.push_back(std::move(kept));
    }
    out.members = fan_member_union(out);

    QuadrantResult result{std::move(out), {}};
    result.report.stage = "quadrant_filter";
    result.report.add("mass_before", static_cast<double>(before));
    result.report.add("mass_after", static_cast<double>(result.fan.mass()));
    result.report.add("quadrant", static_cast<double>(best_q));
    if (4 * result.fan.mass() < before) {
        result.report.flagged = true;
        result.report.note = "retained mass below the pigeonhole quarter";
    }
    return result;
}

// ---------------------------------------------------------------------------
// Heavy-point pruning: drop points whose in-tube energy exceeds
// C delta^(s - 1 - 2 kappa) log^(3/2)(1/delta). At desk scales the default
// budget is far above any achievable in-tube energy, so this usually
// removes nothing; the stage still measures and reports the maximum.
// ---------------------------------------------------------------------------

struct StageFanResult {
    Fan fan;
    StageReport report;
};

inline StageFanResult remove_high_energy_points(const Fan& fan, std::span<const Vec2> B,
                                                const Scale& scale, const FanParams& params) {
    const double threshold = params.heavy_point_threshold(scale);
    const double expo = params.s - 1.0;
    std::vector<std::int32_t> marked;
    double max_energy = 0.0;
    for (const FanArm& arm : fan.arms) {
        for (std::size_t i = 0; i < arm.member_ids.size(); ++i) {
            double energy = 0.0;
            const Vec2 x = B[static_cast<std::size_t>(arm.member_ids[i])];
            for (std::size_t j = 0; j < arm.member_ids.size(); ++j) {
                if (i == j) continue;
                const double d = dist(x, B[static_cast<std::size_t>(arm.member_ids[j])]);
                if (d == 0.0) throw std::domain_error("remove_high_energy_points: coincident points");
                energy += std::pow(d, expo);
            }
            max_energy = std::max(max_energy, energy);
            if (energy >= threshold) marked.push_back(arm.member_ids[i]);
        }
    }
    std::sort(marked.begin(), marked.end());
    marked.erase(std::unique(marked.begin(), marked.end()), marked.end());

    Fan out;
    out.apex = fan.apex;
    out.apex_id = fan.apex_id;
    out.tau = fan.tau;
    for (const FanArm& arm : fan.arms) {
        FanArm kept = arm;
        kept.member_ids.clear();
        for (std::int32_t id : arm.member_ids)
            if (!std::binary_search(marked.begin(), marked.end(), id)) kept.member_ids.push_back(id);
        if (!kept.member_ids.empty()) out.arms.push_back(std::move(kept));
    }
    out.members = fan_member_union(out);

    StageFanResult result{std::move(out), {}};
    result.report.stage = "prune_heavy_points";
    result.report.add("mass_before", static_cast<double>(fan.mass()));
    result.report.add("mass_after", static_cast<double>(result.fan.mass()));
    result.report.add("removed", static_cast<double>(marked.size()));
    result.report.add("max_point_energy", max_energy);
    result.report.add("threshold", threshold);
    if (2 * result.fan.mass() < fan.mass()) {
        result.report.flagged = true;
        result.report.note = "lost more than half the fan mass";
    }
    return result;
}

// Remove members inside the apex exclusion ball B(b0, C_near delta^(1-s)),
// the apex itself included. For a (delta,1)-set the removal is at most
// ~8 C_near delta^-s points; larger removals are flagged.
inline StageFanResult remove_near_apex(const Fan& fan, std::span<const Vec2> B, const Scale& scale,
                                       const FanParams& params) {
    const double radius = params.exclusion_radius(scale);
    const double r_sq = radius * radius;
    Fan out;
    out.apex = fan.apex;
    out.apex_id = fan.apex_id;
    out.tau = fan.tau;
    std::size_t removed = 0;
    for (const FanArm& arm : fan.arms) {
        FanArm kept = arm;
        kept.member_ids.clear();
        for (std::int32_t id : arm.member_ids) {
            if ((B[static_cast<std::size_t>(id)] - fan.apex).norm_sq() <= r_sq)
                continue;
            kept.member_ids.push_back(id);
        }
        if (!kept.member_ids.empty()) out.arms.push_back(std::move(kept));
    }
    out.members = fan_member_union(out);
    removed = fan.mass() - out.mass();

    StageFanResult result{std::move(out), {}};
    result.report.stage = "remove_near_apex";
    const double budget = 8.0 * params.C_near * scale.delta_pow(-params.s);
    result.report.add("mass_before", static_cast<double>(fan.mass()));
    result.report.add("mass_after", static_cast<double>(result.fan.mass()));
    result.report.add("removed", static_cast<double>(removed));
    result.report.add("exclusion_radius", radius);
    result.report.add("removal_budget", budget);
    if (static_cast<double>(removed) > budget) {
        result.report.flagged = true;
        result.report.note = "removal exceeded the (delta,1) budget";
    }
    if (result.fan.mass() == 0) {
        result.report.flagged = true;
        result.report.note = "all members inside the exclusion ball";
    }
    return result;
}

// ---------------------------------------------------------------------------
// Rich tubes: arms holding at least c_rich delta^(kappa + s - 1) members,
// ordered by direction angle so consecutive indices mean consecutive
// directions.
// ---------------------------------------------------------------------------

struct RichTubes {
    std::vector<std::size_t> arm_index;  // indices into fan.arms, angle order
    double threshold = 0.0;
    double count_budget = 0.0;
    StageReport report;
};

inline RichTubes select_rich_tubes(const Fan& fan, const Scale& scale, const FanParams& params,
                                   bool mass_budget_met = true) {
    RichTubes rich;
    rich.threshold = params.rich_tube_threshold(scale);
    rich.count_budget = params.rich_count_budget(scale);
    for (std::size_t i = 0; i < fan.arms.size(); ++i)
        if (static_cast<double>(fan.arms[i].member_ids.size()) >= rich.threshold)
            rich.arm_index.push_back(i);
    rich.report.stage = "select_rich_tubes";
    rich.report.add("rich_count", static_cast<double>(rich.arm_index.size()));
    rich.report.add("threshold", rich.threshold);
    rich.report.add("count_budget", rich.count_budget);
    if (rich.arm_index.size() < 2)
        throw std::invalid_argument(
            "select_rich_tubes: fewer than 2 rich tubes (no consecutive pairs exist)");
    if (mass_budget_met && static_cast<double>(rich.arm_index.size()) < rich.count_budget) {
        rich.report.flagged = true;
        rich.report.note = "rich tube count below budget";
    }
    return rich;
}

// ---------------------------------------------------------------------------
// White conical regions. W_j sits between consecutive rich tubes T_j and
// T_j+1: strictly beyond the edge of T_j facing T_j+1, strictly beyond the
// edge of T_j+1 facing T_j, and outside the apex exclusion ball. The two
// half-plane conditions make the regions of distinct consecutive pairs
// disjoint once the tube directions are angle-sorted.
// ---------------------------------------------------------------------------

struct WhiteRegion {
    int j = 0;  // 1-based index of the (T_j, T_j+1) pair
    Vec2 apex;
    Vec2 normal_lo, normal_hi;      // oriented tube normals
    double offset_lo = 0.0, offset_hi = 0.0;
    Vec2 ray_lo, ray_hi;            // edge directions (= oriented tube axes)
    double exclusion_radius = 0.0;

    bool contains(Vec2 p) const {
        return dot(normal_lo, p) > offset_lo && dot(normal_hi, p) > offset_hi &&
               (p - apex).norm_sq() > exclusion_radius * exclusion_radius;
    }
};

inline double white_region_membership(const WhiteRegion& W, Vec2 p) { return W.contains(p); }

namespace detail {

// Half-plane strictly beyond the slab edge of `arm` on the side of `toward`.
inline void facing_edge(const FanArm& arm, Vec2 toward, const Scale& scale, Vec2& normal,
                        double& offset) {
    const Vec2 e = arm.e.unit();
    const double delta = scale.delta();
    const double lo = 2.0 * static_cast<double>(arm.tube_index) * delta;
    const double hi = lo + 2.0 * delta;
    if (dot(e, toward) >= 0.0) {
        normal = e;
        offset = hi;
    } else {
        normal = -1.0 * e;
        offset = -lo;
    }
}

}  // namespace detail

inline WhiteRegion make_white_region(const Fan& fan, const FanArm& lower, const FanArm& upper,
                                     int j, const Scale& scale, const FanParams& params) {
    WhiteRegion W;
    W.j = j;
    W.apex = fan.apex;
    W.exclusion_radius = params.exclusion_radius(scale);
    detail::facing_edge(lower, upper.axis, scale, W.normal_lo, W.offset_lo);
    detail::facing_edge(upper, lower.axis, scale, W.normal_hi, W.offset_hi);
    W.ray_lo = lower.axis;
    W.ray_hi = upper.axis;
    return W;
}

inline std::vector<WhiteRegion> make_white_regions(const Fan& fan, const RichTubes& rich,
                                                   const Scale& scale, const FanParams& params) {
    std::vector<WhiteRegion> regions;
    for (std::size_t i = 0; i + 1 < rich.arm_index.size(); ++i)
        regions.push_back(make_white_region(fan, fan.arms[rich.arm_index[i]],
                                            fan.arms[rich.arm_index[i + 1]],
                                            static_cast<int>(i + 1), scale, params));
    return regions;
}

// ---------------------------------------------------------------------------
// Vector-sum counting: for each consecutive rich pair, form all sums
// (x + y) - b0, bucket them into delta-cells, and count the cells whose
// sums land in W_j. Sums that miss their region are excluded from the
// count and reported as violations; per-cell pair multiplicities are
// measured against the collision budget.
// ---------------------------------------------------------------------------

struct RegionCount {
    int j = 0;
    std::uint64_t pairs = 0;
    std::uint64_t cells = 0;
    std::uint64_t violations = 0;
    std::uint64_t max_cell_multiplicity = 0;
};

struct SumCountReport {
    std::vector<RegionCount> per_region;
    std::uint64_t total = 0;
    std::size_t n_rich = 0;
    double kappa = 0.0;
    double collision_budget = 0.0;
    std::uint64_t max_cell_multiplicity = 0;
    std::uint64_t violations = 0;
    double exponent_reference = 0.0;  // delta^(9 kappa + 2s - s^2 - 2)
    double measured_constant = 0.0;   // total / exponent_reference
    bool collision_flag = false;
    bool violation_flag = false;
};

inline SumCountReport count_separated_sums(const Fan& fan, std::span<const Vec2> B,
                                           const RichTubes& rich, const Scale& scale,
                                           const FanParams& params) {
    if (rich.arm_index.size() < 2)
        throw std::invalid_argument("count_separated_sums: need at least two rich tubes");
    const double min_gap = 0.5 * scale.delta_pow(params.s);
    for (std::size_t i = 0; i + 1 < rich.arm_index.size(); ++i) {
        const double gap = arc_distance(fan.arms[rich.arm_index[i]].e.theta,
                                        fan.arms[rich.arm_index[i + 1]].e.theta);
        if (gap < min_gap)
            throw std::invalid_argument(
                "count_separated_sums: direction gap below delta^s/2, separation hypothesis "
                "violated");
    }

    SumCountReport rep;
    rep.n_rich = rich.arm_index.size();
    rep.kappa = params.kappa();
    rep.collision_budget = params.collision_budget(scale);

    for (std::size_t i = 0; i + 1 < rich.arm_index.size(); ++i) {
        const FanArm& low = fan.arms[rich.arm_index[i]];
        const FanArm& high = fan.arms[rich.arm_index[i + 1]];
        const WhiteRegion W =
            make_white_region(fan, low, high, static_cast<int>(i + 1), scale, params);
        RegionCount rc;
        rc.j = W.j;
        std::unordered_map<std::int64_t, std::uint64_t> cells;
        for (std::int32_t xi : low.member_ids) {
            const Vec2 x = B[static_cast<std::size_t>(xi)];
            for (std::int32_t yi : high.member_ids) {
                const Vec2 z = x + B[static_cast<std::size_t>(yi)] - fan.apex;
                ++rc.pairs;
                if (!W.contains(z)) {
                    ++rc.violations;
                    continue;
                }
                const std::int64_t key =
                    (grid_cell(z.x, scale) << 26) ^ grid_cell(z.y, scale);
                ++cells[key];
            }
        }
        rc.cells = cells.size();
        for (const auto& [key, mult] : cells)
            rc.max_cell_multiplicity = std::max(rc.max_cell_multiplicity, mult);
        rep.total += rc.cells;
        rep.violations += rc.violations;
        rep.max_cell_multiplicity = std::max(rep.max_cell_multiplicity, rc.max_cell_multiplicity);
        rep.per_region.push_back(rc);
    }

    rep.exponent_reference =
        scale.delta_pow(9.0 * rep.kappa + 2.0 * params.s - params.s * params.s - 2.0);
    rep.measured_constant = static_cast<double>(rep.total) / rep.exponent_reference;
    rep.collision_flag = static_cast<double>(rep.max_cell_multiplicity) > rep.collision_budget;
    rep.violation_flag = rep.violations > 0;
    return rep;
}

// ---------------------------------------------------------------------------
// The end-to-end pipeline. Stage (i) sweeps the parameter set for a witness
// with a large sumset; if every parameter is exceptional, stage (ii) runs
// the fan extraction and vector-sum counting over B = A x A and reports a
// lower bound for the covering number of A + A. Budget failures propagate
// as flagged stages naming the measured constants, never silently.
// ---------------------------------------------------------------------------

enum class PipelineOutcome {
    witness,          // stage (i) found t with a large sumset
    lower_bound,      // stage (ii) completed; sum-count lower bound emitted
    no_fan,           // stage (ii): no fan at the stated threshold
    stage_failure,    // a stage could not proceed; see its report
};

struct PipelineReport {
    PipelineOutcome outcome = PipelineOutcome::stage_failure;
    std::string mode;  // "delta_s_separated" or "non_concentration_only"
    std::vector<StageReport> stages;
    double witness_t = 0.0;
    std::int64_t witness_entropy = 0;
    double entropy_threshold = 0.0;
    std::uint64_t total_sums = 0;
    std::int64_t n_lower = 0;       // lower bound for the covering number of A + A
    std::int64_t n_measured = 0;    // measured covering number of A + A
    bool contradiction = false;     // lower bound exceeds the exceptional threshold
    bool any_flag = false;

    const StageReport* find_stage(const std::string& name) const {
        for (const auto& st : stages)
            if (st.stage == name) return &st;
        return nullptr;
    }
};

inline PipelineReport sum_product_pipeline(const PointSet1D& A, const std::vector<double>& E,
                                           const Scale& scale, double s, double sigma,
                                           FanParams params = FanParams{}) {
    if (E.empty()) throw std::invalid_argument("sum_product_pipeline: empty parameter set E");
    params.s = s;
    params.sigma = sigma;
    params.validate();

    PipelineReport rep;
    auto push = [&](StageReport st) {
        rep.any_flag = rep.any_flag || st.flagged;
        rep.stages.push_back(std::move(st));
    };

    // Hypothesis checks: A should be a (delta, 1/2)-set, E delta^s-separated.
    {
        StageReport st;
        st.stage = "hypotheses";
        const NonConReport nc = nonconcentration(A, 0.5);
        st.add("A_nonconcentration_constant", nc.constant);
        st.add("A_delta_separated", is_delta_separated(A) ? 1.0 : 0.0);
        const DirectionSet dirs = DirectionSet::from_slopes(E, scale, s);
        const DirectionNonConReport dn = direction_nonconcentration(dirs, s);
        st.add("E_size", static_cast<double>(E.size()));
        st.add("E_size_budget", scale.delta_pow(-sigma));
        st.add("E_nonconcentration_constant", dn.base.constant);
        rep.mode = dn.delta_s_separated ? "delta_s_separated" : "non_concentration_only";
        if (nc.constant > 8.0 || !is_delta_separated(A)) {
            st.flagged = true;
            st.note = "A fails the (delta,1/2) hypothesis";
        }
        if (static_cast<double>(E.size()) < scale.delta_pow(-sigma)) {
            st.flagged = true;
            st.note += std::string(st.note.empty() ? "" : "; ") + "|E| below delta^-sigma";
        }
        push(std::move(st));
    }

    // Stage (i): look for a witness.
    rep.entropy_threshold = params.C_E * scale.delta_pow(-s);
    {
        StageReport st;
        st.stage = "projection_sweep";
        std::int64_t best_entropy = -1;
        double best_t = 0.0;
        for (double t : E) {
            const std::int64_t entropy = sumset_entropy(A, t, scale);
            if (entropy > best_entropy) {
                best_entropy = entropy;
                best_t = t;
            }
        }
        st.add("max_entropy", static_cast<double>(best_entropy));
        st.add("witness_t", best_t);
        st.add("threshold", rep.entropy_threshold);
        const bool witness = static_cast<double>(best_entropy) > rep.entropy_threshold;
        push(std::move(st));
        if (witness) {
            rep.outcome = PipelineOutcome::witness;
            rep.witness_t = best_t;
            rep.witness_entropy = best_entropy;
            return rep;
        }
    }

    // Stage (ii): every parameter has a small sumset; extract structure.
    const PointSet2D B = product_set(A, A);
    const std::span<const Vec2> pts(B.points);
    rep.n_measured = sumset_entropy(A, 1.0, scale);

    const DirectionSet dirs = DirectionSet::from_slopes(E, scale, s);
    DirectionSelection sel = select_low_energy_directions(pts, dirs, scale, params);
    {
        StageReport st;
        st.stage = "select_directions";
        st.add("kept", static_cast<double>(sel.families.size()));
        st.add("total", static_cast<double>(dirs.size()));
        st.add("mean_score", sel.mean_score);
        st.add("grand_average", sel.grand_average);
        st.add("threshold", sel.threshold);
        st.add("budget_clipped", sel.any_budget_clipped ? 1.0 : 0.0);
        if (sel.any_budget_clipped) {
            st.flagged = true;
            st.note = "nonempty tube count exceeded the ceil(C_E delta^-s) budget";
        }
        if (sel.markov_flag) {
            st.flagged = true;
            st.note += std::string(st.note.empty() ? "" : "; ") + sel.diagnostic;
        }
        const bool empty = sel.families.empty();
        if (empty) {
            st.flagged = true;
            st.note = sel.diagnostic;
        }
        push(std::move(st));
        if (empty) return rep;
    }

    std::vector<PrunedFamily> pruned;
    {
        StageReport st;
        st.stage = "prune_tubes";
        double min_coverage = 1.0;
        std::int64_t single_tubes = 0, energy_pruned = 0;
        for (TubeFamily& family : sel.families) {
            PrunedFamily pf = prune_high_energy_tubes(std::move(family), scale, params);
            min_coverage = std::min(min_coverage,
                                    pf.covered_before == 0
                                        ? 1.0
                                        : static_cast<double>(pf.covered_after_energy) /
                                              static_cast<double>(pf.covered_before));
            single_tubes += pf.tubes_single_point;
            energy_pruned += pf.tubes_energy_pruned;
            pruned.push_back(std::move(pf));
        }
        st.add("min_energy_coverage", min_coverage);
        st.add("tubes_energy_pruned", static_cast<double>(energy_pruned));
        st.add("tubes_single_point", static_cast<double>(single_tubes));
        if (min_coverage < 0.9) {
            st.flagged = true;
            st.note = "energy pruning lost more than 1/10 of coverage for some direction";
        }
        push(std::move(st));
    }

    FanSearchResult search = find_fan(pts, pruned, scale, params);
    {
        StageReport st;
        st.stage = "find_fan";
        st.add("best_mass", static_cast<double>(search.no_fan.best_mass));
        st.add("threshold", search.no_fan.threshold);
        if (!search.found()) {
            st.flagged = true;
            st.note = "no fan at the stated threshold";
        }
        push(std::move(st));
        if (!search.found()) {
            rep.outcome = PipelineOutcome::no_fan;
            return rep;
        }
    }

    QuadrantResult quad = restrict_to_quadrant(*search.fan, pts, params);
    push(quad.report);
    StageFanResult heavy = remove_high_energy_points(quad.fan, pts, scale, params);
    push(heavy.report);
    StageFanResult far = remove_near_apex(heavy.fan, pts, scale, params);
    push(far.report);

    RichTubes rich;
    try {
        rich = select_rich_tubes(far.fan, scale, params);
        push(rich.report);
    } catch (const std::invalid_argument& err) {
        StageReport st;
        st.stage = "select_rich_tubes";
        st.flagged = true;
        st.note = err.what();
        push(std::move(st));
        return rep;
    }

    SumCountReport sums;
    try {
        sums = count_separated_sums(far.fan, pts, rich, scale, params);
    } catch (const std::invalid_argument& err) {
        StageReport st;
        st.stage = "count_separated_sums";
        st.flagged = true;
        st.note = err.what();
        push(std::move(st));
        return rep;
    }
    {
        StageReport st;
        st.stage = "count_separated_sums";
        st.add("total", static_cast<double>(sums.total));
        st.add("regions", static_cast<double>(sums.per_region.size()));
        st.add("max_cell_multiplicity", static_cast<double>(sums.max_cell_multiplicity));
        st.add("collision_budget", sums.collision_budget);
        st.add("violations", static_cast<double>(sums.violations));
        st.add("measured_constant", sums.measured_constant);
        if (sums.collision_flag) {
            st.flagged = true;
            st.note = "per-cell multiplicity above budget";
        }
        if (sums.violation_flag) {
            st.flagged = true;
            st.note += std::string(st.note.empty() ? "" : "; ") + "sums outside their region";
        }
        push(std::move(st));
    }

    rep.total_sums = sums.total;
    // Sum-to-product bridge: the sums live in (A+A) x (A+A) - b0, so the
    // covering number of A + A is at least the square root of the total.
    rep.n_lower = static_cast<std::int64_t>(
        std::ceil(std::sqrt(static_cast<double>(sums.total))));
    rep.contradiction = static_cast<double>(rep.n_lower) > rep.entropy_threshold;
    rep.outcome = PipelineOutcome::lower_bound;
    {
        StageReport st;
        st.stage = "conclusion";
        st.add("n_lower", static_cast<double>(rep.n_lower));
        st.add("n_measured", static_cast<double>(rep.n_measured));
        st.add("entropy_threshold", rep.entropy_threshold);
        st.add("contradiction", rep.contradiction ? 1.0 : 0.0);
        push(std::move(st));
    }
    return rep;
}

}  // namespace sumproj
