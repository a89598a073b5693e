#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sumproj/direction.hpp"
#include "sumproj/geometry.hpp"
#include "sumproj/scale.hpp"
#include "sumproj/tube.hpp"

namespace sumproj {

// Knobs of the fan/sum-counting pipeline. Every implicit "up to constants"
// step has a named parameter here; reports always carry the measured
// value next to the budget so defaults can be recalibrated offline.
struct FanParams {
    double s = 0.55;
    double sigma = 0.50;
    double tau = 0.0;              // 0 = default 2 (s - sigma) / (1 - s)
    double C_avg = 4.0;            // direction-average energy constant
    double good_exponent_c = 2.0;  // c in the sigma-good exponent 2(s-1) + c(sigma-s)
    double C_E = 4.0;              // exceptional-projection threshold constant
    double c_fan = 1.0 / 16.0;     // fan mass success constant
    double c_rich = 1.0 / 16.0;    // rich-tube mass constant
    double c_tcount = 1.0 / 16.0;  // rich-tube count budget constant
    double C_near = 4.0;           // apex exclusion radius constant
    double C_heavy = 4.0;          // heavy-point energy constant
    double K_mult = 4.0;           // per-cell collision budget constant

    double tau_effective() const { return tau > 0.0 ? tau : 2.0 * (s - sigma) / (1.0 - s); }
    double kappa() const { return std::max(tau_effective(), good_exponent_c * (s - sigma)); }

    void validate() const {
        static const double s_max = 2.0 - std::sqrt(2.0);
        if (!(s >= 0.5 && s < s_max))
            throw std::invalid_argument("FanParams: s must lie in [1/2, 2 - sqrt(2)), got " +
                                        std::to_string(s));
        if (!(sigma > 0.0 && sigma < s))
            throw std::invalid_argument("FanParams: need 0 < sigma < s");
        if (!(tau_effective() > (s - sigma) / (1.0 - s)))
            throw std::invalid_argument("FanParams: need tau > (s - sigma)/(1 - s)");
    }

    // Per-direction average-energy threshold: C_avg delta^(sigma+s-2) log(1/delta).
    double direction_energy_threshold(const Scale& sc) const {
        return C_avg * sc.delta_pow(sigma + s - 2.0) * sc.log_inv_delta();
    }
    // Tube discard factor D = C_avg^(3/2) sqrt(log 1/delta) delta^((sigma-s)/2).
    double tube_prune_factor(const Scale& sc) const {
        return std::pow(C_avg, 1.5) * std::sqrt(sc.log_inv_delta()) *
               sc.delta_pow((sigma - s) / 2.0);
    }
    double tube_prune_threshold(const Scale& sc) const {
        return tube_prune_factor(sc) * sc.delta_pow(sigma + s - 2.0) * sc.log_inv_delta();
    }
    // A tube is sigma-good when its energy is below
    // C_avg^(3/2) delta^(2(s-1) + c(sigma-s)) log^(3/2)(1/delta).
    double sigma_good_threshold(const Scale& sc) const {
        return std::pow(C_avg, 1.5) *
               sc.delta_pow(2.0 * (s - 1.0) + good_exponent_c * (sigma - s)) *
               std::pow(sc.log_inv_delta(), 1.5);
    }
    double heavy_point_threshold(const Scale& sc) const {
        return C_heavy * sc.delta_pow(s - 1.0 - 2.0 * kappa()) *
               std::pow(sc.log_inv_delta(), 1.5);
    }
    double rich_tube_threshold(const Scale& sc) const {
        return c_rich * sc.delta_pow(kappa() + s - 1.0);
    }
    double rich_count_budget(const Scale& sc) const {
        return c_tcount * sc.delta_pow(4.0 * kappa() - s);
    }
    double fan_mass_threshold(const Scale& sc) const {
        return c_fan * sc.delta_pow(tau_effective() - 1.0);
    }
    double exclusion_radius(const Scale& sc) const { return C_near * sc.delta_pow(1.0 - s); }
    std::int64_t tube_budget(const Scale& sc) const {
        return static_cast<std::int64_t>(std::ceil(C_E * sc.delta_pow(-s)));
    }
    double collision_budget(const Scale& sc) const {
        return K_mult * sc.delta_pow(s * (s - 1.0) - 3.0 * kappa());
    }
};

// ---------------------------------------------------------------------------
// Direction selection: keep directions whose average per-tube energy stays
// below the budget. The tube count N is the number of nonempty slabs,
// clipped to ceil(C_E delta^-s); a clip means the small-projection
// hypothesis failed and is flagged rather than silently absorbed.
// ---------------------------------------------------------------------------

struct DirectionStats {
    Direction e;
    double energy_sum = 0.0;
    std::int64_t nonempty_tubes = 0;
    std::int64_t clipped_n = 0;
    double average = 0.0;
    bool budget_clipped = false;
    bool kept = false;
};

struct DirectionSelection {
    std::vector<TubeFamily> families;  // kept directions only, angle order
    std::vector<DirectionStats> stats; // all directions, angle order
    double threshold = 0.0;
    double mean_score = 0.0;           // mean over directions of their averages
    double grand_average = 0.0;        // sum of all energies / (|E| N)
    std::int64_t grand_n = 0;
    bool any_budget_clipped = false;
    bool markov_flag = false;          // set when retention < 1/2 despite a small mean
    std::string diagnostic;
};

inline DirectionSelection select_low_energy_directions(std::span<const Vec2> B,
                                                       const DirectionSet& E,
                                                       const Scale& scale,
                                                       const FanParams& params) {
    if (E.directions.empty())
        throw std::invalid_argument("select_low_energy_directions: empty direction set");
    DirectionSelection sel;
    sel.threshold = params.direction_energy_threshold(scale);
    const std::int64_t budget = params.tube_budget(scale);

    double grand_sum = 0.0;
    std::int64_t max_nonempty = 0;
    for (const Direction& e : E.directions) {
        TubeFamily family = build_tube_family(B, e, scale, params.s);
        DirectionStats st;
        st.e = e;
        st.nonempty_tubes = static_cast<std::int64_t>(family.buckets.size());
        for (const auto& bucket : family.buckets) st.energy_sum += bucket.energy;
        st.clipped_n = std::max<std::int64_t>(1, std::min(st.nonempty_tubes, budget));
        st.budget_clipped = st.nonempty_tubes > budget;
        st.average = st.energy_sum / static_cast<double>(st.clipped_n);
        st.kept = st.average < sel.threshold;
        sel.any_budget_clipped = sel.any_budget_clipped || st.budget_clipped;
        grand_sum += st.energy_sum;
        max_nonempty = std::max(max_nonempty, st.nonempty_tubes);
        sel.mean_score += st.average;
        if (st.kept) sel.families.push_back(std::move(family));
        sel.stats.push_back(std::move(st));
    }
    sel.mean_score /= static_cast<double>(E.directions.size());
    sel.grand_n = std::max<std::int64_t>(1, std::min(max_nonempty, budget));
    sel.grand_average =
        grand_sum / (static_cast<double>(E.directions.size()) * static_cast<double>(sel.grand_n));

    // Markov: a mean below threshold/2 forces at least half the directions
    // through. Anything else is reported, not asserted.
    if (2.0 * sel.families.size() < E.directions.size()) {
        if (sel.mean_score <= sel.threshold / 2.0) sel.markov_flag = true;
        sel.diagnostic = "retained " + std::to_string(sel.families.size()) + " of " +
                         std::to_string(E.directions.size()) + " directions";
    }
    if (sel.families.empty())
        sel.diagnostic = "all directions discarded; mean score " + std::to_string(sel.mean_score) +
                         " vs threshold " + std::to_string(sel.threshold);
    return sel;
}

// ---------------------------------------------------------------------------
// Tube pruning within one direction: drop tubes at or above the energy
// threshold, then drop single-point tubes. The 9/10 coverage guarantee
// applies to the energy step; single-point tubes are counted separately.
// ---------------------------------------------------------------------------

struct PrunedFamily {
    TubeFamily family;                  // surviving buckets only
    std::size_t covered_before = 0;     // |B| (the partition covers the plane)
    std::size_t covered_after_energy = 0;
    std::size_t covered_final = 0;
    std::int64_t tubes_energy_pruned = 0;
    std::int64_t tubes_single_point = 0;
    double threshold = 0.0;
    bool coverage_flag = false;         // energy pruning lost more than 1/10
};

inline PrunedFamily prune_high_energy_tubes(TubeFamily family, const Scale& scale,
                                            const FanParams& params) {
    PrunedFamily out;
    out.threshold = params.tube_prune_threshold(scale);
    out.covered_before = family.total_points;
    std::vector<TubeFamily::Bucket> kept;
    kept.reserve(family.buckets.size());
    for (auto& bucket : family.buckets) {
        if (bucket.energy >= out.threshold) {
            ++out.tubes_energy_pruned;
            continue;
        }
        out.covered_after_energy += bucket.ids.size();
        if (bucket.ids.size() < 2) {
            ++out.tubes_single_point;
            continue;
        }
        out.covered_final += bucket.ids.size();
        kept.push_back(std::move(bucket));
    }
    out.coverage_flag =
        10 * out.covered_after_energy < 9 * out.covered_before;
    family.buckets = std::move(kept);
    out.family = std::move(family);
    return out;
}

inline PrunedFamily prune_high_energy_tubes(std::span<const Vec2> B, Direction e,
                                            const Scale& scale, const FanParams& params) {
    return prune_high_energy_tubes(build_tube_family(B, e, scale, params.s), scale, params);
}

// Sum over ordered pairs (b, b') of the number of directions whose pruned
// family has b and b' in a common tube. Computed per direction from bucket
// sizes; the cubic definition is used as a test oracle.
inline std::uint64_t count_tube_sharing_pairs(std::span<const PrunedFamily> families) {
    std::uint64_t total = 0;
    for (const PrunedFamily& pf : families)
        for (const auto& bucket : pf.family.buckets) {
            const auto k = static_cast<std::uint64_t>(bucket.ids.size());
            total += k * (k - 1);
        }
    return total;
}

// ---------------------------------------------------------------------------
// Fan extraction. G(b) is the set of points sharing a surviving tube with b
// over the selected directions; the fan apex maximizes |G(b)|.
// ---------------------------------------------------------------------------

struct FanArm {
    Direction e;
    std::int64_t tube_index = 0;
    Vec2 axis;  // unit vector along the tube, oriented later by the quadrant step
    std::vector<std::int32_t> member_ids;
};

struct Fan {
    Vec2 apex;
    std::int32_t apex_id = -1;
    std::vector<FanArm> arms;             // sorted by direction angle
    std::vector<std::int32_t> members;    // union of arm members, sorted, unique
    double tau = 0.0;

    std::size_t mass() const { return members.size(); }
};

struct NoFanReport {
    std::uint64_t best_mass = 0;
    std::int32_t best_id = -1;
    Vec2 best_point;
    double threshold = 0.0;
};

struct FanSearchResult {
    std::optional<Fan> fan;
    NoFanReport no_fan;  // populated either way; carries max |G(b)| achieved

    bool found() const { return fan.has_value(); }
};

inline std::vector<std::int32_t> fan_member_union(const Fan& fan) {
    std::vector<std::int32_t> ids;
    for (const FanArm& arm : fan.arms)
        ids.insert(ids.end(), arm.member_ids.begin(), arm.member_ids.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

inline FanSearchResult find_fan(std::span<const Vec2> B, std::span<const PrunedFamily> families,
                                const Scale& scale, const FanParams& params) {
    FanSearchResult result;
    result.no_fan.threshold = params.fan_mass_threshold(scale);
    if (B.empty()) return result;

    const auto n = B.size();
    // bucket_of[f][i]: position of point i's surviving bucket in family f.
    std::vector<std::vector<std::int32_t>> bucket_of(families.size(),
                                                     std::vector<std::int32_t>(n, -1));
    for (std::size_t f = 0; f < families.size(); ++f)
        for (std::size_t bi = 0; bi < families[f].family.buckets.size(); ++bi)
            for (std::int32_t id : families[f].family.buckets[bi].ids)
                bucket_of[f][static_cast<std::size_t>(id)] = static_cast<std::int32_t>(bi);

    std::vector<std::int32_t> stamp(n, -1);
    std::uint64_t best_mass = 0;
    std::int32_t best_id = -1;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t mass = 0;
        for (std::size_t f = 0; f < families.size(); ++f) {
            const std::int32_t bi = bucket_of[f][i];
            if (bi < 0) continue;
            for (std::int32_t id : families[f].family.buckets[static_cast<std::size_t>(bi)].ids) {
                if (stamp[static_cast<std::size_t>(id)] != static_cast<std::int32_t>(i)) {
                    stamp[static_cast<std::size_t>(id)] = static_cast<std::int32_t>(i);
                    ++mass;
                }
            }
        }
        const bool better =
            mass > best_mass ||
            (mass == best_mass && best_id >= 0 &&
             lex_less(B[i], B[static_cast<std::size_t>(best_id)]));
        if (best_id < 0 || better) {
            best_mass = mass;
            best_id = static_cast<std::int32_t>(i);
        }
    }

    result.no_fan.best_mass = best_mass;
    result.no_fan.best_id = best_id;
    if (best_id >= 0) result.no_fan.best_point = B[static_cast<std::size_t>(best_id)];
    if (best_id < 0 || static_cast<double>(best_mass) < result.no_fan.threshold) return result;

    Fan fan;
    fan.apex = B[static_cast<std::size_t>(best_id)];
    fan.apex_id = best_id;
    fan.tau = params.tau_effective();
    for (std::size_t f = 0; f < families.size(); ++f) {
        const std::int32_t bi = bucket_of[f][static_cast<std::size_t>(best_id)];
        if (bi < 0) continue;
        const auto& bucket = families[f].family.buckets[static_cast<std::size_t>(bi)];
        FanArm arm;
        arm.e = families[f].family.e;
        arm.tube_index = bucket.index;
        arm.axis = arm.e.axis();
        arm.member_ids = bucket.ids;
        fan.arms.push_back(std::move(arm));
    }
    std::sort(fan.arms.begin(), fan.arms.end(),
              [](const FanArm& a, const FanArm& b) { return a.e.theta < b.e.theta; });
    fan.members = fan_member_union(fan);
    result.fan = std::move(fan);
    return result;
}

}  // namespace sumproj
