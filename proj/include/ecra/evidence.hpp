// Random-set evidence over the five uncertain inputs: focal elements from
// the Cartesian product of per-variable alpha-cut intervals, belief and
// plausibility curves over PoC thresholds, and the area metric between them.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "ecra/cdm.hpp"
#include "ecra/core.hpp"
#include "ecra/pbox.hpp"
#include "ecra/poc.hpp"

namespace ecra {

struct FocalElement {
    Box5 box;
    double bpa = 0.0;
    std::array<std::uint8_t, 5> cut_index{};  // which interval per variable
    bool empty = false;                        // contains no observed sample
    std::optional<PocInterval> poc;            // filled by cache_poc_bounds
};

struct FocalElementSet {
    std::vector<FocalElement> elements;  // lexicographic in cut_index
    int n_nonempty = 0;
    double redistributed_mass = 0.0;  // mass moved off empty elements
    double bounds_hbr = -1.0;         // hbr the cached bounds were computed for
};

// Cartesian product of the per-variable interval sets.  An element is empty
// when no observed sample vector lies inside its box (closed intervals, raw
// covariance values); the mass of empty elements is redistributed evenly
// across the rest.
inline FocalElementSet build_focal_elements(const std::array<IntervalSet, 5>& cuts,
                                            const std::vector<UVector>& samples) {
    std::array<std::size_t, 5> counts{};
    std::size_t total = 1;
    for (int d = 0; d < 5; ++d) {
        counts[d] = cuts[d].intervals.size();
        if (counts[d] == 0 || counts[d] != cuts[d].bpa.size())
            throw ValidationError("build_focal_elements: malformed interval set");
        if (counts[d] > 255)
            throw ValidationError("build_focal_elements: too many intervals");
        total *= counts[d];
    }
    if (samples.empty())
        throw ValidationError("build_focal_elements: no samples");

    FocalElementSet out;
    out.elements.reserve(total);
    std::array<std::uint8_t, 5> idx{};
    for (std::size_t flat = 0; flat < total; ++flat) {
        FocalElement fe;
        fe.cut_index = idx;
        fe.bpa = 1.0;
        for (int d = 0; d < 5; ++d) {
            fe.box.iv[d] = cuts[d].intervals[idx[d]];
            fe.bpa *= cuts[d].bpa[idx[d]];
        }
        fe.empty = true;
        for (const auto& u : samples) {
            if (fe.box.contains(u)) {
                fe.empty = false;
                break;
            }
        }
        out.elements.push_back(fe);
        for (int d = 4; d >= 0; --d) {  // idx[0] slowest
            if (++idx[d] < counts[d]) break;
            idx[d] = 0;
        }
    }

    double lost = 0.0;
    int nonempty = 0;
    for (auto& fe : out.elements) {
        if (fe.empty) {
            lost += fe.bpa;
            fe.bpa = 0.0;
        } else {
            ++nonempty;
        }
    }
    if (nonempty == 0)
        throw InternalError("build_focal_elements: every element is empty");
    if (lost > 0.0) {
        const double share = lost / nonempty;
        for (auto& fe : out.elements)
            if (!fe.empty) fe.bpa += share;
    }
    out.n_nonempty = nonempty;
    out.redistributed_mass = lost;
    return out;
}

// Fill the PoC bound cache of every non-empty element.  Elements are
// independent, so the loop parallelises; results do not depend on the job
// count.  A non-empty element contains an admissible sample, so the box is
// never infeasible.
inline void cache_poc_bounds(FocalElementSet& fes, double hbr,
                             double rel_tol = 1e-6, const BoundsOptions& opts = {},
                             int jobs = 1) {
    parallel_for(fes.elements.size(), jobs, [&](std::size_t i) {
        auto& fe = fes.elements[i];
        if (fe.empty) return;
        auto b = poc_bounds(fe.box, hbr, rel_tol, opts);
        if (!b)
            throw InternalError("cache_poc_bounds: non-empty element with an "
                                "inadmissible box");
        fe.poc = *b;
    });
    fes.bounds_hbr = hbr;
}

// ---------------------------------------------------------------------------
// Belief / plausibility over the proposition {PoC >= t}.
//
//   bel(t) = sum of bpa over elements whose whole box satisfies it
//            (poc_min >= t)
//   pl(t)  = sum of bpa over elements that can satisfy it (poc_max >= t)
//
// Bound values are clipped into [poc_floor, 1] (exact zeros stay zero), and
// the curves are exact step functions of t on [poc_floor, 1].
struct BelPlCurve {
    double poc_floor = 1e-30;
    // Distinct clipped bound values (ascending) with suffix mass sums:
    // suffix[i] = total bpa with value >= vals[i].
    std::vector<double> min_vals, min_suffix;
    std::vector<double> max_vals, max_suffix;

    double bel_at(double t) const { return suffix_geq(min_vals, min_suffix, t); }
    double pl_at(double t) const { return suffix_geq(max_vals, max_suffix, t); }

    static double suffix_geq(const std::vector<double>& vals,
                             const std::vector<double>& suffix, double t) {
        auto it = std::lower_bound(vals.begin(), vals.end(), t);
        if (it == vals.end()) return 0.0;
        return suffix[static_cast<std::size_t>(it - vals.begin())];
    }

    // Mass strictly above t (value of the step on the open segment right of t).
    static double suffix_gt(const std::vector<double>& vals,
                            const std::vector<double>& suffix, double t) {
        auto it = std::upper_bound(vals.begin(), vals.end(), t);
        if (it == vals.end()) return 0.0;
        return suffix[static_cast<std::size_t>(it - vals.begin())];
    }

    // All clipped bound values: the only places either curve can step.
    std::vector<double> breakpoints() const {
        std::vector<double> bp;
        bp.reserve(min_vals.size() + max_vals.size());
        bp.insert(bp.end(), min_vals.begin(), min_vals.end());
        bp.insert(bp.end(), max_vals.begin(), max_vals.end());
        std::sort(bp.begin(), bp.end());
        bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
        return bp;
    }
};

namespace detail {

inline void build_suffix(std::vector<std::pair<double, double>>& pairs,
                         std::vector<double>& vals, std::vector<double>& suffix) {
    // Sort by (value, mass) so the accumulation order, and with it the exact
    // floating-point result, is independent of element order.
    std::sort(pairs.begin(), pairs.end());
    vals.clear();
    suffix.clear();
    for (const auto& [v, b] : pairs) {
        if (vals.empty() || vals.back() != v) {
            vals.push_back(v);
            suffix.push_back(0.0);
        }
    }
    // suffix shares indexing with vals; accumulate from the top.
    double acc = 0.0;
    std::size_t vi = vals.size();
    std::size_t pi = pairs.size();
    while (vi > 0) {
        --vi;
        while (pi > 0 && pairs[pi - 1].first == vals[vi]) {
            acc += pairs[pi - 1].second;
            --pi;
        }
        suffix[vi] = acc;
    }
}

}  // namespace detail

inline BelPlCurve bel_pl_curve(const FocalElementSet& fes, double hbr,
                               double poc_floor = 1e-30) {
    if (!(poc_floor > 0.0) || poc_floor >= 1.0)
        throw ValidationError("bel_pl_curve: poc_floor must be in (0, 1)");
    if (fes.bounds_hbr < 0.0)
        throw InternalError("bel_pl_curve: PoC bounds not cached");
    if (fes.bounds_hbr != hbr)
        throw InternalError("bel_pl_curve: bounds cached for a different hbr");
    auto clip = [&](double v) {
        if (v <= 0.0) return 0.0;
        return std::clamp(v, poc_floor, 1.0);
    };
    std::vector<std::pair<double, double>> mins, maxs;
    for (const auto& fe : fes.elements) {
        if (fe.empty) continue;
        if (!fe.poc)
            throw InternalError("bel_pl_curve: missing cached bounds");
        mins.emplace_back(clip(fe.poc->lo), fe.bpa);
        maxs.emplace_back(clip(fe.poc->hi), fe.bpa);
    }
    BelPlCurve c;
    c.poc_floor = poc_floor;
    detail::build_suffix(mins, c.min_vals, c.min_suffix);
    detail::build_suffix(maxs, c.max_vals, c.max_suffix);
    return c;
}

// ---------------------------------------------------------------------------
// Area between the curves in log10(threshold), and readings at a threshold.

struct CurveMetrics {
    double bel_at_poc0 = 0.0;
    double pl_at_poc0 = 0.0;
    double area = 0.0;             // integral of (pl - bel) d log10 t
    double area_normalized = 0.0;  // area / (-log10 poc_floor)
};

inline CurveMetrics curve_metrics(const BelPlCurve& c, double poc0) {
    if (!(poc0 >= c.poc_floor) || poc0 > 1.0)
        throw ValidationError("curve_metrics: poc0 must be in [poc_floor, 1]");
    CurveMetrics m;
    m.bel_at_poc0 = c.bel_at(poc0);
    m.pl_at_poc0 = c.pl_at(poc0);

    // Both curves are constant between consecutive breakpoints; integrate the
    // open segments exactly.  Values below the floor were clipped onto it.
    std::vector<double> bp = c.breakpoints();
    std::vector<double> knots{c.poc_floor};
    for (double v : bp)
        if (v > c.poc_floor && v < 1.0) knots.push_back(v);
    knots.push_back(1.0);
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double gap =
            BelPlCurve::suffix_gt(c.max_vals, c.max_suffix, knots[i]) -
            BelPlCurve::suffix_gt(c.min_vals, c.min_suffix, knots[i]);
        area += gap * (std::log10(knots[i + 1]) - std::log10(knots[i]));
    }
    m.area = area;
    m.area_normalized = area / (-std::log10(c.poc_floor));
    return m;
}

// Smallest surviving mass: the default plausibility threshold.
inline double default_pl0(const FocalElementSet& fes) {
    double mn = -1.0;
    for (const auto& fe : fes.elements) {
        if (fe.empty) continue;
        if (mn < 0.0 || fe.bpa < mn) mn = fe.bpa;
    }
    if (mn < 0.0) throw InternalError("default_pl0: no non-empty elements");
    return mn;
}

}  // namespace ecra
