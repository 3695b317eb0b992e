// Sample weights for a CDM sequence, from an exponential decay law fitted to
// the normalised covariance determinants over normalised time.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ecra/cdm.hpp"
#include "ecra/core.hpp"

namespace ecra {

// One CDM mapped to fit coordinates: tprime runs 0 (earliest message, largest
// t2tca) to 1 (latest message), yprime = det / max det over the sequence.
struct NormalizedPoint {
    double tprime = 0.0;
    double yprime = 0.0;
};

struct NormalizedSequence {
    std::vector<NormalizedPoint> points;  // same order as the sequence
    double t_earliest_days = 0.0;         // largest t2tca
    double t_latest_days = 0.0;           // smallest t2tca
    double det_max = 0.0;

    double tprime_of(double t2tca_days) const {
        const double span = t_latest_days - t_earliest_days;
        if (span == 0.0) return 1.0;  // single-epoch sequence
        return (t2tca_days - t_earliest_days) / span;
    }
};

inline NormalizedSequence normalize_sequence(const EventSequence& seq) {
    if (seq.cdms.empty()) throw ValidationError("normalize_sequence: empty event");
    NormalizedSequence out;
    out.t_earliest_days = seq.cdms.front().t2tca_days;
    out.t_latest_days = seq.cdms.back().t2tca_days;
    out.det_max = 0.0;
    for (const auto& c : seq.cdms) out.det_max = std::max(out.det_max, c.cov.det());
    if (!(out.det_max > 0.0))
        throw ValidationError("normalize_sequence: all covariances singular");
    out.points.reserve(seq.cdms.size());
    for (const auto& c : seq.cdms)
        out.points.push_back({out.tprime_of(c.t2tca_days), c.cov.det() / out.det_max});
    return out;
}

// Fitted decay law y = C exp(A t) + B with A, B, C >= 0.  The weight of a CDM
// is the reciprocal of the law at its normalised epoch.  `fallback` marks the
// uniform law substituted when fewer than three points are available.
struct WeightLaw {
    double A = 0.0;
    double B = 1.0;
    double C = 0.0;
    bool fallback = false;
    double residual = 0.0;  // sum of squared fit residuals

    double value(double tprime) const { return C * std::exp(A * tprime) + B; }
};

namespace detail {

// Best B, C >= 0 for a fixed exponent A (least squares is linear in them).
// Returns the residual sum of squares.
inline double solve_bc(const std::vector<NormalizedPoint>& pts, double A,
                       double& B, double& C) {
    const std::size_t n = pts.size();
    double se = 0.0, see = 0.0, sy = 0.0, sey = 0.0;
    for (const auto& p : pts) {
        const double e = std::exp(A * p.tprime);
        se += e;
        see += e * e;
        sy += p.yprime;
        sey += e * p.yprime;
    }
    auto rss = [&](double b, double c) {
        double s = 0.0;
        for (const auto& p : pts) s += sq(c * std::exp(A * p.tprime) + b - p.yprime);
        return s;
    };
    // Unconstrained normal equations, then clamp to the admissible quadrant.
    const double det = see * n - se * se;
    double bestB = 0.0, bestC = 0.0, best = -1.0;
    auto consider = [&](double b, double c) {
        if (!(b >= 0.0) || !(c >= 0.0) || !is_finite(b) || !is_finite(c)) return;
        const double r = rss(b, c);
        if (best < 0.0 || r < best) {
            best = r;
            bestB = b;
            bestC = c;
        }
    };
    if (det > 1e-14 * see * n) {
        consider((see * sy - se * sey) / det, (sey * n - se * sy) / det);
    }
    consider(sy / n, 0.0);                     // C = 0: constant law
    if (see > 0.0) consider(0.0, sey / see);   // B = 0: pure exponential
    B = bestB;
    C = bestC;
    return best;
}

}  // namespace detail

// Fit the decay law.  The exponent is found by a deterministic scan plus
// golden-section refinement; the linear pair (B, C) is solved exactly at each
// exponent.  Ties in residual resolve to the smallest exponent, and the
// constant law is always a candidate, so the fit never does worse than the
// mean of the data.
inline WeightLaw fit_weight_law(const NormalizedSequence& norm) {
    const auto& pts = norm.points;
    if (pts.size() < 3) {
        WeightLaw law;
        law.fallback = true;  // A=0, B=1, C=0: every weight equals 1
        double r = 0.0;
        for (const auto& p : pts) r += sq(1.0 - p.yprime);
        law.residual = r;
        return law;
    }
    constexpr double kAmax = 60.0;
    std::vector<double> grid{0.0, 0.1, 1.0, 3.0};
    for (int i = 0; i <= 40; ++i)
        grid.push_back(kAmax * static_cast<double>(i) / 40.0);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    auto g = [&](double A) {
        double B, C;
        return detail::solve_bc(pts, A, B, C);
    };
    std::size_t ibest = 0;
    double fbest = g(grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double f = g(grid[i]);
        if (f < fbest * (1.0 - 1e-12)) {
            fbest = f;
            ibest = i;
        }
    }
    double lo = ibest == 0 ? grid[0] : grid[ibest - 1];
    double hi = ibest + 1 == grid.size() ? grid[ibest] : grid[ibest + 1];
    // Golden-section on [lo, hi].
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = g(x1), f2 = g(x2);
    for (int it = 0; it < 80 && hi - lo > 1e-11 * (1.0 + hi); ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = g(x2);
        }
    }
    // Smallest exponent among near-ties.
    double Abest = 0.5 * (lo + hi);
    double fA = g(Abest);
    for (double cand : {lo, x1, x2, hi, grid[ibest], 0.0}) {
        const double fc = g(cand);
        if (fc < fA * (1.0 - 1e-12) || (rel_err(fc, fA, 1e-300) < 1e-9 && cand < Abest)) {
            Abest = cand;
            fA = fc;
        }
    }
    WeightLaw law;
    law.A = Abest;
    law.residual = detail::solve_bc(pts, Abest, law.B, law.C);
    if (law.B == 0.0 && law.C == 0.0)
        throw NumericalError("fit_weight_law: degenerate law (B=C=0)");
    return law;
}

// Reciprocal-law weights for each CDM of the sequence, in sequence order.
inline std::vector<double> cdm_weights(const EventSequence& seq,
                                       const NormalizedSequence& norm,
                                       const WeightLaw& law) {
    if (seq.cdms.size() != norm.points.size())
        throw ValidationError("cdm_weights: sequence/normalisation size mismatch");
    if (law.B == 0.0 && law.C == 0.0)
        throw NumericalError("cdm_weights: degenerate law (B=C=0)");
    std::vector<double> w;
    w.reserve(seq.cdms.size());
    for (const auto& p : norm.points) {
        const double y = law.value(p.tprime);
        if (!(y > 0.0) || !is_finite(y))
            throw NumericalError("cdm_weights: law is non-positive at t'=" +
                                 std::to_string(p.tprime));
        w.push_back(1.0 / y);
    }
    return w;
}

}  // namespace ecra
