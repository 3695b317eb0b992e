// Distribution-free probability boxes for one uncertain scalar: weighted
// empirical CDF, DKW confidence band, a Gaussian-mixture fit of the band
// bounds, and alpha-cut extraction of weighted intervals.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "ecra/core.hpp"

namespace ecra {

// ---------------------------------------------------------------------------
// Weighted empirical CDF.  Values are deduplicated and sorted; weights are
// normalised to sum to one.  n_raw keeps the pre-merge sample count, which is
// what the DKW band depends on.
struct WeightedEcdf {
    std::vector<double> values;   // ascending, distinct
    std::vector<double> weights;  // positive, sum to 1
    int n_raw = 0;

    // P(X <= x), right-continuous step function.
    double at(double x) const {
        auto it = std::upper_bound(values.begin(), values.end(), x);
        double s = 0.0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(it - values.begin()); ++i)
            s += weights[i];
        return s;
    }
};

inline WeightedEcdf weighted_ecdf(const std::vector<double>& values,
                                  const std::vector<double>& weights) {
    if (values.empty()) throw ValidationError("weighted_ecdf: no samples");
    if (values.size() != weights.size())
        throw ValidationError("weighted_ecdf: size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!is_finite(values[i])) throw ValidationError("weighted_ecdf: non-finite value");
        if (!(weights[i] > 0.0) || !is_finite(weights[i]))
            throw ValidationError("weighted_ecdf: weights must be positive");
        total += weights[i];
    }
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] < values[b];
        return a < b;
    });
    WeightedEcdf e;
    e.n_raw = static_cast<int>(values.size());
    for (std::size_t k : order) {
        if (!e.values.empty() && e.values.back() == values[k]) {
            e.weights.back() += weights[k] / total;
        } else {
            e.values.push_back(values[k]);
            e.weights.push_back(weights[k] / total);
        }
    }
    return e;
}

// Cumulative weight helper used by the band targets.
inline std::vector<double> cumulative_weights(const WeightedEcdf& e) {
    std::vector<double> c(e.values.size());
    double s = 0.0;
    for (std::size_t i = 0; i < e.values.size(); ++i) {
        s += e.weights[i];
        c[i] = s;
    }
    if (!c.empty()) c.back() = 1.0;  // kill accumulated rounding at the top
    return c;
}

// ---------------------------------------------------------------------------
// Dvoretzky-Kiefer-Wolfowitz band at confidence 1 - delta.  The half-width
// depends on the raw sample count, not on the weights.
struct DkwBand {
    double epsilon = 0.0;
    double delta = 0.0;
    int n = 0;
};

inline DkwBand dkw_band(int n_raw, double delta) {
    if (n_raw < 1) throw ValidationError("dkw_band: need at least one sample");
    if (!(delta > 0.0) || !(delta < 1.0))
        throw ValidationError("dkw_band: delta must be in (0, 1)");
    DkwBand b;
    b.n = n_raw;
    b.delta = delta;
    b.epsilon = std::sqrt(std::log(2.0 / delta) / (2.0 * n_raw));
    return b;
}

inline DkwBand dkw_band(const WeightedEcdf& e, double delta) {
    return dkw_band(e.n_raw, delta);
}

// ---------------------------------------------------------------------------
// Gaussian mixture CDF with fixed centres.

struct MixtureCdf {
    std::vector<double> centers;
    std::vector<double> weights;  // simplex
    std::vector<double> sigmas;   // >= fitted floor

    double at(double x) const {
        double s = 0.0;
        for (std::size_t j = 0; j < centers.size(); ++j)
            s += weights[j] * norm_cdf((x - centers[j]) / sigmas[j]);
        return s;
    }
};

namespace detail {

// Piecewise-linear tables of the standard normal CDF/PDF on [-8, 8], used
// only inside the band fit where ~1e-7 accuracy is ample and speed matters.
inline constexpr int kPhiTabN = 8192;
inline constexpr double kPhiTabZmax = 8.0;

struct PhiTables {
    std::array<double, kPhiTabN + 1> cdf{};
    std::array<double, kPhiTabN + 1> pdf{};
};

inline const PhiTables& phi_tables() {
    static const PhiTables t = [] {
        PhiTables tt;
        for (int i = 0; i <= kPhiTabN; ++i) {
            const double z = -kPhiTabZmax + 2.0 * kPhiTabZmax * i / kPhiTabN;
            tt.cdf[i] = norm_cdf(z);
            tt.pdf[i] = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
        }
        return tt;
    }();
    return t;
}

inline double cdf_fast(double z) {
    if (z <= -kPhiTabZmax) return 0.0;
    if (z >= kPhiTabZmax) return 1.0;
    const auto& t = phi_tables();
    const double u = (z + kPhiTabZmax) * (kPhiTabN / (2.0 * kPhiTabZmax));
    const int i = static_cast<int>(u);
    const double frac = u - i;
    return t.cdf[i] + frac * (t.cdf[i + 1] - t.cdf[i]);
}

inline double pdf_fast(double z) {
    if (z <= -kPhiTabZmax || z >= kPhiTabZmax) return 0.0;
    const auto& t = phi_tables();
    const double u = (z + kPhiTabZmax) * (kPhiTabN / (2.0 * kPhiTabZmax));
    const int i = static_cast<int>(u);
    const double frac = u - i;
    return t.pdf[i] + frac * (t.pdf[i + 1] - t.pdf[i]);
}

// Euclidean projection onto the probability simplex (Duchi et al.).
inline void project_simplex(std::vector<double>& w) {
    const std::size_t m = w.size();
    std::vector<double> u = w;
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0;
    double tau = 0.0;
    std::size_t rho = 0;
    for (std::size_t i = 0; i < m; ++i) {
        css += u[i];
        const double t = (css - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) {
            rho = i + 1;
            tau = t;
        }
    }
    (void)rho;
    for (auto& x : w) x = std::max(0.0, x - tau);
}

// A fitted bound may drift towards the middle of the band, but it must not
// poke out of it: the upper fit has no room above its target, the lower fit
// none below.  Excursions past the margin on that side get a stiff penalty.
inline constexpr double kHugMargin = 0.005;
inline constexpr double kHugPenalty = 200.0;

// Least-squares fit of (weights, sigmas) against grid targets with fixed
// centres: spectral projected gradient with a nonmonotone line search.
struct MixtureFitProblem {
    const std::vector<double>& grid;
    const std::vector<double>& targets;
    const std::vector<double>& centers;
    double sigma_min;
    double sigma_cap;
    double hug_sign;  // +1: residual > margin is penalized; -1: < -margin

    mutable std::vector<double> phi;   // G x m scratch
    mutable std::vector<double> dphi;  // G x m scratch
    mutable std::vector<double> resid;

    double objective_grad(const std::vector<double>& w, const std::vector<double>& s,
                          std::vector<double>& gw, std::vector<double>& gs) const {
        const std::size_t G = grid.size();
        const std::size_t m = centers.size();
        phi.resize(G * m);
        dphi.resize(G * m);
        resid.resize(G);
        for (std::size_t g = 0; g < G; ++g) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const double z = (grid[g] - centers[j]) / s[j];
                const double P = cdf_fast(z);
                phi[g * m + j] = P;
                dphi[g * m + j] = -pdf_fast(z) * z / s[j];  // dPhi/dsigma
                acc += w[j] * P;
            }
            resid[g] = acc - targets[g];
        }
        double f = 0.0;
        for (std::size_t g = 0; g < G; ++g) {
            f += sq(resid[g]);
            const double bad = hug_sign * resid[g] - kHugMargin;
            if (bad > 0.0) f += kHugPenalty * sq(bad);
        }
        gw.assign(m, 0.0);
        gs.assign(m, 0.0);
        for (std::size_t g = 0; g < G; ++g) {
            double r2 = 2.0 * resid[g];
            const double bad = hug_sign * resid[g] - kHugMargin;
            if (bad > 0.0) r2 += 2.0 * kHugPenalty * bad * hug_sign;
            for (std::size_t j = 0; j < m; ++j) {
                gw[j] += r2 * phi[g * m + j];
                gs[j] += r2 * w[j] * dphi[g * m + j];
            }
        }
        return f;
    }

    void project(std::vector<double>& w, std::vector<double>& s) const {
        project_simplex(w);
        for (auto& v : s) v = std::clamp(v, sigma_min, sigma_cap);
    }

    // Returns final objective; parameters are updated in place.
    double solve(std::vector<double>& w, std::vector<double>& s,
                 int max_iter = 120) const {
        const std::size_t m = centers.size();
        project(w, s);
        std::vector<double> gw, gs, gw_new, gs_new;
        double f = objective_grad(w, s, gw, gs);
        std::vector<double> recent{f};
        double step = 1.0;
        {
            double gnorm = 0.0;
            for (double v : gw) gnorm += sq(v);
            for (double v : gs) gnorm += sq(v);
            if (gnorm > 0.0) step = 0.1 / std::sqrt(gnorm);
        }
        std::vector<double> wn(m), sn(m);
        for (int it = 0; it < max_iter; ++it) {
            const double fmax = *std::max_element(recent.begin(), recent.end());
            double fn = f;
            bool accepted = false;
            double t = step;
            for (int bt = 0; bt < 40; ++bt) {
                for (std::size_t j = 0; j < m; ++j) {
                    wn[j] = w[j] - t * gw[j];
                    sn[j] = s[j] - t * gs[j];
                }
                project(wn, sn);
                double decr = 0.0;  // <g, x - x_new>, >= 0 for a projected step
                for (std::size_t j = 0; j < m; ++j)
                    decr += gw[j] * (w[j] - wn[j]) + gs[j] * (s[j] - sn[j]);
                fn = objective_grad(wn, sn, gw_new, gs_new);
                if (fn <= fmax - 1e-4 * decr || decr <= 1e-18) {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted) break;
            // Barzilai-Borwein step for the next iteration.
            double sy = 0.0, ss = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const double dxw = wn[j] - w[j];
                const double dxs = sn[j] - s[j];
                sy += dxw * (gw_new[j] - gw[j]) + dxs * (gs_new[j] - gs[j]);
                ss += sq(dxw) + sq(dxs);
            }
            step = (sy > 1e-30) ? std::clamp(ss / sy, 1e-12, 1e8) : step * 2.0;
            const double fprev = f;
            w = wn;
            s = sn;
            gw = gw_new;
            gs = gs_new;
            f = fn;
            recent.push_back(f);
            if (recent.size() > 8) recent.erase(recent.begin());
            if (ss < 1e-24 || std::abs(fprev - fn) <= 1e-12 * (1.0 + std::abs(fprev)))
                break;
        }
        return f;
    }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Probability box: independent mixture fits of the band's upper and lower
// bounds, plus a truncated support.  Evaluation repairs any residual crossing
// of the two fitted curves pointwise, so upper_at >= lower_at always holds.
struct PBox {
    MixtureCdf upper;  // fit of min(1, F + eps)
    MixtureCdf lower;  // fit of max(0, F - eps)
    double support_lo = 0.0;
    double support_hi = 0.0;
    double residual_upper = 0.0;   // exact-CDF sum of squares on the fit grid
    double residual_lower = 0.0;
    double crossing = 0.0;         // max(lower - upper) seen on the fit grid
    double sigma_min = 0.0;

    double upper_at(double x) const {
        return std::clamp(std::max(upper.at(x), lower.at(x)), 0.0, 1.0);
    }
    double lower_at(double x) const {
        return std::clamp(std::min(upper.at(x), lower.at(x)), 0.0, 1.0);
    }
};

inline constexpr int kPBoxFitGrid = 512;

// Fit the p-box for one uncertain scalar.  One mixture component per distinct
// sample value, centres pinned there; weights on the simplex and sigmas above
// a resolution floor are fitted to the clipped DKW bounds on a fixed grid.
inline PBox fit_pbox(const WeightedEcdf& ecdf, const DkwBand& band) {
    if (ecdf.values.empty()) throw ValidationError("fit_pbox: empty ecdf");
    const std::size_t m = ecdf.values.size();
    const double vmin = ecdf.values.front();
    const double vmax = ecdf.values.back();
    const double spread = vmax - vmin;
    const double scale = spread > 0.0 ? spread : 1.0;
    const double sigma_min = 1e-6 * scale;
    const double sigma_cap = 32.0 * scale;

    std::vector<double> grid(kPBoxFitGrid);
    const double glo = vmin - 4.0 * scale;
    const double ghi = vmax + 4.0 * scale;
    for (int g = 0; g < kPBoxFitGrid; ++g)
        grid[g] = glo + (ghi - glo) * static_cast<double>(g) / (kPBoxFitGrid - 1);

    const auto cum = cumulative_weights(ecdf);
    auto ecdf_at = [&](double x) {
        auto it = std::upper_bound(ecdf.values.begin(), ecdf.values.end(), x);
        return it == ecdf.values.begin() ? 0.0 : cum[it - ecdf.values.begin() - 1];
    };
    std::vector<double> t_upper(kPBoxFitGrid), t_lower(kPBoxFitGrid);
    for (int g = 0; g < kPBoxFitGrid; ++g) {
        const double F = ecdf_at(grid[g]);
        t_upper[g] = std::min(1.0, F + band.epsilon);
        t_lower[g] = std::max(0.0, F - band.epsilon);
    }

    auto fit_one = [&](const std::vector<double>& targets, double hug_sign,
                       MixtureCdf& out) {
        detail::MixtureFitProblem prob{grid,      targets, ecdf.values, sigma_min,
                                       sigma_cap, hug_sign, {},          {}, {}};
        // Four deterministic starts: equal weights with band-proportional
        // uniform sigmas at 0.5x, 1x, 1.5x, plus per-component local gaps.
        const double sigma_base =
            std::max(sigma_min, band.epsilon * scale);
        std::vector<std::vector<double>> sigma_inits;
        for (double mult : {0.5, 1.0, 1.5})
            sigma_inits.emplace_back(m, std::max(sigma_min, mult * sigma_base));
        {
            std::vector<double> local(m);
            for (std::size_t j = 0; j < m; ++j) {
                const double left = j > 0 ? ecdf.values[j] - ecdf.values[j - 1] : scale;
                const double right =
                    j + 1 < m ? ecdf.values[j + 1] - ecdf.values[j] : scale;
                local[j] = std::max(sigma_min, 0.5 * (left + right));
            }
            sigma_inits.push_back(std::move(local));
        }
        double best_f = -1.0;
        std::vector<double> best_w, best_s;
        for (const auto& s0 : sigma_inits) {
            std::vector<double> w(m, 1.0 / static_cast<double>(m));
            std::vector<double> s = s0;
            const double f = prob.solve(w, s);
            if (!is_finite(f)) continue;
            if (best_f < 0.0 || f < best_f) {
                best_f = f;
                best_w = w;
                best_s = s;
            }
        }
        if (best_f < 0.0)
            throw NumericalError("fit_pbox: all mixture fits diverged");
        out.centers = ecdf.values;
        out.weights = std::move(best_w);
        out.sigmas = std::move(best_s);
        // Exact-CDF residual for the record (the fit itself used tabulated Phi).
        double f_exact = 0.0;
        for (int g = 0; g < kPBoxFitGrid; ++g) f_exact += sq(out.at(grid[g]) - targets[g]);
        return f_exact;
    };

    PBox pb;
    pb.sigma_min = sigma_min;
    pb.residual_upper = fit_one(t_upper, 1.0, pb.upper);
    pb.residual_lower = fit_one(t_lower, -1.0, pb.lower);

    // Truncated support: 1% quantile of the lower fit's first component and
    // 99% quantile of the upper fit's last component.
    pb.support_lo = pb.lower.centers.front() - kZ99 * pb.lower.sigmas.front();
    pb.support_hi = pb.upper.centers.back() + kZ99 * pb.upper.sigmas.back();

    double cross = 0.0;
    for (int g = 0; g < kPBoxFitGrid; ++g)
        cross = std::max(cross, pb.lower.at(grid[g]) - pb.upper.at(grid[g]));
    pb.crossing = cross;
    return pb;
}

// ---------------------------------------------------------------------------
// Alpha-cut intervals.

struct IntervalSet {
    std::vector<Interval> intervals;  // endpoints non-decreasing along the list
    std::vector<double> bpa;          // one mass per interval, sums to 1
    int n_cuts = 0;
};

namespace detail {

// Left-continuous generalized inverse inf{x : f(x) >= alpha} on [lo, hi].
template <typename F>
double inverse_left(const F& f, double alpha, double lo, double hi) {
    if (f(lo) >= alpha) return lo;
    if (f(hi) < alpha) return hi;
    double a = lo, b = hi;
    for (int it = 0; it < 90; ++it) {
        const double mid = 0.5 * (a + b);
        if (!(mid > a && mid < b)) break;
        if (f(mid) >= alpha)
            b = mid;
        else
            a = mid;
    }
    return b;
}

}  // namespace detail

// Cut the p-box at alpha_k = k / (n_cuts + 1).  Interval k spans from the
// upper bound's inverse at alpha_k to the lower bound's inverse at
// alpha_{k+1}; the outermost cuts land on the support endpoints.  Each
// interval carries mass 1 / (n_cuts + 1).
inline IntervalSet alpha_cut_intervals(const PBox& pb, int n_cuts) {
    if (n_cuts < 1 || n_cuts > 15)
        throw ValidationError("alpha_cut_intervals: n_cuts must be in [1, 15]");
    const int m = n_cuts + 1;
    auto up = [&](double x) { return pb.upper_at(x); };
    auto low = [&](double x) { return pb.lower_at(x); };
    IntervalSet out;
    out.n_cuts = n_cuts;
    out.intervals.reserve(m);
    out.bpa.assign(m, 1.0 / m);
    for (int k = 0; k < m; ++k) {
        const double a_lo = static_cast<double>(k) / m;
        const double a_hi = static_cast<double>(k + 1) / m;
        Interval iv;
        iv.lo = (k == 0) ? pb.support_lo
                         : detail::inverse_left(up, a_lo, pb.support_lo, pb.support_hi);
        iv.hi = (k == n_cuts)
                    ? pb.support_hi
                    : detail::inverse_left(low, a_hi, pb.support_lo, pb.support_hi);
        iv.lo = std::clamp(iv.lo, pb.support_lo, pb.support_hi);
        iv.hi = std::clamp(iv.hi, pb.support_lo, pb.support_hi);
        if (iv.hi < iv.lo) iv.hi = iv.lo;  // numerically glued cuts
        out.intervals.push_back(iv);
    }
    return out;
}

}  // namespace ecra
