// Probability of collision over the encounter-plane disk, interval bounds of
// PoC over boxes of the uncertain inputs, and the scaled-covariance variant.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <vector>

#include "ecra/cdm.hpp"
#include "ecra/core.hpp"
#include "ecra/quadrature.hpp"

namespace ecra {

inline constexpr double kPocDegenerateDet = 1e-20;  // det at or below: refuse
inline constexpr double kPocAbsFloor = 1e-300;      // results below: report 0

namespace detail {

// Integrand of the angular integral after the radial direction has been
// integrated in closed form.  Working frame: covariance eigenbasis, Gaussian
// mean m, disk of radius R centred at the origin.
//
//   g(th) = exp(b^2/(2a) - c/2) * int_0^R r exp(-(a/2)(r - b/a)^2) dr
//
// with a = cos^2/l1 + sin^2/l2, b = m1 cos/l1 + m2 sin/l2,
// c = m1^2/l1 + m2^2/l2.  Cauchy-Schwarz gives b^2 <= a c, so the exponent
// never overflows.  The erf difference is evaluated through erfc in the tails.
struct AngularIntegrand {
    double l1, l2, m1, m2, R;

    double operator()(double th) const {
        const double ct = std::cos(th);
        const double st = std::sin(th);
        const double a = ct * ct / l1 + st * st / l2;
        const double b = m1 * ct / l1 + m2 * st / l2;
        const double c = m1 * m1 / l1 + m2 * m2 / l2;
        const double r0 = b / a;
        const double s = std::sqrt(0.5 * a);
        const double expo = 0.5 * b * b / a - 0.5 * c;  // <= 0
        double radial = (std::exp(-sq(s * r0)) - std::exp(-sq(s * (R - r0)))) / a;
        radial += r0 * std::sqrt(M_PI / (2.0 * a)) * erf_diff(-s * r0, s * (R - r0));
        if (radial < 0.0) radial = 0.0;  // exact value is >= 0
        return std::exp(expo) * radial;
    }
};

}  // namespace detail

// Probability that the relative position, distributed N(mu, cov), falls
// inside the disk of radius hbr centred at the origin.  The joint covariance
// is diagonalised, the radial integral is done in closed form and the angular
// integral adaptively; rel_tol controls the angular quadrature.
inline double poc(const Vec2& mu, const Cov2& cov, double hbr,
                  double rel_tol = 1e-6) {
    if (!(rel_tol > 0.0) || rel_tol > 1e-2)
        throw ValidationError("poc: rel_tol must be in (0, 1e-2]");
    for (double v : {mu.xi, mu.zeta, cov.sxx, cov.szz, cov.sxz, hbr})
        if (!is_finite(v)) throw ValidationError("poc: non-finite input");
    if (hbr <= 0.0) throw ValidationError("poc: hbr must be > 0");
    if (cov.sxx <= 0.0 || cov.szz <= 0.0)
        throw ValidationError("poc: variances must be > 0");
    const double det = cov.det();
    if (det <= kPocDegenerateDet) throw DegenerateCovariance(det);

    const Eig2 e = eigen_decompose(cov);
    const Vec2 m = to_eigenbasis(e, mu);

    // Cheap far-miss rejection: the density anywhere on the disk is at most
    // exp(-dmin^2/2) / (2 pi sqrt(det)) with dmin the smallest possible
    // Mahalanobis distance to the disk.
    const double miss = norm(m);
    if (miss > hbr) {
        const double dmin = (miss - hbr) / std::sqrt(e.l1);
        const double log_bound =
            std::log(M_PI * hbr * hbr) - std::log(2.0 * M_PI * std::sqrt(det)) -
            0.5 * dmin * dmin;
        if (log_bound < std::log(kPocAbsFloor)) return 0.0;
    }

    const detail::AngularIntegrand g{e.l1, e.l2, m.xi, m.zeta, hbr};
    const QuadResult q = integrate_adaptive(g, 0.0, 2.0 * M_PI, rel_tol, 1e-310);
    if (!q.converged)
        throw NumericalError("poc: angular quadrature did not converge (err=" +
                             std::to_string(q.error) + ")");
    double p = q.value / (2.0 * M_PI * std::sqrt(e.l1 * e.l2));
    p = std::clamp(p, 0.0, 1.0);
    return p < kPocAbsFloor ? 0.0 : p;
}

inline double poc(const CdmRecord& c, double rel_tol = 1e-6) {
    return poc(c.mu, c.cov, c.hbr_m, rel_tol);
}

// ---------------------------------------------------------------------------
// PoC range over a box of the five uncertain inputs.

// Axis-aligned box over [mu_xi, mu_zeta, var_xi, var_zeta, cov_xizeta].
struct Box5 {
    std::array<Interval, 5> iv;

    bool contains(const UVector& u) const {
        for (int d = 0; d < 5; ++d)
            if (!iv[d].contains(u[d])) return false;
        return true;
    }
};

struct BoundsOptions {
    int interior_starts = 64;   // quasi-random starts inside the box
    int refine_evals = 160;     // local-search evaluation budget per descent
    bool refine_all_starts = true;  // false: descend only from the best start
    std::uint64_t seed = 0;     // offsets the quasi-random sequence
};

struct PocInterval {
    double lo = 0.0;
    double hi = 0.0;
    UVector arg_lo{};
    UVector arg_hi{};
};

namespace detail {

inline constexpr double kVarFloor = 1e-12;       // smallest admissible variance
inline constexpr double kCorrClamp = 0.999;      // |corr| cap for evaluation

// Nearest admissible point to u: inside the box and comfortably inside the
// positive-definite cone.  Returns nullopt when the box slice allows no such
// point even at maximal variances.
inline std::optional<UVector> project_feasible(const Box5& box, UVector u) {
    for (int d = 0; d < 5; ++d)
        u[d] = std::clamp(u[d], box.iv[d].lo, box.iv[d].hi);
    for (int attempt = 0; attempt < 2; ++attempt) {
        const double limit = kCorrClamp * std::sqrt(u[2] * u[3]);
        const double lo = std::max(box.iv[4].lo, -limit);
        const double hi = std::min(box.iv[4].hi, limit);
        if (lo <= hi) {
            u[4] = std::clamp(u[4], lo, hi);
            return u;
        }
        // Try again with the variances at their upper bounds, which widens
        // the admissible correlation band as far as the box permits.
        u[2] = box.iv[2].hi;
        u[3] = box.iv[3].hi;
    }
    return std::nullopt;
}

inline Vec2 u_mu(const UVector& u) { return {u[0], u[1]}; }
inline Cov2 u_cov(const UVector& u) { return {u[2], u[3], u[4]}; }

// Upper bound on log Phi(z) for z < 0; exact log in the moderate range, the
// Mills-ratio bound phi(z)/|z| far out where erfc underflows.
inline double log_norm_cdf_upper(double z) {
    if (z >= 0.0) return 0.0;
    if (z > -30.0) return std::log(norm_cdf(z));
    return -0.5 * z * z - std::log(-z) - 0.5 * std::log(2.0 * M_PI);
}

// Certified upper bound on sup poc over the box, from the axis-aligned strip
// enclosures of the disk.  The marginal of each coordinate is Gaussian with
// the box variance regardless of correlation, so the bound holds on the whole
// PSD-feasible set, not only on the clamped evaluation set.
inline double log_poc_sup_bound(const Box5& box, double hbr) {
    double best = 0.0;
    for (int axis = 0; axis < 2; ++axis) {
        const Interval& mu = box.iv[axis];
        const double d = mu.contains(0.0) ? 0.0 : std::min(std::abs(mu.lo), std::abs(mu.hi));
        if (d <= hbr) continue;
        const double sig = std::sqrt(box.iv[2 + axis].hi);
        best = std::min(best, log_norm_cdf_upper((hbr - d) / sig));
    }
    return best;
}

// Boxes certified below this are not worth integrating; the bound itself is
// reported as the upper end, which keeps enclosure intact and stays far
// below any usable probability floor.
inline constexpr double kFarCertifyLog = -92.1034037197618;  // log(1e-40)

}  // namespace detail

// Extrema of poc over the box, by multi-start derivative-free local search:
// every vertex, the centre, and quasi-random interior points, each refined by
// a compass search projected back into the admissible set.  Returns nullopt
// when the box contains no admissible covariance (caller treats the element
// as empty).
inline std::optional<PocInterval> poc_bounds(const Box5& box_in, double hbr,
                                             double rel_tol = 1e-6,
                                             const BoundsOptions& opts = {}) {
    for (const auto& iv : box_in.iv)
        if (!iv.valid()) throw ValidationError("poc_bounds: invalid interval");
    if (opts.interior_starts < 0 || opts.refine_evals < 0)
        throw ValidationError("poc_bounds: negative budget");

    Box5 box = box_in;
    for (int d = 2; d <= 3; ++d) {
        box.iv[d].lo = std::max(box.iv[d].lo, detail::kVarFloor);
        if (box.iv[d].hi < box.iv[d].lo) return std::nullopt;
    }
    {   // PSD feasibility of the whole box
        const auto& sxz = box.iv[4];
        const double min_abs = sxz.contains(0.0)
                                   ? 0.0
                                   : std::min(std::abs(sxz.lo), std::abs(sxz.hi));
        if (sq(min_abs) > box.iv[2].hi * box.iv[3].hi) return std::nullopt;
    }

    // Hopeless faraway boxes: certify sup poc analytically instead of
    // integrating.  lo = 0 and hi = bound enclose every value in the box.
    {
        const double lb = detail::log_poc_sup_bound(box, hbr);
        if (lb < detail::kFarCertifyLog) {
            PocInterval out;
            out.lo = 0.0;
            out.hi = std::exp(lb);
            UVector centre;
            for (int d = 0; d < 5; ++d) centre[d] = box.iv[d].mid();
            auto proj = detail::project_feasible(box, centre);
            out.arg_lo = proj ? *proj : centre;
            out.arg_hi = out.arg_lo;
            return out;
        }
    }

    std::array<double, 5> width{};
    for (int d = 0; d < 5; ++d) width[d] = box.iv[d].width();

    // Candidate starts: 32 vertices, centre, Halton interior points.
    std::vector<UVector> starts;
    starts.reserve(33 + opts.interior_starts);
    for (int mask = 0; mask < 32; ++mask) {
        UVector u;
        for (int d = 0; d < 5; ++d)
            u[d] = (mask >> d) & 1 ? box.iv[d].hi : box.iv[d].lo;
        starts.push_back(u);
    }
    {
        UVector u;
        for (int d = 0; d < 5; ++d) u[d] = box.iv[d].mid();
        starts.push_back(u);
    }
    static constexpr std::uint32_t kBases[5] = {2, 3, 5, 7, 11};
    for (int i = 0; i < opts.interior_starts; ++i) {
        UVector u;
        for (int d = 0; d < 5; ++d)
            u[d] = box.iv[d].lo +
                   halton(opts.seed + 1 + static_cast<std::uint64_t>(i), kBases[d]) *
                       width[d];
        starts.push_back(u);
    }

    // Project, deduplicate, evaluate.
    std::set<UVector> seen;
    struct Eval {
        UVector u;
        double p;
    };
    std::vector<Eval> evals;
    auto try_eval = [&](const UVector& raw) -> std::optional<double> {
        auto proj = detail::project_feasible(box, raw);
        if (!proj) return std::nullopt;
        if (!seen.insert(*proj).second) return std::nullopt;
        try {
            const double p = poc(detail::u_mu(*proj), detail::u_cov(*proj), hbr, rel_tol);
            evals.push_back({*proj, p});
            return p;
        } catch (const NumericalError&) {
            return std::nullopt;
        }
    };
    std::vector<std::size_t> start_idx;
    for (const auto& u : starts) {
        const std::size_t before = evals.size();
        try_eval(u);
        if (evals.size() > before) start_idx.push_back(evals.size() - 1);
    }
    if (evals.empty()) return std::nullopt;

    // Compass search from a point; sign=+1 maximises, sign=-1 minimises.
    auto refine = [&](UVector x, double fx, int sign) {
        std::array<double, 5> h{};
        for (int d = 0; d < 5; ++d) h[d] = 0.25 * width[d];
        int budget = opts.refine_evals;
        while (budget > 0) {
            bool improved = false;
            for (int d = 0; d < 5 && budget > 0; ++d) {
                if (width[d] <= 0.0) continue;
                for (double dir : {1.0, -1.0}) {
                    if (budget <= 0) break;
                    UVector cand = x;
                    cand[d] += dir * h[d];
                    auto proj = detail::project_feasible(box, cand);
                    if (!proj) continue;
                    bool fresh = seen.insert(*proj).second;
                    double p;
                    try {
                        p = poc(detail::u_mu(*proj), detail::u_cov(*proj), hbr, rel_tol);
                    } catch (const NumericalError&) {
                        continue;
                    }
                    --budget;
                    if (fresh) evals.push_back({*proj, p});
                    if (sign * (p - fx) > 0.0) {
                        x = *proj;
                        fx = p;
                        improved = true;
                    }
                }
            }
            if (!improved) {
                double hmax = 0.0;
                for (int d = 0; d < 5; ++d) {
                    h[d] *= 0.5;
                    if (width[d] > 0.0) hmax = std::max(hmax, h[d] / width[d]);
                }
                if (hmax < 1e-4) break;
            }
        }
    };

    if (opts.refine_all_starts) {
        for (std::size_t i : start_idx) {
            refine(evals[i].u, evals[i].p, +1);
            refine(evals[i].u, evals[i].p, -1);
        }
    } else {
        std::size_t imin = 0, imax = 0;
        for (std::size_t i = 1; i < evals.size(); ++i) {
            if (evals[i].p < evals[imin].p) imin = i;
            if (evals[i].p > evals[imax].p) imax = i;
        }
        refine(evals[imax].u, evals[imax].p, +1);
        refine(evals[imin].u, evals[imin].p, -1);
    }

    PocInterval out;
    out.lo = evals.front().p;
    out.hi = evals.front().p;
    out.arg_lo = out.arg_hi = evals.front().u;
    for (const auto& ev : evals) {
        if (ev.p < out.lo) {
            out.lo = ev.p;
            out.arg_lo = ev.u;
        }
        if (ev.p > out.hi) {
            out.hi = ev.p;
            out.arg_hi = ev.u;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scaled-covariance PoC: maximise over per-object scale factors.

struct SpocConfig {
    Interval kp{0.5, 5.0};
    Interval ks{0.5, 5.0};
    int grid_resolution = 21;
    double rel_tol = 1e-6;
};

struct SpocResult {
    double value = 0.0;
    double kp = 1.0;
    double ks = 1.0;
    bool combined_fallback = false;  // single scale applied to the sum
};

namespace detail {

inline void validate_spoc_cfg(const SpocConfig& cfg) {
    if (!(cfg.kp.lo > 0.0) || !cfg.kp.valid() || !(cfg.ks.lo > 0.0) || !cfg.ks.valid())
        throw ValidationError("spoc: scale ranges must be positive intervals");
    if (cfg.grid_resolution < 2)
        throw ValidationError("spoc: grid_resolution must be >= 2");
}

inline std::vector<double> linspace_iv(const Interval& iv, int n) {
    if (iv.width() <= 0.0) return {iv.lo};
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i)
        xs[i] = iv.lo + iv.width() * static_cast<double>(i) / (n - 1);
    return xs;
}

}  // namespace detail

// Maximum PoC over covariances kp^2 * cov_p + ks^2 * cov_s, scale factors on
// a grid followed by a local refinement.  The unscaled pair (1, 1) is always
// evaluated when both ranges contain it, so the result dominates plain poc.
inline SpocResult spoc(const Cov2& cov_p, const Cov2& cov_s, const Vec2& mu,
                       double hbr, const SpocConfig& cfg = {}) {
    detail::validate_spoc_cfg(cfg);
    bool any = false;
    SpocResult best;
    auto consider = [&](double kp, double ks) {
        try {
            const double p =
                poc(mu, sq(kp) * cov_p + sq(ks) * cov_s, hbr, cfg.rel_tol);
            if (!any || p > best.value) {
                best = {p, kp, ks, false};
                any = true;
            }
        } catch (const NumericalError&) {
        }
    };
    for (double kp : detail::linspace_iv(cfg.kp, cfg.grid_resolution))
        for (double ks : detail::linspace_iv(cfg.ks, cfg.grid_resolution))
            consider(kp, ks);
    if (cfg.kp.contains(1.0) && cfg.ks.contains(1.0)) consider(1.0, 1.0);
    if (!any) throw NumericalError("spoc: no admissible scale pair");

    double hp = cfg.kp.width() / std::max(1, cfg.grid_resolution - 1);
    double hs = cfg.ks.width() / std::max(1, cfg.grid_resolution - 1);
    int budget = 400;
    while (budget > 0 && (hp > 1e-6 * std::max(cfg.kp.width(), 1.0) ||
                          hs > 1e-6 * std::max(cfg.ks.width(), 1.0))) {
        const SpocResult prev = best;
        const double steps[4][2] = {{hp, 0.0}, {-hp, 0.0}, {0.0, hs}, {0.0, -hs}};
        for (const auto& st : steps) {
            const double kp = std::clamp(prev.kp + st[0], cfg.kp.lo, cfg.kp.hi);
            const double ks = std::clamp(prev.ks + st[1], cfg.ks.lo, cfg.ks.hi);
            consider(kp, ks);
            --budget;
        }
        if (best.value <= prev.value) {
            hp *= 0.5;
            hs *= 0.5;
        }
    }
    return best;
}

// Fallback when only the combined covariance is known: a single factor k
// applied to it (equivalent to kp = ks = k), maximised over the kp range.
inline SpocResult spoc_combined(const Cov2& cov, const Vec2& mu, double hbr,
                                const SpocConfig& cfg = {}) {
    detail::validate_spoc_cfg(cfg);
    bool any = false;
    SpocResult best;
    auto consider = [&](double k) {
        try {
            const double p = poc(mu, sq(k) * cov, hbr, cfg.rel_tol);
            if (!any || p > best.value) {
                best = {p, k, k, true};
                any = true;
            }
        } catch (const NumericalError&) {
        }
    };
    for (double k : detail::linspace_iv(cfg.kp, cfg.grid_resolution)) consider(k);
    if (cfg.kp.contains(1.0)) consider(1.0);
    if (!any) throw NumericalError("spoc: no admissible scale factor");
    double h = cfg.kp.width() / std::max(1, cfg.grid_resolution - 1);
    int budget = 200;
    while (budget > 0 && h > 1e-6 * std::max(cfg.kp.width(), 1.0)) {
        const SpocResult prev = best;
        consider(std::clamp(prev.kp + h, cfg.kp.lo, cfg.kp.hi));
        consider(std::clamp(prev.kp - h, cfg.kp.lo, cfg.kp.hi));
        budget -= 2;
        if (best.value <= prev.value) h *= 0.5;
    }
    return best;
}

}  // namespace ecra
