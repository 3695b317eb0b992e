#pragma once

// Independent reference implementations used by the unit and acceptance
// suites: Monte Carlo PoC, dense grid scans for interval bounds, and direct
// summation of Belief and Plausibility over focal elements.  These stay
// deliberately naive; the library must agree with them, not share code.

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "ecra/cdm.hpp"
#include "ecra/core.hpp"
#include "ecra/evidence.hpp"
#include "ecra/poc.hpp"

namespace testo {

struct McEstimate {
    double p = 0.0;
    double sigma = 0.0;  // standard error of p
};

// Plain Monte Carlo: Cholesky transform of standard normals, count hits
// inside the disk.
inline McEstimate mc_poc(const ecra::Vec2& mu, const ecra::Cov2& cov, double hbr,
                         std::size_t n, std::uint64_t seed) {
    const double l11 = std::sqrt(cov.sxx);
    const double l21 = cov.sxz / l11;
    const double l22 = std::sqrt(cov.szz - l21 * l21);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const double r2 = hbr * hbr;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z1 = g(rng);
        const double z2 = g(rng);
        const double x = mu.xi + l11 * z1;
        const double y = mu.zeta + l21 * z1 + l22 * z2;
        if (x * x + y * y <= r2) ++hits;
    }
    McEstimate est;
    est.p = static_cast<double>(hits) / static_cast<double>(n);
    est.sigma = std::sqrt(std::max(est.p * (1.0 - est.p), 1e-12) /
                          static_cast<double>(n));
    return est;
}

// Dense grid scan of poc over the PSD-feasible subset of a box.  Returns
// (min, max) over the scanned points; fails the enclosing test if the box
// admits no feasible grid point.
inline std::pair<double, double> grid_scan_bounds(const ecra::Box5& box,
                                                  double hbr, int per_axis,
                                                  double rel_tol = 1e-6) {
    std::vector<std::vector<double>> axes(5);
    for (int d = 0; d < 5; ++d) {
        const auto& iv = box.iv[d];
        if (iv.width() == 0.0) {
            axes[static_cast<std::size_t>(d)] = {iv.lo};
            continue;
        }
        for (int i = 0; i < per_axis; ++i)
            axes[static_cast<std::size_t>(d)].push_back(
                iv.lo + iv.width() * static_cast<double>(i) /
                            static_cast<double>(per_axis - 1));
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double m1 : axes[0])
        for (double m2 : axes[1])
            for (double v1 : axes[2])
                for (double v2 : axes[3])
                    for (double c : axes[4]) {
                        if (!(v1 > 0.0) || !(v2 > 0.0) || c * c > v1 * v2) continue;
                        double p;
                        try {
                            p = ecra::poc({m1, m2}, {v1, v2, c}, hbr, rel_tol);
                        } catch (const ecra::NumericalError&) {
                            continue;
                        }
                        lo = std::min(lo, p);
                        hi = std::max(hi, p);
                    }
    return {lo, hi};
}

// Uniform random PSD-feasible point inside a box, by rejection.
inline ecra::UVector random_feasible_point(const ecra::Box5& box,
                                           std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        ecra::UVector u;
        for (int d = 0; d < 5; ++d)
            u[d] = box.iv[d].lo + unit(rng) * box.iv[d].width();
        if (u[2] > 0.0 && u[3] > 0.0 && u[4] * u[4] <= u[2] * u[3]) return u;
    }
    throw std::runtime_error("no feasible point found in box");
}

// Direct summations of Belief and Plausibility at threshold t, with the same
// clipping rule the curve applies: nonpositive values stay 0, positive values
// clamp into [floor, 1].
inline double clip(double v, double floor) {
    if (v <= 0.0) return 0.0;
    return std::min(std::max(v, floor), 1.0);
}

inline double brute_bel(const ecra::FocalElementSet& fes, double t, double floor) {
    double s = 0.0;
    for (const auto& fe : fes.elements)
        if (!fe.empty && clip(fe.poc->lo, floor) >= t) s += fe.bpa;
    return s;
}

inline double brute_pl(const ecra::FocalElementSet& fes, double t, double floor) {
    double s = 0.0;
    for (const auto& fe : fes.elements)
        if (!fe.empty && clip(fe.poc->hi, floor) >= t) s += fe.bpa;
    return s;
}

// Random covariance with log-uniform axis sigmas and bounded correlation.
inline ecra::Cov2 random_cov(std::mt19937_64& rng, double sig_lo, double sig_hi,
                             double corr_max = 0.9) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double ls = std::log(sig_lo), lh = std::log(sig_hi);
    const double s1 = std::exp(ls + unit(rng) * (lh - ls));
    const double s2 = std::exp(ls + unit(rng) * (lh - ls));
    const double rho = (2.0 * unit(rng) - 1.0) * corr_max;
    return {s1 * s1, s2 * s2, rho * s1 * s2};
}

}  // namespace testo
