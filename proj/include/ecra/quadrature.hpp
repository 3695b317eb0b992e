// Adaptive 1D quadrature: Gauss-Kronrod 15(7) panels with worst-first
// bisection.  Deterministic: panel selection breaks ties on position.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ecra/core.hpp"

namespace ecra {

namespace detail {

// Kronrod-15 abscissae (positive half) and weights, Gauss-7 weights.
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a = 0.0;
    double b = 0.0;
    double value = 0.0;
    double error = 0.0;
    bool splittable = true;
};

template <typename F>
Panel gk15(const F& f, double a, double b) {
    const double h = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double kron = kWgk[7] * f(mid);
    double gauss = kWg[3] * f(mid);
    for (int i = 0; i < 7; ++i) {
        const double dx = h * kXgk[i];
        const double f1 = f(mid - dx);
        const double f2 = f(mid + dx);
        kron += kWgk[i] * (f1 + f2);
        if (i % 2 == 1) gauss += kWg[i / 2] * (f1 + f2);
    }
    Panel p;
    p.a = a;
    p.b = b;
    p.value = kron * h;
    const double diff = std::abs(kron - gauss) * std::abs(h);
    // QUADPACK-style sharpened estimate, floored at the raw difference scale.
    p.error = diff;
    if (diff > 0.0) {
        const double scaled = 200.0 * diff;
        if (scaled < 1.0) p.error = diff * std::sqrt(scaled);
    }
    return p;
}

}  // namespace detail

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = false;
    int panels = 0;
};

// Integrate f over [a, b].  Stops when the summed error estimate drops below
// max(rel_tol * |integral|, abs_floor) or the panel budget is exhausted.
// `initial_splits` seeds the panel list with a uniform partition so narrow
// features away from the interval centre are not missed.
template <typename F>
QuadResult integrate_adaptive(const F& f, double a, double b, double rel_tol,
                              double abs_floor = 1e-300, int max_panels = 512,
                              int initial_splits = 8) {
    std::vector<detail::Panel> panels;
    panels.reserve(static_cast<std::size_t>(max_panels));
    const double step = (b - a) / initial_splits;
    for (int i = 0; i < initial_splits; ++i) {
        const double pa = a + i * step;
        const double pb = (i + 1 == initial_splits) ? b : a + (i + 1) * step;
        panels.push_back(detail::gk15(f, pa, pb));
    }
    QuadResult out;
    while (true) {
        double total = 0.0;
        double err = 0.0;
        for (const auto& p : panels) {
            total += p.value;
            err += p.error;
        }
        out.value = total;
        out.error = err;
        out.panels = static_cast<int>(panels.size());
        if (err <= std::max(rel_tol * std::abs(total), abs_floor)) {
            out.converged = true;
            return out;
        }
        if (static_cast<int>(panels.size()) >= max_panels) return out;
        // Worst panel, position as the deterministic tie-break.
        std::size_t worst = panels.size();
        for (std::size_t i = 0; i < panels.size(); ++i) {
            if (!panels[i].splittable) continue;
            if (worst == panels.size() || panels[i].error > panels[worst].error ||
                (panels[i].error == panels[worst].error && panels[i].a < panels[worst].a))
                worst = i;
        }
        if (worst == panels.size()) return out;  // nothing left to split
        detail::Panel p = panels[worst];
        const double mid = 0.5 * (p.a + p.b);
        if (!(mid > p.a && mid < p.b)) {
            panels[worst].splittable = false;
            continue;
        }
        panels[worst] = detail::gk15(f, p.a, mid);
        panels.push_back(detail::gk15(f, mid, p.b));
    }
}

}  // namespace ecra
