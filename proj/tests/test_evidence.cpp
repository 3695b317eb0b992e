#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "ecra/evidence.hpp"
#include "oracles.hpp"

using namespace ecra;

namespace {

// Interval set with m equal-mass cells splitting [lo, hi] evenly.
IntervalSet even_cells(double lo, double hi, int m) {
    IntervalSet s;
    s.n_cuts = m - 1;
    for (int k = 0; k < m; ++k) {
        const double a = lo + (hi - lo) * k / m;
        const double b = lo + (hi - lo) * (k + 1) / m;
        s.intervals.push_back({a, b});
        s.bpa.push_back(1.0 / m);
    }
    return s;
}

std::array<IntervalSet, 5> even_cuts(int m) {
    return {even_cells(-1.0, 1.0, m), even_cells(-1.0, 1.0, m),
            even_cells(0.5, 1.5, m), even_cells(0.5, 1.5, m),
            even_cells(-0.2, 0.2, m)};
}

// Synthetic focal-element set with made-up cached bounds; the curve code only
// looks at bpa, empty, and the cached interval.
FocalElementSet synthetic_set(std::mt19937_64& rng, int n, double floor_frac) {
    FocalElementSet fes;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        FocalElement fe;
        fe.bpa = 1.0 / n;
        double a, b;
        if (unit(rng) < floor_frac) {
            a = 0.0;
            b = unit(rng) * 1e-35;  // below any sensible floor
        } else {
            const double e1 = -12.0 * unit(rng);
            const double e2 = -12.0 * unit(rng);
            a = std::pow(10.0, std::min(e1, e2));
            b = std::pow(10.0, std::max(e1, e2));
        }
        fe.poc = PocInterval{a, b, {}, {}};
        fes.elements.push_back(fe);
    }
    fes.n_nonempty = n;
    fes.bounds_hbr = 1.0;  // hand-filled cache
    return fes;
}

}  // namespace

TEST_CASE("product structure: counts and index order", "[evidence]") {
    for (int m : {2, 3, 4}) {
        const auto cuts = even_cuts(m);
        // one sample per cell of the first variable, centred elsewhere
        std::vector<UVector> samples;
        for (int k = 0; k < m; ++k) {
            const double x = -1.0 + 2.0 * (k + 0.5) / m;
            samples.push_back({x, 0.0, 1.0, 1.0, 0.0});
        }
        const auto fes = build_focal_elements(cuts, samples);
        const std::size_t expect = static_cast<std::size_t>(std::pow(m, 5));
        INFO("m=" << m);
        REQUIRE(fes.elements.size() == expect);
        // lexicographic in cut_index, first variable slowest
        for (std::size_t i = 1; i < fes.elements.size(); ++i)
            CHECK(fes.elements[i - 1].cut_index < fes.elements[i].cut_index);
        double mass = 0.0;
        for (const auto& fe : fes.elements) mass += fe.bpa;
        CHECK(mass == Catch::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("mass on empty cells moves evenly onto survivors", "[evidence]") {
    const auto cuts = even_cuts(2);
    // Two samples, both in the same cell pattern except the first variable.
    // Components sit strictly inside their cells, away from shared edges.
    std::vector<UVector> samples{{-0.5, -0.5, 0.75, 0.75, -0.1},
                                 {0.5, -0.5, 0.75, 0.75, -0.1}};
    const auto fes = build_focal_elements(cuts, samples);
    REQUIRE(fes.elements.size() == 32);
    CHECK(fes.n_nonempty == 2);
    const double base = 1.0 / 32.0;
    const double lost = 30.0 * base;
    CHECK(fes.redistributed_mass == Catch::Approx(lost).epsilon(1e-12));
    double mass = 0.0;
    for (const auto& fe : fes.elements) {
        if (fe.empty) {
            CHECK(fe.bpa == 0.0);
        } else {
            CHECK(fe.bpa == Catch::Approx(base + lost / 2.0).epsilon(1e-12));
        }
        mass += fe.bpa;
    }
    CHECK(mass == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(default_pl0(fes) == Catch::Approx(base + lost / 2.0).epsilon(1e-12));
}

TEST_CASE("a sample outside every cell of one variable is rejected", "[evidence]") {
    // Correlation cells demand c in [0.9, 1.8], but the only sample carries
    // c = 0.59, so every product cell is empty and there is nothing left to
    // carry the mass.
    std::array<IntervalSet, 5> cuts = {
        even_cells(-1.0, 1.0, 2), even_cells(-1.0, 1.0, 2),
        even_cells(0.5, 0.75, 2), even_cells(0.5, 0.75, 2),
        even_cells(0.9, 1.8, 2)};
    std::vector<UVector> samples{{0.0, 0.0, 0.6, 0.6, 0.59}};
    CHECK_THROWS_AS(build_focal_elements(cuts, samples), InternalError);
}

TEST_CASE("curve matches a direct sum over elements", "[evidence]") {
    std::mt19937_64 rng(314);
    const double floor = 1e-30;
    for (int trial = 0; trial < 25; ++trial) {
        const auto fes = synthetic_set(rng, 32, trial % 3 == 0 ? 0.3 : 0.0);
        const auto curve = bel_pl_curve(fes, 1.0, floor);
        std::uniform_real_distribution<double> ue(-31.0, 0.5);
        for (int q = 0; q < 100; ++q) {
            const double t = std::min(1.0, std::pow(10.0, ue(rng)));
            if (t < floor) continue;
            INFO("trial " << trial << " t " << t);
            // Masses are multiples of 1/32, so both sums are exact.
            CHECK(curve.bel_at(t) == testo::brute_bel(fes, t, floor));
            CHECK(curve.pl_at(t) == testo::brute_pl(fes, t, floor));
        }
    }
}

TEST_CASE("clipping: zeros drop out, small values pile on the floor", "[evidence]") {
    FocalElementSet fes;
    FocalElement a;  // hopeless element: exact zero bounds
    a.bpa = 0.25;
    a.poc = PocInterval{0.0, 0.0, {}, {}};
    FocalElement b;  // below-floor element: clamps onto the floor
    b.bpa = 0.25;
    b.poc = PocInterval{1e-40, 1e-35, {}, {}};
    FocalElement c;  // healthy element
    c.bpa = 0.5;
    c.poc = PocInterval{1e-6, 1e-4, {}, {}};
    fes.elements = {a, b, c};
    fes.n_nonempty = 3;
    fes.bounds_hbr = 2.0;

    const double floor = 1e-30;
    const auto curve = bel_pl_curve(fes, 2.0, floor);
    CHECK(curve.bel_at(floor) == 0.75);  // zero-bound element never counts
    CHECK(curve.pl_at(floor) == 0.75);
    CHECK(curve.bel_at(2e-30) == 0.5);  // floor mass stays at the floor only
    CHECK(curve.pl_at(1e-5) == 0.5);
    CHECK(curve.bel_at(1e-5) == 0.0);
    CHECK(curve.bel_at(1e-6) == 0.5);
}

TEST_CASE("curves are within [0,1], ordered, and non-increasing", "[evidence]") {
    std::mt19937_64 rng(2718);
    const auto fes = synthetic_set(rng, 24, 0.2);
    const auto curve = bel_pl_curve(fes, 1.0);
    double prev_bel = 1.0, prev_pl = 1.0;
    for (int g = 0; g <= 120; ++g) {
        const double t = std::pow(10.0, -30.0 + 30.0 * g / 120.0);
        const double bel = curve.bel_at(t);
        const double pl = curve.pl_at(t);
        CHECK(bel >= 0.0);
        CHECK(pl <= 1.0 + 1e-12);
        CHECK(bel <= pl + 1e-12);
        CHECK(bel <= prev_bel + 1e-12);
        CHECK(pl <= prev_pl + 1e-12);
        prev_bel = bel;
        prev_pl = pl;
    }
}

TEST_CASE("area extremes", "[evidence]") {
    // Total ignorance: every element spans [0, 1] after clipping.
    FocalElementSet vague;
    for (int i = 0; i < 4; ++i) {
        FocalElement fe;
        fe.bpa = 0.25;
        fe.poc = PocInterval{0.0, 1.0, {}, {}};
        vague.elements.push_back(fe);
    }
    vague.n_nonempty = 4;
    vague.bounds_hbr = 1.0;
    const auto mv = curve_metrics(bel_pl_curve(vague, 1.0, 1e-30), 1e-4);
    CHECK(mv.area == Catch::Approx(30.0).epsilon(1e-12));
    CHECK(mv.area_normalized == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(mv.pl_at_poc0 == 1.0);
    CHECK(mv.bel_at_poc0 == 0.0);

    // Perfect knowledge: bounds collapse to points.
    FocalElementSet sharp;
    for (int i = 0; i < 4; ++i) {
        FocalElement fe;
        fe.bpa = 0.25;
        const double v = 1e-5 * (i + 1);
        fe.poc = PocInterval{v, v, {}, {}};
        sharp.elements.push_back(fe);
    }
    sharp.n_nonempty = 4;
    sharp.bounds_hbr = 1.0;
    const auto ms = curve_metrics(bel_pl_curve(sharp, 1.0, 1e-30), 1e-4);
    CHECK(std::abs(ms.area) < 1e-12);
    CHECK(std::abs(ms.area_normalized) < 1e-12);
}

TEST_CASE("area equals a fine Riemann sum", "[evidence]") {
    std::mt19937_64 rng(555);
    const auto fes = synthetic_set(rng, 16, 0.25);
    const auto curve = bel_pl_curve(fes, 1.0, 1e-30);
    const auto m = curve_metrics(curve, 1e-4);
    // midpoint rule on a dense log grid
    const int N = 200000;
    double acc = 0.0;
    const double lo = -30.0, hi = 0.0;
    for (int i = 0; i < N; ++i) {
        const double lg = lo + (hi - lo) * (i + 0.5) / N;
        const double t = std::pow(10.0, lg);
        acc += (curve.pl_at(t) - curve.bel_at(t)) * (hi - lo) / N;
    }
    CHECK(m.area == Catch::Approx(acc).margin(2e-2));
    CHECK(m.area_normalized == Catch::Approx(m.area / 30.0).epsilon(1e-12));
}

TEST_CASE("metrics input validation", "[evidence]") {
    std::mt19937_64 rng(1);
    const auto fes = synthetic_set(rng, 8, 0.0);
    const auto curve = bel_pl_curve(fes, 1.0, 1e-30);
    CHECK_THROWS_AS(curve_metrics(curve, 1e-31), ValidationError);
    CHECK_THROWS_AS(curve_metrics(curve, 2.0), ValidationError);
    CHECK_THROWS_AS(bel_pl_curve(fes, 1.0, 0.0), ValidationError);
    CHECK_THROWS_AS(bel_pl_curve(fes, 1.0, 1.0), ValidationError);
    FocalElementSet uncached;
    uncached.elements.push_back(FocalElement{});
    CHECK_THROWS_AS(bel_pl_curve(uncached, 1.0), InternalError);
    CHECK_THROWS_AS(bel_pl_curve(fes, 2.0), InternalError);  // hbr mismatch
}

TEST_CASE("cached bounds are independent of the job count", "[evidence]") {
    const auto cuts = even_cuts(2);
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<UVector> samples;
    for (int i = 0; i < 10; ++i)
        samples.push_back({-1.0 + 2.0 * unit(rng), -1.0 + 2.0 * unit(rng),
                           0.5 + unit(rng), 0.5 + unit(rng),
                           -0.1 + 0.2 * unit(rng)});
    auto a = build_focal_elements(cuts, samples);
    auto b = a;
    BoundsOptions opts;
    opts.interior_starts = 8;
    opts.refine_evals = 40;
    cache_poc_bounds(a, 1.0, 1e-6, opts, 1);
    cache_poc_bounds(b, 1.0, 1e-6, opts, 2);
    REQUIRE(a.elements.size() == b.elements.size());
    for (std::size_t i = 0; i < a.elements.size(); ++i) {
        REQUIRE(a.elements[i].poc.has_value() == b.elements[i].poc.has_value());
        if (a.elements[i].poc) {
            CHECK(a.elements[i].poc->lo == b.elements[i].poc->lo);
            CHECK(a.elements[i].poc->hi == b.elements[i].poc->hi);
        }
    }
    // And the curve built from either cache is identical.
    const auto ca = bel_pl_curve(a, 1.0);
    const auto cb = bel_pl_curve(b, 1.0);
    for (double t : {1e-20, 1e-10, 1e-4, 1e-2}) {
        CHECK(ca.bel_at(t) == cb.bel_at(t));
        CHECK(ca.pl_at(t) == cb.pl_at(t));
    }
}
