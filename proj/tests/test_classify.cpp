#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ecra/classify.hpp"

using namespace ecra;

namespace {

CurveMetrics metrics(double pl, double area_norm) {
    CurveMetrics m;
    m.pl_at_poc0 = pl;
    m.bel_at_poc0 = 0.0;
    m.area_normalized = area_norm;
    m.area = area_norm * 30.0;
    return m;
}

CdmRecord rec(double t, double mx, double mz, const Cov2& cov, double hbr) {
    CdmRecord c;
    c.t2tca_days = t;
    c.mu = {mx, mz};
    c.cov = cov;
    c.hbr_m = hbr;
    return c;
}

}  // namespace

TEST_CASE("every horizon/evidence combination lands in its class", "[classify]") {
    Thresholds th;  // T1=3, T2=5, a0=0.1
    const double pl0 = 0.05;
    struct Case {
        double t, pl, area;
        int expect;
    };
    // three horizons x (low pl, high pl x low/high area)
    const Case cases[] = {
        {6.0, 0.01, 0.01, 3}, {6.0, 0.50, 0.01, 3}, {6.0, 0.50, 0.50, 3},
        {6.0, 0.01, 0.50, 3},
        {4.0, 0.01, 0.01, 4}, {4.0, 0.01, 0.50, 4},
        {4.0, 0.50, 0.01, 2}, {4.0, 0.50, 0.50, 3},
        {1.0, 0.01, 0.01, 5}, {1.0, 0.01, 0.50, 5},
        {1.0, 0.50, 0.01, 1}, {1.0, 0.50, 0.50, 0},
    };
    for (const auto& c : cases) {
        const auto r = classify(c.t, metrics(c.pl, c.area), th, pl0);
        INFO("t=" << c.t << " pl=" << c.pl << " area=" << c.area
                  << " path=" << r.rule_path);
        CHECK(r.class_id == c.expect);
        CHECK_FALSE(r.rule_path.empty());
    }
}

TEST_CASE("horizon edges are inclusive, evidence edges are strict", "[classify]") {
    Thresholds th;
    const double pl0 = 0.05;
    // exactly at T2: still the mid band
    CHECK(classify(5.0, metrics(0.5, 0.01), th, pl0).class_id == 2);
    // just above T2
    CHECK(classify(5.0 + 1e-12, metrics(0.5, 0.01), th, pl0).class_id == 3);
    // exactly at T1: near band
    CHECK(classify(3.0, metrics(0.5, 0.01), th, pl0).class_id == 1);
    CHECK(classify(3.0 + 1e-12, metrics(0.5, 0.01), th, pl0).class_id == 2);
    // pl exactly at pl0 counts as plausible (strict <)
    CHECK(classify(1.0, metrics(pl0, 0.01), th, pl0).class_id == 1);
    CHECK(classify(1.0, metrics(std::nextafter(pl0, 0.0), 0.01), th, pl0).class_id == 5);
    // area exactly at a0 counts as uncertain (strict <)
    CHECK(classify(1.0, metrics(0.5, th.a0_normalized), th, pl0).class_id == 0);
    CHECK(classify(1.0, metrics(0.5, std::nextafter(th.a0_normalized, 0.0)), th, pl0)
              .class_id == 1);
    // t2tca of exactly zero is the closest admissible horizon
    CHECK(classify(0.0, metrics(0.5, 0.01), th, pl0).class_id == 1);
}

TEST_CASE("raising the plausibility floor never lowers the alarm", "[classify]") {
    // With everything else fixed, a higher pl0 can only move a prefix from
    // the plausible branch to the dismissible one.
    Thresholds th;
    const auto m = metrics(0.3, 0.05);
    const int at_low = classify(1.0, m, th, 0.1).class_id;
    const int at_high = classify(1.0, m, th, 0.5).class_id;
    CHECK(at_low == 1);
    CHECK(at_high == 5);
}

TEST_CASE("threshold validation", "[classify]") {
    Thresholds th;
    th.t1_days = 6.0;  // t1 > t2
    CHECK_THROWS_AS(classify(1.0, metrics(0.5, 0.1), th, 0.1), ValidationError);
    Thresholds th2;
    th2.poc0 = 0.0;
    CHECK_THROWS_AS(classify(1.0, metrics(0.5, 0.1), th2, 0.1), ValidationError);
    Thresholds th3;
    th3.poc_floor = 1e-3;  // above poc0
    CHECK_THROWS_AS(classify(1.0, metrics(0.5, 0.1), th3, 0.1), ValidationError);
    Thresholds ok;
    CHECK_THROWS_AS(classify(-1.0, metrics(0.5, 0.1), ok, 0.1), ValidationError);
    CHECK(ok.pl0_is_auto());
    ok.pl0 = 0.2;
    CHECK_FALSE(ok.pl0_is_auto());
}

TEST_CASE("last-message baseline levels", "[classify]") {
    Thresholds th;  // poc0 = 1e-4, T1 = 3
    // reported value above the threshold inside the reaction horizon
    std::vector<CdmRecord> cdms{rec(2.0, 50.0, 0.0, {100.0, 100.0, 0.0}, 5.0)};
    cdms[0].reported_poc = 2e-4;
    auto seq = make_event_sequence("A", cdms);
    auto d = sdo_baseline(seq, th);
    CHECK(d.scheme == "sdo");
    CHECK(d.level == "cam");
    CHECK(d.triggering_value == 2e-4);

    // same message but outside the reaction horizon
    cdms[0].t2tca_days = 4.0;
    d = sdo_baseline(make_event_sequence("B", cdms), th);
    CHECK(d.level == "escalated");

    // below the threshold: no action at any horizon
    cdms[0].reported_poc = 5e-5;
    cdms[0].t2tca_days = 2.0;
    d = sdo_baseline(make_event_sequence("C", cdms), th);
    CHECK(d.level == "none");

    // threshold is inclusive
    cdms[0].reported_poc = 1e-4;
    d = sdo_baseline(make_event_sequence("D", cdms), th);
    CHECK(d.level == "cam");
}

TEST_CASE("last-message baseline computes the value when not reported", "[classify]") {
    Thresholds th;
    // near head-on geometry: computed PoC is large
    std::vector<CdmRecord> cdms{rec(1.0, 5.0, 0.0, {100.0, 100.0, 0.0}, 10.0)};
    const auto seq = make_event_sequence("E", cdms);
    const double expected = poc(seq.last());
    REQUIRE(expected > th.poc0);
    const auto d = sdo_baseline(seq, th);
    CHECK(d.level == "cam");
    CHECK(d.triggering_value == Catch::Approx(expected).epsilon(1e-9));
    CHECK_THROWS_AS(last_poc_of(EventSequence{}), ValidationError);
}

TEST_CASE("scaled-level ladder with separate covariances", "[classify]") {
    CnesConfig cfg;
    ConjunctionGeometry far_geom;
    far_geom.miss_distance_m = 5000.0;

    // close approach, large scaled PoC: red
    auto close_rec = rec(1.0, 5.0, 0.0, {50.0, 50.0, 0.0}, 10.0);
    close_rec.cov_primary = Cov2{25.0, 25.0, 0.0};
    close_rec.cov_secondary = Cov2{25.0, 25.0, 0.0};
    auto d = cnes_baseline(close_rec, cfg, far_geom);
    CHECK(d.scheme == "cnes");
    CHECK(d.level == "red");
    CHECK_FALSE(d.combined_fallback);
    CHECK(d.triggering_value > cfg.red_threshold);

    // mid-range approach tuned into the orange band
    auto mid_rec = rec(1.0, 120.0, 0.0, {400.0, 400.0, 0.0}, 5.0);
    mid_rec.cov_primary = Cov2{200.0, 200.0, 0.0};
    mid_rec.cov_secondary = Cov2{200.0, 200.0, 0.0};
    d = cnes_baseline(mid_rec, cfg, far_geom);
    CHECK(d.triggering_value > cfg.orange_threshold);
    CHECK((d.level == "orange" || d.level == "red"));

    // tiny scaled PoC but a small miss distance: caution net
    auto far_rec = rec(1.0, 800.0, 0.0, {100.0, 100.0, 0.0}, 1.0);
    far_rec.cov_primary = Cov2{50.0, 50.0, 0.0};
    far_rec.cov_secondary = Cov2{50.0, 50.0, 0.0};
    ConjunctionGeometry near_geom;
    near_geom.miss_distance_m = 800.0;
    d = cnes_baseline(far_rec, cfg, near_geom);
    CHECK(d.level == "caution");

    // same but far away in every respect: nothing
    d = cnes_baseline(far_rec, cfg, far_geom);
    CHECK(d.level == "none");

    // radial trigger fires independently of the miss distance
    ConjunctionGeometry radial_geom;
    radial_geom.miss_distance_m = 5000.0;
    radial_geom.radial_distance_m = 150.0;
    d = cnes_baseline(far_rec, cfg, radial_geom);
    CHECK(d.level == "caution");
}

TEST_CASE("combined-covariance fallback is flagged", "[classify]") {
    CnesConfig cfg;
    ConjunctionGeometry geom;
    geom.miss_distance_m = 5000.0;
    const auto r = rec(1.0, 5.0, 0.0, {50.0, 50.0, 0.0}, 10.0);  // no split covs
    const auto d = cnes_baseline(r, cfg, geom);
    CHECK(d.combined_fallback);
    CHECK(d.level == "red");
}

TEST_CASE("ladder thresholds are strict", "[classify]") {
    // Reported-style construction: drive the scaled value exactly onto the
    // threshold is impractical, so check the comparison sense on the decide
    // logic through near-threshold geometry instead: a value just below
    // orange with a big miss distance yields none.
    CnesConfig cfg;
    cfg.orange_threshold = 1.0;  // unreachable: every PoC is <= 1
    cfg.red_threshold = 2.0;
    ConjunctionGeometry geom;
    geom.miss_distance_m = 5000.0;
    const auto r = rec(1.0, 5.0, 0.0, {50.0, 50.0, 0.0}, 10.0);
    const auto d = cnes_baseline(r, cfg, geom);
    CHECK(d.level == "none");
}
