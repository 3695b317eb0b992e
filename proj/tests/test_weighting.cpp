#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "ecra/weighting.hpp"

using namespace ecra;

namespace {

CdmRecord rec(double t, double sxx, double szz, double sxz) {
    CdmRecord c;
    c.t2tca_days = t;
    c.mu = {100.0, 50.0};
    c.cov = {sxx, szz, sxz};
    c.hbr_m = 10.0;
    return c;
}

// Sequence whose determinant follows y(t') = C e^{A t'} + B exactly, after
// normalisation by the value at t' = 1.
EventSequence law_sequence(double A, double B, double C, int n) {
    std::vector<CdmRecord> cdms;
    const double ymax = C * std::exp(A) + B;
    for (int i = 0; i < n; ++i) {
        const double tprime = static_cast<double>(i) / (n - 1);
        const double t2tca = 5.0 * (1.0 - tprime) + 0.5;  // decreasing epochs
        const double y = (C * std::exp(A * tprime) + B) / ymax;
        // diagonal covariance with determinant proportional to y
        const double det_target = 400.0 * y;
        cdms.push_back(rec(t2tca, std::sqrt(det_target), std::sqrt(det_target), 0.0));
    }
    return make_event_sequence("L", cdms);
}

}  // namespace

TEST_CASE("two-epoch normalisation maps onto the unit interval", "[weighting]") {
    // earliest epoch at t' = 0, latest at t' = 1; determinants scaled by the max
    std::vector<CdmRecord> cdms{rec(4.0, 20.0, 20.0, 0.0), rec(1.0, 10.0, 10.0, 0.0)};
    const auto seq = make_event_sequence("N", cdms);
    const auto norm = normalize_sequence(seq);
    REQUIRE(norm.points.size() == 2);
    CHECK(norm.points[0].tprime == 0.0);
    CHECK(norm.points[0].yprime == 1.0);
    CHECK(norm.points[1].tprime == 1.0);
    CHECK(norm.points[1].yprime == Catch::Approx(0.25).epsilon(1e-12));
    CHECK(norm.det_max == Catch::Approx(400.0).epsilon(1e-12));
}

TEST_CASE("single-epoch sequence sits at the latest end", "[weighting]") {
    std::vector<CdmRecord> cdms{rec(2.0, 10.0, 10.0, 0.0)};
    const auto norm = normalize_sequence(make_event_sequence("S", cdms));
    REQUIRE(norm.points.size() == 1);
    CHECK(norm.points[0].tprime == 1.0);
    CHECK(norm.points[0].yprime == 1.0);
}

TEST_CASE("exact exponential data is recovered", "[weighting]") {
    // y'(t') = (0.2 e^{1.5 t'} + 0.3) / (0.2 e^{1.5} + 0.3)
    const auto seq = law_sequence(1.5, 0.3, 0.2, 9);
    const auto norm = normalize_sequence(seq);
    const auto law = fit_weight_law(norm);
    CHECK_FALSE(law.fallback);
    const double scale = 0.2 * std::exp(1.5) + 0.3;
    CHECK(std::abs(law.A - 1.5) < 1e-4);
    CHECK(std::abs(law.B - 0.3 / scale) < 1e-4);
    CHECK(std::abs(law.C - 0.2 / scale) < 1e-4);
    CHECK(law.residual < 1e-12);
}

TEST_CASE("reference weights of the recovered law", "[weighting]") {
    // Law fixed by hand, no fitting: w(t') = 1 / (0.2 e^{1.5 t'} + 0.3).
    WeightLaw law;
    law.A = 1.5;
    law.B = 0.3;
    law.C = 0.2;
    CHECK(std::abs(1.0 / law.value(0.0) - 2.0) < 1e-12);
    CHECK(std::abs(1.0 / law.value(1.0) - 0.835884303113304) < 1e-12);
}

TEST_CASE("constant determinants give unit weights", "[weighting]") {
    std::vector<CdmRecord> cdms;
    for (int i = 0; i < 6; ++i) cdms.push_back(rec(5.0 - i * 0.7, 15.0, 12.0, 3.0));
    const auto seq = make_event_sequence("C", cdms);
    const auto norm = normalize_sequence(seq);
    const auto law = fit_weight_law(norm);
    CHECK(law.residual < 1e-18);
    CHECK(std::abs(law.value(0.0) - 1.0) < 1e-6);
    CHECK(std::abs(law.value(1.0) - 1.0) < 1e-6);
    for (double w : cdm_weights(seq, norm, law)) CHECK(std::abs(w - 1.0) < 1e-6);
}

TEST_CASE("short sequences fall back to uniform weights", "[weighting]") {
    std::vector<CdmRecord> cdms{rec(3.0, 30.0, 30.0, 0.0), rec(1.0, 10.0, 10.0, 0.0)};
    const auto seq = make_event_sequence("F", cdms);
    const auto norm = normalize_sequence(seq);
    const auto law = fit_weight_law(norm);
    CHECK(law.fallback);
    CHECK(law.A == 0.0);
    CHECK(law.B == 1.0);
    CHECK(law.C == 0.0);
    const auto w = cdm_weights(seq, norm, law);
    REQUIRE(w.size() == 2);
    CHECK(w[0] == 1.0);
    CHECK(w[1] == 1.0);
}

TEST_CASE("fit is deterministic across repeated calls", "[weighting]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<CdmRecord> cdms;
    for (int i = 0; i < 8; ++i) {
        const double s = 10.0 + 40.0 * unit(rng);
        cdms.push_back(rec(6.0 - 0.7 * i, s, s * (0.5 + unit(rng)), 0.3 * s * unit(rng)));
    }
    const auto seq = make_event_sequence("D", cdms);
    const auto norm = normalize_sequence(seq);
    const auto a = fit_weight_law(norm);
    const auto b = fit_weight_law(norm);
    CHECK(a.A == b.A);
    CHECK(a.B == b.B);
    CHECK(a.C == b.C);
    CHECK(a.residual == b.residual);
}

TEST_CASE("fit never loses to the best constant law", "[weighting]") {
    // With A = 0 the model contains every constant, so the fitted residual
    // can be at most the constant-fit residual.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<CdmRecord> cdms;
        for (int i = 0; i < 7; ++i) {
            const double s = 5.0 + 60.0 * unit(rng);
            cdms.push_back(rec(6.5 - 0.8 * i, s, s, 0.0));
        }
        const auto norm = normalize_sequence(make_event_sequence("R", cdms));
        double mean = 0.0;
        for (const auto& p : norm.points) mean += p.yprime;
        mean /= static_cast<double>(norm.points.size());
        double const_rss = 0.0;
        for (const auto& p : norm.points) const_rss += sq(p.yprime - mean);
        const auto law = fit_weight_law(norm);
        INFO("trial " << trial);
        CHECK(law.residual <= const_rss * (1.0 + 1e-9) + 1e-15);
    }
}

TEST_CASE("appending an epoch changes the fitted law", "[weighting]") {
    auto seq = law_sequence(1.5, 0.3, 0.2, 6);
    const auto law_before = fit_weight_law(normalize_sequence(seq));
    // one more record much later, with a determinant off the law
    std::vector<CdmRecord> cdms = seq.cdms;
    cdms.push_back(rec(0.1, 60.0, 60.0, 0.0));
    const auto seq2 = make_event_sequence("L", cdms);
    const auto law_after = fit_weight_law(normalize_sequence(seq2));
    CHECK(law_before.residual < law_after.residual);
}

TEST_CASE("weight evaluation guards", "[weighting]") {
    std::vector<CdmRecord> cdms{rec(3.0, 30.0, 30.0, 0.0), rec(1.0, 10.0, 10.0, 0.0)};
    const auto seq = make_event_sequence("G", cdms);
    const auto norm = normalize_sequence(seq);
    WeightLaw dead;
    dead.B = 0.0;
    dead.C = 0.0;
    CHECK_THROWS_AS(cdm_weights(seq, norm, dead), NumericalError);
    NormalizedSequence wrong = norm;
    wrong.points.pop_back();
    WeightLaw ok;
    CHECK_THROWS_AS(cdm_weights(seq, wrong, ok), ValidationError);
}
