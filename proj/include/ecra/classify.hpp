// Conjunction classes from horizon, plausibility and curve-area evidence,
// plus the two operational baselines used for comparison runs.
#pragma once

#include <optional>
#include <string>

#include "ecra/cdm.hpp"
#include "ecra/core.hpp"
#include "ecra/evidence.hpp"
#include "ecra/poc.hpp"

namespace ecra {

struct Thresholds {
    double t1_days = 3.0;        // manoeuvre horizon
    double t2_days = 5.0;        // attention horizon
    double poc0 = 1e-4;          // PoC level defining the proposition
    double pl0 = 0.0;            // plausibility floor; 0 = resolve per structure
    double a0_normalized = 0.1;  // normalised area separating confident/uncertain
    double poc_floor = 1e-30;

    bool pl0_is_auto() const { return pl0 <= 0.0; }
};

inline void validate(const Thresholds& th) {
    if (!(th.t1_days >= 0.0) || !(th.t2_days >= th.t1_days))
        throw ValidationError("thresholds: need 0 <= t1 <= t2");
    if (!(th.poc0 > 0.0) || th.poc0 > 1.0)
        throw ValidationError("thresholds: poc0 must be in (0, 1]");
    if (!(th.poc_floor > 0.0) || th.poc_floor > th.poc0)
        throw ValidationError("thresholds: need 0 < poc_floor <= poc0");
    if (th.pl0 > 1.0) throw ValidationError("thresholds: pl0 must be <= 1");
    if (!(th.a0_normalized >= 0.0))
        throw ValidationError("thresholds: a0 must be >= 0");
}

// The six classes.  CAM = collision avoidance manoeuvre.
//   0 near horizon, plausible, curves too far apart: uncertain, escalate
//   1 near horizon, plausible, curves agree: act (CAM)
//   2 mid horizon, plausible, curves agree: prepare
//   3 far horizon, or mid horizon with disagreeing curves: keep watching
//   4 mid horizon, not plausible: likely dismissible
//   5 near horizon, not plausible: dismiss
struct Classification {
    int class_id = 3;
    std::string rule_path;
};

// Decision rule over (time horizon, Pl at poc0, normalised area).  Horizon
// comparisons are inclusive (<=); evidence comparisons are strict (<), so an
// exact hit of pl0 escalates and an exact hit of a0 counts as uncertain.
inline Classification classify(double t2tca_days, const CurveMetrics& m,
                               const Thresholds& th, double pl0_resolved) {
    validate(th);
    if (!(t2tca_days >= 0.0))
        throw ValidationError("classify: t2tca must be >= 0");
    const double pl = m.pl_at_poc0;
    const double area = m.area_normalized;
    if (t2tca_days > th.t2_days)
        return {3, "t2tca>T2"};
    if (t2tca_days > th.t1_days) {
        if (pl < pl0_resolved) return {4, "T1<t2tca<=T2, Pl<Pl0"};
        if (area < th.a0_normalized) return {2, "T1<t2tca<=T2, Pl>=Pl0, A*<A0*"};
        return {3, "T1<t2tca<=T2, Pl>=Pl0, A*>=A0*"};
    }
    if (pl < pl0_resolved) return {5, "t2tca<=T1, Pl<Pl0"};
    if (area < th.a0_normalized) return {1, "t2tca<=T1, Pl>=Pl0, A*<A0*"};
    return {0, "t2tca<=T1, Pl>=Pl0, A*>=A0*"};
}

// ---------------------------------------------------------------------------
// Baselines.

struct BaselineDecision {
    std::string scheme;           // "sdo" or "cnes"
    std::string level;            // scheme-specific label
    double triggering_value = 0.0;
    bool combined_fallback = false;  // cnes only: single-scale fallback used
};

// PoC of the most recent message: the reported value when present, the
// computed one otherwise.
inline double last_poc_of(const EventSequence& seq, double rel_tol = 1e-6) {
    if (seq.cdms.empty()) throw ValidationError("last_poc_of: empty event");
    const CdmRecord& last = seq.last();
    return last.reported_poc ? *last.reported_poc : poc(last, rel_tol);
}

// Last-message PoC against a single threshold: manoeuvre when inside the
// reaction horizon, escalate to more frequent screening outside it.
inline BaselineDecision sdo_decide(double last_poc, double t2tca_days,
                                   const Thresholds& th) {
    BaselineDecision d;
    d.scheme = "sdo";
    d.triggering_value = last_poc;
    if (last_poc >= th.poc0)
        d.level = t2tca_days <= th.t1_days ? "cam" : "escalated";
    else
        d.level = "none";
    return d;
}

inline BaselineDecision sdo_baseline(const EventSequence& seq, const Thresholds& th,
                                     double rel_tol = 1e-6) {
    if (seq.cdms.empty()) throw ValidationError("sdo_baseline: empty event");
    return sdo_decide(last_poc_of(seq, rel_tol), seq.last().t2tca_days, th);
}

struct CnesConfig {
    SpocConfig spoc;
    double red_threshold = 5e-4;
    double orange_threshold = 1e-4;
    double caution_miss_m = 1000.0;
    double caution_radial_m = 200.0;
};

struct ConjunctionGeometry {
    double miss_distance_m = 0.0;
    std::optional<double> radial_distance_m;  // unavailable from plane data alone
};

// Scaled-PoC levels with a geometric caution net.  Separate object
// covariances are used when the record carries them; otherwise one factor
// scales the combined covariance and the decision is flagged.
inline BaselineDecision cnes_baseline(const CdmRecord& last, const CnesConfig& cfg,
                                      const ConjunctionGeometry& geom) {
    validate(last, "cnes_baseline");
    SpocResult s;
    if (last.cov_primary && last.cov_secondary)
        s = spoc(*last.cov_primary, *last.cov_secondary, last.mu, last.hbr_m,
                 cfg.spoc);
    else
        s = spoc_combined(last.cov, last.mu, last.hbr_m, cfg.spoc);
    BaselineDecision d;
    d.scheme = "cnes";
    d.triggering_value = s.value;
    d.combined_fallback = s.combined_fallback;
    if (s.value > cfg.red_threshold) {
        d.level = "red";
    } else if (s.value > cfg.orange_threshold) {
        d.level = "orange";
    } else if (geom.miss_distance_m < cfg.caution_miss_m ||
               (geom.radial_distance_m &&
                *geom.radial_distance_m < cfg.caution_radial_m)) {
        d.level = "caution";
    } else {
        d.level = "none";
    }
    return d;
}

}  // namespace ecra
