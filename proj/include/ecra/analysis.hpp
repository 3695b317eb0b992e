#pragma once

// End-to-end pipeline: weight law, per-component p-boxes, focal elements,
// Bel/Pl curve and classification for one CDM prefix; rolling analysis over a
// whole sequence; decision-time batches with tier counts; tuning sweeps over
// the normalized-area threshold on labelled events.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ecra/cdm.hpp"
#include "ecra/classify.hpp"
#include "ecra/core.hpp"
#include "ecra/evidence.hpp"
#include "ecra/pbox.hpp"
#include "ecra/poc.hpp"
#include "ecra/synthetic.hpp"
#include "ecra/weighting.hpp"

namespace ecra {

// Reduced multi-start budget for per-element bounds inside the pipeline,
// where hundreds of elements are processed per prefix.  Direct callers of
// poc_bounds keep the wider default budget.
inline BoundsOptions pipeline_bounds() {
    BoundsOptions b;
    b.interior_starts = 4;
    b.refine_evals = 60;
    b.refine_all_starts = false;
    return b;
}

struct AnalysisOptions {
    Thresholds thresholds;
    int n_cuts = 2;
    double delta = 0.5;
    CnesConfig cnes;
    double rel_tol = 1e-5;              // PoC tolerance inside the pipeline
    BoundsOptions bounds = pipeline_bounds();
    int jobs = 1;                       // workers for per-element bounds
    std::uint64_t seed = 0;
};

inline void validate(const AnalysisOptions& o) {
    validate(o.thresholds);
    if (o.n_cuts < 1 || o.n_cuts > 15)
        throw ValidationError("analysis: n_cuts must be in [1, 15]");
    if (!(o.delta > 0.0) || !(o.delta < 1.0))
        throw ValidationError("analysis: delta must be in (0, 1)");
    if (!(o.rel_tol > 0.0) || o.rel_tol > 1e-2)
        throw ValidationError("analysis: rel_tol must be in (0, 1e-2]");
    if (o.jobs < 0) throw ValidationError("analysis: jobs must be nonnegative");
}

struct PrefixAnalysis {
    int k = 0;                          // CDMs in the prefix
    double t2tca_days = 0.0;            // epoch the classification was made at
    WeightLaw law;
    DkwBand band;
    std::array<PBox, 5> pboxes;
    int n_focal = 0;
    int n_nonempty = 0;
    double redistributed_mass = 0.0;
    double pl0_resolved = 0.0;
    BelPlCurve curve;
    CurveMetrics metrics;
    Classification cls;
    double last_poc = 0.0;              // reported if present, else computed
    BaselineDecision sdo;
    BaselineDecision cnes;
};

struct EventAnalysis {
    std::string event_id;
    std::vector<PrefixAnalysis> prefixes;  // k = 1 .. n in arrival order
};

// One prefix through the whole pipeline.  classify_t2tca is the epoch the
// decision is taken at: the prefix's own last epoch for rolling analysis, the
// decision time for batch columns.
inline PrefixAnalysis analyze_prefix(const EventSequence& seq,
                                     const AnalysisOptions& opts,
                                     double classify_t2tca) {
    validate(opts);
    if (seq.cdms.empty()) throw ValidationError("analyze_prefix: empty sequence");

    PrefixAnalysis out;
    out.k = static_cast<int>(seq.size());
    out.t2tca_days = classify_t2tca;

    const NormalizedSequence norm = normalize_sequence(seq);
    out.law = fit_weight_law(norm);
    const std::vector<double> weights = cdm_weights(seq, norm, out.law);

    std::vector<UVector> samples;
    samples.reserve(seq.size());
    for (const auto& c : seq.cdms) samples.push_back(to_uvector(c));

    out.band = dkw_band(seq.size(), opts.delta);
    std::array<IntervalSet, 5> cuts;
    for (int d = 0; d < 5; ++d) {
        std::vector<double> comp(seq.size());
        for (std::size_t i = 0; i < seq.size(); ++i) comp[i] = samples[i][d];
        const WeightedEcdf ecdf = weighted_ecdf(comp, weights);
        out.pboxes[static_cast<std::size_t>(d)] = fit_pbox(ecdf, out.band);
        cuts[static_cast<std::size_t>(d)] =
            alpha_cut_intervals(out.pboxes[static_cast<std::size_t>(d)], opts.n_cuts);
    }

    FocalElementSet fes = build_focal_elements(cuts, samples);
    out.n_focal = static_cast<int>(fes.elements.size());
    out.n_nonempty = fes.n_nonempty;
    out.redistributed_mass = fes.redistributed_mass;

    BoundsOptions bopts = opts.bounds;
    bopts.seed = opts.seed;
    cache_poc_bounds(fes, seq.hbr_m, opts.rel_tol, bopts, effective_jobs(opts.jobs));

    out.curve = bel_pl_curve(fes, seq.hbr_m, opts.thresholds.poc_floor);
    out.metrics = curve_metrics(out.curve, opts.thresholds.poc0);
    out.pl0_resolved = opts.thresholds.pl0_is_auto() ? default_pl0(fes)
                                                     : opts.thresholds.pl0;
    out.cls = classify(classify_t2tca, out.metrics, opts.thresholds, out.pl0_resolved);

    out.last_poc = last_poc_of(seq, opts.rel_tol);
    out.sdo = sdo_decide(out.last_poc, classify_t2tca, opts.thresholds);
    ConjunctionGeometry geom;
    geom.miss_distance_m = ecra::norm(seq.last().mu);
    out.cnes = cnes_baseline(seq.last(), opts.cnes, geom);
    return out;
}

namespace detail {

// Rethrow with a context prefix, preserving the error category that the CLI
// maps to exit codes.
template <typename Fn>
auto with_context(const std::string& ctx, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        throw ValidationError(ctx + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(ctx + ": " + e.what());
    } catch (const Error& e) {
        throw Error(ctx + ": " + e.what());
    }
}

}  // namespace detail

// Rolling analysis: every prefix k = 1..n, classified at its own last epoch.
inline EventAnalysis analyze_event(const EventSequence& seq,
                                   const AnalysisOptions& opts) {
    validate(opts);
    if (seq.cdms.empty()) throw ValidationError("analyze_event: empty sequence");
    EventAnalysis out;
    out.event_id = seq.event_id;
    out.prefixes.reserve(seq.size());
    for (std::size_t k = 1; k <= seq.size(); ++k) {
        const EventSequence p = prefix(seq, k);
        out.prefixes.push_back(detail::with_context(
            "event " + seq.event_id + " prefix " + std::to_string(k),
            [&] { return analyze_prefix(p, opts, p.last().t2tca_days); }));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Decision-time batches.

struct TierCounts {
    double a0 = 0.0;
    int cam = 0;                        // class 1
    int uncertain = 0;                  // classes 0 and 3
    std::array<int, 6> by_class{};
};

struct EventRow {
    std::string event_id;
    int k = 0;                          // CDMs available at the decision time
    std::vector<int> class_by_tier;     // parallel to BatchReport::a0_grid
    double pl_at_poc0 = 0.0;
    double area_normalized = 0.0;
    double last_poc = 0.0;
    std::string sdo_level;
    std::string cnes_level;
    std::string error;                  // nonempty when the analysis failed
};

struct DecisionColumn {
    double td_days = 0.0;
    int total = 0;                      // analysable events in this column
    int failed = 0;
    std::vector<TierCounts> tiers;      // one per a0 in the grid
    int sdo_cam = 0, sdo_escalated = 0, sdo_none = 0;
    int cnes_red = 0, cnes_orange = 0, cnes_caution = 0, cnes_none = 0;
    std::vector<EventRow> rows;         // eligible events, in input order
};

struct BatchReport {
    std::vector<double> decision_times;
    std::vector<double> a0_grid;
    std::vector<DecisionColumn> columns;
};

// Classification of every event at every decision time, using only CDMs with
// t2tca >= the decision time.  The area-threshold grid reclassifies the
// cached metrics without re-running the pipeline.  Per-event failures are
// counted and reported, never abort the batch.
inline BatchReport run_batch(const std::vector<EventSequence>& events,
                             const AnalysisOptions& opts,
                             std::vector<double> decision_times,
                             std::vector<double> a0_grid = {}) {
    validate(opts);
    if (decision_times.empty())
        throw ValidationError("run_batch: decision_times must be nonempty");
    for (std::size_t i = 0; i < decision_times.size(); ++i) {
        if (!(decision_times[i] >= 0.0) || !std::isfinite(decision_times[i]))
            throw ValidationError("run_batch: decision times must be finite and nonnegative");
        if (i > 0 && decision_times[i] > decision_times[i - 1])
            throw ValidationError("run_batch: decision times must be sorted descending");
    }
    if (a0_grid.empty()) a0_grid = {opts.thresholds.a0_normalized};
    for (double a : a0_grid)
        if (!(a >= 0.0) || !(a <= 1.0))
            throw ValidationError("run_batch: a0 grid values must be in [0, 1]");

    struct Cell {
        bool eligible = false;
        EventRow row;
    };
    const std::size_t ne = events.size(), nt = decision_times.size();
    std::vector<Cell> cells(ne * nt);

    AnalysisOptions per_event = opts;
    per_event.jobs = 1;  // parallelism is across events here
    parallel_for(ne, effective_jobs(opts.jobs), [&](std::size_t ei) {
        const EventSequence& seq = events[ei];
        for (std::size_t ti = 0; ti < nt; ++ti) {
            Cell& cell = cells[ei * nt + ti];
            const double td = decision_times[ti];
            auto pre = prefix_at_decision_time(seq, td);
            if (!pre) continue;
            cell.eligible = true;
            cell.row.event_id = seq.event_id;
            cell.row.k = static_cast<int>(pre->size());
            try {
                const PrefixAnalysis pa = analyze_prefix(*pre, per_event, td);
                cell.row.pl_at_poc0 = pa.metrics.pl_at_poc0;
                cell.row.area_normalized = pa.metrics.area_normalized;
                cell.row.last_poc = pa.last_poc;
                cell.row.sdo_level = pa.sdo.level;
                cell.row.cnes_level = pa.cnes.level;
                cell.row.class_by_tier.reserve(a0_grid.size());
                for (double a : a0_grid) {
                    Thresholds th = opts.thresholds;
                    th.a0_normalized = a;
                    cell.row.class_by_tier.push_back(
                        classify(td, pa.metrics, th, pa.pl0_resolved).class_id);
                }
            } catch (const Error& e) {
                cell.row.error = e.what();
            }
        }
    });

    BatchReport rep;
    rep.decision_times = decision_times;
    rep.a0_grid = a0_grid;
    rep.columns.reserve(nt);
    for (std::size_t ti = 0; ti < nt; ++ti) {
        DecisionColumn col;
        col.td_days = decision_times[ti];
        col.tiers.resize(a0_grid.size());
        for (std::size_t ai = 0; ai < a0_grid.size(); ++ai) col.tiers[ai].a0 = a0_grid[ai];
        for (std::size_t ei = 0; ei < ne; ++ei) {
            const Cell& cell = cells[ei * nt + ti];
            if (!cell.eligible) continue;
            col.rows.push_back(cell.row);
            if (!cell.row.error.empty()) {
                ++col.failed;
                continue;
            }
            ++col.total;
            for (std::size_t ai = 0; ai < a0_grid.size(); ++ai) {
                const int c = cell.row.class_by_tier[ai];
                ++col.tiers[ai].by_class[static_cast<std::size_t>(c)];
                if (c == 1) ++col.tiers[ai].cam;
                if (c == 0 || c == 3) ++col.tiers[ai].uncertain;
            }
            if (cell.row.sdo_level == "cam") ++col.sdo_cam;
            else if (cell.row.sdo_level == "escalated") ++col.sdo_escalated;
            else ++col.sdo_none;
            if (cell.row.cnes_level == "red") ++col.cnes_red;
            else if (cell.row.cnes_level == "orange") ++col.cnes_orange;
            else if (cell.row.cnes_level == "caution") ++col.cnes_caution;
            else ++col.cnes_none;
        }
        rep.columns.push_back(std::move(col));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Tuning sweep on labelled events.

struct TuneRow {
    double a0 = 0.0;
    int tp = 0, fp = 0, fn = 0, tn = 0;
    int uncertain = 0;
};

struct TuneTable {
    std::vector<TuneRow> rows;
    int total = 0;
    int failed = 0;
};

// Confusion counts per area threshold.  Each event is analysed once on its
// full sequence and classified at its last epoch; a CAM recommendation
// (class 1) is the positive prediction, classes 0 and 3 stay uncertain and
// enter neither rate.
inline TuneTable tune_sweep(const std::vector<SyntheticEvent>& events,
                            const AnalysisOptions& opts,
                            const std::vector<double>& a0_grid) {
    validate(opts);
    if (a0_grid.empty()) throw ValidationError("tune_sweep: empty a0 grid");
    for (double a : a0_grid)
        if (!(a >= 0.0) || !(a <= 1.0))
            throw ValidationError("tune_sweep: a0 grid values must be in [0, 1]");

    struct Cell {
        bool ok = false;
        double t2tca = 0.0;
        CurveMetrics metrics;
        double pl0 = 0.0;
    };
    std::vector<Cell> cells(events.size());
    AnalysisOptions per_event = opts;
    per_event.jobs = 1;
    parallel_for(events.size(), effective_jobs(opts.jobs), [&](std::size_t i) {
        try {
            const EventSequence& seq = events[i].seq;
            const PrefixAnalysis pa =
                analyze_prefix(seq, per_event, seq.last().t2tca_days);
            cells[i] = {true, seq.last().t2tca_days, pa.metrics, pa.pl0_resolved};
        } catch (const Error&) {
            // counted below
        }
    });

    TuneTable table;
    table.total = static_cast<int>(events.size());
    for (const auto& c : cells)
        if (!c.ok) ++table.failed;
    for (double a : a0_grid) {
        TuneRow row;
        row.a0 = a;
        Thresholds th = opts.thresholds;
        th.a0_normalized = a;
        for (std::size_t i = 0; i < events.size(); ++i) {
            if (!cells[i].ok) continue;
            const int c = classify(cells[i].t2tca, cells[i].metrics, th, cells[i].pl0).class_id;
            if (c == 0 || c == 3) {
                ++row.uncertain;
            } else if (c == 1) {
                (events[i].positive ? row.tp : row.fp)++;
            } else {
                (events[i].positive ? row.fn : row.tn)++;
            }
        }
        table.rows.push_back(row);
    }
    return table;
}

}  // namespace ecra
