#pragma once

// Report writers.  Every JSON report embeds the resolved run configuration;
// CSV numbers use the shortest round-trip decimal form so reruns with the
// same inputs produce byte-identical files.

#include <algorithm>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecra/analysis.hpp"
#include "ecra/core.hpp"

namespace ecra {

inline nlohmann::json config_json(const AnalysisOptions& o) {
    const Thresholds& th = o.thresholds;
    return nlohmann::json{
        {"thresholds",
         {{"t1_days", th.t1_days},
          {"t2_days", th.t2_days},
          {"poc0", th.poc0},
          {"pl0", th.pl0_is_auto() ? nlohmann::json("auto") : nlohmann::json(th.pl0)},
          {"a0_normalized", th.a0_normalized},
          {"poc_floor", th.poc_floor}}},
        {"n_cuts", o.n_cuts},
        {"delta", o.delta},
        {"rel_tol", o.rel_tol},
        {"bounds",
         {{"interior_starts", o.bounds.interior_starts},
          {"refine_evals", o.bounds.refine_evals},
          {"refine_all_starts", o.bounds.refine_all_starts}}},
        {"cnes",
         {{"red_threshold", o.cnes.red_threshold},
          {"orange_threshold", o.cnes.orange_threshold},
          {"caution_miss_m", o.cnes.caution_miss_m},
          {"caution_radial_m", o.cnes.caution_radial_m},
          {"spoc",
           {{"kp", {o.cnes.spoc.kp.lo, o.cnes.spoc.kp.hi}},
            {"ks", {o.cnes.spoc.ks.lo, o.cnes.spoc.ks.hi}},
            {"grid_resolution", o.cnes.spoc.grid_resolution},
            {"rel_tol", o.cnes.spoc.rel_tol}}}}},
        {"jobs", o.jobs},
        {"seed", o.seed}};
}

inline nlohmann::json pbox_summary_json(const PBox& pb) {
    return nlohmann::json{{"components", pb.upper.centers.size()},
                          {"support", {pb.support_lo, pb.support_hi}},
                          {"residual_upper", pb.residual_upper},
                          {"residual_lower", pb.residual_lower},
                          {"crossing", pb.crossing}};
}

inline nlohmann::json pbox_full_json(const PBox& pb) {
    auto fit = [](const MixtureCdf& m) {
        return nlohmann::json{{"centers", m.centers},
                              {"weights", m.weights},
                              {"sigmas", m.sigmas}};
    };
    nlohmann::json j = pbox_summary_json(pb);
    j["upper"] = fit(pb.upper);
    j["lower"] = fit(pb.lower);
    return j;
}

inline nlohmann::json prefix_json(const PrefixAnalysis& p, bool full_pboxes = false) {
    static const char* kUNames[5] = {"mu_xi", "mu_zeta", "sig2_xi", "sig2_zeta",
                                     "sig_xizeta"};
    nlohmann::json pb;
    for (int d = 0; d < 5; ++d)
        pb[kUNames[d]] = full_pboxes
                             ? pbox_full_json(p.pboxes[static_cast<std::size_t>(d)])
                             : pbox_summary_json(p.pboxes[static_cast<std::size_t>(d)]);
    return nlohmann::json{
        {"k", p.k},
        {"t2tca_days", p.t2tca_days},
        {"weight_law",
         {{"A", p.law.A},
          {"B", p.law.B},
          {"C", p.law.C},
          {"fallback", p.law.fallback},
          {"residual", p.law.residual}}},
        {"dkw", {{"n", p.band.n}, {"delta", p.band.delta}, {"epsilon", p.band.epsilon}}},
        {"pboxes", std::move(pb)},
        {"focal_elements",
         {{"total", p.n_focal},
          {"nonempty", p.n_nonempty},
          {"redistributed_mass", p.redistributed_mass}}},
        {"pl0_resolved", p.pl0_resolved},
        {"metrics",
         {{"bel_at_poc0", p.metrics.bel_at_poc0},
          {"pl_at_poc0", p.metrics.pl_at_poc0},
          {"area", p.metrics.area},
          {"area_normalized", p.metrics.area_normalized}}},
        {"classification", {{"class", p.cls.class_id}, {"rule_path", p.cls.rule_path}}},
        {"last_poc", p.last_poc},
        {"baselines",
         {{"sdo", {{"level", p.sdo.level}, {"poc", p.sdo.triggering_value}}},
          {"cnes",
           {{"level", p.cnes.level},
            {"spoc", p.cnes.triggering_value},
            {"combined_fallback", p.cnes.combined_fallback}}}}}};
}

inline nlohmann::json event_report_json(const EventAnalysis& ea,
                                        const AnalysisOptions& opts,
                                        bool full_pboxes = false) {
    nlohmann::json prefixes = nlohmann::json::array();
    for (const auto& p : ea.prefixes) prefixes.push_back(prefix_json(p, full_pboxes));
    return nlohmann::json{{"event_id", ea.event_id},
                          {"config", config_json(opts)},
                          {"prefixes", std::move(prefixes)}};
}

// Bel/Pl curve as threshold rows.  The step breakpoints plus both range ends
// reproduce the exact staircase.
inline void write_curve_csv(std::ostream& out, const BelPlCurve& c) {
    out << "poc_threshold,bel,pl\n";
    std::vector<double> ts = c.breakpoints();
    ts.insert(ts.begin(), c.poc_floor);
    ts.push_back(1.0);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    for (double t : ts)
        out << format_double(t) << ',' << format_double(c.bel_at(t)) << ','
            << format_double(c.pl_at(t)) << '\n';
}

inline void write_timeline_csv(std::ostream& out, const EventAnalysis& ea) {
    out << "t2tca_days,class,pl_at_poc0,area_normalized,last_poc\n";
    for (const auto& p : ea.prefixes)
        out << format_double(p.t2tca_days) << ',' << p.cls.class_id << ','
            << format_double(p.metrics.pl_at_poc0) << ','
            << format_double(p.metrics.area_normalized) << ','
            << format_double(p.last_poc) << '\n';
}

// One row per decision time and area-threshold tier.
inline void write_batch_csv(std::ostream& out, const BatchReport& rep) {
    out << "td_days,a0,total,failed,cam,uncertain,class0,class1,class2,class3,"
           "class4,class5,sdo_cam,sdo_escalated,sdo_none,cnes_red,cnes_orange,"
           "cnes_caution,cnes_none\n";
    for (const auto& col : rep.columns) {
        for (const auto& tier : col.tiers) {
            out << format_double(col.td_days) << ',' << format_double(tier.a0) << ','
                << col.total << ',' << col.failed << ',' << tier.cam << ','
                << tier.uncertain;
            for (int c = 0; c < 6; ++c) out << ',' << tier.by_class[static_cast<std::size_t>(c)];
            out << ',' << col.sdo_cam << ',' << col.sdo_escalated << ',' << col.sdo_none
                << ',' << col.cnes_red << ',' << col.cnes_orange << ','
                << col.cnes_caution << ',' << col.cnes_none << '\n';
        }
    }
}

inline nlohmann::json batch_report_json(const BatchReport& rep,
                                        const AnalysisOptions& opts) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& col : rep.columns) {
        nlohmann::json tiers = nlohmann::json::array();
        for (const auto& tier : col.tiers)
            tiers.push_back(nlohmann::json{{"a0", tier.a0},
                                           {"cam", tier.cam},
                                           {"uncertain", tier.uncertain},
                                           {"by_class", tier.by_class}});
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : col.rows) {
            nlohmann::json row{{"event_id", r.event_id}, {"k", r.k}};
            if (r.error.empty()) {
                row["class_by_tier"] = r.class_by_tier;
                row["pl_at_poc0"] = r.pl_at_poc0;
                row["area_normalized"] = r.area_normalized;
                row["last_poc"] = r.last_poc;
                row["sdo"] = r.sdo_level;
                row["cnes"] = r.cnes_level;
            } else {
                row["error"] = r.error;
            }
            rows.push_back(std::move(row));
        }
        cols.push_back(nlohmann::json{
            {"td_days", col.td_days},
            {"total", col.total},
            {"failed", col.failed},
            {"tiers", std::move(tiers)},
            {"baselines",
             {{"sdo",
               {{"cam", col.sdo_cam},
                {"escalated", col.sdo_escalated},
                {"none", col.sdo_none}}},
              {"cnes",
               {{"red", col.cnes_red},
                {"orange", col.cnes_orange},
                {"caution", col.cnes_caution},
                {"none", col.cnes_none}}}}},
            {"rows", std::move(rows)}});
    }
    return nlohmann::json{{"config", config_json(opts)},
                          {"decision_times", rep.decision_times},
                          {"a0_grid", rep.a0_grid},
                          {"columns", std::move(cols)}};
}

inline void write_tune_csv(std::ostream& out, const TuneTable& table) {
    out << "a0,tp,fp,fn,tn,uncertain\n";
    for (const auto& r : table.rows)
        out << format_double(r.a0) << ',' << r.tp << ',' << r.fp << ',' << r.fn
            << ',' << r.tn << ',' << r.uncertain << '\n';
}

}  // namespace ecra
