#pragma once

// Event-file ingestion and serialization.  Three formats: the fixed-layout
// native CSV, native JSON (whose records may carry either impact-plane
// quantities or a 3-D relative state to be projected), and externally
// produced CSV adapted through a header-name column map.

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecra/cdm.hpp"
#include "ecra/core.hpp"

namespace ecra {

enum class EventFormat { native_csv, native_json, kelvins_csv };

inline EventFormat parse_format(const std::string& s) {
    if (s == "native-csv") return EventFormat::native_csv;
    if (s == "native-json") return EventFormat::native_json;
    if (s == "kelvins-csv") return EventFormat::kelvins_csv;
    throw ValidationError("unknown format '" + s +
                          "' (expected native-csv, native-json or kelvins-csv)");
}

// Canonical field name -> source column header.  A value starting with '='
// supplies a constant instead of a column, e.g. hbr_m for catalogs that do
// not carry a hard-body radius.
using ColumnMap = std::map<std::string, std::string>;

inline const std::vector<std::string>& canonical_columns() {
    static const std::vector<std::string> cols = {
        "event_id",     "t2tca_days",    "mu_xi_m",
        "mu_zeta_m",    "sig2_xi_m2",    "sig2_zeta_m2",
        "sig_xizeta_m2", "hbr_m",        "poc"};
    return cols;
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

inline double parse_double(const std::string& tok, std::size_t line_no,
                           const std::string& what) {
    const std::string t = trim(tok);
    double v = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw ParseError("bad numeric value '" + t + "' for " + what, line_no);
    return v;
}

// Groups rows into sequences preserving first-appearance order of events.
struct EventAccumulator {
    std::vector<std::string> order;
    std::map<std::string, std::vector<CdmRecord>> rows;

    void add(const std::string& id, const CdmRecord& rec) {
        auto [it, fresh] = rows.try_emplace(id);
        if (fresh) order.push_back(id);
        it->second.push_back(rec);
    }

    std::vector<EventSequence> finish(const WarnFn& warn) const {
        std::vector<EventSequence> out;
        out.reserve(order.size());
        for (const auto& id : order)
            out.push_back(make_event_sequence(id, rows.at(id), warn));
        return out;
    }
};

}  // namespace detail

inline ColumnMap parse_column_map_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open column map file: " + path);
    ColumnMap map;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("column map line is not key=value", line_no);
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string val = detail::trim(t.substr(eq + 1));
        bool known = false;
        for (const auto& c : canonical_columns()) known = known || c == key;
        if (!known)
            throw ParseError("unknown canonical column '" + key + "'", line_no);
        map[key] = val;
    }
    return map;
}

// ---------------------------------------------------------------------------
// Native CSV.  Fixed column order; the trailing poc column may be empty.

inline std::vector<EventSequence> parse_native_csv(std::istream& in,
                                                   const WarnFn& warn) {
    detail::EventAccumulator acc;
    std::string line;
    std::size_t line_no = 0;
    bool any_row = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto fields = detail::split_csv(t);
        if (line_no == 1 || !any_row) {
            // a header is recognised by its first cell
            if (!fields.empty() && fields[0] == "event_id") continue;
        }
        if (fields.size() != 8 && fields.size() != 9)
            throw ParseError("expected 8 or 9 columns, got " +
                                 std::to_string(fields.size()),
                             line_no);
        any_row = true;
        CdmRecord rec;
        const std::string& id = fields[0];
        if (id.empty()) throw ParseError("empty event_id", line_no);
        rec.t2tca_days = detail::parse_double(fields[1], line_no, "t2tca_days");
        rec.mu.xi = detail::parse_double(fields[2], line_no, "mu_xi_m");
        rec.mu.zeta = detail::parse_double(fields[3], line_no, "mu_zeta_m");
        rec.cov.sxx = detail::parse_double(fields[4], line_no, "sig2_xi_m2");
        rec.cov.szz = detail::parse_double(fields[5], line_no, "sig2_zeta_m2");
        rec.cov.sxz = detail::parse_double(fields[6], line_no, "sig_xizeta_m2");
        rec.hbr_m = detail::parse_double(fields[7], line_no, "hbr_m");
        if (fields.size() == 9 && !fields[8].empty())
            rec.reported_poc = detail::parse_double(fields[8], line_no, "poc");
        validate(rec, "event " + id + " (line " + std::to_string(line_no) + ")");
        acc.add(id, rec);
    }
    if (!any_row && warn) warn("input file contains no CDM rows");
    return acc.finish(warn);
}

inline void write_native_csv(std::ostream& out,
                             const std::vector<EventSequence>& events) {
    out << "event_id,t2tca_days,mu_xi_m,mu_zeta_m,sig2_xi_m2,sig2_zeta_m2,"
           "sig_xizeta_m2,hbr_m,poc\n";
    for (const auto& ev : events) {
        for (const auto& c : ev.cdms) {
            out << ev.event_id << ',' << format_double(c.t2tca_days) << ','
                << format_double(c.mu.xi) << ',' << format_double(c.mu.zeta) << ','
                << format_double(c.cov.sxx) << ',' << format_double(c.cov.szz) << ','
                << format_double(c.cov.sxz) << ',' << format_double(c.hbr_m) << ',';
            if (c.reported_poc) out << format_double(*c.reported_poc);
            out << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Native JSON.

namespace detail {

inline Cov2 cov_from_json(const nlohmann::json& a, const std::string& where) {
    if (!a.is_array() || a.size() != 3)
        throw ValidationError(where + ": covariance must be [sxx, szz, sxz]");
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

inline CdmRecord cdm_from_json(const nlohmann::json& j, double event_hbr,
                               const std::string& where) {
    CdmRecord rec;
    rec.t2tca_days = j.at("t2tca_days").get<double>();
    rec.hbr_m = j.value("hbr_m", event_hbr);
    if (j.contains("rel_position_m")) {
        RelativeState3D st;
        const auto& r = j.at("rel_position_m");
        const auto& v = j.at("rel_velocity_mps");
        const auto& c = j.at("cov_pos_m2");
        if (!r.is_array() || r.size() != 3 || !v.is_array() || v.size() != 3 ||
            !c.is_array() || c.size() != 3)
            throw ValidationError(where + ": 3-D state needs 3-vectors and a 3x3 covariance");
        for (int i = 0; i < 3; ++i) {
            st.r[static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i)].get<double>();
            st.v[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)].get<double>();
            const auto& row = c[static_cast<std::size_t>(i)];
            if (!row.is_array() || row.size() != 3)
                throw ValidationError(where + ": covariance rows must have 3 entries");
            for (int k = 0; k < 3; ++k)
                st.cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                    row[static_cast<std::size_t>(k)].get<double>();
        }
        const ImpactPlaneProjection pr = project_to_impact_plane(st);
        rec.mu = pr.mu;
        rec.cov = pr.cov;
    } else {
        rec.mu.xi = j.at("mu_xi_m").get<double>();
        rec.mu.zeta = j.at("mu_zeta_m").get<double>();
        rec.cov.sxx = j.at("sig2_xi_m2").get<double>();
        rec.cov.szz = j.at("sig2_zeta_m2").get<double>();
        rec.cov.sxz = j.at("sig_xizeta_m2").get<double>();
    }
    if (j.contains("poc")) rec.reported_poc = j.at("poc").get<double>();
    if (j.contains("cov_primary"))
        rec.cov_primary = cov_from_json(j.at("cov_primary"), where);
    if (j.contains("cov_secondary"))
        rec.cov_secondary = cov_from_json(j.at("cov_secondary"), where);
    validate(rec, where);
    return rec;
}

}  // namespace detail

inline std::vector<EventSequence> parse_native_json(std::istream& in,
                                                    const WarnFn& warn) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), 0);
    }
    try {
        if (!doc.is_object() || !doc.contains("events"))
            throw ValidationError("top level must be an object with an 'events' array");
        std::vector<EventSequence> out;
        for (const auto& ej : doc.at("events")) {
            const std::string id = ej.at("event_id").get<std::string>();
            const double event_hbr = ej.value("hbr_m", 0.0);
            std::vector<CdmRecord> cdms;
            std::size_t row = 0;
            for (const auto& cj : ej.at("cdms")) {
                ++row;
                cdms.push_back(detail::cdm_from_json(
                    cj, event_hbr,
                    "event " + id + " cdm " + std::to_string(row)));
            }
            out.push_back(make_event_sequence(id, cdms, warn));
        }
        if (out.empty() && warn) warn("input file contains no events");
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad event JSON: ") + e.what());
    }
}

inline void write_native_json(std::ostream& out,
                              const std::vector<EventSequence>& events) {
    nlohmann::json evs = nlohmann::json::array();
    for (const auto& ev : events) {
        nlohmann::json cdms = nlohmann::json::array();
        for (const auto& c : ev.cdms) {
            nlohmann::json j{{"t2tca_days", c.t2tca_days},
                             {"mu_xi_m", c.mu.xi},
                             {"mu_zeta_m", c.mu.zeta},
                             {"sig2_xi_m2", c.cov.sxx},
                             {"sig2_zeta_m2", c.cov.szz},
                             {"sig_xizeta_m2", c.cov.sxz}};
            if (c.reported_poc) j["poc"] = *c.reported_poc;
            if (c.cov_primary)
                j["cov_primary"] = {c.cov_primary->sxx, c.cov_primary->szz,
                                    c.cov_primary->sxz};
            if (c.cov_secondary)
                j["cov_secondary"] = {c.cov_secondary->sxx, c.cov_secondary->szz,
                                      c.cov_secondary->sxz};
            cdms.push_back(std::move(j));
        }
        evs.push_back(nlohmann::json{{"event_id", ev.event_id},
                                     {"hbr_m", ev.hbr_m},
                                     {"cdms", std::move(cdms)}});
    }
    out << nlohmann::json{{"events", std::move(evs)}}.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Header-mapped external CSV.  The first row must be a header; canonical
// fields resolve through the column map, then through their own names, then
// through a small set of conventional aliases.

inline std::vector<EventSequence> parse_mapped_csv(std::istream& in,
                                                   const ColumnMap& map,
                                                   const WarnFn& warn) {
    static const std::map<std::string, std::string> kAliases = {
        {"t2tca_days", "time_to_tca"}, {"poc", "risk"}};

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        if (warn) warn("input file is empty");
        return {};
    }
    ++line_no;
    const auto headers = detail::split_csv(detail::trim(line));
    auto column_of = [&](const std::string& canon) -> std::optional<std::size_t> {
        std::string want = canon;
        if (auto it = map.find(canon); it != map.end()) want = it->second;
        else if (auto al = kAliases.find(canon); al != kAliases.end()) {
            // prefer the canonical name when present, else the alias
            bool direct = false;
            for (const auto& h : headers) direct = direct || h == canon;
            if (!direct) want = al->second;
        }
        if (!want.empty() && want[0] == '=') return std::nullopt;  // literal
        for (std::size_t i = 0; i < headers.size(); ++i)
            if (headers[i] == want) return i;
        return std::nullopt;
    };
    auto literal_of = [&](const std::string& canon) -> std::optional<double> {
        auto it = map.find(canon);
        if (it == map.end() || it->second.empty() || it->second[0] != '=')
            return std::nullopt;
        return detail::parse_double(it->second.substr(1), 1, canon + " literal");
    };

    struct Field {
        std::optional<std::size_t> col;
        std::optional<double> lit;
    };
    std::map<std::string, Field> fields;
    for (const auto& canon : canonical_columns())
        fields[canon] = {column_of(canon), literal_of(canon)};
    for (const auto& canon : canonical_columns()) {
        if (canon == "poc") continue;  // optional
        const Field& f = fields[canon];
        if (!f.col && !f.lit)
            throw ValidationError("mapped CSV: no column or literal for '" + canon +
                                  "'; supply it via --column-map");
    }
    if (!fields["event_id"].col)
        throw ValidationError("mapped CSV: event_id must come from a column");

    auto get = [&](const std::vector<std::string>& row, const std::string& canon,
                   std::size_t ln) -> double {
        const Field& f = fields[canon];
        if (f.col) {
            if (*f.col >= row.size())
                throw ParseError("row too short for column '" + canon + "'", ln);
            return detail::parse_double(row[*f.col], ln, canon);
        }
        return *f.lit;
    };

    detail::EventAccumulator acc;
    bool any_row = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto row = detail::split_csv(t);
        const std::size_t idc = *fields["event_id"].col;
        if (idc >= row.size()) throw ParseError("row too short for event_id", line_no);
        const std::string id = row[idc];
        if (id.empty()) throw ParseError("empty event_id", line_no);
        any_row = true;
        CdmRecord rec;
        rec.t2tca_days = get(row, "t2tca_days", line_no);
        rec.mu.xi = get(row, "mu_xi_m", line_no);
        rec.mu.zeta = get(row, "mu_zeta_m", line_no);
        rec.cov.sxx = get(row, "sig2_xi_m2", line_no);
        rec.cov.szz = get(row, "sig2_zeta_m2", line_no);
        rec.cov.sxz = get(row, "sig_xizeta_m2", line_no);
        rec.hbr_m = get(row, "hbr_m", line_no);
        const Field& pf = fields["poc"];
        if (pf.col && *pf.col < row.size() && !row[*pf.col].empty())
            rec.reported_poc = detail::parse_double(row[*pf.col], line_no, "poc");
        else if (pf.lit)
            rec.reported_poc = *pf.lit;
        validate(rec, "event " + id + " (line " + std::to_string(line_no) + ")");
        acc.add(id, rec);
    }
    if (!any_row && warn) warn("input file contains no CDM rows");
    return acc.finish(warn);
}

// ---------------------------------------------------------------------------

inline std::vector<EventSequence> parse_event_file(const std::string& path,
                                                   EventFormat format,
                                                   const ColumnMap& map = {},
                                                   const WarnFn& warn = nullptr) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open input file: " + path);
    switch (format) {
        case EventFormat::native_csv: return parse_native_csv(in, warn);
        case EventFormat::native_json: return parse_native_json(in, warn);
        case EventFormat::kelvins_csv: return parse_mapped_csv(in, map, warn);
    }
    throw ValidationError("unreachable format");
}

// Ground-truth labels for synthetic datasets: event_id,true_poc,positive.
struct EventLabel {
    double true_poc = 0.0;
    bool positive = false;
};

inline std::map<std::string, EventLabel> parse_labels_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open labels file: " + path);
    std::map<std::string, EventLabel> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto f = detail::split_csv(t);
        if (!f.empty() && f[0] == "event_id") continue;
        if (f.size() != 3) throw ParseError("expected event_id,true_poc,positive", line_no);
        EventLabel lab;
        lab.true_poc = detail::parse_double(f[1], line_no, "true_poc");
        lab.positive = f[2] == "1" || f[2] == "true";
        out[f[0]] = lab;
    }
    return out;
}

}  // namespace ecra
