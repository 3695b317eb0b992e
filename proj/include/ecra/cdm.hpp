// Conjunction data message records: the per-screening state estimate in the
// encounter plane, grouping into per-event sequences, and the projection from
// a 3D relative state.
#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ecra/core.hpp"

namespace ecra {

// One CDM reduced to the encounter-plane quantities the assessment needs.
// Covariance is the combined (primary + secondary) position covariance
// projected onto the plane normal to the relative velocity.  Units: days,
// metres, square metres.
struct CdmRecord {
    double t2tca_days = 0.0;
    Vec2 mu;                 // relative position in the encounter plane
    Cov2 cov;                // combined covariance
    double hbr_m = 1.0;      // hard-body radius
    std::optional<double> reported_poc;  // PoC carried by the message itself
    // Separate object covariances, when the source provides them (JSON only).
    std::optional<Cov2> cov_primary;
    std::optional<Cov2> cov_secondary;
};

// The five uncertain scalars of one CDM, in fixed order:
// [mu_xi, mu_zeta, var_xi, var_zeta, cov_xizeta].
using UVector = std::array<double, 5>;

inline UVector to_uvector(const CdmRecord& c) {
    return {c.mu.xi, c.mu.zeta, c.cov.sxx, c.cov.szz, c.cov.sxz};
}

// Validate a single record.  `where` names the event/row for diagnostics.
inline void validate(const CdmRecord& c, const std::string& where = "") {
    auto fail = [&](const std::string& what) {
        throw ValidationError(where.empty() ? what : where + ": " + what);
    };
    for (double v : {c.t2tca_days, c.mu.xi, c.mu.zeta, c.cov.sxx, c.cov.szz,
                     c.cov.sxz, c.hbr_m})
        if (!is_finite(v)) fail("non-finite field");
    if (c.t2tca_days < 0.0) fail("t2tca_days must be >= 0");
    if (c.hbr_m <= 0.0) fail("hbr_m must be > 0");
    if (c.cov.sxx <= 0.0 || c.cov.szz <= 0.0) fail("variances must be > 0");
    if (sq(c.cov.sxz) > c.cov.sxx * c.cov.szz)
        fail("covariance is not positive semi-definite");
    if (c.reported_poc &&
        (!is_finite(*c.reported_poc) || *c.reported_poc < 0.0 || *c.reported_poc > 1.0))
        fail("reported_poc must be in [0, 1]");
}

// All CDMs received for one conjunction event, ordered by decreasing time to
// closest approach (earliest message first).
struct EventSequence {
    std::string event_id;
    double hbr_m = 1.0;
    std::vector<CdmRecord> cdms;

    std::size_t size() const { return cdms.size(); }
    const CdmRecord& last() const { return cdms.back(); }
};

using WarnFn = std::function<void(const std::string&)>;

// Assemble a sequence from unordered records: sorts by decreasing t2tca,
// collapses exact-duplicate epochs (last one read wins, with a warning), and
// enforces the shared hard-body radius.
inline EventSequence make_event_sequence(std::string event_id,
                                         std::vector<CdmRecord> cdms,
                                         const WarnFn& warn = {}) {
    if (cdms.empty())
        throw ValidationError("event " + event_id + ": no CDMs");
    for (std::size_t i = 0; i < cdms.size(); ++i)
        validate(cdms[i], "event " + event_id + ", cdm " + std::to_string(i));
    std::stable_sort(cdms.begin(), cdms.end(),
                     [](const CdmRecord& a, const CdmRecord& b) {
                         return a.t2tca_days > b.t2tca_days;
                     });
    std::vector<CdmRecord> dedup;
    dedup.reserve(cdms.size());
    for (auto& c : cdms) {
        if (!dedup.empty() && dedup.back().t2tca_days == c.t2tca_days) {
            if (warn)
                warn("event " + event_id + ": duplicate t2tca " +
                     std::to_string(c.t2tca_days) + " days, keeping last record");
            dedup.back() = c;
        } else {
            dedup.push_back(c);
        }
    }
    const double hbr = dedup.front().hbr_m;
    for (const auto& c : dedup)
        if (c.hbr_m != hbr)
            throw ValidationError("event " + event_id +
                                  ": hard-body radius differs between CDMs");
    EventSequence seq;
    seq.event_id = std::move(event_id);
    seq.hbr_m = hbr;
    seq.cdms = std::move(dedup);
    return seq;
}

// First k records (k >= 1), i.e. what was known k messages in.
inline EventSequence prefix(const EventSequence& seq, std::size_t k) {
    if (k < 1 || k > seq.cdms.size())
        throw ValidationError("prefix length out of range");
    EventSequence p;
    p.event_id = seq.event_id;
    p.hbr_m = seq.hbr_m;
    p.cdms.assign(seq.cdms.begin(), seq.cdms.begin() + k);
    return p;
}

// Records available at decision time td (t2tca >= td).  Empty result means
// the event is not analysable at that decision time.
inline std::optional<EventSequence> prefix_at_decision_time(
    const EventSequence& seq, double td_days) {
    EventSequence p;
    p.event_id = seq.event_id;
    p.hbr_m = seq.hbr_m;
    for (const auto& c : seq.cdms)
        if (c.t2tca_days >= td_days) p.cdms.push_back(c);
    if (p.cdms.empty()) return std::nullopt;
    return p;
}

// ---------------------------------------------------------------------------
// 3D relative state and its reduction to the encounter plane.

struct RelativeState3D {
    std::array<double, 3> r{};                  // relative position, m
    std::array<double, 3> v{};                  // relative velocity, m/s
    std::array<std::array<double, 3>, 3> cov{}; // combined position covariance
};

namespace detail {

inline std::array<double, 3> cross(const std::array<double, 3>& a,
                                   const std::array<double, 3>& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0]};
}

inline double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm3(const std::array<double, 3>& a) { return std::sqrt(dot3(a, a)); }

}  // namespace detail

struct ImpactPlaneProjection {
    Vec2 mu;
    Cov2 cov;
};

// Project the relative state onto the plane normal to the relative velocity.
// The in-plane basis is built deterministically: the xi axis is the direction
// of v x w (w = the world axis least aligned with v), zeta completes the
// right-handed triad.  Any orthonormal basis of the plane gives the same PoC;
// this choice just fixes the coordinates.
inline ImpactPlaneProjection project_to_impact_plane(const RelativeState3D& st) {
    using namespace detail;
    const double speed = norm3(st.v);
    if (!(speed > 0.0) || !std::isfinite(speed))
        throw ValidationError("relative speed must be positive and finite");
    std::array<double, 3> vhat{st.v[0] / speed, st.v[1] / speed, st.v[2] / speed};
    for (double c : st.r) {
        if (!std::isfinite(c)) throw ValidationError("non-finite relative position");
    }
    for (const auto& row : st.cov)
        for (double c : row)
            if (!std::isfinite(c)) throw ValidationError("non-finite covariance");
    // symmetry check
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (std::abs(st.cov[i][j] - st.cov[j][i]) >
                1e-9 * (1.0 + std::abs(st.cov[i][j])))
                throw ValidationError("covariance matrix is not symmetric");

    std::array<double, 3> w{0.0, 0.0, 0.0};
    const double ax = std::abs(vhat[0]), ay = std::abs(vhat[1]), az = std::abs(vhat[2]);
    if (ax <= ay && ax <= az)
        w[0] = 1.0;
    else if (ay <= az)
        w[1] = 1.0;
    else
        w[2] = 1.0;
    auto e1 = cross(vhat, w);
    const double n1 = norm3(e1);
    e1 = {e1[0] / n1, e1[1] / n1, e1[2] / n1};
    const auto e2 = cross(vhat, e1);  // unit by construction

    ImpactPlaneProjection out;
    out.mu.xi = dot3(e1, st.r);
    out.mu.zeta = dot3(e2, st.r);
    auto quad = [&](const std::array<double, 3>& a, const std::array<double, 3>& b) {
        double s = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) s += a[i] * st.cov[i][j] * b[j];
        return s;
    };
    out.cov.sxx = quad(e1, e1);
    out.cov.szz = quad(e2, e2);
    out.cov.sxz = quad(e1, e2);
    return out;
}

// Combined covariance of two independently tracked objects.
inline Cov2 combine_covariances(const Cov2& primary, const Cov2& secondary) {
    return primary + secondary;
}

}  // namespace ecra
