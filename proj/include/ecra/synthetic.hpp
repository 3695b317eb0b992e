#pragma once

// Seeded synthetic conjunction-event generator with ground-truth labels.
// Events carry a noiseless "true" configuration at TCA from which the label
// (true PoC >= poc0) is computed, plus optional inconsistency injectors:
// a 90-degree covariance rotation and a progressive mean drift, both starting
// at a random CDM index. All randomness flows from SyntheticSpec::seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "ecra/cdm.hpp"
#include "ecra/core.hpp"
#include "ecra/poc.hpp"

namespace ecra {

struct SyntheticSpec {
    int n_events = 200;
    std::uint64_t seed = 1;

    int cdms_min = 4;
    int cdms_max = 12;

    double hbr_min_m = 5.0;
    double hbr_max_m = 25.0;

    // Per-axis standard deviation of the final (latest-CDM) covariance,
    // drawn log-uniformly; correlation drawn uniformly in [-corr_max, corr_max].
    double sigma_min_m = 20.0;
    double sigma_max_m = 200.0;
    double corr_max = 0.8;

    // Fraction of events drawn with a small true miss distance, so the label
    // set contains both positives and negatives.
    double close_fraction = 0.45;

    // Covariance scale follows g(t') = B + C exp(A t') normalized to g(1) = 1,
    // with A drawn uniformly in [0, cov_growth_max]. Zero disables growth.
    double cov_growth_max = 2.0;

    // Relative jitter applied to covariance entries and, scaled by the current
    // sigma, to the observed mean. Zero gives noiseless CDMs.
    double perturbation = 0.25;

    // Injector probabilities per event.
    double rotation_rate = 0.15;
    double drift_rate = 0.20;

    // Fraction of events whose CDMs carry a reported PoC value.
    double reported_poc_rate = 0.35;

    // Epoch ranges in days.
    double t_first_min_days = 0.8;
    double t_first_max_days = 7.5;
    double t_last_min_days = 0.05;
    double t_last_max_days = 0.6;

    // Threshold used for the ground-truth label.
    double label_poc0 = 1e-4;
};

struct SyntheticEvent {
    EventSequence seq;
    double true_poc = 0.0;
    bool positive = false;
    // Index of the first affected CDM, -1 when the injector is inactive.
    int rotation_at = -1;
    int drift_at = -1;
};

namespace detail {

// SplitMix64, used only to derive independent per-event seeds so that event i
// does not depend on how many events precede it.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

} // namespace detail

inline void validate(const SyntheticSpec& s) {
    if (s.n_events < 0) throw ValidationError("synthetic: n_events must be nonnegative");
    if (s.cdms_min < 1 || s.cdms_max < s.cdms_min)
        throw ValidationError("synthetic: need 1 <= cdms_min <= cdms_max");
    if (!(s.hbr_min_m > 0.0) || s.hbr_max_m < s.hbr_min_m)
        throw ValidationError("synthetic: invalid hbr range");
    if (!(s.sigma_min_m > 0.0) || s.sigma_max_m < s.sigma_min_m)
        throw ValidationError("synthetic: invalid sigma range");
    if (s.corr_max < 0.0 || s.corr_max >= 1.0)
        throw ValidationError("synthetic: corr_max must be in [0, 1)");
    if (s.close_fraction < 0.0 || s.close_fraction > 1.0 ||
        s.rotation_rate < 0.0 || s.rotation_rate > 1.0 ||
        s.drift_rate < 0.0 || s.drift_rate > 1.0 ||
        s.reported_poc_rate < 0.0 || s.reported_poc_rate > 1.0)
        throw ValidationError("synthetic: rates must be in [0, 1]");
    if (s.cov_growth_max < 0.0 || s.perturbation < 0.0)
        throw ValidationError("synthetic: cov_growth_max and perturbation must be nonnegative");
    if (!(s.t_last_min_days > 0.0) || s.t_last_max_days < s.t_last_min_days ||
        s.t_first_min_days <= s.t_last_max_days || s.t_first_max_days < s.t_first_min_days)
        throw ValidationError("synthetic: need 0 < t_last range < t_first range");
    if (!(s.label_poc0 > 0.0) || s.label_poc0 > 1.0)
        throw ValidationError("synthetic: label_poc0 must be in (0, 1]");
}

inline SyntheticEvent generate_synthetic_event(const SyntheticSpec& spec, int index) {
    std::mt19937_64 rng(detail::splitmix64(spec.seed ^ detail::splitmix64(static_cast<std::uint64_t>(index) + 1)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const int n = spec.cdms_min +
        static_cast<int>(std::floor(unit(rng) * (spec.cdms_max - spec.cdms_min + 1.0)));
    const double hbr = spec.hbr_min_m + unit(rng) * (spec.hbr_max_m - spec.hbr_min_m);

    // Final-epoch covariance: log-uniform axis sigmas, uniform correlation.
    const double lsl = std::log(spec.sigma_min_m), lsh = std::log(spec.sigma_max_m);
    const double sig_xi = std::exp(lsl + unit(rng) * (lsh - lsl));
    const double sig_zeta = std::exp(lsl + unit(rng) * (lsh - lsl));
    const double rho = (2.0 * unit(rng) - 1.0) * spec.corr_max;
    const Cov2 cov_final{sig_xi * sig_xi, sig_zeta * sig_zeta, rho * sig_xi * sig_zeta};

    // True miss at TCA: a mix of close and far geometries.
    const double sig_ref = std::sqrt(0.5 * (cov_final.sxx + cov_final.szz));
    const bool close = unit(rng) < spec.close_fraction;
    const double dist = close ? unit(rng) * 1.5 * sig_ref
                              : (2.0 + 6.0 * unit(rng)) * sig_ref;
    const double ang = 2.0 * M_PI * unit(rng);
    const Vec2 mu_true{dist * std::cos(ang), dist * std::sin(ang)};

    // Epochs, strictly decreasing in days to TCA.
    const double t_first = spec.t_first_min_days + unit(rng) * (spec.t_first_max_days - spec.t_first_min_days);
    const double t_last = spec.t_last_min_days + unit(rng) * (spec.t_last_max_days - spec.t_last_min_days);
    std::vector<double> times(static_cast<std::size_t>(n));
    times.front() = t_first;
    times.back() = t_last;
    for (int i = 1; i + 1 < n; ++i) times[static_cast<std::size_t>(i)] = t_last + unit(rng) * (t_first - t_last);
    std::sort(times.begin(), times.end(), std::greater<double>());

    // Determinant growth law in normalized time (earliest -> 0, latest -> 1),
    // normalized so the final CDM carries scale exactly 1.
    const double ga = spec.cov_growth_max > 0.0 ? unit(rng) * spec.cov_growth_max : 0.0;
    const double gb = 0.2 + 0.8 * unit(rng);
    const double gc = spec.cov_growth_max > 0.0 ? 0.05 + 0.45 * unit(rng) : 0.0;
    auto scale_at = [&](double tprime) {
        if (gc == 0.0) return 1.0;
        return (gb + gc * std::exp(ga * tprime)) / (gb + gc * std::exp(ga));
    };

    const bool rotate = unit(rng) < spec.rotation_rate;
    const bool drift = unit(rng) < spec.drift_rate;
    int rotation_at = -1, drift_at = -1;
    if (rotate && n >= 2) rotation_at = 1 + static_cast<int>(std::floor(unit(rng) * (n - 1)));
    if (drift && n >= 2) drift_at = 1 + static_cast<int>(std::floor(unit(rng) * (n - 1)));
    const double drift_ang = 2.0 * M_PI * unit(rng);
    const double drift_mag = (0.5 + 1.5 * unit(rng)) * sig_ref;

    const bool with_reported = unit(rng) < spec.reported_poc_rate;

    std::vector<CdmRecord> cdms;
    cdms.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double tprime = (t_first == t_last)
            ? 1.0
            : (times[static_cast<std::size_t>(i)] - t_first) / (t_last - t_first);
        const double s = scale_at(tprime);

        Cov2 cov = s * cov_final;
        if (spec.perturbation > 0.0) {
            const double j1 = 1.0 + spec.perturbation * 0.5 * gauss(rng);
            const double j2 = 1.0 + spec.perturbation * 0.5 * gauss(rng);
            double r = (cov.sxz == 0.0 ? 0.0 : cov.sxz / std::sqrt(cov.sxx * cov.szz));
            r = std::clamp(r + spec.perturbation * 0.2 * gauss(rng), -0.95, 0.95);
            cov.sxx *= std::max(0.1, j1 * j1);
            cov.szz *= std::max(0.1, j2 * j2);
            cov.sxz = r * std::sqrt(cov.sxx * cov.szz);
        }
        if (rotation_at >= 0 && i >= rotation_at) {
            // Exact 90-degree rotation: axis variances swap, correlation flips
            // sign, the determinant is unchanged.
            cov = Cov2{cov.szz, cov.sxx, -cov.sxz};
        }

        Vec2 mu = mu_true;
        if (spec.perturbation > 0.0) {
            mu.xi += spec.perturbation * std::sqrt(cov.sxx) * gauss(rng);
            mu.zeta += spec.perturbation * std::sqrt(cov.szz) * gauss(rng);
        }
        if (drift_at >= 0 && i >= drift_at) {
            const double frac = (n - 1 == drift_at) ? 1.0
                : static_cast<double>(i - drift_at + 1) / static_cast<double>(n - 1 - drift_at + 1);
            mu.xi += frac * drift_mag * std::cos(drift_ang);
            mu.zeta += frac * drift_mag * std::sin(drift_ang);
        }

        CdmRecord rec;
        rec.t2tca_days = times[static_cast<std::size_t>(i)];
        rec.mu = mu;
        rec.cov = cov;
        rec.hbr_m = hbr;
        if (with_reported) {
            double p = poc(mu, cov, hbr, 1e-5);
            if (spec.perturbation > 0.0)
                p = std::clamp(p * std::exp(0.1 * spec.perturbation * gauss(rng)), 0.0, 1.0);
            rec.reported_poc = p;
        }
        cdms.push_back(rec);
    }

    SyntheticEvent ev;
    ev.seq = make_event_sequence("S" + std::to_string(index), cdms, nullptr);
    ev.true_poc = poc(mu_true, cov_final, hbr, 1e-6);
    ev.positive = ev.true_poc >= spec.label_poc0;
    ev.rotation_at = rotation_at;
    ev.drift_at = drift_at;
    return ev;
}

inline std::vector<SyntheticEvent> generate_synthetic(const SyntheticSpec& spec) {
    validate(spec);
    std::vector<SyntheticEvent> out;
    out.reserve(static_cast<std::size_t>(spec.n_events));
    for (int i = 0; i < spec.n_events; ++i) out.push_back(generate_synthetic_event(spec, i));
    return out;
}

inline std::vector<EventSequence> strip_labels(const std::vector<SyntheticEvent>& events) {
    std::vector<EventSequence> out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back(e.seq);
    return out;
}

inline void write_labels_csv(std::ostream& out,
                             const std::vector<SyntheticEvent>& events) {
    out << "event_id,true_poc,positive\n";
    for (const auto& e : events)
        out << e.seq.event_id << ',' << format_double(e.true_poc) << ','
            << (e.positive ? '1' : '0') << '\n';
}

} // namespace ecra
