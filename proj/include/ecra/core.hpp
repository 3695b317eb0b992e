// Shared base types and error hierarchy for the conjunction assessment library.
#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ecra {

// ---------------------------------------------------------------------------
// Errors.  Validation problems (bad inputs, malformed files) and numerical
// problems (degenerate covariances, failed fits) are kept distinct so the CLI
// can map them to different exit codes.

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : Error {
    using Error::Error;
};

struct ParseError : ValidationError {
    ParseError(const std::string& msg, std::size_t line_no)
        : ValidationError(msg + " (line " + std::to_string(line_no) + ")"),
          line(line_no) {}
    std::size_t line = 0;
};

struct NumericalError : Error {
    using Error::Error;
};

struct DegenerateCovariance : NumericalError {
    explicit DegenerateCovariance(double determinant)
        : NumericalError("degenerate covariance, det=" + std::to_string(determinant)),
          det(determinant) {}
    double det = 0.0;
};

struct InternalError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Small linear algebra for the encounter plane.

struct Vec2 {
    double xi = 0.0;
    double zeta = 0.0;
};

inline double norm(const Vec2& v) { return std::hypot(v.xi, v.zeta); }

// Symmetric 2x2 covariance over (xi, zeta).
struct Cov2 {
    double sxx = 1.0;  // var(xi)
    double szz = 1.0;  // var(zeta)
    double sxz = 0.0;  // cov(xi, zeta)

    double det() const { return sxx * szz - sxz * sxz; }
    double trace() const { return sxx + szz; }
};

inline Cov2 operator+(const Cov2& a, const Cov2& b) {
    return {a.sxx + b.sxx, a.szz + b.szz, a.sxz + b.sxz};
}

inline Cov2 operator*(double k, const Cov2& c) {
    return {k * c.sxx, k * c.szz, k * c.sxz};
}

// Eigendecomposition of a Cov2.  l1 >= l2; (c, s) is the rotation taking the
// eigenbasis to the original frame: Sigma = Q diag(l1, l2) Q^T with
// Q = [[c, -s], [s, c]].
struct Eig2 {
    double l1 = 1.0;
    double l2 = 1.0;
    double c = 1.0;
    double s = 0.0;
};

inline Eig2 eigen_decompose(const Cov2& m) {
    const double half_tr = 0.5 * (m.sxx + m.szz);
    const double d = 0.5 * (m.sxx - m.szz);
    const double rad = std::hypot(d, m.sxz);
    Eig2 e;
    e.l1 = half_tr + rad;
    e.l2 = half_tr - rad;
    const double theta = 0.5 * std::atan2(2.0 * m.sxz, m.sxx - m.szz);
    e.c = std::cos(theta);
    e.s = std::sin(theta);
    return e;
}

// Coordinates of v in the eigenbasis (Q^T v).
inline Vec2 to_eigenbasis(const Eig2& e, const Vec2& v) {
    return {e.c * v.xi + e.s * v.zeta, -e.s * v.xi + e.c * v.zeta};
}

// ---------------------------------------------------------------------------
// Numeric helpers.

inline double sq(double x) { return x * x; }

inline bool is_finite(double x) { return std::isfinite(x); }

inline double rel_err(double a, double b, double floor = 1e-300) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Shortest decimal form that parses back to the same double; keeps text
// outputs byte-stable across runs.
inline std::string format_double(double v) {
    std::array<char, 32> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

// erf(hi) - erf(lo) without catastrophic cancellation in the tails.
inline double erf_diff(double lo, double hi) {
    if (lo > hi) return -erf_diff(hi, lo);
    if (lo <= 0.0 && hi >= 0.0) return std::erf(hi) + std::erf(-lo);
    if (lo > 0.0) return std::erfc(lo) - std::erfc(hi);
    return std::erfc(-hi) - std::erfc(-lo);
}

// Standard normal CDF and its left-tail complement.
inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// 99% quantile of the standard normal.
inline constexpr double kZ99 = 2.3263478740408408;

// Closed interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool valid() const { return is_finite(lo) && is_finite(hi) && lo <= hi; }
    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

// ---------------------------------------------------------------------------
// Deterministic low-discrepancy sequence (Halton) used for interior starting
// points of box searches.  Index offsets make runs reproducible for a seed.

inline double halton(std::uint64_t index, std::uint32_t base) {
    double f = 1.0;
    double r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * static_cast<double>(index % base);
        index /= base;
    }
    return r;
}

// Worker-count resolution: nonpositive means "use the hardware".
inline int effective_jobs(int jobs) {
    if (jobs > 0) return jobs;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// ---------------------------------------------------------------------------
// Chunked parallel loop.  Each index writes only to its own output slot, so
// results are identical for any job count.

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(jobs, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex err_mu;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ecra
