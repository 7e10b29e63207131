#pragma once

// Shared numeric utilities: matrix helpers, monotone cubic interpolation,
// deterministic thread partitioning, number formatting.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace gcalc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Error type thrown by every module; message is the diagnostic.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
inline std::string format(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    char buf[512];
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return std::string(buf);
}
} // namespace detail

/// Symmetric part (A + A^T)/2.
inline Mat sym(const Mat& a) { return 0.5 * (a + a.transpose()); }

inline bool is_symmetric(const Mat& a, double tol = 1e-12) {
    if (a.rows() != a.cols()) return false;
    return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, a.cwiseAbs().maxCoeff());
}

/// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(sym(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Frobenius norm of the commutator [A, B] = AB - BA.
inline double commutator_norm(const Mat& a, const Mat& b) {
    return (a * b - b * a).norm();
}

/// Frobenius inner product <A, B> = trace(A^T B).
inline double frob_inner(const Mat& a, const Mat& b) {
    return (a.array() * b.array()).sum();
}

/// Thread count: GCALC_THREADS if set (>=1), else hardware concurrency.
inline unsigned thread_count() {
    if (const char* env = std::getenv("GCALC_THREADS")) {
        long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

/// Run fn(i) for i in [0, n). Work is split into contiguous blocks per
/// thread; results must not depend on execution order. Exceptions from
/// workers are rethrown on the calling thread.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    unsigned nthreads = std::min<std::size_t>(thread_count(), n);
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(nthreads);
    std::size_t chunk = (n + nthreads - 1) / nthreads;
    for (unsigned t = 0; t < nthreads; ++t) {
        std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        workers.emplace_back([&, t, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Shortest-form decimal with 17 significant digits; round-trips exactly.
inline std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

/// Monotone cubic (Fritsch-Carlson) interpolant on an ascending grid.
/// Reproduces linear data exactly and never overshoots local extrema of
/// the samples. Evaluation outside [x_front, x_back] is an error.
class CubicInterp {
public:
    CubicInterp() = default;

    CubicInterp(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw Error("CubicInterp: need >= 2 nodes and matching values");
        for (std::size_t i = 0; i + 1 < n; ++i)
            if (!(x_[i] < x_[i + 1])) throw Error("CubicInterp: grid must be strictly ascending");

        // Detect uniform spacing for O(1) segment lookup.
        h0_ = x_[1] - x_[0];
        uniform_ = true;
        for (std::size_t i = 1; i + 1 < n; ++i)
            if (std::abs((x_[i + 1] - x_[i]) - h0_) > 1e-12 * std::max(1.0, std::abs(h0_))) {
                uniform_ = false;
                break;
            }

        m_.assign(n, 0.0);
        std::vector<double> d(n - 1), h(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            d[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        if (n == 2) {
            m_[0] = m_[1] = d[0];
        } else {
            for (std::size_t i = 1; i + 1 < n; ++i) {
                if (d[i - 1] * d[i] <= 0.0) {
                    m_[i] = 0.0;  // local extremum of the data
                } else {
                    double w1 = 2.0 * h[i] + h[i - 1];
                    double w2 = h[i] + 2.0 * h[i - 1];
                    m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
                }
            }
            m_[0] = edge_slope(h[0], h[1], d[0], d[1]);
            m_[n - 1] = edge_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
        }
    }

    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }

    double operator()(double x) const { return eval(x, nullptr); }

    /// Value and first derivative at x.
    double eval(double x, double* deriv) const {
        std::size_t i = segment(x);
        double h = x_[i + 1] - x_[i];
        double s = (x - x_[i]) / h;
        double s2 = s * s, s3 = s2 * s;
        double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
        double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        if (deriv) {
            double d00 = (6 * s2 - 6 * s) / h, d10 = (3 * s2 - 4 * s + 1);
            double d01 = (-6 * s2 + 6 * s) / h, d11 = (3 * s2 - 2 * s);
            *deriv = d00 * y_[i] + d10 * m_[i] + d01 * y_[i + 1] + d11 * m_[i + 1];
        }
        return h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
    }

private:
    static double edge_slope(double h0, double h1, double d0, double d1) {
        // One-sided three-point slope, clipped to preserve monotonicity.
        double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (m * d0 <= 0.0) return 0.0;
        if (d0 * d1 < 0.0 && std::abs(m) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return m;
    }

    std::size_t segment(double x) const {
        if (!(x >= x_.front() && x <= x_.back()))
            throw Error(detail::format("CubicInterp: x=%g outside [%g, %g]", x, x_.front(), x_.back()));
        if (uniform_) {
            auto i = static_cast<std::ptrdiff_t>((x - x_.front()) / h0_);
            return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(x_.size()) - 2));
        }
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        auto i = static_cast<std::size_t>(it - x_.begin());
        return std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, x_.size() - 2);
    }

    std::vector<double> x_, y_, m_;
    double h0_ = 0.0;
    bool uniform_ = false;
};

} // namespace gcalc
