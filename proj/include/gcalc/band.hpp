#pragma once

// Volatility band [sigma_lower, sigma_upper] and the generating function
//
//     G(A) = (1/2) sup { trace(A g^2) : sigma_lower <= g <= sigma_upper }
//
// (matrix order). For d = 1 this is (upper^2 a+ - lower^2 a-)/2 in closed
// form. For commuting families the supremum separates per eigenvalue. The
// general case is handled by projected gradient ascent over the band, which
// yields a certified lower bound (the maximizing candidate is feasible);
// a converged flag reports whether the ascent provably stalled.

#include "gcalc/common.hpp"
#include "gcalc/rng.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace gcalc {

/// Matrix interval of admissible volatilities. lower is strictly positive
/// definite; upper - lower is positive semidefinite (equality gives the
/// degenerate single-volatility band, which collapses the calculus to the
/// classical one).
class VolatilityBand {
public:
    VolatilityBand(const Mat& lower, const Mat& upper) {
        if (lower.rows() != lower.cols() || upper.rows() != upper.cols() || lower.rows() != upper.rows())
            throw Error("volatility band: matrices must be square with equal dimensions");
        if (!gcalc::is_symmetric(lower, 1e-8) || !gcalc::is_symmetric(upper, 1e-8))
            throw Error("volatility band: matrices must be symmetric");
        lower_ = sym(lower);
        upper_ = sym(upper);
        double lo_min = min_eigenvalue(lower_);
        if (!(lo_min > 0.0))
            throw Error(detail::format("volatility band: sigma_lower must be positive definite "
                                       "(min eigenvalue %g)", lo_min));
        double gap_min = min_eigenvalue(upper_ - lower_);
        if (gap_min < -1e-12 * std::max(1.0, upper_.norm()))
            throw Error(detail::format("volatility band: sigma_upper - sigma_lower must be positive "
                                       "semidefinite (min eigenvalue %g)", gap_min));
        lower_sq_ = lower_ * lower_;
        upper_sq_ = upper_ * upper_;
    }

    /// One-dimensional band from scalars 0 < lo <= hi.
    static VolatilityBand scalar(double lo, double hi) {
        Mat l(1, 1), u(1, 1);
        l(0, 0) = lo;
        u(0, 0) = hi;
        return VolatilityBand(l, u);
    }

    int dim() const { return static_cast<int>(lower_.rows()); }
    const Mat& sigma_lower() const { return lower_; }
    const Mat& sigma_upper() const { return upper_; }
    const Mat& lower_sq() const { return lower_sq_; }
    const Mat& upper_sq() const { return upper_sq_; }

    /// Scalar volatilities; only valid when dim() == 1.
    double lo1() const { require_1d(); return lower_(0, 0); }
    double up1() const { require_1d(); return upper_(0, 0); }

    bool is_singleton(double tol = 0.0) const { return (upper_ - lower_).norm() <= tol; }

    /// True if lower <= g <= upper up to tol in the semidefinite order.
    bool contains(const Mat& g, double tol = 1e-10) const {
        if (g.rows() != dim() || g.cols() != dim()) return false;
        return min_eigenvalue(g - lower_) >= -tol && min_eigenvalue(upper_ - g) >= -tol;
    }

private:
    void require_1d() const {
        if (dim() != 1) throw Error(detail::format("band not scalar: dimension is %d", dim()));
    }
    Mat lower_, upper_, lower_sq_, upper_sq_;
};

/// Smallest eigenvalue of sigma_lower^2; strictly positive, controls the
/// lower sandwich constant of quadratic-variation functionals.
inline double nondegeneracy_delta(const VolatilityBand& band) {
    return min_eigenvalue(band.lower_sq());
}

/// d = 1 generating function: (upper^2 a+ - lower^2 a-)/2.
inline double eval_g_1d(double a, const VolatilityBand& band) {
    double up2 = band.up1() * band.up1();
    double lo2 = band.lo1() * band.lo1();
    return 0.5 * (up2 * std::max(a, 0.0) - lo2 * std::max(-a, 0.0));
}

/// Inverse of the d = 1 generating function: the unique a with G(a) = y.
inline double eval_g_inverse_1d(double y, const VolatilityBand& band) {
    double up2 = band.up1() * band.up1();
    double lo2 = band.lo1() * band.lo1();
    return y >= 0.0 ? 2.0 * y / up2 : 2.0 * y / lo2;
}

/// Nearest-point style projection of sym(M) into the band by alternating
/// eigenvalue clipping against the lower and upper constraints. Fixed
/// number of rounds; exact for feasible input and for d = 1.
inline Mat project_to_band(const Mat& m, const VolatilityBand& band, int rounds = 10) {
    Mat x = sym(m);
    for (int r = 0; r < rounds; ++r) {
        Eigen::SelfAdjointEigenSolver<Mat> lo(x - band.sigma_lower());
        x = band.sigma_lower() +
            lo.eigenvectors() * lo.eigenvalues().cwiseMax(0.0).asDiagonal() * lo.eigenvectors().transpose();
        Eigen::SelfAdjointEigenSolver<Mat> up(band.sigma_upper() - x);
        x = band.sigma_upper() -
            up.eigenvectors() * up.eigenvalues().cwiseMax(0.0).asDiagonal() * up.eigenvectors().transpose();
        x = sym(x);
    }
    return x;
}

struct GAscentOptions {
    int max_iters = 500;
    double step_scale = 0.1;       // step = step_scale / ||A||_F
    int random_starts = 8;
    std::uint64_t start_seed = 0x5eed5eedULL;  // starts do not depend on A
    bool force_ascent = false;     // skip closed forms (used for cross-checks)
    double commute_tol = 1e-10;
    double stall_tol = 1e-12;      // projected step length declaring convergence
    int projection_rounds = 10;    // final feasibility polish
};

/// Value of G(A) together with how it was obtained. `value` is always
/// attained by a feasible matrix, hence a valid lower bound; `exact` marks
/// closed-form evaluation, `converged` marks a provably stalled ascent.
struct GValue {
    double value = 0.0;
    bool exact = false;
    bool converged = false;
};

namespace detail {

/// F(g) = (1/2) trace(A g^2) for symmetric A, g.
inline double g_objective(const Mat& a, const Mat& g) {
    return 0.5 * frob_inner(a, g * g);
}

/// One cheap feasibility round (lower clip then upper clip); used inside
/// the ascent loop where the full projection would dominate the cost.
inline Mat clip_once(const Mat& m, const VolatilityBand& band) {
    Eigen::SelfAdjointEigenSolver<Mat> lo(m - band.sigma_lower());
    Mat x = band.sigma_lower() +
            lo.eigenvectors() * lo.eigenvalues().cwiseMax(0.0).asDiagonal() * lo.eigenvectors().transpose();
    Eigen::SelfAdjointEigenSolver<Mat> up(band.sigma_upper() - x);
    x = band.sigma_upper() -
        up.eigenvectors() * up.eigenvalues().cwiseMax(0.0).asDiagonal() * up.eigenvectors().transpose();
    return sym(x);
}

/// Try to diagonalize A, lower^2 and upper^2 in a common orthonormal basis.
/// Returns true and fills diags on success.
inline bool common_eigenbasis(const Mat& a, const VolatilityBand& band,
                              Vec& da, Vec& dlo, Vec& dup) {
    const Mat& lo2 = band.lower_sq();
    const Mat& up2 = band.upper_sq();
    double s = std::max({1.0, a.norm(), lo2.norm(), up2.norm()});
    if (commutator_norm(a, lo2) > 1e-10 * s * s || commutator_norm(a, up2) > 1e-10 * s * s ||
        commutator_norm(lo2, up2) > 1e-10 * s * s)
        return false;
    // Generic combination forces a common eigenbasis; coefficients are
    // irrational so eigenvalue collisions only happen on joint eigenspaces.
    Mat c = a + 1.4142135623730951 * lo2 + 3.141592653589793 * up2;
    Eigen::SelfAdjointEigenSolver<Mat> es(c);
    const Mat& u = es.eigenvectors();
    Mat ta = u.transpose() * a * u;
    Mat tl = u.transpose() * lo2 * u;
    Mat tu = u.transpose() * up2 * u;
    auto off = [](const Mat& m) {
        Mat d = m;
        d.diagonal().setZero();
        return d.cwiseAbs().maxCoeff();
    };
    if (off(ta) > 1e-9 * s || off(tl) > 1e-9 * s || off(tu) > 1e-9 * s) return false;
    da = ta.diagonal();
    dlo = tl.diagonal();
    dup = tu.diagonal();
    return true;
}

} // namespace detail

/// Generating function for symmetric A over the band. Closed forms for
/// d = 1 and commuting (A, band) pairs; multi-start projected gradient
/// ascent otherwise. Positively homogeneous, monotone and sublinear in A.
inline GValue eval_g_matrix(const Mat& a_in, const VolatilityBand& band,
                            const GAscentOptions& opts = {}) {
    const int d = band.dim();
    if (a_in.rows() != d || a_in.cols() != d)
        throw Error("eval_g_matrix: dimension mismatch between A and band");
    Mat a = sym(a_in);

    if (!opts.force_ascent) {
        if (d == 1) return {eval_g_1d(a(0, 0), band), true, true};
        Vec da, dlo, dup;
        if (detail::common_eigenbasis(a, band, da, dlo, dup)) {
            double v = 0.0;
            for (int i = 0; i < d; ++i)
                v += 0.5 * (dup(i) * std::max(da(i), 0.0) - dlo(i) * std::max(-da(i), 0.0));
            return {v, true, true};
        }
    }

    double scale = a.norm();
    if (scale == 0.0) return {0.0, true, true};
    double step = opts.step_scale / scale;

    // Start set: endpoints, midpoint, an eigen-corner guess built from A's
    // eigenbasis, and fixed-seed random feasible points. The random starts
    // are independent of A so that G(lambda A) follows the same trajectory.
    std::vector<Mat> starts;
    starts.push_back(band.sigma_lower());
    starts.push_back(band.sigma_upper());
    starts.push_back(0.5 * (band.sigma_lower() + band.sigma_upper()));
    {
        Eigen::SelfAdjointEigenSolver<Mat> es(a);
        Mat corner = Mat::Zero(d, d);
        for (int i = 0; i < d; ++i) {
            const Vec v = es.eigenvectors().col(i);
            double w = es.eigenvalues()(i) >= 0.0 ? v.dot(band.sigma_upper() * v)
                                                  : v.dot(band.sigma_lower() * v);
            corner += w * (v * v.transpose());
        }
        starts.push_back(project_to_band(corner, band, 2));
    }
    {
        CounterRng rng(opts.start_seed, 0xA5CE57ULL);
        Mat mid = 0.5 * (band.sigma_lower() + band.sigma_upper());
        double radius = (band.sigma_upper() - band.sigma_lower()).norm() + 1e-3;
        for (int k = 0; k < opts.random_starts; ++k) {
            Mat u = random_orthogonal(rng, d, static_cast<std::uint64_t>(k));
            Vec w(d);
            for (int i = 0; i < d; ++i)
                w(i) = rng.uniform(static_cast<std::uint64_t>(k), 100 + static_cast<std::uint64_t>(i),
                                   -radius, radius);
            starts.push_back(project_to_band(mid + u * w.asDiagonal() * u.transpose(), band, 2));
        }
    }

    double best = -std::numeric_limits<double>::infinity();
    Mat best_g;
    bool best_converged = false;
    for (const Mat& s0 : starts) {
        Mat g = s0;
        double local_best = detail::g_objective(a, g);
        Mat local_best_g = g;
        bool stalled = false;
        for (int it = 0; it < opts.max_iters; ++it) {
            Mat grad = 0.5 * (a * g + g * a);
            Mat next = detail::clip_once(g + step * grad, band);
            double moved = (next - g).norm();
            g = next;
            double f = detail::g_objective(a, g);
            if (f > local_best) {
                local_best = f;
                local_best_g = g;
            }
            if (moved <= opts.stall_tol * std::max(1.0, g.norm())) {
                stalled = true;
                break;
            }
        }
        if (local_best > best) {
            best = local_best;
            best_g = local_best_g;
            best_converged = stalled;
        }
    }

    // Certify feasibility of the winner with the full projection, then
    // report the objective at the certified point.
    Mat g_cert = project_to_band(best_g, band, opts.projection_rounds);
    double v_cert = detail::g_objective(a, g_cert);
    if (v_cert < best - 1e-9 * std::max(1.0, std::abs(best))) {
        // Projection moved the point; keep the certified value anyway.
        best = v_cert;
    } else {
        best = std::max(best, v_cert);
    }
    return {best, false, best_converged};
}

/// Convenience scalar form of eval_g_matrix.
inline double eval_g(const Mat& a, const VolatilityBand& band, const GAscentOptions& opts = {}) {
    return eval_g_matrix(a, band, opts).value;
}

} // namespace gcalc
