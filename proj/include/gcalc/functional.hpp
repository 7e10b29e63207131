#pragma once

// Additive functionals along scenario paths:
//
//   A_{0,t} = beta INT G(f)(r, X_r) dr
//           + alpha SUM_ij INT f_ij(r, X_r) d<B^i,B^j>_r
//           + INT <g(r, X_r), dB_r>,
//
// evaluated with left-endpoint (Ito) sums on the scenario grid. The
// Girsanov-style special case and the alpha-normalization are provided as
// constructors of equivalent specs.

#include "gcalc/band.hpp"
#include "gcalc/common.hpp"
#include "gcalc/scenario.hpp"

#include <functional>
#include <ostream>
#include <utility>

namespace gcalc {

/// Data (alpha, beta, f, g) of an additive functional. f must be symmetric
/// (spot-checked at evaluation); absent f or g mean zero.
struct FunctionalSpec {
    double alpha = 0.0;
    double beta = 0.0;
    std::function<Mat(double, const Vec&)> f;
    std::function<Vec(double, const Vec&)> g;
};

/// Node values A[k] of the functional along one path, A[0] = 0.
struct FunctionalTrace {
    TimeGrid grid;
    std::vector<double> A;
    bool all_g_exact = true;      // every G(f) used a closed form
    bool all_g_converged = true;  // every ascent provably stalled

    /// CSV rows "k,t,A".
    void write_csv(std::ostream& os) const {
        os << "k,t,A\n";
        for (std::size_t k = 0; k < A.size(); ++k)
            os << k << ',' << fmt_g17(grid.time(static_cast<int>(k))) << ',' << fmt_g17(A[k]) << '\n';
    }
};

/// Evaluate the functional along a scenario. The state is X when the
/// scenario carries one, otherwise the canonical process B itself.
inline FunctionalTrace evaluate(const FunctionalSpec& spec, const VolatilityBand& band,
                                const ScenarioPath& path, const GAscentOptions& opts = {}) {
    const int n = path.n_steps();
    const int d = path.dim();
    if (band.dim() != d) throw Error("evaluate: band dimension does not match scenario");
    const double dt = path.grid.dt();

    FunctionalTrace trace;
    trace.grid = path.grid;
    trace.A.assign(static_cast<std::size_t>(n) + 1, 0.0);

    Vec x(d);
    for (int k = 0; k < n; ++k) {
        double t = path.grid.time(k);
        x = path.has_state() ? path.X.col(k) : path.B.col(k);
        double inc = 0.0;
        if (spec.f) {
            Mat fk = spec.f(t, x);
            if (fk.rows() != d || fk.cols() != d)
                throw Error("evaluate: f(t,x) has wrong dimensions");
            if (!is_symmetric(fk, 1e-8))
                throw Error(detail::format("evaluate: f(t,x) not symmetric at t=%g", t));
            fk = sym(fk);
            if (spec.beta != 0.0) {
                GValue gv = eval_g_matrix(fk, band, opts);
                trace.all_g_exact = trace.all_g_exact && gv.exact;
                trace.all_g_converged = trace.all_g_converged && (gv.exact || gv.converged);
                inc += spec.beta * gv.value * dt;
            }
            if (spec.alpha != 0.0) inc += spec.alpha * frob_inner(fk, path.qv_inc(k));
        }
        if (spec.g) {
            Vec gk = spec.g(t, x);
            if (gk.size() != d) throw Error("evaluate: g(t,x) has wrong dimension");
            inc += gk.dot(path.dB.col(k));
        }
        trace.A[static_cast<std::size_t>(k) + 1] = trace.A[static_cast<std::size_t>(k)] + inc;
    }
    for (double a : trace.A)
        if (!std::isfinite(a)) throw Error("evaluate: functional is non-finite");
    return trace;
}

/// Exponent data of the drift-removal (Girsanov-type) functional:
/// alpha = 1, beta = -1, g = sigma^{-1}(b + sum_i h_ii), f = (|g|^2/d) I.
/// sigma's conditioning is checked wherever g or f is evaluated; a
/// near-singular sigma throws, naming the point.
inline FunctionalSpec girsanov_spec(const CoefficientSet& coeffs) {
    const int d = coeffs.dim;
    if (!coeffs.sigma) throw Error("girsanov_spec: coefficient set has no sigma");
    if (static_cast<int>(coeffs.h.size()) != 0 && static_cast<int>(coeffs.h.size()) != d)
        throw Error("girsanov_spec: h must be empty or d x d");

    auto g_fn = [coeffs, d](double t, const Vec& x) -> Vec {
        Mat s = coeffs.sigma(t, x);
        Eigen::JacobiSVD<Mat> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
        double smin = svd.singularValues()(d - 1);
        double smax = svd.singularValues()(0);
        if (!(smin > 0.0) || smax / smin > 1e8) {
            std::string pt = "(";
            for (int i = 0; i < d; ++i) pt += (i ? "," : "") + fmt_g17(x(i));
            pt += ")";
            throw Error(detail::format("girsanov_spec: sigma singular at t=%s, x=%s",
                                       fmt_g17(t).c_str(), pt.c_str()));
        }
        Vec rhs = coeffs.b ? Vec(coeffs.b(t, x)) : Vec(Vec::Zero(d));
        for (int i = 0; i < static_cast<int>(coeffs.h.size()); ++i) {
            const auto& hii = coeffs.h[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
            if (hii) rhs += hii(t, x);
        }
        return svd.solve(rhs);
    };

    FunctionalSpec spec;
    spec.alpha = 1.0;
    spec.beta = -1.0;
    spec.g = g_fn;
    spec.f = [g_fn, d](double t, const Vec& x) -> Mat {
        Vec g = g_fn(t, x);
        return (g.squaredNorm() / d) * Mat::Identity(d, d);
    };
    return spec;
}

/// Normalize alpha to 1: alpha' = 1, beta' = beta/alpha, g' = g/alpha,
/// f' = f. The new functional evaluates to A/alpha node-wise.
inline FunctionalSpec alpha_rescale(const FunctionalSpec& spec) {
    if (spec.alpha == 0.0) throw Error("alpha_rescale: alpha is zero, not reducible");
    if (spec.alpha == 1.0) return spec;
    FunctionalSpec out;
    out.alpha = 1.0;
    out.beta = spec.beta / spec.alpha;
    out.f = spec.f;
    if (spec.g)
        out.g = [g = spec.g, a = spec.alpha](double t, const Vec& x) -> Vec { return g(t, x) / a; };
    return out;
}

} // namespace gcalc
