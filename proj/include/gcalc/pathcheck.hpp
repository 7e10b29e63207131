#pragma once

// Verification harness for path independence of additive functionals:
//
//  * PDE residuals of the characterizing system at (t, x) grid points,
//  * pathwise defect |A_k - (V(t_k, X_k) - V(s, X_0))| over ensembles,
//  * empirical convergence order of the defect under dyadic dt refinement
//    with a shared Brownian skeleton,
//  * the alternating-sign (delta_n) norm estimator separating dt-integrals
//    from d<B>-integrals, and the decomposition triviality check built on
//    a raw Ito integrator.

#include "gcalc/band.hpp"
#include "gcalc/common.hpp"
#include "gcalc/functional.hpp"
#include "gcalc/scenario.hpp"
#include "gcalc/value_function.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

namespace gcalc {

// ---------------------------------------------------------------------------
// PDE residuals

struct PdeResidualReport {
    double sup_r1 = 0.0, sup_r2 = 0.0, sup_r3 = 0.0;
    std::pair<double, Vec> argmax_r1, argmax_r2, argmax_r3;
    std::size_t n_points = 0;

    double max_residual() const { return std::max({sup_r1, sup_r2, sup_r3}); }
};

/// Residuals of the characterizing PDE system at each evaluation point:
///   r1 = dV/dt - beta G(f) + <grad V, b>
///   r2 = max_ij |alpha f_ij - <grad V, h_ij> - (1/2) <sigma_i, (D2 V) sigma_j>|
///   r3 = |g - sigma^T grad V|
/// (sigma_i is the i-th column of sigma). Sup norms and argmax points.
inline PdeResidualReport pde_residuals(const ValueFunction& V, const CoefficientSet& coeffs,
                                       const FunctionalSpec& spec, const VolatilityBand& band,
                                       const std::vector<std::pair<double, Vec>>& eval_points,
                                       const GAscentOptions& opts = {}) {
    const int d = band.dim();
    PdeResidualReport report;
    report.n_points = eval_points.size();

    for (const auto& [t, x] : eval_points) {
        double vt = V.dV_dt(t, x);
        Vec gradv = V.grad(t, x);
        Mat hess = V.hessian(t, x);

        Mat f = spec.f ? sym(spec.f(t, x)) : Mat(Mat::Zero(d, d));
        Vec g = spec.g ? spec.g(t, x) : Vec(Vec::Zero(d));
        Vec b = coeffs.b ? coeffs.b(t, x) : Vec(Vec::Zero(d));
        Mat sigma = coeffs.sigma ? coeffs.sigma(t, x) : Mat(Mat::Zero(d, d));

        double gf = spec.beta != 0.0 ? eval_g_matrix(f, band, opts).value : 0.0;
        double r1 = std::abs(vt - spec.beta * gf + gradv.dot(b));

        double r2 = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                Vec hij = Vec::Zero(d);
                if (!coeffs.h.empty()) {
                    const auto& fn = coeffs.h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                    if (fn) hij = fn(t, x);
                }
                double term = spec.alpha * f(i, j) - gradv.dot(hij) -
                              0.5 * sigma.col(i).dot(hess * sigma.col(j));
                r2 = std::max(r2, std::abs(term));
            }

        double r3 = (g - sigma.transpose() * gradv).norm();

        if (r1 > report.sup_r1) { report.sup_r1 = r1; report.argmax_r1 = {t, x}; }
        if (r2 > report.sup_r2) { report.sup_r2 = r2; report.argmax_r2 = {t, x}; }
        if (r3 > report.sup_r3) { report.sup_r3 = r3; report.argmax_r3 = {t, x}; }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Pathwise defect

struct PathwiseReport {
    double dt = 0.0;
    std::vector<double> per_scenario_max;
    double ensemble_max = 0.0;
    double ensemble_mean = 0.0;
};

/// Defect of the pathwise identity along each scenario:
/// max_k |A_k - (V(t_k, X_k) - V(s, X_0))|, aggregated over the ensemble.
inline PathwiseReport pathwise_residual(const ValueFunction& V, const FunctionalSpec& spec,
                                        const VolatilityBand& band,
                                        const std::vector<ScenarioPath>& scenarios, double s,
                                        const GAscentOptions& opts = {}) {
    PathwiseReport report;
    if (scenarios.empty()) return report;
    report.dt = scenarios.front().grid.dt();
    report.per_scenario_max.assign(scenarios.size(), 0.0);

    parallel_for(scenarios.size(), [&](std::size_t i) {
        const ScenarioPath& path = scenarios[i];
        if (!path.has_state())
            throw Error("pathwise_residual: scenario has no state path X");
        FunctionalTrace trace = evaluate(spec, band, path, opts);
        double v0 = V.value(s, path.X.col(0));
        double worst = 0.0;
        for (int k = 0; k <= path.n_steps(); ++k) {
            double defect = std::abs(trace.A[static_cast<std::size_t>(k)] -
                                     (V.value(path.grid.time(k), path.X.col(k)) - v0));
            worst = std::max(worst, defect);
        }
        report.per_scenario_max[i] = worst;
    });

    double sum = 0.0;
    for (double v : report.per_scenario_max) {
        report.ensemble_max = std::max(report.ensemble_max, v);
        sum += v;
    }
    report.ensemble_mean = sum / static_cast<double>(scenarios.size());
    return report;
}

// ---------------------------------------------------------------------------
// Scenario builders shared by the ensemble checks

/// Deterministic mixed control family: scenario i cycles through constant
/// random, piecewise random and a parity-shifted bang-bang schedule.
inline ControlPolicy mixed_policy(std::uint64_t i) {
    switch (i % 3) {
    case 0: return ControlPolicy::constant_random();
    case 1: return ControlPolicy::piecewise_random(8);
    default: {
        std::vector<int> schedule(8);
        for (int j = 0; j < 8; ++j)
            schedule[static_cast<std::size_t>(j)] = ((i / 3 + static_cast<std::uint64_t>(j)) % 2 == 0) ? 1 : -1;
        return ControlPolicy::bang_bang(schedule);
    }
    }
}

inline std::vector<std::shared_ptr<const ControlPath>> sample_mixed_controls(
    const VolatilityBand& band, const TimeGrid& grid, int n, std::uint64_t seed) {
    std::vector<std::shared_ptr<const ControlPath>> controls;
    controls.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        controls.push_back(std::make_shared<const ControlPath>(
            sample_control(band, grid, mixed_policy(static_cast<std::uint64_t>(i)), seed,
                           static_cast<std::uint64_t>(i))));
    return controls;
}

/// Mixed-policy ensemble with state integration. Scenario i uses noise
/// stream i; x0 empty means the canonical process is the state.
inline std::vector<ScenarioPath> make_scenarios(const VolatilityBand& band, const TimeGrid& grid,
                                                int n, std::uint64_t seed,
                                                const CoefficientSet* coeffs = nullptr,
                                                const Vec& x0 = Vec()) {
    auto controls = sample_mixed_controls(band, grid, n, seed);
    std::vector<ScenarioPath> scenarios(static_cast<std::size_t>(n));
    Vec start = x0.size() ? x0 : Vec::Zero(band.dim());
    parallel_for(scenarios.size(), [&](std::size_t i) {
        scenarios[i] = simulate_gbm(controls[i], seed, i);
        if (coeffs) euler_gsde(*coeffs, start, scenarios[i]);
    });
    return scenarios;
}

// ---------------------------------------------------------------------------
// Convergence order under dyadic refinement

struct ConvergenceReport {
    std::vector<double> dts;
    std::vector<double> ensemble_maxes;
    double slope = 0.0;
    bool degenerate = false;  // all residuals at round-off; slope is +inf sentinel
};

namespace detail {

/// Split level-l normals into level-(l+1) normals: each coarse z becomes
/// ((z+w)/sqrt2, (z-w)/sqrt2) with a fresh fill w. Coarse increments are
/// exactly the sums of their refinements, so all levels share one skeleton.
inline Mat refine_normals(const Mat& z, const CounterRng& rng, int level) {
    const int d = static_cast<int>(z.rows());
    const double inv_sqrt2 = 0.70710678118654752440;
    Mat out(d, 2 * z.cols());
    for (int k = 0; k < z.cols(); ++k)
        for (int i = 0; i < d; ++i) {
            double w = rng.normal(static_cast<std::uint64_t>(k),
                                  static_cast<std::uint64_t>((level + 1) * 8 + i));
            out(i, 2 * k) = (z(i, k) + w) * inv_sqrt2;
            out(i, 2 * k + 1) = (z(i, k) - w) * inv_sqrt2;
        }
    return out;
}

/// Control with each step split in two (same gamma, half dt).
inline ControlPath refine_control(const ControlPath& c) {
    ControlPath f;
    f.grid = TimeGrid{c.grid.t_start, c.grid.t_end, c.grid.n_steps * 2};
    f.gammas.resize(c.gammas.size() * 2);
    for (std::size_t k = 0; k < c.gammas.size(); ++k)
        f.gammas[2 * k] = f.gammas[2 * k + 1] = c.gammas[k];
    return f;
}

/// Scenario assembled from externally supplied standard normals.
inline ScenarioPath path_from_normals(std::shared_ptr<const ControlPath> control, const Mat& z,
                                      std::uint64_t seed, std::uint64_t index) {
    const int n = control->grid.n_steps;
    const int d = static_cast<int>(control->gammas[0].rows());
    const double dt = control->grid.dt();
    const double sqrt_dt = std::sqrt(dt);

    ScenarioPath path;
    path.grid = control->grid;
    path.control = std::move(control);
    path.seed = seed;
    path.index = index;
    path.dB.resize(d, n);
    path.B.setZero(d, n + 1);
    path.qv.resize(d * d, n);
    path.QV.setZero(d * d, n + 1);
    Mat g2(d, d);
    for (int k = 0; k < n; ++k) {
        const Mat& g = path.gamma(k);
        path.dB.col(k).noalias() = g * (z.col(k) * sqrt_dt);
        g2.noalias() = g * g;
        path.qv.col(k) = Eigen::Map<const Vec>(g2.data(), d * d) * dt;
        path.B.col(k + 1) = path.B.col(k) + path.dB.col(k);
        path.QV.col(k + 1) = path.QV.col(k) + path.qv.col(k);
    }
    return path;
}

} // namespace detail

/// Ensemble-max pathwise defect at each dt in `dt_list` (descending dyadic
/// halvings), with the same Brownian skeleton across levels: level-0
/// normals are reused and refined by fresh fills. Returns the least-squares
/// slope of log(max defect) against log(dt).
inline ConvergenceReport convergence_order(const ValueFunction& V, const CoefficientSet* coeffs,
                                           const FunctionalSpec& spec, const VolatilityBand& band,
                                           const std::vector<double>& dt_list, int n_scenarios,
                                           std::uint64_t seed, double t_end = 1.0,
                                           const Vec& x0 = Vec(),
                                           const GAscentOptions& opts = {}) {
    if (dt_list.size() < 3) throw Error("convergence_order: need at least three dt values");
    for (std::size_t l = 0; l + 1 < dt_list.size(); ++l)
        if (std::abs(dt_list[l + 1] - 0.5 * dt_list[l]) > 1e-12 * dt_list[l])
            throw Error("convergence_order: dt_list must halve at each level (shared skeleton)");
    const int d = band.dim();
    long n0 = std::lround(t_end / dt_list[0]);
    if (n0 < 1 || std::abs(n0 * dt_list[0] - t_end) > 1e-9 * t_end)
        throw Error("convergence_order: dt_list[0] must divide the horizon");

    TimeGrid coarse{0.0, t_end, static_cast<int>(n0)};
    auto controls = sample_mixed_controls(band, coarse, n_scenarios, seed);
    Vec start = x0.size() ? x0 : Vec::Zero(d);

    ConvergenceReport report;
    report.dts = dt_list;
    report.ensemble_maxes.assign(dt_list.size(), 0.0);

    // Per-scenario normals at the current level, refined in place.
    std::vector<Mat> normals(static_cast<std::size_t>(n_scenarios));
    std::vector<ControlPath> level_controls(static_cast<std::size_t>(n_scenarios));
    for (int i = 0; i < n_scenarios; ++i) level_controls[static_cast<std::size_t>(i)] = *controls[static_cast<std::size_t>(i)];

    for (std::size_t level = 0; level < dt_list.size(); ++level) {
        std::vector<double> worst(static_cast<std::size_t>(n_scenarios), 0.0);
        parallel_for(static_cast<std::size_t>(n_scenarios), [&](std::size_t i) {
            CounterRng rng(seed, i);
            if (level == 0) {
                Mat z(d, coarse.n_steps);
                for (int k = 0; k < coarse.n_steps; ++k)
                    for (int c = 0; c < d; ++c)
                        z(c, k) = rng.normal(static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(c));
                normals[i] = z;
            } else {
                normals[i] = detail::refine_normals(normals[i], rng, static_cast<int>(level) - 1);
                level_controls[i] = detail::refine_control(level_controls[i]);
            }
            ScenarioPath path = detail::path_from_normals(
                std::make_shared<const ControlPath>(level_controls[i]), normals[i], seed, i);
            if (coeffs) euler_gsde(*coeffs, start, path);
            FunctionalTrace trace = evaluate(spec, band, path, opts);
            double v0 = V.value(path.grid.t_start, coeffs ? Vec(path.X.col(0)) : Vec(path.B.col(0)));
            double w = 0.0;
            for (int k = 0; k <= path.n_steps(); ++k) {
                const Vec xk = coeffs ? Vec(path.X.col(k)) : Vec(path.B.col(k));
                w = std::max(w, std::abs(trace.A[static_cast<std::size_t>(k)] -
                                         (V.value(path.grid.time(k), xk) - v0)));
            }
            worst[i] = w;
        });
        double m = 0.0;
        for (double v : worst) m = std::max(m, v);
        report.ensemble_maxes[level] = m;
    }

    double top = 0.0;
    for (double v : report.ensemble_maxes) top = std::max(top, v);
    if (top <= 1e-14) {
        report.degenerate = true;
        report.slope = std::numeric_limits<double>::infinity();
        return report;
    }

    // Least-squares slope of log(residual) on log(dt).
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(dt_list.size());
    for (std::size_t l = 0; l < dt_list.size(); ++l) {
        double lx = std::log(dt_list[l]);
        double ly = std::log(std::max(report.ensemble_maxes[l], 1e-300));
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    report.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return report;
}

// ---------------------------------------------------------------------------
// Raw Ito integration and the decomposition check

/// Integrand triple of a generalized Ito process on a fixed grid. For the
/// m-th state component: xi(k,t)(m) multiplies dt, eta(k,t)[m] is the
/// symmetric matrix against d<B>, and row m of zeta(k,t) dots into dB.
struct ItoProcesses {
    std::function<Vec(int, double)> xi;
    std::function<std::vector<Mat>(int, double)> eta;
    std::function<Mat(int, double)> zeta;

    /// d = 1 triple from constants.
    static ItoProcesses constant_1d(double xi_c, double eta_c, double zeta_c) {
        ItoProcesses p;
        p.xi = [xi_c](int, double) { return Vec::Constant(1, xi_c); };
        p.eta = [eta_c](int, double) { return std::vector<Mat>{Mat::Constant(1, 1, eta_c)}; };
        p.zeta = [zeta_c](int, double) { return Mat::Constant(1, 1, zeta_c); };
        return p;
    }
};

/// X[k+1] = X[k] + xi_k dt + sum_ij eta_k^ij qv_k(i,j) + zeta_k dB_k with
/// X[0] = 0; columns of the result are the node values.
inline Mat integrate_ito(const ItoProcesses& procs, const ScenarioPath& path) {
    const int n = path.n_steps();
    const int d = path.dim();
    const double dt = path.grid.dt();
    Mat X = Mat::Zero(d, n + 1);
    for (int k = 0; k < n; ++k) {
        double t = path.grid.time(k);
        Vec inc = Vec::Zero(d);
        if (procs.xi) inc += procs.xi(k, t) * dt;
        if (procs.eta) {
            std::vector<Mat> etas = procs.eta(k, t);
            if (static_cast<int>(etas.size()) != d)
                throw Error("integrate_ito: eta must supply one matrix per state component");
            auto q = path.qv_inc(k);
            for (int m = 0; m < d; ++m) inc(m) += frob_inner(sym(etas[static_cast<std::size_t>(m)]), q);
        }
        if (procs.zeta) inc += procs.zeta(k, t) * path.dB.col(k);
        X.col(k + 1) = X.col(k) + inc;
    }
    return X;
}

/// Alternating-sign test function on [0,1]: value (-1)^i on (i/n, (i+1)/n]
/// for i = 1..n-1, zero on [0, 1/n] and outside (0, 1].
inline double delta_n_value(double u, int n) {
    if (n < 2) throw Error("delta_n: n must be >= 2");
    if (!(u > 1.0 / n) || u > 1.0) return 0.0;
    int i = static_cast<int>(std::ceil(u * n)) - 1;
    if (i < 1 || i > n - 1) return 0.0;
    return (i % 2 == 0) ? 1.0 : -1.0;
}

struct DeltaNormReport {
    int n = 0;
    double estimate = 0.0;
    double c0 = 0.0;      // min eigenvalue of (upper^2 - lower^2)/2
    double C0 = 0.0;      // Frobenius norm of (upper^2 - lower^2)/2
    double eta_l1 = 0.0;  // integral of ||eta||_F dt

    double lower_envelope() const { return c0 * eta_l1; }
    double upper_envelope() const { return C0 * eta_l1; }
};

/// Estimate the alternating-sign norm of a deterministic symmetric-matrix
/// process eta: max over a control family of
///   sum_k delta_n(t_mid/T) <eta(t_k), gamma_k^2> dt.
/// The family always contains the delta_n-aligned bang-bang control and its
/// flip; extra controls only raise the max. Quadratic variation enters
/// through its exact compensator, so no Monte Carlo noise is involved.
inline DeltaNormReport delta_n_norm(const std::function<Mat(int, double)>& eta,
                                    const VolatilityBand& band, const TimeGrid& grid, int n,
                                    const std::vector<std::shared_ptr<const ControlPath>>& extra_controls = {},
                                    std::uint64_t seed = 0) {
    grid.validate();
    if (n < 2) throw Error("delta_n_norm: n must be >= 2");
    const double T = grid.t_end - grid.t_start;
    const double dt = grid.dt();
    const int d = band.dim();

    std::vector<int> aligned(static_cast<std::size_t>(n)), flipped(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int s = (i >= 1 && i % 2 == 0) ? 1 : -1;  // sign of delta_n on ((i)/n, (i+1)/n]
        aligned[static_cast<std::size_t>(i)] = s;
        flipped[static_cast<std::size_t>(i)] = -s;
    }
    std::vector<std::shared_ptr<const ControlPath>> family;
    family.push_back(std::make_shared<const ControlPath>(
        sample_control(band, grid, ControlPolicy::bang_bang(aligned), seed, 0)));
    family.push_back(std::make_shared<const ControlPath>(
        sample_control(band, grid, ControlPolicy::bang_bang(flipped), seed, 1)));
    for (const auto& c : extra_controls) family.push_back(c);

    DeltaNormReport report;
    report.n = n;
    Mat half_gap = 0.5 * (band.upper_sq() - band.lower_sq());
    report.c0 = min_eigenvalue(half_gap);
    report.C0 = half_gap.norm();

    double best = -std::numeric_limits<double>::infinity();
    Mat g2(d, d);
    for (const auto& control : family) {
        double sum = 0.0;
        for (int k = 0; k < grid.n_steps; ++k) {
            double t = grid.time(k);
            double u = (t + 0.5 * dt - grid.t_start) / T;  // midpoint avoids breakpoints
            double delta = delta_n_value(u, n);
            if (delta == 0.0) continue;
            const Mat& g = control->gammas[static_cast<std::size_t>(k)];
            g2.noalias() = g * g;
            sum += delta * frob_inner(sym(eta(k, t)), g2) * dt;
        }
        best = std::max(best, sum);
    }
    report.estimate = best;

    double l1 = 0.0;
    for (int k = 0; k < grid.n_steps; ++k) l1 += sym(eta(k, grid.time(k))).norm() * dt;
    report.eta_l1 = l1;
    return report;
}

/// Outcome of the triviality check of an Ito decomposition.
struct DecompositionVerdict {
    bool all_zero = false;
    double max_abs_x = 0.0;
    int witness_control = -1;
    std::uint64_t witness_index = 0;
    int witness_step = 0;
    double witness_value = 0.0;
    double eta_delta_norm = 0.0;  // max over n in {8,16,32,64}
    double zeta_qv = 0.0;         // max over controls of sum_k tr(zeta qv zeta^T)
};

/// Decide whether the process X built from (xi, eta, zeta) vanishes across
/// every scenario. The control family is the two band endpoints plus any
/// extras; each control is driven by n_mc noise draws. If max |X| <= tol,
/// the integrands are additionally screened through the delta_n norm of eta
/// and the quadratic variation of the zeta-martingale, both of which must
/// also vanish for an all_zero verdict.
inline DecompositionVerdict decomposition_check(
    const ItoProcesses& procs, const VolatilityBand& band, const TimeGrid& grid,
    const std::vector<std::shared_ptr<const ControlPath>>& extra_controls, int n_mc, double tol,
    std::uint64_t seed = 0x9E3779B9ULL) {
    grid.validate();
    if (n_mc < 1) throw Error("decomposition_check: n_mc must be >= 1");
    if (tol < 0.0) throw Error("decomposition_check: tolerance must be >= 0");

    std::vector<std::shared_ptr<const ControlPath>> family;
    family.push_back(std::make_shared<const ControlPath>(
        sample_control(band, grid, ControlPolicy::fixed(band.sigma_lower()), seed, 0)));
    family.push_back(std::make_shared<const ControlPath>(
        sample_control(band, grid, ControlPolicy::fixed(band.sigma_upper()), seed, 1)));
    for (const auto& c : extra_controls) family.push_back(c);

    DecompositionVerdict verdict;
    for (std::size_t c = 0; c < family.size(); ++c) {
        for (int m = 0; m < n_mc; ++m) {
            std::uint64_t index =
                c * static_cast<std::uint64_t>(n_mc) + static_cast<std::uint64_t>(m) + 1;
            ScenarioPath path = simulate_gbm(family[c], seed, index);
            Mat X = integrate_ito(procs, path);
            for (int k = 0; k <= path.n_steps(); ++k)
                for (int i = 0; i < path.dim(); ++i)
                    if (std::abs(X(i, k)) > verdict.max_abs_x) {
                        verdict.max_abs_x = std::abs(X(i, k));
                        verdict.witness_control = static_cast<int>(c);
                        verdict.witness_index = index;
                        verdict.witness_step = k;
                        verdict.witness_value = X(i, k);
                    }
        }
    }

    // Screen eta through the alternating-sign norm at several n (the norm is
    // a limit in n; fixed-n values are reported, not extrapolated), taking
    // the worst state component.
    if (procs.eta) {
        const int d = band.dim();
        for (int comp = 0; comp < d; ++comp) {
            auto eta_comp = [&procs, comp](int k, double t) {
                return procs.eta(k, t)[static_cast<std::size_t>(comp)];
            };
            for (int n : {8, 16, 32, 64}) {
                if (grid.n_steps < n) continue;
                DeltaNormReport r = delta_n_norm(eta_comp, band, grid, n, {}, seed);
                verdict.eta_delta_norm = std::max(verdict.eta_delta_norm, r.estimate);
            }
        }
    }

    // Screen zeta through the quadratic variation of its martingale part.
    if (procs.zeta) {
        for (const auto& control : family) {
            double qv_sum = 0.0;
            const double dt = grid.dt();
            for (int k = 0; k < grid.n_steps; ++k) {
                const Mat& g = control->gammas[static_cast<std::size_t>(k)];
                Mat z = procs.zeta(k, grid.time(k));
                qv_sum += (z * (g * g) * z.transpose()).trace() * dt;
            }
            verdict.zeta_qv = std::max(verdict.zeta_qv, qv_sum);
        }
    }

    verdict.all_zero = verdict.max_abs_x <= tol && verdict.eta_delta_norm <= tol &&
                       verdict.zeta_qv <= tol;
    return verdict;
}

} // namespace gcalc
