#pragma once

// Scenario ensembles for volatility uncertainty. A control path picks an
// admissible volatility gamma_k in the band for each step; the canonical
// process has increments dB_k = gamma_k z_k sqrt(dt) with exact
// quadratic-variation compensator d<B>_k = gamma_k^2 dt. Upper expectations
// are estimated as the maximum of Monte Carlo means over a family of
// controls that always contains the two constant endpoint controls.

#include "gcalc/band.hpp"
#include "gcalc/common.hpp"
#include "gcalc/rng.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <vector>

namespace gcalc {

/// Uniform time grid on [t_start, t_end] with n_steps steps.
struct TimeGrid {
    double t_start = 0.0;
    double t_end = 1.0;
    int n_steps = 256;

    double dt() const { return (t_end - t_start) / n_steps; }
    double time(int k) const { return t_start + k * dt(); }

    void validate() const {
        if (!(t_end > t_start)) throw Error("time grid: t_end must exceed t_start");
        if (n_steps < 1) throw Error("time grid: need at least one step");
    }
};

enum class PolicyKind { ConstantRandom, PiecewiseRandom, BangBang, Fixed };

/// Recipe for drawing a control path.
struct ControlPolicy {
    PolicyKind kind = PolicyKind::ConstantRandom;
    int pieces = 8;                  // PiecewiseRandom: number of constant segments
    std::vector<int> sign_schedule;  // BangBang: >0 -> upper, <=0 -> lower, per segment
    Mat fixed_gamma;                 // Fixed

    static ControlPolicy constant_random() { return {PolicyKind::ConstantRandom, 8, {}, {}}; }
    static ControlPolicy piecewise_random(int pieces) { return {PolicyKind::PiecewiseRandom, pieces, {}, {}}; }
    static ControlPolicy bang_bang(std::vector<int> schedule) {
        return {PolicyKind::BangBang, 8, std::move(schedule), {}};
    }
    static ControlPolicy fixed(const Mat& gamma) { return {PolicyKind::Fixed, 8, {}, gamma}; }
};

/// Piecewise-constant admissible volatility: gammas[k] acts on [t_k, t_k+1).
struct ControlPath {
    TimeGrid grid;
    std::vector<Mat> gammas;
};

namespace detail {

/// Random feasible volatility: midpoint plus a Haar-rotated diagonal
/// perturbation, projected into the band. Reduces to uniform on the
/// interval for d = 1.
inline Mat random_feasible(const VolatilityBand& band, const CounterRng& rng, std::uint64_t step) {
    const int d = band.dim();
    if (d == 1) {
        double g = rng.uniform(step, 0, band.lo1(), band.up1());
        Mat m(1, 1);
        m(0, 0) = g;
        return m;
    }
    Mat u = random_orthogonal(rng, d, step);
    double radius = 0.5 * (band.sigma_upper() - band.sigma_lower()).norm() + 1e-12;
    Vec w(d);
    for (int i = 0; i < d; ++i)
        w(i) = rng.uniform(step, 64 + static_cast<std::uint64_t>(i), -radius, radius);
    Mat mid = 0.5 * (band.sigma_lower() + band.sigma_upper());
    return project_to_band(mid + u * w.asDiagonal() * u.transpose(), band);
}

} // namespace detail

/// Draw a control path. Randomness is keyed by (seed, stream) only, so the
/// same arguments always give the same control.
inline ControlPath sample_control(const VolatilityBand& band, const TimeGrid& grid,
                                  const ControlPolicy& policy, std::uint64_t seed,
                                  std::uint64_t stream = 0) {
    grid.validate();
    CounterRng rng(seed, stream ^ 0xC0117801ULL);
    ControlPath path;
    path.grid = grid;
    path.gammas.resize(grid.n_steps);

    auto fill_segments = [&](int pieces, const std::function<Mat(int)>& gamma_of_segment) {
        int prev = -1;
        Mat g;
        for (int k = 0; k < grid.n_steps; ++k) {
            int seg = static_cast<int>((static_cast<long>(k) * pieces) / grid.n_steps);
            if (seg != prev) {
                g = gamma_of_segment(seg);
                prev = seg;
            }
            path.gammas[k] = g;
        }
    };

    switch (policy.kind) {
    case PolicyKind::ConstantRandom:
        fill_segments(1, [&](int) { return detail::random_feasible(band, rng, 0); });
        break;
    case PolicyKind::PiecewiseRandom:
        fill_segments(std::max(1, policy.pieces),
                      [&](int seg) { return detail::random_feasible(band, rng, static_cast<std::uint64_t>(seg)); });
        break;
    case PolicyKind::BangBang: {
        if (policy.sign_schedule.empty()) throw Error("sample_control: bang-bang needs a sign schedule");
        int m = static_cast<int>(policy.sign_schedule.size());
        fill_segments(m, [&](int seg) {
            return policy.sign_schedule[seg] > 0 ? band.sigma_upper() : band.sigma_lower();
        });
        break;
    }
    case PolicyKind::Fixed: {
        if (policy.fixed_gamma.size() == 0) throw Error("sample_control: fixed policy needs a matrix");
        if (!band.contains(policy.fixed_gamma))
            throw Error("sample_control: fixed volatility is outside the band");
        Mat g = sym(policy.fixed_gamma);
        fill_segments(1, [&](int) { return g; });
        break;
    }
    }
    return path;
}

/// One simulated scenario. Per-step data is stored column-wise in flat
/// matrices (one allocation each) so large ensembles stay cheap; qv columns
/// hold vec(gamma_k^2 dt) in column-major order.
struct ScenarioPath {
    TimeGrid grid;
    std::shared_ptr<const ControlPath> control;
    Mat dB;   // d x n
    Mat B;    // d x (n+1), cumulative, B_0 = 0
    Mat qv;   // d*d x n, increments
    Mat QV;   // d*d x (n+1), cumulative
    Mat X;    // d x (n+1) after euler_gsde; 0 x 0 otherwise
    std::uint64_t seed = 0;
    std::uint64_t index = 0;

    int dim() const { return static_cast<int>(dB.rows()); }
    int n_steps() const { return static_cast<int>(dB.cols()); }
    bool has_state() const { return X.size() != 0; }

    Eigen::Map<const Mat> qv_inc(int k) const {
        return Eigen::Map<const Mat>(qv.col(k).data(), dim(), dim());
    }
    Eigen::Map<const Mat> qv_total(int k) const {
        return Eigen::Map<const Mat>(QV.col(k).data(), dim(), dim());
    }
    const Mat& gamma(int k) const { return control->gammas[static_cast<std::size_t>(k)]; }

    /// CSV rows "k,t,B_1..B_d,QV_11..QV_dd[,X_1..X_d]".
    void write_csv(std::ostream& os) const {
        const int d = dim();
        os << "k,t";
        for (int i = 1; i <= d; ++i) os << ",B_" << i;
        for (int i = 1; i <= d; ++i)
            for (int j = 1; j <= d; ++j) os << ",QV_" << i << j;
        if (has_state())
            for (int i = 1; i <= d; ++i) os << ",X_" << i;
        os << '\n';
        for (int k = 0; k <= n_steps(); ++k) {
            os << k << ',' << fmt_g17(grid.time(k));
            for (int i = 0; i < d; ++i) os << ',' << fmt_g17(B(i, k));
            auto q = qv_total(k);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) os << ',' << fmt_g17(q(i, j));
            if (has_state())
                for (int i = 0; i < d; ++i) os << ',' << fmt_g17(X(i, k));
            os << '\n';
        }
    }
};

/// Simulate the canonical process under a control. Noise is a pure function
/// of (seed, index, step, component); the compensator is exact, so QV is
/// deterministic given the control.
inline ScenarioPath simulate_gbm(std::shared_ptr<const ControlPath> control, std::uint64_t seed,
                                 std::uint64_t index) {
    if (!control) throw Error("simulate_gbm: null control");
    control->grid.validate();
    const int n = control->grid.n_steps;
    const int d = control->gammas.empty() ? 0 : static_cast<int>(control->gammas[0].rows());
    if (static_cast<int>(control->gammas.size()) != n)
        throw Error("simulate_gbm: control does not cover the time grid");
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

    CounterRng rng(seed, index);
    Vec z(d);
    Mat g2(d, d);
    for (int k = 0; k < n; ++k) {
        const Mat& g = path.gamma(k);
        for (int i = 0; i < d; ++i) z(i) = rng.normal(static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i));
        path.dB.col(k).noalias() = g * (z * sqrt_dt);
        g2.noalias() = g * g;
        path.qv.col(k) = Eigen::Map<const Vec>(g2.data(), d * d) * dt;
        path.B.col(k + 1) = path.B.col(k) + path.dB.col(k);
        path.QV.col(k + 1) = path.QV.col(k) + path.qv.col(k);
    }
    return path;
}

/// Convenience overload copying the control once.
inline ScenarioPath simulate_gbm(const ControlPath& control, std::uint64_t seed, std::uint64_t index) {
    return simulate_gbm(std::make_shared<const ControlPath>(control), seed, index);
}

/// Coefficients of the state equation
///   dX = b dt + sum_ij h_ij d<B^i,B^j> + sigma dB.
/// h is symmetric in (i, j); sigma's i-th column multiplies dB^i.
struct CoefficientSet {
    int dim = 1;
    std::function<Vec(double, const Vec&)> b;
    std::vector<std::vector<std::function<Vec(double, const Vec&)>>> h;
    std::function<Mat(double, const Vec&)> sigma;
    double lipschitz_bound = 0.0;  // informational; not enforced

    /// Scalar (d = 1) coefficient set from scalar functions.
    static CoefficientSet make_1d(std::function<double(double, double)> b1,
                                  std::function<double(double, double)> h11,
                                  std::function<double(double, double)> sigma1,
                                  double lipschitz = 0.0) {
        CoefficientSet c;
        c.dim = 1;
        c.lipschitz_bound = lipschitz;
        if (b1) c.b = [b1](double t, const Vec& x) { return Vec::Constant(1, b1(t, x(0))); };
        c.h = {{{}}};
        if (h11) c.h[0][0] = [h11](double t, const Vec& x) { return Vec::Constant(1, h11(t, x(0))); };
        if (sigma1)
            c.sigma = [sigma1](double t, const Vec& x) {
                Mat m(1, 1);
                m(0, 0) = sigma1(t, x(0));
                return m;
            };
        return c;
    }
};

/// Left-endpoint Euler pass filling X along an existing scenario. Throws if
/// the state leaves the representable range (blow-up).
inline void euler_gsde(const CoefficientSet& coeffs, const Vec& x0, ScenarioPath& path) {
    const int n = path.n_steps();
    const int d = path.dim();
    if (coeffs.dim != d) throw Error("euler_gsde: coefficient dimension does not match scenario");
    if (x0.size() != d) throw Error("euler_gsde: x0 dimension does not match scenario");
    if (static_cast<int>(coeffs.h.size()) != d)
        throw Error("euler_gsde: h must be a d x d table of coefficients");
    const double dt = path.grid.dt();

    path.X.setZero(d, n + 1);
    path.X.col(0) = x0;
    Vec x(d), next(d);
    for (int k = 0; k < n; ++k) {
        double t = path.grid.time(k);
        x = path.X.col(k);
        next = x;
        if (coeffs.b) next += coeffs.b(t, x) * dt;
        auto q = path.qv_inc(k);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const auto& hij = coeffs.h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                if (hij) next += hij(t, x) * q(i, j);
            }
        if (coeffs.sigma) next.noalias() += coeffs.sigma(t, x) * path.dB.col(k);
        if (!next.allFinite())
            throw Error(detail::format("euler_gsde: trajectory blow-up at step %d (t=%g)", k, t));
        path.X.col(k + 1) = next;
    }
}

/// Coefficients of the canonical process itself: X = B exactly under the
/// Euler map (b = 0, h = 0, sigma = identity).
inline CoefficientSet canonical_coefficients(int d) {
    if (d < 1) throw Error("canonical_coefficients: dimension must be >= 1");
    CoefficientSet c;
    c.dim = d;
    c.h.assign(static_cast<std::size_t>(d),
               std::vector<std::function<Vec(double, const Vec&)>>(static_cast<std::size_t>(d)));
    c.sigma = [d](double, const Vec&) { return Mat(Mat::Identity(d, d)); };
    return c;
}

/// Payoff evaluated on a whole scenario.
using Payoff = std::function<double(const ScenarioPath&)>;

/// Payoff reading only the terminal value (state if simulated, else B).
inline Payoff terminal_payoff(std::function<double(double)> f) {
    return [f = std::move(f)](const ScenarioPath& p) {
        double xT = p.has_state() ? p.X(0, p.n_steps()) : p.B(0, p.n_steps());
        return f(xT);
    };
}

/// Result of an upper-expectation estimate: the best control wins.
struct UpperExpectation {
    double value = 0.0;
    int argmax_control = 0;
    double std_error = 0.0;  // at the argmax control
    std::vector<double> control_means;
    std::vector<double> control_std_errors;
    std::vector<std::shared_ptr<const ControlPath>> controls;
};

/// Estimate sup over controls of E[payoff] by Monte Carlo: the control
/// family is {lower endpoint, upper endpoint} plus (n_controls - 2) paths
/// sampled from `extra_policy`. Control c, sample m uses noise stream
/// c * n_mc + m + 1, so enlarging the family never perturbs (and hence
/// never decreases below) the estimate over the existing controls. If
/// coeffs is null the payoff sees the canonical process only.
inline UpperExpectation estimate_upper_expectation(
    const Payoff& payoff, const CoefficientSet* coeffs, const VolatilityBand& band,
    const TimeGrid& grid, int n_controls, int n_mc, std::uint64_t seed, const Vec& x0 = Vec(),
    const ControlPolicy& extra_policy = ControlPolicy::piecewise_random(8)) {
    grid.validate();
    if (n_controls < 2) throw Error("estimate_upper_expectation: need at least the two endpoint controls");
    if (n_mc < 2) throw Error("estimate_upper_expectation: need at least two samples per control");

    std::vector<std::shared_ptr<const ControlPath>> controls;
    controls.push_back(std::make_shared<const ControlPath>(
        sample_control(band, grid, ControlPolicy::fixed(band.sigma_lower()), seed, 0)));
    controls.push_back(std::make_shared<const ControlPath>(
        sample_control(band, grid, ControlPolicy::fixed(band.sigma_upper()), seed, 1)));
    for (int c = 2; c < n_controls; ++c)
        controls.push_back(std::make_shared<const ControlPath>(
            sample_control(band, grid, extra_policy, seed, static_cast<std::uint64_t>(c))));

    Vec start = x0.size() ? x0 : Vec::Zero(band.dim());
    std::vector<double> means(controls.size()), ses(controls.size());

    parallel_for(controls.size(), [&](std::size_t c) {
        double sum = 0.0, sum_sq = 0.0;
        for (int m = 0; m < n_mc; ++m) {
            std::uint64_t index = static_cast<std::uint64_t>(c) * static_cast<std::uint64_t>(n_mc) +
                                  static_cast<std::uint64_t>(m) + 1;
            ScenarioPath path = simulate_gbm(controls[c], seed, index);
            if (coeffs) euler_gsde(*coeffs, start, path);
            double v = payoff(path);
            sum += v;
            sum_sq += v * v;
        }
        double mean = sum / n_mc;
        double var = std::max(0.0, (sum_sq - n_mc * mean * mean) / (n_mc - 1));
        means[c] = mean;
        ses[c] = std::sqrt(var / n_mc);
    });

    UpperExpectation out;
    out.control_means = means;
    out.control_std_errors = ses;
    out.controls = std::move(controls);
    out.argmax_control = 0;
    for (std::size_t c = 1; c < means.size(); ++c)
        if (means[c] > means[out.argmax_control]) out.argmax_control = static_cast<int>(c);
    out.value = means[out.argmax_control];
    out.std_error = ses[out.argmax_control];
    return out;
}

} // namespace gcalc
