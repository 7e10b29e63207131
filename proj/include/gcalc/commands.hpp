#pragma once

// Command back ends for the CLI: each run_* takes a parsed configuration,
// writes its artifacts under cfg.output_dir (atomically, fixed key order,
// 17 significant digits) and returns the process exit code. Runtime
// failures are thrown as gcalc::Error; the CLI maps them to exit 1.

#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gcalc/config.hpp"
#include "gcalc/functional.hpp"
#include "gcalc/harmonic.hpp"
#include "gcalc/io.hpp"
#include "gcalc/pathcheck.hpp"

namespace gcalc {

namespace detail {

inline void write_matrix(JsonWriter& w, const Mat& m) {
    w.begin_array();
    for (int i = 0; i < m.rows(); ++i) {
        w.begin_array();
        for (int k = 0; k < m.cols(); ++k) w.value(m(i, k));
        w.end_array();
    }
    w.end_array();
}

inline void write_band(JsonWriter& w, const VolatilityBand& band) {
    w.begin_object();
    w.kv("dim", band.dim());
    w.key("sigma_lower");
    write_matrix(w, band.sigma_lower());
    w.key("sigma_upper");
    write_matrix(w, band.sigma_upper());
    w.end_object();
}

inline void write_point(JsonWriter& w, const std::pair<double, Vec>& p) {
    w.begin_object();
    w.kv("t", p.first);
    w.key("x");
    w.begin_array();
    for (int i = 0; i < p.second.size(); ++i) w.value(p.second(i));
    w.end_array();
    w.end_object();
}

inline void emit(const std::filesystem::path& path, std::string_view content) {
    atomic_write(path, content);
    std::cout << "wrote " << path.string() << "\n";
}

/// Harmonic construction shared by `example` and `verify`: profile, induced
/// (spec, V) pair and the matching state coefficients. A nonzero
/// f_perturbation shifts f by that multiple of the identity, which breaks
/// path independence while leaving V untouched.
struct HarmonicBundle {
    std::shared_ptr<const HarmonicProfile> profile;
    ExampleConstruction construction;
    CoefficientSet coeffs;
};

inline HarmonicBundle build_harmonic(const HarmonicConfig& hc, const VolatilityBand& band) {
    if (hc.nx < 3) throw Error("harmonic_example: nx must be >= 3");
    auto profile = std::make_shared<const HarmonicProfile>(
        build_v0(hc.h.fn_x(), hc.sigma.fn_x(), linspace(hc.x_min, hc.x_max, hc.nx), hc.v0_at_0,
                 hc.v0_prime_at_0));
    HarmonicBundle b{profile,
                     build_example_spec(profile, hc.phi.fn_t(), hc.phi_prime.fn_t(), hc.b.fn(), band),
                     example_coefficients(profile, hc.b.fn())};
    if (hc.f_perturbation != 0.0) {
        auto base = b.construction.spec.f;
        const double c = hc.f_perturbation;
        const int d = band.dim();
        b.construction.spec.f = [base, c, d](double t, const Vec& x) {
            Mat f = base ? base(t, x) : Mat(Mat::Zero(d, d));
            return Mat(f + c * Mat::Identity(d, d));
        };
    }
    return b;
}

inline void require_1d(const VolatilityBand& band, const char* what) {
    if (band.dim() != 1)
        throw Error(std::string(what) + ": expression-valued blocks need a one-dimensional band");
}

}  // namespace detail

/// Backward solve of the nonlinear heat equation for a terminal payoff;
/// writes surface.csv and summary.json. A `conditional` block adds the
/// value of a one- or two-time cylinder functional at the query point.
inline int run_gheat(const ExperimentConfig& cfg) {
    const VolatilityBand& band = cfg.require_band();
    if (band.dim() != 1) throw Error("gheat: the backward solver is one-dimensional");
    if (!cfg.terminal) throw Error("gheat: a 'terminal' expression is required");

    auto phi = [ast = cfg.terminal.ast](double x) { return expr::eval(ast, 0.0, x); };
    ValueSurface surface = solve_terminal(phi, band, cfg.grid, cfg.horizon, cfg.time_stride);
    double value_at_origin = surface.value_at(0.0, 0.0);

    std::optional<double> conditional_value;
    if (cfg.conditional) {
        const ConditionalConfig& cc = *cfg.conditional;
        CylinderFunctional f;
        f.times = cc.times;
        if (cc.times.size() == 1) {
            // One fixing time: t is bound to it, x to the path value there.
            f.phi = [ast = cc.payoff.ast, t1 = cc.times[0]](const std::vector<double>& v) {
                return expr::eval(ast, t1, v[0]);
            };
        } else {
            // Two fixing times: t is the value at the first, x at the second.
            f.phi = [ast = cc.payoff.ast](const std::vector<double>& v) {
                return expr::eval(ast, v[0], v[1]);
            };
        }
        conditional_value =
            conditional_g_expectation(f, band, cfg.grid, cc.query, cc.x1_stride);
    }

    std::ostringstream csv;
    surface.write_csv(csv);
    detail::emit(cfg.output_dir / "surface.csv", csv.str());

    JsonWriter w;
    w.begin_object();
    w.kv("command", "gheat");
    w.kv("value_at_origin", value_at_origin);
    w.kv("horizon", cfg.horizon);
    w.key("grid");
    w.begin_object();
    w.kv("x_min", cfg.grid.x_min);
    w.kv("x_max", cfg.grid.x_max);
    w.kv("nx", cfg.grid.nx);
    w.kv("dt", cfg.grid.dt);
    w.kv("boundary", cfg.grid.boundary == BoundaryRule::ClampTerminal ? "clamp_terminal"
                                                                      : "extrapolate_linear");
    w.kv("time_stride", cfg.time_stride);
    w.end_object();
    w.kv("cfl_dt", cfg.grid.cfl_limit(band));
    w.key("band");
    detail::write_band(w, band);
    if (cfg.terminal) w.kv("terminal", cfg.terminal.source);
    if (conditional_value) {
        w.key("conditional");
        w.begin_object();
        w.kv("times", cfg.conditional->times);
        w.kv("payoff", cfg.conditional->payoff.source);
        w.kv("t", cfg.conditional->query.t);
        w.kv("x", cfg.conditional->query.x);
        if (cfg.conditional->query.x1) w.kv("x1", *cfg.conditional->query.x1);
        w.kv("value", *conditional_value);
        w.end_object();
    }
    w.end_object();
    detail::emit(cfg.output_dir / "summary.json", w.str());

    std::cout << "value_at_origin = " << fmt_g17(value_at_origin) << "\n";
    return 0;
}

/// Worst-case Monte Carlo estimate of a terminal payoff over the control
/// family; writes estimate.json and, when dump_paths is set, a row-capped
/// paths.csv with the argmax control's scenarios.
inline int run_simulate(const ExperimentConfig& cfg) {
    const VolatilityBand& band = cfg.require_band();
    if (!cfg.payoff) throw Error("simulate: a 'payoff' expression is required");

    CoefficientSet coeffs;
    const CoefficientSet* coeffs_ptr = nullptr;
    if (cfg.coefficients) {
        detail::require_1d(band, "simulate");
        coeffs = cfg.coefficients->build();
        coeffs_ptr = &coeffs;
    }

    // The payoff expression sees t = terminal time, x = first state component.
    Payoff payoff = terminal_payoff(
        [ast = cfg.payoff.ast, T = cfg.time.t_end](double x) { return expr::eval(ast, T, x); });

    UpperExpectation est =
        estimate_upper_expectation(payoff, coeffs_ptr, band, cfg.time, cfg.n_controls, cfg.n_mc,
                                   cfg.seed, cfg.x0, cfg.extra_policy);

    JsonWriter w;
    w.begin_object();
    w.kv("command", "simulate");
    w.kv("seed", cfg.seed);
    w.kv("payoff", cfg.payoff.source);
    w.kv("value", est.value);
    w.kv("std_error", est.std_error);
    w.kv("argmax_control", est.argmax_control);
    w.kv("control_means", est.control_means);
    w.kv("control_std_errors", est.control_std_errors);
    w.kv("n_controls", cfg.n_controls);
    w.kv("n_mc", cfg.n_mc);
    w.key("time");
    w.begin_object();
    w.kv("t_start", cfg.time.t_start);
    w.kv("t_end", cfg.time.t_end);
    w.kv("n_steps", cfg.time.n_steps);
    w.kv("dt", cfg.time.dt());
    w.end_object();
    w.key("band");
    detail::write_band(w, band);
    w.end_object();
    detail::emit(cfg.output_dir / "estimate.json", w.str());

    if (cfg.dump_paths) {
        const int d = band.dim();
        std::ostringstream os;
        os << "path,k,t";
        for (int i = 1; i <= d; ++i) os << ",B_" << i;
        for (int i = 1; i <= d; ++i)
            for (int j = 1; j <= d; ++j) os << ",QV_" << i << j;
        if (coeffs_ptr)
            for (int i = 1; i <= d; ++i) os << ",X_" << i;
        os << '\n';

        Vec start = cfg.x0.size() ? cfg.x0 : Vec(Vec::Zero(d));
        const auto& control = est.controls[static_cast<std::size_t>(est.argmax_control)];
        long rows = 0;
        for (int m = 0; m < cfg.n_mc && rows < cfg.max_dump_rows; ++m) {
            std::uint64_t index = static_cast<std::uint64_t>(est.argmax_control) *
                                      static_cast<std::uint64_t>(cfg.n_mc) +
                                  static_cast<std::uint64_t>(m) + 1;
            ScenarioPath path = simulate_gbm(control, cfg.seed, index);
            if (coeffs_ptr) euler_gsde(*coeffs_ptr, start, path);
            for (int k = 0; k <= path.n_steps() && rows < cfg.max_dump_rows; ++k, ++rows) {
                os << m << ',' << k << ',' << fmt_g17(path.grid.time(k));
                for (int i = 0; i < d; ++i) os << ',' << fmt_g17(path.B(i, k));
                auto q = path.qv_total(k);
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) os << ',' << fmt_g17(q(i, j));
                if (coeffs_ptr)
                    for (int i = 0; i < d; ++i) os << ',' << fmt_g17(path.X(i, k));
                os << '\n';
            }
        }
        detail::emit(cfg.output_dir / "paths.csv", os.str());
    }

    std::cout << "upper expectation = " << fmt_g17(est.value) << " (SE "
              << fmt_g17(est.std_error) << ")\n";
    return 0;
}

/// Path-independence verification: PDE residuals on the configured
/// rectangle, pathwise defects across a scenario ensemble, and the defect's
/// convergence order across the configured dt list. Writes verify.json.
/// Returns 0 when all thresholds hold, 2 when the functional is falsified.
inline int run_verify(const ExperimentConfig& cfg) {
    const VolatilityBand& band = cfg.require_band();
    if (std::abs(cfg.time.t_start) > 1e-15)
        throw Error("verify: time.t_start must be 0");

    // Assemble (V, spec, coeffs) either from the harmonic construction or
    // from explicit expression blocks.
    ValueFunction V;
    FunctionalSpec spec;
    CoefficientSet coeffs;
    if (cfg.harmonic) {
        detail::HarmonicBundle bundle = detail::build_harmonic(*cfg.harmonic, band);
        V = bundle.construction.value;
        spec = bundle.construction.spec;
        coeffs = bundle.coeffs;
    } else {
        if (!cfg.value_function)
            throw Error("verify: needs a 'value_function' or 'harmonic_example' block");
        if (!cfg.functional)
            throw Error("verify: needs a 'functional' or 'harmonic_example' block");
        detail::require_1d(band, "verify");
        V = cfg.value_function->build();
        if (cfg.coefficients)
            coeffs = cfg.coefficients->build();
        else
            coeffs = canonical_coefficients(band.dim());
        spec = cfg.functional->girsanov ? girsanov_spec(coeffs) : cfg.functional->build();
    }

    const VerifyConfig& vc = cfg.verify;
    PdeResidualReport pde = pde_residuals(V, coeffs, spec, band, vc.eval_points());

    std::vector<ScenarioPath> scenarios =
        make_scenarios(band, cfg.time, vc.n_scenarios, cfg.seed, &coeffs, cfg.x0);
    PathwiseReport pathwise = pathwise_residual(V, spec, band, scenarios, cfg.time.t_start);

    ConvergenceReport conv = convergence_order(V, &coeffs, spec, band, vc.dt_list,
                                               vc.n_scenarios, cfg.seed, cfg.time.t_end, cfg.x0);

    const VerifyThresholds& th = vc.thresholds;
    bool pde_ok = pde.max_residual() <= th.pde;
    bool finest_ok = conv.degenerate || conv.ensemble_maxes.back() <= th.finest_max;
    bool slope_ok = conv.degenerate || conv.slope >= th.slope_min;
    bool pass = pde_ok && finest_ok && slope_ok;

    std::vector<std::string> flags;
    if (!pde_ok) flags.push_back("pde residual above tolerance");
    if (!finest_ok) flags.push_back("pathwise defect above tolerance");
    if (!slope_ok) flags.push_back("convergence slope below threshold");
    if (!conv.degenerate && conv.slope <= th.plateau_slope) flags.push_back("pathwise plateau");

    JsonWriter w;
    w.begin_object();
    w.kv("command", "verify");
    w.kv("verdict", pass ? "pass" : "falsified");
    w.key("flags");
    w.begin_array();
    for (const auto& f : flags) w.value(f);
    w.end_array();
    w.kv("seed", cfg.seed);
    w.kv("n_scenarios", vc.n_scenarios);
    w.kv("horizon", cfg.time.t_end);
    w.key("pde");
    w.begin_object();
    w.kv("sup_r1", pde.sup_r1);
    w.kv("sup_r2", pde.sup_r2);
    w.kv("sup_r3", pde.sup_r3);
    w.kv("max_residual", pde.max_residual());
    w.key("argmax_r1");
    detail::write_point(w, pde.argmax_r1);
    w.key("argmax_r2");
    detail::write_point(w, pde.argmax_r2);
    w.key("argmax_r3");
    detail::write_point(w, pde.argmax_r3);
    w.kv("n_points", static_cast<std::int64_t>(pde.n_points));
    w.end_object();
    w.key("pathwise");
    w.begin_object();
    w.kv("dt", pathwise.dt);
    w.kv("ensemble_max", pathwise.ensemble_max);
    w.kv("ensemble_mean", pathwise.ensemble_mean);
    w.end_object();
    w.key("convergence");
    w.begin_object();
    w.kv("dt", conv.dts);
    w.kv("ensemble_max", conv.ensemble_maxes);
    w.kv("slope", conv.slope);
    w.kv("degenerate", conv.degenerate);
    w.end_object();
    w.key("thresholds");
    w.begin_object();
    w.kv("pde", th.pde);
    w.kv("finest_max", th.finest_max);
    w.kv("slope_min", th.slope_min);
    w.kv("plateau_slope", th.plateau_slope);
    w.end_object();
    w.key("band");
    detail::write_band(w, band);
    w.end_object();
    detail::emit(cfg.output_dir / "verify.json", w.str());

    std::cout << "verdict: " << (pass ? "pass" : "falsified");
    for (const auto& f : flags) std::cout << " [" << f << "]";
    std::cout << "\n";
    return pass ? 0 : 2;
}

/// Build the harmonic profile and its induced path-independent functional;
/// writes profile.csv, example.json and a ready-to-run verify config.
inline int run_example(const ExperimentConfig& cfg) {
    const VolatilityBand& band = cfg.require_band();
    if (!cfg.harmonic) throw Error("example: a 'harmonic_example' block is required");
    const HarmonicConfig& hc = *cfg.harmonic;

    detail::HarmonicBundle bundle = detail::build_harmonic(hc, band);
    const HarmonicProfile& profile = *bundle.profile;

    std::ostringstream csv;
    profile.write_csv(csv);
    detail::emit(cfg.output_dir / "profile.csv", csv.str());

    double residual = check_harmonic(profile, hc.h.fn_x(), hc.sigma.fn_x());

    JsonWriter w;
    w.begin_object();
    w.kv("command", "example");
    w.kv("alpha", 0.0);
    w.kv("beta", 2.0);
    w.kv("h", hc.h.source);
    w.kv("sigma", hc.sigma.source);
    w.kv("phi", hc.phi.source);
    w.kv("phi_prime", hc.phi_prime.source);
    if (hc.b) w.kv("b", hc.b.source);
    w.key("profile");
    w.begin_object();
    w.kv("x_min", hc.x_min);
    w.kv("x_max", hc.x_max);
    w.kv("nx", hc.nx);
    w.kv("v0_at_0", hc.v0_at_0);
    w.kv("v0_prime_at_0", hc.v0_prime_at_0);
    w.kv("v0_at_x_min", profile.V0(hc.x_min));
    w.kv("v0_at_x_max", profile.V0(hc.x_max));
    w.end_object();
    w.kv("harmonic_residual", residual);
    w.kv("f_perturbation", hc.f_perturbation);
    w.key("band");
    detail::write_band(w, band);
    w.end_object();
    detail::emit(cfg.output_dir / "example.json", w.str());

    // A complete configuration for `gcalc verify`, echoing this run.
    JsonWriter v;
    v.begin_object();
    v.kv("seed", cfg.seed);
    v.kv("output_dir", cfg.output_dir.string());
    v.key("band");
    detail::write_band(v, band);
    v.key("time");
    v.begin_object();
    v.kv("t_start", cfg.time.t_start);
    v.kv("t_end", cfg.time.t_end);
    v.kv("n_steps", cfg.time.n_steps);
    v.end_object();
    if (cfg.x0.size()) {
        v.key("x0");
        v.begin_array();
        for (int i = 0; i < cfg.x0.size(); ++i) v.value(cfg.x0(i));
        v.end_array();
    }
    v.key("harmonic_example");
    v.begin_object();
    v.kv("h", hc.h.source);
    v.kv("sigma", hc.sigma.source);
    v.kv("phi", hc.phi.source);
    v.kv("phi_prime", hc.phi_prime.source);
    if (hc.b) v.kv("b", hc.b.source);
    v.kv("x_min", hc.x_min);
    v.kv("x_max", hc.x_max);
    v.kv("nx", hc.nx);
    v.kv("v0_at_0", hc.v0_at_0);
    v.kv("v0_prime_at_0", hc.v0_prime_at_0);
    v.kv("f_perturbation", hc.f_perturbation);
    v.end_object();
    v.key("verify");
    v.begin_object();
    v.kv("n_scenarios", cfg.verify.n_scenarios);
    v.kv("dt_list", cfg.verify.dt_list);
    v.key("eval_points");
    v.begin_object();
    v.kv("t_min", cfg.verify.t_min);
    v.kv("t_max", cfg.verify.t_max);
    v.kv("nt", cfg.verify.nt);
    v.kv("x_min", cfg.verify.x_min);
    v.kv("x_max", cfg.verify.x_max);
    v.kv("nx", cfg.verify.nx);
    v.end_object();
    v.key("thresholds");
    v.begin_object();
    v.kv("pde", cfg.verify.thresholds.pde);
    v.kv("finest_max", cfg.verify.thresholds.finest_max);
    v.kv("slope_min", cfg.verify.thresholds.slope_min);
    v.kv("plateau_slope", cfg.verify.thresholds.plateau_slope);
    v.end_object();
    v.end_object();
    v.end_object();
    detail::emit(cfg.output_dir / "verify_config.json", v.str());

    std::cout << "V0(" << fmt_g17(hc.x_max) << ") - V0(" << fmt_g17(hc.x_min)
              << ") = " << fmt_g17(profile.V0(hc.x_max) - profile.V0(hc.x_min)) << "\n";
    return 0;
}

}  // namespace gcalc
