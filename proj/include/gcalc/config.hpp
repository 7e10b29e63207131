#pragma once

// Experiment configuration. One JSON document drives every CLI command;
// each command validates that the blocks it needs are present. Matrices
// are row-major nested arrays (a bare number means that multiple of the
// identity), function-valued fields are expression strings over (t, x).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gcalc/band.hpp"
#include "gcalc/common.hpp"
#include "gcalc/expr.hpp"
#include "gcalc/functional.hpp"
#include "gcalc/gheat.hpp"
#include "gcalc/scenario.hpp"
#include "gcalc/value_function.hpp"

namespace gcalc {

/// Parsed expression plus its source text, kept for echoing into reports.
struct ConfiguredExpr {
    std::string source;
    expr::Ast ast;

    explicit operator bool() const { return static_cast<bool>(ast); }
    double operator()(double t, double x) const { return expr::eval(ast, t, x); }

    /// As a scalar function of (t, x); empty expression gives a null function.
    std::function<double(double, double)> fn() const {
        if (!ast) return {};
        return [a = ast](double t, double x) { return expr::eval(a, t, x); };
    }
    /// As a function of x alone at fixed t = 0 (profile data is autonomous).
    std::function<double(double)> fn_x() const {
        if (!ast) return {};
        return [a = ast](double x) { return expr::eval(a, 0.0, x); };
    }
    /// As a function of t alone at fixed x = 0.
    std::function<double(double)> fn_t() const {
        if (!ast) return {};
        return [a = ast](double t) { return expr::eval(a, t, 0.0); };
    }
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void cfg_fail(const std::string& where, const std::string& what) {
    throw Error("config: " + where + ": " + what);
}

inline const json* find(const json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

/// Dotted context path; the root context is the empty string.
inline std::string sub(const std::string& where, const char* key) {
    return where.empty() ? std::string(key) : where + "." + key;
}

inline const json& req(const json& j, const char* key, const std::string& where) {
    const json* v = find(j, key);
    if (!v) cfg_fail(where, std::string("missing required key '") + key + "'");
    return *v;
}

inline double num(const json& v, const std::string& where) {
    if (!v.is_number()) cfg_fail(where, "expected a number");
    return v.get<double>();
}

inline double num_or(const json& j, const char* key, double fallback, const std::string& where) {
    const json* v = find(j, key);
    return v ? num(*v, sub(where, key)) : fallback;
}

inline int int_or(const json& j, const char* key, int fallback, const std::string& where) {
    const json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) cfg_fail(sub(where, key), "expected an integer");
    return v->get<int>();
}

inline bool bool_or(const json& j, const char* key, bool fallback, const std::string& where) {
    const json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_boolean()) cfg_fail(sub(where, key), "expected a boolean");
    return v->get<bool>();
}

inline std::string str(const json& v, const std::string& where) {
    if (!v.is_string()) cfg_fail(where, "expected a string");
    return v.get<std::string>();
}

/// A number is shorthand for that multiple of the identity.
inline Mat matrix(const json& v, int d, const std::string& where) {
    if (v.is_number()) return v.get<double>() * Mat::Identity(d, d);
    if (!v.is_array() || static_cast<int>(v.size()) != d)
        cfg_fail(where, format("expected a number or %d nested rows", d));
    Mat m(d, d);
    for (int i = 0; i < d; ++i) {
        const json& row = v[i];
        if (!row.is_array() || static_cast<int>(row.size()) != d)
            cfg_fail(where, format("row %d must hold %d numbers", i, d));
        for (int k = 0; k < d; ++k) m(i, k) = num(row[k], where);
    }
    return m;
}

inline ConfiguredExpr expression(const json& v, const std::string& where) {
    ConfiguredExpr e;
    e.source = str(v, where);
    try {
        e.ast = expr::parse(e.source);
    } catch (const expr::ParseError& err) {
        cfg_fail(where, err.what());
    }
    return e;
}

inline ConfiguredExpr expression_or(const json& j, const char* key, const std::string& where) {
    const json* v = find(j, key);
    return v ? expression(*v, sub(where, key)) : ConfiguredExpr{};
}

}  // namespace detail

/// Evenly spaced nodes, endpoints included.
inline std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 2 || !(lo < hi)) throw Error("linspace: need n >= 2 and lo < hi");
    std::vector<double> x(n);
    double dx = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) x[i] = lo + i * dx;
    x.back() = hi;
    return x;
}

struct ConditionalConfig {
    std::vector<double> times;   // one or two fixing times
    ConfiguredExpr payoff;       // one time: x = path value; two: t = first, x = second
    ConditionalQuery query;
    int x1_stride = 4;
};

struct CoefficientConfig {
    ConfiguredExpr b, h, sigma;  // scalar (d = 1) expressions over (t, x)
    double lipschitz = 0.0;

    CoefficientSet build() const {
        if (!sigma) throw Error("config: coefficients.sigma is required");
        return CoefficientSet::make_1d(b.fn(), h.fn(), sigma.fn(), lipschitz);
    }
};

struct FunctionalConfig {
    double alpha = 0.0, beta = 0.0;
    ConfiguredExpr f, g;  // scalar (d = 1) expressions
    bool girsanov = false;

    FunctionalSpec build() const {
        FunctionalSpec spec;
        spec.alpha = alpha;
        spec.beta = beta;
        if (f) {
            spec.f = [e = f.ast](double t, const Vec& x) {
                return Mat(Mat::Constant(1, 1, expr::eval(e, t, x(0))));
            };
        }
        if (g) {
            spec.g = [e = g.ast](double t, const Vec& x) {
                return Vec(Vec::Constant(1, expr::eval(e, t, x(0))));
            };
        }
        return spec;
    }
};

struct ValueFunctionConfig {
    bool finite_difference = false;
    ConfiguredExpr v, v_t, v_x, v_xx;
    double hx = 1e-4, ht = 1e-4;

    ValueFunction build() const {
        if (!v) throw Error("config: value_function.v is required");
        if (finite_difference) {
            return ValueFunction::finite_difference(
                [e = v.ast](double t, const Vec& x) { return expr::eval(e, t, x(0)); }, hx, ht);
        }
        if (!v_t || !v_x || !v_xx)
            throw Error("config: analytic value_function needs v_t, v_x and v_xx");
        return ValueFunction::analytic_1d(v.fn(), v_t.fn(), v_x.fn(), v_xx.fn());
    }
};

/// The worked construction: an operator-harmonic profile V0 from (h, sigma)
/// and the induced path-independent functional for V = phi(t) V0(x).
struct HarmonicConfig {
    ConfiguredExpr h, sigma;      // autonomous, evaluated in x
    ConfiguredExpr phi, phi_prime;
    ConfiguredExpr b;             // optional extra drift
    double x_min = -240.0, x_max = 240.0;
    int nx = 48001;
    double v0_at_0 = 0.0, v0_prime_at_0 = 1.0;
    double f_perturbation = 0.0;  // added to f; nonzero breaks path independence
};

struct VerifyThresholds {
    double pde = 1e-8;
    double finest_max = 0.02;
    double slope_min = 0.4;
    double plateau_slope = 0.1;  // at or below this the defect is flat in dt
};

struct VerifyConfig {
    int n_scenarios = 256;
    std::vector<double> dt_list = {1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512, 1.0 / 1024};
    // Rectangle of PDE evaluation points.
    double t_min = 0.0, t_max = 1.0;
    int nt = 9;
    double x_min = -2.0, x_max = 2.0;
    int nx = 17;
    VerifyThresholds thresholds;

    std::vector<std::pair<double, Vec>> eval_points() const {
        auto axis = [](double lo, double hi, int n) {
            return n <= 1 ? std::vector<double>{lo} : linspace(lo, hi, n);
        };
        std::vector<std::pair<double, Vec>> pts;
        pts.reserve(static_cast<std::size_t>(nt) * nx);
        for (double t : axis(t_min, t_max, nt))
            for (double x : axis(x_min, x_max, nx)) pts.emplace_back(t, Vec::Constant(1, x));
        return pts;
    }
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";

    std::optional<VolatilityBand> band;

    // Backward solver settings.
    Grid1D grid;
    bool has_grid = false;
    int time_stride = 1;
    double horizon = 1.0;
    ConfiguredExpr terminal;  // phi(x)
    std::optional<ConditionalConfig> conditional;

    // Scenario settings.
    TimeGrid time{0.0, 1.0, 256};
    Vec x0;
    std::optional<CoefficientConfig> coefficients;
    ConfiguredExpr payoff;  // applied to the terminal state, x = first component
    int n_controls = 8;
    int n_mc = 10000;
    ControlPolicy extra_policy = ControlPolicy::piecewise_random(8);
    bool dump_paths = false;
    long max_dump_rows = 20000;

    std::optional<FunctionalConfig> functional;
    std::optional<ValueFunctionConfig> value_function;
    std::optional<HarmonicConfig> harmonic;
    VerifyConfig verify;

    const VolatilityBand& require_band() const {
        if (!band) throw Error("config: a 'band' block is required for this command");
        return *band;
    }
};

namespace detail {

inline ControlPolicy policy(const json& j, int dim, const std::string& where) {
    std::string kind = str(req(j, "kind", where), where + ".kind");
    if (kind == "constant_random") return ControlPolicy::constant_random();
    if (kind == "piecewise_random")
        return ControlPolicy::piecewise_random(int_or(j, "pieces", 8, where));
    if (kind == "bang_bang") {
        const json& sched = req(j, "sign_schedule", where);
        if (!sched.is_array() || sched.empty())
            cfg_fail(where + ".sign_schedule", "expected a non-empty array of signs");
        std::vector<int> signs;
        for (const auto& s : sched) signs.push_back(s.get<int>());
        return ControlPolicy::bang_bang(std::move(signs));
    }
    if (kind == "fixed")
        return ControlPolicy::fixed(matrix(req(j, "gamma", where), dim, where + ".gamma"));
    cfg_fail(where + ".kind", "unknown policy kind '" + kind + "'");
}

}  // namespace detail

/// Parse a full configuration document. Band invariants are re-validated by
/// the VolatilityBand constructor; every expression is parsed eagerly so a
/// bad config fails before any computation starts.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using namespace detail;
    if (!j.is_object()) cfg_fail("root", "expected a JSON object");
    ExperimentConfig cfg;

    if (const json* v = find(j, "seed")) {
        if (!v->is_number_unsigned()) cfg_fail("seed", "expected a non-negative integer");
        cfg.seed = v->get<std::uint64_t>();
    }
    if (const json* v = find(j, "output_dir")) cfg.output_dir = str(*v, "output_dir");

    int d = 1;
    if (const json* v = find(j, "band")) {
        const std::string where = "band";
        d = int_or(*v, "dim", 1, where);
        if (d < 1) cfg_fail("band.dim", "dimension must be >= 1");
        Mat lo = matrix(req(*v, "sigma_lower", where), d, where + ".sigma_lower");
        Mat up = matrix(req(*v, "sigma_upper", where), d, where + ".sigma_upper");
        cfg.band.emplace(lo, up);
    }

    if (const json* v = find(j, "grid")) {
        const std::string where = "grid";
        cfg.has_grid = true;
        cfg.grid.x_min = num_or(*v, "x_min", cfg.grid.x_min, where);
        cfg.grid.x_max = num_or(*v, "x_max", cfg.grid.x_max, where);
        cfg.grid.nx = int_or(*v, "nx", cfg.grid.nx, where);
        cfg.grid.dt = num_or(*v, "dt", cfg.grid.dt, where);
        cfg.time_stride = int_or(*v, "time_stride", 1, where);
        if (const json* b = find(*v, "boundary")) {
            std::string name = str(*b, where + ".boundary");
            if (name == "extrapolate_linear")
                cfg.grid.boundary = BoundaryRule::ExtrapolateLinear;
            else if (name == "clamp_terminal")
                cfg.grid.boundary = BoundaryRule::ClampTerminal;
            else
                cfg_fail(where + ".boundary", "unknown rule '" + name + "'");
        }
    }

    cfg.horizon = num_or(j, "horizon", cfg.horizon, "horizon");
    cfg.terminal = expression_or(j, "terminal", "");

    if (const json* v = find(j, "conditional")) {
        const std::string where = "conditional";
        ConditionalConfig c;
        const json& times = req(*v, "times", where);
        if (!times.is_array() || times.empty() || times.size() > 2)
            cfg_fail(where + ".times", "expected one or two fixing times");
        for (const auto& t : times) c.times.push_back(num(t, where + ".times"));
        c.payoff = expression(req(*v, "payoff", where), where + ".payoff");
        c.query.t = num_or(*v, "t", 0.0, where);
        c.query.x = num_or(*v, "x", 0.0, where);
        if (const json* x1 = find(*v, "x1")) c.query.x1 = num(*x1, where + ".x1");
        c.x1_stride = int_or(*v, "x1_stride", 4, where);
        cfg.conditional = std::move(c);
    }

    if (const json* v = find(j, "time")) {
        const std::string where = "time";
        cfg.time.t_start = num_or(*v, "t_start", 0.0, where);
        cfg.time.t_end = num_or(*v, "t_end", 1.0, where);
        cfg.time.n_steps = int_or(*v, "n_steps", 256, where);
        cfg.time.validate();
    }

    if (const json* v = find(j, "x0")) {
        if (v->is_number()) {
            cfg.x0 = Vec::Constant(1, v->get<double>());
        } else if (v->is_array()) {
            cfg.x0 = Vec(v->size());
            for (std::size_t i = 0; i < v->size(); ++i) cfg.x0(i) = num((*v)[i], "x0");
        } else {
            cfg_fail("x0", "expected a number or an array");
        }
    }

    if (const json* v = find(j, "coefficients")) {
        const std::string where = "coefficients";
        CoefficientConfig c;
        c.b = expression_or(*v, "b", where);
        c.h = expression_or(*v, "h", where);
        c.sigma = expression_or(*v, "sigma", where);
        c.lipschitz = num_or(*v, "lipschitz", 0.0, where);
        cfg.coefficients = std::move(c);
    }

    cfg.payoff = expression_or(j, "payoff", "");
    cfg.n_controls = int_or(j, "n_controls", cfg.n_controls, "n_controls");
    cfg.n_mc = int_or(j, "n_mc", cfg.n_mc, "n_mc");
    if (const json* v = find(j, "extra_policy")) cfg.extra_policy = detail::policy(*v, d, "extra_policy");
    cfg.dump_paths = bool_or(j, "dump_paths", false, "dump_paths");
    cfg.max_dump_rows = int_or(j, "max_dump_rows", 20000, "max_dump_rows");

    if (const json* v = find(j, "functional")) {
        const std::string where = "functional";
        FunctionalConfig f;
        f.alpha = num_or(*v, "alpha", 0.0, where);
        f.beta = num_or(*v, "beta", 0.0, where);
        f.f = expression_or(*v, "f", where);
        f.g = expression_or(*v, "g", where);
        f.girsanov = bool_or(*v, "girsanov", false, where);
        cfg.functional = std::move(f);
    }

    if (const json* v = find(j, "value_function")) {
        const std::string where = "value_function";
        ValueFunctionConfig vf;
        std::string mode = "analytic";
        if (const json* m = find(*v, "mode")) mode = str(*m, where + ".mode");
        if (mode == "finite_difference")
            vf.finite_difference = true;
        else if (mode != "analytic")
            cfg_fail(where + ".mode", "unknown mode '" + mode + "'");
        vf.v = expression_or(*v, "v", where);
        vf.v_t = expression_or(*v, "v_t", where);
        vf.v_x = expression_or(*v, "v_x", where);
        vf.v_xx = expression_or(*v, "v_xx", where);
        vf.hx = num_or(*v, "hx", 1e-4, where);
        vf.ht = num_or(*v, "ht", 1e-4, where);
        cfg.value_function = std::move(vf);
    }

    if (const json* v = find(j, "harmonic_example")) {
        const std::string where = "harmonic_example";
        HarmonicConfig h;
        h.h = expression(req(*v, "h", where), where + ".h");
        h.sigma = expression(req(*v, "sigma", where), where + ".sigma");
        h.phi = expression(req(*v, "phi", where), where + ".phi");
        h.phi_prime = expression(req(*v, "phi_prime", where), where + ".phi_prime");
        h.b = expression_or(*v, "b", where);
        h.x_min = num_or(*v, "x_min", h.x_min, where);
        h.x_max = num_or(*v, "x_max", h.x_max, where);
        h.nx = int_or(*v, "nx", h.nx, where);
        h.v0_at_0 = num_or(*v, "v0_at_0", h.v0_at_0, where);
        h.v0_prime_at_0 = num_or(*v, "v0_prime_at_0", h.v0_prime_at_0, where);
        h.f_perturbation = num_or(*v, "f_perturbation", 0.0, where);
        cfg.harmonic = std::move(h);
    }

    if (const json* v = find(j, "verify")) {
        const std::string where = "verify";
        VerifyConfig& vc = cfg.verify;
        vc.n_scenarios = int_or(*v, "n_scenarios", vc.n_scenarios, where);
        if (const json* dts = find(*v, "dt_list")) {
            if (!dts->is_array() || dts->size() < 3)
                cfg_fail(where + ".dt_list", "expected at least three step sizes");
            vc.dt_list.clear();
            for (const auto& x : *dts) vc.dt_list.push_back(num(x, where + ".dt_list"));
        }
        if (const json* pts = find(*v, "eval_points")) {
            const std::string pw = where + ".eval_points";
            vc.t_min = num_or(*pts, "t_min", vc.t_min, pw);
            vc.t_max = num_or(*pts, "t_max", vc.t_max, pw);
            vc.nt = int_or(*pts, "nt", vc.nt, pw);
            vc.x_min = num_or(*pts, "x_min", vc.x_min, pw);
            vc.x_max = num_or(*pts, "x_max", vc.x_max, pw);
            vc.nx = int_or(*pts, "nx", vc.nx, pw);
        }
        if (const json* th = find(*v, "thresholds")) {
            const std::string tw = where + ".thresholds";
            vc.thresholds.pde = num_or(*th, "pde", vc.thresholds.pde, tw);
            vc.thresholds.finest_max = num_or(*th, "finest_max", vc.thresholds.finest_max, tw);
            vc.thresholds.slope_min = num_or(*th, "slope_min", vc.thresholds.slope_min, tw);
            vc.thresholds.plateau_slope =
                num_or(*th, "plateau_slope", vc.thresholds.plateau_slope, tw);
        }
    }

    return cfg;
}

inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
    return parse_config(j);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("config: cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace gcalc
