// Additive functionals: left-endpoint evaluation, the drift-removal
// special case, and the alpha normalization.

#include <catch2/catch_amalgamated.hpp>

#include "gcalc/functional.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

using namespace gcalc;

namespace {

const VolatilityBand kBand = VolatilityBand::scalar(1.0, 2.0);

TimeGrid unit_grid(int n = 256) {
    TimeGrid g;
    g.t_start = 0.0;
    g.t_end = 1.0;
    g.n_steps = n;
    return g;
}

ScenarioPath sample_path(const VolatilityBand& band, const ControlPolicy& policy,
                         std::uint64_t seed = 11, std::uint64_t index = 1, int n = 256) {
    auto c = sample_control(band, unit_grid(n), policy, seed, 0);
    return simulate_gbm(c, seed, index);
}

std::function<Mat(double, const Vec&)> const_f(double v) {
    return [v](double, const Vec&) {
        Mat m(1, 1);
        m(0, 0) = v;
        return m;
    };
}

std::function<Vec(double, const Vec&)> const_g(double v) {
    return [v](double, const Vec&) {
        Vec g(1);
        g(0) = v;
        return g;
    };
}

} // namespace

TEST_CASE("zero functional is identically zero") {
    auto path = sample_path(kBand, ControlPolicy::piecewise_random(8));
    FunctionalSpec spec; // f, g absent
    spec.alpha = 1.0;
    spec.beta = 1.0;
    auto tr = evaluate(spec, kBand, path);
    REQUIRE(tr.A.size() == 257);
    REQUIRE(tr.A.front() == 0.0);
    for (double a : tr.A) REQUIRE(a == 0.0);
    REQUIRE(tr.all_g_exact);
    REQUIRE(tr.all_g_converged);
}

TEST_CASE("deterministic beta term integrates G(f) exactly") {
    // f = identity, band (1,2): G(1) = u^2/2 = 2, so A(1) = beta * 2.
    // n, dt and the increment are dyadic, so the sum has no rounding.
    auto path = sample_path(kBand, ControlPolicy::constant_random());
    FunctionalSpec spec;
    spec.alpha = 0.0;
    spec.beta = 1.0;
    spec.f = const_f(1.0);
    auto tr = evaluate(spec, kBand, path);
    REQUIRE(tr.A.back() == 2.0);
    REQUIRE(tr.all_g_exact);
}

TEST_CASE("alpha term accumulates the quadratic variation exactly") {
    Mat up(1, 1);
    up(0, 0) = 2.0;
    auto path = sample_path(kBand, ControlPolicy::fixed(up));
    FunctionalSpec spec;
    spec.alpha = 1.0;
    spec.beta = 0.0;
    spec.f = const_f(1.0);
    auto tr = evaluate(spec, kBand, path);
    REQUIRE(tr.A.back() == 4.0); // sum of qv increments = QV(1) = gamma^2
}

TEST_CASE("unit g reproduces the driver path bitwise") {
    auto path = sample_path(kBand, ControlPolicy::piecewise_random(4), 77, 3);
    FunctionalSpec spec;
    spec.g = const_g(1.0);
    auto tr = evaluate(spec, kBand, path);
    for (int k = 0; k <= path.n_steps(); ++k)
        REQUIRE(tr.A[static_cast<std::size_t>(k)] == path.B(0, k));
}

TEST_CASE("prefix of a path yields the prefix of the trace") {
    const int n = 256;
    auto path = sample_path(kBand, ControlPolicy::piecewise_random(8), 5, 2, n);
    FunctionalSpec spec;
    spec.alpha = 1.0;
    spec.beta = -1.0;
    spec.f = [](double t, const Vec& x) {
        Mat m(1, 1);
        m(0, 0) = 0.5 + 0.1 * t + 0.01 * x(0) * x(0);
        return m;
    };
    spec.g = [](double t, const Vec& x) {
        Vec g(1);
        g(0) = std::sin(t) + 0.2 * x(0);
        return g;
    };
    auto full = evaluate(spec, kBand, path);

    ScenarioPath half;
    half.grid = unit_grid(n);
    half.grid.t_end = 0.5;
    half.grid.n_steps = n / 2;
    half.dB = path.dB.leftCols(n / 2);
    half.B = path.B.leftCols(n / 2 + 1);
    half.qv = path.qv.leftCols(n / 2);
    half.QV = path.QV.leftCols(n / 2 + 1);
    auto pre = evaluate(spec, kBand, half);
    REQUIRE(pre.A.size() == static_cast<std::size_t>(n / 2) + 1);
    for (std::size_t k = 0; k < pre.A.size(); ++k) REQUIRE(pre.A[k] == full.A[k]);
}

TEST_CASE("additivity across a split point") {
    // Increments over [u, t] computed from a shifted suffix path agree with
    // the difference of the full trace up to accumulation roundoff.
    const int n = 256;
    auto path = sample_path(kBand, ControlPolicy::piecewise_random(8), 19, 4, n);
    FunctionalSpec spec;
    spec.alpha = 2.0;
    spec.beta = 1.0;
    spec.f = [](double t, const Vec&) { return Mat(Mat::Constant(1, 1, std::cos(t))); };
    spec.g = [](double t, const Vec&) { return Vec(Vec::Constant(1, t * t)); };
    auto full = evaluate(spec, kBand, path);

    ScenarioPath tail;
    tail.grid = unit_grid(n);
    tail.grid.t_start = 0.5;
    tail.grid.n_steps = n / 2;
    tail.dB = path.dB.rightCols(n / 2);
    tail.B = path.B.rightCols(n / 2 + 1);
    tail.qv = path.qv.rightCols(n / 2);
    tail.QV = path.QV.rightCols(n / 2 + 1);
    auto suf = evaluate(spec, kBand, tail);
    for (int j = 0; j <= n / 2; ++j) {
        double lhs = full.A[static_cast<std::size_t>(n / 2 + j)] - full.A[n / 2];
        REQUIRE(lhs == Catch::Approx(suf.A[static_cast<std::size_t>(j)]).margin(5e-13));
    }
}

TEST_CASE("doubling g doubles the trace bitwise") {
    auto path = sample_path(kBand, ControlPolicy::constant_random(), 23, 9);
    FunctionalSpec base;
    base.g = [](double t, const Vec& x) { return Vec(Vec::Constant(1, 0.3 * t + x(0))); };
    FunctionalSpec twice = base;
    twice.g = [g = base.g](double t, const Vec& x) { return Vec(2.0 * g(t, x)); };
    auto a = evaluate(base, kBand, path);
    auto b = evaluate(twice, kBand, path);
    for (std::size_t k = 0; k < a.A.size(); ++k) REQUIRE(b.A[k] == 2.0 * a.A[k]);
}

TEST_CASE("linearity in g") {
    auto path = sample_path(kBand, ControlPolicy::piecewise_random(8), 31, 6);
    auto g1 = [](double t, const Vec& x) { return Vec(Vec::Constant(1, std::sin(3.0 * t) + 0.1 * x(0))); };
    auto g2 = [](double t, const Vec& x) { return Vec(Vec::Constant(1, 0.7 - 0.2 * t * x(0))); };
    FunctionalSpec s0, s1, s2, s12;
    s0.alpha = s1.alpha = s2.alpha = s12.alpha = 1.0;
    s0.beta = s1.beta = s2.beta = s12.beta = -0.5;
    auto f = const_f(0.8);
    s0.f = s1.f = s2.f = s12.f = f;
    s1.g = g1;
    s2.g = g2;
    s12.g = [g1, g2](double t, const Vec& x) { return Vec(g1(t, x) + g2(t, x)); };
    auto t0 = evaluate(s0, kBand, path);
    auto t1 = evaluate(s1, kBand, path);
    auto t2 = evaluate(s2, kBand, path);
    auto t12 = evaluate(s12, kBand, path);
    for (std::size_t k = 0; k < t0.A.size(); ++k) {
        double resid = t12.A[k] - t1.A[k] - t2.A[k] + t0.A[k];
        REQUIRE(std::abs(resid) < 1e-12);
    }
}

TEST_CASE("evaluate rejects malformed inputs") {
    auto path = sample_path(kBand, ControlPolicy::constant_random());
    FunctionalSpec spec;
    spec.beta = 1.0;
    spec.f = [](double, const Vec&) { return Mat(Mat::Identity(2, 2)); };
    REQUIRE_THROWS_WITH(evaluate(spec, kBand, path), Catch::Matchers::ContainsSubstring("wrong dimensions"));

    VolatilityBand band2(Mat::Identity(2, 2), 2.0 * Mat::Identity(2, 2));
    REQUIRE_THROWS_WITH(evaluate(spec, band2, path),
                        Catch::Matchers::ContainsSubstring("band dimension does not match"));

    auto c2 = sample_control(band2, unit_grid(32), ControlPolicy::fixed(1.5 * Mat::Identity(2, 2)), 3, 0);
    auto path2 = simulate_gbm(c2, 3, 1);
    FunctionalSpec asym;
    asym.beta = 1.0;
    asym.f = [](double, const Vec&) {
        Mat m(2, 2);
        m << 1.0, 0.5, -0.5, 1.0;
        return m;
    };
    REQUIRE_THROWS_WITH(evaluate(asym, band2, path2), Catch::Matchers::ContainsSubstring("not symmetric"));

    FunctionalSpec badg;
    badg.g = [](double, const Vec&) { return Vec(Vec::Ones(1)); };
    REQUIRE_THROWS_WITH(evaluate(badg, band2, path2), Catch::Matchers::ContainsSubstring("wrong dimension"));

    FunctionalSpec infg;
    infg.g = [](double, const Vec&) { return Vec(Vec::Constant(1, std::numeric_limits<double>::infinity())); };
    REQUIRE_THROWS_WITH(evaluate(infg, kBand, path), Catch::Matchers::ContainsSubstring("non-finite"));
}

TEST_CASE("ascent flag propagates through the beta term") {
    Mat up(2, 2);
    up << 2.0, 0.0, 0.0, 1.5;
    VolatilityBand band2(Mat::Identity(2, 2), up);
    auto c2 = sample_control(band2, unit_grid(16), ControlPolicy::fixed(Mat::Identity(2, 2)), 7, 0);
    auto path2 = simulate_gbm(c2, 7, 1);
    FunctionalSpec spec;
    spec.beta = 1.0;
    spec.f = [](double, const Vec&) {
        Mat m(2, 2);
        m << 1.0, 0.3, 0.3, -0.5;
        return m;
    };
    auto tr = evaluate(spec, band2, path2);
    REQUIRE_FALSE(tr.all_g_exact);
    REQUIRE(tr.all_g_converged);
    REQUIRE(std::isfinite(tr.A.back()));
}

TEST_CASE("girsanov construction, constant drift") {
    auto c = CoefficientSet::make_1d([](double, double) { return 0.7; }, nullptr,
                                     [](double, double) { return 1.0; });
    auto spec = girsanov_spec(c);
    REQUIRE(spec.alpha == 1.0);
    REQUIRE(spec.beta == -1.0);
    Vec x = Vec::Constant(1, 0.4);
    REQUIRE(spec.g(0.2, x)(0) == Catch::Approx(0.7).margin(1e-15));
    REQUIRE(spec.f(0.2, x)(0, 0) == Catch::Approx(0.49).margin(1e-15));
}

TEST_CASE("girsanov construction, diagonal h") {
    auto c = CoefficientSet::make_1d(nullptr, [](double, double) { return 0.3; },
                                     [](double, double) { return 1.0; });
    auto spec = girsanov_spec(c);
    Vec x = Vec::Zero(1);
    REQUIRE(spec.g(0.0, x)(0) == Catch::Approx(0.3).margin(1e-15));
    REQUIRE(spec.f(0.0, x)(0, 0) == Catch::Approx(0.09).margin(1e-15));
}

TEST_CASE("girsanov construction, state-dependent drift") {
    auto c = CoefficientSet::make_1d([](double, double x) { return x; }, nullptr,
                                     [](double, double) { return 1.0; });
    auto spec = girsanov_spec(c);
    Vec x = Vec::Constant(1, 1.5);
    REQUIRE(spec.g(0.3, x)(0) == Catch::Approx(1.5).margin(1e-14));
    REQUIRE(spec.f(0.3, x)(0, 0) == Catch::Approx(2.25).margin(1e-13));
}

TEST_CASE("girsanov rejects singular sigma, naming the point") {
    auto c = CoefficientSet::make_1d(nullptr, nullptr, [](double, double x) { return x; });
    auto spec = girsanov_spec(c);
    Vec x = Vec::Zero(1);
    REQUIRE_THROWS_WITH(spec.g(0.25, x), Catch::Matchers::ContainsSubstring("sigma singular at t=0.25") &&
                                             Catch::Matchers::ContainsSubstring("x=(0)"));

    CoefficientSet none;
    none.dim = 1;
    REQUIRE_THROWS_WITH(girsanov_spec(none), Catch::Matchers::ContainsSubstring("no sigma"));

    CoefficientSet badh = CoefficientSet::make_1d(nullptr, nullptr, [](double, double) { return 1.0; });
    badh.h.resize(2);
    REQUIRE_THROWS_WITH(girsanov_spec(badh), Catch::Matchers::ContainsSubstring("h must be empty or d x d"));
}

TEST_CASE("alpha rescale identity and equivalence") {
    FunctionalSpec spec;
    spec.alpha = 2.0;
    spec.beta = 4.0;
    spec.f = const_f(1.0);
    spec.g = const_g(0.9);

    auto out = alpha_rescale(spec);
    REQUIRE(out.alpha == 1.0);
    REQUIRE(out.beta == 2.0);
    Vec x = Vec::Zero(1);
    REQUIRE(out.g(0.0, x)(0) == Catch::Approx(0.45).margin(1e-16));
    REQUIRE(out.f(0.0, x)(0, 0) == 1.0);

    auto path = sample_path(kBand, ControlPolicy::piecewise_random(8), 41, 5);
    auto orig = evaluate(spec, kBand, path);
    auto resc = evaluate(out, kBand, path);
    for (std::size_t k = 0; k < orig.A.size(); ++k)
        REQUIRE(resc.A[k] == Catch::Approx(orig.A[k] / 2.0).margin(1e-12));

    FunctionalSpec already = out;
    auto same = alpha_rescale(already);
    auto a = evaluate(already, kBand, path);
    auto b = evaluate(same, kBand, path);
    for (std::size_t k = 0; k < a.A.size(); ++k) REQUIRE(a.A[k] == b.A[k]);

    FunctionalSpec zero;
    zero.alpha = 0.0;
    REQUIRE_THROWS_WITH(alpha_rescale(zero), Catch::Matchers::ContainsSubstring("not reducible"));
}

TEST_CASE("classical collapse matches the Ito sums bitwise") {
    // Degenerate band: the control is forced to 1, qv increments are dt.
    // The evaluated functional must equal the classical
    //   0.5 * |g|^2 * t + sum g dB
    // computed with the same left-endpoint arithmetic.
    VolatilityBand one = VolatilityBand::scalar(1.0, 1.0);
    const double mu = 0.6;
    auto coeffs = CoefficientSet::make_1d([mu](double, double) { return mu; }, nullptr,
                                          [](double, double) { return 1.0; });
    auto spec = girsanov_spec(coeffs);

    auto control = sample_control(one, unit_grid(256), ControlPolicy::constant_random(), 13, 0);
    auto path = simulate_gbm(control, 13, 2);
    auto tr = evaluate(spec, one, path);

    const double dt = path.grid.dt();
    const double u = mu * mu;
    std::vector<double> classical(tr.A.size(), 0.0);
    for (int k = 0; k < path.n_steps(); ++k) {
        double inc = 0.0;
        inc += 0.5 * u * dt;
        inc += mu * path.dB(0, k);
        classical[static_cast<std::size_t>(k) + 1] = classical[static_cast<std::size_t>(k)] + inc;
    }
    for (std::size_t k = 0; k < tr.A.size(); ++k) REQUIRE(tr.A[k] == classical[k]);
}

TEST_CASE("trace CSV layout") {
    FunctionalTrace tr;
    tr.grid = unit_grid(2);
    tr.A = {0.0, 0.5, 1.0};
    std::ostringstream os;
    tr.write_csv(os);
    REQUIRE(os.str() == "k,t,A\n0,0,0\n1,0.5,0.5\n2,1,1\n");
}
