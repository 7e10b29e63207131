#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "gcalc/gheat.hpp"
#include "gcalc/scenario.hpp"

using namespace gcalc;

namespace {
const VolatilityBand kBand = VolatilityBand::scalar(1.0, 2.0);
const TimeGrid kGrid{0.0, 1.0, 64};
}  // namespace

TEST_CASE("control sampling respects the band and the policy", "[scenario]") {
    ControlPath fixed = sample_control(kBand, kGrid, ControlPolicy::fixed(kBand.sigma_upper()), 1);
    for (const Mat& g : fixed.gammas) CHECK(g(0, 0) == 2.0);

    ControlPath bb =
        sample_control(kBand, TimeGrid{0.0, 1.0, 2}, ControlPolicy::bang_bang({+1, -1}), 1);
    REQUIRE(bb.gammas.size() == 2);
    CHECK(bb.gammas[0](0, 0) == 2.0);
    CHECK(bb.gammas[1](0, 0) == 1.0);

    for (auto policy : {ControlPolicy::constant_random(), ControlPolicy::piecewise_random(8)}) {
        ControlPath p = sample_control(kBand, kGrid, policy, 7, 3);
        for (const Mat& g : p.gammas) CHECK(kBand.contains(g, 1e-10));
    }

    // Constant policy holds one draw; piecewise varies.
    ControlPath c = sample_control(kBand, kGrid, ControlPolicy::constant_random(), 11, 0);
    for (const Mat& g : c.gammas) CHECK(g(0, 0) == c.gammas[0](0, 0));

    CHECK_THROWS_AS(
        sample_control(kBand, kGrid, ControlPolicy::fixed(Mat::Constant(1, 1, 2.5)), 1), Error);
}

TEST_CASE("control sampling is bit-reproducible", "[scenario]") {
    ControlPath a = sample_control(kBand, kGrid, ControlPolicy::piecewise_random(8), 42, 5);
    ControlPath b = sample_control(kBand, kGrid, ControlPolicy::piecewise_random(8), 42, 5);
    REQUIRE(a.gammas.size() == b.gammas.size());
    for (std::size_t k = 0; k < a.gammas.size(); ++k) CHECK((a.gammas[k] - b.gammas[k]).norm() == 0.0);

    ControlPath c = sample_control(kBand, kGrid, ControlPolicy::piecewise_random(8), 42, 6);
    double diff = 0.0;
    for (std::size_t k = 0; k < a.gammas.size(); ++k) diff += (a.gammas[k] - c.gammas[k]).norm();
    CHECK(diff > 0.0);
}

TEST_CASE("simulated paths telescope and carry exact compensators", "[scenario]") {
    auto control = std::make_shared<const ControlPath>(
        sample_control(kBand, kGrid, ControlPolicy::piecewise_random(4), 3, 1));
    ScenarioPath p = simulate_gbm(control, 3, 17);

    CHECK(p.B.col(0).norm() == 0.0);
    CHECK(p.QV.col(0).norm() == 0.0);
    for (int k = 0; k < p.n_steps(); ++k) {
        CHECK(p.B(0, k) + p.dB(0, k) == p.B(0, k + 1));
        CHECK(p.qv_total(k)(0, 0) + p.qv_inc(k)(0, 0) == Catch::Approx(p.qv_total(k + 1)(0, 0)));
        // Exact compensator: qv increment is gamma^2 dt, not (dB)^2.
        double g = p.gamma(k)(0, 0);
        CHECK(p.qv_inc(k)(0, 0) == Catch::Approx(g * g * kGrid.dt()).margin(1e-15));
        double rate = p.qv_inc(k)(0, 0) / kGrid.dt();
        CHECK(rate >= 1.0 - 1e-10);
        CHECK(rate <= 4.0 + 1e-10);
    }

    // Fixed upper control accumulates QV(1) = 4 exactly.
    auto up = std::make_shared<const ControlPath>(
        sample_control(kBand, kGrid, ControlPolicy::fixed(kBand.sigma_upper()), 3));
    ScenarioPath q = simulate_gbm(up, 3, 1);
    CHECK(q.qv_total(q.n_steps())(0, 0) == Catch::Approx(4.0).margin(1e-12));
}

TEST_CASE("paths are pure functions of (seed, index)", "[scenario]") {
    auto control = std::make_shared<const ControlPath>(
        sample_control(kBand, kGrid, ControlPolicy::constant_random(), 5, 0));
    ScenarioPath a = simulate_gbm(control, 5, 9);
    ScenarioPath b = simulate_gbm(control, 5, 9);
    CHECK((a.dB - b.dB).norm() == 0.0);
    ScenarioPath c = simulate_gbm(control, 5, 10);
    CHECK((a.dB - c.dB).norm() > 0.0);
}

TEST_CASE("sample mean of driftless paths vanishes", "[scenario]") {
    auto control = std::make_shared<const ControlPath>(
        sample_control(kBand, TimeGrid{0.0, 1.0, 16}, ControlPolicy::fixed(kBand.sigma_lower()), 8));
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        ScenarioPath p = simulate_gbm(control, 8, static_cast<std::uint64_t>(i));
        sum += p.B(0, p.n_steps());
    }
    CHECK(std::abs(sum / n) < 0.01);  // 3 / sqrt(n) with unit variance
}

TEST_CASE("euler integration handles the three pure coefficient cases", "[scenario]") {
    auto control = std::make_shared<const ControlPath>(
        sample_control(kBand, kGrid, ControlPolicy::piecewise_random(8), 13, 2));
    Vec x0 = Vec::Constant(1, 0.5);

    ScenarioPath p = simulate_gbm(control, 13, 3);
    CoefficientSet pure_sigma = CoefficientSet::make_1d({}, {}, [](double, double) { return 1.0; });
    euler_gsde(pure_sigma, x0, p);
    // Not bitwise: the Euler sum associates as (x0 + dB_0) + dB_1 + ...,
    // the right side as x0 + (dB_0 + dB_1 + ...).
    for (int k = 0; k <= p.n_steps(); ++k)
        CHECK(p.X(0, k) == Catch::Approx(0.5 + p.B(0, k)).margin(1e-12));

    CoefficientSet pure_drift = CoefficientSet::make_1d([](double, double) { return 1.0; }, {}, {});
    euler_gsde(pure_drift, x0, p);
    for (int k = 0; k <= p.n_steps(); ++k)
        CHECK(p.X(0, k) == Catch::Approx(0.5 + p.grid.time(k) - p.grid.t_start).margin(1e-12));

    CoefficientSet pure_qv = CoefficientSet::make_1d({}, [](double, double) { return 1.0; }, {});
    euler_gsde(pure_qv, x0, p);
    for (int k = 0; k <= p.n_steps(); ++k)
        CHECK(p.X(0, k) == Catch::Approx(0.5 + p.qv_total(k)(0, 0)).margin(1e-12));
}

TEST_CASE("euler blow-up names the failing step", "[scenario]") {
    auto control = std::make_shared<const ControlPath>(
        sample_control(kBand, TimeGrid{0.0, 1.0, 8}, ControlPolicy::fixed(kBand.sigma_lower()), 2));
    ScenarioPath p = simulate_gbm(control, 2, 1);
    CoefficientSet exploding =
        CoefficientSet::make_1d([](double, double x) { return x * x * 1e30; }, {}, {});
    CHECK_THROWS_WITH(euler_gsde(exploding, Vec::Constant(1, 1e30), p),
                      Catch::Matchers::ContainsSubstring("trajectory blow-up"));
}

TEST_CASE("upper expectation dominates and brackets the moments", "[scenario]") {
    TimeGrid grid{0.0, 1.0, 32};
    UpperExpectation up = estimate_upper_expectation(
        terminal_payoff([](double x) { return x * x; }), nullptr, kBand, grid, 2, 20000, 99);
    CHECK(up.value == Catch::Approx(4.0).margin(3.0 * up.std_error));
    CHECK(up.argmax_control == 1);  // upper endpoint wins for convex payoffs

    UpperExpectation dn = estimate_upper_expectation(
        terminal_payoff([](double x) { return -x * x; }), nullptr, kBand, grid, 2, 20000, 99);
    CHECK(dn.value == Catch::Approx(-1.0).margin(3.0 * dn.std_error));
    CHECK(dn.argmax_control == 0);  // lower endpoint wins for concave payoffs

    UpperExpectation c = estimate_upper_expectation(
        terminal_payoff([](double) { return 3.0; }), nullptr, kBand, grid, 4, 100, 99);
    CHECK(c.value == 3.0);
    CHECK(c.std_error == 0.0);
}

TEST_CASE("enlarging the control family never decreases the estimate", "[scenario]") {
    TimeGrid grid{0.0, 1.0, 32};
    auto payoff = terminal_payoff([](double x) { return std::abs(x); });
    double prev = -1e300;
    for (int n_controls : {2, 4, 8}) {
        UpperExpectation e =
            estimate_upper_expectation(payoff, nullptr, kBand, grid, n_controls, 2000, 123);
        CHECK(e.value >= prev);  // exact: same streams, max over a superset
        prev = e.value;
    }
}

TEST_CASE("PDE value dominates every sampled control family", "[scenario]") {
    TimeGrid grid{0.0, 1.0, 64};
    auto payoff = terminal_payoff([](double x) { return std::abs(x); });
    UpperExpectation e = estimate_upper_expectation(payoff, nullptr, kBand, grid, 6, 20000, 7);

    Grid1D pde_grid;
    double pde = g_expectation([](double x) { return std::abs(x); }, kBand, pde_grid, 1.0);
    CHECK(e.value <= pde + 3.0 * e.std_error + 1e-3);
}

TEST_CASE("singleton band reduces to classical Monte Carlo", "[scenario]") {
    VolatilityBand single = VolatilityBand::scalar(1.5, 1.5);
    TimeGrid grid{0.0, 1.0, 16};
    UpperExpectation e = estimate_upper_expectation(
        terminal_payoff([](double x) { return x * x; }), nullptr, single, grid, 4, 5000, 31);
    // Every control collapses to the same constant matrix. The means do not
    // coincide samplewise (each family draws its own noise streams); they
    // all estimate the one classical expectation.
    for (const auto& cp : e.controls)
        for (const Mat& g : cp->gammas) CHECK(g(0, 0) == 1.5);
    for (std::size_t c = 0; c < e.control_means.size(); ++c)
        CHECK(e.control_means[c] ==
              Catch::Approx(1.5 * 1.5).margin(4.0 * e.control_std_errors[c]));
    CHECK(e.value == Catch::Approx(1.5 * 1.5).margin(3.0 * e.std_error));
}

TEST_CASE("scenario CSV export lists nodes with running quadratic variation", "[scenario]") {
    auto control = std::make_shared<const ControlPath>(
        sample_control(kBand, TimeGrid{0.0, 0.5, 4}, ControlPolicy::fixed(kBand.sigma_upper()), 1));
    ScenarioPath p = simulate_gbm(control, 1, 2);
    std::ostringstream os;
    p.write_csv(os);
    std::string csv = os.str();
    CHECK(csv.rfind("k,t,B_1,QV_11\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 5);
}
