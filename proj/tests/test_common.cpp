#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "gcalc/common.hpp"

using namespace gcalc;

TEST_CASE("symmetry helpers", "[common]") {
    Mat m(2, 2);
    m << 1.0, 2.0, 3.0, 4.0;
    Mat s = sym(m);
    CHECK(s(0, 1) == s(1, 0));
    CHECK(s(0, 1) == 2.5);
    CHECK(is_symmetric(s));
    CHECK_FALSE(is_symmetric(m));

    Mat a(2, 2), b(2, 2);
    a << 2, 1, 1, 2;
    b << 1, 0, 0, 3;
    CHECK(min_eigenvalue(a) == Catch::Approx(1.0).margin(1e-12));
    CHECK(commutator_norm(a, a) == 0.0);
    CHECK(commutator_norm(a, b) > 0.1);
    CHECK(frob_inner(a, b) == Catch::Approx(2.0 + 6.0));
}

TEST_CASE("monotone interpolation reproduces nodes and stays monotone", "[interp]") {
    std::vector<double> x, y;
    for (int i = 0; i <= 20; ++i) {
        x.push_back(-2.0 + 0.2 * i);
        y.push_back(std::tanh(x.back()));
    }
    CubicInterp f(x, y);

    for (std::size_t i = 0; i < x.size(); ++i) CHECK(f(x[i]) == Catch::Approx(y[i]).margin(1e-15));

    double prev = f(-2.0);
    for (double q = -2.0 + 1e-3; q <= 2.0; q += 1e-3) {
        double v = f(q);
        CHECK(v >= prev - 1e-12);  // data monotone -> interpolant monotone
        prev = v;
    }

    // Smooth data: third-order accuracy in the interior.
    CHECK(std::abs(f(0.1714) - std::tanh(0.1714)) < 5e-4);
}

TEST_CASE("interpolation does not overshoot at data extrema", "[interp]") {
    std::vector<double> x = {0, 1, 2, 3, 4};
    std::vector<double> y = {0, 0, 1, 0, 0};
    CubicInterp f(x, y);
    for (double q = 0.0; q <= 4.0; q += 1e-3) {
        CHECK(f(q) <= 1.0 + 1e-12);
        CHECK(f(q) >= -1e-12);
    }
}

TEST_CASE("interpolation derivative matches a finite difference", "[interp]") {
    std::vector<double> x, y;
    for (int i = 0; i <= 40; ++i) {
        x.push_back(0.1 * i);
        y.push_back(std::sin(x.back()));
    }
    CubicInterp f(x, y);
    for (double q : {0.55, 1.23, 2.9, 3.71}) {
        double d = 0.0;
        f.eval(q, &d);
        double fd = (f(q + 1e-6) - f(q - 1e-6)) / 2e-6;
        CHECK(d == Catch::Approx(fd).margin(1e-6));
    }
}

TEST_CASE("interpolation rejects out-of-range queries", "[interp]") {
    CubicInterp f(std::vector<double>{0, 1, 2}, std::vector<double>{0, 1, 4});
    CHECK_THROWS_AS(f(-0.01), Error);
    CHECK_THROWS_AS(f(2.01), Error);
    CHECK(f(2.0) == 4.0);
}

TEST_CASE("parallel_for covers the range exactly once and rethrows", "[common]") {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);

    CHECK_THROWS_AS(parallel_for(8, [](std::size_t i) {
        if (i == 5) throw Error("boom");
    }), Error);
}

TEST_CASE("g17 formatting round-trips doubles", "[common]") {
    // strtod, not std::stod: stod throws out_of_range on subnormals.
    for (double v : {0.1, 1.0 / 3.0, 6.02e23, -1.7976931348623157e308, 5e-324}) {
        std::string s = fmt_g17(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}
