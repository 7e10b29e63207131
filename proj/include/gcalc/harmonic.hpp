#pragma once

// Closed-form path-independent data built from a harmonic profile: V0
// solves h V0' + (1/2) sigma^2 V0'' = 0, i.e.
//
//   V0(x) = V0(0) + V0'(0) INT_0^x exp(-2 INT_0^u h(r)/sigma^2(r) dr) du,
//
// tabulated by composite Simpson quadrature (4th order, midpoint form) and
// interpolated. With V(t,x) = phi(t) V0(x) the induced functional data
// (alpha = 0, beta = 2, f = (1/2) G^{-1}(phi' V0 + b phi V0'), g = sigma
// phi V0') satisfies the characterizing PDE system by construction, with
// V0'' supplied through the defining relation V0'' = -2 h V0' / sigma^2
// so residuals stay at round-off rather than O(dx^2).

#include "gcalc/band.hpp"
#include "gcalc/common.hpp"
#include "gcalc/functional.hpp"
#include "gcalc/scenario.hpp"
#include "gcalc/value_function.hpp"

#include <functional>
#include <memory>
#include <ostream>
#include <vector>

namespace gcalc {

/// Tabulated harmonic profile with its derivative and the (h, sigma) pair
/// it was built from. Strictly monotone when V0'(0) != 0.
class HarmonicProfile {
public:
    HarmonicProfile(std::vector<double> x, std::vector<double> v0, std::vector<double> v0p,
                    double v0_at_0, double v0p_at_0, std::function<double(double)> h,
                    std::function<double(double)> sigma)
        : x_(std::move(x)), v0_(std::move(v0)), v0p_(std::move(v0p)), v0_at_0_(v0_at_0),
          v0p_at_0_(v0p_at_0), h_(std::move(h)), sigma_(std::move(sigma)),
          v0_interp_(x_, v0_), v0p_interp_(x_, v0p_) {}

    const std::vector<double>& grid() const { return x_; }
    const std::vector<double>& values() const { return v0_; }
    const std::vector<double>& derivatives() const { return v0p_; }
    double v0_at_0() const { return v0_at_0_; }
    double v0_prime_at_0() const { return v0p_at_0_; }
    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }
    double h(double x) const { return h_(x); }
    double sigma(double x) const { return sigma_(x); }

    /// Interpolated V0; error outside the tabulated range.
    double V0(double x) const { return v0_interp_(x); }
    double V0_prime(double x) const { return v0p_interp_(x); }

    /// Second derivative from the defining relation V0'' = -2 h V0'/sigma^2.
    double V0_second(double x) const {
        double s = sigma_(x);
        return -2.0 * h_(x) * V0_prime(x) / (s * s);
    }

    /// CSV rows "x,V0,V0_prime".
    void write_csv(std::ostream& os) const {
        os << "x,V0,V0_prime\n";
        for (std::size_t i = 0; i < x_.size(); ++i)
            os << fmt_g17(x_[i]) << ',' << fmt_g17(v0_[i]) << ',' << fmt_g17(v0p_[i]) << '\n';
    }

private:
    std::vector<double> x_, v0_, v0p_;
    double v0_at_0_, v0p_at_0_;
    std::function<double(double)> h_, sigma_;
    CubicInterp v0_interp_, v0p_interp_;
};

namespace detail {

inline double check_sigma(const std::function<double(double)>& sigma, double x) {
    double s = sigma(x);
    if (!(std::abs(s) >= 1e-8))
        throw Error(detail::format("build_v0: sigma vanishes at x=%.17g", x));
    return s;
}

} // namespace detail

/// Tabulate the harmonic profile on an ascending grid containing 0, by
/// cumulative per-interval Simpson quadrature outward from 0 for both the
/// inner exponent integral and the outer integral.
inline HarmonicProfile build_v0(const std::function<double(double)>& h,
                                const std::function<double(double)>& sigma,
                                const std::vector<double>& x_grid, double v0_at_0,
                                double v0p_at_0) {
    const std::size_t n = x_grid.size();
    if (n < 3) throw Error("build_v0: need at least 3 grid nodes");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(x_grid[i] < x_grid[i + 1])) throw Error("build_v0: grid must be strictly ascending");
    std::size_t i0 = n;
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(x_grid[i]) <= 1e-12) { i0 = i; break; }
    if (i0 == n) throw Error("build_v0: grid must contain x = 0");

    auto q = [&](double u) {  // integrand of the inner exponent
        double s = detail::check_sigma(sigma, u);
        return h(u) / (s * s);
    };
    auto simpson = [](const std::function<double(double)>& f, double a, double b) {
        return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
    };

    // Inner integral I(u) = INT_0^u h/sigma^2 at nodes and interval
    // midpoints, accumulated outward from the zero node.
    std::vector<double> I_node(n, 0.0), I_mid(n - 1, 0.0);
    for (std::size_t i = i0; i + 1 < n; ++i) {
        double a = x_grid[i], b = x_grid[i + 1], m = 0.5 * (a + b);
        I_mid[i] = I_node[i] + simpson(q, a, m);
        I_node[i + 1] = I_node[i] + simpson(q, a, b);
    }
    for (std::size_t i = i0; i > 0; --i) {
        double a = x_grid[i - 1], b = x_grid[i], m = 0.5 * (a + b);
        I_node[i - 1] = I_node[i] - simpson(q, a, b);
        I_mid[i - 1] = I_node[i - 1] + simpson(q, a, m);
    }

    // Outer integrand w = exp(-2 I); V0' = V0'(0) w.
    std::vector<double> w_node(n), w_mid(n - 1);
    for (std::size_t i = 0; i < n; ++i) w_node[i] = std::exp(-2.0 * I_node[i]);
    for (std::size_t i = 0; i + 1 < n; ++i) w_mid[i] = std::exp(-2.0 * I_mid[i]);

    std::vector<double> v0(n, 0.0), v0p(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v0p[i] = v0p_at_0 * w_node[i];
    v0[i0] = v0_at_0;
    for (std::size_t i = i0; i + 1 < n; ++i) {
        double hstep = x_grid[i + 1] - x_grid[i];
        v0[i + 1] = v0[i] + v0p_at_0 * hstep / 6.0 * (w_node[i] + 4.0 * w_mid[i] + w_node[i + 1]);
    }
    for (std::size_t i = i0; i > 0; --i) {
        double hstep = x_grid[i] - x_grid[i - 1];
        v0[i - 1] = v0[i] - v0p_at_0 * hstep / 6.0 * (w_node[i - 1] + 4.0 * w_mid[i - 1] + w_node[i]);
    }

    return HarmonicProfile(x_grid, std::move(v0), std::move(v0p), v0_at_0, v0p_at_0, h, sigma);
}

/// Sup over interior nodes of the centered-difference residual
/// |h V0' + (1/2) sigma^2 V0''| computed from the tabulated values alone;
/// detects a profile inconsistent with the supplied operator.
inline double check_harmonic(const HarmonicProfile& profile, const std::function<double(double)>& h,
                             const std::function<double(double)>& sigma) {
    const auto& x = profile.grid();
    const auto& v0 = profile.values();
    const std::size_t n = x.size();
    if (n < 3) throw Error("check_harmonic: need at least 3 nodes");
    double dx = x[1] - x[0];
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (std::abs((x[i + 1] - x[i]) - dx) > 1e-9 * std::max(1.0, std::abs(dx)))
            throw Error("check_harmonic: grid spacing must be uniform");

    double sup = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double d1 = (v0[i + 1] - v0[i - 1]) / (2.0 * dx);
        double d2 = (v0[i + 1] - 2.0 * v0[i] + v0[i - 1]) / (dx * dx);
        double s = sigma(x[i]);
        sup = std::max(sup, std::abs(h(x[i]) * d1 + 0.5 * s * s * d2));
    }
    return sup;
}

/// Functional data and value function induced by a harmonic profile.
struct ExampleConstruction {
    FunctionalSpec spec;  // alpha = 0, beta = 2
    ValueFunction value;
    std::shared_ptr<const HarmonicProfile> profile;
};

/// Build V(t,x) = phi(t) V0(x) with analytic derivatives and the matching
/// functional data f = (1/2) G^{-1}(phi' V0 + b phi V0'), g = sigma phi V0'.
/// Queries outside the profile grid raise an error.
inline ExampleConstruction build_example_spec(std::shared_ptr<const HarmonicProfile> profile,
                                              const std::function<double(double)>& phi,
                                              const std::function<double(double)>& phi_prime,
                                              const std::function<double(double, double)>& b,
                                              const VolatilityBand& band) {
    if (!profile) throw Error("build_example_spec: null profile");
    if (band.dim() != 1) throw Error("build_example_spec: band must be one-dimensional");
    if (!phi || !phi_prime) throw Error("build_example_spec: phi and its derivative are required");

    ExampleConstruction out;
    out.profile = profile;

    out.value = ValueFunction::analytic_1d(
        [profile, phi](double t, double x) { return phi(t) * profile->V0(x); },
        [profile, phi_prime](double t, double x) { return phi_prime(t) * profile->V0(x); },
        [profile, phi](double t, double x) { return phi(t) * profile->V0_prime(x); },
        [profile, phi](double t, double x) { return phi(t) * profile->V0_second(x); });

    out.spec.alpha = 0.0;
    out.spec.beta = 2.0;
    out.spec.f = [profile, phi, phi_prime, b, band](double t, const Vec& x) -> Mat {
        double z = phi_prime(t) * profile->V0(x(0));
        if (b) z += b(t, x(0)) * phi(t) * profile->V0_prime(x(0));
        Mat f(1, 1);
        f(0, 0) = 0.5 * eval_g_inverse_1d(z, band);
        return f;
    };
    out.spec.g = [profile, phi](double t, const Vec& x) -> Vec {
        return Vec::Constant(1, profile->sigma(x(0)) * phi(t) * profile->V0_prime(x(0)));
    };
    return out;
}

/// State-equation coefficients matching the profile's operator: drift b,
/// h_11 = h, diffusion sigma (all d = 1).
inline CoefficientSet example_coefficients(std::shared_ptr<const HarmonicProfile> profile,
                                           const std::function<double(double, double)>& b) {
    if (!profile) throw Error("example_coefficients: null profile");
    return CoefficientSet::make_1d(
        b, [profile](double, double x) { return profile->h(x); },
        [profile](double, double x) { return profile->sigma(x); });
}

} // namespace gcalc
