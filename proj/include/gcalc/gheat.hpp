#pragma once

// One-dimensional nonlinear heat equation
//
//     du/dt + G(d2u/dx2) = 0,   u(T, .) = phi,
//
// solved backward in time by the explicit monotone scheme
//
//     u(t - dt, x_i) = u(t, x_i) + dt * G(D2 u(t, x_i)),
//
// with D2 the centered second difference. Monotonicity (and hence the
// comparison principle) requires the CFL bound dt <= dx^2 / upper^2; the
// solver refuses to run otherwise. u(0, 0) is the sublinear expectation of
// phi at the horizon.

#include "gcalc/band.hpp"
#include "gcalc/common.hpp"

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

namespace gcalc {

/// Boundary handling for the marching scheme. Both rules hold the boundary
/// nodes at their terminal values; they differ only in bookkeeping.
/// ExtrapolateLinear treats the solution as linear across the edge (zero
/// curvature, so no update); ClampTerminal re-pins phi explicitly.
enum class BoundaryRule { ExtrapolateLinear, ClampTerminal };

/// Uniform spatial grid with a target time step.
struct Grid1D {
    double x_min = -8.0;
    double x_max = 8.0;
    int nx = 801;
    double dt = 1e-4;
    BoundaryRule boundary = BoundaryRule::ExtrapolateLinear;

    double dx() const { return (x_max - x_min) / (nx - 1); }
    double node(int i) const { return x_min + i * dx(); }

    std::vector<double> nodes() const {
        std::vector<double> xs(nx);
        for (int i = 0; i < nx; ++i) xs[i] = node(i);
        return xs;
    }

    /// Largest admissible time step for the band: dx^2 / upper^2.
    double cfl_limit(const VolatilityBand& band) const {
        double up2 = band.up1() * band.up1();
        return dx() * dx() / up2;
    }

    void validate(const VolatilityBand& band) const {
        if (nx < 3) throw Error("grid: need at least 3 nodes");
        if (!(x_min < x_max)) throw Error("grid: x_min must be less than x_max");
        if (!(dt > 0.0)) throw Error("grid: dt must be positive");
        double limit = cfl_limit(band);
        if (dt > limit * (1.0 + 1e-12))
            throw Error(detail::format(
                "grid: CFL violation, dt=%g exceeds max admissible dt=%g for this band", dt, limit));
    }
};

/// Domain sized to the diffusion: [-6 sigma_up sqrt(T), +6 sigma_up sqrt(T)]
/// around `center`, dt at 90% of the CFL limit. Linear far-field behaviour
/// of Lipschitz data makes the boundary rule immaterial at this width.
inline Grid1D auto_grid(const VolatilityBand& band, double T, double center = 0.0, int nx = 801) {
    if (!(T > 0.0)) throw Error("auto_grid: horizon must be positive");
    Grid1D g;
    double half = 6.0 * band.up1() * std::sqrt(T);
    g.x_min = center - half;
    g.x_max = center + half;
    g.nx = nx;
    g.dt = 0.9 * g.cfl_limit(band);
    return g;
}

namespace detail {

/// March u in place from time t_hi down to t_lo (t_hi >= t_lo) using steps
/// of size <= grid.dt. `terminal` is consulted only by ClampTerminal.
inline void march(std::vector<double>& u, const VolatilityBand& band, const Grid1D& grid,
                  double t_hi, double t_lo,
                  const std::vector<double>* terminal_boundary = nullptr) {
    double span = t_hi - t_lo;
    if (span <= 0.0) return;
    grid.validate(band);
    long n = static_cast<long>(std::ceil(span / grid.dt - 1e-12));
    if (n < 1) n = 1;
    double dt = span / static_cast<double>(n);
    double dx2 = grid.dx() * grid.dx();
    double up2 = band.up1() * band.up1();
    double lo2 = band.lo1() * band.lo1();
    const int nx = grid.nx;

    std::vector<double> next(u.size());
    for (long k = 0; k < n; ++k) {
        for (int i = 1; i + 1 < nx; ++i) {
            double d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / dx2;
            double g = d2 >= 0.0 ? 0.5 * up2 * d2 : 0.5 * lo2 * d2;
            next[i] = u[i] + dt * g;
        }
        if (grid.boundary == BoundaryRule::ClampTerminal && terminal_boundary) {
            next[0] = (*terminal_boundary)[0];
            next[nx - 1] = (*terminal_boundary)[nx - 1];
        } else {
            // Zero curvature across the edge: boundary nodes do not move.
            next[0] = u[0];
            next[nx - 1] = u[nx - 1];
        }
        u.swap(next);
    }
    for (int i = 0; i < nx; ++i)
        if (!std::isfinite(u[i]))
            throw Error("march: solution blew up (non-finite value)");
}

} // namespace detail

/// Space-time table of the solution; times ascending, values row-major by
/// time level (values[k * nx + i] is u(times[k], x_i)).
struct ValueSurface {
    Grid1D grid;
    std::vector<double> times;
    std::vector<double> values;

    double at(std::size_t k, int i) const { return values[k * grid.nx + i]; }

    /// Interpolated value: monotone cubic in x, linear in t.
    double value_at(double t, double x) const {
        if (times.empty()) throw Error("value surface: empty");
        if (t < times.front() - 1e-12 || t > times.back() + 1e-12)
            throw Error(detail::format("value surface: t=%g outside [%g, %g]", t, times.front(), times.back()));
        auto row_value = [&](std::size_t k) {
            std::vector<double> row(values.begin() + static_cast<std::ptrdiff_t>(k * grid.nx),
                                    values.begin() + static_cast<std::ptrdiff_t>((k + 1) * grid.nx));
            CubicInterp interp(grid.nodes(), row);
            return interp(x);
        };
        auto it = std::lower_bound(times.begin(), times.end(), t);
        std::size_t hi = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
            it - times.begin(), static_cast<std::ptrdiff_t>(times.size()) - 1));
        if (hi == 0 || std::abs(times[hi] - t) <= 1e-12) return row_value(hi);
        std::size_t lo = hi - 1;
        double w = (t - times[lo]) / (times[hi] - times[lo]);
        return (1.0 - w) * row_value(lo) + w * row_value(hi);
    }

    /// CSV rows "t,x,u", row-major by time level, LF line endings.
    void write_csv(std::ostream& os) const {
        os << "t,x,u\n";
        for (std::size_t k = 0; k < times.size(); ++k)
            for (int i = 0; i < grid.nx; ++i)
                os << fmt_g17(times[k]) << ',' << fmt_g17(grid.node(i)) << ',' << fmt_g17(at(k, i)) << '\n';
    }
};

/// Solve with terminal condition phi at time T down to time 0. Levels are
/// recorded every `time_stride` steps (terminal and final levels always).
inline ValueSurface solve_terminal(const std::function<double(double)>& phi,
                                   const VolatilityBand& band, const Grid1D& grid, double T,
                                   int time_stride = 1) {
    if (!(T > 0.0)) throw Error("solve_terminal: horizon T must be positive");
    if (time_stride < 1) throw Error("solve_terminal: time_stride must be >= 1");
    grid.validate(band);
    long n = static_cast<long>(std::ceil(T / grid.dt - 1e-12));
    if (n < 1) n = 1;
    double dt = T / static_cast<double>(n);

    std::vector<double> u(grid.nx);
    for (int i = 0; i < grid.nx; ++i) u[i] = phi(grid.node(i));
    std::vector<double> terminal = u;

    // Collected while marching down, then reversed into ascending order.
    std::vector<double> rev_times;
    std::vector<std::vector<double>> rev_rows;
    rev_times.push_back(T);
    rev_rows.push_back(u);

    Grid1D step_grid = grid;
    step_grid.dt = dt;
    for (long k = 0; k < n; ++k) {
        double t_hi = T - static_cast<double>(k) * dt;
        double t_lo = (k + 1 == n) ? 0.0 : T - static_cast<double>(k + 1) * dt;
        detail::march(u, band, step_grid, t_hi, t_lo, &terminal);
        if ((k + 1) % time_stride == 0 || k + 1 == n) {
            rev_times.push_back(t_lo);
            rev_rows.push_back(u);
        }
    }

    ValueSurface surface;
    surface.grid = grid;
    surface.times.assign(rev_times.rbegin(), rev_times.rend());
    surface.values.reserve(rev_rows.size() * static_cast<std::size_t>(grid.nx));
    for (auto it = rev_rows.rbegin(); it != rev_rows.rend(); ++it)
        surface.values.insert(surface.values.end(), it->begin(), it->end());
    return surface;
}

/// Sublinear expectation of phi(B_T) with B_0 = x0: solve once, read off
/// u(0, x0). Keeps only the current level, so memory stays O(nx).
inline double g_expectation(const std::function<double(double)>& phi, const VolatilityBand& band,
                            const Grid1D& grid, double T, double x0 = 0.0) {
    if (!(T > 0.0)) throw Error("g_expectation: horizon T must be positive");
    std::vector<double> u(grid.nx);
    for (int i = 0; i < grid.nx; ++i) u[i] = phi(grid.node(i));
    std::vector<double> terminal = u;
    detail::march(u, band, grid, T, 0.0, &terminal);
    CubicInterp interp(grid.nodes(), u);
    return interp(x0);
}

/// Function of the path at one or two fixed times; phi receives the path
/// values at `times` in order.
struct CylinderFunctional {
    std::vector<double> times;  // ascending, size 1 or 2
    std::function<double(const std::vector<double>&)> phi;
};

/// Query point for a conditional expectation. For two-time functionals and
/// t past the first time, the realized first coordinate x1 is required.
struct ConditionalQuery {
    double t = 0.0;
    double x = 0.0;
    std::optional<double> x1;
};

/// Conditional sublinear expectation of a one- or two-time cylinder
/// functional, evaluated by nested backward solves. Inner solves run on
/// every `x1_stride`-th node and are chained to the outer solve through
/// monotone cubic interpolation.
inline double conditional_g_expectation(const CylinderFunctional& f, const VolatilityBand& band,
                                        const Grid1D& grid, const ConditionalQuery& query,
                                        int x1_stride = 4) {
    if (f.times.empty()) throw Error("conditional_g_expectation: no fixing times");
    if (f.times.size() > 2)
        throw Error(detail::format("conditional_g_expectation: unsupported nesting depth %zu",
                                   f.times.size()));
    if (!f.phi) throw Error("conditional_g_expectation: functional has no payoff");
    for (std::size_t i = 0; i + 1 < f.times.size(); ++i)
        if (!(f.times[i] < f.times[i + 1]))
            throw Error("conditional_g_expectation: times must be strictly ascending");
    if (x1_stride < 1) throw Error("conditional_g_expectation: x1_stride must be >= 1");
    grid.validate(band);
    const auto xs = grid.nodes();

    if (f.times.size() == 1) {
        double t1 = f.times[0];
        if (query.t > t1 + 1e-12)
            throw Error("conditional_g_expectation: query time past the functional's horizon");
        std::vector<double> u(grid.nx);
        for (int i = 0; i < grid.nx; ++i) u[i] = f.phi({xs[i]});
        std::vector<double> terminal = u;
        detail::march(u, band, grid, t1, query.t, &terminal);
        return CubicInterp(xs, u)(query.x);
    }

    double t1 = f.times[0], t2 = f.times[1];
    if (query.t > t2 + 1e-12)
        throw Error("conditional_g_expectation: query time past the functional's horizon");

    if (query.t > t1 + 1e-12) {
        // Between the fixing times the first coordinate is realized.
        if (!query.x1)
            throw Error("conditional_g_expectation: x1 required for queries between fixing times");
        double x1 = *query.x1;
        std::vector<double> u(grid.nx);
        for (int i = 0; i < grid.nx; ++i) u[i] = f.phi({x1, xs[i]});
        std::vector<double> terminal = u;
        detail::march(u, band, grid, t2, query.t, &terminal);
        return CubicInterp(xs, u)(query.x);
    }

    // Inner solves: value at (t1, x_j) of the section phi(x_j, .).
    std::vector<int> sample;
    for (int j = 0; j < grid.nx; j += x1_stride) sample.push_back(j);
    if (sample.back() != grid.nx - 1) sample.push_back(grid.nx - 1);

    std::vector<double> inner(sample.size());
    parallel_for(sample.size(), [&](std::size_t s) {
        int j = sample[s];
        std::vector<double> u(grid.nx);
        for (int i = 0; i < grid.nx; ++i) u[i] = f.phi({xs[j], xs[i]});
        std::vector<double> terminal = u;
        detail::march(u, band, grid, t2, t1, &terminal);
        inner[s] = u[j];
    });

    std::vector<double> v(grid.nx);
    if (x1_stride == 1) {
        for (std::size_t s = 0; s < sample.size(); ++s) v[sample[s]] = inner[s];
    } else {
        std::vector<double> sx(sample.size());
        for (std::size_t s = 0; s < sample.size(); ++s) sx[s] = xs[sample[s]];
        CubicInterp chain(sx, inner);
        for (int i = 0; i < grid.nx; ++i) v[i] = chain(xs[i]);
    }

    std::vector<double> terminal = v;
    detail::march(v, band, grid, t1, query.t, &terminal);
    return CubicInterp(xs, v)(query.x);
}

} // namespace gcalc
