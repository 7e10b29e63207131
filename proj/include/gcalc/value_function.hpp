#pragma once

// Candidate value function V in C^{1,2} together with its derivatives.
// Either all derivatives are supplied analytically, or they are produced
// from V alone by Richardson-refined centered differences (4th order), so
// that second derivatives do not dominate PDE residual tolerances.

#include "gcalc/common.hpp"

#include <functional>

namespace gcalc {

class ValueFunction {
public:
    enum class Mode { Analytic, FiniteDifference };

    using ScalarFn = std::function<double(double, const Vec&)>;
    using VecFn = std::function<Vec(double, const Vec&)>;
    using MatFn = std::function<Mat(double, const Vec&)>;

    static ValueFunction analytic(ScalarFn v, ScalarFn vt, VecFn grad, MatFn hess) {
        ValueFunction f;
        f.mode_ = Mode::Analytic;
        f.v_ = std::move(v);
        f.vt_ = std::move(vt);
        f.grad_ = std::move(grad);
        f.hess_ = std::move(hess);
        return f;
    }

    /// d = 1 analytic convenience: scalar functions of (t, x).
    static ValueFunction analytic_1d(std::function<double(double, double)> v,
                                     std::function<double(double, double)> vt,
                                     std::function<double(double, double)> vx,
                                     std::function<double(double, double)> vxx) {
        return analytic(
            [v](double t, const Vec& x) { return v(t, x(0)); },
            [vt](double t, const Vec& x) { return vt(t, x(0)); },
            [vx](double t, const Vec& x) { return Vec::Constant(1, vx(t, x(0))); },
            [vxx](double t, const Vec& x) {
                Mat m(1, 1);
                m(0, 0) = vxx(t, x(0));
                return m;
            });
    }

    static ValueFunction finite_difference(ScalarFn v, double hx = 1e-4, double ht = 1e-4) {
        ValueFunction f;
        f.mode_ = Mode::FiniteDifference;
        f.v_ = std::move(v);
        f.hx_ = hx;
        f.ht_ = ht;
        return f;
    }

    Mode mode() const { return mode_; }
    double hx() const { return hx_; }
    double ht() const { return ht_; }

    double value(double t, const Vec& x) const { return v_(t, x); }

    double dV_dt(double t, const Vec& x) const {
        if (mode_ == Mode::Analytic) return vt_(t, x);
        auto f = [&](double s) { return v_(s, x); };
        return d1_richardson(f, t, ht_);
    }

    Vec grad(double t, const Vec& x) const {
        if (mode_ == Mode::Analytic) return grad_(t, x);
        Vec g(x.size());
        for (int i = 0; i < x.size(); ++i) {
            auto f = [&](double s) {
                Vec y = x;
                y(i) = s;
                return v_(t, y);
            };
            g(i) = d1_richardson(f, x(i), hx_);
        }
        return g;
    }

    Mat hessian(double t, const Vec& x) const {
        if (mode_ == Mode::Analytic) return sym(hess_(t, x));
        const int d = static_cast<int>(x.size());
        Mat h(d, d);
        for (int i = 0; i < d; ++i) {
            auto f = [&](double s) {
                Vec y = x;
                y(i) = s;
                return v_(t, y);
            };
            h(i, i) = d2_richardson(f, x(i), hx_);
        }
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                auto f = [&](double a, double b) {
                    Vec y = x;
                    y(i) = a;
                    y(j) = b;
                    return v_(t, y);
                };
                double v = cross_richardson(f, x(i), x(j), hx_);
                h(i, j) = v;
                h(j, i) = v;
            }
        return h;
    }

private:
    // Centered first difference with one Richardson step: O(h^4).
    template <class F>
    static double d1_richardson(const F& f, double x, double h) {
        double a = (f(x + h) - f(x - h)) / (2.0 * h);
        double b = (f(x + 2.0 * h) - f(x - 2.0 * h)) / (4.0 * h);
        return (4.0 * a - b) / 3.0;
    }

    // Centered second difference with one Richardson step: O(h^4).
    template <class F>
    static double d2_richardson(const F& f, double x, double h) {
        double fx = f(x);
        double a = (f(x + h) - 2.0 * fx + f(x - h)) / (h * h);
        double b = (f(x + 2.0 * h) - 2.0 * fx + f(x - 2.0 * h)) / (4.0 * h * h);
        return (4.0 * a - b) / 3.0;
    }

    // Mixed second difference with one Richardson step.
    template <class F>
    static double cross_richardson(const F& f, double x, double y, double h) {
        auto stencil = [&](double s) {
            return (f(x + s, y + s) - f(x + s, y - s) - f(x - s, y + s) + f(x - s, y - s)) /
                   (4.0 * s * s);
        };
        double a = stencil(h);
        double b = stencil(2.0 * h);
        return (4.0 * a - b) / 3.0;
    }

    Mode mode_ = Mode::Analytic;
    ScalarFn v_, vt_;
    VecFn grad_;
    MatFn hess_;
    double hx_ = 1e-4, ht_ = 1e-4;
};

} // namespace gcalc
