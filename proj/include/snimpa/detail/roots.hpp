#pragma once

#include <cmath>
#include <string>

#include "snimpa/errors.hpp"

namespace snimpa::detail {

struct RootOptions {
    double tolerance = 1e-12;  // on |step|
    int max_iterations = 200;
};

/// Damped Newton iteration. The step is halved until |f| decreases (up to 40
/// times); convergence is declared when the accepted step is below tolerance.
template <class F, class DF>
double damped_newton(F&& f, DF&& df, double x0, const RootOptions& opt,
                     const char* what = "damped Newton") {
    double x = x0;
    double fx = f(x);
    for (int it = 0; it < opt.max_iterations; ++it) {
        const double slope = df(x);
        if (slope == 0.0 || !std::isfinite(slope)) {
            throw SolverError(std::string(what) + ": vanishing derivative", std::abs(fx));
        }
        double step = -fx / slope;
        double lambda = 1.0;
        double x_new = x + step;
        double f_new = f(x_new);
        int halvings = 0;
        while (std::abs(f_new) > std::abs(fx) && halvings < 40 && std::abs(fx) > 0.0) {
            lambda *= 0.5;
            x_new = x + lambda * step;
            f_new = f(x_new);
            ++halvings;
        }
        const double taken = std::abs(x_new - x);
        x = x_new;
        fx = f_new;
        if (taken <= opt.tolerance || fx == 0.0) {
            return x;
        }
    }
    throw SolverError(std::string(what) + ": iteration budget exhausted", std::abs(fx));
}

/// Newton with a bisection safeguard on a sign-changing bracket [lo, hi].
template <class F, class DF>
double bracketed_newton(F&& f, DF&& df, double lo, double hi, const RootOptions& opt,
                        const char* what = "bracketed Newton") {
    double f_lo = f(lo);
    double f_hi = f(hi);
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if ((f_lo > 0.0) == (f_hi > 0.0)) {
        throw SolverError(std::string(what) + ": bracket does not enclose a root",
                          std::min(std::abs(f_lo), std::abs(f_hi)));
    }
    if (f_lo > 0.0) {
        std::swap(lo, hi);
    }
    double x = 0.5 * (lo + hi);
    double fx = f(x);
    for (int it = 0; it < opt.max_iterations; ++it) {
        if (fx < 0.0) lo = x; else hi = x;
        const double slope = df(x);
        double x_new = x - fx / slope;
        const bool inside = (x_new - lo) * (x_new - hi) < 0.0;
        if (!inside || !std::isfinite(x_new)) {
            x_new = 0.5 * (lo + hi);
        }
        const double taken = std::abs(x_new - x);
        x = x_new;
        fx = f(x);
        if (taken <= opt.tolerance || fx == 0.0) {
            return x;
        }
    }
    throw SolverError(std::string(what) + ": iteration budget exhausted", std::abs(fx));
}

/// Plain bisection for monotone scalar problems where only the sign is reliable.
template <class F>
double bisect(F&& f, double lo, double hi, double tolerance, int max_iterations = 200) {
    double f_lo = f(lo);
    for (int it = 0; it < max_iterations && std::abs(hi - lo) > tolerance; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = f(mid);
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace snimpa::detail
