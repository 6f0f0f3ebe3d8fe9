#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "cdkit/errors.hpp"

namespace cdkit {

struct OdeOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double initial_step = 0.0; // 0 = pick from the interval
    long max_steps = 2'000'000;
};

struct OdeStats {
    long steps = 0;
    long rejected = 0;
};

namespace detail {

template <class State>
double error_ratio(const State& err, const State& y0, const State& y1, const OdeOptions& opt) {
    double worst = 0.0;
    for (long i = 0; i < err.size(); ++i) {
        const double scale =
            opt.abs_tol + opt.rel_tol * std::max(std::abs(y0(i)), std::abs(y1(i)));
        worst = std::max(worst, std::abs(err(i)) / scale);
    }
    return worst;
}

} // namespace detail

// Dormand-Prince 5(4) embedded pair with FSAL and standard step control.
// State is any Eigen vector/matrix of real or complex scalars; rhs(t, y, dydt)
// fills the derivative. Throws NumericalError (tagged with `where`) if the step
// count runs out or the step size collapses.
template <class State, class Rhs>
OdeStats integrate_adaptive(State& y, double t0, double t1, Rhs&& rhs, const OdeOptions& opt = {},
                            const std::string& where = "integrate_adaptive") {
    if (!(t1 >= t0)) throw ConfigError(where + ": time must not run backwards");
    if (t1 == t0) return {};

    State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, ytmp = y, y5 = y, err = y;
    rhs(t0, y, k1);

    double t = t0;
    double h = opt.initial_step > 0 ? opt.initial_step : (t1 - t0) / 100.0;
    OdeStats stats;

    while (t < t1) {
        h = std::min(h, t1 - t);
        if (h < 1e-14 * (std::abs(t) + 1.0))
            throw NumericalError(where + ": step size collapsed at t = " + std::to_string(t));
        if (++stats.steps > opt.max_steps)
            throw NumericalError(where + ": exceeded " + std::to_string(opt.max_steps) +
                                 " steps at t = " + std::to_string(t));

        ytmp = y + h * (1.0 / 5.0) * k1;
        rhs(t + h / 5.0, ytmp, k2);
        ytmp = y + h * ((3.0 / 40.0) * k1 + (9.0 / 40.0) * k2);
        rhs(t + 3.0 * h / 10.0, ytmp, k3);
        ytmp = y + h * ((44.0 / 45.0) * k1 - (56.0 / 15.0) * k2 + (32.0 / 9.0) * k3);
        rhs(t + 4.0 * h / 5.0, ytmp, k4);
        ytmp = y + h * ((19372.0 / 6561.0) * k1 - (25360.0 / 2187.0) * k2 +
                        (64448.0 / 6561.0) * k3 - (212.0 / 729.0) * k4);
        rhs(t + 8.0 * h / 9.0, ytmp, k5);
        ytmp = y + h * ((9017.0 / 3168.0) * k1 - (355.0 / 33.0) * k2 + (46732.0 / 5247.0) * k3 +
                        (49.0 / 176.0) * k4 - (5103.0 / 18656.0) * k5);
        rhs(t + h, ytmp, k6);
        y5 = y + h * ((35.0 / 384.0) * k1 + (500.0 / 1113.0) * k3 + (125.0 / 192.0) * k4 -
                      (2187.0 / 6784.0) * k5 + (11.0 / 84.0) * k6);
        rhs(t + h, y5, k7); // FSAL: k7 is k1 of the accepted step

        err = h * ((35.0 / 384.0 - 5179.0 / 57600.0) * k1 +
                   (500.0 / 1113.0 - 7571.0 / 16695.0) * k3 +
                   (125.0 / 192.0 - 393.0 / 640.0) * k4 +
                   (-2187.0 / 6784.0 + 92097.0 / 339200.0) * k5 +
                   (11.0 / 84.0 - 187.0 / 2100.0) * k6 - (1.0 / 40.0) * k7);

        const double ratio = detail::error_ratio(err, y, y5, opt);
        if (ratio <= 1.0) {
            t += h;
            y.swap(y5);
            k1.swap(k7);
        } else {
            ++stats.rejected;
        }
        const double grow = ratio > 0 ? 0.9 * std::pow(ratio, -0.2) : 5.0;
        h *= std::clamp(grow, 0.2, 5.0);
    }
    return stats;
}

// Classical fixed-step fourth-order Runge-Kutta: n_steps equal steps, no
// adaptivity, bit-reproducible across runs for identical inputs.
template <class State, class Rhs>
void integrate_fixed_rk4(State& y, double t0, double t1, long n_steps, Rhs&& rhs) {
    if (n_steps < 1) throw ConfigError("integrate_fixed_rk4: need at least one step");
    State k1 = y, k2 = y, k3 = y, k4 = y, ytmp = y;
    const double h = (t1 - t0) / double(n_steps);
    for (long s = 0; s < n_steps; ++s) {
        const double t = t0 + h * double(s);
        rhs(t, y, k1);
        ytmp = y + (0.5 * h) * k1;
        rhs(t + 0.5 * h, ytmp, k2);
        ytmp = y + (0.5 * h) * k2;
        rhs(t + 0.5 * h, ytmp, k3);
        ytmp = y + h * k3;
        rhs(t + h, ytmp, k4);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
}

} // namespace cdkit
