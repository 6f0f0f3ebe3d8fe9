#include "cdkit/quadrature.hpp"

#include <array>
#include <cmath>

#include "cdkit/errors.hpp"

namespace cdkit {

namespace {

constexpr int kOrder = 15;

struct Rule {
    std::array<double, kOrder> x;
    std::array<double, kOrder> w;
};

// Legendre P_n roots by Newton iteration; weights 2 / ((1-x^2) P_n'(x)^2).
Rule make_rule() {
    Rule r;
    for (int i = 0; i < kOrder; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (kOrder + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int n = 2; n <= kOrder; ++n) {
                double p2 = ((2 * n - 1) * x * p1 - (n - 1) * p0) / n;
                p0 = p1;
                p1 = p2;
            }
            dp = kOrder * (x * p1 - p0) / (x * x - 1.0);
            double step = p1 / dp;
            x -= step;
            if (std::abs(step) < 1e-16) break;
        }
        r.x[i] = x;
        r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

const Rule& rule() {
    static const Rule r = make_rule();
    return r;
}

double gauss15(const std::function<double(double)>& f, double a, double b) {
    const Rule& r = rule();
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < kOrder; ++i) acc += r.w[i] * f(mid + half * r.x[i]);
    return acc * half;
}

double adapt(const std::function<double(double)>& f, double a, double b, double whole,
             double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double left = gauss15(f, a, m);
    const double right = gauss15(f, m, b);
    const double err = std::abs(left + right - whole);
    if (err <= tol || err <= 1e-15 * (std::abs(left) + std::abs(right))) return left + right;
    if (depth >= 48)
        throw NumericalError("quadrature: panel refinement exhausted (integrand too rough)");
    return adapt(f, a, m, left, 0.5 * tol, depth + 1) +
           adapt(f, m, b, right, 0.5 * tol, depth + 1);
}

} // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol) {
    if (!(abs_tol > 0.0)) throw ConfigError("quadrature: abs_tol must be positive");
    if (a == b) return 0.0;
    return adapt(f, a, b, gauss15(f, a, b), abs_tol, 0);
}

} // namespace cdkit
