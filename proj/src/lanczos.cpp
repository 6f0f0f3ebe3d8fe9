#include "cdkit/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "cdkit/errors.hpp"

namespace cdkit {

namespace {

PauliOperator truncate(const PauliOperator& op, int p, std::size_t cap) {
    PauliOperator out = op.truncated_support(p);
    if (out.n_terms() > cap) out = out.truncated_terms(cap);
    return out;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double sse = 0.0;
    double sst = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = double(x.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        f.sse += r * r;
        f.sst += (y[i] - my) * (y[i] - my);
    }
    return f;
}

} // namespace

LanczosResult lanczos_coefficients(const ModelSpec& spec, const PauliOperator& seed_op,
                                   int n_max, int p, const LanczosOptions& options) {
    validate_model(spec);
    if (n_max < 2)
        throw ConfigError("lanczos_coefficients: n_max must be at least 2");
    if (p < 1)
        throw ConfigError("lanczos_coefficients: support cut p must be positive");
    if (seed_op.n_sites() != spec.n_sites)
        throw ConfigError("lanczos_coefficients: seed operator lives on " +
                          std::to_string(seed_op.n_sites()) + " sites, model on " +
                          std::to_string(spec.n_sites));
    if (std::abs(frobenius_norm(seed_op) - 1.0) > 1e-8)
        throw ConfigError("lanczos_coefficients: seed operator must be normalized");
    if (options.lambda < 0.0 || options.lambda > 1.0)
        throw ConfigError("lanczos_coefficients: lambda must lie in [0, 1]");

    const PauliOperator h = hamiltonian(spec, options.lambda);

    LanczosResult out;
    out.p = p;
    out.model = to_string(spec.name);

    PauliOperator prev = PauliOperator::zero(spec.n_sites); // O_{n-2}
    PauliOperator cur = seed_op;                            // O_{n-1}
    double b_prev = 0.0;
    std::vector<PauliOperator> chain;
    const bool store = options.reorthogonalize || options.keep_operators;
    if (store) chain.push_back(cur);

    for (int n = 1; n <= n_max; ++n) {
        PauliOperator w = commutator(h, cur);
        w = truncate(w, p, options.term_cap);
        // a_n = <O_{n-1}, W> vanishes identically without truncation (trace
        // cyclicity); the support cut can reintroduce a small component.
        const cplx a = frobenius_inner(cur, w);
        if (std::abs(a) > 0.0) w -= cur * a;
        if (b_prev != 0.0) w -= prev * cplx(b_prev, 0.0);
        if (options.reorthogonalize) {
            for (const PauliOperator& o : chain) {
                const cplx overlap = frobenius_inner(o, w);
                if (std::abs(overlap) > 0.0) w -= o * overlap;
            }
        }
        w.compress();
        const double b = frobenius_norm(w);
        if (b < options.breakdown_tol) {
            out.breakdown = true;
            break;
        }
        out.b.push_back(b);
        w *= cplx(1.0 / b, 0.0);
        prev = std::move(cur);
        cur = std::move(w);
        b_prev = b;
        if (store) chain.push_back(cur);
    }
    if (options.keep_operators) out.operators = std::move(chain);
    return out;
}

PauliOperator default_lanczos_seed(const ModelSpec& spec) {
    PauliOperator dh = dlambda_h(spec);
    const double norm = frobenius_norm(dh);
    if (norm < 1e-12)
        throw ConfigError("default_lanczos_seed: " + to_string(spec.name) +
                          " has no anneal direction; pass a seed operator explicitly");
    dh *= cplx(1.0 / norm, 0.0);
    return dh;
}

LanczosResult averaged_lanczos(const ModelSpec& spec, const PauliOperator& seed_op, int n_max,
                               int p, const AverageSpec& avg, const LanczosOptions& options) {
    if (avg.n_values < 1)
        throw ConfigError("averaged_lanczos: need at least one coupling value");
    if (!(avg.spread >= 0.0) || avg.spread >= 1.0)
        throw ConfigError("averaged_lanczos: spread must lie in [0, 1)");
    const double base = coupling(spec, avg.coupling_key);

    std::vector<LanczosResult> runs;
    runs.reserve(std::size_t(avg.n_values));
    for (int i = 0; i < avg.n_values; ++i) {
        const double f = avg.n_values == 1
                             ? 1.0
                             : 1.0 - avg.spread +
                                   2.0 * avg.spread * double(i) / double(avg.n_values - 1);
        ModelSpec varied = spec;
        varied.couplings[avg.coupling_key] = base * f;
        runs.push_back(lanczos_coefficients(varied, seed_op, n_max, p, options));
    }

    std::size_t len = runs.front().b.size();
    for (const LanczosResult& r : runs) len = std::min(len, r.b.size());

    LanczosResult out;
    out.p = p;
    out.model = to_string(spec.name) + "|avg " + avg.coupling_key + " x" +
                std::to_string(avg.n_values);
    out.b.assign(len, 0.0);
    for (const LanczosResult& r : runs)
        for (std::size_t i = 0; i < len; ++i) out.b[i] += r.b[i] / double(avg.n_values);
    out.breakdown = int(len) < n_max;
    return out;
}

int divergence_index(const LanczosResult& a, const LanczosResult& b, double rel_tol) {
    const std::size_t m = std::min(a.b.size(), b.b.size());
    for (std::size_t i = 0; i < m; ++i) {
        const double scale = std::max(std::abs(a.b[i]), std::abs(b.b[i]));
        if (scale > 0.0 && std::abs(a.b[i] - b.b[i]) / scale > rel_tol) return int(i) + 1;
    }
    return 0;
}

GrowthFit growth_exponent(LanczosResult& result, int n_lo, int n_hi, double width,
                          bool log_correction) {
    if (!(width > 0.0))
        throw ConfigError("growth_exponent: smoothing width must be positive");
    if (n_lo < 1 || n_hi > int(result.b.size()) || n_hi < n_lo)
        throw ConfigError("growth_exponent: fit range [" + std::to_string(n_lo) + ", " +
                          std::to_string(n_hi) + "] does not fit " +
                          std::to_string(result.b.size()) + " coefficients");
    if (n_hi - n_lo + 1 < 6)
        throw ConfigError("growth_exponent: need at least 6 points in the fit range");
    if (log_correction && n_lo < 2)
        throw ConfigError("growth_exponent: the corrected abscissa needs n_lo >= 2");

    // Gaussian smoothing of log b paired with the same-weighted centroid of
    // the abscissa: a pure power law in the abscissa maps onto a straight
    // line exactly.
    const auto abscissa = [log_correction](int m) {
        return log_correction ? std::log(double(m) / std::log(double(m)))
                              : std::log(double(m));
    };
    const int m_lo = log_correction ? 2 : 1;
    std::vector<double> xs, ys;
    xs.reserve(std::size_t(n_hi - n_lo + 1));
    ys.reserve(xs.capacity());
    for (int n = n_lo; n <= n_hi; ++n) {
        double wy = 0.0, wx = 0.0, den = 0.0;
        for (int m = m_lo; m <= int(result.b.size()); ++m) {
            const double d = double(m - n);
            const double wgt = std::exp(-d * d / (2.0 * width * width));
            wy += wgt * std::log(result.b[std::size_t(m - 1)]);
            wx += wgt * abscissa(m);
            den += wgt;
        }
        ys.push_back(wy / den);
        xs.push_back(wx / den);
    }

    const LineFit line = fit_line(xs, ys);
    GrowthFit fit;
    fit.one_over_alpha = line.slope;
    fit.r_squared = line.sst > 0.0 ? 1.0 - line.sse / line.sst : 1.0;
    fit.n_lo = n_lo;
    fit.n_hi = n_hi;
    fit.smoothing_width = width;
    fit.log_correction = log_correction;
    result.growth = fit;
    return fit;
}

TailFit tail_fit(const SpectralHistogram& hist, double omega_lo, double omega_hi) {
    if (!(omega_hi > omega_lo))
        throw ConfigError("tail_fit: empty frequency range");

    std::vector<double> x, y;
    for (std::size_t i = 0; i < hist.centers.size(); ++i) {
        const double w = hist.centers[i];
        if (w < omega_lo || w > omega_hi) continue;
        if (!(hist.density[i] > 0.0))
            throw ConfigError("tail_fit: non-positive density at omega = " + std::to_string(w));
        x.push_back(std::abs(w));
        y.push_back(std::log(hist.density[i]));
    }
    if (x.size() < 4)
        throw ConfigError("tail_fit: need at least 4 bins in range, found " +
                          std::to_string(x.size()));

    std::vector<double> t(x.size());
    const auto sse_at = [&](double alpha) {
        for (std::size_t i = 0; i < x.size(); ++i) t[i] = std::pow(x[i], alpha);
        return fit_line(t, y);
    };

    // log density = c - gamma |omega|^alpha is linear in (c, gamma) at fixed
    // alpha, so scan a grid and refine the best cell by golden section.
    constexpr double kLo = 0.5, kHi = 3.0, kStep = 0.05;
    double best_alpha = kLo, best_sse = sse_at(kLo).sse;
    for (double alpha = kLo + kStep; alpha <= kHi + 1e-12; alpha += kStep) {
        const double s = sse_at(alpha).sse;
        if (s < best_sse) {
            best_sse = s;
            best_alpha = alpha;
        }
    }
    double a = std::max(kLo, best_alpha - kStep), b = std::min(kHi, best_alpha + kStep);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
    double f1 = sse_at(c1).sse, f2 = sse_at(c2).sse;
    for (int it = 0; it < 80; ++it) {
        if (f1 <= f2) {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - gr * (b - a);
            f1 = sse_at(c1).sse;
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + gr * (b - a);
            f2 = sse_at(c2).sse;
        }
    }
    const double alpha = 0.5 * (a + b);
    const LineFit line = sse_at(alpha);

    TailFit out;
    out.alpha = alpha;
    out.gamma = -line.slope;
    out.log_c = line.intercept;
    out.r_squared = line.sst > 0.0 ? 1.0 - line.sse / line.sst : 1.0;
    return out;
}

} // namespace cdkit
