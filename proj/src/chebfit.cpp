#include "cdkit/chebfit.hpp"

#include <cmath>
#include <iostream>
#include <string>

#include <Eigen/Dense>

#include "cdkit/errors.hpp"
#include "cdkit/quadrature.hpp"

namespace cdkit {

namespace {

double cheb_T(int n, double x) {
    if (n == 0) return 1.0;
    double prev = 1.0, cur = x;
    for (int k = 2; k <= n; ++k) {
        double next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

void validate(int ell, double zeta) {
    if (ell < 1) throw ConfigError("fit_inverse: ell must be >= 1, got " + std::to_string(ell));
    if (!(zeta > 0.0 && zeta < 1.0))
        throw ConfigError("fit_inverse: zeta must lie in (0, 1), got " + std::to_string(zeta));
}

// Minimized integral of the window deviation; also the recompute path, so the
// stored value and fit_residual agree to roundoff by construction.
double residual_integral(double zeta, FitMode mode, std::span<const double> betas) {
    auto integrand = [&](double x) {
        double s = eval_beta_series(betas, x);
        double dev = s + 1.0 / x;
        if (mode == FitMode::ACTION) dev *= x;
        return dev * dev;
    };
    return integrate(integrand, zeta, 1.0, 1e-12);
}

} // namespace

double eval_beta_series(std::span<const double> betas, double x) {
    // Clenshaw on the full series of degree 2*ell-1 with zero even coefficients.
    const int n = 2 * int(betas.size()) - 1;
    if (n < 1) return 0.0;
    double b1 = 0.0, b2 = 0.0;
    for (int k = n; k >= 1; --k) {
        double ck = (k & 1) ? betas[(k - 1) / 2] : 0.0;
        double b0 = ck + 2.0 * x * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    return x * b1 - b2;
}

double eval_fit(const ChebFit& fit, double x) { return eval_beta_series(fit.betas, x); }

ChebFit fit_inverse(int ell, double zeta, FitMode mode) {
    validate(ell, zeta);

    // weight 1 (COST) or x^2 (ACTION); target -1/x in both modes
    auto weight = [mode](double x) { return mode == FitMode::ACTION ? x * x : 1.0; };

    Eigen::MatrixXd G(ell, ell);
    Eigen::VectorXd rhs(ell);
    for (int j = 0; j < ell; ++j) {
        for (int k = j; k < ell; ++k) {
            double v = integrate(
                [&](double x) {
                    return weight(x) * cheb_T(2 * j + 1, x) * cheb_T(2 * k + 1, x);
                },
                zeta, 1.0, 1e-12);
            G(j, k) = v;
            G(k, j) = v;
        }
        rhs(j) = -integrate([&](double x) { return weight(x) * cheb_T(2 * j + 1, x) / x; },
                            zeta, 1.0, 1e-12);
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    if (es.info() != Eigen::Success)
        throw NumericalError("fit_inverse: Gram eigendecomposition failed");
    const auto& evals = es.eigenvalues();
    double emin = evals(0), emax = evals(ell - 1);
    double condition = (emin > 0.0) ? emax / emin : std::numeric_limits<double>::infinity();
    if (!(emin > 0.0) || condition > 1e15)
        throw NumericalError("fit_inverse: Gram matrix condition " + std::to_string(condition) +
                             " beyond recovery at ell=" + std::to_string(ell) +
                             "; reduce ell or enlarge zeta");

    Eigen::VectorXd beta =
        es.eigenvectors() * (es.eigenvectors().transpose() * rhs).cwiseQuotient(evals);

    ChebFit fit;
    fit.ell = ell;
    fit.zeta = zeta;
    fit.mode = mode;
    fit.betas.assign(beta.data(), beta.data() + ell);
    fit.condition = condition;
    fit.residual = residual_integral(zeta, mode, fit.betas);
    return fit;
}

double fit_residual(const ChebFit& fit) {
    validate(fit.ell, fit.zeta);
    if (int(fit.betas.size()) != fit.ell)
        throw ConfigError("fit_residual: beta count does not match ell");
    return residual_integral(fit.zeta, fit.mode, fit.betas);
}

namespace {

// rows: monomial coefficient vectors of T_n, n = 0..deg; entries are exact
// integers (long double keeps the ~1e-19 accumulation error off the exact
// entries and buys three digits on the ill-conditioned triangular transforms)
std::vector<std::vector<long double>> cheb_monomial_table(int deg) {
    std::vector<std::vector<long double>> T(deg + 1, std::vector<long double>(deg + 1, 0.0L));
    T[0][0] = 1.0L;
    if (deg >= 1) T[1][1] = 1.0L;
    for (int n = 2; n <= deg; ++n)
        for (int p = 0; p <= n; ++p) {
            long double v = -T[n - 2][p];
            if (p > 0) v += 2.0L * T[n - 1][p - 1];
            T[n][p] = v;
        }
    return T;
}

void warn_if_ill_conditioned(const char* fn, int ell) {
    if (ell > 20)
        std::cerr << fn << ": ell=" << ell
                  << " exceeds 20; monomial coefficients lose double precision\n";
}

} // namespace

std::vector<double> cheb_to_monomial(std::span<const double> betas) {
    const int ell = int(betas.size());
    if (ell == 0) return {};
    warn_if_ill_conditioned("cheb_to_monomial", ell);
    const auto T = cheb_monomial_table(2 * ell - 1);
    std::vector<double> alphas(ell);
    for (int m = 1; m <= ell; ++m) {
        long double acc = 0.0L;
        for (int k = m; k <= ell; ++k) acc += (long double)betas[k - 1] * T[2 * k - 1][2 * m - 1];
        alphas[m - 1] = double(acc);
    }
    return alphas;
}

std::vector<double> monomial_to_cheb(std::span<const double> alphas) {
    const int ell = int(alphas.size());
    if (ell == 0) return {};
    warn_if_ill_conditioned("monomial_to_cheb", ell);
    const auto T = cheb_monomial_table(2 * ell - 1);
    // back-substitution from the highest odd power (T_n is lower triangular in degree)
    std::vector<long double> rem(alphas.begin(), alphas.end());
    std::vector<double> betas(ell, 0.0);
    for (int k = ell; k >= 1; --k) {
        long double bk = rem[k - 1] / T[2 * k - 1][2 * k - 1]; // leading coeff 2^{2k-2}
        betas[k - 1] = double(bk);
        for (int m = 1; m <= k; ++m) rem[m - 1] -= bk * T[2 * k - 1][2 * m - 1];
    }
    return betas;
}

std::vector<ZetaTableRow> optimal_zeta_table(std::span<const int> ells,
                                             const std::function<double(int, double)>& objective,
                                             const ZetaSearchOptions& opts) {
    if (!(opts.lo > 0.0 && opts.lo < opts.hi && opts.hi < 1.0))
        throw ConfigError("optimal_zeta_table: need 0 < lo < hi < 1");
    if (opts.grid < 4) throw ConfigError("optimal_zeta_table: need at least 4 grid points");

    auto guarded = [&](int ell, double zeta) {
        try {
            return objective(ell, zeta);
        } catch (const std::exception& e) {
            throw NumericalError("zeta search: objective failed at ell=" + std::to_string(ell) +
                                 ", zeta=" + std::to_string(zeta) + ": " + e.what());
        }
    };

    std::vector<ZetaTableRow> table;
    table.reserve(ells.size());
    const double la = std::log(opts.lo), lb = std::log(opts.hi);
    for (int ell : ells) {
        int best = 0;
        std::vector<double> vals(opts.grid);
        for (int i = 0; i < opts.grid; ++i) {
            double lz = la + (lb - la) * i / (opts.grid - 1);
            vals[i] = guarded(ell, std::exp(lz));
            if (vals[i] > vals[best]) best = i;
        }
        // golden-section refine inside the neighboring grid cells
        double step = (lb - la) / (opts.grid - 1);
        double a = la + step * std::max(0, best - 1);
        double b = la + step * std::min(opts.grid - 1, best + 1);
        const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - invphi * (b - a), d = a + invphi * (b - a);
        double fc = guarded(ell, std::exp(c)), fd = guarded(ell, std::exp(d));
        while (b - a > opts.rel_tol) {
            if (fc > fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - invphi * (b - a);
                fc = guarded(ell, std::exp(c));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + invphi * (b - a);
                fd = guarded(ell, std::exp(d));
            }
        }
        double lz = fc > fd ? c : d;
        table.push_back({ell, std::exp(lz), std::max(fc, fd)});
    }
    return table;
}

} // namespace cdkit
