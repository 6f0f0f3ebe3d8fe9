#pragma once

#include <functional>
#include <span>
#include <vector>

namespace cdkit {

// COST fits sum_k beta_k T_{2k-1}(x) to -1/x on [zeta, 1] in plain L2;
// ACTION fits the same odd series with weight x^2, i.e. it minimizes
// int (x * series + 1)^2 dx, the action form of the same window problem.
enum class FitMode { COST, ACTION };

struct ChebFit {
    int ell = 0;      // number of odd Chebyshev coefficients
    double zeta = 0;  // lower edge of the fit window, in (0, 1)
    FitMode mode = FitMode::COST;
    std::vector<double> betas; // betas[k-1] multiplies T_{2k-1}(x)
    double residual = 0;       // minimized window integral
    double condition = 0;      // Gram matrix condition number
};

ChebFit fit_inverse(int ell, double zeta, FitMode mode = FitMode::COST);

// Clenshaw evaluation of sum_k betas[k-1] T_{2k-1}(x); exactly odd in x.
double eval_beta_series(std::span<const double> betas, double x);
double eval_fit(const ChebFit& fit, double x);

// Recomputes the stored residual integral from the stored coefficients.
double fit_residual(const ChebFit& fit);

// Odd-series basis changes: betas (Chebyshev) <-> alphas (monomial, alphas[k-1]
// multiplies x^{2k-1}). Exact integer recursion; warns above ell = 20 where the
// monomial basis itself loses double precision.
std::vector<double> cheb_to_monomial(std::span<const double> betas);
std::vector<double> monomial_to_cheb(std::span<const double> alphas);

struct ZetaSearchOptions {
    double lo = 1e-4;
    double hi = 0.5;
    int grid = 40;         // log-spaced scan points
    double rel_tol = 1e-3; // golden-section stop on relative zeta width
};

struct ZetaTableRow {
    int ell = 0;
    double zeta_star = 0;
    double objective = 0; // objective value at zeta_star
};

// Per ell, the zeta maximizing the objective: log-grid scan then golden-section
// refinement. Objective exceptions are rethrown tagged with the offending zeta.
std::vector<ZetaTableRow> optimal_zeta_table(std::span<const int> ells,
                                             const std::function<double(int, double)>& objective,
                                             const ZetaSearchOptions& opts = {});

} // namespace cdkit
