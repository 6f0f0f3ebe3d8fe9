#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cdkit/chebfit.hpp"
#include "cdkit/errors.hpp"
#include "cdkit/quadrature.hpp"

using namespace cdkit;

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

// Exact antiderivative of T_n, for the closed-form normal-equation oracle.
double cheb_T_antideriv(int n, double x) {
    if (n == 0) return x;
    if (n == 1) return 0.5 * x * x;
    return 0.5 * (cheb_T(n + 1, x) / (n + 1) - cheb_T(n - 1, x) / (n - 1));
}

} // namespace

TEST_CASE("quadrature: polynomials, trig, and steep integrands") {
    for (int k : {0, 1, 3, 7, 19, 29}) {
        double got = integrate([k](double x) { return std::pow(x, k); }, 0.0, 1.0);
        CHECK(std::abs(got - 1.0 / (k + 1)) <= 1e-13);
    }
    double got = integrate([](double x) { return std::cos(x); }, 0.0, 2.0);
    CHECK(std::abs(got - std::sin(2.0)) <= 1e-13);

    const double zeta = 1e-4;
    double steep = integrate([](double x) { return 1.0 / (x * x); }, zeta, 1.0);
    CHECK(std::abs(steep - (1.0 / zeta - 1.0)) <= 1e-8 * (1.0 / zeta));
}

TEST_CASE("closed form at ell=1: COST beta1 = -3(1-z)/(1-z^3)") {
    for (double zeta : {0.1, 0.3, 0.02}) {
        auto fit = fit_inverse(1, zeta, FitMode::COST);
        double expect = -3.0 * (1.0 - zeta) / (1.0 - zeta * zeta * zeta);
        REQUIRE(fit.betas.size() == 1);
        CHECK(std::abs(fit.betas[0] - expect) <= 1e-12 * std::abs(expect));
    }
    CHECK(std::abs(fit_inverse(1, 0.1).betas[0] - (-2.7027)) <= 1e-4);

    // window collapsing to the right edge: the series must approach -1/x ~ -1 there
    auto tight = fit_inverse(1, 0.999, FitMode::COST);
    CHECK(std::abs(tight.betas[0] + 1.0) <= 1e-2);
}

TEST_CASE("closed form at ell=1: ACTION beta1 = -5(1-z^3)/(3(1-z^5))") {
    for (double zeta : {0.1, 0.25}) {
        auto fit = fit_inverse(1, zeta, FitMode::ACTION);
        double z3 = zeta * zeta * zeta, z5 = z3 * zeta * zeta;
        double expect = -5.0 * (1.0 - z3) / (3.0 * (1.0 - z5));
        CHECK(std::abs(fit.betas[0] - expect) <= 1e-12 * std::abs(expect));
    }
}

TEST_CASE("normal equations match the exact Chebyshev-integral oracle") {
    const int ell = 4;
    const double zeta = 0.1;
    auto I = [&](int n) { return cheb_T_antideriv(n, 1.0) - cheb_T_antideriv(n, zeta); };

    Eigen::MatrixXd G(ell, ell);
    Eigen::VectorXd b(ell);
    for (int j = 1; j <= ell; ++j) {
        for (int k = 1; k <= ell; ++k)
            G(j - 1, k - 1) = 0.5 * (I(2 * j + 2 * k - 2) + I(2 * std::abs(j - k)));
        // T_{2j-1}(x)/x = (-1)^{j-1} [1 + 2 sum_{m=1}^{j-1} (-1)^m T_{2m}(x)]
        double v = I(0);
        for (int m = 1; m <= j - 1; ++m) v += 2.0 * ((m & 1) ? -1.0 : 1.0) * I(2 * m);
        b(j - 1) = -(((j - 1) & 1) ? -1.0 : 1.0) * v;
    }
    Eigen::VectorXd beta = G.ldlt().solve(b);

    auto fit = fit_inverse(ell, zeta, FitMode::COST);
    for (int k = 0; k < ell; ++k) CHECK(std::abs(fit.betas[k] - beta(k)) <= 1e-9);
}

TEST_CASE("residual deviation is orthogonal to the fit basis") {
    for (auto mode : {FitMode::COST, FitMode::ACTION}) {
        auto fit = fit_inverse(4, 0.05, mode);
        for (int j = 1; j <= fit.ell; ++j) {
            double ip = integrate(
                [&](double x) {
                    double w = (mode == FitMode::ACTION) ? x * x : 1.0;
                    return w * (eval_fit(fit, x) + 1.0 / x) * cheb_T(2 * j - 1, x);
                },
                fit.zeta, 1.0);
            CHECK(std::abs(ip) <= 1e-8);
        }
    }
}

TEST_CASE("residual is nonincreasing in ell and recomputable") {
    double prev = std::numeric_limits<double>::infinity();
    for (int ell = 1; ell <= 8; ++ell) {
        auto fit = fit_inverse(ell, 0.1, FitMode::COST);
        CHECK(fit.residual <= prev + 1e-12);
        CHECK(fit.residual >= 0.0);
        prev = fit.residual;
    }
    auto fit = fit_inverse(4, 0.07, FitMode::COST);
    CHECK(std::abs(fit_residual(fit) - fit.residual) <= 1e-10 * fit.residual);
    CHECK(fit.condition >= 1.0);
}

TEST_CASE("window fit approximates -1/x once ell clears 1/zeta") {
    auto sup_err = [](const ChebFit& fit) {
        double worst = 0.0;
        for (int i = 0; i <= 400; ++i) {
            double x = fit.zeta + (1.0 - fit.zeta) * i / 400.0;
            worst = std::max(worst, std::abs(eval_fit(fit, x) + 1.0 / x));
        }
        return worst;
    };
    // shallow window, cheap series
    CHECK(sup_err(fit_inverse(8, 0.5, FitMode::COST)) <= 2e-3);
    CHECK(sup_err(fit_inverse(16, 0.3, FitMode::COST)) <= 1.5e-3);

    // deep window: error decays steadily with ell (values cross-checked
    // against an independent dense least-squares implementation)
    double e8 = sup_err(fit_inverse(8, 0.1, FitMode::COST));
    double e16 = sup_err(fit_inverse(16, 0.1, FitMode::COST));
    double e32 = sup_err(fit_inverse(32, 0.1, FitMode::COST));
    CHECK(std::abs(e8 - 4.598) <= 0.01);
    CHECK(std::abs(e16 - 1.269) <= 0.01);
    CHECK(e32 <= 0.08);

    // a large-ell, small-zeta fit still solves and improves on ell = 8
    auto big = fit_inverse(64, 0.02, FitMode::COST);
    auto mid = fit_inverse(8, 0.02, FitMode::COST);
    CHECK(big.residual < mid.residual);
    CHECK(std::isfinite(big.condition));
}

TEST_CASE("series evaluation: exact odd parity, matches direct recurrence") {
    std::mt19937_64 rng(4321);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> betas(9);
    for (auto& b : betas) b = unif(rng);
    for (int i = 0; i < 50; ++i) {
        double x = unif(rng);
        double direct = 0.0;
        for (std::size_t k = 1; k <= betas.size(); ++k)
            direct += betas[k - 1] * cheb_T(2 * int(k) - 1, x);
        CHECK(std::abs(eval_beta_series(betas, x) - direct) <= 1e-14);
        CHECK(eval_beta_series(betas, -x) == -eval_beta_series(betas, x));
    }
}

TEST_CASE("basis change: T3 expansion and ell=12 roundtrip") {
    std::vector<double> betas{0.0, 1.0}; // T_3 = 4x^3 - 3x
    auto alphas = cheb_to_monomial(betas);
    REQUIRE(alphas.size() == 2);
    CHECK(alphas[0] == -3.0);
    CHECK(alphas[1] == 4.0);

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    // monomial -> Chebyshev -> monomial: well conditioned (expansion
    // coefficients of x^n in T_k are bounded), tight roundtrip up to ell = 12
    std::vector<double> a12(12);
    for (auto& a : a12) a = unif(rng);
    auto around = cheb_to_monomial(monomial_to_cheb(a12));
    REQUIRE(around.size() == a12.size());
    for (std::size_t k = 0; k < a12.size(); ++k)
        CHECK(std::abs(around[k] - a12[k]) <= 1e-10 * std::max(1.0, std::abs(a12[k])));

    // Chebyshev -> monomial -> Chebyshev passes through monomial coefficients
    // of size ~2^(2 ell - 2), so rounding them to double costs ~|alpha| eps;
    // tight at ell = 6, only ~1e-9 at ell = 12
    std::vector<double> b6(6), b12(12);
    for (auto& b : b6) b = unif(rng);
    for (auto& b : b12) b = unif(rng);
    auto r6 = monomial_to_cheb(cheb_to_monomial(b6));
    for (std::size_t k = 0; k < b6.size(); ++k)
        CHECK(std::abs(r6[k] - b6[k]) <= 1e-10 * std::max(1.0, std::abs(b6[k])));
    auto r12 = monomial_to_cheb(cheb_to_monomial(b12));
    for (std::size_t k = 0; k < b12.size(); ++k)
        CHECK(std::abs(r12[k] - b12[k]) <= 1e-8 * std::max(1.0, std::abs(b12[k])));
}

TEST_CASE("zeta search finds an interior optimum and tags failures") {
    auto objective = [](int, double zeta) {
        double d = std::log(zeta) - std::log(0.07);
        return -d * d;
    };
    int ells[] = {2, 4};
    auto table = optimal_zeta_table(ells, objective);
    REQUIRE(table.size() == 2);
    for (const auto& row : table) {
        CHECK(std::abs(row.zeta_star - 0.07) <= 3e-3 * 0.07);
        CHECK(row.objective >= -1e-5);
    }
    CHECK(table[0].ell == 2);
    CHECK(table[1].ell == 4);

    auto bad = [](int, double zeta) -> double {
        if (zeta > 0.2) throw std::runtime_error("boom");
        return zeta;
    };
    try {
        (void)optimal_zeta_table(ells, bad);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("zeta=") != std::string::npos);
    }
}

TEST_CASE("fit input validation") {
    CHECK_THROWS_AS((void)fit_inverse(0, 0.1), ConfigError);
    CHECK_THROWS_AS((void)fit_inverse(2, 0.0), ConfigError);
    CHECK_THROWS_AS((void)fit_inverse(2, 1.0), ConfigError);
}
