#include "doctest.h"

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "cdkit/agp.hpp"
#include "cdkit/chebfit.hpp"
#include "cdkit/errors.hpp"
#include "cdkit/models.hpp"
#include "cdkit/spectral.hpp"

using namespace cdkit;

namespace {

ChebFit raw_fit(std::vector<double> betas, double zeta = 0.2) {
    ChebFit f;
    f.ell = int(betas.size());
    f.zeta = zeta;
    f.betas = std::move(betas);
    return f;
}

PauliOperator single_spin_h() {
    PauliOperator h(1);
    h.add_term(PauliString::single(0, Axis::X), 1.0);
    return h;
}

PauliOperator single_spin_dh() {
    PauliOperator dh(1);
    dh.add_term(PauliString::single(0, Axis::Z), 1.0);
    dh.add_term(PauliString::single(0, Axis::X), -1.0);
    return dh;
}

} // namespace

TEST_CASE("order-one operator is the scaled commutator") {
    // With a single window weight the recursion collapses to
    // A = i beta_1 [H, dH] / Omega^2.
    const ModelSpec spec = nnn_tfi(4);
    const double lambda = 0.35, omega = 7.5, beta1 = -0.42;

    const AgpOperator a = build_universal_agp(spec, lambda, raw_fit({beta1}), omega);
    REQUIRE(a.symbolic());
    CHECK(a.ell == 1);

    const PauliOperator h = hamiltonian(spec, lambda);
    const PauliOperator dh = dlambda_h(spec);
    PauliOperator expect = commutator(h, dh);
    expect *= cplx(0.0, beta1 / (omega * omega));

    const Eigen::MatrixXcd diff = a.to_dense() - expect.to_dense();
    CHECK(diff.cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("single spin: order-one window weight from the variational solution") {
    // beta_1 = alpha_1 Omega^2 maps the variational alpha_1 = -1/(4 + mu^2)
    // onto the universal operator; both give A = -2 sigma^y / (4 + mu^2).
    const PauliOperator h = single_spin_h();
    const PauliOperator dh = single_spin_dh();
    const double mu = 0.7, omega = 3.0;

    const SpectralData sd = diagonalize(h, dh, Ensemble::INFINITE_T);
    const VariationalAgp va = variational_krylov_agp(sd, 1, mu);
    REQUIRE(va.alphas.size() == 1);
    CHECK(va.alphas[0] == doctest::Approx(-1.0 / (4.0 + mu * mu)).epsilon(1e-12));

    const AgpOperator a =
        build_universal_agp(h, dh, raw_fit({va.alphas[0] * omega * omega}), omega);
    // variational operator X = i alpha_1 [H, dH]
    PauliOperator x = commutator(h, dh);
    x *= cplx(0.0, va.alphas[0]);
    CHECK((a.to_dense() - x.to_dense()).cwiseAbs().maxCoeff() <= 1e-12);

    // closed form: [sigma^x, sigma^z] = -2i sigma^y
    Eigen::Matrix2cd sy;
    sy << 0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0;
    const Eigen::Matrix2cd expect = -2.0 / (4.0 + mu * mu) * sy;
    CHECK((a.to_dense() - expect).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("symbolic and dense backends agree") {
    const ModelSpec spec = nnn_tfi(6);
    const double lambda = 0.4, omega = 11.0;
    const ChebFit fit = fit_inverse(4, 0.2);

    const AgpOperator sym = build_universal_agp(spec, lambda, fit, omega);
    REQUIRE(sym.symbolic());

    // A term cap of one string forces the overflow path; N = 6 fits the dense
    // backend, so the same operator comes back as a matrix.
    const AgpOperator dense = build_universal_agp(spec, lambda, fit, omega, 1);
    REQUIRE(!dense.symbolic());
    REQUIRE(dense.dense_form.has_value());

    CHECK((sym.to_dense() - dense.to_dense()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("eigenbasis matrix elements follow the window polynomial") {
    // The operator recursion and the spectral-formula route must agree:
    // <m|A|n> = (i/Omega) sum_k beta_k T_{2k-1}(omega_mn / Omega) M_mn.
    const ModelSpec spec = nnn_tfi(6); // periodic chain: degenerate levels included
    const double lambda = 0.55;
    const ChebFit fit = fit_inverse(5, 0.15);

    const PauliOperator h = hamiltonian(spec, lambda);
    const PauliOperator dh = dlambda_h(spec);
    const SpectralData sd = diagonalize(h, dh, Ensemble::INFINITE_T);
    const double span = sd.energies(sd.dim() - 1) - sd.energies(0);
    const double omega = 1.2 * span;

    const AgpOperator a = build_universal_agp(spec, lambda, fit, omega);
    const Eigen::MatrixXcd dense = a.to_dense();

    // Hermitian and odd under the Liouvillian parity (zero eigenbasis diagonal).
    CHECK((dense - dense.adjoint()).cwiseAbs().maxCoeff() <= 1e-10);

    const Eigen::MatrixXcd vc = sd.eigenvectors.cast<cplx>();
    const Eigen::MatrixXcd in_basis = vc.adjoint() * dense * vc;

    Eigen::MatrixXcd expect(sd.dim(), sd.dim());
    for (int m = 0; m < sd.dim(); ++m) {
        for (int n = 0; n < sd.dim(); ++n) {
            const double w = sd.energies(m) - sd.energies(n);
            const double f = eval_beta_series(fit.betas, w / omega) / omega;
            expect(m, n) = cplx(0.0, f) * sd.matrix_elements(m, n);
        }
    }
    CHECK((in_basis - expect).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(in_basis.diagonal().cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("term overflow without a dense fallback is a resource error") {
    const ModelSpec spec = tfi_clean(16);
    const ChebFit fit = fit_inverse(3, 0.2);
    try {
        build_universal_agp(spec, 0.5, fit, 4.0, 1);
        FAIL("expected ResourceError");
    } catch (const ResourceError& e) {
        const std::string what = e.what();
        CHECK(what.find("ell=3") != std::string::npos);
        CHECK(what.find("N=16") != std::string::npos);
    }
}

TEST_CASE("input validation") {
    const ModelSpec spec = tfi_clean(4);
    ChebFit empty;
    CHECK_THROWS_AS(build_universal_agp(spec, 0.5, empty, 4.0), ConfigError);
    CHECK_THROWS_AS(build_universal_agp(spec, 0.5, raw_fit({1.0}), 0.0), ConfigError);
    CHECK_THROWS_AS(build_universal_agp(spec, 0.5, raw_fit({1.0}), -2.0), ConfigError);
    CHECK_THROWS_AS(
        build_universal_agp(single_spin_h(), dlambda_h(spec), raw_fit({1.0}), 4.0),
        ConfigError);
}

TEST_CASE("static model has a vanishing gauge potential") {
    const ModelSpec spec = xxz_static(6);
    const AgpOperator a = build_universal_agp(spec, 0.3, fit_inverse(3, 0.2), 5.0);
    REQUIRE(a.symbolic());
    CHECK(a.pauli->n_terms() == 0);
    CHECK(a.to_dense().cwiseAbs().maxCoeff() == 0.0);
}
