#include "cdkit/agp.hpp"

#include <string>
#include <utility>

#include "cdkit/errors.hpp"
#include "cdkit/free_fermion.hpp"

namespace cdkit {

namespace {

void check_inputs(const ChebFit& fit, double omega) {
    if (fit.ell < 1 || fit.betas.empty())
        throw ConfigError("build_universal_agp: fit holds no window weights");
    if (!(omega > 0.0))
        throw ConfigError("build_universal_agp: omega must be positive, got " +
                          std::to_string(omega));
}

AgpOperator dense_route(const Eigen::MatrixXcd& h, const Eigen::MatrixXcd& dh,
                        const ChebFit& fit, double omega) {
    AgpOperator out;
    out.dense_form = block_universal_agp(h, dh, fit.betas, omega);
    out.fit = fit;
    out.omega = omega;
    out.ell = fit.ell;
    return out;
}

} // namespace

Eigen::MatrixXcd AgpOperator::to_dense() const {
    if (dense_form)
        return *dense_form;
    if (pauli)
        return pauli->to_dense();
    throw ConfigError("AgpOperator::to_dense: empty operator");
}

AgpOperator build_universal_agp(const PauliOperator& h, const PauliOperator& dh,
                                const ChebFit& fit, double omega, std::size_t term_cap) {
    check_inputs(fit, omega);
    if (h.n_sites() != dh.n_sites())
        throw ConfigError("build_universal_agp: operand site counts differ");

    const int n = h.n_sites();
    const auto betas = fit.betas;
    const cplx inv_omega(1.0 / omega, 0.0);

    // g_prev = G_{2k-2}, g = G_{2k-1}; acc collects beta_k G_{2k-1}.
    PauliOperator g_prev = dh;
    PauliOperator g = commutator(h, dh);
    g *= inv_omega;

    bool overflow = g.n_terms() > term_cap;
    PauliOperator acc = g * cplx(betas[0], 0.0);

    for (std::size_t k = 1; k < betas.size() && !overflow; ++k) {
        for (int step = 0; step < 2; ++step) {
            PauliOperator next = commutator(h, g);
            next *= cplx(2.0 / omega, 0.0);
            next -= g_prev;
            next.compress();
            g_prev = std::move(g);
            g = std::move(next);
            if (g.n_terms() > term_cap) {
                overflow = true;
                break;
            }
        }
        if (!overflow)
            acc += g * cplx(betas[k], 0.0);
    }

    if (!overflow) {
        acc *= cplx(0.0, 1.0 / omega);
        acc.compress();
        AgpOperator out;
        out.pauli = std::move(acc);
        out.fit = fit;
        out.omega = omega;
        out.ell = fit.ell;
        return out;
    }

    if (n > kDenseSiteLimit)
        throw ResourceError("build_universal_agp: string count exceeds " +
                            std::to_string(term_cap) + " at ell=" + std::to_string(fit.ell) +
                            " on N=" + std::to_string(n) +
                            " sites and the chain is too large for the dense backend");
    return dense_route(h.to_dense(), dh.to_dense(), fit, omega);
}

AgpOperator build_universal_agp(const ModelSpec& spec, double lambda, const ChebFit& fit,
                                double omega, std::size_t term_cap) {
    const PauliOperator h = hamiltonian(spec, lambda);
    const PauliOperator dh = dlambda_h(spec);
    return build_universal_agp(h, dh, fit, omega, term_cap);
}

} // namespace cdkit
