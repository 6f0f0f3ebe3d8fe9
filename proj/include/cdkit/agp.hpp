#pragma once

#include <optional>

#include <Eigen/Dense>

#include "cdkit/chebfit.hpp"
#include "cdkit/models.hpp"
#include "cdkit/pauli.hpp"

namespace cdkit {

// Gauge-potential operator assembled from a window fit:
//   A = (i/Omega) sum_k beta_k T_{2k-1}(L/Omega) dH,   L = [H, .]
// carried either as a sparse Pauli sum (symbolic) or as a dense matrix when
// the string count outgrows the cap. Only odd Chebyshev images enter, so the
// operator is odd under the Liouvillian parity and Hermitian by construction.
struct AgpOperator {
    std::optional<PauliOperator> pauli;
    std::optional<Eigen::MatrixXcd> dense_form;
    ChebFit fit;
    double omega = 0.0;
    int ell = 0;

    bool symbolic() const { return pauli.has_value(); }
    Eigen::MatrixXcd to_dense() const;
};

// Symbolic backends stop growing the string set at this many terms by default.
inline constexpr std::size_t kAgpTermCap = 2'000'000;

// Runs the operator Chebyshev recursion G_0 = dH, G_1 = [H,G_0]/Omega,
// G_{n+1} = (2/Omega)[H,G_n] - G_{n-1} and returns (i/Omega) sum beta_k G_{2k-1}.
// Falls back to the dense backend when the term cap is exceeded and the chain
// fits the dense limit; otherwise throws ResourceError naming ell and N. The
// recursion only consumes fit.betas, so either fit mode is accepted.
AgpOperator build_universal_agp(const ModelSpec& spec, double lambda, const ChebFit& fit,
                                double omega, std::size_t term_cap = kAgpTermCap);
AgpOperator build_universal_agp(const PauliOperator& h, const PauliOperator& dh,
                                const ChebFit& fit, double omega,
                                std::size_t term_cap = kAgpTermCap);

} // namespace cdkit
