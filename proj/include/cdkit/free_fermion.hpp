#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cdkit/models.hpp"
#include "cdkit/ode.hpp"
#include "cdkit/spectral.hpp"

namespace cdkit {

// One antiperiodic-sector momentum block of the quadratic chain after the
// Jordan-Wigner map. Clean chains give 2x2 blocks in the (c_k, c^dag_{-k})
// basis, gauge-fixed so the pairing entry is real:
//   h_k = xi sigma^z + Delta sigma^x,  xi = 2(h_l - J_l cos k), Delta = 2 J_l sin k.
// Block-modulated chains give 2 N_B x 2 N_B Bogoliubov blocks assembled from
// one super-cell with Bloch phases across its boundary. Everything is linear
// in lambda, so the block stores its two endpoints.
struct MomentumBlock {
    double k = 0.0; // representative momentum in (0, pi)
    Eigen::MatrixXcd h0;
    Eigen::MatrixXcd h1;

    Eigen::MatrixXcd h(double lambda) const { return (1.0 - lambda) * h0 + lambda * h1; }
    Eigen::MatrixXcd dh() const { return h1 - h0; }
    int dim() const { return int(h0.rows()); }
    int n_filled() const { return dim() / 2; }
};

// Antiperiodic grid k_j = (2j-1) pi / (2 n_modes), j = 1..n_modes. For clean
// chains n_modes = N/2; for block disorder n_modes = N/(2 N_B). Rejects
// interacting models.
std::vector<MomentumBlock> build_blocks(const ModelSpec& spec, int n_modes);

// Number of chain sites the block list stands for.
int chain_sites(const ModelSpec& spec, int n_modes);

// Columns: the dim/2 negative-energy eigenvectors of h(lambda), ascending.
// Throws NumericalError if the block is gapless at this lambda.
Eigen::MatrixXcd block_ground_state(const MomentumBlock& block, double lambda);

// Sum over blocks of their negative eigenvalues: the chain ground energy (the
// Jordan-Wigner constant cancels against the diagonal of the quadratic form).
double free_fermion_ground_energy(const ModelSpec& spec, double lambda, int n_modes);

// Exact gauge potential of one small Hermitian block, built in its eigenbasis.
Eigen::MatrixXcd block_exact_agp(const Eigen::MatrixXcd& h, const Eigen::MatrixXcd& dh,
                                 const Filter& filter);

// Chebyshev window drive on the block Liouvillian:
//   a = (i/Omega) sum_j betas[j-1] G_{2j-1},  G_0 = dh, G_1 = [h,G_0]/Omega,
//   G_{n+1} = (2/Omega)[h,G_n] - G_{n-1}.
Eigen::MatrixXcd block_universal_agp(const Eigen::MatrixXcd& h, const Eigen::MatrixXcd& dh,
                                     std::span<const double> betas, double omega);

enum class BlockProtocol { NONE, UNIVERSAL, EXACT };

std::string to_string(BlockProtocol p);
BlockProtocol block_protocol_from_string(const std::string& s);

struct BlockDrive {
    BlockProtocol protocol = BlockProtocol::NONE;
    std::vector<double> betas;               // UNIVERSAL window weights
    double omega = 0.0;                      // UNIVERSAL cutoff
    Filter filter{FilterShape::RATIONAL, 1e-9}; // EXACT regularizer
};

struct BlockResult {
    double k = 0.0;
    double fidelity = 1.0;   // squared overlap with the final block ground state
    double norm_error = 0.0; // worst column-norm drift of the evolved frame
};

// Integrates i dW/dt = [h(lambda(t)) + lambda_dot(t) a(t)] W from the lambda=0
// block ground state and scores it against the lambda=1 one via
// F = |det(W_target^dag W(T))|^2.
BlockResult evolve_block(const MomentumBlock& block, const Schedule& schedule,
                         const BlockDrive& drive, const OdeOptions& opt = {});

struct FidelityDensity {
    double log_fidelity = 0.0; // sum over blocks of log F_k, <= 0
    double per_site = 0.0;     // log_fidelity / chain sites
    std::vector<double> momenta;
    std::vector<double> mode_infidelity; // 1 - F_k, aligned with momenta
};

FidelityDensity drive_chain(const ModelSpec& spec, int n_modes, const Schedule& schedule,
                            const BlockDrive& drive, const OdeOptions& opt = {});

struct DisorderSweep {
    double mean = 0.0;      // mean per-site log fidelity over realizations
    double std_error = 0.0; // standard error of that mean
    std::vector<double> per_site; // one entry per realization
};

// Re-seeds spec.disorder (base_seed, base_seed+1, ...) and averages drive_chain.
DisorderSweep disorder_average(const ModelSpec& spec, int n_modes, const Schedule& schedule,
                               const BlockDrive& drive, int realizations = 20,
                               std::uint64_t base_seed = 1, const OdeOptions& opt = {});

} // namespace cdkit
