#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cdkit/models.hpp"
#include "cdkit/pauli.hpp"

namespace cdkit {

enum class FilterShape { RATIONAL, STEP };

// Regularizer of the exact gauge potential: RATIONAL is g(x) = x^2/(1+x^2)
// with x = omega/mu, STEP keeps only |omega| >= mu.
struct Filter {
    FilterShape shape = FilterShape::RATIONAL;
    double mu = 1e-6;
};

double filter_g(const Filter& f, double omega);

enum class Ensemble { GROUND, INFINITE_T };

// Levels closer than this count as degenerate where it matters.
inline constexpr double kDegeneracyTol = 1e-10;

// Eigensystem of H(lambda) plus the matrix elements of dH in that eigenbasis.
// The backend is real-symmetric (every catalog Hamiltonian is real in the
// computational basis); eigenvector phases are fixed by making the largest-
// magnitude component positive so derivative quantities are well defined.
struct SpectralData {
    double lambda = 0.0;
    Eigen::VectorXd energies;         // ascending
    Eigen::MatrixXd eigenvectors;     // columns, phase-fixed
    Eigen::MatrixXd matrix_elements;  // <m| dH |n>, symmetric
    Eigen::VectorXd rho;              // ensemble weights, nonnegative, sum to 1
    std::vector<std::uint64_t> basis; // sector bitstrings; empty = full space

    int dim() const { return int(energies.size()); }
};

SpectralData diagonalize(const ModelSpec& spec, double lambda,
                         Ensemble ensemble = Ensemble::GROUND);
// Restricts to the given computational-basis states when provided (both h and
// dh must be block diagonal with respect to them).
SpectralData diagonalize(const PauliOperator& h, const PauliOperator& dh,
                         Ensemble ensemble = Ensemble::GROUND,
                         const std::vector<std::uint64_t>& basis = {});
// Prebuilt dense matrices (oracles, cross-checks).
SpectralData diagonalize_dense(const Eigen::MatrixXd& h, const Eigen::MatrixXd& dh,
                               Ensemble ensemble = Ensemble::GROUND);

// All magnetization-sector bitstrings (total sigma^z = m) in ascending order.
std::vector<std::uint64_t> magnetization_basis(int n_sites, int m);

// Exact regularized gauge potential in the eigenbasis: Hermitian, zero diagonal,
// off-diagonals -i g(omega/mu)/omega * M_mn.
Eigen::MatrixXcd exact_agp(const SpectralData& sd, const Filter& filter);

double fidelity_susceptibility(const SpectralData& sd, const Filter& filter);

// The (omega_mn, rho_n |M_mn|^2) delta list behind the spectral function,
// all pairs including the zero-frequency diagonal.
std::vector<std::pair<double, double>> spectral_deltas(const SpectralData& sd);

enum class BinKind { GAUSSIAN, HARD };

struct BinningSpec {
    int n_bins = 200;
    BinKind kind = BinKind::GAUSSIAN;
    // Padded data range if unset. With an explicit range, out-of-range mass is
    // folded into the edge bins so no weight is ever lost.
    std::optional<std::pair<double, double>> range;
};

struct SpectralHistogram {
    std::vector<double> centers;
    std::vector<double> density; // integrates to total_weight over the range
    double bin_width = 0.0;
    double total_weight = 0.0;
};

// Histogram of the delta list with hard bins or Gaussian kernels (sigma = bin
// width); every delta contributes its weight exactly, so the density integral
// reproduces sum_n rho_n sum_m |M_mn|^2 regardless of binning.
SpectralHistogram spectral_function(const SpectralData& sd, const BinningSpec& bins);

struct VariationalAgp {
    std::vector<double> alphas; // coefficients of omega^{2k-1}
    int effective_ell = 0;      // numerical rank actually used
    double action = 0.0;        // minimized action value
};

// mu-independent part of the Krylov action normal equations, built once per
// (SpectralData, ell) and shared across a mu scan. Internally the odd-polynomial
// span is parametrized by T_{2k-1}(omega/omega_scale) for conditioning.
struct KrylovMoments {
    int ell = 0;
    double omega_scale = 0.0; // max |omega_mn|; 0 when dH commutes with H
    Eigen::MatrixXd gram2;    // sum w omega^2 T_j T_k
    Eigen::MatrixXd gram0;    // sum w T_j T_k
    Eigen::VectorXd rhs;      // -sum w omega T_j
    double weight_total = 0.0;
};

KrylovMoments krylov_moments(const SpectralData& sd, int ell);
VariationalAgp solve_krylov(const KrylovMoments& moments, double mu);

// Action minimization min_X ||dH + i[X,H]||^2 + mu^2 ||X||^2 over the span of
// odd nested commutators X = i sum alpha_k ad_H^{2k-1}(dH), in the sd ensemble.
VariationalAgp variational_krylov_agp(const SpectralData& sd, int ell, double mu);
VariationalAgp variational_krylov_agp(const ModelSpec& spec, double lambda, int ell, double mu,
                                      Ensemble ensemble = Ensemble::INFINITE_T);

} // namespace cdkit
