#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdkit/chebfit.hpp"
#include "cdkit/models.hpp"
#include "cdkit/spectral.hpp"

namespace cdkit {

// Counterdiabatic term added to H(lambda(t)): nothing, the window-filtered
// universal operator, the variationally optimal odd-commutator span, or the
// exact regularized gauge potential.
struct Protocol {
    enum class Kind { NONE, UNIVERSAL, VARIATIONAL, EXACT };

    Kind kind = Kind::NONE;
    ChebFit fit;        // UNIVERSAL window weights
    double omega = 0.0; // UNIVERSAL spectral scale
    int ell = 0;        // VARIATIONAL span size
    double mu = 0.0;    // VARIATIONAL / EXACT regulator

    static Protocol none();
    static Protocol universal(ChebFit fit, double omega);
    static Protocol variational(int ell, double mu);
    static Protocol exact(double mu);
};

std::string to_string(Protocol::Kind kind);

struct EvolveOptions {
    int knots = 64;   // lambda grid for gauge-potential coefficients
    int samples = 33; // fidelity trace sample times, endpoints included
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    bool fixed_step = false; // classical RK4, bit-reproducible
    long fixed_steps = 4096; // total steps across [0, T] in fixed-step mode
    bool energy_trace = false;
    // Diagnostic: hold lambda at this value with lambda_dot = 0 while still
    // integrating over [0, T]; the gauge potential then never acts.
    std::optional<double> frozen_lambda;
};

// Eigensystems of H(lambda_j) on the uniform knot grid lambda_j = j/(knots-1).
// Building one is the dominant setup cost, and the cache is protocol-agnostic,
// so parameter scans over one model should share a single instance.
struct KnotCache {
    ModelSpec spec;
    int knots = 0;
    std::vector<SpectralData> at; // INFINITE_T weights; at[j].lambda = j/(knots-1)
};

KnotCache make_knot_cache(const ModelSpec& spec, int knots = 64);

struct DriveConfig {
    std::string model;
    int n_sites = 0;
    std::string protocol;
    int ell = 0;
    double zeta = 0.0;
    double omega = 0.0;
    double mu = 0.0;
    Schedule schedule;
    int knots = 0;
    int samples = 0;
    bool fixed_step = false;
};

struct DriveResult {
    DriveConfig config;
    std::vector<double> times;
    std::vector<double> lambdas;
    std::vector<double> fidelity; // vs the instantaneous ground manifold
    std::vector<double> energies; // filled when energy_trace is set
    double final_fidelity = 0.0;
    double norm_drift = 0.0;            // max | ||psi|| - 1 | over the run
    Eigen::VectorXcd final_state;       // in the computational (sector) basis
    std::vector<std::uint64_t> basis;   // sector bitstrings; empty = full space
};

// Integrates i d|psi>/dt = [H(lambda) + lambda_dot A] |psi> from the ground
// state of H(0). A is re-coefficiented on the knot grid and interpolated
// through a four-knot cubic stencil. Fidelity is the squared projection on
// the instantaneous ground manifold (levels within 1e-8 * scale of the bottom),
// so exactly degenerate final states are handled. Pass a cache built with
// make_knot_cache to amortize diagonalizations across runs; it must match the
// spec and options.knots.
DriveResult evolve(const ModelSpec& spec, const Schedule& schedule, const Protocol& protocol,
                   const EvolveOptions& options = {}, const KnotCache* cache = nullptr);

} // namespace cdkit
