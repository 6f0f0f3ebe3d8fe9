#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cdkit/chebfit.hpp"
#include "cdkit/evolve.hpp"
#include "cdkit/models.hpp"
#include "cdkit/ode.hpp"

namespace cdkit {

// One optimized point of a scaling experiment: the control value that
// maximizes the drive objective at this ell.
struct ScalingPoint {
    int ell = 0;
    double optimum = 0.0;   // argmax: zeta* or omega* (or mu* for variational)
    double objective = 0.0; // objective at the optimum: final F, or log F per site
    std::string model;
    double wall_seconds = 0.0;
};

enum class AsymptoteForm { LOGL_OVER_L, LINEAR, POWER };

std::string to_string(AsymptoteForm form);
AsymptoteForm asymptote_form_from_string(const std::string& s);

// Least-squares fit of an asymptotic law to the (ell, optimum) points:
//   LOGL_OVER_L: y = C log(ell)/ell   parameters {C}
//   LINEAR:      y = a ell + b        parameters {a, b}
//   POWER:       y = a ell^p          parameters {a, p}
// The regression runs in the coordinates the form dictates (POWER in log-log,
// LOGL_OVER_L as y*ell against log ell through the origin, LINEAR direct);
// r_squared is always reported in the original coordinates.
struct AsymptoteFit {
    AsymptoteForm form = AsymptoteForm::LINEAR;
    std::vector<double> parameters;
    double r_squared = 0.0;
    int ell_min = 0; // range actually used
    int ell_max = 0;
};

// Fits the points with ell in [ell_min, ell_max]. The laws are asymptotic, so
// small ell is excluded by default. Throws ConfigError on fewer than 4 points
// in range, or on nonpositive values where the form takes logs.
AsymptoteFit fit_asymptote(std::span<const ScalingPoint> points, AsymptoteForm form,
                           int ell_min = 4, int ell_max = std::numeric_limits<int>::max());

// Clean-chain zeta scan at fixed drive cutoff. omega = 4 spans the full
// single-particle transition range of the J = h = 1 chain along the whole
// anneal path.
struct ZetaScanConfig {
    int n_modes = 200;
    double omega = 4.0;
    FitMode mode = FitMode::COST;
    Schedule schedule{0.1, ScheduleShape::SMOOTH_SINE};
    ZetaSearchOptions search;
    OdeOptions ode;
    int workers = 1;
};

// Per ell, the zeta maximizing per-site log fidelity of the free-fermion chain
// driven with betas from fit_inverse(ell, zeta, mode) at fixed omega. One
// scaling point per requested ell, in input order.
std::vector<ScalingPoint> optimize_mu_tfi(std::span<const int> ells,
                                          const ZetaScanConfig& cfg = {});

// The reusable zeta(ell) table interacting runs consume unchanged.
std::vector<ZetaTableRow> zeta_table_from(std::span<const ScalingPoint> points);
double zeta_for(std::span<const ZetaTableRow> table, int ell);

struct OmegaScanConfig {
    double omega_lo = 1.0;
    double omega_hi = 40.0;
    int grid = 24;         // log-spaced scan points
    double rel_tol = 1e-3; // golden-section stop on relative bracket width
    FitMode mode = FitMode::COST;
    Schedule schedule{0.1, ScheduleShape::SMOOTH_SINE};
    EvolveOptions evolve;
    int n_modes = 0; // free-fermion control runs only; 0 means n_sites / 2
    int workers = 1;
};

// Per ell, the omega maximizing final fidelity under the UNIVERSAL protocol
// with zeta pinned to the table row for that ell (the window edge mu = zeta
// omega scales along with omega). Interacting models integrate in the dense
// eigenbasis; TFI-family specs route through the momentum blocks as a control.
// Log-grid scan plus golden-section refinement; a maximum on the bracket edge
// widens the bracket once, then throws NumericalError. An evolve that fails
// numerically scores zero and drops out of the scan.
std::vector<ScalingPoint> optimize_omega(const ModelSpec& spec, std::span<const int> ells,
                                         std::span<const ZetaTableRow> zeta_table,
                                         const OmegaScanConfig& cfg = {});

// Final fidelity per ell under the COST and ACTION window fits and under the
// variational Krylov drive, each given the same one-parameter search: omega
// for the window protocols, mu over the matching log bracket for the
// variational one. The action weighting shifts the optimal window, so each
// mode brings its own clean-chain zeta table.
struct ProtocolComparison {
    int ell = 0;
    double f_cost = 0.0;
    double f_action = 0.0;
    double f_variational = 0.0;
    double omega_cost = 0.0;
    double omega_action = 0.0;
    double mu_variational = 0.0;
};

std::vector<ProtocolComparison> compare_cost_action(const ModelSpec& spec,
                                                    std::span<const int> ells,
                                                    std::span<const ZetaTableRow> cost_table,
                                                    std::span<const ZetaTableRow> action_table,
                                                    const OmegaScanConfig& cfg = {});

} // namespace cdkit
