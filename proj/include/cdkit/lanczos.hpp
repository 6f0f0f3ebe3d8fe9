#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cdkit/models.hpp"
#include "cdkit/pauli.hpp"
#include "cdkit/spectral.hpp"

namespace cdkit {

struct LanczosOptions {
    double lambda = 0.5; // anneal parameter fixing H; irrelevant for static models
    bool reorthogonalize = false; // full reorthogonalization (stores every operator)
    bool keep_operators = false;  // retain the Krylov chain in the result
    // Largest-|weight| strings kept after the support cut; the documented
    // truncation scheme of this artifact on top of the support-p drop.
    std::size_t term_cap = std::size_t(1) << 21;
    double breakdown_tol = 1e-10;
};

struct GrowthFit {
    double one_over_alpha = 0.0;
    double r_squared = 0.0;
    int n_lo = 0, n_hi = 0;       // fit range in n
    double smoothing_width = 2.0; // Gaussian width in n
    bool log_correction = false;  // abscissa n/log(n) instead of n
};

struct LanczosResult {
    std::vector<double> b; // b_1..b_n, all > 0
    int p = 0;
    std::string model;
    bool breakdown = false;           // chain ended on b_n < breakdown_tol
    std::optional<GrowthFit> growth;  // filled by growth_exponent
    std::vector<PauliOperator> operators; // kept on request
};

// Infinite-temperature operator Lanczos with generator [H, .]: the three-term
// recursion W = [H, O_{n-1}] - b_{n-1} O_{n-2}, b_n = ||W||, under the
// Frobenius inner product. After every Liouvillian application, strings with
// support > p are dropped, then the weakest strings beyond the term cap.
// The seed must be normalized; a breakdown (b_n below tolerance) returns the
// prefix with the flag set rather than failing.
LanczosResult lanczos_coefficients(const ModelSpec& spec, const PauliOperator& seed_op,
                                   int n_max, int p, const LanczosOptions& options = {});

// Normalized d_lambda H; throws ConfigError for static models, which need an
// explicit seed.
PauliOperator default_lanczos_seed(const ModelSpec& spec);

// Coupling-averaged chain: runs with one coupling scaled over n_values points
// spanning [1-spread, 1+spread] and averages b_n over the common prefix.
struct AverageSpec {
    std::string coupling_key = "Delta";
    int n_values = 3;
    double spread = 0.05;
};

LanczosResult averaged_lanczos(const ModelSpec& spec, const PauliOperator& seed_op, int n_max,
                               int p, const AverageSpec& avg, const LanczosOptions& options = {});

// First index (1-based) where two chains disagree by more than rel_tol, or 0
// if they agree over the common prefix.
int divergence_index(const LanczosResult& a, const LanczosResult& b, double rel_tol = 0.02);

// Log-log linear fit of Gaussian-smoothed b_n over n in [n_lo, n_hi]; the
// smoothing pairs each averaged log b with the matching weighted-centroid
// abscissa in log n, so pure power laws fit exactly. Needs >= 6 points.
// With log_correction the abscissa is log(n / log n): linear-in-n growth in
// one dimension carries a 1/log n correction, and fitting against the
// corrected abscissa recovers its asymptotic exponent at reachable n. The
// corrected fit needs n_lo >= 2. The fit is stored in result.growth and
// returned.
GrowthFit growth_exponent(LanczosResult& result, int n_lo, int n_hi, double width = 2.0,
                          bool log_correction = false);

struct TailFit {
    double alpha = 0.0;
    double gamma = 0.0;
    double log_c = 0.0;
    double r_squared = 0.0; // of log density vs c - gamma |omega|^alpha
};

// Fit log density = c - gamma |omega|^alpha over histogram centers in
// [omega_lo, omega_hi]: alpha grid-seeded on [0.5, 3], then refined; c and
// gamma solved linearly at each alpha. All bins in range must be positive.
TailFit tail_fit(const SpectralHistogram& hist, double omega_lo, double omega_hi);

} // namespace cdkit
