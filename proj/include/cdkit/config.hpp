#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cdkit/evolve.hpp"
#include "cdkit/models.hpp"

namespace cdkit {

// Run configuration: one file per run, flat typed sections per subcommand.
// Every field has a default, serialization is lossless, and unknown keys are
// rejected naming the offending key and section.

struct GlobalConfig {
    std::string out_dir = "runs";
    std::uint64_t seed = 1; // base seed for disorder realizations
    int workers = 1;
    int dense_limit = 14; // largest n_sites the dense backend accepts
};

struct ModelConfig {
    std::string name = "TFI_CLEAN";
    int n_sites = 8;
    double J = 1.0;
    double h = 1.0;
    double J2 = 0.25;
    double Delta = 1.0;
    std::string boundary = "periodic";
    std::uint64_t seed = 1; // block-disorder field sampling
    int block_size = 4;
    std::optional<int> magnetization;
};

struct ScheduleConfig {
    double total_time = 0.1;
    std::string shape = "SMOOTH_SINE";
};

struct IntegratorConfig {
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    bool fixed_step = false;
    long fixed_steps = 4096;
    int knots = 64;
    int samples = 33;
};

struct FitConfig {
    int ell = 4;
    double zeta = 0.1;
    std::string mode = "COST";
    int curve_points = 257; // dense evaluation grid on [zeta, 1]
    bool scan_zeta = false; // tabulate zeta*(ell) instead of one fit
    std::vector<int> ells;  // scan rows; empty means {ell}
    double scan_lo = 1e-4;
    double scan_hi = 0.5;
    int scan_grid = 40;
    double scan_rel_tol = 1e-3;
};

struct AnnealConfig {
    ModelConfig model;
    ScheduleConfig schedule;
    IntegratorConfig integrator;
    std::string protocol = "UNIVERSAL";
    std::string fit_mode = "COST"; // UNIVERSAL window weighting
    int ell = 4;
    double zeta = 0.1;
    double omega = 4.0;
    double mu = 0.1;
    int n_modes = 0;      // free-fermion backend; 0 = one block per momentum
    int realizations = 1; // > 1 averages block-disorder runs
    bool energy_trace = false;
};

struct ScalingConfig {
    std::string experiment = "zeta_tfi"; // zeta_tfi | omega_nnn | omega_xxz | cost_vs_action
    std::vector<int> ells{8, 16, 24, 32, 48, 64};
    ModelConfig model; // interacting experiments
    ScheduleConfig schedule;
    IntegratorConfig integrator;
    // zeta_tfi
    int n_modes = 200;
    double omega = 4.0;
    std::string mode = "COST";
    double search_lo = 1e-4;
    double search_hi = 0.5;
    int search_grid = 40;
    double search_rel_tol = 1e-3;
    // omega scans and the protocol comparison
    double omega_lo = 1.0;
    double omega_hi = 40.0;
    int grid = 24;
    double rel_tol = 1e-3;
    std::string zeta_csv;        // window table (ell, zeta*, ...) to reuse
    std::string action_zeta_csv; // cost_vs_action only
    // optional asymptote fit over the scan points
    std::string asymptote; // LOGL_OVER_L | LINEAR | POWER; empty skips
    int fit_ell_min = 4;
};

struct LanczosConfig {
    ModelConfig model;
    double lambda = 0.5;
    int p = 10;
    int n_max = 30;
    int p_compare = 0;   // second chain for the divergence index; 0 skips
    std::string seed_op; // e.g. "Z0"; empty uses the normalized d_lambda H
    long term_cap = 1L << 21;
    bool fit = true;
    int fit_lo = 4;
    int fit_hi = 0; // 0 means n_max
    double fit_width = 2.0;
    bool log_correction = false;
};

struct SpectralConfig {
    ModelConfig model;
    double lambda = 0.5;
    std::string ensemble = "INFINITE_T";
    int bins = 200;
    std::string kind = "GAUSSIAN"; // GAUSSIAN | HARD
    std::optional<double> range_lo;
    std::optional<double> range_hi;
};

struct RunConfig {
    GlobalConfig global;
    FitConfig fit;
    AnnealConfig anneal;
    ScalingConfig scaling;
    LanczosConfig lanczos;
    SpectralConfig spectral;
};

// Unknown keys anywhere raise ConfigError naming the key and its section.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

// Section translators onto the library types. All throw ConfigError on
// unmapped names or structural violations.
ModelSpec make_model(const ModelConfig& cfg);
Schedule make_schedule(const ScheduleConfig& cfg);
EvolveOptions make_evolve_options(const IntegratorConfig& cfg);
PauliOperator make_seed_op(const std::string& text, int n_sites);
FitMode fit_mode_from_string(const std::string& s);

} // namespace cdkit
