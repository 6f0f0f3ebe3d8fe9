#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cdkit/config.hpp"
#include "cdkit/errors.hpp"
#include "cdkit/evolve.hpp"
#include "cdkit/free_fermion.hpp"
#include "cdkit/io.hpp"
#include "cdkit/lanczos.hpp"
#include "cdkit/scaling.hpp"
#include "cdkit/spectral.hpp"

namespace {

using namespace cdkit;
using nlohmann::json;

// the vendored CLI11 build lacks std::optional bindings, so presence is
// tracked through the option handle instead
template <class T> struct Opt {
    T value{};
    CLI::Option* handle = nullptr;
    explicit operator bool() const { return handle && handle->count() > 0; }
};

template <class T>
CLI::Option* bind_opt(CLI::App* cmd, const std::string& flag, Opt<T>& o,
                  const std::string& desc = "") {
    o.handle = cmd->add_option(flag, o.value, desc);
    return o.handle;
}

template <class T, class U> void apply_opt(const Opt<T>& o, U& into) {
    if (o) into = o.value;
}

struct CommonArgs {
    Opt<std::string> config;
    Opt<std::string> out;
    Opt<std::uint64_t> seed;
    Opt<int> workers;
    Opt<int> dense_limit;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    bind_opt(cmd, "--config", a.config, "JSON run configuration; flags override it");
    bind_opt(cmd, "--out", a.out, "output directory (relative to CDKIT_OUTPUT_ROOT)");
    bind_opt(cmd, "--seed", a.seed, "base seed for disorder realizations");
    bind_opt(cmd, "--workers", a.workers, "scan worker threads");
    bind_opt(cmd, "--dense-limit", a.dense_limit, "largest n_sites for the dense backend");
}

RunConfig load_common(const CommonArgs& a) {
    RunConfig cfg = a.config ? load_run_config(a.config.value) : RunConfig{};
    apply_opt(a.out, cfg.global.out_dir);
    apply_opt(a.seed, cfg.global.seed);
    apply_opt(a.workers, cfg.global.workers);
    apply_opt(a.dense_limit, cfg.global.dense_limit);
    return cfg;
}

struct ModelArgs {
    Opt<std::string> model;
    Opt<int> n;
    Opt<double> J, h, J2, Delta;
    Opt<std::string> boundary;
    Opt<std::uint64_t> model_seed;
    Opt<int> block_size;
    Opt<int> magnetization;
};

void add_model(CLI::App* cmd, ModelArgs& a) {
    bind_opt(cmd, "--model", a.model,
         "TFI_CLEAN | TFI_BLOCK_DISORDER | NNN_TFI | XXZ_ANNEAL | XXZ_STATIC");
    bind_opt(cmd, "--n", a.n, "number of sites");
    bind_opt(cmd, "--J", a.J);
    bind_opt(cmd, "--field", a.h, "transverse field strength");
    bind_opt(cmd, "--J2", a.J2);
    bind_opt(cmd, "--Delta", a.Delta);
    bind_opt(cmd, "--boundary", a.boundary, "open | periodic");
    bind_opt(cmd, "--model-seed", a.model_seed, "block-disorder field seed");
    bind_opt(cmd, "--block-size", a.block_size);
    bind_opt(cmd, "--magnetization", a.magnetization, "total sigma^z ED sector");
}

void apply_model(const ModelArgs& a, ModelConfig& m) {
    apply_opt(a.model, m.name);
    apply_opt(a.n, m.n_sites);
    apply_opt(a.J, m.J);
    apply_opt(a.h, m.h);
    apply_opt(a.J2, m.J2);
    apply_opt(a.Delta, m.Delta);
    apply_opt(a.boundary, m.boundary);
    apply_opt(a.model_seed, m.seed);
    apply_opt(a.block_size, m.block_size);
    if (a.magnetization) m.magnetization = a.magnetization.value;
}

int block_count(const ModelSpec& spec, int n_modes) {
    if (n_modes > 0) return n_modes;
    const int cell =
        spec.name == ModelName::TFI_BLOCK_DISORDER && spec.disorder ? spec.disorder->block_size : 1;
    const int modes = spec.n_sites / (2 * cell);
    if (modes < 1 || chain_sites(spec, modes) != spec.n_sites)
        throw ConfigError("anneal: " + std::to_string(spec.n_sites) +
                          " sites do not split into momentum blocks; pass --n-modes");
    return modes;
}

// ---------------------------------------------------------------- fit

int cmd_fit(const RunConfig& cfg, const std::string& objective) {
    const auto started = std::chrono::system_clock::now();
    const auto out = resolve_output_dir(cfg.global.out_dir);
    const FitConfig& f = cfg.fit;
    const FitMode mode = fit_mode_from_string(f.mode);

    if (f.scan_zeta) {
        if (objective != "residual")
            throw ConfigError("fit --scan-zeta supports only --objective residual; "
                              "fidelity-based tables come from `scaling --experiment zeta_tfi`");
        std::vector<int> ells = f.ells.empty() ? std::vector<int>{f.ell} : f.ells;
        ZetaSearchOptions opts;
        opts.lo = f.scan_lo;
        opts.hi = f.scan_hi;
        opts.grid = f.scan_grid;
        opts.rel_tol = f.scan_rel_tol;
        const auto table = optimal_zeta_table(
            ells, [&](int ell, double zeta) { return -fit_inverse(ell, zeta, mode).residual; },
            opts);
        CsvWriter w(out / "zeta_table.csv", {"ell", "zeta_star", "objective"});
        for (const auto& row : table) w.row(row.ell, row.zeta_star, row.objective);
        std::printf("fit: zeta*(ell) table with %zu rows -> %s\n", table.size(),
                    (out / "zeta_table.csv").c_str());
    } else {
        const ChebFit fit = fit_inverse(f.ell, f.zeta, mode);
        {
            CsvWriter w(out / "fit.csv", {"k", "beta"});
            for (std::size_t k = 0; k < fit.betas.size(); ++k) w.row(int(k) + 1, fit.betas[k]);
        }
        if (f.curve_points < 2) throw ConfigError("fit: curve_points must be at least 2");
        {
            CsvWriter w(out / "curve.csv", {"x", "fit", "target", "deviation"});
            for (int i = 0; i < f.curve_points; ++i) {
                const double x = f.zeta + (1.0 - f.zeta) * i / (f.curve_points - 1);
                const double v = eval_fit(fit, x);
                w.row(x, v, -1.0 / x, v + 1.0 / x);
            }
        }
        json meta{{"ell", fit.ell},           {"zeta", fit.zeta},
                  {"mode", f.mode},           {"residual", fit.residual},
                  {"condition", fit.condition}};
        std::ofstream(out / "fit.json") << meta.dump(2) << '\n';
        std::printf("fit: ell=%d zeta=%s mode=%s residual=%s -> %s\n", f.ell,
                    format_double(f.zeta).c_str(), f.mode.c_str(),
                    format_double(fit.residual).c_str(), out.c_str());
    }
    write_manifest(out, "fit", to_json(cfg), started);
    return 0;
}

// ---------------------------------------------------------------- anneal

json drive_config_json(const AnnealConfig& a, const std::string& backend) {
    return {{"model", a.model.name},   {"n_sites", a.model.n_sites}, {"protocol", a.protocol},
            {"fit_mode", a.fit_mode},  {"ell", a.ell},               {"zeta", a.zeta},
            {"omega", a.omega},        {"mu", a.mu},                 {"backend", backend},
            {"total_time", a.schedule.total_time}};
}

int cmd_anneal(const RunConfig& cfg) {
    const auto started = std::chrono::system_clock::now();
    const auto out = resolve_output_dir(cfg.global.out_dir);
    const AnnealConfig& a = cfg.anneal;
    const ModelSpec spec = make_model(a.model);
    const Schedule schedule = make_schedule(a.schedule);

    const bool tfi_family =
        spec.name == ModelName::TFI_CLEAN || spec.name == ModelName::TFI_BLOCK_DISORDER;
    const bool wants_variational = a.protocol == "VARIATIONAL";

    if (tfi_family && !wants_variational) {
        // free-fermion backend: exact at any size
        const int n_modes = block_count(spec, a.n_modes);
        BlockDrive drive;
        drive.protocol = block_protocol_from_string(a.protocol);
        if (drive.protocol == BlockProtocol::UNIVERSAL) {
            drive.betas = fit_inverse(a.ell, a.zeta, fit_mode_from_string(a.fit_mode)).betas;
            drive.omega = a.omega;
        }
        drive.filter.mu = a.mu;
        OdeOptions ode;
        ode.abs_tol = a.integrator.abs_tol;
        ode.rel_tol = a.integrator.rel_tol;

        json result = drive_config_json(a, "free_fermion");
        if (a.realizations > 1) {
            const DisorderSweep sweep =
                disorder_average(spec, n_modes, schedule, drive, a.realizations,
                                 cfg.global.seed, ode);
            CsvWriter w(out / "realizations.csv", {"realization", "log_fidelity_per_site"});
            for (std::size_t i = 0; i < sweep.per_site.size(); ++i)
                w.row(int(i), sweep.per_site[i]);
            result["realizations"] = a.realizations;
            result["mean_log_fidelity_per_site"] = sweep.mean;
            result["std_error"] = sweep.std_error;
            std::printf("anneal: %s N=%d %s mean log F per site = %s (+- %s over %d)\n",
                        a.model.name.c_str(), spec.n_sites, a.protocol.c_str(),
                        format_double(sweep.mean).c_str(),
                        format_double(sweep.std_error).c_str(), a.realizations);
        } else {
            const FidelityDensity fd = drive_chain(spec, n_modes, schedule, drive, ode);
            CsvWriter w(out / "modes.csv", {"momentum", "mode_infidelity"});
            for (std::size_t i = 0; i < fd.momenta.size(); ++i)
                w.row(fd.momenta[i], fd.mode_infidelity[i]);
            result["log_fidelity"] = fd.log_fidelity;
            result["log_fidelity_per_site"] = fd.per_site;
            std::printf("anneal: %s N=%d %s log F per site = %s\n", a.model.name.c_str(),
                        spec.n_sites, a.protocol.c_str(), format_double(fd.per_site).c_str());
        }
        std::ofstream(out / "result.json") << result.dump(2) << '\n';
        write_manifest(out, "anneal", to_json(cfg), started);
        return 0;
    }

    if (spec.n_sites > cfg.global.dense_limit)
        throw ResourceError(
            "anneal: N=" + std::to_string(spec.n_sites) + " exceeds the dense limit " +
            std::to_string(cfg.global.dense_limit) +
            "; reduce n_sites, raise --dense-limit, or use a TFI family, which runs through "
            "the free-fermion backend at any size");

    Protocol protocol;
    if (a.protocol == "NONE") protocol = Protocol::none();
    else if (a.protocol == "UNIVERSAL")
        protocol = Protocol::universal(fit_inverse(a.ell, a.zeta,
                                                   fit_mode_from_string(a.fit_mode)),
                                       a.omega);
    else if (a.protocol == "VARIATIONAL") protocol = Protocol::variational(a.ell, a.mu);
    else if (a.protocol == "EXACT") protocol = Protocol::exact(a.mu);
    else
        throw ConfigError("unknown protocol '" + a.protocol +
                          "' (expected NONE, UNIVERSAL, VARIATIONAL or EXACT)");

    EvolveOptions opt = make_evolve_options(a.integrator);
    opt.energy_trace = a.energy_trace;
    const DriveResult r = evolve(spec, schedule, protocol, opt);

    {
        CsvWriter w(out / "trace.csv",
                    a.energy_trace
                        ? std::initializer_list<const char*>{"t", "lambda", "fidelity", "energy"}
                        : std::initializer_list<const char*>{"t", "lambda", "fidelity"});
        for (std::size_t i = 0; i < r.times.size(); ++i) {
            if (a.energy_trace)
                w.row(r.times[i], r.lambdas[i], r.fidelity[i], r.energies[i]);
            else
                w.row(r.times[i], r.lambdas[i], r.fidelity[i]);
        }
    }
    json result = drive_config_json(a, "dense");
    result["final_fidelity"] = r.final_fidelity;
    result["norm_drift"] = r.norm_drift;
    std::ofstream(out / "result.json") << result.dump(2) << '\n';
    std::printf("anneal: %s N=%d %s final F = %s (drift %s)\n", a.model.name.c_str(),
                spec.n_sites, a.protocol.c_str(), format_double(r.final_fidelity).c_str(),
                format_double(r.norm_drift).c_str());
    write_manifest(out, "anneal", to_json(cfg), started);
    return 0;
}

// ---------------------------------------------------------------- scaling

void write_points_csv(const std::filesystem::path& path, std::span<const ScalingPoint> pts,
                      const char* optimum_name) {
    CsvWriter w(path, {"ell", optimum_name, "objective", "model", "wall_seconds"});
    for (const auto& p : pts) w.row(p.ell, p.optimum, p.objective, p.model, p.wall_seconds);
}

void write_asymptote_json(const std::filesystem::path& out, const ScalingConfig& s,
                          std::span<const ScalingPoint> pts) {
    if (s.asymptote.empty()) return;
    const AsymptoteFit fit =
        fit_asymptote(pts, asymptote_form_from_string(s.asymptote), s.fit_ell_min);
    json j{{"form", to_string(fit.form)},
           {"parameters", fit.parameters},
           {"r_squared", fit.r_squared},
           {"ell_min", fit.ell_min},
           {"ell_max", fit.ell_max}};
    std::ofstream(out / "fit.json") << j.dump(2) << '\n';
    std::printf("scaling: %s fit R^2 = %s\n", s.asymptote.c_str(),
                format_double(fit.r_squared).c_str());
}

std::vector<ZetaTableRow> scaling_zeta_table(const ScalingConfig& s, std::span<const int> ells,
                                             int workers, FitMode mode,
                                             const std::string& csv_path) {
    if (!csv_path.empty()) return read_zeta_csv(csv_path);
    // no table supplied: calibrate on the clean chain at the requested ells
    ZetaScanConfig zc;
    zc.n_modes = s.n_modes;
    zc.omega = s.omega;
    zc.mode = mode;
    zc.schedule = make_schedule(s.schedule);
    zc.search.lo = s.search_lo;
    zc.search.hi = s.search_hi;
    zc.search.grid = s.search_grid;
    zc.search.rel_tol = s.search_rel_tol;
    zc.ode.abs_tol = s.integrator.abs_tol;
    zc.ode.rel_tol = s.integrator.rel_tol;
    zc.workers = workers;
    return zeta_table_from(optimize_mu_tfi(ells, zc));
}

int cmd_scaling(const RunConfig& cfg) {
    const auto started = std::chrono::system_clock::now();
    const auto out = resolve_output_dir(cfg.global.out_dir);
    const ScalingConfig& s = cfg.scaling;

    if (s.experiment == "zeta_tfi") {
        ZetaScanConfig zc;
        zc.n_modes = s.n_modes;
        zc.omega = s.omega;
        zc.mode = fit_mode_from_string(s.mode);
        zc.schedule = make_schedule(s.schedule);
        zc.search.lo = s.search_lo;
        zc.search.hi = s.search_hi;
        zc.search.grid = s.search_grid;
        zc.search.rel_tol = s.search_rel_tol;
        zc.ode.abs_tol = s.integrator.abs_tol;
        zc.ode.rel_tol = s.integrator.rel_tol;
        zc.workers = cfg.global.workers;
        const auto pts = optimize_mu_tfi(s.ells, zc);
        write_points_csv(out / "points.csv", pts, "zeta_star");
        write_asymptote_json(out, s, pts);
        std::printf("scaling: zeta_tfi %zu rows -> %s\n", pts.size(),
                    (out / "points.csv").c_str());
    } else if (s.experiment == "omega_nnn" || s.experiment == "omega_xxz") {
        const char* expected = s.experiment == "omega_nnn" ? "NNN_TFI" : "XXZ_ANNEAL";
        if (s.model.name != expected)
            throw ConfigError("scaling: experiment " + s.experiment + " expects model " +
                              expected + ", got " + s.model.name);
        const ModelSpec spec = make_model(s.model);
        const auto table = scaling_zeta_table(s, s.ells, cfg.global.workers,
                                              fit_mode_from_string(s.mode), s.zeta_csv);
        OmegaScanConfig oc;
        oc.omega_lo = s.omega_lo;
        oc.omega_hi = s.omega_hi;
        oc.grid = s.grid;
        oc.rel_tol = s.rel_tol;
        oc.mode = fit_mode_from_string(s.mode);
        oc.schedule = make_schedule(s.schedule);
        oc.evolve = make_evolve_options(s.integrator);
        oc.workers = cfg.global.workers;
        const auto pts = optimize_omega(spec, s.ells, table, oc);
        write_points_csv(out / "points.csv", pts, "omega_star");
        write_asymptote_json(out, s, pts);
        std::printf("scaling: %s %zu rows -> %s\n", s.experiment.c_str(), pts.size(),
                    (out / "points.csv").c_str());
    } else if (s.experiment == "cost_vs_action") {
        const ModelSpec spec = make_model(s.model);
        const auto cost_table =
            scaling_zeta_table(s, s.ells, cfg.global.workers, FitMode::COST, s.zeta_csv);
        const auto action_table = scaling_zeta_table(s, s.ells, cfg.global.workers,
                                                     FitMode::ACTION, s.action_zeta_csv);
        OmegaScanConfig oc;
        oc.omega_lo = s.omega_lo;
        oc.omega_hi = s.omega_hi;
        oc.grid = s.grid;
        oc.rel_tol = s.rel_tol;
        oc.schedule = make_schedule(s.schedule);
        oc.evolve = make_evolve_options(s.integrator);
        oc.workers = cfg.global.workers;
        const auto rows = compare_cost_action(spec, s.ells, cost_table, action_table, oc);
        CsvWriter w(out / "compare.csv", {"ell", "f_cost", "f_action", "f_variational",
                                          "omega_cost", "omega_action", "mu_variational"});
        for (const auto& r : rows)
            w.row(r.ell, r.f_cost, r.f_action, r.f_variational, r.omega_cost, r.omega_action,
                  r.mu_variational);
        std::printf("scaling: cost_vs_action %zu rows -> %s\n", rows.size(),
                    (out / "compare.csv").c_str());
    } else {
        throw ConfigError("unknown experiment '" + s.experiment +
                          "' (expected zeta_tfi, omega_nnn, omega_xxz or cost_vs_action)");
    }
    write_manifest(out, "scaling", to_json(cfg), started);
    return 0;
}

// ---------------------------------------------------------------- lanczos

int cmd_lanczos(const RunConfig& cfg) {
    const auto started = std::chrono::system_clock::now();
    const auto out = resolve_output_dir(cfg.global.out_dir);
    const LanczosConfig& l = cfg.lanczos;
    const ModelSpec spec = make_model(l.model);
    const PauliOperator seed =
        l.seed_op.empty() ? default_lanczos_seed(spec) : make_seed_op(l.seed_op, l.model.n_sites);

    LanczosOptions opts;
    opts.lambda = l.lambda;
    if (l.term_cap < 1) throw ConfigError("lanczos: term_cap must be positive");
    opts.term_cap = std::size_t(l.term_cap);

    LanczosResult r = lanczos_coefficients(spec, seed, l.n_max, l.p, opts);
    {
        CsvWriter w(out / "coefficients.csv", {"n", "b"});
        for (std::size_t i = 0; i < r.b.size(); ++i) w.row(int(i) + 1, r.b[i]);
    }

    json meta{{"model", r.model},       {"p", r.p},
              {"n", r.b.size()},        {"breakdown", r.breakdown},
              {"lambda", l.lambda},     {"fitted", false}};

    const int fit_hi = l.fit_hi > 0 ? l.fit_hi : l.n_max;
    if (l.fit && int(r.b.size()) >= std::max(6, l.fit_lo + 5)) {
        const GrowthFit g = growth_exponent(r, l.fit_lo, std::min(fit_hi, int(r.b.size())),
                                            l.fit_width, l.log_correction);
        meta["fitted"] = true;
        meta["one_over_alpha"] = g.one_over_alpha;
        meta["r_squared"] = g.r_squared;
        meta["fit_lo"] = g.n_lo;
        meta["fit_hi"] = g.n_hi;
        meta["smoothing_width"] = g.smoothing_width;
        meta["log_correction"] = g.log_correction;
        std::printf("lanczos: %s p=%d 1/alpha = %s (R^2 %s)\n", r.model.c_str(), r.p,
                    format_double(g.one_over_alpha).c_str(),
                    format_double(g.r_squared).c_str());
    } else {
        std::printf("lanczos: %s p=%d %zu coefficients%s\n", r.model.c_str(), r.p, r.b.size(),
                    r.breakdown ? " (breakdown)" : "");
    }

    if (l.p_compare > 0) {
        const LanczosResult r2 = lanczos_coefficients(spec, seed, l.n_max, l.p_compare, opts);
        CsvWriter w(out / "coefficients_p2.csv", {"n", "b"});
        for (std::size_t i = 0; i < r2.b.size(); ++i) w.row(int(i) + 1, r2.b[i]);
        meta["p_compare"] = l.p_compare;
        meta["divergence_index"] = divergence_index(r, r2);
    }

    std::ofstream(out / "growth.json") << meta.dump(2) << '\n';
    write_manifest(out, "lanczos", to_json(cfg), started);
    return 0;
}

// ---------------------------------------------------------------- spectral

int cmd_spectral(const RunConfig& cfg) {
    const auto started = std::chrono::system_clock::now();
    const auto out = resolve_output_dir(cfg.global.out_dir);
    const SpectralConfig& s = cfg.spectral;
    const ModelSpec spec = make_model(s.model);

    Ensemble ensemble;
    if (s.ensemble == "GROUND") ensemble = Ensemble::GROUND;
    else if (s.ensemble == "INFINITE_T") ensemble = Ensemble::INFINITE_T;
    else throw ConfigError("unknown ensemble '" + s.ensemble + "' (expected GROUND or INFINITE_T)");

    BinningSpec bins;
    bins.n_bins = s.bins;
    if (s.kind == "GAUSSIAN") bins.kind = BinKind::GAUSSIAN;
    else if (s.kind == "HARD") bins.kind = BinKind::HARD;
    else throw ConfigError("unknown bin kind '" + s.kind + "' (expected GAUSSIAN or HARD)");
    if (s.range_lo.has_value() != s.range_hi.has_value())
        throw ConfigError("spectral: range_lo and range_hi must be given together");
    if (s.range_lo) bins.range = {{*s.range_lo, *s.range_hi}};

    const SpectralData sd = diagonalize(spec, s.lambda, ensemble);
    const SpectralHistogram hist = spectral_function(sd, bins);
    {
        CsvWriter w(out / "phi.csv", {"omega", "density"});
        for (std::size_t i = 0; i < hist.centers.size(); ++i)
            w.row(hist.centers[i], hist.density[i]);
    }
    json meta{{"model", s.model.name}, {"n_sites", s.model.n_sites},
              {"lambda", s.lambda},    {"ensemble", s.ensemble},
              {"dim", sd.dim()},       {"bins", s.bins},
              {"bin_width", hist.bin_width},
              {"total_weight", hist.total_weight}};
    std::ofstream(out / "spectral.json") << meta.dump(2) << '\n';
    std::printf("spectral: %s N=%d lambda=%s total weight %s -> %s\n", s.model.name.c_str(),
                s.model.n_sites, format_double(s.lambda).c_str(),
                format_double(hist.total_weight).c_str(), (out / "phi.csv").c_str());
    write_manifest(out, "spectral", to_json(cfg), started);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"counterdiabatic driving toolkit"};
    app.require_subcommand(1);
    int rc = 0;

    // ---- fit
    auto* fit = app.add_subcommand("fit", "Chebyshev window fit of -1/x on [zeta, 1]");
    CommonArgs fit_common;
    add_common(fit, fit_common);
    struct {
        Opt<int> ell, curve_points, scan_grid;
        Opt<double> zeta, scan_lo, scan_hi;
        Opt<std::string> mode;
        Opt<std::vector<int>> ells;
        bool scan_zeta = false;
        std::string objective = "residual";
    } fa;
    bind_opt(fit, "--ell", fa.ell);
    bind_opt(fit, "--zeta", fa.zeta);
    bind_opt(fit, "--mode", fa.mode, "COST | ACTION");
    bind_opt(fit, "--curve-points", fa.curve_points);
    fit->add_flag("--scan-zeta", fa.scan_zeta, "tabulate zeta*(ell) instead of one fit");
    fit->add_option("--objective", fa.objective, "scan objective (residual)");
    bind_opt(fit, "--ells", fa.ells, "scan rows")->delimiter(',');
    bind_opt(fit, "--scan-lo", fa.scan_lo);
    bind_opt(fit, "--scan-hi", fa.scan_hi);
    bind_opt(fit, "--scan-grid", fa.scan_grid);
    fit->callback([&] {
        RunConfig cfg = load_common(fit_common);
        apply_opt(fa.ell, cfg.fit.ell);
        apply_opt(fa.zeta, cfg.fit.zeta);
        apply_opt(fa.mode, cfg.fit.mode);
        apply_opt(fa.curve_points, cfg.fit.curve_points);
        if (fa.scan_zeta) cfg.fit.scan_zeta = true;
        apply_opt(fa.ells, cfg.fit.ells);
        apply_opt(fa.scan_lo, cfg.fit.scan_lo);
        apply_opt(fa.scan_hi, cfg.fit.scan_hi);
        apply_opt(fa.scan_grid, cfg.fit.scan_grid);
        rc = cmd_fit(cfg, fa.objective);
    });

    // ---- anneal
    auto* anneal = app.add_subcommand("anneal", "drive one model through the schedule");
    CommonArgs an_common;
    ModelArgs an_model;
    add_common(anneal, an_common);
    add_model(anneal, an_model);
    struct {
        Opt<std::string> protocol, fit_mode, shape;
        Opt<int> ell, n_modes, realizations, samples, knots;
        Opt<double> zeta, omega, mu, total_time, abs_tol, rel_tol;
        Opt<long> fixed_steps;
        bool fixed_step = false, energy_trace = false;
    } aa;
    bind_opt(anneal, "--protocol", aa.protocol, "NONE | UNIVERSAL | VARIATIONAL | EXACT");
    bind_opt(anneal, "--fit-mode", aa.fit_mode, "COST | ACTION");
    bind_opt(anneal, "--ell", aa.ell);
    bind_opt(anneal, "--zeta", aa.zeta);
    bind_opt(anneal, "--omega", aa.omega);
    bind_opt(anneal, "--mu", aa.mu);
    bind_opt(anneal, "--T", aa.total_time, "total anneal time");
    bind_opt(anneal, "--shape", aa.shape, "SMOOTH_SINE | LINEAR");
    bind_opt(anneal, "--n-modes", aa.n_modes, "momentum blocks (free-fermion backend)");
    bind_opt(anneal, "--realizations", aa.realizations, "disorder realizations to average");
    bind_opt(anneal, "--samples", aa.samples, "trace sample count");
    bind_opt(anneal, "--knots", aa.knots, "gauge-potential lambda grid");
    bind_opt(anneal, "--abs-tol", aa.abs_tol);
    bind_opt(anneal, "--rel-tol", aa.rel_tol);
    anneal->add_flag("--fixed-step", aa.fixed_step, "bit-reproducible RK4");
    bind_opt(anneal, "--fixed-steps", aa.fixed_steps);
    anneal->add_flag("--energy-trace", aa.energy_trace);
    anneal->callback([&] {
        RunConfig cfg = load_common(an_common);
        apply_model(an_model, cfg.anneal.model);
        apply_opt(aa.protocol, cfg.anneal.protocol);
        apply_opt(aa.fit_mode, cfg.anneal.fit_mode);
        apply_opt(aa.ell, cfg.anneal.ell);
        apply_opt(aa.zeta, cfg.anneal.zeta);
        apply_opt(aa.omega, cfg.anneal.omega);
        apply_opt(aa.mu, cfg.anneal.mu);
        apply_opt(aa.total_time, cfg.anneal.schedule.total_time);
        apply_opt(aa.shape, cfg.anneal.schedule.shape);
        apply_opt(aa.n_modes, cfg.anneal.n_modes);
        apply_opt(aa.realizations, cfg.anneal.realizations);
        apply_opt(aa.samples, cfg.anneal.integrator.samples);
        apply_opt(aa.knots, cfg.anneal.integrator.knots);
        apply_opt(aa.abs_tol, cfg.anneal.integrator.abs_tol);
        apply_opt(aa.rel_tol, cfg.anneal.integrator.rel_tol);
        if (aa.fixed_step) cfg.anneal.integrator.fixed_step = true;
        apply_opt(aa.fixed_steps, cfg.anneal.integrator.fixed_steps);
        if (aa.energy_trace) cfg.anneal.energy_trace = true;
        rc = cmd_anneal(cfg);
    });

    // ---- scaling
    auto* scaling = app.add_subcommand("scaling", "paper-scale scans and asymptote fits");
    CommonArgs sc_common;
    ModelArgs sc_model;
    add_common(scaling, sc_common);
    add_model(scaling, sc_model);
    struct {
        Opt<std::string> experiment, mode, zeta_csv, action_zeta_csv, asymptote, shape;
        Opt<std::vector<int>> ells;
        Opt<int> n_modes, grid, search_grid, fit_ell_min, samples;
        Opt<double> omega, omega_lo, omega_hi, rel_tol, search_lo, search_hi, search_rel_tol,
            total_time, abs_tol, ode_rel_tol;
    } sa;
    bind_opt(scaling, "--experiment", sa.experiment,
         "zeta_tfi | omega_nnn | omega_xxz | cost_vs_action");
    bind_opt(scaling, "--ells", sa.ells)->delimiter(',');
    bind_opt(scaling, "--n-modes", sa.n_modes, "clean-chain modes for zeta calibration");
    bind_opt(scaling, "--omega", sa.omega, "fixed cutoff for the zeta scan");
    bind_opt(scaling, "--mode", sa.mode, "COST | ACTION");
    bind_opt(scaling, "--omega-lo", sa.omega_lo);
    bind_opt(scaling, "--omega-hi", sa.omega_hi);
    bind_opt(scaling, "--grid", sa.grid, "omega scan grid points");
    bind_opt(scaling, "--rel-tol", sa.rel_tol, "golden-section relative tolerance");
    bind_opt(scaling, "--search-lo", sa.search_lo);
    bind_opt(scaling, "--search-hi", sa.search_hi);
    bind_opt(scaling, "--search-grid", sa.search_grid);
    bind_opt(scaling, "--search-rel-tol", sa.search_rel_tol);
    bind_opt(scaling, "--zeta-csv", sa.zeta_csv, "reuse a zeta table instead of calibrating");
    bind_opt(scaling, "--action-zeta-csv", sa.action_zeta_csv);
    bind_opt(scaling, "--asymptote", sa.asymptote, "LOGL_OVER_L | LINEAR | POWER");
    bind_opt(scaling, "--fit-ell-min", sa.fit_ell_min);
    bind_opt(scaling, "--T", sa.total_time);
    bind_opt(scaling, "--shape", sa.shape);
    bind_opt(scaling, "--samples", sa.samples);
    bind_opt(scaling, "--abs-tol", sa.abs_tol);
    bind_opt(scaling, "--ode-rel-tol", sa.ode_rel_tol);
    scaling->callback([&] {
        RunConfig cfg = load_common(sc_common);
        apply_model(sc_model, cfg.scaling.model);
        apply_opt(sa.experiment, cfg.scaling.experiment);
        apply_opt(sa.ells, cfg.scaling.ells);
        apply_opt(sa.n_modes, cfg.scaling.n_modes);
        apply_opt(sa.omega, cfg.scaling.omega);
        apply_opt(sa.mode, cfg.scaling.mode);
        apply_opt(sa.omega_lo, cfg.scaling.omega_lo);
        apply_opt(sa.omega_hi, cfg.scaling.omega_hi);
        apply_opt(sa.grid, cfg.scaling.grid);
        apply_opt(sa.rel_tol, cfg.scaling.rel_tol);
        apply_opt(sa.search_lo, cfg.scaling.search_lo);
        apply_opt(sa.search_hi, cfg.scaling.search_hi);
        apply_opt(sa.search_grid, cfg.scaling.search_grid);
        apply_opt(sa.search_rel_tol, cfg.scaling.search_rel_tol);
        apply_opt(sa.zeta_csv, cfg.scaling.zeta_csv);
        apply_opt(sa.action_zeta_csv, cfg.scaling.action_zeta_csv);
        apply_opt(sa.asymptote, cfg.scaling.asymptote);
        apply_opt(sa.fit_ell_min, cfg.scaling.fit_ell_min);
        apply_opt(sa.total_time, cfg.scaling.schedule.total_time);
        apply_opt(sa.shape, cfg.scaling.schedule.shape);
        apply_opt(sa.samples, cfg.scaling.integrator.samples);
        apply_opt(sa.abs_tol, cfg.scaling.integrator.abs_tol);
        apply_opt(sa.ode_rel_tol, cfg.scaling.integrator.rel_tol);
        rc = cmd_scaling(cfg);
    });

    // ---- lanczos
    auto* lanczos = app.add_subcommand("lanczos", "operator-growth coefficients b_n");
    CommonArgs lz_common;
    ModelArgs lz_model;
    add_common(lanczos, lz_common);
    add_model(lanczos, lz_model);
    struct {
        Opt<double> lambda, width;
        Opt<int> p, n_max, p_compare, fit_lo, fit_hi;
        Opt<long> term_cap;
        Opt<std::string> seed_op;
        bool log_correction = false, no_fit = false;
    } la;
    bind_opt(lanczos, "--lambda", la.lambda);
    bind_opt(lanczos, "--p", la.p, "support truncation");
    bind_opt(lanczos, "--n-max", la.n_max);
    bind_opt(lanczos, "--p-compare", la.p_compare, "second chain for the divergence index");
    bind_opt(lanczos, "--seed-op", la.seed_op, "e.g. Z0; default normalized d_lambda H");
    bind_opt(lanczos, "--term-cap", la.term_cap);
    bind_opt(lanczos, "--fit-lo", la.fit_lo);
    bind_opt(lanczos, "--fit-hi", la.fit_hi);
    bind_opt(lanczos, "--width", la.width, "Gaussian smoothing width");
    lanczos->add_flag("--log-correction", la.log_correction, "fit against n/log(n)");
    lanczos->add_flag("--no-fit", la.no_fit);
    lanczos->callback([&] {
        RunConfig cfg = load_common(lz_common);
        apply_model(lz_model, cfg.lanczos.model);
        apply_opt(la.lambda, cfg.lanczos.lambda);
        apply_opt(la.p, cfg.lanczos.p);
        apply_opt(la.n_max, cfg.lanczos.n_max);
        apply_opt(la.p_compare, cfg.lanczos.p_compare);
        apply_opt(la.seed_op, cfg.lanczos.seed_op);
        apply_opt(la.term_cap, cfg.lanczos.term_cap);
        apply_opt(la.fit_lo, cfg.lanczos.fit_lo);
        apply_opt(la.fit_hi, cfg.lanczos.fit_hi);
        apply_opt(la.width, cfg.lanczos.fit_width);
        if (la.log_correction) cfg.lanczos.log_correction = true;
        if (la.no_fit) cfg.lanczos.fit = false;
        rc = cmd_lanczos(cfg);
    });

    // ---- spectral
    auto* spectral = app.add_subcommand("spectral", "spectral-function histogram dump");
    CommonArgs sp_common;
    ModelArgs sp_model;
    add_common(spectral, sp_common);
    add_model(spectral, sp_model);
    struct {
        Opt<double> lambda, range_lo, range_hi;
        Opt<int> bins;
        Opt<std::string> ensemble, kind;
    } pa;
    bind_opt(spectral, "--lambda", pa.lambda);
    bind_opt(spectral, "--ensemble", pa.ensemble, "GROUND | INFINITE_T");
    bind_opt(spectral, "--bins", pa.bins);
    bind_opt(spectral, "--kind", pa.kind, "GAUSSIAN | HARD");
    bind_opt(spectral, "--range-lo", pa.range_lo);
    bind_opt(spectral, "--range-hi", pa.range_hi);
    spectral->callback([&] {
        RunConfig cfg = load_common(sp_common);
        apply_model(sp_model, cfg.spectral.model);
        apply_opt(pa.lambda, cfg.spectral.lambda);
        apply_opt(pa.ensemble, cfg.spectral.ensemble);
        apply_opt(pa.bins, cfg.spectral.bins);
        apply_opt(pa.kind, cfg.spectral.kind);
        if (pa.range_lo) cfg.spectral.range_lo = pa.range_lo.value;
        if (pa.range_hi) cfg.spectral.range_hi = pa.range_hi.value;
        rc = cmd_spectral(cfg);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // bad arguments are config errors
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ResourceError& e) {
        std::fprintf(stderr, "resource limit: %s\n", e.what());
        return 3;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 4;
    }
    return rc;
}
