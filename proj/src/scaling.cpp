#include "cdkit/scaling.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>
#include <tuple>

#include "cdkit/errors.hpp"
#include "cdkit/free_fermion.hpp"

namespace cdkit {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Index-addressed work queue: each job writes only its own slot, so the
// result is identical for any worker count or interleaving.
void parallel_for(int n, int workers, const std::function<void(int)>& body) {
    workers = std::clamp(workers, 1, n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i; (i = next.fetch_add(1)) < n;) {
                try {
                    body(i);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// Golden-section maximization in log coordinates; returns the abscissa.
double golden_max(double lo, double hi, double rel_tol,
                  const std::function<double(double)>& f) {
    constexpr double gr = 0.6180339887498949;
    double a = std::log(lo), b = std::log(hi);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(std::exp(c)), fd = f(std::exp(d));
    while (b - a > rel_tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(std::exp(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(std::exp(d));
        }
    }
    return std::exp(0.5 * (a + b));
}

struct ScanOptions {
    double lo = 0.0;
    double hi = 0.0;
    int grid = 0;
    double rel_tol = 1e-3;
    int workers = 1;
    bool accept_edge = false; // otherwise: widen once, then throw
};

struct ScanBest {
    double x = 0.0;
    double value = 0.0;
};

// Log-grid argmax then golden refinement between the flanking grid points.
// Ties keep the lowest index, and slots are index-addressed, so the outcome
// does not depend on the worker count. The stored value is a fresh evaluation
// at the returned abscissa.
ScanBest scan_max(const ScanOptions& s, const std::function<double(double)>& objective,
                  const char* what) {
    if (s.grid < 4) throw ConfigError(std::string(what) + ": scan grid needs at least 4 points");
    if (!(s.lo > 0.0) || !(s.hi > s.lo))
        throw ConfigError(std::string(what) + ": scan bracket must satisfy 0 < lo < hi");
    if (s.rel_tol <= 0.0) throw ConfigError(std::string(what) + ": rel_tol must be positive");

    std::vector<double> xs, vals;
    int best = 0;
    auto run_grid = [&](double glo, double ghi) {
        xs.resize(static_cast<std::size_t>(s.grid));
        vals.resize(static_cast<std::size_t>(s.grid));
        for (int i = 0; i < s.grid; ++i)
            xs[std::size_t(i)] = glo * std::pow(ghi / glo, double(i) / double(s.grid - 1));
        parallel_for(s.grid, s.workers,
                     [&](int i) { vals[std::size_t(i)] = objective(xs[std::size_t(i)]); });
        best = 0;
        for (int i = 1; i < s.grid; ++i)
            if (vals[std::size_t(i)] > vals[std::size_t(best)]) best = i;
    };

    run_grid(s.lo, s.hi);
    if (best == 0 || best == s.grid - 1) {
        if (s.accept_edge) {
            ScanBest r;
            r.x = xs[std::size_t(best)];
            r.value = objective(r.x);
            return r;
        }
        run_grid(s.lo / 4.0, s.hi * 4.0);
        if (best == 0 || best == s.grid - 1)
            throw NumericalError(std::string(what) +
                                 ": objective is pinned at the bracket edge even after widening "
                                 "(best x = " +
                                 std::to_string(xs[std::size_t(best)]) + ")");
    }

    ScanBest r;
    r.x = golden_max(xs[std::size_t(best - 1)], xs[std::size_t(best + 1)], s.rel_tol, objective);
    r.value = objective(r.x);
    return r;
}

bool free_fermion_backed(const ModelSpec& spec) {
    return spec.name == ModelName::TFI_CLEAN || spec.name == ModelName::TFI_BLOCK_DISORDER;
}

int default_modes(const ModelSpec& spec) {
    const int cell = spec.name == ModelName::TFI_BLOCK_DISORDER && spec.disorder
                         ? spec.disorder->block_size
                         : 1;
    const int modes = spec.n_sites / (2 * cell);
    if (modes < 1 || chain_sites(spec, modes) != spec.n_sites)
        throw ConfigError("optimize_omega: " + std::to_string(spec.n_sites) +
                          " sites do not split into momentum blocks; pass n_modes explicitly");
    return modes;
}

void check_ells(std::span<const int> ells, const char* what) {
    if (ells.empty()) throw ConfigError(std::string(what) + ": empty ell list");
    for (int ell : ells)
        if (ell < 1) throw ConfigError(std::string(what) + ": ell must be >= 1");
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    if (std::abs(det) < 1e-300) throw NumericalError("fit_asymptote: degenerate abscissa");
    return {(n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det};
}

double r_squared_original(std::span<const double> y, std::span<const double> model) {
    double mean = 0;
    for (double v : y) mean += v;
    mean /= double(y.size());
    double sse = 0, sst = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sse += (y[i] - model[i]) * (y[i] - model[i]);
        sst += (y[i] - mean) * (y[i] - mean);
    }
    if (sst <= 0.0) return sse <= 1e-30 ? 1.0 : 0.0;
    return 1.0 - sse / sst;
}

} // namespace

std::string to_string(AsymptoteForm form) {
    switch (form) {
    case AsymptoteForm::LOGL_OVER_L: return "LOGL_OVER_L";
    case AsymptoteForm::LINEAR: return "LINEAR";
    case AsymptoteForm::POWER: return "POWER";
    }
    return "?";
}

AsymptoteForm asymptote_form_from_string(const std::string& s) {
    if (s == "LOGL_OVER_L") return AsymptoteForm::LOGL_OVER_L;
    if (s == "LINEAR") return AsymptoteForm::LINEAR;
    if (s == "POWER") return AsymptoteForm::POWER;
    throw ConfigError("unknown asymptote form: " + s);
}

AsymptoteFit fit_asymptote(std::span<const ScalingPoint> points, AsymptoteForm form,
                           int ell_min, int ell_max) {
    std::vector<double> ls, ys;
    for (const ScalingPoint& p : points) {
        if (p.ell < ell_min || p.ell > ell_max) continue;
        if (p.ell < 1) throw ConfigError("fit_asymptote: ell must be >= 1");
        ls.push_back(double(p.ell));
        ys.push_back(p.optimum);
    }
    if (ls.size() < 4)
        throw ConfigError("fit_asymptote: need at least 4 points in range, have " +
                          std::to_string(ls.size()));

    AsymptoteFit fit;
    fit.form = form;
    fit.ell_min = int(*std::min_element(ls.begin(), ls.end()));
    fit.ell_max = int(*std::max_element(ls.begin(), ls.end()));

    std::vector<double> model(ls.size());
    switch (form) {
    case AsymptoteForm::LOGL_OVER_L: {
        // y * ell = C log(ell): one-parameter regression through the origin
        double num = 0, den = 0;
        for (std::size_t i = 0; i < ls.size(); ++i) {
            const double t = std::log(ls[i]);
            num += t * ys[i] * ls[i];
            den += t * t;
        }
        if (den <= 0.0)
            throw ConfigError("fit_asymptote: LOGL_OVER_L needs points with ell > 1");
        const double c = num / den;
        fit.parameters = {c};
        for (std::size_t i = 0; i < ls.size(); ++i) model[i] = c * std::log(ls[i]) / ls[i];
        break;
    }
    case AsymptoteForm::LINEAR: {
        const LineFit lf = fit_line(ls, ys);
        fit.parameters = {lf.slope, lf.intercept};
        for (std::size_t i = 0; i < ls.size(); ++i) model[i] = lf.slope * ls[i] + lf.intercept;
        break;
    }
    case AsymptoteForm::POWER: {
        std::vector<double> lx(ls.size()), ly(ls.size());
        for (std::size_t i = 0; i < ls.size(); ++i) {
            if (ys[i] <= 0.0)
                throw ConfigError("fit_asymptote: POWER needs positive values, got " +
                                  std::to_string(ys[i]) + " at ell = " +
                                  std::to_string(int(ls[i])));
            lx[i] = std::log(ls[i]);
            ly[i] = std::log(ys[i]);
        }
        const LineFit lf = fit_line(lx, ly);
        fit.parameters = {std::exp(lf.intercept), lf.slope}; // {a, p}
        for (std::size_t i = 0; i < ls.size(); ++i)
            model[i] = fit.parameters[0] * std::pow(ls[i], fit.parameters[1]);
        break;
    }
    }
    fit.r_squared = r_squared_original(ys, model);
    return fit;
}

std::vector<ScalingPoint> optimize_mu_tfi(std::span<const int> ells, const ZetaScanConfig& cfg) {
    check_ells(ells, "optimize_mu_tfi");
    if (cfg.n_modes < 1) throw ConfigError("optimize_mu_tfi: n_modes must be positive");
    if (cfg.omega <= 0.0) throw ConfigError("optimize_mu_tfi: omega must be positive");
    if (cfg.workers < 1) throw ConfigError("optimize_mu_tfi: workers must be >= 1");

    const ModelSpec spec = tfi_clean(2 * cfg.n_modes);
    const auto objective = [&](int ell, double zeta) {
        const ChebFit fit = fit_inverse(ell, zeta, cfg.mode);
        BlockDrive drive;
        drive.protocol = BlockProtocol::UNIVERSAL;
        drive.betas = fit.betas;
        drive.omega = cfg.omega;
        return drive_chain(spec, cfg.n_modes, cfg.schedule, drive, cfg.ode).per_site;
    };

    std::vector<ScalingPoint> out(ells.size());
    parallel_for(int(ells.size()), cfg.workers, [&](int i) {
        const auto t0 = Clock::now();
        const int ell = ells[std::size_t(i)];
        const std::vector<ZetaTableRow> rows =
            optimal_zeta_table(std::span<const int>(&ell, 1), objective, cfg.search);
        ScalingPoint& p = out[std::size_t(i)];
        p.ell = ell;
        p.optimum = rows.at(0).zeta_star;
        p.objective = rows.at(0).objective;
        p.model = to_string(spec.name);
        p.wall_seconds = seconds_since(t0);
    });
    return out;
}

std::vector<ZetaTableRow> zeta_table_from(std::span<const ScalingPoint> points) {
    std::vector<ZetaTableRow> table(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        table[i] = {points[i].ell, points[i].optimum, points[i].objective};
    return table;
}

double zeta_for(std::span<const ZetaTableRow> table, int ell) {
    for (const ZetaTableRow& row : table)
        if (row.ell == ell) return row.zeta_star;
    throw ConfigError("zeta table has no row for ell = " + std::to_string(ell));
}

std::vector<ScalingPoint> optimize_omega(const ModelSpec& spec, std::span<const int> ells,
                                         std::span<const ZetaTableRow> zeta_table,
                                         const OmegaScanConfig& cfg) {
    check_ells(ells, "optimize_omega");
    if (cfg.workers < 1) throw ConfigError("optimize_omega: workers must be >= 1");
    for (int ell : ells) zeta_for(zeta_table, ell); // fail before any work

    ScanOptions scan;
    scan.lo = cfg.omega_lo;
    scan.hi = cfg.omega_hi;
    scan.grid = cfg.grid;
    scan.rel_tol = cfg.rel_tol;
    scan.workers = cfg.workers;

    const bool blocks = free_fermion_backed(spec);
    const int n_modes = blocks ? (cfg.n_modes > 0 ? cfg.n_modes : default_modes(spec)) : 0;
    std::unique_ptr<KnotCache> cache;
    double span = 0.0;
    if (blocks) {
        // largest transition frequency any block ever sees, sampled along the
        // ramp (each block is linear in lambda, so three samples bound it well
        // within the six orders of headroom the gate leaves)
        for (const MomentumBlock& blk : build_blocks(spec, n_modes))
            for (const double l : {0.0, 0.5, 1.0}) {
                const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
                    blk.h(l), Eigen::EigenvaluesOnly);
                span = std::max(span,
                                es.eigenvalues().maxCoeff() - es.eigenvalues().minCoeff());
            }
    } else {
        cache = std::make_unique<KnotCache>(make_knot_cache(spec, cfg.evolve.knots));
        for (const SpectralData& sd : cache->at)
            span = std::max(span, sd.energies(sd.dim() - 1) - sd.energies(0));
    }

    std::vector<ScalingPoint> out;
    out.reserve(ells.size());
    for (int ell : ells) {
        const auto t0 = Clock::now();
        const ChebFit fit = fit_inverse(ell, zeta_for(zeta_table, ell), cfg.mode);
        const auto objective = [&](double omega) -> double {
            // Far below the spectral span the window polynomial explodes at
            // the band edge and the drive only injects rotation; skip the
            // (stiff, expensive) integration and score it off the scan.
            // Viable points sit many orders below this threshold.
            const bool ruined =
                std::abs(eval_beta_series(fit.betas, span / omega)) / omega > 1e6;
            try {
                if (blocks) {
                    if (ruined) return -std::numeric_limits<double>::infinity();
                    BlockDrive drive;
                    drive.protocol = BlockProtocol::UNIVERSAL;
                    drive.betas = fit.betas;
                    drive.omega = omega;
                    OdeOptions ode;
                    ode.abs_tol = cfg.evolve.abs_tol;
                    ode.rel_tol = cfg.evolve.rel_tol;
                    return drive_chain(spec, n_modes, cfg.schedule, drive, ode).per_site;
                }
                if (ruined) return 0.0;
                return evolve(spec, cfg.schedule, Protocol::universal(fit, omega), cfg.evolve,
                              cache.get())
                    .final_fidelity;
            } catch (const NumericalError&) {
                // deep in the blow-up region the drive is simply not viable
                return blocks ? -std::numeric_limits<double>::infinity() : 0.0;
            }
        };
        const ScanBest best = scan_max(scan, objective, "optimize_omega");
        ScalingPoint p;
        p.ell = ell;
        p.optimum = best.x;
        p.objective = best.value;
        p.model = to_string(spec.name);
        p.wall_seconds = seconds_since(t0);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<ProtocolComparison> compare_cost_action(const ModelSpec& spec,
                                                    std::span<const int> ells,
                                                    std::span<const ZetaTableRow> cost_table,
                                                    std::span<const ZetaTableRow> action_table,
                                                    const OmegaScanConfig& cfg) {
    check_ells(ells, "compare_cost_action");
    if (cfg.workers < 1) throw ConfigError("compare_cost_action: workers must be >= 1");
    for (int ell : ells) {
        zeta_for(cost_table, ell);
        zeta_for(action_table, ell);
    }

    const KnotCache cache = make_knot_cache(spec, cfg.evolve.knots);
    double span = 0.0;
    for (const SpectralData& sd : cache.at)
        span = std::max(span, sd.energies(sd.dim() - 1) - sd.energies(0));

    ScanOptions scan;
    scan.lo = cfg.omega_lo;
    scan.hi = cfg.omega_hi;
    scan.grid = cfg.grid;
    scan.rel_tol = cfg.rel_tol;
    scan.workers = cfg.workers;
    scan.accept_edge = true; // the comparison reports whatever each search finds

    const auto fidelity = [&](const Protocol& protocol) -> double {
        try {
            return evolve(spec, cfg.schedule, protocol, cfg.evolve, &cache).final_fidelity;
        } catch (const NumericalError&) {
            return 0.0;
        }
    };
    // same band-edge blow-up gate as optimize_omega
    const auto window_fidelity = [&](const ChebFit& fit, double omega) -> double {
        if (std::abs(eval_beta_series(fit.betas, span / omega)) / omega > 1e6) return 0.0;
        return fidelity(Protocol::universal(fit, omega));
    };

    std::vector<ProtocolComparison> out;
    out.reserve(ells.size());
    for (int ell : ells) {
        const double zeta = zeta_for(cost_table, ell);
        const ChebFit cost = fit_inverse(ell, zeta, FitMode::COST);
        const ChebFit action = fit_inverse(ell, zeta_for(action_table, ell), FitMode::ACTION);

        ProtocolComparison row;
        row.ell = ell;
        ScanBest b = scan_max(
            scan, [&](double om) { return window_fidelity(cost, om); },
            "compare_cost_action[COST]");
        row.omega_cost = b.x;
        row.f_cost = b.value;
        b = scan_max(
            scan, [&](double om) { return window_fidelity(action, om); },
            "compare_cost_action[ACTION]");
        row.omega_action = b.x;
        row.f_action = b.value;

        // same one-parameter search, run over the regulator mu; the useful mu
        // range sits below the window edge zeta * omega (the fidelity
        // plateaus as mu -> 0), so the bracket reaches two decades lower
        ScanOptions vscan = scan;
        vscan.lo = 1e-2 * zeta * cfg.omega_lo;
        vscan.hi = zeta * cfg.omega_hi;
        b = scan_max(
            vscan, [&](double mu) { return fidelity(Protocol::variational(ell, mu)); },
            "compare_cost_action[VARIATIONAL]");
        row.mu_variational = b.x;
        row.f_variational = b.value;
        out.push_back(row);
    }
    return out;
}

} // namespace cdkit
