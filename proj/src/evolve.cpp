#include "cdkit/evolve.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "cdkit/errors.hpp"
#include "cdkit/ode.hpp"

namespace cdkit {

using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

// Knot-cache plus lazily built kernel matrices would top this footprint.
constexpr double kMemoryBudgetBytes = 4e9;

bool same_disorder(const std::optional<DisorderSpec>& a, const std::optional<DisorderSpec>& b) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    return a->block_size == b->block_size && a->seed == b->seed && a->fields == b->fields;
}

bool same_model(const ModelSpec& a, const ModelSpec& b) {
    return a.name == b.name && a.n_sites == b.n_sites && a.couplings == b.couplings &&
           a.boundary == b.boundary && a.magnetization == b.magnetization &&
           same_disorder(a.disorder, b.disorder);
}

std::size_t dense_dimension(const ModelSpec& spec) {
    if (spec.magnetization)
        return magnetization_basis(spec.n_sites, *spec.magnetization).size();
    return std::size_t(1) << spec.n_sites;
}

void check_protocol(const Protocol& p) {
    switch (p.kind) {
    case Protocol::Kind::NONE:
        return;
    case Protocol::Kind::UNIVERSAL:
        if (p.fit.betas.empty())
            throw ConfigError("evolve: UNIVERSAL protocol carries no window weights");
        if (!(p.omega > 0.0))
            throw ConfigError("evolve: UNIVERSAL protocol needs a positive spectral scale");
        return;
    case Protocol::Kind::VARIATIONAL:
        if (p.ell < 1)
            throw ConfigError("evolve: VARIATIONAL protocol needs ell >= 1");
        if (p.mu < 0.0)
            throw ConfigError("evolve: VARIATIONAL regulator must be nonnegative");
        return;
    case Protocol::Kind::EXACT:
        if (!(p.mu > 0.0))
            throw ConfigError("evolve: EXACT protocol needs a positive regulator");
        return;
    }
    throw ConfigError("evolve: unknown protocol kind");
}

// Real antisymmetric kernel K with A = i V K V^T in the lambda-knot eigenbasis.
// UNIVERSAL:    K_mn = f_beta(omega_mn / Omega) / Omega * M_mn
// VARIATIONAL:  K_mn = sum_k alpha_k omega_mn^{2k-1} * M_mn
// EXACT:        K_mn = -omega_mn / (omega_mn^2 + mu^2) * M_mn
// All three generators are odd in omega, so K is antisymmetric and A Hermitian.
MatrixXd protocol_kernel(const SpectralData& sd, const Protocol& p) {
    const int d = sd.dim();
    MatrixXd k = MatrixXd::Zero(d, d);

    std::vector<double> alphas;
    if (p.kind == Protocol::Kind::VARIATIONAL)
        alphas = variational_krylov_agp(sd, p.ell, p.mu).alphas;
    const std::span<const double> betas(p.fit.betas);

    for (int n = 0; n < d; ++n) {
        for (int m = n + 1; m < d; ++m) {
            const double w = sd.energies(m) - sd.energies(n);
            double f = 0.0;
            switch (p.kind) {
            case Protocol::Kind::UNIVERSAL:
                f = eval_beta_series(betas, w / p.omega) / p.omega;
                break;
            case Protocol::Kind::VARIATIONAL: {
                const double w2 = w * w;
                double q = 0.0;
                for (std::size_t i = alphas.size(); i-- > 0;) q = q * w2 + alphas[i];
                f = q * w;
                break;
            }
            case Protocol::Kind::EXACT:
                f = -w / (w * w + p.mu * p.mu);
                break;
            case Protocol::Kind::NONE:
                break;
            }
            k(m, n) = f * sd.matrix_elements(m, n);
            k(n, m) = -k(m, n);
        }
    }
    return k;
}

struct GroundManifold {
    MatrixXd columns;
    double energy = 0.0;
};

GroundManifold manifold_from(const VectorXd& energies, const MatrixXd& vectors) {
    const int d = int(energies.size());
    const double scale =
        std::max({1.0, std::abs(energies(0)), std::abs(energies(d - 1))});
    int g = 1;
    while (g < d && energies(g) - energies(0) <= 1e-8 * scale) ++g;
    return {vectors.leftCols(g), energies(0)};
}

} // namespace

Protocol Protocol::none() { return {}; }

Protocol Protocol::universal(ChebFit fit, double omega) {
    Protocol p;
    p.kind = Kind::UNIVERSAL;
    p.ell = fit.ell;
    p.fit = std::move(fit);
    p.omega = omega;
    return p;
}

Protocol Protocol::variational(int ell, double mu) {
    Protocol p;
    p.kind = Kind::VARIATIONAL;
    p.ell = ell;
    p.mu = mu;
    return p;
}

Protocol Protocol::exact(double mu) {
    Protocol p;
    p.kind = Kind::EXACT;
    p.mu = mu;
    return p;
}

std::string to_string(Protocol::Kind kind) {
    switch (kind) {
    case Protocol::Kind::NONE: return "NONE";
    case Protocol::Kind::UNIVERSAL: return "UNIVERSAL";
    case Protocol::Kind::VARIATIONAL: return "VARIATIONAL";
    case Protocol::Kind::EXACT: return "EXACT";
    }
    throw ConfigError("unknown protocol kind");
}

KnotCache make_knot_cache(const ModelSpec& spec, int knots) {
    validate_model(spec);
    if (knots < 2)
        throw ConfigError("make_knot_cache: need at least 2 knots");
    if (!spec.magnetization && spec.n_sites > kDenseSiteLimit)
        throw ConfigError("make_knot_cache: N=" + std::to_string(spec.n_sites) +
                          " exceeds the dense limit of " + std::to_string(kDenseSiteLimit) +
                          " sites; free-fermion-reducible chains of this size belong to the "
                          "free-fermion backend");

    const double dim = double(dense_dimension(spec));
    const double bytes = double(knots) * 3.0 * dim * dim * 8.0;
    if (bytes > kMemoryBudgetBytes)
        throw ResourceError("make_knot_cache: " + std::to_string(knots) + " knots at dimension " +
                            std::to_string(std::size_t(dim)) + " would need about " +
                            std::to_string(bytes / 1e9) + " GB; lower knots or the system size");

    KnotCache kc;
    kc.spec = spec;
    kc.knots = knots;
    kc.at.reserve(std::size_t(knots));
    for (int j = 0; j < knots; ++j)
        kc.at.push_back(diagonalize(spec, double(j) / double(knots - 1), Ensemble::INFINITE_T));
    return kc;
}

DriveResult evolve(const ModelSpec& spec, const Schedule& schedule, const Protocol& protocol,
                   const EvolveOptions& options, const KnotCache* cache) {
    validate_model(spec);
    check_protocol(protocol);
    if (options.knots < 2)
        throw ConfigError("evolve: need at least 2 knots");
    if (options.samples < 2)
        throw ConfigError("evolve: need at least 2 sample times");
    if (!(options.abs_tol > 0.0) || !(options.rel_tol > 0.0))
        throw ConfigError("evolve: tolerances must be positive");
    if (options.fixed_step && options.fixed_steps < 1)
        throw ConfigError("evolve: fixed-step mode needs at least one step");
    if (options.frozen_lambda && (*options.frozen_lambda < 0.0 || *options.frozen_lambda > 1.0))
        throw ConfigError("evolve: frozen lambda must lie in [0, 1]");

    KnotCache local;
    const KnotCache* kc = cache;
    if (kc) {
        if (kc->knots != options.knots || int(kc->at.size()) != options.knots)
            throw ConfigError("evolve: knot cache was built for a different grid");
        if (!same_model(kc->spec, spec))
            throw ConfigError("evolve: knot cache was built for a different model");
    } else {
        local = make_knot_cache(spec, options.knots);
        kc = &local;
    }

    const int knots = options.knots;
    const int dim = kc->at[0].dim();
    const std::vector<std::uint64_t>& basis = kc->at[0].basis;

    auto dense_real = [&](const PauliOperator& op) {
        const Eigen::MatrixXcd z =
            basis.empty() ? op.to_dense() : to_dense_in_basis(op, basis);
        const double mag = std::max(1.0, z.cwiseAbs().maxCoeff());
        if (z.imag().cwiseAbs().maxCoeff() > 1e-12 * mag)
            throw NumericalError("evolve: Hamiltonian is not real in the working basis");
        return MatrixXd(z.real());
    };
    const MatrixXd h0 = dense_real(hamiltonian(spec, 0.0));
    const MatrixXd h1 = dense_real(hamiltonian(spec, 1.0));

    // Kernels depend on the protocol, so they live here, not in the shared cache.
    std::vector<std::optional<MatrixXd>> kernels(static_cast<std::size_t>(knots));
    auto kernel = [&](int j) -> const MatrixXd& {
        auto& slot = kernels[std::size_t(j)];
        if (!slot) slot = protocol_kernel(kc->at[std::size_t(j)], protocol);
        return *slot;
    };

    auto ground_at = [&](double lambda) -> GroundManifold {
        const double u = lambda * double(knots - 1);
        const long r = std::lround(u);
        if (r >= 0 && r < knots && std::abs(u - double(r)) < 1e-9) {
            const SpectralData& sd = kc->at[std::size_t(r)];
            return manifold_from(sd.energies, sd.eigenvectors);
        }
        const MatrixXd hmix = (1.0 - lambda) * h0 + lambda * h1;
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(hmix);
        if (es.info() != Eigen::Success)
            throw NumericalError("evolve: non-converged instantaneous ground state at lambda = " +
                                 std::to_string(lambda));
        return manifold_from(es.eigenvalues(), es.eigenvectors());
    };

    struct Work {
        VectorXd pr, pi, hr, hi, ar, ai, yr, yi, zr, zi;
    } w;
    w.pr.resize(dim);
    w.pi.resize(dim);
    w.hr.resize(dim);
    w.hi.resize(dim);
    w.ar.resize(dim);
    w.ai.resize(dim);
    w.yr.resize(dim);
    w.yi.resize(dim);
    w.zr.resize(dim);
    w.zi.resize(dim);

    const bool cd_active = protocol.kind != Protocol::Kind::NONE;
    auto rhs = [&](double t, const VectorXcd& y, VectorXcd& dy) {
        const SchedulePoint p = options.frozen_lambda
                                    ? SchedulePoint{*options.frozen_lambda, 0.0}
                                    : schedule_eval(schedule, t);
        w.pr = y.real();
        w.pi = y.imag();
        const double a = 1.0 - p.lambda, b = p.lambda;
        w.hr.noalias() = a * (h0 * w.pr);
        w.hr.noalias() += b * (h1 * w.pr);
        w.hi.noalias() = a * (h0 * w.pi);
        w.hi.noalias() += b * (h1 * w.pi);

        bool agp = false;
        if (cd_active && p.lambda_dot != 0.0) {
            agp = true;
            w.ar.setZero();
            w.ai.setZero();
            // Four-knot cubic Lagrange stencil in lambda. The O(h^4) error is
            // what keeps grid doubling below 1e-6 at 64 knots; linear
            // interpolation measurably plateaus near 1e-5 around Omega ~ span.
            const double u = p.lambda * double(knots - 1);
            int base, count;
            double wts[4];
            if (knots >= 4) {
                base = std::clamp(int(std::floor(u)) - 1, 0, knots - 4);
                count = 4;
                const double x = u - double(base);
                wts[0] = (x - 1.0) * (x - 2.0) * (x - 3.0) / -6.0;
                wts[1] = x * (x - 2.0) * (x - 3.0) / 2.0;
                wts[2] = x * (x - 1.0) * (x - 3.0) / -2.0;
                wts[3] = x * (x - 1.0) * (x - 2.0) / 6.0;
            } else {
                base = std::clamp(int(std::floor(u)), 0, knots - 2);
                count = 2;
                const double x = u - double(base);
                wts[0] = 1.0 - x;
                wts[1] = x;
            }
            for (int side = 0; side < count; ++side) {
                const double weight = p.lambda_dot * wts[side];
                if (weight == 0.0) continue;
                const MatrixXd& v = kc->at[std::size_t(base + side)].eigenvectors;
                const MatrixXd& k = kernel(base + side);
                w.yr.noalias() = v.transpose() * w.pr;
                w.yi.noalias() = v.transpose() * w.pi;
                w.zr.noalias() = k * w.yr;
                w.zi.noalias() = k * w.yi;
                w.ar.noalias() += weight * (v * w.zr);
                w.ai.noalias() += weight * (v * w.zi);
            }
        }

        // dy = -i H y + lambda_dot V K V^T y  (A = i V K V^T, so -i lambda_dot A
        // contributes the +lambda_dot term)
        dy.resizeLike(y);
        if (agp) {
            dy.real() = w.hi + w.ar;
            dy.imag() = w.ai - w.hr;
        } else {
            dy.real() = w.hi;
            dy.imag() = -w.hr;
        }
    };

    VectorXcd psi = kc->at[0].eigenvectors.col(0).cast<cplx>();

    const double total = schedule.total_time;
    const int samples = options.samples;

    DriveResult out;
    out.config.model = to_string(spec.name);
    out.config.n_sites = spec.n_sites;
    out.config.protocol = to_string(protocol.kind);
    out.config.ell = protocol.kind == Protocol::Kind::UNIVERSAL ? protocol.fit.ell
                     : protocol.kind == Protocol::Kind::VARIATIONAL ? protocol.ell
                                                                    : 0;
    out.config.zeta = protocol.kind == Protocol::Kind::UNIVERSAL ? protocol.fit.zeta : 0.0;
    out.config.omega = protocol.omega;
    out.config.mu = protocol.mu;
    out.config.schedule = schedule;
    out.config.knots = options.knots;
    out.config.samples = samples;
    out.config.fixed_step = options.fixed_step;
    out.basis = basis;
    out.times.reserve(std::size_t(samples));
    out.lambdas.reserve(std::size_t(samples));
    out.fidelity.reserve(std::size_t(samples));

    const OdeOptions ode{options.abs_tol, options.rel_tol, 0.0, 2'000'000};
    double drift = 0.0;

    for (int i = 0; i < samples; ++i) {
        const double t = total * double(i) / double(samples - 1);
        if (i > 0) {
            const double t_prev = total * double(i - 1) / double(samples - 1);
            if (options.fixed_step) {
                const long steps = std::max<long>(
                    1, std::lround(double(options.fixed_steps) * (t - t_prev) / total));
                integrate_fixed_rk4(psi, t_prev, t, steps, rhs);
            } else {
                integrate_adaptive(psi, t_prev, t, rhs, ode, "evolve");
            }
        }
        drift = std::max(drift, std::abs(psi.norm() - 1.0));

        const double lambda =
            options.frozen_lambda ? *options.frozen_lambda : schedule_eval(schedule, t).lambda;
        const GroundManifold gm = ground_at(lambda);
        w.pr = psi.real();
        w.pi = psi.imag();
        const double f = (gm.columns.transpose() * w.pr).squaredNorm() +
                         (gm.columns.transpose() * w.pi).squaredNorm();

        out.times.push_back(t);
        out.lambdas.push_back(lambda);
        out.fidelity.push_back(std::min(f, 1.0));
        if (options.energy_trace) {
            w.hr.noalias() = (1.0 - lambda) * (h0 * w.pr);
            w.hr.noalias() += lambda * (h1 * w.pr);
            w.hi.noalias() = (1.0 - lambda) * (h0 * w.pi);
            w.hi.noalias() += lambda * (h1 * w.pi);
            out.energies.push_back(w.pr.dot(w.hr) + w.pi.dot(w.hi));
        }
    }

    out.final_fidelity = out.fidelity.back();
    out.norm_drift = drift;
    out.final_state = std::move(psi);
    return out;
}

} // namespace cdkit
