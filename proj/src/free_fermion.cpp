#include "cdkit/free_fermion.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "cdkit/errors.hpp"

namespace cdkit {

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXd;
using cd = std::complex<double>;

// A_cell[d] and B_cell[d] hold the hopping and pairing couplings from cell 0
// to cell d in <c^dag_i c_j> / <c^dag_i c^dag_j> order; d in {-1, 0, +1}.
struct CellForm {
    Eigen::MatrixXd a_prev, a_same, a_next;
    Eigen::MatrixXd b_prev, b_same, b_next;
};

// Quadratic form of one super-cell of the rotated chain
//   H = -J sum sigma^x sigma^x - sum h_i sigma^z
// after Jordan-Wigner: A_ii = 2 h_i, A_{i,i+1} = -J, B_{i,i+1} = -J (B antisymmetric).
CellForm cell_form(double J, const std::vector<double>& fields) {
    const int nb = int(fields.size());
    CellForm f;
    f.a_prev = f.a_same = f.a_next = Eigen::MatrixXd::Zero(nb, nb);
    f.b_prev = f.b_same = f.b_next = Eigen::MatrixXd::Zero(nb, nb);
    for (int s = 0; s < nb; ++s) f.a_same(s, s) = 2.0 * fields[std::size_t(s)];
    for (int s = 0; s + 1 < nb; ++s) {
        f.a_same(s, s + 1) = -J;
        f.a_same(s + 1, s) = -J;
        f.b_same(s, s + 1) = -J;
        f.b_same(s + 1, s) = +J;
    }
    // bond from the last site of a cell to the first site of the next one
    f.a_next(0, nb - 1) = -J;
    f.a_prev(nb - 1, 0) = -J;
    f.b_next(0, nb - 1) = +J;
    f.b_prev(nb - 1, 0) = -J;
    return f;
}

// Bloch sum M(q) = sum_d exp(-i q d) M_cell[d].
MatrixXcd bloch(const Eigen::MatrixXd& prev, const Eigen::MatrixXd& same,
                const Eigen::MatrixXd& next, double q) {
    return std::exp(cd(0.0, +q)) * prev.cast<cd>() + same.cast<cd>() +
           std::exp(cd(0.0, -q)) * next.cast<cd>();
}

// Bogoliubov block in the (c_q, c^dag_{-q}) basis.
MatrixXcd bdg_block(const CellForm& f, double q) {
    const int nb = int(f.a_same.rows());
    const MatrixXcd aq = bloch(f.a_prev, f.a_same, f.a_next, q);
    const MatrixXcd amq = bloch(f.a_prev, f.a_same, f.a_next, -q);
    const MatrixXcd bq = bloch(f.b_prev, f.b_same, f.b_next, q);
    MatrixXcd h(2 * nb, 2 * nb);
    h.topLeftCorner(nb, nb) = aq;
    h.topRightCorner(nb, nb) = bq;
    h.bottomLeftCorner(nb, nb) = bq.adjoint();
    h.bottomRightCorner(nb, nb) = -amq.transpose();
    return h;
}

Eigen::SelfAdjointEigenSolver<MatrixXcd> solve_block(const MatrixXcd& h, const char* where) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
    if (es.info() != Eigen::Success)
        throw NumericalError(std::string(where) + ": block eigensolver failed");
    return es;
}

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 4) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

void require_free_fermion(const ModelSpec& spec, int n_modes) {
    validate_model(spec);
    if (spec.name != ModelName::TFI_CLEAN && spec.name != ModelName::TFI_BLOCK_DISORDER)
        throw ConfigError("build_blocks: " + to_string(spec.name) +
                          " does not reduce to free fermions");
    if (spec.boundary != Boundary::PERIODIC)
        throw ConfigError("build_blocks: momentum blocks need a periodic chain");
    if (n_modes < 1) throw ConfigError("build_blocks: n_modes must be positive");
}

} // namespace

std::vector<MomentumBlock> build_blocks(const ModelSpec& spec, int n_modes) {
    require_free_fermion(spec, n_modes);
    const double J = coupling(spec, "J");
    const double h = coupling(spec, "h");

    std::vector<double> fields0, fields1;
    if (spec.name == ModelName::TFI_CLEAN) {
        fields0 = {h};
        fields1 = {0.0};
    } else {
        fields0 = spec.disorder->fields;
        fields1.assign(fields0.size(), 0.0);
    }
    const CellForm f0 = cell_form(0.0, fields0); // lambda = 0: pure field
    const CellForm f1 = cell_form(J, fields1);   // lambda = 1: pure Ising

    std::vector<MomentumBlock> blocks(static_cast<std::size_t>(n_modes));
    for (int j = 1; j <= n_modes; ++j) {
        const double q = (2.0 * j - 1.0) * std::numbers::pi / (2.0 * n_modes);
        auto& b = blocks[std::size_t(j - 1)];
        b.k = q;
        b.h0 = bdg_block(f0, q);
        b.h1 = bdg_block(f1, q);
        if (spec.name == ModelName::TFI_CLEAN) {
            // gauge-fix the 2x2 pairing entry real: c^dag_{-q} -> -i c^dag_{-q}
            const double xi1 = -2.0 * J * std::cos(q), delta1 = 2.0 * J * std::sin(q);
            b.h0 = (MatrixXcd(2, 2) << 2.0 * h, 0.0, 0.0, -2.0 * h).finished();
            b.h1 = (MatrixXcd(2, 2) << xi1, delta1, delta1, -xi1).finished();
        }
    }
    return blocks;
}

int chain_sites(const ModelSpec& spec, int n_modes) {
    const int cell = spec.name == ModelName::TFI_BLOCK_DISORDER && spec.disorder
                         ? spec.disorder->block_size
                         : 1;
    return 2 * n_modes * cell;
}

Eigen::MatrixXcd block_ground_state(const MomentumBlock& block, double lambda) {
    auto es = solve_block(block.h(lambda), "block_ground_state");
    const int half = block.n_filled();
    const double scale = std::max(std::abs(es.eigenvalues()(0)),
                                  std::abs(es.eigenvalues()(block.dim() - 1)));
    if (es.eigenvalues()(half - 1) > -1e-12 * scale || es.eigenvalues()(half) < 1e-12 * scale)
        throw NumericalError("block_ground_state: gapless block at k = " +
                             std::to_string(block.k) + ", lambda = " + std::to_string(lambda));
    return es.eigenvectors().leftCols(half);
}

double free_fermion_ground_energy(const ModelSpec& spec, double lambda, int n_modes) {
    double e = 0.0;
    for (const auto& b : build_blocks(spec, n_modes)) {
        auto es = solve_block(b.h(lambda), "free_fermion_ground_energy");
        for (int m = 0; m < b.n_filled(); ++m) e += es.eigenvalues()(m);
    }
    return e;
}

Eigen::MatrixXcd block_exact_agp(const Eigen::MatrixXcd& h, const Eigen::MatrixXcd& dh,
                                 const Filter& filter) {
    if (filter.mu <= 0.0) throw ConfigError("block_exact_agp: mu must be positive");
    auto es = solve_block(h, "block_exact_agp");
    const int d = int(h.rows());
    const MatrixXcd m = es.eigenvectors().adjoint() * dh * es.eigenvectors();
    const double scale = std::max(std::abs(es.eigenvalues()(0)),
                                  std::abs(es.eigenvalues()(d - 1)));
    MatrixXcd a = MatrixXcd::Zero(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = r + 1; c < d; ++c) {
            const double omega = es.eigenvalues()(r) - es.eigenvalues()(c);
            if (std::abs(omega) <= kDegeneracyTol * scale) continue; // gauge: no drive inside
            const double w = filter.shape == FilterShape::RATIONAL
                                 ? omega / (omega * omega + filter.mu * filter.mu)
                                 : (std::abs(omega) >= filter.mu ? 1.0 / omega : 0.0);
            a(r, c) = cd(0.0, -w) * m(r, c);
            a(c, r) = std::conj(a(r, c));
        }
    return es.eigenvectors() * a * es.eigenvectors().adjoint();
}

Eigen::MatrixXcd block_universal_agp(const Eigen::MatrixXcd& h, const Eigen::MatrixXcd& dh,
                                     std::span<const double> betas, double omega) {
    if (betas.empty()) throw ConfigError("block_universal_agp: empty coefficient list");
    if (omega <= 0.0) throw ConfigError("block_universal_agp: cutoff must be positive");
    MatrixXcd g_prev = dh;                              // T_0
    MatrixXcd g = (h * g_prev - g_prev * h) / omega;    // T_1
    MatrixXcd acc = betas[0] * g;
    for (std::size_t j = 2; j <= betas.size(); ++j) {
        for (int step = 0; step < 2; ++step) {
            MatrixXcd g_next = (2.0 / omega) * (h * g - g * h) - g_prev;
            g_prev.swap(g);
            g.swap(g_next);
        }
        acc += betas[j - 1] * g;
    }
    return cd(0.0, 1.0 / omega) * acc;
}

std::string to_string(BlockProtocol p) {
    switch (p) {
    case BlockProtocol::NONE: return "NONE";
    case BlockProtocol::UNIVERSAL: return "UNIVERSAL";
    case BlockProtocol::EXACT: return "EXACT";
    }
    throw ConfigError("unknown block protocol");
}

BlockProtocol block_protocol_from_string(const std::string& s) {
    if (s == "NONE") return BlockProtocol::NONE;
    if (s == "UNIVERSAL") return BlockProtocol::UNIVERSAL;
    if (s == "EXACT") return BlockProtocol::EXACT;
    throw ConfigError("unknown block protocol: " + s);
}

BlockResult evolve_block(const MomentumBlock& block, const Schedule& schedule,
                         const BlockDrive& drive, const OdeOptions& opt) {
    if (drive.protocol == BlockProtocol::UNIVERSAL &&
        (drive.betas.empty() || drive.omega <= 0.0))
        throw ConfigError("evolve_block: UNIVERSAL drive needs betas and a positive cutoff");

    MatrixXcd w = block_ground_state(block, 0.0);
    const MatrixXcd target = block_ground_state(block, 1.0);
    const MatrixXcd dh = block.dh();

    double last_lambda = 0.0;
    auto rhs = [&](double t, const MatrixXcd& y, MatrixXcd& dydt) {
        const auto p = schedule_eval(schedule, t);
        last_lambda = p.lambda;
        MatrixXcd hd = block.h(p.lambda);
        if (p.lambda_dot != 0.0 && drive.protocol != BlockProtocol::NONE) {
            if (drive.protocol == BlockProtocol::EXACT)
                hd += p.lambda_dot * block_exact_agp(hd, dh, drive.filter);
            else
                hd += p.lambda_dot * block_universal_agp(hd, dh, drive.betas, drive.omega);
        }
        dydt = cd(0.0, -1.0) * (hd * y);
    };

    try {
        integrate_adaptive(w, 0.0, schedule.total_time, rhs, opt, "evolve_block");
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " (k = " + std::to_string(block.k) +
                             ", lambda = " + std::to_string(last_lambda) + ")");
    }

    BlockResult out;
    out.k = block.k;
    for (int c = 0; c < w.cols(); ++c)
        out.norm_error = std::max(out.norm_error, std::abs(w.col(c).norm() - 1.0));
    const cd overlap = MatrixXcd(target.adjoint() * w).determinant();
    out.fidelity = std::min(1.0, std::norm(overlap));
    return out;
}

FidelityDensity drive_chain(const ModelSpec& spec, int n_modes, const Schedule& schedule,
                            const BlockDrive& drive, const OdeOptions& opt) {
    const auto blocks = build_blocks(spec, n_modes);
    FidelityDensity out;
    std::vector<double> logs;
    logs.reserve(blocks.size());
    for (const auto& b : blocks) {
        const auto r = evolve_block(b, schedule, drive, opt);
        out.momenta.push_back(r.k);
        out.mode_infidelity.push_back(1.0 - r.fidelity);
        logs.push_back(std::log(r.fidelity));
    }
    out.log_fidelity = pairwise_sum(logs);
    out.per_site = out.log_fidelity / chain_sites(spec, n_modes);
    return out;
}

DisorderSweep disorder_average(const ModelSpec& spec, int n_modes, const Schedule& schedule,
                               const BlockDrive& drive, int realizations,
                               std::uint64_t base_seed, const OdeOptions& opt) {
    if (spec.name != ModelName::TFI_BLOCK_DISORDER || !spec.disorder)
        throw ConfigError("disorder_average: model has no disorder to average over");
    if (realizations < 1) throw ConfigError("disorder_average: need at least one realization");

    DisorderSweep sweep;
    ModelSpec draw = spec;
    for (int r = 0; r < realizations; ++r) {
        draw.disorder->seed = base_seed + std::uint64_t(r);
        draw.disorder->fields = sample_block_fields(draw.disorder->seed,
                                                    draw.disorder->block_size,
                                                    coupling(spec, "h"));
        sweep.per_site.push_back(drive_chain(draw, n_modes, schedule, drive, opt).per_site);
    }
    sweep.mean = pairwise_sum(sweep.per_site) / realizations;
    if (realizations > 1) {
        double ss = 0.0;
        for (double x : sweep.per_site) ss += (x - sweep.mean) * (x - sweep.mean);
        sweep.std_error = std::sqrt(ss / (realizations - 1) / realizations);
    }
    return sweep;
}

} // namespace cdkit
