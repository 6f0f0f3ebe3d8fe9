#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cdkit/chebfit.hpp"
#include "cdkit/errors.hpp"
#include "cdkit/free_fermion.hpp"
#include "cdkit/models.hpp"
#include "cdkit/ode.hpp"
#include "cdkit/spectral.hpp"

using namespace cdkit;
using cd = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

double dispersion(double k, double lambda, double J = 1.0, double h = 1.0) {
    const double jt = lambda * J, ht = (1.0 - lambda) * h;
    return 2.0 * std::sqrt(jt * jt + ht * ht - 2.0 * jt * ht * std::cos(k));
}

std::vector<double> block_spectrum(const MomentumBlock& b, double lambda) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(b.h(lambda));
    return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

double ed_ground_energy(const ModelSpec& spec, double lambda) {
    Eigen::MatrixXcd hd = hamiltonian(spec, lambda).to_dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hd, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

// best per-site log fidelity over a small zeta grid at fixed ell
double best_universal_density(const ModelSpec& spec, int n_modes, int ell,
                              const Schedule& sched) {
    const double omega = omega_max(spec);
    double best = -1e300;
    for (double zeta : {0.08, 0.12, 0.18, 0.25, 0.35}) {
        BlockDrive drive;
        drive.protocol = BlockProtocol::UNIVERSAL;
        drive.betas = fit_inverse(ell, zeta).betas;
        drive.omega = omega;
        best = std::max(best, drive_chain(spec, n_modes, sched, drive).per_site);
    }
    return best;
}

} // namespace

TEST_CASE("adaptive integrator: accuracy, norm preservation, failure reporting") {
    Eigen::VectorXcd y(1);
    y << 1.0;
    auto decay = [](double, const Eigen::VectorXcd& v, Eigen::VectorXcd& d) { d = -v; };
    integrate_adaptive(y, 0.0, 1.0, decay);
    CHECK(std::abs(y(0) - std::exp(-1.0)) <= 1e-9);

    Eigen::VectorXcd z(2);
    z << cd(1.0, 0.0), cd(0.0, 1.0);
    z /= z.norm();
    auto rot = [](double t, const Eigen::VectorXcd& v, Eigen::VectorXcd& d) {
        d(0) = cd(0.0, -2.0) * v(0) + cd(0.0, -0.3) * std::cos(t) * v(1);
        d(1) = cd(0.0, -0.3) * std::cos(t) * v(0) + cd(0.0, 2.0) * v(1);
    };
    integrate_adaptive(z, 0.0, 5.0, rot);
    CHECK(std::abs(z.norm() - 1.0) <= 1e-9);

    Eigen::VectorXcd w(1);
    w << 1.0;
    OdeOptions starved;
    starved.max_steps = 3;
    CHECK_THROWS_AS(integrate_adaptive(w, 0.0, 100.0, decay, starved), NumericalError);
    CHECK_THROWS_AS(integrate_adaptive(w, 1.0, 0.0, decay), ConfigError);
}

TEST_CASE("fixed-step integrator: fourth-order convergence and bit reproducibility") {
    auto rhs = [](double t, const Eigen::VectorXcd& v, Eigen::VectorXcd& d) {
        d(0) = cd(0.0, -1.0) * (2.0 + std::sin(t)) * v(0);
    };
    // exact phase: integral of 2 + sin(t) from 0 to 2
    const double phase = 4.0 + 1.0 - std::cos(2.0);
    auto err_with = [&](long n) {
        Eigen::VectorXcd y(1);
        y << 1.0;
        integrate_fixed_rk4(y, 0.0, 2.0, n, rhs);
        return std::abs(y(0) - std::exp(cd(0.0, -phase)));
    };
    const double e40 = err_with(40), e80 = err_with(80);
    CHECK(e80 < e40);
    CHECK(e40 / e80 > 12.0); // h^4 scaling gives 16
    CHECK(e40 / e80 < 20.0);

    Eigen::VectorXcd a(1), b(1);
    a << cd(0.7, 0.1);
    b << cd(0.7, 0.1);
    integrate_fixed_rk4(a, 0.0, 2.0, 173, rhs);
    integrate_fixed_rk4(b, 0.0, 2.0, 173, rhs);
    CHECK(a(0).real() == b(0).real());
    CHECK(a(0).imag() == b(0).imag());
}

TEST_CASE("clean blocks carry the exact dispersion at both endpoints and between") {
    auto spec = tfi_clean(8);
    auto blocks = build_blocks(spec, 4);
    REQUIRE(blocks.size() == 4);
    CHECK(chain_sites(spec, 4) == 8);

    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(std::abs(blocks[j].k - (2.0 * double(j) + 1.0) * kPi / 8.0) <= 1e-15);
        CHECK(blocks[j].dim() == 2);
        // pure-field and pure-Ising limits: epsilon = 2h and 2J for every k
        auto e0 = block_spectrum(blocks[j], 0.0);
        auto e1 = block_spectrum(blocks[j], 1.0);
        CHECK(std::abs(e0[1] - 2.0) <= 1e-13);
        CHECK(std::abs(e1[1] - 2.0) <= 1e-13);
        for (double lambda : {0.2, 0.37, 0.8}) {
            auto e = block_spectrum(blocks[j], lambda);
            CHECK(std::abs(e[0] + dispersion(blocks[j].k, lambda)) <= 1e-13);
            CHECK(std::abs(e[1] - dispersion(blocks[j].k, lambda)) <= 1e-13);
        }
        // pairing entry is real in the fixed gauge
        CHECK(std::abs(std::imag(blocks[j].h1(0, 1))) == 0.0);
    }

    // single-excitation pair energy never exceeds the hard cutoff
    double worst = 0.0;
    for (const auto& b : blocks)
        for (double lambda : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0})
            worst = std::max(worst, 2.0 * std::abs(block_spectrum(b, lambda)[1]));
    CHECK(worst <= omega_max(tfi_clean(8)) + 1e-12);

    // self-duality at J = h: the spectrum at lambda and 1 - lambda coincide,
    // and k -> pi - k (a field sign flip, the grid maps onto itself) keeps
    // epsilon(k)^2 + epsilon(pi - k)^2 constant across the grid
    for (const auto& b : blocks) {
        CHECK(std::abs(dispersion(b.k, 0.3) - dispersion(b.k, 0.7)) <= 1e-13);
        const double lam = 0.3, jt = lam, ht = 1.0 - lam;
        const double s = dispersion(b.k, lam) * dispersion(b.k, lam) +
                         dispersion(kPi - b.k, lam) * dispersion(kPi - b.k, lam);
        CHECK(std::abs(s - 8.0 * (jt * jt + ht * ht)) <= 1e-12);
    }
}

TEST_CASE("block construction rejections") {
    CHECK_THROWS_AS((void)build_blocks(nnn_tfi(8), 4), ConfigError);
    CHECK_THROWS_AS((void)build_blocks(xxz_anneal(8), 4), ConfigError);
    CHECK_THROWS_AS((void)build_blocks(tfi_clean(8, 1.0, 1.0, Boundary::OPEN), 4), ConfigError);
    CHECK_THROWS_AS((void)build_blocks(tfi_clean(8), 0), ConfigError);

    BlockDrive empty_universal;
    empty_universal.protocol = BlockProtocol::UNIVERSAL;
    auto blocks = build_blocks(tfi_clean(8), 1);
    CHECK_THROWS_AS((void)evolve_block(blocks[0], Schedule{}, empty_universal), ConfigError);

    CHECK(block_protocol_from_string("EXACT") == BlockProtocol::EXACT);
    CHECK(to_string(BlockProtocol::UNIVERSAL) == "UNIVERSAL");
    CHECK_THROWS_AS((void)block_protocol_from_string("FULL"), ConfigError);
}

TEST_CASE("momentum-space ground energy matches exact diagonalization") {
    // clean chain, N = 8
    for (double lambda : {0.3, 0.5}) {
        const double ff = free_fermion_ground_energy(tfi_clean(8), lambda, 4);
        CHECK(std::abs(ff - ed_ground_energy(tfi_clean(8), lambda)) <= 1e-10);
    }

    // block-modulated chain, N = 8 with one 8x8 Bogoliubov block at q = pi/2:
    // locks the super-cell assembly and the Bloch phase conventions
    auto dis = tfi_block_disorder(8, 7);
    for (double lambda : {0.0, 0.4, 1.0}) {
        const double ff = free_fermion_ground_energy(dis, lambda, 1);
        CHECK(std::abs(ff - ed_ground_energy(dis, lambda)) <= 1e-10);
    }
}

TEST_CASE("uniform-field super-cell reduces to the clean chain") {
    auto uniform = tfi_block_disorder(16, 1);
    uniform.disorder->fields = {1.0, 1.0, 1.0, 1.0};
    auto clean = tfi_clean(16);

    CHECK(chain_sites(uniform, 2) == 16);
    CHECK(chain_sites(clean, 8) == 16);

    // the q = pi/4 super-cell block folds four clean momenta
    auto big = build_blocks(uniform, 2);
    auto small = build_blocks(clean, 8);
    for (double lambda : {0.25, 0.6}) {
        std::vector<double> folded;
        for (const auto& b : big)
            for (double e : block_spectrum(b, lambda)) folded.push_back(e);
        std::vector<double> direct;
        for (const auto& b : small)
            for (double e : block_spectrum(b, lambda)) direct.push_back(e);
        std::sort(folded.begin(), folded.end());
        std::sort(direct.begin(), direct.end());
        REQUIRE(folded.size() == direct.size());
        for (std::size_t i = 0; i < folded.size(); ++i)
            CHECK(std::abs(folded[i] - direct[i]) <= 1e-12);

        CHECK(std::abs(free_fermion_ground_energy(uniform, lambda, 2) -
                       free_fermion_ground_energy(clean, lambda, 8)) <= 1e-12);
    }

    // the drive machinery agrees between the 2x2 and 8x8 representations
    Schedule sched;
    sched.total_time = 0.5;
    BlockDrive none;
    const auto d_big = drive_chain(uniform, 2, sched, none);
    const auto d_small = drive_chain(clean, 8, sched, none);
    CHECK(std::abs(d_big.per_site - d_small.per_site) <= 1e-9);

    BlockDrive uni;
    uni.protocol = BlockProtocol::UNIVERSAL;
    uni.betas = fit_inverse(8, 0.25).betas;
    uni.omega = omega_max(clean);
    const auto u_big = drive_chain(uniform, 2, sched, uni);
    const auto u_small = drive_chain(clean, 8, sched, uni);
    CHECK(std::abs(u_big.per_site - u_small.per_site) <= 1e-9);
}

TEST_CASE("thermodynamic-limit energy density agrees with finite-size extrapolation") {
    const double lambda = 0.5;
    const double e_inf =
        free_fermion_ground_energy(tfi_clean(8), lambda, 4096) / chain_sites(tfi_clean(8), 4096);

    // quadratic fit of E/N in 1/N^2 through N = 8, 10, 12
    std::vector<double> xs, ys;
    for (int n : {8, 10, 12}) {
        xs.push_back(1.0 / double(n * n));
        ys.push_back(ed_ground_energy(tfi_clean(n), lambda) / n);
    }
    Eigen::Matrix3d vand;
    Eigen::Vector3d rhs;
    for (int i = 0; i < 3; ++i) {
        vand(i, 0) = 1.0;
        vand(i, 1) = xs[std::size_t(i)];
        vand(i, 2) = xs[std::size_t(i)] * xs[std::size_t(i)];
        rhs(i) = ys[std::size_t(i)];
    }
    const double extrapolated = vand.fullPivLu().solve(rhs)(0);
    CHECK(std::abs(extrapolated - e_inf) <= 1e-3);
}

TEST_CASE("block gauge potential: closed form and dense cross-check") {
    // 2x2 family xi sigma^z + Delta sigma^x rotates at dtheta/dlambda; the
    // exact drive is (dtheta/dlambda / 2) sigma^y
    auto spec = tfi_clean(8);
    auto blocks = build_blocks(spec, 4);
    const auto& b = blocks[2];
    const double lambda = 0.4;
    const double xi = 2.0 * ((1.0 - lambda) - lambda * std::cos(b.k));
    const double delta = 2.0 * lambda * std::sin(b.k);
    const double dxi = 2.0 * (-1.0 - std::cos(b.k));
    const double ddelta = 2.0 * std::sin(b.k);
    const double dtheta = (xi * ddelta - delta * dxi) / (xi * xi + delta * delta);

    auto a = block_exact_agp(b.h(lambda), b.dh(), Filter{FilterShape::RATIONAL, 1e-10});
    Eigen::MatrixXcd sy(2, 2);
    sy << 0.0, cd(0.0, -1.0), cd(0.0, 1.0), 0.0;
    CHECK((a - 0.5 * dtheta * sy).cwiseAbs().maxCoeff() <= 1e-8);

    // generic dense block agrees with the eigenbasis construction, both filters
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd h6(6, 6), dh6(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            h6(i, j) = gauss(rng);
            dh6(i, j) = gauss(rng);
        }
    h6 = (0.5 * (h6 + h6.transpose())).eval();
    dh6 = (0.5 * (dh6 + dh6.transpose())).eval();
    auto sd = diagonalize_dense(h6, dh6);
    Eigen::MatrixXcd v = sd.eigenvectors.cast<cd>();
    for (Filter f : {Filter{FilterShape::RATIONAL, 0.3}, Filter{FilterShape::STEP, 1.0}}) {
        Eigen::MatrixXcd lab = v * exact_agp(sd, f) * v.adjoint();
        Eigen::MatrixXcd blk = block_exact_agp(h6.cast<cd>(), dh6.cast<cd>(), f);
        CHECK((lab - blk).cwiseAbs().maxCoeff() <= 1e-10);
    }

    CHECK_THROWS_AS(
        (void)block_exact_agp(b.h0, b.dh(), Filter{FilterShape::RATIONAL, 0.0}), ConfigError);
}

TEST_CASE("window drive on a block is the Chebyshev series of the Liouvillian") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXcd h(4, 4), dh(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            h(i, j) = cd(gauss(rng), gauss(rng));
            dh(i, j) = cd(gauss(rng), gauss(rng));
        }
    h = (0.5 * (h + h.adjoint())).eval();
    dh = (0.5 * (dh + dh.adjoint())).eval();

    const std::vector<double> betas = {0.7, -0.3, 0.11, -0.05, 0.02};
    const double omega = 9.0;
    auto a = block_universal_agp(h, dh, betas, omega);
    CHECK((a - a.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Eigen::MatrixXcd am = es.eigenvectors().adjoint() * a * es.eigenvectors();
    Eigen::MatrixXcd mm = es.eigenvectors().adjoint() * dh * es.eigenvectors();
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) {
            const double w = es.eigenvalues()(m) - es.eigenvalues()(n);
            const cd expect = cd(0.0, eval_beta_series(betas, w / omega) / omega) * mm(m, n);
            CHECK(std::abs(am(m, n) - expect) <= 1e-12);
        }

    CHECK_THROWS_AS((void)block_universal_agp(h, dh, std::vector<double>{}, 1.0), ConfigError);
    CHECK_THROWS_AS((void)block_universal_agp(h, dh, betas, 0.0), ConfigError);
}

TEST_CASE("transitionless block drive keeps unit fidelity at a violent ramp") {
    Schedule sched;
    sched.total_time = 0.01;
    BlockDrive exact;
    exact.protocol = BlockProtocol::EXACT;
    for (const auto& b : build_blocks(tfi_clean(8), 4)) {
        auto r = evolve_block(b, sched, exact);
        CHECK(r.fidelity >= 1.0 - 1e-8);
        CHECK(r.norm_error <= 1e-9);
    }
}

TEST_CASE("bare evolution is adiabatic for slow ramps and imperfect for fast ones") {
    BlockDrive none;
    Schedule slow;
    slow.total_time = 200.0;
    OdeOptions tight; // long runs accumulate local error linearly in step count
    tight.abs_tol = tight.rel_tol = 1e-12;
    for (const auto& b : build_blocks(tfi_clean(8), 4)) {
        auto r = evolve_block(b, slow, none, tight);
        CHECK(r.fidelity >= 0.999);
        CHECK(r.norm_error <= 1e-9);
    }

    Schedule fast;
    fast.total_time = 0.1;
    const auto d = drive_chain(tfi_clean(8), 4, fast, none);
    CHECK(d.log_fidelity < -0.01);
    CHECK(d.per_site == d.log_fidelity / 8);
    REQUIRE(d.momenta.size() == 4);
    REQUIRE(d.mode_infidelity.size() == 4);
    for (double inf : d.mode_infidelity) {
        CHECK(inf > 0.0);
        CHECK(inf < 1.0);
    }
}

TEST_CASE("window drive converges to the transitionless one inside the window") {
    auto spec = tfi_clean(8);
    auto blocks = build_blocks(spec, 4);
    const double omega = omega_max(spec);

    // smallest pair frequency this block family visits along the path
    double omega_min = 1e300;
    for (const auto& b : blocks)
        for (int g = 0; g <= 40; ++g)
            omega_min = std::min(omega_min, 2.0 * dispersion(b.k, g / 40.0));

    Schedule sched; // default T = 0.1
    BlockDrive uni;
    uni.protocol = BlockProtocol::UNIVERSAL;
    uni.omega = omega;
    uni.betas = fit_inverse(32, 0.9 * omega_min / omega).betas;
    BlockDrive exact;
    exact.protocol = BlockProtocol::EXACT;

    for (const auto& b : blocks) {
        const double fu = evolve_block(b, sched, uni).fidelity;
        const double fe = evolve_block(b, sched, exact).fidelity;
        CHECK(std::abs(fu - fe) <= 1e-6);
    }
}

TEST_CASE("longer window series improve the clean fidelity density") {
    Schedule sched;
    auto spec = tfi_clean(8);
    const int n_modes = 50; // a 100-site chain
    const double d4 = best_universal_density(spec, n_modes, 4, sched);
    const double d16 = best_universal_density(spec, n_modes, 16, sched);
    CHECK(d4 < 0.0);
    CHECK(d16 < 0.0);
    CHECK(std::abs(d16) < std::abs(d4));
}

TEST_CASE("longer window series improve the block-disordered density too") {
    Schedule sched;
    auto spec = tfi_block_disorder(24, 3);
    const double d4 = best_universal_density(spec, 3, 4, sched);
    const double d16 = best_universal_density(spec, 3, 16, sched);
    CHECK(std::abs(d16) < std::abs(d4));
}

TEST_CASE("unevolved state scores unit fidelity") {
    auto blocks = build_blocks(tfi_block_disorder(8, 2), 1);
    auto w = block_ground_state(blocks[0], 0.0);
    CHECK(w.cols() == 4);
    CHECK((w.adjoint() * w - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);
    const cd det = Eigen::MatrixXcd(w.adjoint() * w).determinant();
    CHECK(std::abs(std::norm(det) - 1.0) <= 1e-12);
}

TEST_CASE("disorder averaging is deterministic and seed-sensitive") {
    auto spec = tfi_block_disorder(8, 99);
    Schedule sched;
    BlockDrive none;
    auto s1 = disorder_average(spec, 1, sched, none, 3, 42);
    auto s2 = disorder_average(spec, 1, sched, none, 3, 42);
    REQUIRE(s1.per_site.size() == 3);
    CHECK(s1.mean == s2.mean);
    CHECK(s1.std_error == s2.std_error);
    CHECK(s1.std_error >= 0.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(s1.per_site[i] == s2.per_site[i]);

    auto s3 = disorder_average(spec, 1, sched, none, 3, 1234);
    CHECK(s3.mean != s1.mean);

    CHECK_THROWS_AS((void)disorder_average(tfi_clean(8), 4, sched, none, 3), ConfigError);
    CHECK_THROWS_AS((void)disorder_average(spec, 1, sched, none, 0), ConfigError);
}
