#include "cdkit/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iostream>

#include "cdkit/chebfit.hpp"
#include "cdkit/errors.hpp"

namespace cdkit {

namespace {

// Phase gauge: largest-magnitude component positive (first index on ties).
void fix_phases(Eigen::MatrixXd& v) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        Eigen::Index imax = 0;
        v.col(j).cwiseAbs().maxCoeff(&imax);
        if (v(imax, j) < 0.0) v.col(j) = -v.col(j);
    }
}

Eigen::VectorXd ensemble_weights(Ensemble ensemble, int dim) {
    Eigen::VectorXd rho = Eigen::VectorXd::Zero(dim);
    if (ensemble == Ensemble::GROUND)
        rho(0) = 1.0;
    else
        rho.setConstant(1.0 / double(dim));
    return rho;
}

Eigen::MatrixXd require_real_symmetric(const Eigen::MatrixXcd& m, const char* what) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (m.imag().cwiseAbs().maxCoeff() > 1e-13 * scale)
        throw NumericalError(std::string(what) +
                             ": real-symmetric backend got a complex-valued matrix");
    Eigen::MatrixXd r = m.real();
    if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw NumericalError(std::string(what) + ": matrix is not symmetric");
    return 0.5 * (r + r.transpose());
}

double gaussian_cdf(double t) { return 0.5 * (1.0 + std::erf(t * 0.70710678118654752440)); }

} // namespace

double filter_g(const Filter& f, double omega) {
    if (!(f.mu > 0.0)) throw ConfigError("filter cutoff mu must be > 0");
    const double x = omega / f.mu;
    if (f.shape == FilterShape::RATIONAL) return x * x / (1.0 + x * x);
    return std::abs(x) >= 1.0 ? 1.0 : 0.0;
}

std::vector<std::uint64_t> magnetization_basis(int n_sites, int m) {
    if (n_sites < 1 || n_sites > PauliString::kMaxSites)
        throw ConfigError("magnetization_basis: bad n_sites");
    if (std::abs(m) > n_sites || (m + n_sites) % 2 != 0)
        throw ConfigError("magnetization_basis: unreachable magnetization");
    const int n_up = (m + n_sites) / 2;
    std::vector<std::uint64_t> out;
    const std::uint64_t end = (n_sites == 64) ? 0 : (std::uint64_t(1) << n_sites);
    for (std::uint64_t b = 0;; ++b) {
        if (std::popcount(b) == n_up) out.push_back(b);
        if (b + 1 == end) break;
    }
    return out;
}

SpectralData diagonalize_dense(const Eigen::MatrixXd& h, const Eigen::MatrixXd& dh,
                               Ensemble ensemble) {
    if (h.rows() != h.cols() || dh.rows() != dh.cols() || h.rows() != dh.rows())
        throw ConfigError("diagonalize_dense: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");

    SpectralData sd;
    sd.energies = es.eigenvalues();
    sd.eigenvectors = es.eigenvectors();
    fix_phases(sd.eigenvectors);
    sd.matrix_elements = sd.eigenvectors.transpose() * dh * sd.eigenvectors;
    sd.matrix_elements = 0.5 * (sd.matrix_elements + sd.matrix_elements.transpose()).eval();
    sd.rho = ensemble_weights(ensemble, sd.dim());
    return sd;
}

SpectralData diagonalize(const PauliOperator& h, const PauliOperator& dh, Ensemble ensemble,
                         const std::vector<std::uint64_t>& basis) {
    Eigen::MatrixXd hd, dhd;
    if (basis.empty()) {
        hd = require_real_symmetric(h.to_dense(), "diagonalize(H)");
        dhd = require_real_symmetric(dh.to_dense(), "diagonalize(dH)");
    } else {
        hd = require_real_symmetric(to_dense_in_basis(h, basis), "diagonalize(H)");
        dhd = require_real_symmetric(to_dense_in_basis(dh, basis), "diagonalize(dH)");
    }
    SpectralData sd = diagonalize_dense(hd, dhd, ensemble);
    sd.basis = basis;
    return sd;
}

SpectralData diagonalize(const ModelSpec& spec, double lambda, Ensemble ensemble) {
    std::vector<std::uint64_t> basis;
    if (spec.magnetization) basis = magnetization_basis(spec.n_sites, *spec.magnetization);
    SpectralData sd = diagonalize(hamiltonian(spec, lambda), dlambda_h(spec), ensemble, basis);
    sd.lambda = lambda;
    return sd;
}

Eigen::MatrixXcd exact_agp(const SpectralData& sd, const Filter& filter) {
    if (!(filter.mu > 0.0)) throw ConfigError("exact_agp: filter cutoff mu must be > 0");
    const int d = sd.dim();
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(d, d);
    int degenerate_hits = 0;
    for (int m = 0; m < d; ++m)
        for (int n = m + 1; n < d; ++n) {
            const double omega = sd.energies(m) - sd.energies(n);
            const double mel = sd.matrix_elements(m, n);
            if (std::abs(omega) < 1e-12 && std::abs(mel) > 1e-12) ++degenerate_hits;
            double w = 0.0;
            if (filter.shape == FilterShape::RATIONAL)
                w = omega / (omega * omega + filter.mu * filter.mu);
            else if (std::abs(omega) >= filter.mu)
                w = 1.0 / omega;
            a(m, n) = cplx(0.0, -w * mel);
            a(n, m) = cplx(0.0, w * mel);
        }
    if (degenerate_hits > 0)
        std::cerr << "exact_agp: " << degenerate_hits
                  << " degenerate pair(s) with nonzero matrix element; regularized by mu="
                  << filter.mu << "\n";
    return a;
}

double fidelity_susceptibility(const SpectralData& sd, const Filter& filter) {
    if (!(filter.mu > 0.0))
        throw ConfigError("fidelity_susceptibility: filter cutoff mu must be > 0");
    const int d = sd.dim();
    double chi = 0.0;
    for (int n = 0; n < d; ++n) {
        if (sd.rho(n) == 0.0) continue;
        for (int m = 0; m < d; ++m) {
            if (m == n) continue;
            const double omega = sd.energies(m) - sd.energies(n);
            const double w2 = sd.matrix_elements(m, n) * sd.matrix_elements(m, n);
            if (filter.shape == FilterShape::RATIONAL) {
                const double den = omega * omega + filter.mu * filter.mu;
                chi += sd.rho(n) * w2 * omega * omega / (den * den);
            } else if (std::abs(omega) >= filter.mu) {
                chi += sd.rho(n) * w2 / (omega * omega);
            }
        }
    }
    return chi;
}

std::vector<std::pair<double, double>> spectral_deltas(const SpectralData& sd) {
    const int d = sd.dim();
    std::vector<std::pair<double, double>> out;
    out.reserve(std::size_t(d) * std::size_t(d));
    for (int n = 0; n < d; ++n) {
        if (sd.rho(n) == 0.0) continue;
        for (int m = 0; m < d; ++m) {
            const double mel = sd.matrix_elements(m, n);
            out.emplace_back(sd.energies(m) - sd.energies(n), sd.rho(n) * mel * mel);
        }
    }
    return out;
}

SpectralHistogram spectral_function(const SpectralData& sd, const BinningSpec& bins) {
    if (bins.n_bins < 1) throw ConfigError("spectral_function: n_bins must be >= 1");
    const auto deltas = spectral_deltas(sd);

    double lo, hi;
    if (bins.range) {
        lo = bins.range->first;
        hi = bins.range->second;
        if (!(lo < hi)) throw ConfigError("spectral_function: range must satisfy lo < hi");
    } else {
        lo = deltas.front().first;
        hi = lo;
        for (const auto& [omega, w] : deltas) {
            lo = std::min(lo, omega);
            hi = std::max(hi, omega);
        }
        // pad so kernel tails stay inside the window (8 sigma < 1e-15 leakage)
        double pad = std::max(hi - lo, 1.0) / double(bins.n_bins) * 8.0;
        if (bins.kind == BinKind::HARD) pad = std::max(hi - lo, 1.0) * 1e-9;
        lo -= pad;
        hi += pad;
    }

    SpectralHistogram h;
    h.bin_width = (hi - lo) / double(bins.n_bins);
    h.centers.resize(std::size_t(bins.n_bins));
    for (int j = 0; j < bins.n_bins; ++j) h.centers[std::size_t(j)] = lo + (j + 0.5) * h.bin_width;

    std::vector<double> mass(std::size_t(bins.n_bins), 0.0);
    const double sigma = h.bin_width;
    for (const auto& [omega, w] : deltas) {
        if (w == 0.0) continue;
        h.total_weight += w;
        if (bins.kind == BinKind::HARD) {
            // fold out-of-range deltas into the edge bins
            int j = int(std::floor((omega - lo) / h.bin_width));
            j = std::clamp(j, 0, bins.n_bins - 1);
            mass[std::size_t(j)] += w;
            continue;
        }
        // kernel support is effectively [omega - 9 sigma, omega + 9 sigma]
        int j0 = std::clamp(int(std::floor((omega - 9.0 * sigma - lo) / h.bin_width)), 0,
                            bins.n_bins - 1);
        int j1 = std::clamp(int(std::floor((omega + 9.0 * sigma - lo) / h.bin_width)), 0,
                            bins.n_bins - 1);
        // mass below the window's first edge and above its last edge folds inward,
        // so each delta contributes exactly w in total
        mass[std::size_t(j0)] += w * gaussian_cdf((lo + j0 * h.bin_width - omega) / sigma);
        mass[std::size_t(j1)] +=
            w * (1.0 - gaussian_cdf((lo + (j1 + 1) * h.bin_width - omega) / sigma));
        for (int j = j0; j <= j1; ++j) {
            const double cl = gaussian_cdf((lo + j * h.bin_width - omega) / sigma);
            const double cr = gaussian_cdf((lo + (j + 1) * h.bin_width - omega) / sigma);
            mass[std::size_t(j)] += w * (cr - cl);
        }
    }

    h.density.resize(std::size_t(bins.n_bins));
    for (int j = 0; j < bins.n_bins; ++j) h.density[std::size_t(j)] = mass[std::size_t(j)] / h.bin_width;
    return h;
}

KrylovMoments krylov_moments(const SpectralData& sd, int ell) {
    if (ell < 1) throw ConfigError("krylov_moments: ell must be >= 1");
    const int d = sd.dim();

    KrylovMoments km;
    km.ell = ell;
    km.gram2 = Eigen::MatrixXd::Zero(ell, ell);
    km.gram0 = Eigen::MatrixXd::Zero(ell, ell);
    km.rhs = Eigen::VectorXd::Zero(ell);

    for (int n = 0; n < d; ++n) {
        if (sd.rho(n) == 0.0) continue;
        for (int m = 0; m < d; ++m) {
            const double mel = sd.matrix_elements(m, n);
            if (mel == 0.0) continue;
            const double omega = sd.energies(m) - sd.energies(n);
            km.weight_total += sd.rho(n) * mel * mel;
            km.omega_scale = std::max(km.omega_scale, std::abs(omega));
        }
    }
    if (km.omega_scale == 0.0) return km; // dH commutes with H: nothing to fit

    std::vector<double> t(std::size_t(2 * ell), 0.0); // T_1 .. T_{2 ell - 1} at x
    for (int n = 0; n < d; ++n) {
        if (sd.rho(n) == 0.0) continue;
        for (int m = 0; m < d; ++m) {
            const double mel = sd.matrix_elements(m, n);
            if (mel == 0.0) continue;
            const double w = sd.rho(n) * mel * mel;
            const double omega = sd.energies(m) - sd.energies(n);
            const double x = omega / km.omega_scale;
            double tp = 1.0, tc = x;
            t[0] = x;
            for (int k = 2; k <= 2 * ell - 1; ++k) {
                const double tn = 2.0 * x * tc - tp;
                tp = tc;
                tc = tn;
                t[std::size_t(k - 1)] = tc;
            }
            for (int j = 1; j <= ell; ++j) {
                const double tj = t[std::size_t(2 * j - 2)];
                km.rhs(j - 1) -= w * omega * tj;
                for (int k = j; k <= ell; ++k) {
                    const double tk = t[std::size_t(2 * k - 2)];
                    km.gram2(j - 1, k - 1) += w * omega * omega * tj * tk;
                    km.gram0(j - 1, k - 1) += w * tj * tk;
                }
            }
        }
    }
    for (int j = 1; j < ell; ++j)
        for (int k = 0; k < j; ++k) {
            km.gram2(j, k) = km.gram2(k, j);
            km.gram0(j, k) = km.gram0(k, j);
        }
    return km;
}

VariationalAgp solve_krylov(const KrylovMoments& km, double mu) {
    if (mu < 0.0) throw ConfigError("solve_krylov: mu must be >= 0");
    VariationalAgp out;
    out.alphas.assign(std::size_t(km.ell), 0.0);
    if (km.omega_scale == 0.0) {
        out.action = km.weight_total;
        return out;
    }

    Eigen::MatrixXd gram = km.gram2 + mu * mu * km.gram0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success) throw NumericalError("solve_krylov: Gram eigensolver failed");
    const double emax = es.eigenvalues().maxCoeff();
    if (!(emax > 0.0)) {
        out.action = km.weight_total;
        return out;
    }

    // pseudo-inverse on the numerically nonsingular eigenspace; rank deficiency
    // means the Krylov span is saturated at fewer than ell directions
    Eigen::VectorXd gamma = Eigen::VectorXd::Zero(km.ell);
    int rank = 0;
    for (int i = 0; i < km.ell; ++i) {
        if (es.eigenvalues()(i) <= emax * 1e-12) continue;
        ++rank;
        const Eigen::VectorXd u = es.eigenvectors().col(i);
        gamma += u * (u.dot(km.rhs) / es.eigenvalues()(i));
    }
    out.effective_ell = rank;
    out.action = km.weight_total - 2.0 * km.rhs.dot(gamma) + gamma.dot(gram * gamma);

    // Chebyshev solution back to monomials in the physical frequency
    std::vector<double> gvec(gamma.data(), gamma.data() + km.ell);
    std::vector<double> tilde = cheb_to_monomial(gvec);
    double scale = km.omega_scale;
    for (int k = 0; k < km.ell; ++k) {
        out.alphas[std::size_t(k)] = tilde[std::size_t(k)] / scale;
        scale *= km.omega_scale * km.omega_scale;
    }
    return out;
}

VariationalAgp variational_krylov_agp(const SpectralData& sd, int ell, double mu) {
    return solve_krylov(krylov_moments(sd, ell), mu);
}

VariationalAgp variational_krylov_agp(const ModelSpec& spec, double lambda, int ell, double mu,
                                      Ensemble ensemble) {
    return variational_krylov_agp(diagonalize(spec, lambda, ensemble), ell, mu);
}

} // namespace cdkit
