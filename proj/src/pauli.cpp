#include "cdkit/pauli.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>

namespace cdkit {

namespace {

void check_site(int site) {
    if (site < 0 || site >= PauliString::kMaxSites)
        throw ConfigError("pauli: site index " + std::to_string(site) +
                          " outside [0, " + std::to_string(PauliString::kMaxSites) + ")");
}

std::uint64_t splitmix64(std::uint64_t v) {
    v += 0x9e3779b97f4a7c15ULL;
    v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
    v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
    return v ^ (v >> 31);
}

// i^e for e in {0,1,2,3}, exact.
cplx unit_phase(unsigned e) {
    switch (e & 3u) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}

void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

} // namespace

char axis_letter(Axis a) {
    switch (a) {
        case Axis::X: return 'X';
        case Axis::Y: return 'Y';
        default: return 'Z';
    }
}

PauliString PauliString::single(int site, Axis a) {
    check_site(site);
    PauliString s;
    std::uint64_t bit = 1ULL << site;
    if (a == Axis::X || a == Axis::Y) s.x |= bit;
    if (a == Axis::Z || a == Axis::Y) s.z |= bit;
    return s;
}

PauliString PauliString::from_sites(std::span<const std::pair<int, Axis>> sites) {
    PauliString s;
    int prev = -1;
    for (const auto& [site, axis] : sites) {
        check_site(site);
        if (site <= prev)
            throw ConfigError("pauli: site list must be strictly increasing");
        prev = site;
        std::uint64_t bit = 1ULL << site;
        if (axis == Axis::X || axis == Axis::Y) s.x |= bit;
        if (axis == Axis::Z || axis == Axis::Y) s.z |= bit;
    }
    return s;
}

int PauliString::support() const { return std::popcount(x | z); }

int PauliString::max_site() const {
    std::uint64_t m = x | z;
    return m == 0 ? -1 : 63 - std::countl_zero(m);
}

Axis PauliString::axis_at(int site) const {
    std::uint64_t bit = 1ULL << site;
    bool bx = x & bit, bz = z & bit;
    if (bx && bz) return Axis::Y;
    return bx ? Axis::X : Axis::Z;
}

std::vector<std::pair<int, Axis>> PauliString::sites() const {
    std::vector<std::pair<int, Axis>> out;
    std::uint64_t m = x | z;
    while (m) {
        int site = std::countr_zero(m);
        m &= m - 1;
        out.emplace_back(site, axis_at(site));
    }
    return out;
}

std::size_t PauliStringHash::operator()(const PauliString& s) const noexcept {
    return splitmix64(s.x ^ splitmix64(s.z));
}

// Per-site products P(xa,za) * P(xb,zb) accumulate a power of i:
//   e = xa.za + xb.zb + 2 za.xb - (xa^xb).(za^zb)   (mod 4)
// from writing each factor as i^{xz} X^x Z^z and commuting Z past X.
PauliProduct multiply(const PauliString& a, const PauliString& b) {
    PauliString out{a.x ^ b.x, a.z ^ b.z};
    unsigned e = std::popcount(a.x & a.z) + std::popcount(b.x & b.z) +
                 2u * std::popcount(a.z & b.x) + 3u * std::popcount(out.x & out.z);
    return {out, unit_phase(e)};
}

bool anticommutes(const PauliString& a, const PauliString& b) {
    return ((std::popcount(a.x & b.z) ^ std::popcount(a.z & b.x)) & 1) != 0;
}

PauliOperator::PauliOperator(int n_sites) : n_sites_(n_sites) {
    if (n_sites < 1 || n_sites > PauliString::kMaxSites)
        throw ConfigError("pauli: n_sites must be in [1, 64], got " + std::to_string(n_sites));
}

PauliOperator PauliOperator::term(int n_sites, const PauliString& s, cplx w) {
    PauliOperator op(n_sites);
    op.add_term(s, w);
    return op;
}

PauliOperator PauliOperator::single(int n_sites, int site, Axis a, cplx w) {
    return term(n_sites, PauliString::single(site, a), w);
}

cplx PauliOperator::weight(const PauliString& s) const {
    auto it = terms_.find(s);
    return it == terms_.end() ? cplx{0.0, 0.0} : it->second;
}

void PauliOperator::add_term(const PauliString& s, cplx w) {
    if (s.max_site() >= n_sites_)
        throw ConfigError("pauli: string touches site " + std::to_string(s.max_site()) +
                          " beyond n_sites=" + std::to_string(n_sites_));
    auto [it, inserted] = terms_.try_emplace(s, w);
    if (!inserted) it->second += w;
    if (std::abs(it->second) <= kWeightDropTol) terms_.erase(it);
}

PauliOperator& PauliOperator::operator+=(const PauliOperator& rhs) {
    if (rhs.n_sites_ != n_sites_)
        throw ConfigError("pauli: size mismatch in operator sum");
    for (const auto& [s, w] : rhs.terms_) add_term(s, w);
    return *this;
}

PauliOperator& PauliOperator::operator-=(const PauliOperator& rhs) {
    if (rhs.n_sites_ != n_sites_)
        throw ConfigError("pauli: size mismatch in operator difference");
    for (const auto& [s, w] : rhs.terms_) add_term(s, -w);
    return *this;
}

PauliOperator& PauliOperator::operator*=(cplx c) {
    for (auto& [s, w] : terms_) w *= c;
    compress();
    return *this;
}

PauliOperator PauliOperator::dagger() const {
    PauliOperator out(n_sites_);
    out.terms_.reserve(terms_.size());
    for (const auto& [s, w] : terms_) out.terms_.emplace(s, std::conj(w));
    return out;
}

bool PauliOperator::is_hermitian(double tol) const {
    // Strings are Hermitian, so Hermiticity is realness of every weight.
    for (const auto& [s, w] : terms_)
        if (std::abs(w.imag()) > tol) return false;
    return true;
}

PauliOperator PauliOperator::truncated_support(int p) const {
    PauliOperator out(n_sites_);
    out.terms_.reserve(terms_.size());
    for (const auto& [s, w] : terms_)
        if (s.support() <= p) out.terms_.emplace(s, w);
    return out;
}

PauliOperator PauliOperator::truncated_terms(std::size_t max_terms) const {
    if (terms_.size() <= max_terms) return *this;
    std::vector<std::pair<PauliString, cplx>> all(terms_.begin(), terms_.end());
    auto heavier = [](const auto& a, const auto& b) {
        double na = std::norm(a.second), nb = std::norm(b.second);
        if (na != nb) return na > nb;
        return std::pair{a.first.x, a.first.z} < std::pair{b.first.x, b.first.z};
    };
    std::nth_element(all.begin(), all.begin() + max_terms, all.end(), heavier);
    PauliOperator out(n_sites_);
    out.terms_.reserve(max_terms);
    for (std::size_t i = 0; i < max_terms; ++i) out.terms_.emplace(all[i].first, all[i].second);
    return out;
}

void PauliOperator::compress(double tol) {
    for (auto it = terms_.begin(); it != terms_.end();) {
        if (std::abs(it->second) <= tol)
            it = terms_.erase(it);
        else
            ++it;
    }
}

Eigen::MatrixXcd PauliOperator::to_dense(int dense_limit) const {
    if (n_sites_ > dense_limit)
        throw ResourceError("pauli: dense matrix for " + std::to_string(n_sites_) +
                            " sites refused (limit " + std::to_string(dense_limit) + ")");
    const std::size_t dim = std::size_t{1} << n_sites_;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& [s, w] : terms_) {
        cplx base = w * unit_phase(std::popcount(s.x & s.z));
        for (std::size_t col = 0; col < dim; ++col) {
            std::size_t row = col ^ s.x;
            bool flip = std::popcount(col & s.z) & 1;
            m(row, col) += flip ? -base : base;
        }
    }
    return m;
}

std::string PauliOperator::dump() const {
    std::vector<const std::pair<const PauliString, cplx>*> order;
    order.reserve(terms_.size());
    for (const auto& t : terms_) order.push_back(&t);
    std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
        return std::pair{a->first.x, a->first.z} < std::pair{b->first.x, b->first.z};
    });
    std::string out;
    for (const auto* t : order) {
        append_double(out, t->second.real());
        out += ' ';
        append_double(out, t->second.imag());
        for (const auto& [site, axis] : t->first.sites()) {
            out += ' ';
            out += std::to_string(site);
            out += ':';
            out += axis_letter(axis);
        }
        out += '\n';
    }
    return out;
}

PauliOperator multiply(const PauliOperator& a, const PauliOperator& b) {
    if (a.n_sites() != b.n_sites())
        throw ConfigError("pauli: size mismatch in operator product");
    PauliOperator out(a.n_sites());
    for (const auto& [sa, wa] : a.terms())
        for (const auto& [sb, wb] : b.terms()) {
            auto [s, phase] = multiply(sa, sb);
            out.add_term(s, phase * wa * wb);
        }
    return out;
}

PauliOperator commutator(const PauliOperator& a, const PauliOperator& b) {
    if (a.n_sites() != b.n_sites())
        throw ConfigError("pauli: size mismatch in commutator");
    PauliOperator out(a.n_sites());
    for (const auto& [sa, wa] : a.terms())
        for (const auto& [sb, wb] : b.terms()) {
            // ab = -ba for anticommuting strings, so [a,b] = 2ab; else the pair cancels.
            if (!anticommutes(sa, sb)) continue;
            auto [s, phase] = multiply(sa, sb);
            out.add_term(s, 2.0 * phase * wa * wb);
        }
    return out;
}

cplx frobenius_inner(const PauliOperator& a, const PauliOperator& b) {
    if (a.n_sites() != b.n_sites())
        throw ConfigError("pauli: size mismatch in inner product");
    const bool a_small = a.n_terms() <= b.n_terms();
    const PauliOperator& small = a_small ? a : b;
    const PauliOperator& large = a_small ? b : a;
    cplx acc = 0.0;
    for (const auto& [s, w] : small.terms()) {
        auto it = large.terms().find(s);
        if (it == large.terms().end()) continue;
        acc += a_small ? std::conj(w) * it->second : std::conj(it->second) * w;
    }
    return acc;
}

double frobenius_norm(const PauliOperator& a) {
    double acc = 0.0;
    for (const auto& [s, w] : a.terms()) acc += std::norm(w);
    return std::sqrt(acc);
}

Eigen::MatrixXcd to_dense_in_basis(const PauliOperator& op,
                                   const std::vector<std::uint64_t>& basis) {
    std::unordered_map<std::uint64_t, int> index;
    index.reserve(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) index.emplace(basis[i], int(i));
    const auto dim = Eigen::Index(basis.size());
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& [s, w] : op.terms()) {
        cplx base = w * unit_phase(std::popcount(s.x & s.z));
        for (Eigen::Index col = 0; col < dim; ++col) {
            std::uint64_t target = basis[col] ^ s.x;
            auto it = index.find(target);
            if (it == index.end()) continue;
            bool flip = std::popcount(basis[col] & s.z) & 1;
            m(it->second, col) += flip ? -base : base;
        }
    }
    return m;
}

} // namespace cdkit
