#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cdkit/errors.hpp"

namespace cdkit {

using cplx = std::complex<double>;

enum class Axis : std::uint8_t { X = 1, Y = 2, Z = 3 };

char axis_letter(Axis a);

// Tensor product of single-site Pauli matrices in symplectic form:
// site i carries X iff bit i of x, Z iff bit i of z, Y iff both.
// The represented operator is the Hermitian product_i i^{x_i z_i} X^{x_i} Z^{z_i},
// so the bit pair (1,1) is exactly sigma^y. Site indices are 0-based and the
// bitmask storage is the canonical strictly-increasing-site form.
struct PauliString {
    std::uint64_t x = 0;
    std::uint64_t z = 0;

    static constexpr int kMaxSites = 64;

    static PauliString identity() { return {}; }
    static PauliString single(int site, Axis a);
    // Validates strictly increasing site order (duplicates rejected).
    static PauliString from_sites(std::span<const std::pair<int, Axis>> sites);

    bool is_identity() const { return x == 0 && z == 0; }
    int support() const;
    int max_site() const; // -1 for identity
    Axis axis_at(int site) const; // precondition: site is in the support
    std::vector<std::pair<int, Axis>> sites() const;

    friend bool operator==(const PauliString&, const PauliString&) = default;
};

struct PauliStringHash {
    std::size_t operator()(const PauliString& s) const noexcept;
};

struct PauliProduct {
    PauliString string;
    cplx phase; // exactly one of {1, i, -1, -i}
};

// Product a*b with exact phase bookkeeping.
PauliProduct multiply(const PauliString& a, const PauliString& b);

// True iff the strings anticommute; Pauli strings either commute or anticommute.
bool anticommutes(const PauliString& a, const PauliString& b);

// Dense matrices above this site count are refused unless the caller raises the limit.
inline constexpr int kDenseSiteLimit = 14;

// Weights at or below this magnitude are dropped after every operation.
inline constexpr double kWeightDropTol = 1e-14;

// Sparse sum of weighted Pauli strings on a fixed number of sites.
// Value semantics: all algebra returns new operators; stored strings are canonical.
class PauliOperator {
  public:
    using TermMap = std::unordered_map<PauliString, cplx, PauliStringHash>;

    explicit PauliOperator(int n_sites);
    PauliOperator() : PauliOperator(1) {}

    static PauliOperator zero(int n_sites) { return PauliOperator(n_sites); }
    static PauliOperator term(int n_sites, const PauliString& s, cplx w);
    static PauliOperator single(int n_sites, int site, Axis a, cplx w = 1.0);

    int n_sites() const { return n_sites_; }
    std::size_t n_terms() const { return terms_.size(); }
    const TermMap& terms() const { return terms_; }
    cplx weight(const PauliString& s) const;

    void add_term(const PauliString& s, cplx w);

    PauliOperator& operator+=(const PauliOperator& rhs);
    PauliOperator& operator-=(const PauliOperator& rhs);
    PauliOperator& operator*=(cplx c);

    friend PauliOperator operator+(PauliOperator a, const PauliOperator& b) { return a += b; }
    friend PauliOperator operator-(PauliOperator a, const PauliOperator& b) { return a -= b; }
    friend PauliOperator operator*(PauliOperator a, cplx c) { return a *= c; }
    friend PauliOperator operator*(cplx c, PauliOperator a) { return a *= c; }

    PauliOperator dagger() const;
    bool is_hermitian(double tol = 1e-12) const;

    // Keeps only strings with support <= p.
    PauliOperator truncated_support(int p) const;
    // Keeps the max_terms largest-|weight| strings (deterministic tie-break on masks).
    PauliOperator truncated_terms(std::size_t max_terms) const;

    // Drops |w| <= tol entries; called internally after every mutating operation.
    void compress(double tol = kWeightDropTol);

    Eigen::MatrixXcd to_dense(int dense_limit = kDenseSiteLimit) const;

    // One term per line: "w_re w_im site:axis site:axis ...", deterministic order.
    std::string dump() const;

  private:
    int n_sites_;
    TermMap terms_;
};

// Operator product a*b (all string pairs, exact phases).
PauliOperator multiply(const PauliOperator& a, const PauliOperator& b);

// [a, b]. Commuting string pairs contribute nothing by construction, so exactly
// commuting operators give an exactly empty result with no floating-point residue.
PauliOperator commutator(const PauliOperator& a, const PauliOperator& b);

// Tr(a^dag b) / 2^N: the weight-overlap sum over shared strings.
cplx frobenius_inner(const PauliOperator& a, const PauliOperator& b);

// sqrt(<a,a>): infinite-temperature norm.
double frobenius_norm(const PauliOperator& a);

// Matrix of the operator restricted to the span of the given computational
// basis states (bitstrings). Transitions leaving the span are projected away,
// which is exact when the operator is block diagonal with respect to it.
Eigen::MatrixXcd to_dense_in_basis(const PauliOperator& op,
                                   const std::vector<std::uint64_t>& basis);

} // namespace cdkit
