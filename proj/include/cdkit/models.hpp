#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cdkit/pauli.hpp"

namespace cdkit {

enum class ModelName { TFI_CLEAN, TFI_BLOCK_DISORDER, NNN_TFI, XXZ_ANNEAL, XXZ_STATIC };
enum class Boundary { OPEN, PERIODIC };

std::string to_string(ModelName name);
ModelName model_name_from_string(const std::string& s);
std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

// Contiguous block of random transverse fields, repeated over the lattice.
// fields.size() == block_size; every field lies in [0, h].
struct DisorderSpec {
    int block_size = 4;
    std::vector<double> fields;
    std::uint64_t seed = 0;
};

// Linear anneal family H(lambda) = (1-lambda) H0 + lambda H1 plus metadata.
struct ModelSpec {
    ModelName name = ModelName::TFI_CLEAN;
    int n_sites = 0;
    std::map<std::string, double> couplings; // J, h, J2, Delta as applicable
    Boundary boundary = Boundary::PERIODIC;
    std::optional<DisorderSpec> disorder;
    // total-sigma^z eigenvalue restricting the ED backend (XXZ families only)
    std::optional<int> magnetization;
};

ModelSpec tfi_clean(int n_sites, double J = 1.0, double h = 1.0,
                    Boundary boundary = Boundary::PERIODIC);
// Samples block fields uniformly from [0, h] with the given seed.
ModelSpec tfi_block_disorder(int n_sites, std::uint64_t seed, int block_size = 4, double J = 1.0,
                             double h = 1.0, Boundary boundary = Boundary::PERIODIC);
ModelSpec nnn_tfi(int n_sites, double J = 1.0, double h = 1.0, double J2 = 0.25,
                  Boundary boundary = Boundary::PERIODIC);
ModelSpec xxz_anneal(int n_sites, double J = 1.0, double Delta = 1.0,
                     Boundary boundary = Boundary::PERIODIC);
ModelSpec xxz_static(int n_sites, double J = 1.0, double Delta = 1.0,
                     Boundary boundary = Boundary::PERIODIC);

// The deterministic field sampler behind tfi_block_disorder, exposed so outputs
// can record how fields were produced: mt19937_64(seed), u = (next() >> 11) * 2^-53.
std::vector<double> sample_block_fields(std::uint64_t seed, int block_size, double h);

double coupling(const ModelSpec& spec, const std::string& key);

// Throws ConfigError on any structural violation (sizes, couplings, disorder shape).
void validate_model(const ModelSpec& spec);

// Hermitian H(lambda), exactly linear between the lambda = 0 and lambda = 1 endpoints.
PauliOperator hamiltonian(const ModelSpec& spec, double lambda);

// H1 - H0 with exact endpoint weights; the zero operator for XXZ_STATIC.
PauliOperator dlambda_h(const ModelSpec& spec);

// Largest single-particle energy 4(lambda J + (1-lambda) h), defined only for the
// free-fermion-reducible families; the no-lambda overload maximizes over [0, 1].
// For block disorder this is the clean upper bound (fields are capped by h).
double omega_max(const ModelSpec& spec, double lambda);
double omega_max(const ModelSpec& spec);

enum class ScheduleShape { SMOOTH_SINE, LINEAR };

std::string to_string(ScheduleShape s);
ScheduleShape schedule_shape_from_string(const std::string& s);

// Anneal schedule lambda(t) on [0, T] with lambda(0) = 0, lambda(T) = 1.
// SMOOTH_SINE is sin^2(pi t / 2T), whose rate vanishes at both endpoints, so the
// driven Hamiltonian coincides with the bare one at t = 0 and t = T.
struct Schedule {
    double total_time = 0.1;
    ScheduleShape shape = ScheduleShape::SMOOTH_SINE;
};

struct SchedulePoint {
    double lambda = 0.0;
    double lambda_dot = 0.0;
};

// Throws ConfigError for t outside [0, T] or non-positive T.
SchedulePoint schedule_eval(const Schedule& s, double t);

} // namespace cdkit
