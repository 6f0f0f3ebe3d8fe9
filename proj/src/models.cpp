#include "cdkit/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cdkit/errors.hpp"

namespace cdkit {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct WeightedString {
    PauliString s;
    double w;
};

PauliString site_op(int i, Axis a) { return PauliString::single(i, a); }

PauliString bond_op(int i, int j, Axis a) {
    std::pair<int, Axis> sites[2] = {{i, a}, {j, a}};
    return PauliString::from_sites(sites);
}

// All (i, i+range) pairs, wrapped for periodic chains; pairs come out sorted.
std::vector<std::pair<int, int>> bonds(int n, Boundary b, int range) {
    std::vector<std::pair<int, int>> out;
    if (b == Boundary::PERIODIC) {
        for (int i = 0; i < n; ++i) {
            int j = (i + range) % n;
            out.emplace_back(std::min(i, j), std::max(i, j));
        }
    } else {
        for (int i = 0; i + range < n; ++i) out.emplace_back(i, i + range);
    }
    return out;
}

int interaction_range(ModelName name) { return name == ModelName::NNN_TFI ? 2 : 1; }

// lambda = 0 endpoint.
std::vector<WeightedString> endpoint_h0(const ModelSpec& spec) {
    std::vector<WeightedString> out;
    switch (spec.name) {
    case ModelName::TFI_CLEAN:
    case ModelName::NNN_TFI: {
        double h = coupling(spec, "h");
        for (int i = 0; i < spec.n_sites; ++i) out.push_back({site_op(i, Axis::X), -h});
        break;
    }
    case ModelName::TFI_BLOCK_DISORDER: {
        const auto& d = *spec.disorder;
        for (int i = 0; i < spec.n_sites; ++i)
            out.push_back({site_op(i, Axis::X), -d.fields[std::size_t(i % d.block_size)]});
        break;
    }
    case ModelName::XXZ_ANNEAL: {
        double j3 = coupling(spec, "J") / 3.0;
        for (auto [i, j] : bonds(spec.n_sites, spec.boundary, 1))
            for (Axis a : {Axis::X, Axis::Y, Axis::Z}) out.push_back({bond_op(i, j, a), -j3});
        break;
    }
    case ModelName::XXZ_STATIC: {
        double J = coupling(spec, "J"), D = coupling(spec, "Delta");
        for (auto [i, j] : bonds(spec.n_sites, spec.boundary, 1)) {
            out.push_back({bond_op(i, j, Axis::X), -J});
            out.push_back({bond_op(i, j, Axis::Y), -J});
            out.push_back({bond_op(i, j, Axis::Z), -D});
        }
        break;
    }
    }
    return out;
}

// lambda = 1 endpoint; XXZ_STATIC repeats its lambda-independent terms.
std::vector<WeightedString> endpoint_h1(const ModelSpec& spec) {
    std::vector<WeightedString> out;
    switch (spec.name) {
    case ModelName::TFI_CLEAN:
    case ModelName::TFI_BLOCK_DISORDER: {
        double J = coupling(spec, "J");
        for (auto [i, j] : bonds(spec.n_sites, spec.boundary, 1))
            out.push_back({bond_op(i, j, Axis::Z), -J});
        break;
    }
    case ModelName::NNN_TFI: {
        double J = coupling(spec, "J"), J2 = coupling(spec, "J2");
        for (auto [i, j] : bonds(spec.n_sites, spec.boundary, 1))
            out.push_back({bond_op(i, j, Axis::Z), -J});
        for (auto [i, j] : bonds(spec.n_sites, spec.boundary, 2))
            out.push_back({bond_op(i, j, Axis::Z), -J2});
        break;
    }
    case ModelName::XXZ_ANNEAL: {
        double D = coupling(spec, "Delta");
        for (auto [i, j] : bonds(spec.n_sites, spec.boundary, 1))
            out.push_back({bond_op(i, j, Axis::Z), -D});
        break;
    }
    case ModelName::XXZ_STATIC:
        return endpoint_h0(spec);
    }
    return out;
}

} // namespace

std::string to_string(ModelName name) {
    switch (name) {
    case ModelName::TFI_CLEAN: return "TFI_CLEAN";
    case ModelName::TFI_BLOCK_DISORDER: return "TFI_BLOCK_DISORDER";
    case ModelName::NNN_TFI: return "NNN_TFI";
    case ModelName::XXZ_ANNEAL: return "XXZ_ANNEAL";
    case ModelName::XXZ_STATIC: return "XXZ_STATIC";
    }
    throw ConfigError("unknown model enum value");
}

ModelName model_name_from_string(const std::string& s) {
    for (auto m : {ModelName::TFI_CLEAN, ModelName::TFI_BLOCK_DISORDER, ModelName::NNN_TFI,
                   ModelName::XXZ_ANNEAL, ModelName::XXZ_STATIC})
        if (s == to_string(m)) return m;
    throw ConfigError("unknown model name '" + s +
                      "' (expected TFI_CLEAN, TFI_BLOCK_DISORDER, NNN_TFI, XXZ_ANNEAL, "
                      "or XXZ_STATIC)");
}

std::string to_string(Boundary b) { return b == Boundary::OPEN ? "open" : "periodic"; }

Boundary boundary_from_string(const std::string& s) {
    if (s == "open") return Boundary::OPEN;
    if (s == "periodic") return Boundary::PERIODIC;
    throw ConfigError("unknown boundary '" + s + "' (expected open or periodic)");
}

std::string to_string(ScheduleShape s) {
    return s == ScheduleShape::SMOOTH_SINE ? "SMOOTH_SINE" : "LINEAR";
}

ScheduleShape schedule_shape_from_string(const std::string& s) {
    if (s == "SMOOTH_SINE") return ScheduleShape::SMOOTH_SINE;
    if (s == "LINEAR") return ScheduleShape::LINEAR;
    throw ConfigError("unknown schedule shape '" + s + "' (expected SMOOTH_SINE or LINEAR)");
}

std::vector<double> sample_block_fields(std::uint64_t seed, int block_size, double h) {
    if (block_size < 1) throw ConfigError("block_size must be >= 1");
    if (h < 0.0) throw ConfigError("field bound h must be >= 0");
    std::mt19937_64 rng(seed);
    std::vector<double> fields(static_cast<std::size_t>(block_size));
    for (auto& f : fields) f = h * double(rng() >> 11) * 0x1.0p-53;
    return fields;
}

ModelSpec tfi_clean(int n_sites, double J, double h, Boundary boundary) {
    ModelSpec spec{ModelName::TFI_CLEAN, n_sites, {{"J", J}, {"h", h}}, boundary, {}, {}};
    validate_model(spec);
    return spec;
}

ModelSpec tfi_block_disorder(int n_sites, std::uint64_t seed, int block_size, double J, double h,
                             Boundary boundary) {
    ModelSpec spec{ModelName::TFI_BLOCK_DISORDER,
                   n_sites,
                   {{"J", J}, {"h", h}},
                   boundary,
                   DisorderSpec{block_size, sample_block_fields(seed, block_size, h), seed},
                   {}};
    validate_model(spec);
    return spec;
}

ModelSpec nnn_tfi(int n_sites, double J, double h, double J2, Boundary boundary) {
    ModelSpec spec{
        ModelName::NNN_TFI, n_sites, {{"J", J}, {"h", h}, {"J2", J2}}, boundary, {}, {}};
    validate_model(spec);
    return spec;
}

ModelSpec xxz_anneal(int n_sites, double J, double Delta, Boundary boundary) {
    ModelSpec spec{ModelName::XXZ_ANNEAL, n_sites, {{"J", J}, {"Delta", Delta}}, boundary, {}, {}};
    if (n_sites % 2 == 0) spec.magnetization = 0;
    validate_model(spec);
    return spec;
}

ModelSpec xxz_static(int n_sites, double J, double Delta, Boundary boundary) {
    ModelSpec spec{ModelName::XXZ_STATIC, n_sites, {{"J", J}, {"Delta", Delta}}, boundary, {}, {}};
    validate_model(spec);
    return spec;
}

double coupling(const ModelSpec& spec, const std::string& key) {
    auto it = spec.couplings.find(key);
    if (it == spec.couplings.end())
        throw ConfigError(to_string(spec.name) + ": missing coupling '" + key + "'");
    return it->second;
}

void validate_model(const ModelSpec& spec) {
    if (spec.n_sites < 2) throw ConfigError("n_sites must be >= 2");
    if (spec.n_sites > PauliString::kMaxSites)
        throw ConfigError("n_sites exceeds the " + std::to_string(PauliString::kMaxSites) +
                          "-site string limit");
    if (spec.boundary == Boundary::PERIODIC && spec.n_sites <= interaction_range(spec.name))
        throw ConfigError(to_string(spec.name) + ": periodic chain must exceed interaction range " +
                          std::to_string(interaction_range(spec.name)));

    if (spec.name == ModelName::TFI_BLOCK_DISORDER) {
        if (!spec.disorder) throw ConfigError("TFI_BLOCK_DISORDER requires a disorder block");
        const auto& d = *spec.disorder;
        if (d.block_size < 1) throw ConfigError("disorder block_size must be >= 1");
        if (int(d.fields.size()) != d.block_size)
            throw ConfigError("disorder fields length " + std::to_string(d.fields.size()) +
                              " does not match block_size " + std::to_string(d.block_size));
        if (spec.n_sites % d.block_size != 0)
            throw ConfigError("n_sites must be a multiple of the disorder block_size");
        double h = coupling(spec, "h");
        for (double f : d.fields)
            if (!(f >= 0.0 && f <= h))
                throw ConfigError("disorder field outside [0, h]: " + std::to_string(f));
    } else if (spec.disorder) {
        throw ConfigError(to_string(spec.name) + " does not take a disorder block");
    }

    if (spec.magnetization) {
        if (spec.name != ModelName::XXZ_ANNEAL && spec.name != ModelName::XXZ_STATIC)
            throw ConfigError(to_string(spec.name) + " does not conserve total sigma^z; "
                              "magnetization sector is not meaningful");
        int m = *spec.magnetization;
        if (std::abs(m) > spec.n_sites || (m + spec.n_sites) % 2 != 0)
            throw ConfigError("magnetization " + std::to_string(m) +
                              " is not reachable with n_sites = " + std::to_string(spec.n_sites));
    }

    // every family references these; throws if a factory was bypassed incompletely
    (void)coupling(spec, "J");
    if (spec.name == ModelName::XXZ_ANNEAL || spec.name == ModelName::XXZ_STATIC)
        (void)coupling(spec, "Delta");
    else
        (void)coupling(spec, "h");
    if (spec.name == ModelName::NNN_TFI) (void)coupling(spec, "J2");
}

PauliOperator hamiltonian(const ModelSpec& spec, double lambda) {
    validate_model(spec);
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw ConfigError("lambda must lie in [0, 1], got " + std::to_string(lambda));
    PauliOperator op(spec.n_sites);
    for (const auto& t : endpoint_h0(spec)) op.add_term(t.s, (1.0 - lambda) * t.w);
    for (const auto& t : endpoint_h1(spec)) op.add_term(t.s, lambda * t.w);
    return op;
}

PauliOperator dlambda_h(const ModelSpec& spec) {
    validate_model(spec);
    PauliOperator op(spec.n_sites);
    for (const auto& t : endpoint_h1(spec)) op.add_term(t.s, t.w);
    for (const auto& t : endpoint_h0(spec)) op.add_term(t.s, -t.w);
    return op;
}

double omega_max(const ModelSpec& spec, double lambda) {
    validate_model(spec);
    if (spec.name != ModelName::TFI_CLEAN && spec.name != ModelName::TFI_BLOCK_DISORDER)
        throw ConfigError(to_string(spec.name) +
                          ": no hard cutoff (single-particle bound exists only for "
                          "free-fermion-reducible families)");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw ConfigError("lambda must lie in [0, 1], got " + std::to_string(lambda));
    return 4.0 * (lambda * coupling(spec, "J") + (1.0 - lambda) * coupling(spec, "h"));
}

double omega_max(const ModelSpec& spec) {
    // linear in lambda, so the maximum sits at an endpoint
    return std::max(omega_max(spec, 0.0), omega_max(spec, 1.0));
}

SchedulePoint schedule_eval(const Schedule& s, double t) {
    if (!(s.total_time > 0.0)) throw ConfigError("schedule total_time must be > 0");
    if (!(t >= 0.0 && t <= s.total_time))
        throw ConfigError("t = " + std::to_string(t) + " outside [0, " +
                          std::to_string(s.total_time) + "]");
    const double T = s.total_time;
    // exact endpoints so the drive switches on and off without residue
    if (t == 0.0) return {0.0, s.shape == ScheduleShape::LINEAR ? 1.0 / T : 0.0};
    if (t == T) return {1.0, s.shape == ScheduleShape::LINEAR ? 1.0 / T : 0.0};
    if (s.shape == ScheduleShape::LINEAR) return {t / T, 1.0 / T};
    double sp = std::sin(kPi * t / (2.0 * T));
    return {sp * sp, kPi / (2.0 * T) * std::sin(kPi * t / T)};
}

} // namespace cdkit
