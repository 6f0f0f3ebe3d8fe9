#include "cdkit/config.hpp"

#include <cctype>
#include <fstream>
#include <set>

#include "cdkit/errors.hpp"

namespace cdkit {

namespace {

using nlohmann::json;

// Tracks which keys a section consumed; anything left over is a config typo
// worth failing loudly on.
class ObjectReader {
  public:
    ObjectReader(const json& j, std::string section) : j_(j), section_(std::move(section)) {
        if (!j_.is_object())
            throw ConfigError("config section \"" + section_ + "\" must be an object");
    }

    template <class T> void get(const char* key, T& into) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            into = it->get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config key \"" + std::string(key) + "\" in \"" + section_ +
                              "\": " + e.what());
        }
    }

    template <class T> void get(const char* key, std::optional<T>& into) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end() || it->is_null()) return;
        try {
            into = it->get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config key \"" + std::string(key) + "\" in \"" + section_ +
                              "\": " + e.what());
        }
    }

    // Nested section; the parser runs even when the key is absent so nested
    // defaults apply uniformly.
    const json& section(const char* key) {
        seen_.insert(key);
        static const json empty = json::object();
        const auto it = j_.find(key);
        return it == j_.end() ? empty : *it;
    }

    std::string path(const char* key) const {
        return section_.empty() ? key : section_ + "." + key;
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key()))
                throw ConfigError("config: unknown key \"" + item.key() + "\" in \"" +
                                  (section_.empty() ? "top level" : section_) + "\"");
    }

  private:
    const json& j_;
    std::string section_;
    std::set<std::string> seen_;
};

ModelConfig model_from(const json& j, const std::string& where) {
    ModelConfig c;
    ObjectReader r(j, where);
    r.get("name", c.name);
    r.get("n_sites", c.n_sites);
    r.get("J", c.J);
    r.get("h", c.h);
    r.get("J2", c.J2);
    r.get("Delta", c.Delta);
    r.get("boundary", c.boundary);
    r.get("seed", c.seed);
    r.get("block_size", c.block_size);
    r.get("magnetization", c.magnetization);
    r.finish();
    return c;
}

json model_to(const ModelConfig& c) {
    json j{{"name", c.name},           {"n_sites", c.n_sites}, {"J", c.J},
           {"h", c.h},                 {"J2", c.J2},           {"Delta", c.Delta},
           {"boundary", c.boundary},   {"seed", c.seed},       {"block_size", c.block_size}};
    if (c.magnetization) j["magnetization"] = *c.magnetization;
    return j;
}

ScheduleConfig schedule_from(const json& j, const std::string& where) {
    ScheduleConfig c;
    ObjectReader r(j, where);
    r.get("total_time", c.total_time);
    r.get("shape", c.shape);
    r.finish();
    return c;
}

json schedule_to(const ScheduleConfig& c) {
    return {{"total_time", c.total_time}, {"shape", c.shape}};
}

IntegratorConfig integrator_from(const json& j, const std::string& where) {
    IntegratorConfig c;
    ObjectReader r(j, where);
    r.get("abs_tol", c.abs_tol);
    r.get("rel_tol", c.rel_tol);
    r.get("fixed_step", c.fixed_step);
    r.get("fixed_steps", c.fixed_steps);
    r.get("knots", c.knots);
    r.get("samples", c.samples);
    r.finish();
    return c;
}

json integrator_to(const IntegratorConfig& c) {
    return {{"abs_tol", c.abs_tol},       {"rel_tol", c.rel_tol}, {"fixed_step", c.fixed_step},
            {"fixed_steps", c.fixed_steps}, {"knots", c.knots},   {"samples", c.samples}};
}

} // namespace

RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    ObjectReader top(j, "");

    {
        ObjectReader r(top.section("global"), "global");
        r.get("out_dir", cfg.global.out_dir);
        r.get("seed", cfg.global.seed);
        r.get("workers", cfg.global.workers);
        r.get("dense_limit", cfg.global.dense_limit);
        r.finish();
    }
    {
        ObjectReader r(top.section("fit"), "fit");
        r.get("ell", cfg.fit.ell);
        r.get("zeta", cfg.fit.zeta);
        r.get("mode", cfg.fit.mode);
        r.get("curve_points", cfg.fit.curve_points);
        r.get("scan_zeta", cfg.fit.scan_zeta);
        r.get("ells", cfg.fit.ells);
        r.get("scan_lo", cfg.fit.scan_lo);
        r.get("scan_hi", cfg.fit.scan_hi);
        r.get("scan_grid", cfg.fit.scan_grid);
        r.get("scan_rel_tol", cfg.fit.scan_rel_tol);
        r.finish();
    }
    {
        const json& a = top.section("anneal");
        ObjectReader r(a, "anneal");
        cfg.anneal.model = model_from(r.section("model"), "anneal.model");
        cfg.anneal.schedule = schedule_from(r.section("schedule"), "anneal.schedule");
        cfg.anneal.integrator = integrator_from(r.section("integrator"), "anneal.integrator");
        r.get("protocol", cfg.anneal.protocol);
        r.get("fit_mode", cfg.anneal.fit_mode);
        r.get("ell", cfg.anneal.ell);
        r.get("zeta", cfg.anneal.zeta);
        r.get("omega", cfg.anneal.omega);
        r.get("mu", cfg.anneal.mu);
        r.get("n_modes", cfg.anneal.n_modes);
        r.get("realizations", cfg.anneal.realizations);
        r.get("energy_trace", cfg.anneal.energy_trace);
        r.finish();
    }
    {
        const json& s = top.section("scaling");
        ObjectReader r(s, "scaling");
        r.get("experiment", cfg.scaling.experiment);
        r.get("ells", cfg.scaling.ells);
        cfg.scaling.model = model_from(r.section("model"), "scaling.model");
        cfg.scaling.schedule = schedule_from(r.section("schedule"), "scaling.schedule");
        cfg.scaling.integrator = integrator_from(r.section("integrator"), "scaling.integrator");
        r.get("n_modes", cfg.scaling.n_modes);
        r.get("omega", cfg.scaling.omega);
        r.get("mode", cfg.scaling.mode);
        r.get("search_lo", cfg.scaling.search_lo);
        r.get("search_hi", cfg.scaling.search_hi);
        r.get("search_grid", cfg.scaling.search_grid);
        r.get("search_rel_tol", cfg.scaling.search_rel_tol);
        r.get("omega_lo", cfg.scaling.omega_lo);
        r.get("omega_hi", cfg.scaling.omega_hi);
        r.get("grid", cfg.scaling.grid);
        r.get("rel_tol", cfg.scaling.rel_tol);
        r.get("zeta_csv", cfg.scaling.zeta_csv);
        r.get("action_zeta_csv", cfg.scaling.action_zeta_csv);
        r.get("asymptote", cfg.scaling.asymptote);
        r.get("fit_ell_min", cfg.scaling.fit_ell_min);
        r.finish();
    }
    {
        const json& l = top.section("lanczos");
        ObjectReader r(l, "lanczos");
        cfg.lanczos.model = model_from(r.section("model"), "lanczos.model");
        r.get("lambda", cfg.lanczos.lambda);
        r.get("p", cfg.lanczos.p);
        r.get("n_max", cfg.lanczos.n_max);
        r.get("p_compare", cfg.lanczos.p_compare);
        r.get("seed_op", cfg.lanczos.seed_op);
        r.get("term_cap", cfg.lanczos.term_cap);
        r.get("fit", cfg.lanczos.fit);
        r.get("fit_lo", cfg.lanczos.fit_lo);
        r.get("fit_hi", cfg.lanczos.fit_hi);
        r.get("fit_width", cfg.lanczos.fit_width);
        r.get("log_correction", cfg.lanczos.log_correction);
        r.finish();
    }
    {
        const json& s = top.section("spectral");
        ObjectReader r(s, "spectral");
        cfg.spectral.model = model_from(r.section("model"), "spectral.model");
        r.get("lambda", cfg.spectral.lambda);
        r.get("ensemble", cfg.spectral.ensemble);
        r.get("bins", cfg.spectral.bins);
        r.get("kind", cfg.spectral.kind);
        r.get("range_lo", cfg.spectral.range_lo);
        r.get("range_hi", cfg.spectral.range_hi);
        r.finish();
    }
    top.finish();
    return cfg;
}

nlohmann::json to_json(const RunConfig& cfg) {
    json j;
    j["global"] = {{"out_dir", cfg.global.out_dir},
                   {"seed", cfg.global.seed},
                   {"workers", cfg.global.workers},
                   {"dense_limit", cfg.global.dense_limit}};
    j["fit"] = {{"ell", cfg.fit.ell},
                {"zeta", cfg.fit.zeta},
                {"mode", cfg.fit.mode},
                {"curve_points", cfg.fit.curve_points},
                {"scan_zeta", cfg.fit.scan_zeta},
                {"ells", cfg.fit.ells},
                {"scan_lo", cfg.fit.scan_lo},
                {"scan_hi", cfg.fit.scan_hi},
                {"scan_grid", cfg.fit.scan_grid},
                {"scan_rel_tol", cfg.fit.scan_rel_tol}};
    j["anneal"] = {{"model", model_to(cfg.anneal.model)},
                   {"schedule", schedule_to(cfg.anneal.schedule)},
                   {"integrator", integrator_to(cfg.anneal.integrator)},
                   {"protocol", cfg.anneal.protocol},
                   {"fit_mode", cfg.anneal.fit_mode},
                   {"ell", cfg.anneal.ell},
                   {"zeta", cfg.anneal.zeta},
                   {"omega", cfg.anneal.omega},
                   {"mu", cfg.anneal.mu},
                   {"n_modes", cfg.anneal.n_modes},
                   {"realizations", cfg.anneal.realizations},
                   {"energy_trace", cfg.anneal.energy_trace}};
    j["scaling"] = {{"experiment", cfg.scaling.experiment},
                    {"ells", cfg.scaling.ells},
                    {"model", model_to(cfg.scaling.model)},
                    {"schedule", schedule_to(cfg.scaling.schedule)},
                    {"integrator", integrator_to(cfg.scaling.integrator)},
                    {"n_modes", cfg.scaling.n_modes},
                    {"omega", cfg.scaling.omega},
                    {"mode", cfg.scaling.mode},
                    {"search_lo", cfg.scaling.search_lo},
                    {"search_hi", cfg.scaling.search_hi},
                    {"search_grid", cfg.scaling.search_grid},
                    {"search_rel_tol", cfg.scaling.search_rel_tol},
                    {"omega_lo", cfg.scaling.omega_lo},
                    {"omega_hi", cfg.scaling.omega_hi},
                    {"grid", cfg.scaling.grid},
                    {"rel_tol", cfg.scaling.rel_tol},
                    {"zeta_csv", cfg.scaling.zeta_csv},
                    {"action_zeta_csv", cfg.scaling.action_zeta_csv},
                    {"asymptote", cfg.scaling.asymptote},
                    {"fit_ell_min", cfg.scaling.fit_ell_min}};
    j["lanczos"] = {{"model", model_to(cfg.lanczos.model)},
                    {"lambda", cfg.lanczos.lambda},
                    {"p", cfg.lanczos.p},
                    {"n_max", cfg.lanczos.n_max},
                    {"p_compare", cfg.lanczos.p_compare},
                    {"seed_op", cfg.lanczos.seed_op},
                    {"term_cap", cfg.lanczos.term_cap},
                    {"fit", cfg.lanczos.fit},
                    {"fit_lo", cfg.lanczos.fit_lo},
                    {"fit_hi", cfg.lanczos.fit_hi},
                    {"fit_width", cfg.lanczos.fit_width},
                    {"log_correction", cfg.lanczos.log_correction}};
    json sp{{"model", model_to(cfg.spectral.model)},
            {"lambda", cfg.spectral.lambda},
            {"ensemble", cfg.spectral.ensemble},
            {"bins", cfg.spectral.bins},
            {"kind", cfg.spectral.kind}};
    if (cfg.spectral.range_lo) sp["range_lo"] = *cfg.spectral.range_lo;
    if (cfg.spectral.range_hi) sp["range_hi"] = *cfg.spectral.range_hi;
    j["spectral"] = sp;
    return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

ModelSpec make_model(const ModelConfig& cfg) {
    const ModelName name = model_name_from_string(cfg.name);
    const Boundary boundary = boundary_from_string(cfg.boundary);
    ModelSpec spec;
    switch (name) {
    case ModelName::TFI_CLEAN:
        spec = tfi_clean(cfg.n_sites, cfg.J, cfg.h, boundary);
        break;
    case ModelName::TFI_BLOCK_DISORDER:
        spec = tfi_block_disorder(cfg.n_sites, cfg.seed, cfg.block_size, cfg.J, cfg.h, boundary);
        break;
    case ModelName::NNN_TFI:
        spec = nnn_tfi(cfg.n_sites, cfg.J, cfg.h, cfg.J2, boundary);
        break;
    case ModelName::XXZ_ANNEAL:
        spec = xxz_anneal(cfg.n_sites, cfg.J, cfg.Delta, boundary);
        break;
    case ModelName::XXZ_STATIC:
        spec = xxz_static(cfg.n_sites, cfg.J, cfg.Delta, boundary);
        break;
    }
    if (cfg.magnetization) spec.magnetization = cfg.magnetization;
    validate_model(spec);
    return spec;
}

Schedule make_schedule(const ScheduleConfig& cfg) {
    Schedule s;
    s.total_time = cfg.total_time;
    s.shape = schedule_shape_from_string(cfg.shape);
    if (s.total_time <= 0.0) throw ConfigError("schedule: total_time must be positive");
    return s;
}

EvolveOptions make_evolve_options(const IntegratorConfig& cfg) {
    EvolveOptions opt;
    opt.abs_tol = cfg.abs_tol;
    opt.rel_tol = cfg.rel_tol;
    opt.fixed_step = cfg.fixed_step;
    opt.fixed_steps = cfg.fixed_steps;
    opt.knots = cfg.knots;
    opt.samples = cfg.samples;
    return opt;
}

PauliOperator make_seed_op(const std::string& text, int n_sites) {
    if (text.size() < 2) throw ConfigError("seed_op: expected an axis letter and a site, e.g. Z0");
    Axis axis;
    switch (std::toupper(static_cast<unsigned char>(text[0]))) {
    case 'X': axis = Axis::X; break;
    case 'Y': axis = Axis::Y; break;
    case 'Z': axis = Axis::Z; break;
    default: throw ConfigError("seed_op: axis must be X, Y or Z, got \"" + text + "\"");
    }
    int site = 0;
    try {
        std::size_t used = 0;
        site = std::stoi(text.substr(1), &used);
        if (used + 1 != text.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ConfigError("seed_op: malformed site index in \"" + text + "\"");
    }
    if (site < 0 || site >= n_sites)
        throw ConfigError("seed_op: site " + std::to_string(site) + " outside 0.." +
                          std::to_string(n_sites - 1));
    // single Pauli strings have unit norm under the normalized trace product
    return PauliOperator::single(n_sites, site, axis, 1.0);
}

FitMode fit_mode_from_string(const std::string& s) {
    if (s == "COST") return FitMode::COST;
    if (s == "ACTION") return FitMode::ACTION;
    throw ConfigError("unknown fit mode '" + s + "' (expected COST or ACTION)");
}

} // namespace cdkit
