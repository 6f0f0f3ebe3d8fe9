#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "cdkit/config.hpp"
#include "cdkit/errors.hpp"
#include "cdkit/io.hpp"

using namespace cdkit;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    auto dir = fs::temp_directory_path() / "cdkit_io_test";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(bool(in));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("format_double round-trips and stays locale-free") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-4.0) == "-4");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
    // shortest representation parses back to the same bits
    const double v = 0.07098123456789;
    CHECK(std::stod(format_double(v)) == v);
    CHECK(format_double(1e-300).find('.') == std::string::npos); // exponent form
}

TEST_CASE("csv writer emits LF rows, checks arity, quotes when forced") {
    const auto path = temp_dir() / "table.csv";
    {
        CsvWriter w(path, {"ell", "zeta_star", "note"});
        w.row(8, 0.071, "clean");
        w.row(16, 0.046, std::string("a,b"));
    }
    CHECK(slurp(path) == "ell,zeta_star,note\n8,0.071,clean\n16,0.046,\"a,b\"\n");

    CsvWriter w(temp_dir() / "arity.csv", {"a", "b"});
    CHECK_THROWS_AS(w.row(1), ConfigError);
}

TEST_CASE("csv writer is byte-stable across runs") {
    const auto p1 = temp_dir() / "g1.csv";
    const auto p2 = temp_dir() / "g2.csv";
    for (const auto& p : {p1, p2}) {
        CsvWriter w(p, {"ell", "omega_star", "fidelity"});
        w.row(2, 4.702381113, 0.63005221);
        w.row(4, 6.3701, 0.8858500000001);
    }
    CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("zeta table round-trips through csv") {
    const auto path = temp_dir() / "zeta.csv";
    {
        CsvWriter w(path, {"ell", "zeta_star", "objective"});
        w.row(8, 0.07098, -0.00125);
        w.row(16, 0.04631, -0.00061);
    }
    const auto rows = read_zeta_csv(path);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].ell == 8);
    CHECK(rows[0].zeta_star == 0.07098);
    CHECK(rows[0].objective == -0.00125);
    CHECK(rows[1].ell == 16);

    const auto bad = temp_dir() / "bad.csv";
    std::ofstream(bad) << "ell,zeta_star\nnope,0.1\n";
    CHECK_THROWS_AS(read_zeta_csv(bad), ConfigError);
    const auto empty = temp_dir() / "empty.csv";
    std::ofstream(empty) << "ell,zeta_star\n";
    CHECK_THROWS_AS(read_zeta_csv(empty), ConfigError);
}

TEST_CASE("manifest carries tool, version, config echo and a time bracket") {
    const auto dir = temp_dir() / "run1";
    fs::create_directories(dir);
    nlohmann::json cfg{{"experiment", "zeta_tfi"}, {"ells", {8, 16}}};
    const auto t0 = std::chrono::system_clock::now();
    write_manifest(dir, "scaling", cfg, t0);

    const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(m.at("tool") == "scaling");
    CHECK(m.at("version") == kToolVersion);
    CHECK(m.at("config") == cfg);
    CHECK(m.at("wall_seconds").get<double>() >= 0.0);
    const auto stamp = m.at("started_utc").get<std::string>();
    CHECK(stamp.size() == 20);
    CHECK(stamp.back() == 'Z');
    CHECK(stamp[10] == 'T');
}

TEST_CASE("output root env var overrides relative directories") {
    const auto root = temp_dir() / "root_override";
    setenv("CDKIT_OUTPUT_ROOT", root.c_str(), 1);
    const auto resolved = resolve_output_dir("sub/run");
    unsetenv("CDKIT_OUTPUT_ROOT");
    CHECK(resolved == root / "sub/run");
    CHECK(fs::is_directory(resolved));
    // absolute paths pass through untouched
    CHECK(resolve_output_dir(temp_dir()) == temp_dir());
}

TEST_CASE("run config round-trips losslessly") {
    RunConfig cfg;
    cfg.global.out_dir = "elsewhere";
    cfg.global.seed = 42;
    cfg.anneal.model.name = "NNN_TFI";
    cfg.anneal.model.n_sites = 10;
    cfg.anneal.model.magnetization = 0;
    cfg.anneal.protocol = "VARIATIONAL";
    cfg.anneal.integrator.fixed_step = true;
    cfg.scaling.ells = {2, 4, 8};
    cfg.scaling.zeta_csv = "zeta.csv";
    cfg.lanczos.seed_op = "Z0";
    cfg.lanczos.log_correction = true;
    cfg.spectral.range_lo = -8.5;

    const auto j = to_json(cfg);
    const RunConfig back = run_config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(back.anneal.model.magnetization == 0);
    CHECK(back.scaling.ells == std::vector<int>{2, 4, 8});
    CHECK(back.lanczos.log_correction);
    CHECK(back.spectral.range_lo == -8.5);
    CHECK_FALSE(back.spectral.range_hi.has_value());
}

TEST_CASE("unknown config keys are rejected with their section") {
    nlohmann::json j{{"anneal", {{"modle", {{"name", "TFI_CLEAN"}}}}}};
    try {
        run_config_from_json(j);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("modle") != std::string::npos);
        CHECK(msg.find("anneal") != std::string::npos);
    }

    nlohmann::json nested{{"scaling", {{"model", {{"n_site", 8}}}}}};
    try {
        run_config_from_json(nested);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("scaling.model") != std::string::npos);
    }

    nlohmann::json badtype{{"global", {{"workers", "three"}}}};
    CHECK_THROWS_AS(run_config_from_json(badtype), ConfigError);
}

TEST_CASE("config sections translate onto library types") {
    ModelConfig mc;
    mc.name = "XXZ_STATIC";
    mc.n_sites = 12;
    mc.Delta = 1.0;
    mc.magnetization = 0;
    const ModelSpec spec = make_model(mc);
    CHECK(spec.name == ModelName::XXZ_STATIC);
    CHECK(spec.n_sites == 12);
    CHECK(spec.magnetization == 0);

    mc.name = "NO_SUCH_MODEL";
    CHECK_THROWS_AS(make_model(mc), ConfigError);

    ScheduleConfig sc;
    sc.total_time = 0.25;
    sc.shape = "LINEAR";
    const Schedule s = make_schedule(sc);
    CHECK(s.total_time == 0.25);
    CHECK(s.shape == ScheduleShape::LINEAR);
    sc.total_time = -1.0;
    CHECK_THROWS_AS(make_schedule(sc), ConfigError);

    IntegratorConfig ic;
    ic.fixed_step = true;
    ic.fixed_steps = 512;
    ic.samples = 5;
    const EvolveOptions opt = make_evolve_options(ic);
    CHECK(opt.fixed_step);
    CHECK(opt.fixed_steps == 512);
    CHECK(opt.samples == 5);

    const PauliOperator seed = make_seed_op("Z0", 4);
    CHECK(seed.n_sites() == 4);
    CHECK_THROWS_AS(make_seed_op("Q0", 4), ConfigError);
    CHECK_THROWS_AS(make_seed_op("Z9", 4), ConfigError);
    CHECK_THROWS_AS(make_seed_op("Z", 4), ConfigError);
    CHECK_THROWS_AS(make_seed_op("Z1x", 4), ConfigError);
}
