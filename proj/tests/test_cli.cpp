#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "pathsg/cli.hpp"
#include "pathsg/errors.hpp"
#include "pathsg/experiment.hpp"
#include "pathsg/io.hpp"

using namespace pathsg;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kConfigs = PATHSG_SOURCE_DIR "/configs/";

struct Result {
    int code;
    std::string out, err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "pathsg");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch() {
    const fs::path d = fs::temp_directory_path() / "pathsg_cli_test";
    fs::create_directories(d);
    return d;
}

std::string write_config(const std::string& name, const json& j) {
    const fs::path p = scratch() / name;
    std::ofstream(p) << j.dump(2);
    return p.string();
}

json small_config() {
    return json::parse(R"({
      "name": "small", "seed": 3, "dt": 0.01,
      "paths": {"x": {"type": "constant", "value": 0.0}},
      "dynamics": {"bm": {"type": "sde", "drift": "zero", "diffusion": {"name": "constant", "sigma": 1.0}, "T": 1.0}},
      "observables": {"c": {"op": "left_lim", "f": "cos", "t": 0.0}},
      "expectation": {"dynamics": "bm", "n_paths": 500},
      "checks": [{"name": "semigroup_value", "observable": "c", "path": "x", "t": 0.5,
                  "expected": {"oracle": "heat_cosine", "x0": 0.0}, "abs_tol": 0.02}]
    })");
}

std::string config_error_pointer(const json& j) {
    try {
        Experiment ex(j);
        ex.run();
    } catch (const ConfigError& e) {
        return e.pointer();
    }
    return "<none>";
}

} // namespace

TEST_CASE("bundled axioms config passes") {
    const Result r = cli({"run", kConfigs + "axioms_dde.json", "--csv", (scratch() / "ax.csv").string(), "--json",
                          (scratch() / "ax.json").string()});
    CHECK(r.code == 0);
    std::ifstream in(scratch() / "ax.json");
    const json rep = json::parse(in);
    CHECK(rep["pass"] == true);
    CHECK(rep["checks"].size() == 9);
    CHECK(rep["checks"][0]["inputs_digest"].get<std::string>().size() == 16);
}

TEST_CASE("identical configs give byte-identical CSV") {
    const std::string cfg = write_config("small.json", small_config());
    const Result a = cli({"run", cfg});
    setenv("PATHSG_THREADS", "3", 1);
    const Result b = cli({"run", cfg});
    unsetenv("PATHSG_THREADS");
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind("check,item,value,stderr,z,tolerance,pass\n", 0) == 0);
}

TEST_CASE("exit codes") {
    json bad = small_config();
    bad["checks"][0]["name"] = "no_such_check";
    const Result r = cli({"run", write_config("bad.json", bad)});
    CHECK(r.code == 2);
    CHECK(r.err.find("/checks/0/name") != std::string::npos);

    json strict = small_config();
    strict["checks"][0]["expected"] = 5.0;
    CHECK(cli({"run", write_config("fail.json", strict)}).code == 1);

    CHECK(cli({"run", "/nonexistent/config.json"}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({"sweep", write_config("small2.json", small_config()), "--axis", "speed", "--values", "1"}).code == 2);
}

TEST_CASE("config errors carry JSON pointers") {
    json j = small_config();
    j["observables"]["c"]["f"] = "tan";
    CHECK(config_error_pointer(j) == "/observables/c/f");
    j = small_config();
    j["checks"][0]["observable"] = "missing";
    CHECK(config_error_pointer(j) == "/checks/0/observable");
    j = small_config();
    j.erase("seed");
    CHECK(config_error_pointer(j) == "/seed");
    j = small_config();
    j["paths"]["x"]["colour"] = 1;
    CHECK(config_error_pointer(j) == "/paths/x/colour");
    j = small_config();
    j["observables"]["loop"] = "loop";
    CHECK(config_error_pointer(j) == "/observables/loop");
    j = small_config();
    j["dynamics"]["bm"]["drift"] = json{{"name", "linear_delay"}};
    CHECK(config_error_pointer(j) == "/dynamics/bm/drift");
    j = small_config();
    j["checks"][0]["t"] = 5.0;
    // reading past the horizon is a computation error, reported on the check
    const RunReport rep = Experiment(j).run();
    CHECK_FALSE(rep.pass());
    CHECK(rep.checks[0].error.find("HorizonExceeded") != std::string::npos);
}

TEST_CASE("sweeps") {
    SUBCASE("empty values") {
        const Result r = cli({"sweep", write_config("s.json", small_config()), "--axis", "t", "--values", ""});
        CHECK(r.code == 0);
        CHECK(r.out == "t,check,item,value,stderr,z,tolerance,pass\n");
    }
    SUBCASE("dt sweep on the linear delay problem halves the error") {
        const auto rows = Experiment::from_file(kConfigs + "dde_linear.json")
                              .sweep(SweepAxis::Dt, {0.004, 0.002, 0.001, 0.0005});
        REQUIRE(rows.size() == 4);
        for (std::size_t i = 1; i < rows.size(); ++i)
            CHECK(rows[i - 1].item.value / rows[i].item.value == doctest::Approx(2.0).epsilon(0.15));
    }
    SUBCASE("n_paths sweep: stderr scales like 1/sqrt(n)") {
        const auto rows = Experiment::from_file(kConfigs + "heat_semigroup.json")
                              .sweep(SweepAxis::NPaths, {1000, 4000, 16000});
        REQUIRE(rows.size() == 3);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double ratio = rows[i - 1].item.se / rows[i].item.se;
            CHECK(ratio > 2.0 / 1.5);
            CHECK(ratio < 2.0 * 1.5);
        }
    }
}

TEST_CASE("path files and the j1 command") {
    const SampledPath x = SampledPath::from_function(PathKind::Cadlag, -1.0, 1.0, 0.25, 1, [](double t) {
        return StatePoint{t >= 0 ? 1.0 : 0.0};
    });
    const SampledPath y = shift_steps(x, 1);
    const json jx = path_to_json(x);
    CHECK(path_from_json(jx) == x);
    const std::string fx = (scratch() / "x.json").string(), fy = (scratch() / "y.json").string();
    std::ofstream(fx) << jx.dump();
    std::ofstream(fy) << path_to_json(y).dump();
    const Result r = cli({"j1", fx, fy, "--a", "-1", "--b", "1"});
    CHECK(r.code == 0);
    const json m = json::parse(r.out);
    CHECK(m.contains("witness_knots"));
    CHECK(m["value"].get<double>() > 0);
    json broken = jx;
    broken["values"][2] = json::array({1.0, 2.0});
    try {
        path_from_json(broken);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.pointer() == "/values/2");
    }
    std::ostringstream csv;
    write_path_csv(csv, x);
    CHECK(csv.str().rfind("time,coord_0\n-1,0\n", 0) == 0);
}

TEST_CASE("solve-dde and simulate commands") {
    const Result s = cli({"solve-dde", kConfigs + "dde_linear.json"});
    CHECK(s.code == 0);
    const auto last = s.out.rfind("\n2,");
    REQUIRE(last != std::string::npos);
    CHECK(std::stod(s.out.substr(last + 3)) == doctest::Approx(3.5).epsilon(2e-3));
    const Result a = cli({"simulate", kConfigs + "heat_semigroup.json", "--trajectory", "4"});
    const Result b = cli({"simulate", kConfigs + "heat_semigroup.json", "--trajectory", "4", "--json"});
    CHECK(a.code == 0);
    CHECK(b.code == 0);
    const SampledPath p = path_from_json(json::parse(b.out));
    CHECK(p.t_max() == doctest::Approx(1.0));
    CHECK(p.evaluate(0.0)[0] == 0.3);
}
