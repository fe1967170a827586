#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Sandbox {
    fs::path dir;

    Sandbox() {
        dir = fs::temp_directory_path() / ("optexec_cli_" + std::to_string(std::rand()) + "_" +
                                           std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(dir);
    }
    ~Sandbox() { fs::remove_all(dir); }

    std::string write(const std::string& name, const std::string& body) const {
        std::ofstream(dir / name) << body;
        return (dir / name).string();
    }

    int run(const std::string& args) const {
        const std::string cmd = std::string(OPTEXEC_CLI) + " " + args + " > " + (dir / "stdout.txt").string() + " 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string read(const std::string& name) const {
        std::ifstream in(dir / name);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("solve with constant impact") {
    Sandbox s;
    const std::string cfg = s.write("m.json", R"({"impact": {"kind": "constant", "eta0": 1}, "grid": {"n": 200}})");
    REQUIRE(s.run("solve --config " + cfg + " --out " + (s.dir / "out").string() + " --levels 10,100,1000") == 0);
    const json conv = json::parse(s.read("out/convergence.json"));
    CHECK(conv["y0"].size() == 3);
    CHECK(conv["y0"][2].get<double>() == doctest::Approx(1000.0 / 1001.0).epsilon(1e-10));
    CHECK(conv["config"]["model"]["seed"] == 0);
    const std::string csv = s.read("out/yfield.csv");
    CHECK(csv.rfind("# config: {", 0) == 0);
    CHECK(csv.find("t,y_mean,y_p05,y_p95,z_mean") != std::string::npos);
}

TEST_CASE("simulate and cost") {
    Sandbox s;
    const std::string cfg = s.write("m.json", R"({"impact": {"kind": "gbm", "eta0": 1, "mu": 0, "sigma": 0.3}, "grid": {"n": 100}, "paths": 500})");
    const std::string out = (s.dir / "out").string();
    REQUIRE(s.run("simulate --config " + cfg + " --out " + out + " --xi 2") == 0);
    CHECK(s.read("out/trajectory.csv").find("# config:") == 0);
    REQUIRE(s.run("cost --config " + cfg + " --out " + out + " --control linear") == 0);
    const json c = json::parse(s.read("out/cost.json"));
    CHECK(c["n_paths"] == 500);
    // linear schedule under a martingale η: J = E η-weighted = η0 ξ²/T = 1
    CHECK(c["estimate"].get<double>() == doctest::Approx(1.0).epsilon(0.05));
    CHECK(c["ci95"].size() == 2);
}

TEST_CASE("sweep") {
    Sandbox s;
    REQUIRE(s.run("sweep --out " + (s.dir / "out").string() + " --beta 1 --alphas 1,0.1,0.01") == 0);
    const std::string csv = s.read("out/sweep.csv");
    CHECK(csv.find("alpha,beta,quadrature,formula,abs_error") != std::string::npos);
    CHECK(s.run("sweep --out " + (s.dir / "out").string() + " --beta 0.5 --alphas 1") == 2);
}

TEST_CASE("error exit codes") {
    Sandbox s;
    const std::string out = (s.dir / "out").string();
    CHECK(s.run("solve --config " + s.write("a.json", R"({"bogus": 1})") + " --out " + out) == 2);
    CHECK(s.run("solve --config " + s.write("b.json", R"({"impact": {"kind": "power", "beta": 1}})") + " --out " + out) == 2);
    CHECK(s.run("solve --config " + s.write("c.json", "{not json") + " --out " + out) == 2);
    CHECK(s.run("solve --config " + (s.dir / "missing.json").string() + " --out " + out) == 2);
    CHECK(s.run("frobnicate") == 2);
}

}
