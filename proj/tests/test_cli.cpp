#include "doctest.h"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "tnpoly/io.hpp"

namespace fs = std::filesystem;
using tnpoly::io::Json;

namespace {

struct Run {
    int status = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(TNPOLY_CLI_PATH) + " " + args + " 2>/dev/null";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / ("tnpoly_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("dims") {
    const Run r = run("dims --L 10 --P 3");
    CHECK(r.status == 0);
    CHECK(r.out.find("full 1331\n") != std::string::npos);
    CHECK(r.out.find("symmetric 286\n") != std::string::npos);
    CHECK(r.out.find("dual 4194304\n") != std::string::npos);
}

TEST_CASE("entanglement of a product tensor") {
    const fs::path dir = scratch();
    // (1 + h1)(1 + h2) in the dual representation with P = 1: a product over lag sites
    write(dir / "w.json", R"({"rep":"dual","L":2,"P":1,"shape":[2,2,2],"data":[1,1,1,1,0,0,0,0]})");
    const Run r = run("ee --in " + (dir / "w.json").string() + " --out " + (dir / "ee.csv").string());
    CHECK(r.status == 0);
    const Json report = Json::parse(r.out);
    CHECK(report["class"] == "Disentangled");
    std::ifstream in(dir / "ee.csv");
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("cut", 0) == 0) continue;
        std::stringstream ss(line);
        std::string cut, s;
        std::getline(ss, cut, ',');
        std::getline(ss, s, ',');
        CHECK(std::abs(std::stod(s)) < 1e-12);
        ++rows;
    }
    CHECK(rows == 2);
    fs::remove_all(dir);
}

TEST_CASE("generate, fit and forecast") {
    const fs::path dir = scratch();
    const std::string series = (dir / "s.csv").string(), model = (dir / "m.json").string();
    REQUIRE(run("gen --L 2 --P 2 --D 2 --scale 3 --T 150 --noise 0 --seed 5 --out " + series +
                " --truth-out " + (dir / "truth.json").string())
                .status == 0);
    const Run fit = run("fit --in " + series + " --L 2 --P 2 --D 2 --seed 1 --iterations 3000 --out " + model);
    REQUIRE(fit.status == 0);
    const Json report = Json::parse(fit.out);
    CHECK(report["train_rmse"].get<double>() < 1e-3);
    CHECK(report.contains("provenance"));

    const Run truth = run("forecast --model " + (dir / "truth.json").string() + " --series " + series + " --horizon 5");
    const Run fitted = run("forecast --model " + model + " --series " + series + " --horizon 5");
    REQUIRE(truth.status == 0);
    REQUIRE(fitted.status == 0);
    auto values = [](const std::string& csv) {
        std::vector<double> v;
        std::stringstream ss(csv);
        std::string line;
        while (std::getline(ss, line)) {
            if (line.empty() || line[0] == '#' || line.rfind("step", 0) == 0) continue;
            v.push_back(std::stod(line.substr(line.find(',') + 1)));
        }
        return v;
    };
    const auto a = values(truth.out), b = values(fitted.out);
    REQUIRE(a.size() == 5);
    REQUIRE(b.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(a[k] - b[k]) < 1e-2);
    fs::remove_all(dir);
}

TEST_CASE("exit codes") {
    const fs::path dir = scratch();
    CHECK(run("gen --L 2 --P 2").status == 1);                        // missing seed
    CHECK(run("ee --in " + (dir / "missing.json").string()).status == 1);
    CHECK(run("dims --L 2").status == 1);                             // missing P
    write(dir / "bad.json", "{ not json");
    CHECK(run("symmetrize --in " + (dir / "bad.json").string()).status == 1);
    write(dir / "big.json", R"({"rep":"dual","L":1,"P":1,"shape":[2,2],"data":[0,0,0,1]})");
    CHECK(run("from-dual --in " + (dir / "big.json").string()).status == 1);  // off-constraint entry
    CHECK(run("dims --L 40 --P 40").status == 2);                     // dimension overflow
    CHECK(run("gen --L 1 --P 2 --scale 1000 --F identity --init 3 --T 50 --seed 1").status == 2);
    fs::remove_all(dir);
}
