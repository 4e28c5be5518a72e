#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "qsmpc_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string("\"") + QSMPC_CLI_PATH + "\" " + args + " >" + (kWork / "stdout.txt").string() +
                            " 2>" + (kWork / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config(const std::string& name) {
    return std::string(QSMPC_CONFIG_DIR) + "/" + name;
}

struct Workspace {
    Workspace() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
    }
};

std::size_t count_of(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1))
        ++n;
    return n;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("check exit codes") {
    Workspace w;
    CHECK(run("check --config " + config("reference.json")) == 0);
    CHECK(run("check --config " + config("identity_plant.json")) == 1);
    std::ofstream(kWork / "broken.json") << "{\"system\": 3}";
    CHECK(run("check --config " + (kWork / "broken.json").string()) == 2);
    CHECK(run("check --config " + (kWork / "missing.json").string()) == 2);
    CHECK(run("check") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("--help") == 0);
}

TEST_CASE("emulate then plot, reproducibly") {
    Workspace w;
    const std::string a = (kWork / "a").string();
    const std::string b = (kWork / "b").string();
    REQUIRE(run("emulate --config " + config("reference.json") + " --solver suboptimal --out " + a) == 0);
    REQUIRE(run("emulate --config " + config("reference.json") + " --solver suboptimal --out " + b) == 0);
    std::string files;
    for (int i = 0; i < 8; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "run_%03d.csv", i);
        REQUIRE(fs::exists(fs::path(a) / name));
        CHECK(slurp(fs::path(a) / name) == slurp(fs::path(b) / name));
        files += " " + (fs::path(a) / name).string();
    }
    const std::string svg = (kWork / "p.svg").string();
    CHECK(run("plot --traj" + files + " --out " + svg) == 0);
    CHECK(count_of(slurp(svg), "<polyline") == 16);
    CHECK(run("plot --traj " + (kWork / "none.csv").string() + " --out " + svg) == 2);
}

TEST_CASE("solver option validation") {
    Workspace w;
    const std::string out = (kWork / "o").string();
    CHECK(run("emulate --config " + config("reference.json") + " --solver classifier --out " + out) == 2);
    CHECK(run("emulate --config " + config("reference.json") + " --solver best --out " + out) == 2);
    CHECK(run("emulate --config " + config("reference.json") + " --solver sphere --model x.json --out " + out) ==
          2);
}

TEST_CASE("collect, train and emulate with the classifier") {
    Workspace w;
    const std::string data = (kWork / "data.csv").string();
    const std::string model = (kWork / "model.json").string();
    const std::string model2 = (kWork / "model2.json").string();
    REQUIRE(run("collect --config " + config("reference.json") + " --out " + data) == 0);
    CHECK(fs::exists(data + ".codec.json"));
    CHECK(count_of(slurp(data), "\n") == 481);
    const std::string train = "train --data " + data + " --epochs 3 --seed 4 --hidden 16,16 --out ";
    REQUIRE(run(train + model) == 0);
    REQUIRE(run(train + model2) == 0);
    CHECK(slurp(model) == slurp(model2));
    CHECK(run("emulate --config " + config("reference.json") + " --solver classifier --model " + model +
              " --out " + (kWork / "c").string()) == 0);
    CHECK(fs::exists(kWork / "c" / "run_007.csv"));
    CHECK(run("train --data " + (kWork / "missing.csv").string() + " --out " + model) == 2);
}

} // TEST_SUITE
