#include <cstdlib>
#include <filesystem>
#include <string>

#include <doctest.h>

#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
    const std::string cmd =
        std::string("\"") + AGSR_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

fs::path temp_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / "agsr_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("help exits cleanly") {
    CHECK(run("--help") == 0);
    CHECK(run("train --help") == 0);
}

TEST_CASE("usage errors exit with 2") {
    CHECK(run("") == 2);                      // missing subcommand
    CHECK(run("--bogus") == 2);               // unknown flag
    CHECK(run("gen-data") == 2);              // missing required --out
    CHECK(run("frobnicate") == 2);            // unknown subcommand
    const fs::path dir = temp_dir("variant");
    CHECK(run("train --data x --out " + (dir / "o").string() +
              " --variant resnet") == 2); // not in the variant list
}

TEST_CASE("runtime failures exit with 1") {
    const fs::path dir = temp_dir("runtime");
    CHECK(run("gen-data --out " + (dir / "d").string() + " --samples 1") == 1);
    CHECK(run("train --data " + (dir / "missing.txt").string() + " --out " +
              (dir / "o").string()) == 1);
    CHECK(run("eval --model nope.agsr --data nope.txt --report " +
              (dir / "r").string()) == 1);
}

TEST_CASE("the full command pipeline runs end to end") {
    const fs::path dir = temp_dir("pipeline");
    const std::string data = (dir / "data").string();
    CHECK(run("gen-data --out " + data +
              " --samples 6 --lr-nodes 5 --hr-nodes 8 --seed 3") == 0);
    CHECK(fs::exists(dir / "data/manifest.txt"));

    const std::string model_dir = (dir / "run").string();
    CHECK(run("train --data " + data + "/manifest.txt --out " + model_dir +
              " --epochs 2 --seed 3") == 0);
    CHECK(fs::exists(dir / "run/model.agsr"));
    CHECK(fs::exists(dir / "run/history.csv"));

    const std::string report_dir = (dir / "report").string();
    CHECK(run("eval --model " + model_dir + "/model.agsr --data " + data +
              "/manifest.txt --report " + report_dir + " --residuals") == 0);
    CHECK(fs::exists(dir / "report/report.csv"));
    CHECK(fs::exists(dir / "report/residuals"));

    // resume for one more epoch on the saved checkpoint
    const std::string resumed = (dir / "resumed").string();
    CHECK(run("train --data " + data + "/manifest.txt --out " + resumed +
              " --epochs 3 --seed 3 --resume " + model_dir + "/model.agsr") == 0);
    CHECK(fs::exists(dir / "resumed/model.agsr"));
}
