#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "doctest.h"
#include "storychain/corpus.hpp"

namespace fs = std::filesystem;

namespace {

struct Sandbox {
    fs::path dir;
    Sandbox() {
        std::random_device rd;
        dir = fs::temp_directory_path() / ("storychain_cli_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(dir);
    }
    ~Sandbox() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }

    // Runs the CLI with stdout/stderr captured to files in the sandbox.
    int run(const std::string& args) const {
        const std::string cmd = std::string("\"") + STORYCHAIN_CLI + "\" " + args + " > \"" + (dir / "stdout").string() +
                                "\" 2> \"" + (dir / "stderr").string() + "\"";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    std::string read(const std::string& name) const {
        std::ifstream in(dir / name);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }
    std::string path(const std::string& name) const { return "\"" + (dir / name).string() + "\""; }
};

const char* kSynthetic =
    "--set corpus.synthetic=true --set corpus.chains=7 --set corpus.docs_per_chain=10 --set scenarios.users=40 ";

}  // namespace

TEST_CASE("help and parse errors") {
    Sandbox s;
    CHECK(s.run("--help") == 0);
    CHECK(s.read("stdout").find("simulate") != std::string::npos);
    CHECK(s.run("frobnicate") == 2);
    CHECK(s.run("run --threads 0") == 2);
}

TEST_CASE("bad linkage fails fast with exit 2 and writes nothing") {
    Sandbox s;
    CHECK(s.run(std::string(kSynthetic) + "--set cluster.linkage=centroid --out " + s.path("out") + " run") == 2);
    CHECK(s.read("stderr").find("centroid") != std::string::npos);
    CHECK_FALSE(fs::exists(s.dir / "out"));
}

TEST_CASE("infeasible scenario exits 4 with a partial marker") {
    Sandbox s;
    CHECK(s.run(std::string(kSynthetic) + "--set scenarios.recs=8 --out " + s.path("out") + " run") == 4);
    CHECK(fs::exists(s.dir / "out" / ".partial"));
}

TEST_CASE("run then rerun from manifest") {
    Sandbox s;
    REQUIRE(s.run(std::string(kSynthetic) + "--seed 5 --out " + s.path("out") + " run") == 0);
    REQUIRE(fs::exists(s.dir / "out" / "manifest.json"));
    const std::string table = s.read("out/table3.csv");
    CHECK(table.find("Gold Labels") != std::string::npos);
    fs::create_directories(s.dir / "again");
    fs::copy_file(s.dir / "out" / "manifest.json", s.dir / "again" / "manifest.json");
    REQUIRE(s.run("--threads 3 run --from-manifest " + s.path("again/manifest.json")) == 0);
    CHECK(s.read("again/table3.csv") == table);
}

TEST_CASE("single-stage subcommands chain through files") {
    Sandbox s;
    storychain::save_corpus(storychain::generate_synthetic_corpus({5, 10, 30, 10, 1}), s.dir / "corpus.jsonl");
    const std::string base = "--set corpus.path=" + s.path("corpus.jsonl") + " --set scenarios.users=30 ";

    REQUIRE(s.run(base + "--format csv --out " + s.path("o") + " cluster") == 0);
    CHECK(fs::exists(s.dir / "o" / "clusters.csv"));
    REQUIRE(s.run(base + "--out " + s.path("o") + " eval --clusters " + s.path("o/clusters.csv")) == 0);
    REQUIRE(s.run(base + "--set scenarios.names=high --out " + s.path("o") + " simulate") == 0);
    CHECK(fs::exists(s.dir / "o" / "recs_high.jsonl"));

    REQUIRE(s.run(base + "--format json frag --recs " + s.path("o/recs_high.jsonl")) == 0);
    CHECK(s.read("stdout").find("\"aggregate\"") != std::string::npos);
    REQUIRE(s.run(base + "--format csv table --recs high=" + s.path("o/recs_high.jsonl") + " --labeling mine=" +
                  s.path("o/clusters.csv")) == 0);
    CHECK(s.read("stdout").rfind("labeling,high", 0) == 0);
    CHECK(s.read("stdout").find("mine") != std::string::npos);

    REQUIRE(s.run(base + "--set sweep.thresholds=0.5,1.0,1.5 --format csv sweep") == 0);
    CHECK(s.read("stdout").rfind("method,params", 0) == 0);

    // Unmapped recommendation ids are a data error.
    std::ofstream(s.dir / "bad.jsonl") << "{\"user_id\":\"a\",\"recs\":[\"nope\"]}\n{\"user_id\":\"b\",\"recs\":[\"nope\"]}\n";
    CHECK(s.run(base + "frag --recs " + s.path("bad.jsonl")) == 3);
    CHECK(s.read("stderr").find("nope") != std::string::npos);
}
