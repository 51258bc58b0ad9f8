#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "storychain/pipeline.hpp"

using namespace storychain;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("storychain_pipe_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

ConfigValues parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config_text(in);
}

const char* kSmall = R"(
seed = 3

[corpus]
synthetic = true
chains = 7
docs_per_chain = 10
vocab_per_chain = 30
shared_vocab = 10

[cluster]
method = "ahc"
linkage = "ward"
threshold = 1.0

[sweep]
enabled = true
thresholds = "0.2:2.0:0.2"

[scenarios]
users = 60
)";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("config parsing, ranges and unknown keys") {
    const auto cfg = config_from_values(parse(kSmall));
    CHECK(cfg.seed == 3);
    REQUIRE(cfg.corpus.synthetic.has_value());
    CHECK(cfg.corpus.synthetic->docs_per_chain == 10);
    CHECK(cfg.n_users == 60);
    REQUIRE(cfg.sweep.has_value());
    CHECK(std::get<AhcGrid>(*cfg.sweep).thresholds.size() == 10);
    CHECK(std::get<AhcGrid>(*cfg.sweep).linkages.size() == 4);
    CHECK_NOTHROW(cfg.validate());

    CHECK_THROWS_AS(config_from_values(parse("[cluster]\nlinkag = \"ward\"\n")), ParameterError);
    CHECK_THROWS_AS(config_from_values(parse("[cluster]\nlinkage = \"centroid\"\n")), ParameterError);
    CHECK_THROWS_AS(config_from_values(parse("[cluster]\nmethod = \"dbscan\"\nlinkage = \"ward\"\n")), ParameterError);
    CHECK_THROWS_AS(config_from_values(parse("[frag]\np = \"high\"\n")), ParameterError);
    CHECK_THROWS_AS(config_from_values(parse("[corpus]\nchains = 3\n")), ParameterError);
}

TEST_CASE("validation catches bad values before anything runs") {
    auto cfg = config_from_values(parse(kSmall));
    cfg.fragmentation.rbo.p = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    cfg = config_from_values(parse(kSmall));
    cfg.corpus.path = "/nonexistent/corpus.jsonl";
    CHECK_THROWS_AS(cfg.validate(), ParameterError);  // two sources
    cfg.corpus.synthetic.reset();
    CHECK_THROWS(cfg.validate());
    cfg = config_from_values(parse(kSmall));
    cfg.n_users = 1;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);

    TempDir tmp;
    cfg = config_from_values(parse(kSmall));
    cfg.out = tmp.path / "never";
    cfg.clustering = AhcParams{Linkage::ward, -2.0};
    cfg.sweep.reset();
    CHECK_THROWS(run_pipeline(cfg));
    CHECK_FALSE(fs::exists(cfg.out));
}

TEST_CASE("config values round-trip") {
    const auto cfg = config_from_values(parse(kSmall));
    const auto values = config_to_values(cfg);
    CHECK(values.count("out") == 0);
    const auto again = config_to_values(config_from_values(values));
    CHECK(again == values);
}

TEST_CASE("seeds are derived per stream") {
    PipelineConfig a, b;
    b.seed = 1;
    CHECK(corpus_seed(a) != corpus_seed(b));
    CHECK(scenario_seed(a, Scenario::low) != scenario_seed(a, Scenario::high));
    CHECK(louvain_seed(a) != corpus_seed(a));
}

TEST_CASE("full run writes artifacts, a manifest, and reruns identically") {
    TempDir tmp;
    auto cfg = config_from_values(parse(kSmall));
    cfg.out = tmp.path / "run1";
    const auto result = run_pipeline(cfg, 1);
    for (const char* name : {"corpus.jsonl", "vectors.json", "sweep.csv", "clusters.csv", "clusters.json", "metrics.json",
                             "table1.csv", "error_table.csv", "recs_low.jsonl", "recs_high.jsonl",
                             "recs_balanced.jsonl", "frag_low.json", "table3.csv", "table3.txt", "manifest.json"}) {
        CHECK_MESSAGE(fs::exists(cfg.out / name), name);
    }
    CHECK_FALSE(fs::exists(cfg.out / ".partial"));
    CHECK(result.artifacts.back() == "manifest.json");

    const auto manifest = nlohmann::json::parse(slurp(cfg.out / "manifest.json"));
    CHECK(manifest["seeds"]["global"] == 3);
    for (const auto& art : manifest["artifacts"]) {
        CHECK(art["sha256"] == sha256_file(cfg.out / art["path"].get<std::string>()));
    }

    auto threaded = cfg;
    threaded.out = tmp.path / "run4";
    run_pipeline(threaded, 4);
    for (const auto& art : manifest["artifacts"]) {
        const auto p = art["path"].get<std::string>();
        CHECK_MESSAGE(slurp(cfg.out / p) == slurp(threaded.out / p), p);
    }
    CHECK(slurp(cfg.out / "manifest.json") == slurp(threaded.out / "manifest.json"));

    // Rerun from the manifest into its own directory.
    const fs::path copy = tmp.path / "copy";
    fs::create_directories(copy);
    fs::copy_file(cfg.out / "manifest.json", copy / "manifest.json");
    const auto back = config_from_manifest(copy / "manifest.json");
    CHECK(back.out == copy);
    run_pipeline(back, 2);
    CHECK(slurp(copy / "table3.csv") == slurp(cfg.out / "table3.csv"));
    CHECK(slurp(copy / "manifest.json") == slurp(cfg.out / "manifest.json"));
}

TEST_CASE("a failing stage leaves a partial marker") {
    TempDir tmp;
    auto cfg = config_from_values(parse(kSmall));
    cfg.out = tmp.path / "bad";
    cfg.recs_per_user = 8;  // more than the seven chains
    try {
        run_pipeline(cfg);
        FAIL("expected the simulate stage to fail");
    } catch (const StageError& e) {
        CHECK(e.stage() == "simulate");
        CHECK(e.exit_code() == 4);
        CHECK(exit_code_for(e) == 4);
    }
    REQUIRE(fs::exists(cfg.out / ".partial"));
    const auto partial = nlohmann::json::parse(slurp(cfg.out / ".partial"));
    CHECK(partial["stage"] == "simulate");
    CHECK(fs::exists(cfg.out / "clusters.csv"));
    CHECK_FALSE(fs::exists(cfg.out / "manifest.json"));

    // A later successful run clears the marker.
    cfg.recs_per_user = 7;
    run_pipeline(cfg);
    CHECK_FALSE(fs::exists(cfg.out / ".partial"));
}

TEST_CASE("manifest input digests are checked") {
    TempDir tmp;
    const auto corpus = generate_synthetic_corpus({4, 8, 20, 5, 2});
    save_corpus(corpus, tmp.path / "corpus.jsonl");
    auto cfg = config_from_values(parse("[corpus]\npath = \"" + (tmp.path / "corpus.jsonl").string() +
                                        "\"\n[scenarios]\nnames = [\"high\"]\nusers = 20\nrecs = 3\n"));
    cfg.out = tmp.path / "out";
    run_pipeline(cfg);
    CHECK_NOTHROW(config_from_manifest(cfg.out / "manifest.json"));
    std::ofstream(tmp.path / "corpus.jsonl", std::ios::app) << "\n";
    CHECK_THROWS_AS(config_from_manifest(cfg.out / "manifest.json"), ValidationError);
}

TEST_CASE("exit codes and labeling names") {
    CHECK(exit_code_for(ParameterError("x")) == 2);
    CHECK(exit_code_for(ValidationError("x")) == 3);
    CHECK(exit_code_for(std::runtime_error("x")) == 1);
    CHECK(labeling_name(VectorKind::tfidf, AhcParams{}) == "BoW*AHC");
    CHECK(labeling_name(VectorKind::doc_embedding, GraphParams{}) == "DocEmb*Louvain");
}
