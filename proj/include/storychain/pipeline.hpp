#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "storychain/cluster.hpp"
#include "storychain/corpus.hpp"
#include "storychain/errors.hpp"
#include "storychain/fragmentation.hpp"
#include "storychain/represent.hpp"
#include "storychain/scenario.hpp"

namespace storychain {

// Flat "section.key" -> values view of a config file. Arrays hold several
// values; scalars hold one.
using ConfigValues = std::map<std::string, std::vector<std::string>>;

// Parses TOML-style text ([section] headers, key = value, arrays).
ConfigValues parse_config_text(std::istream& in, std::string_view source_name = "<config>");
ConfigValues load_config_file(const std::filesystem::path& path);

struct CorpusSource {
    std::optional<std::filesystem::path> path;
    std::optional<SyntheticCorpusSpec> synthetic;  // seed derived from the global seed
    std::string stopwords = "english";              // "english", "none" or a file path
};

struct RepresentationConfig {
    VectorKind kind = VectorKind::tfidf;
    TfidfConfig tfidf;
    std::optional<std::filesystem::path> word_vectors;
    std::optional<std::filesystem::path> doc_embeddings;
};

struct PipelineConfig {
    std::uint64_t seed = 0;
    std::filesystem::path out = "out";
    CorpusSource corpus;
    RepresentationConfig representation;
    ClusterParams clustering = AhcParams{};
    std::optional<GridSpec> sweep;  // when set, the best grid point is used
    bool geometry_metrics = true;
    FragmentationParams fragmentation;
    NoiseLabeling noise = NoiseLabeling::unique;
    std::vector<Scenario> scenarios{std::begin(kAllScenarios), std::end(kAllScenarios)};
    std::size_t n_users = 1000;
    std::size_t recs_per_user = 7;
    std::array<double, 3> profile_mix{0.70, 0.15, 0.15};

    // Checks every parameter and that referenced files exist. No side effects.
    void validate() const;
};

// Builds a config from flat values; unknown keys are a ParameterError.
PipelineConfig config_from_values(const ConfigValues& values);
// The resolved config as flat values, the form stored in the manifest.
ConfigValues config_to_values(const PipelineConfig& config);

// Derived stream seeds, recorded in the manifest.
std::uint64_t corpus_seed(const PipelineConfig& config);
std::uint64_t louvain_seed(const PipelineConfig& config);
std::uint64_t scenario_seed(const PipelineConfig& config, Scenario scenario);

std::string sha256_file(const std::filesystem::path& path);

// A stage of run_pipeline failed. The original error is kept for the exit code.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what, int exit_code)
        : Error("stage " + stage + ": " + what), stage_(std::move(stage)), exit_code_(exit_code) {}

    const std::string& stage() const noexcept { return stage_; }
    int exit_code() const noexcept { return exit_code_; }

private:
    std::string stage_;
    int exit_code_;
};

// 0 success, 2 configuration, 3 data, 4 infeasible scenario, 1 anything else.
int exit_code_for(const std::exception& e);

struct PipelineResult {
    std::vector<std::filesystem::path> artifacts;  // relative to cfg.out, in write order
};

// vectorize -> (sweep) -> cluster -> evaluate -> simulate -> fragment -> tables,
// then manifest.json. Validation runs first and writes nothing on failure. A
// failing stage leaves its predecessors' files plus a ".partial" marker.
PipelineResult run_pipeline(const PipelineConfig& config, unsigned threads = 1);

// Re-reads a manifest written by run_pipeline. Input digests are checked
// against the files on disk; a mismatch is a ValidationError.
PipelineConfig config_from_manifest(const std::filesystem::path& manifest_path);

// Building blocks shared with the single-stage subcommands.
Corpus load_pipeline_corpus(const PipelineConfig& config);
TokenizerConfig pipeline_tokenizer(const PipelineConfig& config);
VectorSpace build_vectors(const Corpus& corpus, const PipelineConfig& config, nlohmann::ordered_json* provenance = nullptr);
std::string labeling_name(VectorKind kind, const ClusterParams& params);

}  // namespace storychain
