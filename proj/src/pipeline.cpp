#include "storychain/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <openssl/evp.h>

#include "storychain/intrinsic_eval.hpp"
#include "storychain/rng.hpp"

namespace storychain {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// config text

ConfigValues parse_config_text(std::istream& in, std::string_view source_name) {
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_config(in);
    } catch (const CLI::Error& e) {
        throw ParameterError(fmt::format("{}: {}", source_name, e.what()));
    }
    ConfigValues out;
    for (const auto& item : items) {
        if (item.name == "--" || item.name == "++") continue;
        auto& slot = out[item.fullname()];
        slot = item.inputs;
    }
    return out;
}

ConfigValues load_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("cannot open config file " + path.string());
    return parse_config_text(in, path.string());
}

namespace {

// ---------------------------------------------------------------------------
// value conversion

class Reader {
public:
    explicit Reader(const ConfigValues& values) : values_(values) {}

    bool has(const std::string& key) {
        used_.insert(key);
        return values_.count(key) != 0;
    }

    const std::vector<std::string>& list(const std::string& key) {
        used_.insert(key);
        return values_.at(key);
    }

    std::string str(const std::string& key) {
        const auto& v = list(key);
        if (v.size() != 1) throw ParameterError(fmt::format("config key {} takes a single value", key));
        return v.front();
    }

    double real(const std::string& key) { return to_real(key, str(key)); }
    std::size_t count(const std::string& key) { return to_count(key, str(key)); }

    bool flag(const std::string& key) {
        const std::string s = str(key);
        if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
        if (s == "false" || s == "0" || s == "no" || s == "off") return false;
        throw ParameterError(fmt::format("config key {}: expected a boolean, got \"{}\"", key, s));
    }

    static double to_real(const std::string& key, const std::string& s) {
        double x = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            throw ParameterError(fmt::format("config key {}: expected a number, got \"{}\"", key, s));
        }
        return x;
    }

    static std::size_t to_count(const std::string& key, const std::string& s) {
        std::uint64_t x = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            throw ParameterError(fmt::format("config key {}: expected a non-negative integer, got \"{}\"", key, s));
        }
        return static_cast<std::size_t>(x);
    }

    // Numbers, or "start:stop:step" ranges, flattened in order.
    std::vector<double> reals(const std::string& key) {
        std::vector<double> out;
        for (const auto& s : list(key)) {
            if (s.find(':') == std::string::npos) {
                out.push_back(to_real(key, s));
                continue;
            }
            std::vector<double> parts;
            std::stringstream ss(s);
            std::string part;
            while (std::getline(ss, part, ':')) parts.push_back(to_real(key, part));
            if (parts.size() != 3 || !(parts[2] > 0.0)) {
                throw ParameterError(fmt::format("config key {}: range \"{}\" must be start:stop:step", key, s));
            }
            for (double x : arange(parts[0], parts[1], parts[2])) out.push_back(x);
        }
        return out;
    }

    void reject_unknown() const {
        for (const auto& [key, v] : values_) {
            if (used_.count(key) == 0) throw ParameterError(fmt::format("unknown config key \"{}\"", key));
        }
    }

private:
    const ConfigValues& values_;
    std::set<std::string> used_;
};

std::string num(double x) { return fmt::format("{}", x); }

template <class T>
std::vector<std::string> nums(const std::vector<T>& xs) {
    std::vector<std::string> out;
    for (const auto& x : xs) out.push_back(fmt::format("{}", x));
    return out;
}

std::string_view noise_name(NoiseLabeling n) { return n == NoiseLabeling::shared ? "shared" : "unique"; }

NoiseLabeling parse_noise(std::string_view s) {
    if (s == "unique") return NoiseLabeling::unique;
    if (s == "shared") return NoiseLabeling::shared;
    throw ParameterError(fmt::format("unknown noise labeling \"{}\" (expected unique or shared)", s));
}

std::string_view method_key(const ClusterParams& params) {
    switch (params.index()) {
        case 0: return "ahc";
        case 1: return "dbscan";
        default: return "louvain";
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// config <-> values

PipelineConfig config_from_values(const ConfigValues& values) {
    Reader r(values);
    PipelineConfig cfg;
    if (r.has("seed")) cfg.seed = r.count("seed");
    if (r.has("out")) cfg.out = r.str("out");

    if (r.has("corpus.path")) cfg.corpus.path = r.str("corpus.path");
    if (r.has("corpus.synthetic") && r.flag("corpus.synthetic")) {
        SyntheticCorpusSpec s;
        if (r.has("corpus.chains")) s.n_chains = r.count("corpus.chains");
        if (r.has("corpus.docs_per_chain")) s.docs_per_chain = r.count("corpus.docs_per_chain");
        if (r.has("corpus.vocab_per_chain")) s.vocab_per_chain = r.count("corpus.vocab_per_chain");
        if (r.has("corpus.shared_vocab")) s.shared_vocab = r.count("corpus.shared_vocab");
        if (r.has("corpus.words_per_doc")) s.words_per_doc = r.count("corpus.words_per_doc");
        if (r.has("corpus.chain_word_rate")) s.chain_word_rate = r.real("corpus.chain_word_rate");
        cfg.corpus.synthetic = s;
    } else {
        for (const char* k : {"corpus.chains", "corpus.docs_per_chain", "corpus.vocab_per_chain", "corpus.shared_vocab",
                              "corpus.words_per_doc", "corpus.chain_word_rate"}) {
            if (r.has(k)) throw ParameterError(fmt::format("config key {} needs corpus.synthetic = true", k));
        }
    }
    if (r.has("corpus.stopwords")) cfg.corpus.stopwords = r.str("corpus.stopwords");

    if (r.has("represent.kind")) cfg.representation.kind = parse_vector_kind(r.str("represent.kind"));
    if (r.has("represent.normalize")) cfg.representation.tfidf.normalize = r.flag("represent.normalize");
    if (r.has("represent.word_vectors")) cfg.representation.word_vectors = r.str("represent.word_vectors");
    if (r.has("represent.embeddings")) cfg.representation.doc_embeddings = r.str("represent.embeddings");

    const std::string method = r.has("cluster.method") ? r.str("cluster.method") : "ahc";
    auto forbid = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys) {
            if (r.has(k)) throw ParameterError(fmt::format("config key {} does not apply to method {}", k, method));
        }
    };
    if (method == "ahc") {
        AhcParams p;
        if (r.has("cluster.linkage")) p.linkage = parse_linkage(r.str("cluster.linkage"));
        if (r.has("cluster.threshold")) p.distance_threshold = r.real("cluster.threshold");
        forbid({"cluster.epsilon", "cluster.min_samples", "cluster.edge_threshold", "cluster.resolution"});
        cfg.clustering = p;
    } else if (method == "dbscan") {
        DbscanParams p;
        if (r.has("cluster.epsilon")) p.epsilon = r.real("cluster.epsilon");
        if (r.has("cluster.min_samples")) p.min_samples = r.count("cluster.min_samples");
        forbid({"cluster.linkage", "cluster.threshold", "cluster.edge_threshold", "cluster.resolution"});
        cfg.clustering = p;
    } else if (method == "louvain") {
        GraphParams p;
        if (r.has("cluster.edge_threshold")) p.edge_threshold = r.real("cluster.edge_threshold");
        if (r.has("cluster.resolution")) p.resolution = r.real("cluster.resolution");
        forbid({"cluster.linkage", "cluster.threshold", "cluster.epsilon", "cluster.min_samples"});
        cfg.clustering = p;
    } else {
        throw ParameterError(fmt::format("unknown clustering method \"{}\" (expected ahc, dbscan or louvain)", method));
    }

    if (r.has("sweep.enabled") && r.flag("sweep.enabled")) {
        if (method == "ahc") {
            AhcGrid g;
            if (r.has("sweep.linkages")) {
                g.linkages.clear();
                for (const auto& s : r.list("sweep.linkages")) g.linkages.push_back(parse_linkage(s));
            }
            g.thresholds = r.has("sweep.thresholds") ? r.reals("sweep.thresholds") : arange(1, 150, 1);
            cfg.sweep = g;
        } else if (method == "dbscan") {
            DbscanGrid g;
            g.epsilons = r.has("sweep.epsilons") ? r.reals("sweep.epsilons") : arange(1, 150, 1);
            if (r.has("sweep.min_samples")) {
                for (double x : r.reals("sweep.min_samples")) {
                    if (x < 0 || x != std::floor(x)) throw ParameterError("sweep.min_samples must be integers");
                    g.min_samples.push_back(static_cast<std::size_t>(x));
                }
            } else {
                for (std::size_t m = 1; m <= 150; ++m) g.min_samples.push_back(m);
            }
            cfg.sweep = g;
        } else {
            LouvainGrid g;
            g.edge_thresholds = r.has("sweep.edge_thresholds") ? r.reals("sweep.edge_thresholds") : arange(0.1, 0.9, 0.1);
            if (r.has("sweep.resolutions")) g.resolutions = r.reals("sweep.resolutions");
            cfg.sweep = g;
        }
    }
    for (const char* k : {"sweep.linkages", "sweep.thresholds", "sweep.epsilons", "sweep.min_samples",
                          "sweep.edge_thresholds", "sweep.resolutions"}) {
        if (!cfg.sweep && r.has(k)) throw ParameterError(fmt::format("config key {} needs sweep.enabled = true", k));
    }

    if (r.has("eval.geometry")) cfg.geometry_metrics = r.flag("eval.geometry");
    if (r.has("frag.p")) cfg.fragmentation.rbo.p = r.real("frag.p");
    if (r.has("frag.label_lists")) cfg.fragmentation.mode = parse_label_list_mode(r.str("frag.label_lists"));
    if (r.has("frag.noise")) cfg.noise = parse_noise(r.str("frag.noise"));

    if (r.has("scenarios.names")) {
        cfg.scenarios.clear();
        for (const auto& s : r.list("scenarios.names")) cfg.scenarios.push_back(parse_scenario(s));
    }
    if (r.has("scenarios.users")) cfg.n_users = r.count("scenarios.users");
    if (r.has("scenarios.recs")) cfg.recs_per_user = r.count("scenarios.recs");
    if (r.has("scenarios.profile_mix")) {
        const auto mix = r.reals("scenarios.profile_mix");
        if (mix.size() != 3) throw ParameterError("scenarios.profile_mix takes three fractions");
        std::copy(mix.begin(), mix.end(), cfg.profile_mix.begin());
    }
    r.reject_unknown();
    return cfg;
}

ConfigValues config_to_values(const PipelineConfig& cfg) {
    ConfigValues v;
    v["seed"] = {std::to_string(cfg.seed)};
    if (cfg.corpus.path) v["corpus.path"] = {cfg.corpus.path->string()};
    if (cfg.corpus.synthetic) {
        const auto& s = *cfg.corpus.synthetic;
        v["corpus.synthetic"] = {"true"};
        v["corpus.chains"] = {std::to_string(s.n_chains)};
        v["corpus.docs_per_chain"] = {std::to_string(s.docs_per_chain)};
        v["corpus.vocab_per_chain"] = {std::to_string(s.vocab_per_chain)};
        v["corpus.shared_vocab"] = {std::to_string(s.shared_vocab)};
        v["corpus.words_per_doc"] = {std::to_string(s.words_per_doc)};
        v["corpus.chain_word_rate"] = {num(s.chain_word_rate)};
    }
    v["corpus.stopwords"] = {cfg.corpus.stopwords};

    const auto& rep = cfg.representation;
    v["represent.kind"] = {std::string(to_string(rep.kind))};
    if (rep.kind == VectorKind::tfidf) v["represent.normalize"] = {rep.tfidf.normalize ? "true" : "false"};
    if (rep.word_vectors) v["represent.word_vectors"] = {rep.word_vectors->string()};
    if (rep.doc_embeddings) v["represent.embeddings"] = {rep.doc_embeddings->string()};

    v["cluster.method"] = {std::string(method_key(cfg.clustering))};
    if (const auto* p = std::get_if<AhcParams>(&cfg.clustering)) {
        v["cluster.linkage"] = {std::string(to_string(p->linkage))};
        v["cluster.threshold"] = {num(p->distance_threshold)};
    } else if (const auto* p = std::get_if<DbscanParams>(&cfg.clustering)) {
        v["cluster.epsilon"] = {num(p->epsilon)};
        v["cluster.min_samples"] = {std::to_string(p->min_samples)};
    } else {
        const auto& g = std::get<GraphParams>(cfg.clustering);
        v["cluster.edge_threshold"] = {num(g.edge_threshold)};
        v["cluster.resolution"] = {num(g.resolution)};
    }
    if (cfg.sweep) {
        v["sweep.enabled"] = {"true"};
        if (const auto* g = std::get_if<AhcGrid>(&*cfg.sweep)) {
            std::vector<std::string> names;
            for (Linkage l : g->linkages) names.emplace_back(to_string(l));
            v["sweep.linkages"] = names;
            v["sweep.thresholds"] = nums(g->thresholds);
        } else if (const auto* g = std::get_if<DbscanGrid>(&*cfg.sweep)) {
            v["sweep.epsilons"] = nums(g->epsilons);
            v["sweep.min_samples"] = nums(g->min_samples);
        } else {
            const auto& lg = std::get<LouvainGrid>(*cfg.sweep);
            v["sweep.edge_thresholds"] = nums(lg.edge_thresholds);
            v["sweep.resolutions"] = nums(lg.resolutions);
        }
    }
    v["eval.geometry"] = {cfg.geometry_metrics ? "true" : "false"};
    v["frag.p"] = {num(cfg.fragmentation.rbo.p)};
    v["frag.label_lists"] = {std::string(to_string(cfg.fragmentation.mode))};
    v["frag.noise"] = {std::string(noise_name(cfg.noise))};
    std::vector<std::string> names;
    for (Scenario s : cfg.scenarios) names.emplace_back(to_string(s));
    v["scenarios.names"] = names;
    v["scenarios.users"] = {std::to_string(cfg.n_users)};
    v["scenarios.recs"] = {std::to_string(cfg.recs_per_user)};
    v["scenarios.profile_mix"] = nums(std::vector<double>(cfg.profile_mix.begin(), cfg.profile_mix.end()));
    return v;
}

// ---------------------------------------------------------------------------
// validation

namespace {

void require_file(const fs::path& path, std::string_view what) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        throw ParameterError(fmt::format("{} {} does not exist", what, path.string()));
    }
}

bool stopwords_from_file(const std::string& s) { return s != "english" && s != "none"; }

ScenarioConfig scenario_config(const PipelineConfig& cfg, Scenario s) {
    ScenarioConfig sc;
    sc.scenario = s;
    sc.n_users = cfg.n_users;
    sc.recs_per_user = cfg.recs_per_user;
    sc.seed = scenario_seed(cfg, s);
    sc.profile_mix = cfg.profile_mix;
    return sc;
}

}  // namespace

void PipelineConfig::validate() const {
    if (corpus.path.has_value() == corpus.synthetic.has_value()) {
        throw ParameterError("set exactly one of corpus.path and corpus.synthetic");
    }
    if (corpus.path) require_file(*corpus.path, "corpus file");
    if (corpus.synthetic) {
        const auto& s = *corpus.synthetic;
        if (s.n_chains < 1 || s.docs_per_chain < 1 || s.vocab_per_chain < 1 || s.words_per_doc < 1) {
            throw ParameterError("synthetic corpus sizes must be >= 1");
        }
        if (!(s.chain_word_rate >= 0.0 && s.chain_word_rate <= 1.0)) {
            throw ParameterError("corpus.chain_word_rate must lie in [0, 1]");
        }
    }
    if (stopwords_from_file(corpus.stopwords)) require_file(corpus.stopwords, "stop-word file");

    switch (representation.kind) {
        case VectorKind::tfidf:
            break;
        case VectorKind::word_avg:
            if (!representation.word_vectors) throw ParameterError("represent.kind word_avg needs represent.word_vectors");
            require_file(*representation.word_vectors, "word-vector file");
            break;
        case VectorKind::doc_embedding:
            if (!representation.doc_embeddings) {
                throw ParameterError("represent.kind doc_embedding needs represent.embeddings");
            }
            require_file(*representation.doc_embeddings, "embedding file");
            break;
    }

    std::visit([](const auto& p) { p.validate(); }, clustering);
    if (sweep) {
        if (const auto* g = std::get_if<AhcGrid>(&*sweep)) {
            if (g->linkages.empty() || g->thresholds.empty()) throw ParameterError("empty AHC sweep grid");
            for (double t : g->thresholds) AhcParams{Linkage::ward, t}.validate();
        } else if (const auto* g = std::get_if<DbscanGrid>(&*sweep)) {
            if (g->epsilons.empty() || g->min_samples.empty()) throw ParameterError("empty DBSCAN sweep grid");
            for (double e : g->epsilons) {
                for (std::size_t m : g->min_samples) DbscanParams{e, m}.validate();
            }
        } else {
            const auto& lg = std::get<LouvainGrid>(*sweep);
            if (lg.edge_thresholds.empty() || lg.resolutions.empty()) throw ParameterError("empty Louvain sweep grid");
            for (double t : lg.edge_thresholds) {
                for (double res : lg.resolutions) GraphParams{t, res, 0}.validate();
            }
        }
        if (sweep->index() != clustering.index()) throw ParameterError("sweep grid and cluster.method disagree");
    }

    fragmentation.validate();
    if (scenarios.empty()) throw ParameterError("scenarios.names is empty");
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        if (std::find(scenarios.begin(), scenarios.begin() + static_cast<std::ptrdiff_t>(i), scenarios[i]) !=
            scenarios.begin() + static_cast<std::ptrdiff_t>(i)) {
            throw ParameterError(fmt::format("scenario {} listed twice", to_string(scenarios[i])));
        }
        scenario_config(*this, scenarios[i]).validate();
    }
    if (n_users < 2) throw ParameterError("fragmentation needs scenarios.users >= 2");
}

std::uint64_t corpus_seed(const PipelineConfig& cfg) { return derive_seed(cfg.seed, "corpus"); }
std::uint64_t louvain_seed(const PipelineConfig& cfg) { return derive_seed(cfg.seed, "louvain"); }
std::uint64_t scenario_seed(const PipelineConfig& cfg, Scenario s) {
    return derive_seed(cfg.seed, "scenario", static_cast<std::uint64_t>(s));
}

int exit_code_for(const std::exception& e) {
    if (const auto* s = dynamic_cast<const StageError*>(&e)) return s->exit_code();
    if (dynamic_cast<const InfeasibleScenarioError*>(&e)) return 4;
    if (dynamic_cast<const ParameterError*>(&e)) return 2;
    if (dynamic_cast<const ValidationError*>(&e)) return 3;
    return 1;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

// ---------------------------------------------------------------------------
// stages

Corpus load_pipeline_corpus(const PipelineConfig& cfg) {
    if (cfg.corpus.path) return load_corpus(*cfg.corpus.path);
    auto spec = *cfg.corpus.synthetic;
    spec.seed = corpus_seed(cfg);
    return generate_synthetic_corpus(spec);
}

TokenizerConfig pipeline_tokenizer(const PipelineConfig& cfg) {
    TokenizerConfig t;
    if (cfg.corpus.stopwords == "none") {
        t.stopwords.clear();
    } else if (stopwords_from_file(cfg.corpus.stopwords)) {
        t.stopwords = load_stopwords(cfg.corpus.stopwords);
    }
    return t;
}

VectorSpace build_vectors(const Corpus& corpus, const PipelineConfig& cfg, ordered_json* provenance) {
    const auto tokenizer = pipeline_tokenizer(cfg);
    const auto& rep = cfg.representation;
    ordered_json prov;
    prov["kind"] = std::string(to_string(rep.kind));
    VectorSpace space;
    switch (rep.kind) {
        case VectorKind::tfidf:
            space = tfidf_vectorize(corpus, tokenizer, rep.tfidf);
            prov["normalize"] = rep.tfidf.normalize;
            prov["vocabulary"] = space.columns.size();
            break;
        case VectorKind::word_avg: {
            auto avg = embed_average(corpus, tokenizer, load_word_vectors(*rep.word_vectors));
            space = std::move(avg.space);
            std::size_t tokens = 0, known = 0;
            for (std::size_t t : avg.coverage.tokens) tokens += t;
            for (std::size_t t : avg.coverage.in_vocabulary) known += t;
            prov["tokens"] = tokens;
            prov["in_vocabulary"] = known;
            prov["zero_rows"] = avg.coverage.zero_rows;
            break;
        }
        case VectorKind::doc_embedding:
            space = load_doc_embeddings(*rep.doc_embeddings, corpus);
            break;
    }
    prov["documents"] = space.size();
    prov["dim"] = space.dim();
    prov["stopwords"] = cfg.corpus.stopwords;
    if (provenance) *provenance = std::move(prov);
    return space;
}

std::string labeling_name(VectorKind kind, const ClusterParams& params) {
    std::string rep;
    switch (kind) {
        case VectorKind::tfidf: rep = "BoW"; break;
        case VectorKind::word_avg: rep = "WordAvg"; break;
        case VectorKind::doc_embedding: rep = "DocEmb"; break;
    }
    std::string method;
    switch (params.index()) {
        case 0: method = "AHC"; break;
        case 1: method = "DB"; break;
        default: method = "Louvain"; break;
    }
    return rep + "*" + method;
}

namespace {

ordered_json metric_json(const MetricReport& m) {
    ordered_json j;
    j["homogeneity"] = m.hcv.homogeneity;
    j["completeness"] = m.hcv.completeness;
    j["v_measure"] = m.hcv.v_measure;
    j["silhouette"] = m.silhouette ? ordered_json(*m.silhouette) : ordered_json(nullptr);
    if (!m.davies_bouldin) {
        j["davies_bouldin"] = nullptr;
    } else if (std::isfinite(*m.davies_bouldin)) {
        j["davies_bouldin"] = *m.davies_bouldin;
    } else {
        j["davies_bouldin"] = "inf";
    }
    j["clusters"] = m.clusters;
    j["noise"] = m.noise;
    j["warnings"] = m.warnings;
    return j;
}

void resolve_seeds(PipelineConfig& cfg) {
    if (auto* g = std::get_if<GraphParams>(&cfg.clustering)) g->seed = louvain_seed(cfg);
    if (cfg.sweep) {
        if (auto* g = std::get_if<LouvainGrid>(&*cfg.sweep)) g->seed = louvain_seed(cfg);
    }
}

std::vector<std::string> gold_strings(const Corpus& corpus) {
    std::vector<std::string> gold;
    for (const auto& d : corpus.documents()) {
        if (!d.gold_label) {
            throw ValidationError(fmt::format("document \"{}\" has no gold label; evaluation needs a labeled corpus", d.id));
        }
        gold.push_back(*d.gold_label);
    }
    return gold;
}

struct InputFile {
    std::string role;
    fs::path path;
};

std::vector<InputFile> input_files(const PipelineConfig& cfg) {
    std::vector<InputFile> in;
    if (cfg.corpus.path) in.push_back({"corpus", *cfg.corpus.path});
    if (stopwords_from_file(cfg.corpus.stopwords)) in.push_back({"stopwords", cfg.corpus.stopwords});
    if (cfg.representation.kind == VectorKind::word_avg) in.push_back({"word_vectors", *cfg.representation.word_vectors});
    if (cfg.representation.kind == VectorKind::doc_embedding) {
        in.push_back({"embeddings", *cfg.representation.doc_embeddings});
    }
    return in;
}

constexpr const char* kPartialMarker = ".partial";

class ArtifactWriter {
public:
    explicit ArtifactWriter(fs::path root) : root_(std::move(root)) {}

    void write(const fs::path& rel, const std::function<void(std::ostream&)>& body) {
        std::ofstream out(root_ / rel, std::ios::binary);
        if (!out) throw ValidationError("cannot write " + (root_ / rel).string());
        body(out);
        out.close();
        if (!out) throw ValidationError("write failed for " + (root_ / rel).string());
        written_.push_back(rel);
    }

    void json(const fs::path& rel, const ordered_json& j) {
        write(rel, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    }

    void note(const fs::path& rel) { written_.push_back(rel); }

    const fs::path& root() const { return root_; }
    const std::vector<fs::path>& written() const { return written_; }

private:
    fs::path root_;
    std::vector<fs::path> written_;
};

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, unsigned threads) {
    config.validate();
    PipelineConfig cfg = config;
    resolve_seeds(cfg);

    // Digest inputs before any output exists, so a bad input also leaves nothing behind.
    ordered_json inputs = ordered_json::array();
    for (const auto& f : input_files(cfg)) {
        inputs.push_back({{"role", f.role}, {"path", f.path.string()}, {"sha256", sha256_file(f.path)}});
    }

    fs::create_directories(cfg.out);
    fs::remove(cfg.out / kPartialMarker);
    ArtifactWriter w(cfg.out);
    std::string stage;

    try {
        stage = "corpus";
        const Corpus corpus = load_pipeline_corpus(cfg);
        if (cfg.corpus.synthetic) w.write("corpus.jsonl", [&](std::ostream& o) { write_corpus(corpus, o); });

        stage = "vectorize";
        ordered_json vec_prov;
        const VectorSpace space = build_vectors(corpus, cfg, &vec_prov);
        w.json("vectors.json", vec_prov);

        const auto gold = gold_strings(corpus);
        ClusterParams chosen = cfg.clustering;
        if (cfg.sweep) {
            stage = "sweep";
            const auto result = hyperparam_sweep(space, gold, *cfg.sweep, threads);
            w.write("sweep.csv", [&](std::ostream& o) { write_sweep_csv(result, o); });
            chosen = result.best().params;
        }

        stage = "cluster";
        ClusterAssignment assignment = run_clustering(space, chosen, threads);
        if (std::holds_alternative<GraphParams>(chosen)) assignment.provenance.seed = louvain_seed(cfg);
        save_assignment(assignment, cfg.out / "clusters.csv");
        w.note("clusters.csv");
        w.note("clusters.json");

        stage = "evaluate";
        EvaluationOptions opts;
        opts.geometry = cfg.geometry_metrics;
        const std::string name = labeling_name(cfg.representation.kind, chosen);
        const MetricReport report = evaluate_assignment(space, gold, assignment, opts, threads);
        ordered_json mj;
        mj["labeling"] = name;
        mj["method"] = assignment.provenance.method;
        mj["params"] = assignment.provenance.params;
        mj["metrics"] = metric_json(report);
        w.json("metrics.json", mj);
        const std::vector<NamedReport> table1{{name, report}};
        w.write("table1.csv", [&](std::ostream& o) { write_metrics_csv(table1, o); });
        w.write("table1.txt", [&](std::ostream& o) { write_metrics_text(table1, o); });
        const ErrorTable errors = error_table(gold, assignment.labels);
        w.write("error_table.csv", [&](std::ostream& o) { write_error_table_csv(errors, o); });
        w.write("error_table.txt", [&](std::ostream& o) { write_error_table_text(errors, o); });

        stage = "simulate";
        std::vector<ScenarioRecommendations> recsets;
        for (Scenario s : cfg.scenarios) {
            auto recs = simulate(corpus, scenario_config(cfg, s), threads);
            w.write(fmt::format("recs_{}.jsonl", to_string(s)), [&](std::ostream& o) { write_recommendations(recs, o); });
            recsets.push_back({s, std::move(recs)});
        }

        stage = "fragment";
        const NamedLabeling gold_labeling{"Gold Labels", LabelMapping::from_gold(corpus)};
        const NamedLabeling predicted{name, LabelMapping::from_assignment(assignment, cfg.noise)};
        ExtrinsicTable table3;
        for (const auto& r : recsets) table3.scenarios.push_back(r.scenario);
        table3.rows = {ExtrinsicRow{gold_labeling.name, {}, {}}, ExtrinsicRow{predicted.name, {}, {}}};
        for (const auto& r : recsets) {
            ordered_json fj;
            fj["scenario"] = std::string(to_string(r.scenario));
            fj["scenario_config"] = r.recommendations.provenance;
            std::size_t row = 0;
            for (const NamedLabeling* l : {&gold_labeling, &predicted}) {
                FragmentationReport rep;
                try {
                    rep = fragmentation_aggregate(r.recommendations, l->mapping, cfg.fragmentation, false, threads);
                } catch (const ValidationError& e) {
                    throw ValidationError(fmt::format("row \"{}\": {}", l->name, e.what()));
                }
                fj["reports"][l->name] = report_json(rep);
                table3.rows[row++].scores.push_back(rep.aggregate);
            }
            w.json(fmt::format("frag_{}.json", to_string(r.scenario)), fj);
        }

        stage = "table";
        for (auto& row : table3.rows) {
            std::optional<double> low, high;
            for (std::size_t k = 0; k < table3.scenarios.size(); ++k) {
                if (table3.scenarios[k] == Scenario::low) low = row.scores[k];
                if (table3.scenarios[k] == Scenario::high) high = row.scores[k];
            }
            if (low && high) row.diff_low_high = std::abs(*low - *high);
        }
        w.write("table3.csv", [&](std::ostream& o) { write_extrinsic_csv(table3, o); });
        w.write("table3.txt", [&](std::ostream& o) { write_extrinsic_text(table3, o); });

        stage = "manifest";
        ordered_json manifest;
        ordered_json cj = ordered_json::object();
        auto values = config_to_values(config);
        for (const auto& [k, v] : values) {
            if (k == "out") continue;
            static const std::set<std::string> lists{"sweep.linkages",        "sweep.thresholds", "sweep.epsilons",
                                                     "sweep.min_samples",     "sweep.edge_thresholds",
                                                     "sweep.resolutions",     "scenarios.names",
                                                     "scenarios.profile_mix"};
            cj[k] = lists.count(k) == 0 && v.size() == 1 ? ordered_json(v.front()) : ordered_json(v);
        }
        manifest["config"] = cj;
        ordered_json seeds;
        seeds["global"] = cfg.seed;
        if (cfg.corpus.synthetic) seeds["corpus"] = corpus_seed(cfg);
        if (std::holds_alternative<GraphParams>(cfg.clustering)) seeds["louvain"] = louvain_seed(cfg);
        for (Scenario s : cfg.scenarios) seeds[fmt::format("scenario_{}", to_string(s))] = scenario_seed(cfg, s);
        manifest["seeds"] = seeds;
        manifest["selected_params"] = {{"method", std::string(method_name(chosen))}, {"params", params_json(chosen)}};
        manifest["inputs"] = inputs;
        ordered_json arts = ordered_json::array();
        for (const auto& rel : w.written()) {
            arts.push_back({{"path", rel.generic_string()}, {"sha256", sha256_file(cfg.out / rel)}});
        }
        manifest["artifacts"] = arts;
        w.json("manifest.json", manifest);
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        std::ofstream marker(cfg.out / kPartialMarker, std::ios::binary);
        marker << ordered_json{{"stage", stage}, {"error", e.what()}}.dump(2) << '\n';
        throw StageError(stage, e.what(), code == 0 ? 1 : code);
    }
    return {w.written()};
}

PipelineConfig config_from_manifest(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw ParameterError("cannot open manifest " + manifest_path.string());
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(fmt::format("{}: {}", manifest_path.string(), e.what()));
    }
    if (!m.contains("config") || !m["config"].is_object()) {
        throw ParameterError(manifest_path.string() + ": no config object");
    }
    ConfigValues values;
    for (const auto& [k, v] : m["config"].items()) {
        if (v.is_array()) {
            for (const auto& x : v) values[k].push_back(x.get<std::string>());
        } else {
            values[k] = {v.get<std::string>()};
        }
    }
    PipelineConfig cfg = config_from_values(values);
    cfg.out = manifest_path.parent_path().empty() ? fs::path(".") : manifest_path.parent_path();
    if (m.contains("inputs")) {
        for (const auto& f : m["inputs"]) {
            const fs::path p = f.at("path").get<std::string>();
            require_file(p, f.at("role").get<std::string>() + " file");
            if (sha256_file(p) != f.at("sha256").get<std::string>()) {
                throw ValidationError(fmt::format("input {} changed since the manifest was written", p.string()));
            }
        }
    }
    return cfg;
}

}  // namespace storychain
