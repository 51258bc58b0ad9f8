// storychain: story-chain clustering and Fragmentation measurement.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "storychain/cluster.hpp"
#include "storychain/corpus.hpp"
#include "storychain/fragmentation.hpp"
#include "storychain/intrinsic_eval.hpp"
#include "storychain/pipeline.hpp"
#include "storychain/recommendation.hpp"
#include "storychain/represent.hpp"
#include "storychain/scenario.hpp"

namespace fs = std::filesystem;
using namespace storychain;

namespace {

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string out;
    std::string format = "text";
    std::vector<std::string> overrides;  // key=value
};

ConfigValues gather_values(const Globals& g) {
    ConfigValues values;
    if (!g.config_path.empty()) values = load_config_file(g.config_path);
    for (const auto& kv : g.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw ParameterError(fmt::format("--set expects key=value, got \"{}\"", kv));
        // Commas split list values.
        std::vector<std::string> parts;
        std::string rest = kv.substr(eq + 1);
        std::size_t start = 0;
        while (true) {
            const auto comma = rest.find(',', start);
            parts.push_back(rest.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        values[kv.substr(0, eq)] = parts;
    }
    if (g.seed) values["seed"] = {std::to_string(*g.seed)};
    if (!g.out.empty()) values["out"] = {g.out};
    return values;
}

PipelineConfig load_cfg(const Globals& g, bool need_sweep = false) {
    auto values = gather_values(g);
    if (need_sweep && values.count("sweep.enabled") == 0) values["sweep.enabled"] = {"true"};
    auto cfg = config_from_values(values);
    cfg.validate();
    return cfg;
}

// Writes to <out>/<name> when --out is set, else to stdout.
template <class Fn>
void emit(const Globals& g, const std::string& name, Fn&& body) {
    if (g.out.empty()) {
        body(std::cout);
        return;
    }
    fs::create_directories(g.out);
    std::ofstream f(fs::path(g.out) / name, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + (fs::path(g.out) / name).string());
    body(f);
}

std::string ext(const Globals& g) { return g.format == "text" ? "txt" : g.format; }

std::vector<std::string> gold_of(const Corpus& corpus) {
    std::vector<std::string> gold;
    for (const auto& d : corpus.documents()) {
        if (!d.gold_label) throw ValidationError(fmt::format("document \"{}\" has no gold label", d.id));
        gold.push_back(*d.gold_label);
    }
    return gold;
}

ClusterParams with_seed(ClusterParams p, const PipelineConfig& cfg) {
    if (auto* gp = std::get_if<GraphParams>(&p)) gp->seed = louvain_seed(cfg);
    return p;
}

// Assignment realigned to corpus order; every corpus document must appear.
ClusterAssignment aligned(const ClusterAssignment& a, const Corpus& corpus) {
    std::unordered_map<std::string, int> by_id;
    for (std::size_t i = 0; i < a.size(); ++i) by_id.emplace(a.doc_ids[i], a.labels[i]);
    ClusterAssignment out;
    out.provenance = a.provenance;
    for (const auto& d : corpus.documents()) {
        auto it = by_id.find(d.id);
        if (it == by_id.end()) throw ValidationError(fmt::format("assignment has no label for document \"{}\"", d.id));
        out.doc_ids.push_back(d.id);
        out.labels.push_back(it->second);
    }
    return out;
}

int cmd_vectorize(const Globals& g) {
    const auto cfg = load_cfg(g);
    const Corpus corpus = load_pipeline_corpus(cfg);
    nlohmann::ordered_json prov;
    const VectorSpace space = build_vectors(corpus, cfg, &prov);
    if (g.out.empty()) {
        if (g.format == "json") {
            std::cout << prov.dump(2) << '\n';
        } else {
            write_doc_embeddings(space, std::cout);
        }
        return 0;
    }
    fs::create_directories(g.out);
    save_doc_embeddings(space, fs::path(g.out) / "vectors.jsonl");
    emit(g, "vectors.json", [&](std::ostream& o) { o << prov.dump(2) << '\n'; });
    return 0;
}

int cmd_cluster(const Globals& g) {
    const auto cfg = load_cfg(g);
    const Corpus corpus = load_pipeline_corpus(cfg);
    const VectorSpace space = build_vectors(corpus, cfg);
    const auto params = with_seed(cfg.clustering, cfg);
    ClusterAssignment a = run_clustering(space, params, g.threads);
    if (std::holds_alternative<GraphParams>(params)) a.provenance.seed = louvain_seed(cfg);
    if (g.out.empty()) {
        if (g.format == "json") {
            std::cout << provenance_json(a.provenance).dump(2) << '\n';
        } else {
            write_assignment_csv(a, std::cout);
        }
        return 0;
    }
    fs::create_directories(g.out);
    save_assignment(a, fs::path(g.out) / "clusters.csv");
    return 0;
}

int cmd_sweep(const Globals& g) {
    auto cfg = load_cfg(g, true);
    if (auto* lg = std::get_if<LouvainGrid>(&*cfg.sweep)) lg->seed = louvain_seed(cfg);
    const Corpus corpus = load_pipeline_corpus(cfg);
    const VectorSpace space = build_vectors(corpus, cfg);
    const auto result = hyperparam_sweep(space, gold_of(corpus), *cfg.sweep, g.threads);
    if (g.format == "csv") {
        emit(g, "sweep.csv", [&](std::ostream& o) { write_sweep_csv(result, o); });
    } else {
        const auto& b = result.best();
        nlohmann::ordered_json j;
        j["rows"] = result.rows.size();
        j["best"] = {{"method", std::string(method_name(b.params))}, {"params", params_json(b.params)},
                     {"homogeneity", b.homogeneity}, {"completeness", b.completeness},
                     {"v_measure", b.v_measure}, {"clusters", b.clusters}};
        emit(g, "sweep_best." + ext(g), [&](std::ostream& o) {
            if (g.format == "json") {
                o << j.dump(2) << '\n';
            } else {
                o << fmt::format("{} grid points; best {} {} V={:.4f} (h={:.4f}, c={:.4f}, {} clusters)\n",
                                 result.rows.size(), method_name(b.params), params_json(b.params).dump(),
                                 b.v_measure, b.homogeneity, b.completeness, b.clusters);
            }
        });
    }
    return 0;
}

int cmd_eval(const Globals& g, const std::string& clusters_path) {
    const auto cfg = load_cfg(g);
    const Corpus corpus = load_pipeline_corpus(cfg);
    const VectorSpace space = build_vectors(corpus, cfg);
    const auto params = with_seed(cfg.clustering, cfg);
    const ClusterAssignment a = clusters_path.empty() ? run_clustering(space, params, g.threads)
                                                      : aligned(load_assignment(clusters_path), corpus);
    const auto gold = gold_of(corpus);
    EvaluationOptions opts;
    opts.geometry = cfg.geometry_metrics;
    const std::vector<NamedReport> reports{
        {labeling_name(cfg.representation.kind, params), evaluate_assignment(space, gold, a, opts, g.threads)}};
    const ErrorTable errors = error_table(gold, a.labels);
    if (g.format == "json") {
        const auto& m = reports.front().report;
        nlohmann::ordered_json j;
        j["labeling"] = reports.front().name;
        j["homogeneity"] = m.hcv.homogeneity;
        j["completeness"] = m.hcv.completeness;
        j["v_measure"] = m.hcv.v_measure;
        j["silhouette"] = m.silhouette ? nlohmann::ordered_json(*m.silhouette) : nlohmann::ordered_json(nullptr);
        j["davies_bouldin"] = m.davies_bouldin && std::isfinite(*m.davies_bouldin)
                                  ? nlohmann::ordered_json(*m.davies_bouldin)
                                  : nlohmann::ordered_json(nullptr);
        j["clusters"] = m.clusters;
        j["noise"] = m.noise;
        j["warnings"] = m.warnings;
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& r : errors.rows) {
            rows.push_back({{"gold_label", r.gold_label}, {"size", r.size}, {"majority_label", r.majority_label},
                            {"misclassified", r.misclassified}});
        }
        j["error_table"] = rows;
        emit(g, "metrics.json", [&](std::ostream& o) { o << j.dump(2) << '\n'; });
    } else if (g.format == "csv") {
        emit(g, "metrics.csv", [&](std::ostream& o) { write_metrics_csv(reports, o); });
        emit(g, "error_table.csv", [&](std::ostream& o) { write_error_table_csv(errors, o); });
    } else {
        emit(g, "metrics.txt", [&](std::ostream& o) { write_metrics_text(reports, o); });
        emit(g, "error_table.txt", [&](std::ostream& o) { write_error_table_text(errors, o); });
    }
    return 0;
}

int cmd_simulate(const Globals& g) {
    const auto cfg = load_cfg(g);
    const Corpus corpus = load_pipeline_corpus(cfg);
    if (g.out.empty() && cfg.scenarios.size() != 1) {
        throw ParameterError("simulate writes several scenarios only with --out; pick one via --set scenarios.names=...");
    }
    for (Scenario s : cfg.scenarios) {
        ScenarioConfig sc;
        sc.scenario = s;
        sc.n_users = cfg.n_users;
        sc.recs_per_user = cfg.recs_per_user;
        sc.profile_mix = cfg.profile_mix;
        sc.seed = scenario_seed(cfg, s);
        const auto recs = simulate(corpus, sc, g.threads);
        emit(g, fmt::format("recs_{}.jsonl", to_string(s)), [&](std::ostream& o) { write_recommendations(recs, o); });
    }
    return 0;
}

// frag and table need a corpus only for gold labels.
PipelineConfig load_metric_cfg(const Globals& g) {
    auto cfg = config_from_values(gather_values(g));
    cfg.fragmentation.validate();
    return cfg;
}

Corpus gold_corpus(const PipelineConfig& cfg) {
    if (!cfg.corpus.path && !cfg.corpus.synthetic) {
        throw ParameterError("gold labels need corpus.path or corpus.synthetic");
    }
    cfg.validate();
    return load_pipeline_corpus(cfg);
}

int cmd_frag(const Globals& g, const std::string& recs_path, const std::string& clusters_path, bool pairs) {
    const auto cfg = load_metric_cfg(g);
    const auto recs = load_recommendations(recs_path);
    const LabelMapping mapping = clusters_path.empty()
                                     ? LabelMapping::from_gold(gold_corpus(cfg))
                                     : LabelMapping::from_assignment(load_assignment(clusters_path), cfg.noise);
    const auto report = fragmentation_aggregate(recs, mapping, cfg.fragmentation, pairs, g.threads);
    if (pairs) emit(g, "pairs.csv", [&](std::ostream& o) { write_pair_scores_csv(report, o); });
    emit(g, "frag." + ext(g), [&](std::ostream& o) {
        if (g.format == "json") {
            o << report_json(report).dump(2) << '\n';
        } else if (g.format == "csv") {
            o << "aggregate,n_users,n_pairs,p,label_lists\n"
              << fmt::format("{:.17g},{},{},{},{}\n", report.aggregate, report.n_users, report.n_pairs,
                             report.params.rbo.p, to_string(report.params.mode));
        } else {
            o << fmt::format("Fragmentation {:.4f} over {} users ({} pairs), p = {}, {} label lists\n",
                             report.aggregate, report.n_users, report.n_pairs, report.params.rbo.p,
                             to_string(report.params.mode));
        }
    });
    return 0;
}

int cmd_table(const Globals& g, const std::vector<std::string>& recs_specs, const std::vector<std::string>& labelings) {
    const auto cfg = load_metric_cfg(g);
    std::vector<ScenarioRecommendations> recsets;
    for (const auto& spec : recs_specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw ParameterError(fmt::format("--recs expects scenario=path, got \"{}\"", spec));
        recsets.push_back({parse_scenario(spec.substr(0, eq)), load_recommendations(spec.substr(eq + 1))});
    }
    const NamedLabeling gold{"Gold Labels", LabelMapping::from_gold(gold_corpus(cfg))};
    std::vector<NamedLabeling> rows;
    for (const auto& spec : labelings) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) {
            throw ParameterError(fmt::format("--labeling expects name=clusters.csv, got \"{}\"", spec));
        }
        rows.push_back({spec.substr(0, eq), LabelMapping::from_assignment(load_assignment(spec.substr(eq + 1)), cfg.noise)});
    }
    const auto table = extrinsic_table(recsets, gold, rows, cfg.fragmentation, g.threads);
    emit(g, "table3." + ext(g), [&](std::ostream& o) {
        if (g.format == "csv") {
            write_extrinsic_csv(table, o);
        } else if (g.format == "json") {
            nlohmann::ordered_json j = nlohmann::ordered_json::array();
            for (const auto& r : table.rows) {
                nlohmann::ordered_json row;
                row["labeling"] = r.name;
                for (std::size_t k = 0; k < table.scenarios.size(); ++k) {
                    row[std::string(to_string(table.scenarios[k]))] = r.scores[k];
                }
                row["diff_low_high"] = r.diff_low_high ? nlohmann::ordered_json(*r.diff_low_high)
                                                       : nlohmann::ordered_json(nullptr);
                j.push_back(row);
            }
            o << j.dump(2) << '\n';
        } else {
            write_extrinsic_text(table, o);
        }
    });
    return 0;
}

int cmd_run(const Globals& g, const std::string& manifest) {
    PipelineConfig cfg;
    if (!manifest.empty()) {
        cfg = config_from_manifest(manifest);
        if (!g.out.empty()) cfg.out = g.out;
    } else {
        cfg = config_from_values(gather_values(g));
    }
    const auto result = run_pipeline(cfg, g.threads);
    if (g.format == "json") {
        nlohmann::ordered_json j = nlohmann::ordered_json::array();
        for (const auto& a : result.artifacts) j.push_back(a.generic_string());
        std::cout << j.dump(2) << '\n';
    } else {
        for (const auto& a : result.artifacts) std::cout << (cfg.out / a).string() << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Story-chain clustering and Fragmentation measurement"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "TOML config file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Global seed");
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "text", "json"}));
    app.add_option("--set", g.overrides, "Config override key=value (commas separate list items)");

    auto* vectorize = app.add_subcommand("vectorize", "Build document vectors");
    auto* cluster = app.add_subcommand("cluster", "Cluster documents");
    auto* sweep = app.add_subcommand("sweep", "Hyperparameter sweep against gold labels");
    auto* eval = app.add_subcommand("eval", "Intrinsic metrics and error table");
    std::string eval_clusters;
    eval->add_option("--clusters", eval_clusters, "Assignment CSV (default: cluster now)")->check(CLI::ExistingFile);
    auto* sim = app.add_subcommand("simulate", "Simulate recommendation scenarios");
    auto* frag = app.add_subcommand("frag", "Fragmentation of a recommendation set");
    std::string frag_recs, frag_clusters;
    bool frag_pairs = false;
    frag->add_option("--recs", frag_recs, "Recommendations JSON-lines")->required()->check(CLI::ExistingFile);
    frag->add_option("--clusters", frag_clusters, "Assignment CSV (default: gold labels)")->check(CLI::ExistingFile);
    frag->add_flag("--pairs", frag_pairs, "Also write per-pair scores (needs --out)");
    auto* table = app.add_subcommand("table", "Scenario table over several labelings");
    std::vector<std::string> table_recs, table_labelings;
    table->add_option("--recs", table_recs, "scenario=recs.jsonl")->required();
    table->add_option("--labeling", table_labelings, "name=clusters.csv");
    auto* run = app.add_subcommand("run", "Full pipeline");
    std::string manifest;
    run->add_option("--from-manifest", manifest, "Rerun from a manifest.json")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (frag_pairs && g.out.empty()) throw ParameterError("--pairs needs --out");
        if (*vectorize) return cmd_vectorize(g);
        if (*cluster) return cmd_cluster(g);
        if (*sweep) return cmd_sweep(g);
        if (*eval) return cmd_eval(g, eval_clusters);
        if (*sim) return cmd_simulate(g);
        if (*frag) return cmd_frag(g, frag_recs, frag_clusters, frag_pairs);
        if (*table) return cmd_table(g, table_recs, table_labelings);
        if (*run) return cmd_run(g, manifest);
    } catch (const std::exception& e) {
        std::cerr << "storychain: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return 0;
}
