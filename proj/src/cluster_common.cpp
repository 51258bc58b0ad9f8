#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include <fmt/format.h>

#include "storychain/cluster.hpp"
#include "storychain/errors.hpp"

namespace storychain {

std::size_t ClusterAssignment::cluster_count() const {
    std::set<int> distinct;
    for (int l : labels) {
        if (l != kNoiseLabel) distinct.insert(l);
    }
    return distinct.size();
}

std::size_t ClusterAssignment::noise_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoiseLabel));
}

std::vector<int> canonical_labels(const std::vector<int>& labels) {
    std::unordered_map<int, int> remap;
    std::vector<int> out;
    out.reserve(labels.size());
    for (int l : labels) {
        if (l == kNoiseLabel) {
            out.push_back(kNoiseLabel);
            continue;
        }
        auto [it, inserted] = remap.emplace(l, static_cast<int>(remap.size()));
        out.push_back(it->second);
    }
    return out;
}

std::string_view to_string(Linkage linkage) {
    switch (linkage) {
        case Linkage::ward: return "ward";
        case Linkage::average: return "average";
        case Linkage::complete: return "complete";
        case Linkage::single: return "single";
    }
    return "unknown";
}

Linkage parse_linkage(std::string_view name) {
    for (Linkage l : kAllLinkages) {
        if (to_string(l) == name) return l;
    }
    throw ParameterError(fmt::format("unknown linkage \"{}\" (expected ward, average, complete or single)", name));
}

void AhcParams::validate() const {
    if (!(distance_threshold > 0.0)) {
        throw ParameterError(fmt::format("AHC distance_threshold must be positive, got {}", distance_threshold));
    }
}

void DbscanParams::validate() const {
    if (!(epsilon > 0.0)) {
        throw ParameterError(fmt::format("DBSCAN epsilon must be positive, got {}", epsilon));
    }
    if (min_samples < 1) {
        throw ParameterError("DBSCAN min_samples must be >= 1");
    }
}

void GraphParams::validate() const {
    if (!std::isfinite(edge_threshold) || edge_threshold < 0.0) {
        throw ParameterError("graph edge_threshold must be finite and >= 0 (edge weights must be positive)");
    }
    if (!(resolution > 0.0)) {
        throw ParameterError(fmt::format("Louvain resolution must be positive, got {}", resolution));
    }
}

void write_assignment_csv(const ClusterAssignment& assignment, std::ostream& out) {
    out << "doc_id,label\n";
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        out << assignment.doc_ids[i] << ',' << assignment.labels[i] << '\n';
    }
}

ClusterAssignment read_assignment_csv(std::istream& in, std::string_view source_name) {
    const std::string source(source_name);
    ClusterAssignment out;
    std::string line;
    std::size_t lineno = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1) {
            if (line != "doc_id,label") throw ParseError(source, lineno, "expected header \"doc_id,label\"");
            continue;
        }
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos || comma == 0) throw ParseError(source, lineno, "expected doc_id,label");
        std::string id = line.substr(0, comma);
        int label = 0;
        try {
            std::size_t used = 0;
            label = std::stoi(line.substr(comma + 1), &used);
            if (used != line.size() - comma - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseError(source, lineno, "label must be an integer");
        }
        if (label < kNoiseLabel) throw ParseError(source, lineno, "labels must be >= -1");
        if (!seen.insert(id).second) throw ParseError(source, lineno, fmt::format("duplicate doc_id \"{}\"", id));
        out.doc_ids.push_back(std::move(id));
        out.labels.push_back(label);
    }
    if (lineno == 0) throw ParseError(source, 1, "empty assignment file");
    out.provenance.method = "file";
    return out;
}

void save_assignment(const ClusterAssignment& assignment, const std::filesystem::path& csv_path) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + csv_path.string());
    write_assignment_csv(assignment, out);
    auto sidecar = csv_path;
    sidecar.replace_extension(".json");
    std::ofstream meta(sidecar, std::ios::binary);
    if (!meta) throw ValidationError("cannot write " + sidecar.string());
    meta << provenance_json(assignment.provenance).dump(2) << '\n';
}

ClusterAssignment load_assignment(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw ValidationError("cannot open " + csv_path.string());
    auto out = read_assignment_csv(in, csv_path.string());
    auto sidecar = csv_path;
    sidecar.replace_extension(".json");
    if (std::ifstream meta(sidecar); meta) {
        try {
            auto j = nlohmann::ordered_json::parse(meta);
            out.provenance.method = j.value("method", "file");
            if (j.contains("params")) out.provenance.params = j["params"];
            if (j.contains("seed") && !j["seed"].is_null()) out.provenance.seed = j["seed"].get<std::uint64_t>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(sidecar.string(), 1, e.what());
        }
    }
    return out;
}

nlohmann::ordered_json provenance_json(const ClusterProvenance& provenance) {
    nlohmann::ordered_json j;
    j["method"] = provenance.method;
    j["params"] = provenance.params;
    j["seed"] = provenance.seed ? nlohmann::ordered_json(*provenance.seed) : nlohmann::ordered_json(nullptr);
    return j;
}

}  // namespace storychain
