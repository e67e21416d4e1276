#include "physnote/notes.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "physnote/errors.hpp"

namespace physnote::notes {

using nlohmann::json;

const char* tip_origin_name(TipOrigin origin) {
    switch (origin) {
    case TipOrigin::Seed: return "seed";
    case TipOrigin::Reflection: return "reflection";
    case TipOrigin::TipDiscovery: return "tip_discovery";
    }
    return "seed";
}

TipOrigin tip_origin_from_name(const std::string& name) {
    if (name == "seed") return TipOrigin::Seed;
    if (name == "reflection") return TipOrigin::Reflection;
    if (name == "tip_discovery") return TipOrigin::TipDiscovery;
    throw Error(ErrorCode::SchemaViolation, "unknown tip origin '" + name + "'");
}

double error_rate(const NodeStats& stats) {
    const std::uint64_t total = stats.activations();
    if (total == 0) return 0.0;
    return static_cast<double>(stats.n_minus) / static_cast<double>(total);
}

bool prune_eligible(const NodeStats& stats, const PruneConfig& cfg) {
    return stats.activations() >= cfg.n_min && error_rate(stats) > cfg.tau;
}

const TaskNode& KnowledgeBase::node(const std::string& name) const {
    auto it = nodes_.find(name);
    if (it == nodes_.end()) throw Error(ErrorCode::UnknownNode, name);
    return it->second;
}

std::uint64_t KnowledgeBase::next_sequence(const std::vector<Tip>& container) const {
    std::uint64_t next = 0;
    for (const Tip& tip : container) {
        if (tip.sequence >= next) next = tip.sequence + 1;
    }
    return next;
}

void KnowledgeBase::add_task_node(TaskNode node) {
    if (node.name.empty()) throw Error(ErrorCode::InvalidArgument, "node name is empty");
    if (node.description.empty()) {
        throw Error(ErrorCode::InvalidArgument, "node description is empty");
    }
    if (nodes_.count(node.name)) throw Error(ErrorCode::DuplicateNode, node.name);
    std::set<std::uint64_t> seen;
    for (const Tip& tip : node.details) {
        if (tip.text.empty()) throw Error(ErrorCode::InvalidArgument, "tip text is empty");
        if (!seen.insert(tip.sequence).second) {
            throw Error(ErrorCode::InvalidArgument, "duplicate tip sequence in node details");
        }
    }
    if (pruned_names_.count(node.name)) {
        events_.push_back("node_recreated:" + node.name);
    }
    nodes_.emplace(node.name, std::move(node));
    ++revision_;
}

const Tip& KnowledgeBase::append_general_tip(const std::string& tip_text, TipOrigin origin) {
    if (tip_text.empty()) throw Error(ErrorCode::InvalidArgument, "tip text is empty");
    Tip tip{tip_text, origin, next_sequence(general_tips_)};
    general_tips_.push_back(std::move(tip));
    ++revision_;
    return general_tips_.back();
}

const Tip& KnowledgeBase::append_detail_tip(const std::string& node_name,
                                            const std::string& tip_text,
                                            TipOrigin origin) {
    if (tip_text.empty()) throw Error(ErrorCode::InvalidArgument, "tip text is empty");
    auto it = nodes_.find(node_name);
    if (it == nodes_.end()) throw Error(ErrorCode::UnknownNode, node_name);
    Tip tip{tip_text, origin, next_sequence(it->second.details)};
    it->second.details.push_back(std::move(tip));
    ++revision_;
    return it->second.details.back();
}

OutcomeReport KnowledgeBase::record_outcome(const std::string& node_name, bool correct,
                                            const PruneConfig& cfg) {
    auto it = nodes_.find(node_name);
    if (it == nodes_.end()) throw Error(ErrorCode::UnknownNode, node_name);
    if (correct) {
        ++it->second.stats.n_plus;
    } else {
        ++it->second.stats.n_minus;
    }
    ++revision_;
    OutcomeReport report;
    report.new_stats = it->second.stats;
    if (prune_eligible(it->second.stats, cfg)) {
        report.pruned = true;
        pruned_names_.insert(node_name);
        events_.push_back("node_pruned:" + node_name);
        nodes_.erase(it);
    }
    return report;
}

namespace {

const json& require_key(const json& obj, const char* key, const std::string& ctx) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw Error(ErrorCode::SchemaViolation, ctx + ": missing key '" + key + "'");
    }
    return *it;
}

std::uint64_t require_uint(const json& obj, const char* key, const std::string& ctx) {
    const json& v = require_key(obj, key, ctx);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw Error(ErrorCode::SchemaViolation, ctx + ": '" + key + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

std::string require_string(const json& obj, const char* key, const std::string& ctx,
                           bool allow_empty = false) {
    const json& v = require_key(obj, key, ctx);
    if (!v.is_string()) {
        throw Error(ErrorCode::SchemaViolation, ctx + ": '" + key + "' must be a string");
    }
    std::string s = v.get<std::string>();
    if (s.empty() && !allow_empty) {
        throw Error(ErrorCode::SchemaViolation, ctx + ": '" + key + "' must be non-empty");
    }
    return s;
}

json tip_to_json(const Tip& tip) {
    return json{{"text", tip.text},
                {"origin", tip_origin_name(tip.origin)},
                {"sequence", tip.sequence}};
}

std::vector<Tip> tips_from_json(const json& arr, const std::string& ctx) {
    if (!arr.is_array()) {
        throw Error(ErrorCode::SchemaViolation, ctx + ": expected an array of tips");
    }
    std::vector<Tip> tips;
    std::set<std::uint64_t> seen;
    for (const json& t : arr) {
        if (!t.is_object()) throw Error(ErrorCode::SchemaViolation, ctx + ": tip must be an object");
        Tip tip;
        tip.text = require_string(t, "text", ctx);
        tip.origin = tip_origin_from_name(require_string(t, "origin", ctx));
        tip.sequence = require_uint(t, "sequence", ctx);
        if (!seen.insert(tip.sequence).second) {
            throw Error(ErrorCode::SchemaViolation, ctx + ": duplicate tip sequence");
        }
        tips.push_back(std::move(tip));
    }
    return tips;
}

} // namespace

json KnowledgeBase::to_json() const {
    json tips = json::array();
    for (const Tip& tip : general_tips_) tips.push_back(tip_to_json(tip));
    json nodes = json::object();
    for (const auto& [name, node] : nodes_) {
        json details = json::array();
        for (const Tip& tip : node.details) details.push_back(tip_to_json(tip));
        nodes[name] = json{{"description", node.description},
                           {"details", std::move(details)},
                           {"stats", json{{"n_plus", node.stats.n_plus},
                                          {"n_minus", node.stats.n_minus}}}};
    }
    return json{{"version", kSchemaVersion},
                {"revision", revision_},
                {"general_tips", std::move(tips)},
                {"task_nodes", std::move(nodes)}};
}

KnowledgeBase KnowledgeBase::from_json(const json& doc) {
    if (!doc.is_object()) {
        throw Error(ErrorCode::SchemaViolation, "knowledge document must be an object");
    }
    const std::uint64_t version = require_uint(doc, "version", "document");
    if (version == 0 || version > kSchemaVersion) {
        throw Error(ErrorCode::SchemaViolation,
                    "unsupported document version " + std::to_string(version));
    }
    KnowledgeBase kb;
    kb.general_tips_ = tips_from_json(require_key(doc, "general_tips", "document"), "general_tips");
    const json& nodes = require_key(doc, "task_nodes", "document");
    if (!nodes.is_object()) {
        throw Error(ErrorCode::SchemaViolation, "'task_nodes' must be an object");
    }
    for (auto it = nodes.begin(); it != nodes.end(); ++it) {
        const std::string& name = it.key();
        if (name.empty()) throw Error(ErrorCode::SchemaViolation, "node name must be non-empty");
        const json& body = it.value();
        if (!body.is_object()) {
            throw Error(ErrorCode::SchemaViolation, "node '" + name + "' must be an object");
        }
        TaskNode node;
        node.name = name;
        node.description = require_string(body, "description", "node '" + name + "'");
        node.details = tips_from_json(require_key(body, "details", "node '" + name + "'"),
                                      "node '" + name + "' details");
        const json& stats = require_key(body, "stats", "node '" + name + "'");
        if (!stats.is_object()) {
            throw Error(ErrorCode::SchemaViolation, "node '" + name + "' stats must be an object");
        }
        node.stats.n_plus = require_uint(stats, "n_plus", "node '" + name + "' stats");
        node.stats.n_minus = require_uint(stats, "n_minus", "node '" + name + "' stats");
        kb.nodes_.emplace(name, std::move(node));
    }
    kb.revision_ = require_uint(doc, "revision", "document");
    return kb;
}

void KnowledgeBase::save(const std::string& path) const {
    namespace fs = std::filesystem;
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + tmp + "' for writing");
        out << to_json().dump(2) << "\n";
        if (!out.good()) throw Error(ErrorCode::IoFailure, "write failed for '" + tmp + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::IoFailure, "cannot replace '" + path + "'");
    }
}

KnowledgeBase KnowledgeBase::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, "invalid JSON in '" + path + "': " + e.what());
    }
    return from_json(doc);
}

bool KnowledgeBase::operator==(const KnowledgeBase& other) const {
    return general_tips_ == other.general_tips_ && nodes_ == other.nodes_ &&
           revision_ == other.revision_;
}

} // namespace physnote::notes
