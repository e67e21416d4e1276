#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

// Hierarchical knowledge notes: cross-task general tips plus one node per
// task category, each node carrying a description, detail tips and an
// activation record used for error-driven pruning.
namespace physnote::notes {

enum class TipOrigin { Seed, Reflection, TipDiscovery };

const char* tip_origin_name(TipOrigin origin);
TipOrigin tip_origin_from_name(const std::string& name);

struct Tip {
    std::string text;
    TipOrigin origin = TipOrigin::Seed;
    std::uint64_t sequence = 0;

    bool operator==(const Tip&) const = default;
};

struct NodeStats {
    std::uint64_t n_plus = 0;
    std::uint64_t n_minus = 0;

    std::uint64_t activations() const { return n_plus + n_minus; }
    bool operator==(const NodeStats&) const = default;
};

struct TaskNode {
    std::string name;
    std::string description;
    std::vector<Tip> details;
    NodeStats stats;

    bool operator==(const TaskNode&) const = default;
};

struct PruneConfig {
    double tau = 0.7;
    std::uint64_t n_min = 8;
};

struct OutcomeReport {
    NodeStats new_stats;
    bool pruned = false;
};

// Fraction of activations that ended wrong; 0 for an untouched node.
double error_rate(const NodeStats& stats);

// Both clauses must hold: enough activations and error rate strictly
// above the threshold.
bool prune_eligible(const NodeStats& stats, const PruneConfig& cfg);

class KnowledgeBase {
public:
    static constexpr int kSchemaVersion = 1;

    const std::vector<Tip>& general_tips() const { return general_tips_; }
    const std::map<std::string, TaskNode>& task_nodes() const { return nodes_; }
    std::uint64_t revision() const { return revision_; }

    bool has_node(const std::string& name) const { return nodes_.count(name) != 0; }
    const TaskNode& node(const std::string& name) const;

    // Inserts a new node. Re-creating a name pruned earlier in this process
    // is allowed and logged as an event.
    void add_task_node(TaskNode node);

    const Tip& append_general_tip(const std::string& tip_text, TipOrigin origin);
    const Tip& append_detail_tip(const std::string& node_name,
                                 const std::string& tip_text,
                                 TipOrigin origin);

    // Records one activation outcome and eagerly prunes the node when the
    // pruning rule fires on the updated stats.
    OutcomeReport record_outcome(const std::string& node_name, bool correct,
                                 const PruneConfig& cfg);

    // Process-lifetime log of prune / re-create events; never persisted.
    const std::vector<std::string>& events() const { return events_; }

    nlohmann::json to_json() const;
    static KnowledgeBase from_json(const nlohmann::json& doc);

    void save(const std::string& path) const;
    static KnowledgeBase load(const std::string& path);

    bool operator==(const KnowledgeBase& other) const;

private:
    std::uint64_t next_sequence(const std::vector<Tip>& container) const;

    std::vector<Tip> general_tips_;
    std::map<std::string, TaskNode> nodes_;
    std::uint64_t revision_ = 0;
    std::set<std::string> pruned_names_;
    std::vector<std::string> events_;
};

} // namespace physnote::notes
