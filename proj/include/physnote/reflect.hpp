#pragma once

#include <set>
#include <string>
#include <vector>

#include "physnote/agent.hpp"
#include "physnote/backend.hpp"
#include "physnote/notes.hpp"

// Eligibility-gated consolidation: only traces that are correct, fully
// grounded (no degenerative fallback, no stated assumptions) and anchored
// in physical vocabulary may write knowledge back. Failures instead go
// through tip discovery against the ground truth.
namespace physnote::reflect {

// Exactly 15 lowercase physical primitives.
class KeywordFilter {
public:
    static constexpr size_t kPrimitiveCount = 15;

    static KeywordFilter default_filter();
    // One keyword per line; blank lines ignored.
    static KeywordFilter from_file(const std::string& path);
    static KeywordFilter from_keywords(std::vector<std::string> keywords);

    const std::set<std::string>& primitives() const { return primitives_; }

private:
    explicit KeywordFilter(std::set<std::string> primitives);

    std::set<std::string> primitives_;
};

// Naive suffix stripping: removes trailing "s", "es", "ing", "ed", each at
// most once, in that order. Deliberately crude; "colliding" stems to
// "collid" and will not meet "collision".
std::string stem(const std::string& token);

// True when any fact description contains a token whose stem equals the
// stem of one of the primitives.
bool physical_operator_present(const std::vector<canon::TriadicObservation>& facts,
                               const KeywordFilter& filter);

struct EligibilityReport {
    bool correct = false;            // c
    bool degenerative_used = false;  // f
    bool assumption_used = false;    // a
    bool physically_anchored = false; // d
    bool eligible = false;           // c and not f and not a and d
};

EligibilityReport eligibility(const agent::ReasoningTrace& trace,
                              const std::string& ground_truth,
                              const KeywordFilter& filter);

// Distills an eligible trace into tips: Tip[detail] lines go to the node,
// Tip[general] lines to the shared pool. At least one tip must come back.
std::vector<notes::Tip> reflective_update(notes::KnowledgeBase& kb,
                                          const std::string& node_name,
                                          const agent::ReasoningTrace& trace,
                                          backend::Backend& model);

// Failure path: asks for one or two corrective detail tips given the
// ground truth; anything beyond the first two is ignored.
std::vector<notes::Tip> tip_discovery(notes::KnowledgeBase& kb,
                                      const std::string& node_name,
                                      const agent::ReasoningTrace& trace,
                                      const std::string& ground_truth,
                                      backend::Backend& model);

enum class UpdateKind { None, Reflective, TipDiscovery };

struct ItemConclusion {
    bool outcome_recorded = false;
    UpdateKind update_kind = UpdateKind::None;
    bool pruned = false;
    EligibilityReport eligibility;
    std::vector<notes::Tip> appended_tips;
};

// Training epilogue for one item: record the outcome on the selected node
// (with eager pruning), then run exactly one update path. A pruned node
// receives no update; a correct-but-ineligible trace receives none either.
ItemConclusion conclude_training_item(notes::KnowledgeBase& kb,
                                      const std::string& node_name,
                                      const agent::ReasoningTrace& trace,
                                      const std::string& ground_truth,
                                      backend::Backend& model,
                                      const notes::PruneConfig& prune_cfg,
                                      const KeywordFilter& filter);

} // namespace physnote::reflect
