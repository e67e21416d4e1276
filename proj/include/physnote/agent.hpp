#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "physnote/backend.hpp"
#include "physnote/canon.hpp"

// The iterative Hypothesis-Evidence-Validation loop. Each iteration asks
// for a hypothesis plus evidence queries, grounds them as triadic
// observations and lets a validator decide whether to stop. When the
// iteration budget runs out the episode falls back to degenerative
// inference (internal knowledge, flagged as such).
namespace physnote::agent {

struct Hypothesis {
    std::string explanation;
    std::string candidate_answer;
};

struct QuerySet {
    std::vector<std::string> info_queries;
    std::vector<std::string> attention_directives;
};

struct MissingEvidence {
    std::string text;
    bool unobtainable = false;
};

struct ValidationVerdict {
    bool sufficient = false;
    std::vector<MissingEvidence> missing_evidence;
};

struct IterationRecord {
    int index = 0; // 1-based
    Hypothesis hypothesis;
    QuerySet queries;
    std::vector<canon::TriadicObservation> facts;
    ValidationVerdict verdict;
    std::vector<std::string> rejected_fact_lines;
};

struct ReasoningTrace {
    std::string episode_id;
    std::vector<IterationRecord> iterations;
    std::string final_answer;
    bool degenerative_used = false;
    bool assumption_used = false;
    std::optional<std::string> context_node;
    std::vector<std::string> general_tips_used;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

// Knowledge handed into an episode, plus the answer sheet.
struct EpisodeContext {
    std::optional<std::string> node_name;
    std::string node_description;
    std::vector<std::string> detail_tips;
    std::vector<std::string> general_tips;
    std::string choices_block; // "A. ..." lines
};

struct EpisodeOptions {
    std::string episode_id;
    int max_iters = 3;
    // Invoked on a degenerative reply without a final-answer line; returning
    // nothing leaves the episode unanswered instead of failing it.
    std::function<std::optional<std::string>(const std::string&)> answer_fallback;
};

// Collects raw replies (for assumption scanning) and loop warnings.
struct TurnLog {
    std::vector<std::string> raw_replies;
    std::vector<std::string> warnings;
};

// Splits a hypothesizer reply into tagged queries, candidate answer and
// remaining explanation prose.
std::pair<Hypothesis, QuerySet> parse_agent_turn(const std::string& reply);

struct GatherResult {
    std::vector<canon::TriadicObservation> facts;
    std::vector<std::string> rejected_lines;
};

// One request carrying all queries; replies are filtered line by line
// through the triadic gate. When every line is rejected, exactly one
// format-reminder re-prompt is issued.
GatherResult gather_evidence(const QuerySet& queries,
                             const canon::CanonicalInput& input,
                             backend::Backend& model,
                             TurnLog* log = nullptr);

ValidationVerdict validate(const Hypothesis& hypothesis,
                           const std::vector<canon::TriadicObservation>& facts,
                           backend::Backend& model,
                           TurnLog* log = nullptr);

struct DegenerativeOutcome {
    std::optional<std::string> answer;
    bool assumption = false;
    std::string raw_reply;
};

DegenerativeOutcome degenerative_inference(const canon::CanonicalInput& input,
                                           const EpisodeContext& context,
                                           const std::vector<IterationRecord>& iterations,
                                           backend::Backend& model,
                                           TurnLog* log = nullptr);

ReasoningTrace run_episode(const canon::CanonicalInput& input,
                           const EpisodeContext& context,
                           backend::Backend& model,
                           const EpisodeOptions& options);

// True when the text contains the assumption marker line.
bool contains_assumption_marker(const std::string& reply);

} // namespace physnote::agent
