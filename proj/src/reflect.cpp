#include "physnote/reflect.hpp"

#include <fstream>

#include "physnote/errors.hpp"
#include "physnote/prompts.hpp"
#include "physnote/text.hpp"

namespace physnote::reflect {

namespace {

constexpr std::string_view kDetailMarker = "Tip[detail]:";
constexpr std::string_view kGeneralMarker = "Tip[general]:";

bool is_lower_word(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!(c >= 'a' && c <= 'z')) return false;
    }
    return true;
}

std::string render_trace(const agent::ReasoningTrace& trace) {
    std::string out;
    for (const agent::IterationRecord& it : trace.iterations) {
        out += "Iteration " + std::to_string(it.index) + ":\n";
        out += "Hypothesis: " + it.hypothesis.explanation + "\n";
        out += "Candidate: " + it.hypothesis.candidate_answer + "\n";
        out += "Facts:\n";
        for (const canon::TriadicObservation& f : it.facts) {
            out += canon::format_triadic_observation(f) + "\n";
        }
        out += std::string("Verdict: ") +
               (it.verdict.sufficient ? "sufficient" : "insufficient") + "\n";
        for (const agent::MissingEvidence& m : it.verdict.missing_evidence) {
            out += "Missing: " + m.text + (m.unobtainable ? " [unobtainable]" : "") + "\n";
        }
    }
    out += "Final answer: " + trace.final_answer + "\n";
    out += std::string("Degenerative fallback: ") + (trace.degenerative_used ? "yes" : "no") + "\n";
    out += std::string("Stated assumptions: ") + (trace.assumption_used ? "yes" : "no") + "\n";
    return out;
}

struct TipLines {
    std::vector<std::string> detail;
    std::vector<std::string> general;
    // Encounter order across both kinds, true = detail.
    std::vector<std::pair<bool, std::string>> ordered;
};

TipLines parse_tip_lines(const std::string& reply) {
    TipLines out;
    for (const std::string& raw : text::split_lines(reply)) {
        const std::string line = text::trim(raw);
        if (text::starts_with(line, kDetailMarker)) {
            const std::string tip = text::trim(line.substr(kDetailMarker.size()));
            if (!tip.empty()) {
                out.detail.push_back(tip);
                out.ordered.emplace_back(true, tip);
            }
        } else if (text::starts_with(line, kGeneralMarker)) {
            const std::string tip = text::trim(line.substr(kGeneralMarker.size()));
            if (!tip.empty()) {
                out.general.push_back(tip);
                out.ordered.emplace_back(false, tip);
            }
        }
    }
    return out;
}

} // namespace

KeywordFilter::KeywordFilter(std::set<std::string> primitives)
    : primitives_(std::move(primitives)) {
    if (primitives_.size() != kPrimitiveCount) {
        throw Error(ErrorCode::ConfigError,
                    "keyword filter needs exactly " + std::to_string(kPrimitiveCount) +
                        " distinct primitives, got " + std::to_string(primitives_.size()));
    }
    for (const std::string& p : primitives_) {
        if (!is_lower_word(p)) {
            throw Error(ErrorCode::ConfigError,
                        "keyword '" + p + "' must be a lowercase word");
        }
    }
}

KeywordFilter KeywordFilter::default_filter() {
    return KeywordFilter(std::set<std::string>{
        "trajectory", "collision", "contact", "velocity", "acceleration",
        "friction", "gravity", "mass", "momentum", "force",
        "rotation", "deformation", "occlusion", "shadow", "support"});
}

KeywordFilter KeywordFilter::from_keywords(std::vector<std::string> keywords) {
    return KeywordFilter(std::set<std::string>(keywords.begin(), keywords.end()));
}

KeywordFilter KeywordFilter::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open keyword file '" + path + "'");
    std::set<std::string> primitives;
    std::string line;
    while (std::getline(in, line)) {
        const std::string word = text::trim(line);
        if (!word.empty()) primitives.insert(word);
    }
    return KeywordFilter(std::move(primitives));
}

std::string stem(const std::string& token) {
    std::string out = token;
    for (std::string_view suffix : {"s", "es", "ing", "ed"}) {
        if (out.size() > suffix.size() && text::ends_with(out, suffix)) {
            out.resize(out.size() - suffix.size());
        }
    }
    return out;
}

bool physical_operator_present(const std::vector<canon::TriadicObservation>& facts,
                               const KeywordFilter& filter) {
    std::set<std::string> stems;
    for (const std::string& p : filter.primitives()) stems.insert(stem(p));
    for (const canon::TriadicObservation& fact : facts) {
        for (const std::string& token : text::tokenize_lower(fact.description)) {
            if (stems.count(stem(token))) return true;
        }
    }
    return false;
}

EligibilityReport eligibility(const agent::ReasoningTrace& trace,
                              const std::string& ground_truth,
                              const KeywordFilter& filter) {
    EligibilityReport report;
    report.correct = !trace.final_answer.empty() && trace.final_answer == ground_truth;
    report.degenerative_used = trace.degenerative_used;
    report.assumption_used = trace.assumption_used;
    std::vector<canon::TriadicObservation> all_facts;
    for (const agent::IterationRecord& it : trace.iterations) {
        all_facts.insert(all_facts.end(), it.facts.begin(), it.facts.end());
    }
    report.physically_anchored = physical_operator_present(all_facts, filter);
    report.eligible = report.correct && !report.degenerative_used && !report.assumption_used &&
                      report.physically_anchored;
    return report;
}

std::vector<notes::Tip> reflective_update(notes::KnowledgeBase& kb,
                                          const std::string& node_name,
                                          const agent::ReasoningTrace& trace,
                                          backend::Backend& model) {
    if (!kb.has_node(node_name)) throw Error(ErrorCode::UnknownNode, node_name);
    backend::ModelRequest request;
    request.role_tag = backend::RoleTag::Reflection;
    request.messages.push_back({backend::Speaker::System,
                                std::string(prompts::reflection_system()),
                                {}});
    request.messages.push_back(
        {backend::Speaker::User,
         prompts::render(prompts::reflection_user(),
                         {{"NODE", node_name}, {"TRACE", render_trace(trace)}}),
         {}});
    const TipLines lines = parse_tip_lines(model.complete(request).text);
    if (lines.ordered.empty()) {
        throw Error(ErrorCode::NoTipsExtracted, "reflection reply carried no tip lines");
    }
    std::vector<notes::Tip> appended;
    for (const auto& [is_detail, tip] : lines.ordered) {
        if (is_detail) {
            appended.push_back(kb.append_detail_tip(node_name, tip, notes::TipOrigin::Reflection));
        } else {
            appended.push_back(kb.append_general_tip(tip, notes::TipOrigin::Reflection));
        }
    }
    return appended;
}

std::vector<notes::Tip> tip_discovery(notes::KnowledgeBase& kb,
                                      const std::string& node_name,
                                      const agent::ReasoningTrace& trace,
                                      const std::string& ground_truth,
                                      backend::Backend& model) {
    if (!kb.has_node(node_name)) throw Error(ErrorCode::UnknownNode, node_name);
    backend::ModelRequest request;
    request.role_tag = backend::RoleTag::Reflection;
    request.messages.push_back({backend::Speaker::System,
                                std::string(prompts::tip_discovery_system()),
                                {}});
    request.messages.push_back(
        {backend::Speaker::User,
         prompts::render(prompts::tip_discovery_user(),
                         {{"NODE", node_name},
                          {"WRONG_ANSWER", trace.final_answer.empty() ? "(none)" : trace.final_answer},
                          {"GROUND_TRUTH", ground_truth},
                          {"TRACE", render_trace(trace)}}),
         {}});
    const TipLines lines = parse_tip_lines(model.complete(request).text);
    if (lines.detail.empty()) {
        throw Error(ErrorCode::NoTipsExtracted, "tip discovery reply carried no Tip[detail] lines");
    }
    std::vector<notes::Tip> appended;
    const size_t count = std::min<size_t>(2, lines.detail.size());
    for (size_t i = 0; i < count; ++i) {
        appended.push_back(
            kb.append_detail_tip(node_name, lines.detail[i], notes::TipOrigin::TipDiscovery));
    }
    return appended;
}

ItemConclusion conclude_training_item(notes::KnowledgeBase& kb,
                                      const std::string& node_name,
                                      const agent::ReasoningTrace& trace,
                                      const std::string& ground_truth,
                                      backend::Backend& model,
                                      const notes::PruneConfig& prune_cfg,
                                      const KeywordFilter& filter) {
    ItemConclusion conclusion;
    conclusion.eligibility = eligibility(trace, ground_truth, filter);
    const notes::OutcomeReport outcome =
        kb.record_outcome(node_name, conclusion.eligibility.correct, prune_cfg);
    conclusion.outcome_recorded = true;
    conclusion.pruned = outcome.pruned;
    if (conclusion.pruned) return conclusion; // the node is gone; nothing to update
    if (conclusion.eligibility.eligible) {
        conclusion.appended_tips = reflective_update(kb, node_name, trace, model);
        conclusion.update_kind = UpdateKind::Reflective;
    } else if (!conclusion.eligibility.correct) {
        conclusion.appended_tips = tip_discovery(kb, node_name, trace, ground_truth, model);
        conclusion.update_kind = UpdateKind::TipDiscovery;
    }
    return conclusion;
}

} // namespace physnote::reflect
