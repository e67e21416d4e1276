#include "physnote/agent.hpp"

#include <algorithm>

#include "physnote/errors.hpp"
#include "physnote/prompts.hpp"
#include "physnote/text.hpp"

namespace physnote::agent {

using nlohmann::json;

namespace {

constexpr std::string_view kCandidateMarker = "Candidate Answer:";
constexpr std::string_view kVerdictMarker = "Verdict:";
constexpr std::string_view kMissingMarker = "Missing:";
constexpr std::string_view kUnobtainableSuffix = "[unobtainable]";
constexpr std::string_view kFinalMarker = "Final Answer:";
constexpr std::string_view kAssumptionMarker = "Assumption Rationale:";

struct TagSpan {
    size_t begin = 0; // includes the tags themselves
    size_t end = 0;
    std::string content;
};

// Non-nested, case-sensitive tag scan in document order.
std::vector<TagSpan> scan_tag_spans(const std::string& text_in, std::string_view tag) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    std::vector<TagSpan> spans;
    size_t pos = 0;
    while (true) {
        const size_t b = text_in.find(open, pos);
        if (b == std::string::npos) break;
        const size_t c = text_in.find(close, b + open.size());
        if (c == std::string::npos) break;
        TagSpan span;
        span.begin = b;
        span.end = c + close.size();
        span.content = text::trim(text_in.substr(b + open.size(), c - b - open.size()));
        spans.push_back(std::move(span));
        pos = c + close.size();
    }
    return spans;
}

std::string bullet_list(const std::vector<std::string>& items) {
    if (items.empty()) return "(none)\n";
    std::string out;
    for (const std::string& item : items) out += "- " + item + "\n";
    return out;
}

std::string manifest_block(const canon::CanonicalInput& input) {
    std::vector<std::string> lines;
    for (const canon::VisualAsset& asset : input.assets) {
        if (asset.kind == canon::MediaKind::Image) {
            lines.push_back(canon::format_visual_id({asset.asset_index, canon::MediaKind::Image, 0}));
        } else {
            for (std::uint32_t f : asset.sampled_frame_indices) {
                lines.push_back(
                    canon::format_visual_id({asset.asset_index, canon::MediaKind::Video, f}));
            }
        }
    }
    return text::join(lines, "\n");
}

std::vector<backend::Attachment> frame_attachments(const canon::CanonicalInput& input) {
    std::vector<backend::Attachment> out;
    for (const canon::VisualAsset& asset : input.assets) {
        if (asset.kind == canon::MediaKind::Image) {
            out.push_back({asset.source_ref, 0, asset.target_resolution});
        } else {
            for (std::uint32_t f : asset.sampled_frame_indices) {
                out.push_back({asset.source_ref, f, asset.target_resolution});
            }
        }
    }
    return out;
}

std::string facts_block(const std::vector<canon::TriadicObservation>& facts) {
    if (facts.empty()) return "(none)\n";
    std::string out;
    for (const canon::TriadicObservation& f : facts) {
        out += canon::format_triadic_observation(f) + "\n";
    }
    return out;
}

std::string node_context_block(const EpisodeContext& ctx) {
    if (!ctx.node_name) return "(none)\n";
    std::string out = *ctx.node_name + ": " + ctx.node_description + "\n";
    for (const std::string& tip : ctx.detail_tips) out += "- " + tip + "\n";
    return out;
}

// Prior iterations rendered as explicit negative feedback.
std::string feedback_block(const std::vector<IterationRecord>& iterations) {
    if (iterations.empty()) return "";
    std::string out = "Earlier findings:\n";
    for (const IterationRecord& it : iterations) {
        out += "Iteration " + std::to_string(it.index) + " facts:\n";
        out += facts_block(it.facts);
        out += std::string("Verdict: ") + (it.verdict.sufficient ? "sufficient" : "insufficient") +
               "\n";
        for (const MissingEvidence& m : it.verdict.missing_evidence) {
            out += "Missing: " + m.text;
            if (m.unobtainable) out += " [unobtainable]";
            out += "\n";
        }
    }
    return out;
}

std::string note(TurnLog* log, const std::string& reply) {
    if (log) log->raw_replies.push_back(reply);
    return reply;
}

void warn(TurnLog* log, std::string message) {
    if (log) log->warnings.push_back(std::move(message));
}

// Last occurrence of "<marker> <token>"; token runs to end of line.
std::optional<std::string> token_after_marker(const std::string& reply, std::string_view marker) {
    size_t last = std::string::npos;
    size_t pos = 0;
    while (true) {
        const size_t hit = reply.find(marker, pos);
        if (hit == std::string::npos) break;
        last = hit;
        pos = hit + marker.size();
    }
    if (last == std::string::npos) return std::nullopt;
    size_t begin = last + marker.size();
    size_t end = reply.find('\n', begin);
    if (end == std::string::npos) end = reply.size();
    return text::trim(reply.substr(begin, end - begin));
}

} // namespace

bool contains_assumption_marker(const std::string& reply) {
    return reply.find(kAssumptionMarker) != std::string::npos;
}

std::pair<Hypothesis, QuerySet> parse_agent_turn(const std::string& reply) {
    const auto info_spans = scan_tag_spans(reply, "info");
    const auto attention_spans = scan_tag_spans(reply, "attention");

    QuerySet queries;
    for (const TagSpan& s : info_spans) {
        if (!s.content.empty()) queries.info_queries.push_back(s.content);
    }
    for (const TagSpan& s : attention_spans) {
        if (!s.content.empty()) queries.attention_directives.push_back(s.content);
    }

    // Strip tag spans, then find the candidate line in what remains.
    std::vector<std::pair<size_t, size_t>> cuts;
    for (const TagSpan& s : info_spans) cuts.emplace_back(s.begin, s.end);
    for (const TagSpan& s : attention_spans) cuts.emplace_back(s.begin, s.end);
    std::sort(cuts.begin(), cuts.end());
    std::string remainder;
    size_t pos = 0;
    for (const auto& [b, e] : cuts) {
        if (b > pos) remainder += reply.substr(pos, b - pos);
        pos = std::max(pos, e);
    }
    if (pos < reply.size()) remainder += reply.substr(pos);

    Hypothesis hyp;
    bool found_candidate = false;
    std::vector<std::string> prose;
    for (const std::string& raw : text::split_lines(remainder)) {
        const std::string line = text::trim(raw);
        if (text::starts_with(line, kCandidateMarker)) {
            const std::string token = text::trim(line.substr(kCandidateMarker.size()));
            if (!token.empty()) {
                hyp.candidate_answer = token;
                found_candidate = true;
            }
        } else if (!line.empty()) {
            prose.push_back(line);
        }
    }
    if (!found_candidate) {
        throw Error(ErrorCode::MissingCandidateAnswer, "no 'Candidate Answer:' line in reply");
    }
    if (queries.info_queries.empty() && queries.attention_directives.empty()) {
        throw Error(ErrorCode::NoQueries, "reply carries no <info> or <attention> queries");
    }
    hyp.explanation = text::join(prose, "\n");
    return {std::move(hyp), std::move(queries)};
}

GatherResult gather_evidence(const QuerySet& queries,
                             const canon::CanonicalInput& input,
                             backend::Backend& model,
                             TurnLog* log) {
    const std::string manifest = manifest_block(input);
    const auto vars = [&](std::string_view tmpl) {
        return prompts::render(tmpl, {{"MANIFEST", manifest},
                                      {"INFO_QUERIES", bullet_list(queries.info_queries)},
                                      {"ATTENTION", bullet_list(queries.attention_directives)}});
    };

    auto run_pass = [&](std::string_view user_tmpl, GatherResult& result) {
        backend::ModelRequest request;
        request.role_tag = backend::RoleTag::Gatherer;
        request.messages.push_back({backend::Speaker::System,
                                    std::string(prompts::gatherer_system()),
                                    {}});
        request.messages.push_back(
            {backend::Speaker::User, vars(user_tmpl), frame_attachments(input)});
        const std::string reply = note(log, model.complete(request).text);
        for (const std::string& raw : text::split_lines(reply)) {
            if (text::trim(raw).empty()) continue;
            try {
                result.facts.push_back(canon::parse_triadic_observation(raw, input));
            } catch (const Error&) {
                result.rejected_lines.push_back(raw);
            }
        }
    };

    GatherResult result;
    run_pass(prompts::gatherer_user(), result);
    if (result.facts.empty()) {
        // Exactly one format-reminder retry when nothing survived the gate.
        run_pass(prompts::gatherer_retry_user(), result);
    }
    return result;
}

ValidationVerdict validate(const Hypothesis& hypothesis,
                           const std::vector<canon::TriadicObservation>& facts,
                           backend::Backend& model,
                           TurnLog* log) {
    backend::ModelRequest request;
    request.role_tag = backend::RoleTag::Validator;
    request.messages.push_back({backend::Speaker::System,
                                std::string(prompts::validator_system()),
                                {}});
    request.messages.push_back(
        {backend::Speaker::User,
         prompts::render(prompts::validator_user(), {{"HYPOTHESIS", hypothesis.explanation},
                                                     {"CANDIDATE", hypothesis.candidate_answer},
                                                     {"FACTS", facts_block(facts)}}),
         {}});
    const std::string reply = note(log, model.complete(request).text);

    std::optional<bool> sufficient;
    std::vector<MissingEvidence> missing;
    for (const std::string& raw : text::split_lines(reply)) {
        const std::string line = text::trim(raw);
        if (text::starts_with(line, kVerdictMarker)) {
            if (sufficient.has_value()) continue; // first verdict line wins
            const std::string value = text::trim(line.substr(kVerdictMarker.size()));
            if (value == "sufficient") {
                sufficient = true;
            } else if (value == "insufficient") {
                sufficient = false;
            } else {
                throw Error(ErrorCode::MalformedVerdict, "unrecognized verdict '" + value + "'");
            }
        } else if (text::starts_with(line, kMissingMarker)) {
            std::string body = text::trim(line.substr(kMissingMarker.size()));
            MissingEvidence ev;
            if (text::ends_with(body, kUnobtainableSuffix)) {
                ev.unobtainable = true;
                body = text::trim(body.substr(0, body.size() - kUnobtainableSuffix.size()));
            }
            ev.text = std::move(body);
            if (!ev.text.empty()) missing.push_back(std::move(ev));
        }
    }
    if (!sufficient.has_value()) {
        throw Error(ErrorCode::MalformedVerdict, "reply carries no 'Verdict:' line");
    }
    ValidationVerdict verdict;
    verdict.sufficient = *sufficient;
    if (verdict.sufficient && !missing.empty()) {
        warn(log, "sufficient verdict listed missing evidence; dropping it");
    } else if (!verdict.sufficient) {
        verdict.missing_evidence = std::move(missing);
    }
    return verdict;
}

DegenerativeOutcome degenerative_inference(const canon::CanonicalInput& input,
                                           const EpisodeContext& context,
                                           const std::vector<IterationRecord>& iterations,
                                           backend::Backend& model,
                                           TurnLog* log) {
    std::vector<canon::TriadicObservation> all_facts;
    std::vector<std::string> candidates;
    for (const IterationRecord& it : iterations) {
        all_facts.insert(all_facts.end(), it.facts.begin(), it.facts.end());
        if (!it.hypothesis.candidate_answer.empty()) {
            candidates.push_back(it.hypothesis.candidate_answer);
        }
    }
    backend::ModelRequest request;
    request.role_tag = backend::RoleTag::Degenerative;
    request.messages.push_back({backend::Speaker::System,
                                std::string(prompts::degenerative_system()),
                                {}});
    request.messages.push_back(
        {backend::Speaker::User,
         prompts::render(prompts::degenerative_user(),
                         {{"QUESTION", input.annotated_question},
                          {"CHOICES", context.choices_block},
                          {"FACTS", facts_block(all_facts)},
                          {"CANDIDATES",
                           candidates.empty() ? "(none)" : text::join(candidates, ", ")}}),
         frame_attachments(input)});
    const std::string reply = note(log, model.complete(request).text);

    DegenerativeOutcome out;
    out.raw_reply = reply;
    out.assumption = contains_assumption_marker(reply);
    auto token = token_after_marker(reply, kFinalMarker);
    if (token && !token->empty()) out.answer = *token;
    return out;
}

ReasoningTrace run_episode(const canon::CanonicalInput& input,
                           const EpisodeContext& context,
                           backend::Backend& model,
                           const EpisodeOptions& options) {
    if (options.max_iters < 1) {
        throw Error(ErrorCode::InvalidArgument, "max_iters must be at least 1");
    }
    ReasoningTrace trace;
    trace.episode_id = options.episode_id;
    trace.context_node = context.node_name;
    trace.general_tips_used = context.general_tips;

    TurnLog log;
    bool settled = false;
    for (int i = 1; i <= options.max_iters && !settled; ++i) {
        backend::ModelRequest request;
        request.role_tag = backend::RoleTag::Hypothesizer;
        request.messages.push_back({backend::Speaker::System,
                                    std::string(prompts::hypothesizer_system()),
                                    {}});
        request.messages.push_back(
            {backend::Speaker::User,
             prompts::render(prompts::hypothesizer_user(),
                             {{"GENERAL_TIPS", bullet_list(context.general_tips)},
                              {"NODE_CONTEXT", node_context_block(context)},
                              {"QUESTION", input.annotated_question},
                              {"CHOICES", context.choices_block},
                              {"FEEDBACK", feedback_block(trace.iterations)}}),
             frame_attachments(input)});
        const std::string reply = note(&log, model.complete(request).text);
        auto [hypothesis, queries] = parse_agent_turn(reply);

        IterationRecord record;
        record.index = i;
        record.hypothesis = std::move(hypothesis);
        record.queries = std::move(queries);

        GatherResult gathered = gather_evidence(record.queries, input, model, &log);
        record.facts = std::move(gathered.facts);
        record.rejected_fact_lines = std::move(gathered.rejected_lines);

        try {
            record.verdict = validate(record.hypothesis, record.facts, model, &log);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::MalformedVerdict) throw;
            record.verdict = ValidationVerdict{};
            warn(&log, "iteration " + std::to_string(i) +
                           ": malformed verdict treated as insufficient");
        }
        settled = record.verdict.sufficient;
        if (settled) trace.final_answer = record.hypothesis.candidate_answer;
        trace.iterations.push_back(std::move(record));
    }

    if (!settled) {
        trace.degenerative_used = true;
        DegenerativeOutcome out =
            degenerative_inference(input, context, trace.iterations, model, &log);
        if (out.answer) {
            trace.final_answer = *out.answer;
        } else if (options.answer_fallback) {
            auto fallback = options.answer_fallback(out.raw_reply);
            if (fallback) {
                trace.final_answer = *fallback;
            } else {
                warn(&log, "degenerative reply yielded no answer");
            }
        } else {
            throw Error(ErrorCode::MissingFinalAnswer, "no 'Final Answer:' line in reply");
        }
    }

    for (const std::string& reply : log.raw_replies) {
        if (contains_assumption_marker(reply)) {
            trace.assumption_used = true;
            break;
        }
    }
    trace.warnings = std::move(log.warnings);
    return trace;
}

json ReasoningTrace::to_json() const {
    json iters = json::array();
    for (const IterationRecord& it : iterations) {
        json facts = json::array();
        for (const canon::TriadicObservation& f : it.facts) {
            facts.push_back(json{{"id", canon::format_visual_id(f.v)},
                                 {"entity", f.entity},
                                 {"description", f.description}});
        }
        json missing = json::array();
        for (const MissingEvidence& m : it.verdict.missing_evidence) {
            missing.push_back(json{{"text", m.text}, {"unobtainable", m.unobtainable}});
        }
        iters.push_back(json{
            {"index", it.index},
            {"hypothesis", json{{"explanation", it.hypothesis.explanation},
                                {"candidate_answer", it.hypothesis.candidate_answer}}},
            {"queries", json{{"info", it.queries.info_queries},
                             {"attention", it.queries.attention_directives}}},
            {"facts", std::move(facts)},
            {"verdict", json{{"sufficient", it.verdict.sufficient},
                             {"missing", std::move(missing)}}},
            {"rejected_fact_lines", it.rejected_fact_lines},
        });
    }
    return json{{"episode_id", episode_id},
                {"final_answer", final_answer},
                {"degenerative_used", degenerative_used},
                {"assumption_used", assumption_used},
                {"context_node", context_node ? json(*context_node) : json(nullptr)},
                {"general_tips_used", general_tips_used},
                {"warnings", warnings},
                {"iterations", std::move(iters)}};
}

} // namespace physnote::agent
