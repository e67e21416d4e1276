#include "physnote/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "physnote/errors.hpp"
#include "physnote/text.hpp"

namespace physnote::harness {

namespace fs = std::filesystem;
using nlohmann::json;

const char* domain_name(Domain d) {
    switch (d) {
    case Domain::S1: return "S1";
    case Domain::S2: return "S2";
    case Domain::S3: return "S3";
    case Domain::S4: return "S4";
    }
    return "S1";
}

const char* split_name(Split s) {
    switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    }
    return "train";
}

namespace {

Domain domain_from_name(const std::string& name, const std::string& ctx) {
    if (name == "S1") return Domain::S1;
    if (name == "S2") return Domain::S2;
    if (name == "S3") return Domain::S3;
    if (name == "S4") return Domain::S4;
    throw Error(ErrorCode::SchemaViolation, ctx + ": unknown domain '" + name + "'");
}

Split split_from_name(const std::string& name, const std::string& ctx) {
    if (name == "train") return Split::Train;
    if (name == "val") return Split::Val;
    if (name == "test") return Split::Test;
    throw Error(ErrorCode::SchemaViolation, ctx + ": unknown split '" + name + "'");
}

std::string require_item_string(const json& obj, const char* key, const std::string& ctx,
                                bool allow_empty = false) {
    if (!obj.contains(key) || !obj[key].is_string()) {
        throw Error(ErrorCode::SchemaViolation, ctx + ": missing string field '" + key + "'");
    }
    std::string s = obj[key].get<std::string>();
    if (s.empty() && !allow_empty) {
        throw Error(ErrorCode::SchemaViolation, ctx + ": field '" + key + "' must be non-empty");
    }
    return s;
}

const char* update_kind_name(reflect::UpdateKind kind) {
    switch (kind) {
    case reflect::UpdateKind::None: return "none";
    case reflect::UpdateKind::Reflective: return "reflective";
    case reflect::UpdateKind::TipDiscovery: return "tip_discovery";
    }
    return "none";
}

std::string sanitize_episode_id(const std::string& id) {
    std::string out;
    for (char c : id) {
        const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
        out.push_back(ok ? c : '_');
    }
    return out;
}

void write_trace(const std::string& trace_dir, const agent::ReasoningTrace& trace) {
    if (trace_dir.empty()) return;
    const std::string path = trace_path(trace_dir, trace.episode_id);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write trace '" + path + "'");
    out << trace.to_json().dump(2) << "\n";
}

agent::EpisodeContext make_context(const notes::KnowledgeBase& kb,
                                   const std::optional<std::string>& node_name,
                                   const BenchmarkItem& item) {
    agent::EpisodeContext ctx;
    ctx.node_name = node_name;
    if (node_name) {
        const notes::TaskNode& node = kb.node(*node_name);
        ctx.node_description = node.description;
        for (const notes::Tip& tip : node.details) ctx.detail_tips.push_back(tip.text);
    }
    for (const notes::Tip& tip : kb.general_tips()) ctx.general_tips.push_back(tip.text);
    ctx.choices_block = format_choices(item);
    return ctx;
}

agent::EpisodeOptions make_episode_options(const Engine& engine, const BenchmarkItem& item) {
    agent::EpisodeOptions opts;
    opts.episode_id = item.id;
    opts.max_iters = engine.config.max_iters;
    const std::vector<std::string> labels = labels_for(item.choices.size());
    opts.answer_fallback = [labels](const std::string& raw) -> std::optional<std::string> {
        try {
            return extract_answer(raw, labels);
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    return opts;
}

} // namespace

std::vector<std::string> labels_for(size_t choice_count) {
    std::vector<std::string> labels;
    for (size_t i = 0; i < choice_count && i < 26; ++i) {
        labels.push_back(std::string(1, static_cast<char>('A' + i)));
    }
    return labels;
}

std::string format_choices(const BenchmarkItem& item) {
    std::string out;
    const auto labels = labels_for(item.choices.size());
    for (size_t i = 0; i < item.choices.size(); ++i) {
        out += labels[i] + ". " + item.choices[i] + "\n";
    }
    return out;
}

std::vector<BenchmarkItem> load_items(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open items file '" + path + "'");
    const fs::path base = fs::path(path).parent_path();

    std::vector<BenchmarkItem> items;
    std::set<std::string> seen_ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const std::string ctx = "line " + std::to_string(line_no);
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::SchemaViolation, ctx + ": invalid JSON: " + e.what());
        }
        if (!doc.is_object()) {
            throw Error(ErrorCode::SchemaViolation, ctx + ": item must be an object");
        }
        BenchmarkItem item;
        item.id = require_item_string(doc, "id", ctx);
        if (!seen_ids.insert(item.id).second) {
            throw Error(ErrorCode::SchemaViolation, ctx + ": duplicate id '" + item.id + "'");
        }
        item.question = require_item_string(doc, "question", ctx);
        if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
            throw Error(ErrorCode::SchemaViolation, ctx + ": 'choices' must be a non-empty array");
        }
        if (doc["choices"].size() > 26) {
            throw Error(ErrorCode::SchemaViolation, ctx + ": more than 26 choices");
        }
        for (const json& c : doc["choices"]) {
            if (!c.is_string() || c.get<std::string>().empty()) {
                throw Error(ErrorCode::SchemaViolation, ctx + ": choices must be non-empty strings");
            }
            item.choices.push_back(c.get<std::string>());
        }
        if (!doc.contains("assets") || !doc["assets"].is_array() || doc["assets"].empty()) {
            throw Error(ErrorCode::SchemaViolation, ctx + ": 'assets' must be a non-empty array");
        }
        for (const json& a : doc["assets"]) {
            if (!a.is_object()) {
                throw Error(ErrorCode::SchemaViolation, ctx + ": asset must be an object");
            }
            AssetRef ref;
            const std::string kind = require_item_string(a, "kind", ctx);
            if (kind == "image") {
                ref.kind = canon::MediaKind::Image;
            } else if (kind == "video") {
                ref.kind = canon::MediaKind::Video;
            } else {
                throw Error(ErrorCode::SchemaViolation, ctx + ": unknown asset kind '" + kind + "'");
            }
            const fs::path rel = require_item_string(a, "path", ctx);
            const fs::path resolved = rel.is_absolute() ? rel : base / rel;
            ref.path = resolved.lexically_normal().string();
            if (!fs::exists(ref.path)) {
                throw Error(ErrorCode::MissingAsset, ref.path);
            }
            item.assets.push_back(std::move(ref));
        }
        item.domain = domain_from_name(require_item_string(doc, "domain", ctx), ctx);
        item.split = split_from_name(require_item_string(doc, "split", ctx), ctx);
        if (doc.contains("answer") && !doc["answer"].is_null()) {
            if (!doc["answer"].is_string()) {
                throw Error(ErrorCode::SchemaViolation, ctx + ": 'answer' must be a string");
            }
            const std::string answer = doc["answer"].get<std::string>();
            const auto labels = labels_for(item.choices.size());
            if (std::find(labels.begin(), labels.end(), answer) == labels.end()) {
                throw Error(ErrorCode::SchemaViolation,
                            ctx + ": answer '" + answer + "' is not a valid label for " +
                                std::to_string(item.choices.size()) + " choices");
            }
            item.answer = answer;
        }
        items.push_back(std::move(item));
    }
    return items;
}

namespace {

std::uint32_t probe_video_frames(const std::string& path) {
    if (fs::is_directory(path)) {
        std::uint32_t count = 0;
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file()) ++count;
        }
        if (count == 0) throw Error(ErrorCode::UnreadableAsset, path + " (empty frame directory)");
        return count;
    }
    const std::string sidecar = path + ".frames";
    std::ifstream in(sidecar);
    if (!in) {
        throw Error(ErrorCode::UnreadableAsset,
                    path + " (no frame directory and no '" + sidecar + "' sidecar)");
    }
    long long value = -1;
    in >> value;
    if (in.fail() || value < 1) {
        throw Error(ErrorCode::UnreadableAsset, sidecar + " (expected a positive frame count)");
    }
    return static_cast<std::uint32_t>(value);
}

} // namespace

std::vector<canon::RawAsset> resolve_raw_assets(const BenchmarkItem& item) {
    std::vector<canon::RawAsset> out;
    for (const AssetRef& ref : item.assets) {
        canon::RawAsset raw;
        raw.kind = ref.kind;
        raw.source_ref = ref.path;
        if (ref.kind == canon::MediaKind::Image) {
            raw.total_frames = 1;
        } else {
            raw.total_frames = probe_video_frames(ref.path);
        }
        out.push_back(std::move(raw));
    }
    return out;
}

std::string extract_answer(const std::string& reply,
                           const std::vector<std::string>& valid_labels) {
    const auto is_valid = [&valid_labels](const std::string& token) {
        return std::find(valid_labels.begin(), valid_labels.end(), token) != valid_labels.end();
    };
    constexpr std::string_view kMarkers[] = {"Final Answer:", "Extract Answer:",
                                             "Candidate Answer:"};
    for (std::string_view marker : kMarkers) {
        std::optional<std::string> best;
        size_t pos = 0;
        while (true) {
            const size_t hit = reply.find(marker, pos);
            if (hit == std::string::npos) break;
            const size_t begin = hit + marker.size();
            size_t end = reply.find('\n', begin);
            if (end == std::string::npos) end = reply.size();
            const std::string token = text::trim(reply.substr(begin, end - begin));
            if (is_valid(token)) best = token;
            pos = hit + marker.size();
        }
        if (best) return *best;
    }
    // Last standalone single-letter label anywhere in the text.
    const auto is_alnum = [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
    };
    std::optional<std::string> best;
    for (size_t i = 0; i < reply.size(); ++i) {
        const bool left_ok = (i == 0) || !is_alnum(reply[i - 1]);
        const bool right_ok = (i + 1 == reply.size()) || !is_alnum(reply[i + 1]);
        if (!left_ok || !right_ok) continue;
        const std::string token(1, reply[i]);
        if (is_valid(token)) best = token;
    }
    if (best) return *best;
    throw Error(ErrorCode::NoAnswerFound, "no valid label in model output");
}

double Engine::theta() const {
    if (config.theta) return *config.theta;
    return embedder->default_theta();
}

namespace {

double config_double(const json& cfg, const char* key, double fallback) {
    if (!cfg.contains(key)) return fallback;
    if (!cfg[key].is_number()) {
        throw Error(ErrorCode::ConfigError, std::string("'") + key + "' must be a number");
    }
    return cfg[key].get<double>();
}

std::int64_t config_int(const json& cfg, const char* key, std::int64_t fallback) {
    if (!cfg.contains(key)) return fallback;
    if (!cfg[key].is_number_integer()) {
        throw Error(ErrorCode::ConfigError, std::string("'") + key + "' must be an integer");
    }
    return cfg[key].get<std::int64_t>();
}

std::string config_string(const json& cfg, const char* key, const std::string& fallback) {
    if (!cfg.contains(key)) return fallback;
    if (!cfg[key].is_string()) {
        throw Error(ErrorCode::ConfigError, std::string("'") + key + "' must be a string");
    }
    return cfg[key].get<std::string>();
}

std::string env_api_key(const json& cfg) {
    const std::string env_name = config_string(cfg, "api_key_env", "");
    if (env_name.empty()) return "";
    const char* value = std::getenv(env_name.c_str());
    return value ? value : "";
}

std::shared_ptr<backend::Backend> build_backend(const json& cfg) {
    if (!cfg.contains("backend") || !cfg["backend"].is_object()) {
        throw Error(ErrorCode::ConfigError, "config needs a 'backend' object");
    }
    const json& b = cfg["backend"];
    const std::string kind = config_string(b, "kind", "");
    std::shared_ptr<backend::Backend> model;
    if (kind == "scripted") {
        const std::string path = config_string(b, "path", "");
        if (path.empty()) throw Error(ErrorCode::ConfigError, "scripted backend needs a fixture path");
        model = backend::ScriptedBackend::from_file(path);
    } else if (kind == "replay") {
        const std::string path = config_string(b, "path", "");
        if (path.empty()) throw Error(ErrorCode::ConfigError, "replay backend needs a cassette path");
        model = std::make_shared<backend::ReplayBackend>(path);
    } else if (kind == "live") {
        backend::LiveConfig live;
        live.base_url = config_string(b, "base_url", live.base_url);
        live.model = config_string(b, "model", live.model);
        live.api_key = env_api_key(b);
        live.timeout_s = static_cast<int>(config_int(b, "timeout_s", live.timeout_s));
        live.retry.max_attempts = static_cast<int>(config_int(b, "max_retries", live.retry.max_attempts));
        live.retry.base_delay_ms =
            static_cast<int>(config_int(b, "retry_base_ms", live.retry.base_delay_ms));
        if (live.timeout_s < 1) throw Error(ErrorCode::ConfigError, "'timeout_s' must be positive");
        if (live.retry.max_attempts < 1 || live.retry.max_attempts > 10) {
            throw Error(ErrorCode::ConfigError, "'max_retries' must be between 1 and 10");
        }
        if (live.retry.base_delay_ms < 0) {
            throw Error(ErrorCode::ConfigError, "'retry_base_ms' must be non-negative");
        }
        model = std::make_shared<backend::HttpBackend>(live);
    } else {
        throw Error(ErrorCode::ConfigError, "backend kind must be live, scripted or replay");
    }
    const std::string record = config_string(cfg, "record", "");
    if (!record.empty()) {
        model = std::make_shared<backend::RecordingBackend>(model, record);
    }
    return model;
}

std::shared_ptr<select::EmbeddingProvider> build_embedder(const json& cfg) {
    if (!cfg.contains("embedding")) return std::make_shared<select::HashedBagProvider>();
    const json& e = cfg["embedding"];
    if (!e.is_object()) throw Error(ErrorCode::ConfigError, "'embedding' must be an object");
    const std::string kind = config_string(e, "kind", "fallback");
    if (kind == "fallback") {
        const std::int64_t dim = config_int(e, "dimension", 384);
        if (dim < 1) throw Error(ErrorCode::ConfigError, "embedding dimension must be positive");
        return std::make_shared<select::HashedBagProvider>(static_cast<size_t>(dim));
    }
    if (kind == "http") {
        select::HttpEmbeddingProvider::Config c;
        c.base_url = config_string(e, "base_url", c.base_url);
        c.model = config_string(e, "model", c.model);
        c.api_key = env_api_key(e);
        c.timeout_s = static_cast<int>(config_int(e, "timeout_s", c.timeout_s));
        if (c.timeout_s < 1) throw Error(ErrorCode::ConfigError, "'timeout_s' must be positive");
        return std::make_shared<select::HttpEmbeddingProvider>(c);
    }
    throw Error(ErrorCode::ConfigError, "embedding kind must be fallback or http");
}

} // namespace

Engine build_engine(const json& config) {
    if (!config.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
    Engine engine;

    const std::int64_t frames = config_int(config, "frames", 4);
    if (frames < 1) throw Error(ErrorCode::ConfigError, "'frames' must be at least 1");
    engine.config.frames = static_cast<std::uint32_t>(frames);

    const std::int64_t resolution = config_int(config, "resolution", 512);
    if (resolution < 1) throw Error(ErrorCode::ConfigError, "'resolution' must be at least 1");
    engine.config.resolution = static_cast<std::uint32_t>(resolution);

    const std::int64_t max_iters = config_int(config, "max_iters", 3);
    if (max_iters < 1) throw Error(ErrorCode::ConfigError, "'max_iters' must be at least 1");
    engine.config.max_iters = static_cast<int>(max_iters);

    if (config.contains("theta")) {
        const double theta = config_double(config, "theta", 0.0);
        if (theta < 0.0 || theta > 1.0) {
            throw Error(ErrorCode::ConfigError, "'theta' must lie in [0, 1]");
        }
        engine.config.theta = theta;
    }

    const double tau = config_double(config, "tau", 0.7);
    if (tau <= 0.0 || tau >= 1.0) {
        throw Error(ErrorCode::ConfigError, "'tau' must lie strictly between 0 and 1");
    }
    engine.config.prune.tau = tau;

    const std::int64_t n_min = config_int(config, "n_min", 8);
    if (n_min < 1) throw Error(ErrorCode::ConfigError, "'n_min' must be at least 1");
    engine.config.prune.n_min = static_cast<std::uint64_t>(n_min);

    if (config.contains("expansion")) {
        if (!config["expansion"].is_boolean()) {
            throw Error(ErrorCode::ConfigError, "'expansion' must be a boolean");
        }
        engine.config.expansion = config["expansion"].get<bool>();
    }

    if (config.contains("eval_stats")) {
        if (!config["eval_stats"].is_boolean()) {
            throw Error(ErrorCode::ConfigError, "'eval_stats' must be a boolean");
        }
        if (config["eval_stats"].get<bool>()) {
            throw Error(ErrorCode::ConfigError,
                        "eval runs are read-only; 'eval_stats' must stay off");
        }
    }

    engine.config.kb_path = config_string(config, "kb_path", "");
    engine.config.trace_dir = config_string(config, "trace_dir", "");

    const std::string keywords = config_string(config, "keywords", "");
    engine.filter = keywords.empty() ? reflect::KeywordFilter::default_filter()
                                     : reflect::KeywordFilter::from_file(keywords);

    engine.model = build_backend(config);
    engine.embedder = build_embedder(config);
    return engine;
}

RunReport aggregate_results(std::vector<ItemResult> results,
                            std::vector<std::string> pruned_nodes) {
    RunReport report;
    report.per_item = std::move(results);
    report.pruned_nodes = std::move(pruned_nodes);
    for (const ItemResult& r : report.per_item) {
        DomainStats& d = report.per_domain[domain_name(r.domain)];
        ++d.total;
        ++report.overall.total;
        if (r.correct.has_value() && *r.correct) {
            ++d.correct;
            ++report.overall.correct;
        }
        if (r.degenerative_used) ++report.degenerative_count;
        if (r.eligible) ++report.eligible_count;
    }
    for (auto& [name, d] : report.per_domain) {
        d.accuracy = d.total ? static_cast<double>(d.correct) / static_cast<double>(d.total) : 0.0;
    }
    report.overall.accuracy =
        report.overall.total
            ? static_cast<double>(report.overall.correct) / static_cast<double>(report.overall.total)
            : 0.0;
    return report;
}

namespace {

json domain_stats_json(const DomainStats& d) {
    return json{{"total", d.total}, {"correct", d.correct}, {"accuracy", d.accuracy}};
}

struct ItemOutcome {
    ItemResult result;
    agent::ReasoningTrace trace;
};

// Shared back half of train and eval: run the episode on an already
// canonicalized input and score the answer. Never mutates the knowledge base.
ItemOutcome run_item_episode(const notes::KnowledgeBase& kb,
                             const BenchmarkItem& item,
                             Engine& engine,
                             const canon::CanonicalInput& input,
                             const std::optional<std::string>& node_name) {
    ItemOutcome out;
    out.result.id = item.id;
    out.result.domain = item.domain;
    out.result.update = "none";

    const agent::EpisodeContext ctx = make_context(kb, node_name, item);
    out.trace = agent::run_episode(input, ctx, *engine.model,
                                   make_episode_options(engine, item));
    write_trace(engine.config.trace_dir, out.trace);

    out.result.answer = out.trace.final_answer;
    out.result.degenerative_used = out.trace.degenerative_used;
    out.result.assumption_used = out.trace.assumption_used;
    out.result.node = node_name;
    if (item.answer) {
        out.result.correct = !out.trace.final_answer.empty() && out.trace.final_answer == *item.answer;
        out.result.eligible = reflect::eligibility(out.trace, *item.answer, engine.filter).eligible;
    }
    if (out.trace.final_answer.empty()) {
        out.result.error = "NoAnswerFound: model output carried no usable label";
    }
    return out;
}

} // namespace

json RunReport::to_json() const {
    json domains = json::object();
    for (const auto& [name, d] : per_domain) domains[name] = domain_stats_json(d);
    json items = json::array();
    for (const ItemResult& r : per_item) {
        items.push_back(json{{"id", r.id},
                             {"domain", domain_name(r.domain)},
                             {"answer", r.answer},
                             {"correct", r.correct ? json(*r.correct) : json(nullptr)},
                             {"degenerative_used", r.degenerative_used},
                             {"assumption_used", r.assumption_used},
                             {"eligible", r.eligible},
                             {"node", r.node ? json(*r.node) : json(nullptr)},
                             {"update", r.update},
                             {"error", r.error}});
    }
    return json{{"overall", domain_stats_json(overall)},
                {"per_domain", std::move(domains)},
                {"degenerative_count", degenerative_count},
                {"eligible_count", eligible_count},
                {"pruned_nodes", pruned_nodes},
                {"per_item", std::move(items)}};
}

std::string RunReport::to_table() const {
    char buf[128];
    std::string out;
    out += "domain     total  correct  accuracy\n";
    for (const auto& [name, d] : per_domain) {
        std::snprintf(buf, sizeof buf, "%-9s %6llu %8llu   %6.2f%%\n", name.c_str(),
                      static_cast<unsigned long long>(d.total),
                      static_cast<unsigned long long>(d.correct), d.accuracy * 100.0);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "%-9s %6llu %8llu   %6.2f%%\n", "overall",
                  static_cast<unsigned long long>(overall.total),
                  static_cast<unsigned long long>(overall.correct), overall.accuracy * 100.0);
    out += buf;
    std::snprintf(buf, sizeof buf, "degenerative: %llu  eligible: %llu  pruned: ",
                  static_cast<unsigned long long>(degenerative_count),
                  static_cast<unsigned long long>(eligible_count));
    out += buf;
    out += pruned_nodes.empty() ? "none" : text::join(pruned_nodes, ", ");
    out += "\n";
    return out;
}

std::string trace_path(const std::string& trace_dir, const std::string& episode_id) {
    return (fs::path(trace_dir) / (sanitize_episode_id(episode_id) + ".json")).string();
}

RunReport run_train(notes::KnowledgeBase& kb,
                    const std::vector<BenchmarkItem>& items,
                    Engine& engine) {
    if (items.empty()) throw Error(ErrorCode::ConfigError, "training needs at least one item");
    for (const BenchmarkItem& item : items) {
        if (!item.answer) {
            throw Error(ErrorCode::ConfigError,
                        "training item '" + item.id + "' has no ground-truth answer");
        }
    }
    const bool expansion = engine.config.expansion.value_or(true);
    const double theta = engine.theta();
    if (!engine.config.trace_dir.empty()) {
        fs::create_directories(engine.config.trace_dir);
    }

    std::vector<ItemResult> results;
    std::vector<std::string> pruned;
    for (const BenchmarkItem& item : items) {
        ItemResult result;
        result.id = item.id;
        result.domain = item.domain;
        result.update = "none";
        try {
            auto input = canon::canonicalize(item.question, resolve_raw_assets(item),
                                             engine.config.frames, engine.config.resolution);
            auto selection = select::select_task_node(kb, input, *engine.embedder, theta);
            std::optional<std::string> node_name = selection.matched;
            if (!node_name && expansion) {
                auto created = select::discover_node(kb, input, *engine.model, true);
                if (created) node_name = created->name;
            }
            ItemOutcome outcome = run_item_episode(kb, item, engine, input, node_name);
            result = outcome.result;
            if (node_name && kb.has_node(*node_name)) {
                auto conclusion = reflect::conclude_training_item(
                    kb, *node_name, outcome.trace, *item.answer, *engine.model,
                    engine.config.prune, engine.filter);
                result.eligible = conclusion.eligibility.eligible;
                result.update = update_kind_name(conclusion.update_kind);
                if (conclusion.pruned) pruned.push_back(*node_name);
            }
        } catch (const std::exception& e) {
            result.error = e.what();
            if (!result.correct.has_value()) result.correct = false;
        }
        if (!engine.config.kb_path.empty()) kb.save(engine.config.kb_path);
        results.push_back(std::move(result));
    }
    return aggregate_results(std::move(results), std::move(pruned));
}

RunReport run_eval(const notes::KnowledgeBase& kb,
                   const std::vector<BenchmarkItem>& items,
                   Engine& engine,
                   int parallelism) {
    if (parallelism < 1) throw Error(ErrorCode::ConfigError, "parallelism must be at least 1");
    if (engine.config.expansion.value_or(false)) {
        throw Error(ErrorCode::ConfigError, "expansion mode must stay off during eval");
    }
    const double theta = engine.theta();
    if (!engine.config.trace_dir.empty()) {
        fs::create_directories(engine.config.trace_dir);
    }

    std::vector<ItemResult> results(items.size());
    std::atomic<size_t> cursor{0};
    auto worker = [&]() {
        while (true) {
            const size_t i = cursor.fetch_add(1);
            if (i >= items.size()) break;
            const BenchmarkItem& item = items[i];
            ItemResult result;
            result.id = item.id;
            result.domain = item.domain;
            result.update = "none";
            try {
                auto input = canon::canonicalize(item.question, resolve_raw_assets(item),
                                                 engine.config.frames, engine.config.resolution);
                auto selection = select::select_task_node(kb, input, *engine.embedder, theta);
                ItemOutcome outcome =
                    run_item_episode(kb, item, engine, input, selection.matched);
                result = outcome.result;
            } catch (const std::exception& e) {
                result.error = e.what();
                if (item.answer && !result.correct.has_value()) result.correct = false;
            }
            results[i] = std::move(result);
        }
    };

    const size_t thread_count = std::min<size_t>(static_cast<size_t>(parallelism),
                                                 std::max<size_t>(items.size(), 1));
    if (thread_count <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }
    return aggregate_results(std::move(results), {});
}

} // namespace physnote::harness
