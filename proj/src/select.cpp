#include "physnote/select.hpp"

#include <algorithm>
#include <cmath>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "physnote/errors.hpp"
#include "physnote/prompts.hpp"
#include "physnote/text.hpp"

namespace physnote::select {

using nlohmann::json;

HashedBagProvider::HashedBagProvider(size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw Error(ErrorCode::ConfigError, "embedding dimension must be positive");
}

EmbeddingVector HashedBagProvider::embed(const std::string& text_in) {
    EmbeddingVector v(dimension_, 0.0);
    for (const std::string& token : text::tokenize_lower(text_in)) {
        v[text::fnv1a64(token) % dimension_] += 1.0;
    }
    double norm_sq = 0.0;
    for (double x : v) norm_sq += x * x;
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& x : v) x *= inv;
    }
    return v;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(Config config) : config_(std::move(config)) {}

EmbeddingVector HttpEmbeddingProvider::embed(const std::string& text_in) {
    httplib::Client cli(config_.base_url);
    cli.set_connection_timeout(config_.timeout_s, 0);
    cli.set_read_timeout(config_.timeout_s, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    const json body{{"model", config_.model}, {"input", text_in}};
    auto res = cli.Post("/v1/embeddings", headers, body.dump(), "application/json");
    if (!res) {
        throw Error(ErrorCode::ProviderUnavailable, httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw Error(ErrorCode::ProviderUnavailable,
                    "HTTP " + std::to_string(res->status) + " from " + config_.base_url);
    }
    json doc;
    try {
        doc = json::parse(res->body);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ProviderUnavailable, std::string("unparseable body: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("data") || !doc["data"].is_array() ||
        doc["data"].empty() || !doc["data"][0].is_object() ||
        !doc["data"][0].contains("embedding") || !doc["data"][0]["embedding"].is_array()) {
        throw Error(ErrorCode::ProviderUnavailable, "response has no embedding data");
    }
    EmbeddingVector v;
    for (const json& x : doc["data"][0]["embedding"]) {
        if (!x.is_number()) {
            throw Error(ErrorCode::ProviderUnavailable, "embedding contains non-numeric values");
        }
        v.push_back(x.get<double>());
    }
    return v;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string node_embedding_text(const notes::TaskNode& node) {
    std::string out = node.name + " " + node.description;
    for (const notes::Tip& tip : node.details) {
        out += " ";
        out += tip.text;
    }
    return out;
}

SelectionResult select_task_node(const notes::KnowledgeBase& kb,
                                 const canon::CanonicalInput& input,
                                 EmbeddingProvider& provider,
                                 double theta) {
    SelectionResult result;
    const EmbeddingVector query = provider.embed(input.annotated_question);
    for (const auto& [name, node] : kb.task_nodes()) {
        const double score = cosine(query, provider.embed(node_embedding_text(node)));
        result.ranking.push_back(RankedNode{name, score});
    }
    std::sort(result.ranking.begin(), result.ranking.end(),
              [](const RankedNode& a, const RankedNode& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.name < b.name;
              });
    if (result.ranking.empty()) return result;
    result.best_score = result.ranking.front().score;
    if (result.best_score >= theta) result.matched = result.ranking.front().name;
    return result;
}

std::string normalize_node_name(const std::string& name) {
    std::string out;
    for (char c : text::trim(name)) {
        if (c >= 'A' && c <= 'Z') {
            out.push_back(static_cast<char>(c - 'A' + 'a'));
        } else if (c == ' ') {
            out.push_back('_');
        } else {
            out.push_back(c);
        }
    }
    return out;
}

namespace {

struct DiscoveryReply {
    std::string name;
    std::string description;
};

DiscoveryReply parse_discovery_reply(const std::string& reply) {
    const size_t open = reply.find("```");
    if (open == std::string::npos) {
        throw Error(ErrorCode::MalformedDiscovery, "reply has no fenced block");
    }
    size_t body_start = reply.find('\n', open);
    if (body_start == std::string::npos) {
        throw Error(ErrorCode::MalformedDiscovery, "fenced block never opens");
    }
    ++body_start;
    const size_t close = reply.find("```", body_start);
    if (close == std::string::npos) {
        throw Error(ErrorCode::MalformedDiscovery, "fenced block never closes");
    }
    DiscoveryReply out;
    for (const std::string& raw : text::split_lines(reply.substr(body_start, close - body_start))) {
        const std::string line = text::trim(raw);
        if (text::starts_with(line, "name:")) {
            out.name = text::trim(line.substr(5));
        } else if (text::starts_with(line, "description:")) {
            out.description = text::trim(line.substr(12));
        }
    }
    if (out.name.empty()) throw Error(ErrorCode::MalformedDiscovery, "missing 'name:' line");
    if (out.description.empty()) {
        throw Error(ErrorCode::MalformedDiscovery, "missing 'description:' line");
    }
    return out;
}

} // namespace

std::optional<notes::TaskNode> discover_node(notes::KnowledgeBase& kb,
                                             const canon::CanonicalInput& input,
                                             backend::Backend& model,
                                             bool expansion_mode) {
    if (!expansion_mode) return std::nullopt;

    std::string existing;
    for (const auto& [name, node] : kb.task_nodes()) {
        existing += "- " + name + ": " + node.description + "\n";
    }
    if (existing.empty()) existing = "(none)\n";

    backend::ModelRequest request;
    request.role_tag = backend::RoleTag::Discovery;
    request.messages.push_back(
        {backend::Speaker::System, std::string(prompts::discovery_system()), {}});
    request.messages.push_back(
        {backend::Speaker::User,
         prompts::render(prompts::discovery_user(),
                         {{"QUESTION", input.annotated_question}, {"NODES", existing}}),
         {}});
    const DiscoveryReply reply = parse_discovery_reply(model.complete(request).text);

    std::string name = normalize_node_name(reply.name);
    if (name.empty()) throw Error(ErrorCode::MalformedDiscovery, "proposed name is empty");
    if (kb.has_node(name)) {
        for (int suffix = 2;; ++suffix) {
            const std::string candidate = name + "_" + std::to_string(suffix);
            if (!kb.has_node(candidate)) {
                name = candidate;
                break;
            }
        }
    }
    notes::TaskNode node;
    node.name = name;
    node.description = reply.description;
    kb.add_task_node(node);
    return kb.node(name);
}

} // namespace physnote::select
