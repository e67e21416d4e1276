#include "physnote/backend.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "physnote/errors.hpp"
#include "physnote/text.hpp"

namespace physnote::backend {

using nlohmann::json;

const char* role_tag_name(RoleTag tag) {
    switch (tag) {
    case RoleTag::Hypothesizer: return "hypothesizer";
    case RoleTag::Gatherer: return "gatherer";
    case RoleTag::Validator: return "validator";
    case RoleTag::Degenerative: return "degenerative";
    case RoleTag::Discovery: return "discovery";
    case RoleTag::Reflection: return "reflection";
    }
    return "hypothesizer";
}

RoleTag role_tag_from_name(const std::string& name) {
    if (name == "hypothesizer") return RoleTag::Hypothesizer;
    if (name == "gatherer") return RoleTag::Gatherer;
    if (name == "validator") return RoleTag::Validator;
    if (name == "degenerative") return RoleTag::Degenerative;
    if (name == "discovery") return RoleTag::Discovery;
    if (name == "reflection") return RoleTag::Reflection;
    throw Error(ErrorCode::SchemaViolation, "unknown role tag '" + name + "'");
}

std::string request_digest(const ModelRequest& request) {
    std::string canon;
    canon += role_tag_name(request.role_tag);
    canon += '\x1f';
    for (const Message& m : request.messages) {
        canon += m.text;
        canon += '\x1e';
        for (const Attachment& a : m.attachments) {
            canon += a.locator;
            canon += '\x1d';
            canon += std::to_string(a.frame_index);
            canon += '\x1d';
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(text::fnv1a64(canon)));
    return std::string(buf);
}

namespace {

Usage estimate_usage(const ModelRequest& request, const std::string& reply) {
    size_t prompt_chars = 0;
    for (const Message& m : request.messages) prompt_chars += m.text.size();
    // Rough 4-chars-per-token heuristic; offline backends have no real meter.
    return Usage{static_cast<std::int64_t>(prompt_chars / 4),
                 static_cast<std::int64_t>(reply.size() / 4)};
}

json load_json_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, std::string("cannot open ") + what + " '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaViolation,
                    std::string("invalid JSON in ") + what + " '" + path + "': " + e.what());
    }
    return doc;
}

} // namespace

ScriptedBackend::ScriptedBackend(std::map<RoleTag, std::vector<std::string>> fixtures, bool cycle)
    : fixtures_(std::move(fixtures)), cycle_(cycle) {}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::string& path) {
    json doc = load_json_file(path, "fixture file");
    if (!doc.is_object() || !doc.contains("roles") || !doc["roles"].is_object()) {
        throw Error(ErrorCode::SchemaViolation,
                    "fixture file '" + path + "' must contain a 'roles' object");
    }
    std::map<RoleTag, std::vector<std::string>> fixtures;
    for (auto it = doc["roles"].begin(); it != doc["roles"].end(); ++it) {
        RoleTag tag = role_tag_from_name(it.key());
        if (!it.value().is_array()) {
            throw Error(ErrorCode::SchemaViolation,
                        "fixture role '" + it.key() + "' must be an array");
        }
        std::vector<std::string> replies;
        for (const json& r : it.value()) {
            if (!r.is_string()) {
                throw Error(ErrorCode::SchemaViolation,
                            "fixture role '" + it.key() + "' must contain strings");
            }
            replies.push_back(r.get<std::string>());
        }
        fixtures[tag] = std::move(replies);
    }
    bool cycle = false;
    if (doc.contains("cycle")) {
        if (!doc["cycle"].is_boolean()) {
            throw Error(ErrorCode::SchemaViolation, "fixture 'cycle' must be a boolean");
        }
        cycle = doc["cycle"].get<bool>();
    }
    return std::make_shared<ScriptedBackend>(std::move(fixtures), cycle);
}

void ScriptedBackend::add_reply(RoleTag role, std::string reply) {
    std::lock_guard<std::mutex> lock(mutex_);
    fixtures_[role].push_back(std::move(reply));
}

ModelResponse ScriptedBackend::complete(const ModelRequest& request) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = fixtures_.find(request.role_tag);
    if (it == fixtures_.end() || it->second.empty()) {
        throw Error(ErrorCode::FixtureExhausted,
                    std::string("no fixtures for role '") + role_tag_name(request.role_tag) + "'");
    }
    size_t& cur = cursor_[request.role_tag];
    if (cur >= it->second.size()) {
        if (!cycle_) {
            throw Error(ErrorCode::FixtureExhausted,
                        std::string("fixtures exhausted for role '") +
                            role_tag_name(request.role_tag) + "'");
        }
        cur = 0;
    }
    const std::string& reply = it->second[cur++];
    ModelResponse resp;
    resp.text = reply;
    resp.usage = estimate_usage(request, reply);
    resp.latency_ms = 0;
    return resp;
}

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner, std::string cassette_path)
    : inner_(std::move(inner)), path_(std::move(cassette_path)) {
    if (!inner_) throw Error(ErrorCode::InvalidArgument, "recording backend needs an inner backend");
}

void RecordingBackend::write_cassette() const {
    json arr = json::array();
    for (const Entry& e : entries_) {
        arr.push_back(json{{"digest", e.digest},
                           {"role_tag", role_tag_name(e.role_tag)},
                           {"response_text", e.response_text}});
    }
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open cassette '" + path_ + "' for writing");
    out << arr.dump(2) << "\n";
    if (!out.good()) throw Error(ErrorCode::IoFailure, "write failed for cassette '" + path_ + "'");
}

ModelResponse RecordingBackend::complete(const ModelRequest& request) {
    ModelResponse resp = inner_->complete(request);
    std::lock_guard<std::mutex> lock(mutex_);
    entries_.push_back(Entry{request_digest(request), request.role_tag, resp.text});
    write_cassette();
    return resp;
}

ReplayBackend::ReplayBackend(const std::string& cassette_path) {
    json doc = load_json_file(cassette_path, "cassette");
    if (!doc.is_array()) {
        throw Error(ErrorCode::SchemaViolation, "cassette '" + cassette_path + "' must be an array");
    }
    for (const json& entry : doc) {
        if (!entry.is_object() || !entry.contains("digest") || !entry["digest"].is_string() ||
            !entry.contains("response_text") || !entry["response_text"].is_string()) {
            throw Error(ErrorCode::SchemaViolation,
                        "cassette '" + cassette_path + "' has a malformed entry");
        }
        by_digest_[entry["digest"].get<std::string>()].push_back(
            entry["response_text"].get<std::string>());
    }
}

ModelResponse ReplayBackend::complete(const ModelRequest& request) {
    const std::string digest = request_digest(request);
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = by_digest_.find(digest);
    if (it == by_digest_.end() || it->second.empty()) {
        throw Error(ErrorCode::CassetteMiss,
                    "no recorded response for digest " + digest + " (role " +
                        role_tag_name(request.role_tag) + ")");
    }
    ModelResponse resp;
    resp.text = std::move(it->second.front());
    it->second.pop_front();
    resp.usage = estimate_usage(request, resp.text);
    resp.latency_ms = 0;
    return resp;
}

HttpBackend::HttpBackend(LiveConfig config) : config_(std::move(config)) {
    if (config_.retry.max_attempts < 1) {
        throw Error(ErrorCode::ConfigError, "retry attempts must be at least 1");
    }
}

std::string HttpBackend::build_body(const ModelRequest& request) const {
    json messages = json::array();
    for (const Message& m : request.messages) {
        json msg;
        msg["role"] = (m.speaker == Speaker::System) ? "system" : "user";
        if (m.attachments.empty()) {
            msg["content"] = m.text;
        } else {
            json parts = json::array();
            parts.push_back(json{{"type", "text"}, {"text", m.text}});
            for (const Attachment& a : m.attachments) {
                // The serving side resolves the locator; frame selection and
                // downscaling happen there, never in the engine.
                std::string url = a.locator;
                if (url.find("://") == std::string::npos) url = "file://" + url;
                url += "#frame=" + std::to_string(a.frame_index);
                if (a.target_resolution > 0) {
                    url += "&res=" + std::to_string(a.target_resolution);
                }
                parts.push_back(json{{"type", "image_url"}, {"image_url", json{{"url", url}}}});
            }
            msg["content"] = std::move(parts);
        }
        messages.push_back(std::move(msg));
    }
    json body{{"model", config_.model},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens},
              {"messages", std::move(messages)}};
    return body.dump();
}

ModelResponse HttpBackend::complete(const ModelRequest& request) {
    const std::string body = build_body(request);
    ErrorCode last_kind = ErrorCode::Transport;
    std::string last_detail = "no attempt made";

    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
        if (attempt > 1) {
            std::int64_t delay = config_.retry.base_delay_ms;
            for (int i = 2; i < attempt; ++i) delay *= config_.retry.factor;
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        httplib::Client cli(config_.base_url);
        cli.set_connection_timeout(config_.timeout_s, 0);
        cli.set_read_timeout(config_.timeout_s, 0);
        cli.set_write_timeout(config_.timeout_s, 0);
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        }
        const auto t0 = std::chrono::steady_clock::now();
        auto res = cli.Post("/v1/chat/completions", headers, body, "application/json");
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - t0)
                                 .count();
        if (!res) {
            const bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                                   res.error() == httplib::Error::Read ||
                                   res.error() == httplib::Error::Write;
            last_kind = timed_out ? ErrorCode::Timeout : ErrorCode::Transport;
            last_detail = httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429) {
            last_kind = ErrorCode::RateLimited;
            last_detail = "HTTP 429 from " + config_.base_url;
            continue;
        }
        if (res->status == 500 || res->status == 502 || res->status == 503 ||
            res->status == 504) {
            last_kind = ErrorCode::Transport;
            last_detail = "HTTP " + std::to_string(res->status) + " from " + config_.base_url;
            continue;
        }
        if (res->status != 200) {
            throw Error(ErrorCode::Transport,
                        "HTTP " + std::to_string(res->status) + " from " + config_.base_url);
        }
        json doc;
        try {
            doc = json::parse(res->body);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::MalformedResponse, std::string("unparseable body: ") + e.what());
        }
        if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array() ||
            doc["choices"].empty()) {
            throw Error(ErrorCode::MalformedResponse, "response has no choices");
        }
        const json& first = doc["choices"][0];
        if (!first.is_object() || !first.contains("message") || !first["message"].is_object() ||
            !first["message"].contains("content") || !first["message"]["content"].is_string()) {
            throw Error(ErrorCode::MalformedResponse, "choice has no message content");
        }
        ModelResponse resp;
        resp.text = first["message"]["content"].get<std::string>();
        resp.latency_ms = elapsed;
        if (doc.contains("usage") && doc["usage"].is_object()) {
            const json& usage = doc["usage"];
            if (usage.contains("prompt_tokens") && usage["prompt_tokens"].is_number_integer()) {
                resp.usage.prompt_tokens = usage["prompt_tokens"].get<std::int64_t>();
            }
            if (usage.contains("completion_tokens") &&
                usage["completion_tokens"].is_number_integer()) {
                resp.usage.completion_tokens = usage["completion_tokens"].get<std::int64_t>();
            }
        } else {
            resp.usage = estimate_usage(request, resp.text);
        }
        return resp;
    }
    throw Error(last_kind, last_detail + " (after " +
                               std::to_string(config_.retry.max_attempts) + " attempts)");
}

} // namespace physnote::backend
