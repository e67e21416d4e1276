#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

// Pluggable model backends. The engine only ever talks to the Backend
// interface; live, scripted and record/replay implementations are
// interchangeable so every pipeline stage can run without a real model.
namespace physnote::backend {

enum class RoleTag {
    Hypothesizer,
    Gatherer,
    Validator,
    Degenerative,
    Discovery,
    Reflection,
};

const char* role_tag_name(RoleTag tag);
RoleTag role_tag_from_name(const std::string& name);

enum class Speaker { System, User };

// Frames are referenced by locator + index; no pixel data crosses this
// boundary. Any resizing toward target_resolution is the transport's job.
struct Attachment {
    std::string locator;
    std::uint32_t frame_index = 0;
    std::uint32_t target_resolution = 0;
};

struct Message {
    Speaker speaker = Speaker::User;
    std::string text;
    std::vector<Attachment> attachments;
};

struct ModelRequest {
    RoleTag role_tag = RoleTag::Hypothesizer;
    std::vector<Message> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
};

struct Usage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct ModelResponse {
    std::string text;
    Usage usage;
    std::int64_t latency_ms = 0;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual ModelResponse complete(const ModelRequest& request) = 0;
};

// Content digest used to key recorded exchanges: role tag, message texts
// and attachment identities, never pixels or timing.
std::string request_digest(const ModelRequest& request);

// Serves canned replies per role, in order. Optionally cycles when a
// role's list is exhausted; otherwise exhaustion is an error.
class ScriptedBackend : public Backend {
public:
    ScriptedBackend() = default;
    explicit ScriptedBackend(std::map<RoleTag, std::vector<std::string>> fixtures,
                             bool cycle = false);

    // Fixture file: {"cycle": bool?, "roles": {"hypothesizer": [...], ...}}
    static std::shared_ptr<ScriptedBackend> from_file(const std::string& path);

    void add_reply(RoleTag role, std::string reply);
    void set_cycle(bool cycle) { cycle_ = cycle; }

    ModelResponse complete(const ModelRequest& request) override;

private:
    std::map<RoleTag, std::vector<std::string>> fixtures_;
    std::map<RoleTag, size_t> cursor_;
    bool cycle_ = false;
    std::mutex mutex_;
};

// Wraps another backend and records every exchange, in request order, to a
// cassette file flushed after each call.
class RecordingBackend : public Backend {
public:
    RecordingBackend(std::shared_ptr<Backend> inner, std::string cassette_path);

    ModelResponse complete(const ModelRequest& request) override;

private:
    struct Entry {
        std::string digest;
        RoleTag role_tag;
        std::string response_text;
    };

    void write_cassette() const;

    std::shared_ptr<Backend> inner_;
    std::string path_;
    std::vector<Entry> entries_;
    std::mutex mutex_;
};

class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(const std::string& cassette_path);

    ModelResponse complete(const ModelRequest& request) override;

private:
    std::map<std::string, std::deque<std::string>> by_digest_;
    std::mutex mutex_;
};

struct RetryPolicy {
    int max_attempts = 5;
    int base_delay_ms = 1000;
    int factor = 2;
};

struct LiveConfig {
    std::string base_url = "http://localhost:8000";
    std::string model = "qwen2.5-vl-72b-instruct";
    std::string api_key;       // empty: no Authorization header
    int timeout_s = 60;
    RetryPolicy retry;
};

// OpenAI-compatible chat-completions client over HTTP. Retries transient
// transport failures and rate limiting with exponential backoff.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(LiveConfig config);

    ModelResponse complete(const ModelRequest& request) override;

    // Request body for a given request; exposed for tests.
    std::string build_body(const ModelRequest& request) const;

private:
    LiveConfig config_;
};

} // namespace physnote::backend
