#include "physnote.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "physnote/errors.hpp"
#include "physnote/harness.hpp"
#include "physnote/notes.hpp"

using nlohmann::json;
using physnote::Error;
using physnote::ErrorCode;

struct pn_kb {
    physnote::notes::KnowledgeBase kb;
};

struct pn_session {
    physnote::harness::Engine engine;
};

namespace {

thread_local std::string g_last_error;

pn_status status_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument:
        return PN_ERR_INVALID_ARGUMENT;
    case ErrorCode::ConfigError:
        return PN_ERR_CONFIG;
    case ErrorCode::IoFailure:
    case ErrorCode::MissingAsset:
        return PN_ERR_IO;
    case ErrorCode::SchemaViolation:
        return PN_ERR_SCHEMA;
    case ErrorCode::Transport:
    case ErrorCode::RateLimited:
    case ErrorCode::Timeout:
    case ErrorCode::MalformedResponse:
    case ErrorCode::CassetteMiss:
    case ErrorCode::FixtureExhausted:
    case ErrorCode::ProviderUnavailable:
        return PN_ERR_BACKEND;
    default:
        return PN_ERR_DATA;
    }
}

pn_status fail(pn_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

pn_status fail_current_exception() {
    try {
        throw;
    } catch (const Error& e) {
        // Error::what() already leads with the code name.
        return fail(status_for(e.code()), e.what());
    } catch (const std::exception& e) {
        return fail(PN_ERR_UNKNOWN, e.what());
    } catch (...) {
        return fail(PN_ERR_UNKNOWN, "unknown failure");
    }
}

pn_status require(bool ok, const char* what) {
    if (ok) return PN_OK;
    return fail(PN_ERR_INVALID_ARGUMENT, std::string("null or invalid argument: ") + what);
}

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) return nullptr;
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

pn_status emit(const std::string& s, char** out) {
    *out = copy_string(s);
    if (!*out) return fail(PN_ERR_UNKNOWN, "out of memory");
    g_last_error.clear();
    return PN_OK;
}

} // namespace

extern "C" {

const char* pn_version(void) { return "0.1.0"; }

const char* pn_last_error(void) { return g_last_error.c_str(); }

void pn_string_free(char* s) { std::free(s); }

pn_status pn_kb_create(pn_kb** out_kb) {
    if (pn_status s = require(out_kb != nullptr, "out_kb")) return s;
    *out_kb = nullptr;
    try {
        *out_kb = new pn_kb{};
        g_last_error.clear();
        return PN_OK;
    } catch (...) {
        return fail_current_exception();
    }
}

pn_status pn_kb_load(const char* path, pn_kb** out_kb) {
    if (pn_status s = require(path != nullptr, "path")) return s;
    if (pn_status s = require(out_kb != nullptr, "out_kb")) return s;
    *out_kb = nullptr;
    try {
        auto kb = physnote::notes::KnowledgeBase::load(path);
        *out_kb = new pn_kb{std::move(kb)};
        g_last_error.clear();
        return PN_OK;
    } catch (...) {
        return fail_current_exception();
    }
}

pn_status pn_kb_save(const pn_kb* kb, const char* path) {
    if (pn_status s = require(kb != nullptr, "kb")) return s;
    if (pn_status s = require(path != nullptr, "path")) return s;
    try {
        kb->kb.save(path);
        g_last_error.clear();
        return PN_OK;
    } catch (...) {
        return fail_current_exception();
    }
}

void pn_kb_free(pn_kb* kb) { delete kb; }

pn_status pn_kb_to_json(const pn_kb* kb, char** out_json) {
    if (pn_status s = require(kb != nullptr, "kb")) return s;
    if (pn_status s = require(out_json != nullptr, "out_json")) return s;
    try {
        return emit(kb->kb.to_json().dump(2), out_json);
    } catch (...) {
        return fail_current_exception();
    }
}

pn_status pn_kb_stats_json(const pn_kb* kb, char** out_json) {
    if (pn_status s = require(kb != nullptr, "kb")) return s;
    if (pn_status s = require(out_json != nullptr, "out_json")) return s;
    try {
        const auto& base = kb->kb;
        json nodes = json::object();
        for (const auto& [name, node] : base.task_nodes()) {
            nodes[name] = json{{"n_plus", node.stats.n_plus},
                               {"n_minus", node.stats.n_minus},
                               {"activations", node.stats.activations()},
                               {"error_rate", physnote::notes::error_rate(node.stats)},
                               {"details", node.details.size()}};
        }
        const json doc{{"revision", base.revision()},
                       {"general_tip_count", base.general_tips().size()},
                       {"task_node_count", base.task_nodes().size()},
                       {"nodes", std::move(nodes)}};
        return emit(doc.dump(2), out_json);
    } catch (...) {
        return fail_current_exception();
    }
}

pn_status pn_kb_prune_check_json(const pn_kb* kb, double tau,
                                 unsigned long long n_min, char** out_json) {
    if (pn_status s = require(kb != nullptr, "kb")) return s;
    if (pn_status s = require(out_json != nullptr, "out_json")) return s;
    if (!(tau > 0.0 && tau < 1.0)) {
        return fail(PN_ERR_INVALID_ARGUMENT, "tau must lie strictly between 0 and 1");
    }
    if (n_min < 1) {
        return fail(PN_ERR_INVALID_ARGUMENT, "n_min must be at least 1");
    }
    try {
        physnote::notes::PruneConfig config;
        config.tau = tau;
        config.n_min = n_min;
        json rows = json::array();
        for (const auto& [name, node] : kb->kb.task_nodes()) {
            rows.push_back(json{{"name", name},
                                {"n_plus", node.stats.n_plus},
                                {"n_minus", node.stats.n_minus},
                                {"activations", node.stats.activations()},
                                {"error_rate", physnote::notes::error_rate(node.stats)},
                                {"would_prune",
                                 physnote::notes::prune_eligible(node.stats, config)}});
        }
        return emit(rows.dump(2), out_json);
    } catch (...) {
        return fail_current_exception();
    }
}

pn_status pn_session_create(const char* config_json, pn_session** out_session) {
    if (pn_status s = require(config_json != nullptr, "config_json")) return s;
    if (pn_status s = require(out_session != nullptr, "out_session")) return s;
    *out_session = nullptr;
    try {
        json config;
        try {
            config = json::parse(config_json);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
        }
        auto engine = physnote::harness::build_engine(config);
        *out_session = new pn_session{std::move(engine)};
        g_last_error.clear();
        return PN_OK;
    } catch (...) {
        return fail_current_exception();
    }
}

void pn_session_free(pn_session* session) { delete session; }

pn_status pn_run_train(pn_session* session, pn_kb* kb, const char* items_path,
                       char** out_report_json) {
    if (pn_status s = require(session != nullptr, "session")) return s;
    if (pn_status s = require(kb != nullptr, "kb")) return s;
    if (pn_status s = require(items_path != nullptr, "items_path")) return s;
    if (pn_status s = require(out_report_json != nullptr, "out_report_json")) return s;
    try {
        auto items = physnote::harness::load_items(items_path);
        auto report = physnote::harness::run_train(kb->kb, items, session->engine);
        return emit(report.to_json().dump(2), out_report_json);
    } catch (...) {
        return fail_current_exception();
    }
}

pn_status pn_run_eval(pn_session* session, const pn_kb* kb, const char* items_path,
                      int parallelism, char** out_report_json) {
    if (pn_status s = require(session != nullptr, "session")) return s;
    if (pn_status s = require(kb != nullptr, "kb")) return s;
    if (pn_status s = require(items_path != nullptr, "items_path")) return s;
    if (pn_status s = require(out_report_json != nullptr, "out_report_json")) return s;
    try {
        auto items = physnote::harness::load_items(items_path);
        auto report =
            physnote::harness::run_eval(kb->kb, items, session->engine, parallelism);
        return emit(report.to_json().dump(2), out_report_json);
    } catch (...) {
        return fail_current_exception();
    }
}

} // extern "C"
