// Command-line front end. All engine work goes through the C API; this
// file only parses flags, shapes the config document and renders output.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "physnote.h"

using nlohmann::json;

namespace {

struct EngineFlags {
    std::string backend; // live | scripted:<file> | replay:<cassette>
    std::string record;
    std::string kb_path;
    std::string keywords;
    std::string trace_dir;
    std::string base_url = "http://localhost:8000";
    std::string model = "qwen2.5-vl-72b-instruct";
    std::string api_key_env;
    std::string embed_url;
    std::string embed_model;
    std::string expansion; // "", "on", "off"
    std::string eval_stats;
    int frames = 4;
    int resolution = 512;
    int max_iters = 3;
    double theta = -1.0; // <0: provider default
    double tau = 0.7;
    int n_min = 8;
    int timeout_s = 60;
    int max_retries = 5;
    int retry_base_ms = 1000;
};

void add_engine_flags(CLI::App* cmd, EngineFlags& flags, bool training) {
    cmd->add_option("--backend", flags.backend,
                    "live | scripted:<fixture.json> | replay:<cassette.json>")
        ->required();
    cmd->add_option("--record", flags.record, "record every model call into this cassette");
    cmd->add_option("--frames", flags.frames, "frames sampled per video")->check(CLI::PositiveNumber);
    cmd->add_option("--resolution", flags.resolution, "target frame resolution")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-iters", flags.max_iters, "reasoning iteration cap")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--theta", flags.theta, "note-matching similarity threshold");
    cmd->add_option("--tau", flags.tau, "error-rate pruning threshold");
    cmd->add_option("--n-min", flags.n_min, "activations before pruning applies")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--expansion", flags.expansion, "note discovery: on|off")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--keywords", flags.keywords, "physical-primitive keyword file");
    cmd->add_option("--trace-dir", flags.trace_dir, "write per-item reasoning traces here");
    cmd->add_option("--base-url", flags.base_url, "live backend base URL");
    cmd->add_option("--model", flags.model, "live backend model name");
    cmd->add_option("--api-key-env", flags.api_key_env, "environment variable holding the API key");
    cmd->add_option("--timeout", flags.timeout_s, "live request timeout in seconds")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-retries", flags.max_retries, "live attempts per request");
    cmd->add_option("--retry-base-ms", flags.retry_base_ms, "base backoff delay");
    cmd->add_option("--embed-url", flags.embed_url,
                    "embedding service base URL (default: hashed fallback embedding)");
    cmd->add_option("--embed-model", flags.embed_model, "embedding model name");
    if (!training) {
        cmd->add_option("--eval-stats", flags.eval_stats,
                        "record outcome statistics during eval (only 'off' is supported)")
            ->check(CLI::IsMember({"on", "off"}));
    }
}

json backend_config(const EngineFlags& flags) {
    json backend;
    if (flags.backend == "live") {
        backend["kind"] = "live";
        backend["base_url"] = flags.base_url;
        backend["model"] = flags.model;
        if (!flags.api_key_env.empty()) backend["api_key_env"] = flags.api_key_env;
        backend["timeout_s"] = flags.timeout_s;
        backend["max_retries"] = flags.max_retries;
        backend["retry_base_ms"] = flags.retry_base_ms;
        return backend;
    }
    const auto colon = flags.backend.find(':');
    const std::string kind = flags.backend.substr(0, colon);
    if (colon == std::string::npos || (kind != "scripted" && kind != "replay")) {
        throw CLI::ValidationError(
            "--backend", "expected live, scripted:<fixture.json> or replay:<cassette.json>");
    }
    const std::string path = flags.backend.substr(colon + 1);
    if (path.empty()) {
        throw CLI::ValidationError("--backend", kind + " needs a file path after the colon");
    }
    backend["kind"] = kind;
    backend["path"] = path;
    return backend;
}

json engine_config(const EngineFlags& flags, bool training) {
    json config;
    config["frames"] = flags.frames;
    config["resolution"] = flags.resolution;
    config["max_iters"] = flags.max_iters;
    if (flags.theta >= 0.0) config["theta"] = flags.theta;
    config["tau"] = flags.tau;
    config["n_min"] = flags.n_min;
    if (!flags.expansion.empty()) config["expansion"] = flags.expansion == "on";
    if (!flags.keywords.empty()) config["keywords"] = flags.keywords;
    if (!flags.trace_dir.empty()) config["trace_dir"] = flags.trace_dir;
    if (training) config["kb_path"] = flags.kb_path;
    if (!flags.eval_stats.empty()) config["eval_stats"] = flags.eval_stats == "on";
    config["backend"] = backend_config(flags);
    if (!flags.record.empty()) config["record"] = flags.record;
    if (!flags.embed_url.empty()) {
        json embedding;
        embedding["kind"] = "http";
        embedding["base_url"] = flags.embed_url;
        if (!flags.embed_model.empty()) embedding["model"] = flags.embed_model;
        if (!flags.api_key_env.empty()) embedding["api_key_env"] = flags.api_key_env;
        config["embedding"] = embedding;
    }
    return config;
}

int fail(const char* stage) {
    std::cerr << "error (" << stage << "): " << pn_last_error() << "\n";
    return 1;
}

struct OwnedString {
    char* value = nullptr;
    ~OwnedString() { pn_string_free(value); }
};

struct KbHandle {
    pn_kb* value = nullptr;
    ~KbHandle() { pn_kb_free(value); }
};

struct SessionHandle {
    pn_session* value = nullptr;
    ~SessionHandle() { pn_session_free(value); }
};

std::string render_table(const json& report) {
    char buf[128];
    std::string out = "domain     total  correct  accuracy\n";
    auto row = [&](const std::string& name, const json& stats) {
        std::snprintf(buf, sizeof buf, "%-9s %6llu %8llu   %6.2f%%\n", name.c_str(),
                      stats["total"].get<unsigned long long>(),
                      stats["correct"].get<unsigned long long>(),
                      stats["accuracy"].get<double>() * 100.0);
        out += buf;
    };
    for (const auto& [name, stats] : report["per_domain"].items()) row(name, stats);
    row("overall", report["overall"]);
    std::snprintf(buf, sizeof buf, "degenerative: %llu  eligible: %llu  pruned: ",
                  report["degenerative_count"].get<unsigned long long>(),
                  report["eligible_count"].get<unsigned long long>());
    out += buf;
    const auto& pruned = report["pruned_nodes"];
    if (pruned.empty()) {
        out += "none";
    } else {
        for (size_t i = 0; i < pruned.size(); ++i) {
            if (i) out += ", ";
            out += pruned[i].get<std::string>();
        }
    }
    out += "\n";
    return out;
}

int emit_report(const char* report_json, const std::string& report_path) {
    json report;
    try {
        report = json::parse(report_json);
    } catch (const json::exception& e) {
        std::cerr << "error: malformed report: " << e.what() << "\n";
        return 1;
    }
    std::cout << render_table(report);
    if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
        if (!out) {
            std::cerr << "error: cannot write report to '" << report_path << "'\n";
            return 1;
        }
        out << report.dump(2) << "\n";
    }
    return 0;
}

int open_or_create_kb(const std::string& path, bool must_exist, KbHandle& kb) {
    if (std::ifstream(path).good()) {
        if (pn_kb_load(path.c_str(), &kb.value) != PN_OK) return fail("kb load");
        return 0;
    }
    if (must_exist) {
        std::cerr << "error: knowledge base '" << path << "' does not exist\n";
        return 1;
    }
    if (pn_kb_create(&kb.value) != PN_OK) return fail("kb create");
    return 0;
}

int run_train_command(const EngineFlags& flags, const std::string& items,
                      const std::string& report_path) {
    KbHandle kb;
    if (int rc = open_or_create_kb(flags.kb_path, false, kb)) return rc;
    SessionHandle session;
    const std::string config = engine_config(flags, true).dump();
    if (pn_session_create(config.c_str(), &session.value) != PN_OK) return fail("session");
    OwnedString report;
    if (pn_run_train(session.value, kb.value, items.c_str(), &report.value) != PN_OK) {
        return fail("train");
    }
    if (pn_kb_save(kb.value, flags.kb_path.c_str()) != PN_OK) return fail("kb save");
    return emit_report(report.value, report_path);
}

int run_eval_command(const EngineFlags& flags, const std::string& items,
                     const std::string& report_path, int parallel) {
    KbHandle kb;
    if (int rc = open_or_create_kb(flags.kb_path, true, kb)) return rc;
    SessionHandle session;
    const std::string config = engine_config(flags, false).dump();
    if (pn_session_create(config.c_str(), &session.value) != PN_OK) return fail("session");
    OwnedString report;
    if (pn_run_eval(session.value, kb.value, items.c_str(), parallel, &report.value) != PN_OK) {
        return fail("eval");
    }
    return emit_report(report.value, report_path);
}

int notes_json_command(const std::string& kb_path,
                       pn_status (*fetch)(const pn_kb*, char**)) {
    KbHandle kb;
    if (int rc = open_or_create_kb(kb_path, true, kb)) return rc;
    OwnedString out;
    if (fetch(kb.value, &out.value) != PN_OK) return fail("notes");
    std::cout << out.value << "\n";
    return 0;
}

int prune_check_command(const std::string& kb_path, double tau, int n_min) {
    KbHandle kb;
    if (int rc = open_or_create_kb(kb_path, true, kb)) return rc;
    OwnedString out;
    if (pn_kb_prune_check_json(kb.value, tau, static_cast<unsigned long long>(n_min),
                               &out.value) != PN_OK) {
        return fail("prune-check");
    }
    std::cout << out.value << "\n";
    return 0;
}

int trace_dump_command(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open trace '" << path << "'\n";
        return 1;
    }
    json trace;
    try {
        trace = json::parse(in);
    } catch (const json::exception& e) {
        std::cerr << "error: malformed trace: " << e.what() << "\n";
        return 1;
    }
    std::cout << trace.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"physnote: note-evolving physical reasoning pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(pn_version()));

    EngineFlags train_flags;
    std::string train_items;
    std::string train_report;
    CLI::App* train = app.add_subcommand("train", "run a training pass that evolves the notes");
    train->add_option("--items", train_items, "JSONL items file")->required();
    train->add_option("--kb", train_flags.kb_path, "knowledge base file (created if missing)")
        ->required();
    train->add_option("--report", train_report, "write the run report JSON here");
    add_engine_flags(train, train_flags, true);

    EngineFlags eval_flags;
    std::string eval_items;
    std::string eval_report;
    int eval_parallel = 1;
    CLI::App* eval = app.add_subcommand("eval", "run a read-only evaluation pass");
    eval->add_option("--items", eval_items, "JSONL items file")->required();
    eval->add_option("--kb", eval_flags.kb_path, "knowledge base file (must exist)")->required();
    eval->add_option("--parallel", eval_parallel, "worker threads")->check(CLI::PositiveNumber);
    eval->add_option("--report", eval_report, "write the run report JSON here");
    add_engine_flags(eval, eval_flags, false);

    CLI::App* notes = app.add_subcommand("notes", "inspect a knowledge base");
    notes->require_subcommand(1);
    std::string notes_kb;
    double prune_tau = 0.7;
    int prune_n_min = 8;
    CLI::App* notes_show = notes->add_subcommand("show", "print the knowledge base JSON");
    notes_show->add_option("--kb", notes_kb, "knowledge base file")->required();
    CLI::App* notes_stats = notes->add_subcommand("stats", "print summary statistics");
    notes_stats->add_option("--kb", notes_kb, "knowledge base file")->required();
    CLI::App* notes_prune = notes->add_subcommand("prune-check", "show which nodes a prune would drop");
    notes_prune->add_option("--kb", notes_kb, "knowledge base file")->required();
    notes_prune->add_option("--tau", prune_tau, "error-rate threshold");
    notes_prune->add_option("--n-min", prune_n_min, "activation floor")->check(CLI::PositiveNumber);

    CLI::App* trace = app.add_subcommand("trace", "work with reasoning traces");
    trace->require_subcommand(1);
    std::string trace_file;
    CLI::App* trace_dump = trace->add_subcommand("dump", "pretty-print a trace file");
    trace_dump->add_option("--file", trace_file, "trace JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return run_train_command(train_flags, train_items, train_report);
        if (eval->parsed()) {
            return run_eval_command(eval_flags, eval_items, eval_report, eval_parallel);
        }
        if (notes->parsed()) {
            if (notes_show->parsed()) return notes_json_command(notes_kb, pn_kb_to_json);
            if (notes_stats->parsed()) return notes_json_command(notes_kb, pn_kb_stats_json);
            if (notes_prune->parsed()) return prune_check_command(notes_kb, prune_tau, prune_n_min);
        }
        if (trace->parsed() && trace_dump->parsed()) return trace_dump_command(trace_file);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    }
    return 0;
}
