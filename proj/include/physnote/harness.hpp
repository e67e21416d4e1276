#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "physnote/agent.hpp"
#include "physnote/backend.hpp"
#include "physnote/canon.hpp"
#include "physnote/notes.hpp"
#include "physnote/reflect.hpp"
#include "physnote/select.hpp"

// Benchmark plumbing: JSONL ingestion, answer extraction, the train loop
// that evolves the knowledge base and the read-only eval loop.
namespace physnote::harness {

enum class Domain { S1, S2, S3, S4 };
enum class Split { Train, Val, Test };

const char* domain_name(Domain d);
const char* split_name(Split s);

struct AssetRef {
    canon::MediaKind kind = canon::MediaKind::Image;
    std::string path; // resolved against the items file directory
};

struct BenchmarkItem {
    std::string id;
    std::string question;
    std::vector<std::string> choices;
    std::vector<AssetRef> assets;
    Domain domain = Domain::S1;
    std::optional<std::string> answer;
    Split split = Split::Train;
};

// One JSON object per line. Validates the schema, label consistency and
// asset existence; locators become absolute against the file's directory.
std::vector<BenchmarkItem> load_items(const std::string& path);

// Positional labels "A", "B", ... for an item's choices.
std::vector<std::string> labels_for(size_t choice_count);

// "A. first\nB. second\n" block for prompts.
std::string format_choices(const BenchmarkItem& item);

// Frame-count probing for media descriptors. Videos are either a directory
// of frame files or a file with a "<path>.frames" sidecar holding a count.
std::vector<canon::RawAsset> resolve_raw_assets(const BenchmarkItem& item);

// Marker-driven answer extraction with priority tiers: Final Answer,
// Extract Answer, Candidate Answer, then the last standalone label token.
// Last occurrence wins within a tier; off-sheet tokens never match.
std::string extract_answer(const std::string& reply,
                           const std::vector<std::string>& valid_labels);

struct EngineConfig {
    std::uint32_t frames = 4;
    std::uint32_t resolution = 512;
    int max_iters = 3;
    std::optional<double> theta; // unset: provider default
    notes::PruneConfig prune;
    std::optional<bool> expansion; // unset: on for train, off for eval
    std::string kb_path;           // train checkpoints after every item
    std::string trace_dir;         // empty: no trace dumps
};

struct Engine {
    EngineConfig config;
    std::shared_ptr<backend::Backend> model;
    std::shared_ptr<select::EmbeddingProvider> embedder;
    reflect::KeywordFilter filter = reflect::KeywordFilter::default_filter();

    double theta() const;
};

// Builds a fully wired engine from a JSON configuration document (the same
// shape the C API and CLI speak). Rejects invalid values up front.
Engine build_engine(const nlohmann::json& config);

struct ItemResult {
    std::string id;
    Domain domain = Domain::S1;
    std::string answer;
    std::optional<bool> correct;
    bool degenerative_used = false;
    bool assumption_used = false;
    bool eligible = false;
    std::optional<std::string> node;
    std::string update; // none | reflective | tip_discovery
    std::string error;  // empty when the item ran clean
};

struct DomainStats {
    std::uint64_t total = 0;
    std::uint64_t correct = 0;
    double accuracy = 0.0;
};

struct RunReport {
    DomainStats overall;
    std::map<std::string, DomainStats> per_domain;
    std::uint64_t degenerative_count = 0;
    std::uint64_t eligible_count = 0;
    std::vector<std::string> pruned_nodes;
    std::vector<ItemResult> per_item;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

// Accuracy bookkeeping shared by both runners (and tested on its own).
RunReport aggregate_results(std::vector<ItemResult> results,
                            std::vector<std::string> pruned_nodes);

// Sequential training pass: canonicalize, select (discovering new nodes in
// expansion mode), run the episode, record the outcome and consolidate.
// Per-item failures land in the report instead of aborting the run.
RunReport run_train(notes::KnowledgeBase& kb,
                    const std::vector<BenchmarkItem>& items,
                    Engine& engine);

// Read-only evaluation, optionally across worker threads. Results are
// ordered by item position regardless of parallelism.
RunReport run_eval(const notes::KnowledgeBase& kb,
                   const std::vector<BenchmarkItem>& items,
                   Engine& engine,
                   int parallelism);

// Where an episode trace lands for a given trace directory.
std::string trace_path(const std::string& trace_dir, const std::string& episode_id);

} // namespace physnote::harness
