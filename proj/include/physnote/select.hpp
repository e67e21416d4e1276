#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "physnote/backend.hpp"
#include "physnote/canon.hpp"
#include "physnote/notes.hpp"

// Context selection: embeds the annotated question, ranks every task node
// by cosine similarity with full visibility of the store, and either picks
// the best node or (in expansion mode) asks the model to define a new one.
namespace physnote::select {

using EmbeddingVector = std::vector<double>;

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual EmbeddingVector embed(const std::string& text) = 0;
    virtual size_t dimension() const = 0;
    // Similarity threshold used when the caller does not set one.
    virtual double default_theta() const = 0;
};

// Deterministic hashed bag-of-words fallback: tokenize, hash each token
// into a fixed-size histogram, L2-normalize. No model, no network.
class HashedBagProvider : public EmbeddingProvider {
public:
    explicit HashedBagProvider(size_t dimension = 384);

    EmbeddingVector embed(const std::string& text) override;
    size_t dimension() const override { return dimension_; }
    double default_theta() const override { return 0.30; }

private:
    size_t dimension_;
};

// Client for an OpenAI-compatible /v1/embeddings endpoint.
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    struct Config {
        std::string base_url = "http://localhost:8000";
        std::string model = "all-MiniLM-L6-v2";
        std::string api_key;
        int timeout_s = 30;
        size_t dimension = 384;
    };

    explicit HttpEmbeddingProvider(Config config);

    EmbeddingVector embed(const std::string& text) override;
    size_t dimension() const override { return config_.dimension; }
    double default_theta() const override { return 0.45; }

private:
    Config config_;
};

// Zero vectors score 0 against everything.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct RankedNode {
    std::string name;
    double score = 0.0;
};

struct SelectionResult {
    std::optional<std::string> matched; // set iff top score cleared theta
    double best_score = 0.0;            // 0 when the store is empty
    std::vector<RankedNode> ranking;    // score desc, ties by name asc
};

SelectionResult select_task_node(const notes::KnowledgeBase& kb,
                                 const canon::CanonicalInput& input,
                                 EmbeddingProvider& provider,
                                 double theta);

// Asks the model to define a new task node for an unmatched input. Returns
// nothing when expansion mode is off. Name collisions get a numeric suffix.
std::optional<notes::TaskNode> discover_node(notes::KnowledgeBase& kb,
                                             const canon::CanonicalInput& input,
                                             backend::Backend& model,
                                             bool expansion_mode);

// Lowercases and underscores a proposed node name.
std::string normalize_node_name(const std::string& name);

// Text a node is embedded as: name, description and detail tips.
std::string node_embedding_text(const notes::TaskNode& node);

} // namespace physnote::select
