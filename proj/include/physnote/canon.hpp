#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

// Spatio-temporal canonicalization: turns a question plus raw media
// descriptors into a stable set of frame identifiers the rest of the
// pipeline can reference as plain text, without touching pixels.
namespace physnote::canon {

enum class MediaKind { Image, Video };

// A bracketed identifier naming one image or one sampled video frame,
// e.g. [#0image] or [#1videoframe3].
struct VisualId {
    std::uint32_t asset_index = 0;
    MediaKind kind = MediaKind::Image;
    std::uint32_t frame_index = 0; // meaningful for videos only

    bool operator==(const VisualId&) const = default;
};

// Media descriptor as handed to canonicalize. total_frames must be known
// for videos (the harness probes it); images are always a single frame.
struct RawAsset {
    MediaKind kind = MediaKind::Image;
    std::string source_ref;
    std::optional<std::uint32_t> total_frames;
};

struct VisualAsset {
    std::uint32_t asset_index = 0;
    MediaKind kind = MediaKind::Image;
    std::string source_ref;
    std::uint32_t total_frames = 1;
    std::vector<std::uint32_t> sampled_frame_indices;
    std::uint32_t target_resolution = 0;

    bool operator==(const VisualAsset&) const = default;
};

struct CanonicalInput {
    std::string original_question;
    std::string annotated_question; // identifier manifest + original question
    std::vector<VisualAsset> assets;
};

// One grounded micro-fact: (identifier | entity | observable description).
struct TriadicObservation {
    VisualId v;
    std::string entity;
    std::string description;

    bool operator==(const TriadicObservation&) const = default;
};

// Uniform temporal sampling. Returns all indices when total <= k, otherwise
// k endpoint-inclusive indices floor(j*(total-1)/(k-1)).
std::vector<std::uint32_t> sample_frame_indices(std::uint32_t total_frames, std::uint32_t k);

std::string format_visual_id(const VisualId& id);

// Accepts exactly the canonical token grammar; anything else is MalformedId.
VisualId parse_visual_id(const std::string& token);

// True when the id names an existing asset of the right kind and, for
// videos, a frame that was actually sampled.
bool resolves(const CanonicalInput& input, const VisualId& id);

// Scans free text for well-formed identifier tokens.
std::vector<VisualId> find_visual_id_tokens(const std::string& text);

// Builds the canonical input: assigns identifiers, samples video frames and
// prefixes the question with one manifest line per identifier.
CanonicalInput canonicalize(const std::string& question,
                            const std::vector<RawAsset>& assets,
                            std::uint32_t k,
                            std::uint32_t resolution);

std::string format_triadic_observation(const TriadicObservation& obs);

// Parses one wire-format line and checks the id against the input.
TriadicObservation parse_triadic_observation(const std::string& line,
                                             const CanonicalInput& input);

} // namespace physnote::canon
