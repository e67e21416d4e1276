#include "physnote/canon.hpp"

#include <limits>
#include <numeric>

#include "physnote/errors.hpp"
#include "physnote/text.hpp"

namespace physnote::canon {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Unsigned decimal with no leading zeros ("0" is the only number starting
// with '0'). Advances pos past the digits consumed.
std::optional<std::uint32_t> parse_index(std::string_view s, size_t& pos) {
    if (pos >= s.size() || !is_digit(s[pos])) return std::nullopt;
    if (s[pos] == '0') {
        ++pos;
        return 0;
    }
    std::uint64_t v = 0;
    while (pos < s.size() && is_digit(s[pos])) {
        v = v * 10 + static_cast<std::uint64_t>(s[pos] - '0');
        if (v > std::numeric_limits<std::uint32_t>::max()) return std::nullopt;
        ++pos;
    }
    return static_cast<std::uint32_t>(v);
}

} // namespace

std::vector<std::uint32_t> sample_frame_indices(std::uint32_t total_frames, std::uint32_t k) {
    if (total_frames == 0) throw Error(ErrorCode::InvalidArgument, "total_frames must be positive");
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
    std::vector<std::uint32_t> out;
    if (total_frames <= k) {
        out.resize(total_frames);
        std::iota(out.begin(), out.end(), 0u);
        return out;
    }
    if (k == 1) return {0u};
    out.reserve(k);
    for (std::uint32_t j = 0; j < k; ++j) {
        std::uint64_t idx = static_cast<std::uint64_t>(j) * (total_frames - 1) / (k - 1);
        out.push_back(static_cast<std::uint32_t>(idx));
    }
    return out;
}

std::string format_visual_id(const VisualId& id) {
    std::string out = "[#" + std::to_string(id.asset_index);
    if (id.kind == MediaKind::Image) {
        out += "image]";
    } else {
        out += "videoframe" + std::to_string(id.frame_index) + "]";
    }
    return out;
}

VisualId parse_visual_id(const std::string& token) {
    auto malformed = [&token]() {
        return Error(ErrorCode::MalformedId, "'" + token + "'");
    };
    if (token.size() < 4 || token[0] != '[' || token[1] != '#' || token.back() != ']') {
        throw malformed();
    }
    std::string_view body(token.data() + 2, token.size() - 3);
    size_t pos = 0;
    auto asset = parse_index(body, pos);
    if (!asset) throw malformed();
    std::string_view rest = body.substr(pos);
    if (rest == "image") {
        return VisualId{*asset, MediaKind::Image, 0};
    }
    constexpr std::string_view kFrameWord = "videoframe";
    if (text::starts_with(rest, kFrameWord)) {
        size_t fpos = 0;
        std::string_view digits = rest.substr(kFrameWord.size());
        auto frame = parse_index(digits, fpos);
        if (!frame || fpos != digits.size()) throw malformed();
        return VisualId{*asset, MediaKind::Video, *frame};
    }
    throw malformed();
}

bool resolves(const CanonicalInput& input, const VisualId& id) {
    if (id.asset_index >= input.assets.size()) return false;
    const VisualAsset& asset = input.assets[id.asset_index];
    if (asset.kind != id.kind) return false;
    if (id.kind == MediaKind::Image) return true;
    for (std::uint32_t f : asset.sampled_frame_indices) {
        if (f == id.frame_index) return true;
    }
    return false;
}

std::vector<VisualId> find_visual_id_tokens(const std::string& text) {
    std::vector<VisualId> out;
    size_t pos = 0;
    while ((pos = text.find('[', pos)) != std::string::npos) {
        size_t close = text.find(']', pos);
        if (close == std::string::npos) break;
        std::string candidate = text.substr(pos, close - pos + 1);
        try {
            out.push_back(parse_visual_id(candidate));
            pos = close + 1;
        } catch (const Error&) {
            ++pos;
        }
    }
    return out;
}

CanonicalInput canonicalize(const std::string& question,
                            const std::vector<RawAsset>& assets,
                            std::uint32_t k,
                            std::uint32_t resolution) {
    if (text::trim(question).empty()) {
        throw Error(ErrorCode::EmptyQuestion, "question text is empty");
    }
    if (assets.empty()) {
        throw Error(ErrorCode::NoAssets, "at least one media asset is required");
    }
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "frames per video must be positive");

    CanonicalInput out;
    out.original_question = question;
    out.assets.reserve(assets.size());
    std::vector<std::string> manifest;
    for (size_t i = 0; i < assets.size(); ++i) {
        const RawAsset& raw = assets[i];
        VisualAsset asset;
        asset.asset_index = static_cast<std::uint32_t>(i);
        asset.kind = raw.kind;
        asset.source_ref = raw.source_ref;
        asset.target_resolution = resolution;
        if (raw.kind == MediaKind::Image) {
            asset.total_frames = 1;
            asset.sampled_frame_indices = {0u};
            manifest.push_back(format_visual_id({asset.asset_index, MediaKind::Image, 0}));
        } else {
            if (!raw.total_frames || *raw.total_frames == 0) {
                throw Error(ErrorCode::UnreadableAsset, raw.source_ref);
            }
            asset.total_frames = *raw.total_frames;
            asset.sampled_frame_indices = sample_frame_indices(asset.total_frames, k);
            for (std::uint32_t f : asset.sampled_frame_indices) {
                manifest.push_back(format_visual_id({asset.asset_index, MediaKind::Video, f}));
            }
        }
        out.assets.push_back(std::move(asset));
    }
    out.annotated_question = text::join(manifest, "\n") + "\n\n" + question;
    return out;
}

std::string format_triadic_observation(const TriadicObservation& obs) {
    return "(" + format_visual_id(obs.v) + " | " + obs.entity + " | " + obs.description + ")";
}

TriadicObservation parse_triadic_observation(const std::string& line,
                                             const CanonicalInput& input) {
    std::string t = text::trim(line);
    if (t.size() < 2 || t.front() != '(' || t.back() != ')') {
        throw Error(ErrorCode::MalformedObservation, "'" + line + "'");
    }
    std::string inner = t.substr(1, t.size() - 2);
    std::vector<std::string> parts;
    size_t pos = 0;
    while (true) {
        size_t bar = inner.find('|', pos);
        if (bar == std::string::npos) {
            parts.push_back(inner.substr(pos));
            break;
        }
        parts.push_back(inner.substr(pos, bar - pos));
        pos = bar + 1;
    }
    if (parts.size() != 3) {
        throw Error(ErrorCode::MalformedObservation, "'" + line + "'");
    }
    std::string id_token = text::trim(parts[0]);
    TriadicObservation obs;
    try {
        obs.v = parse_visual_id(id_token);
    } catch (const Error&) {
        throw Error(ErrorCode::MalformedObservation, "'" + line + "'");
    }
    obs.entity = text::trim(parts[1]);
    obs.description = text::trim(parts[2]);
    if (obs.entity.empty()) throw Error(ErrorCode::EmptyField, "entity in '" + line + "'");
    if (obs.description.empty()) throw Error(ErrorCode::EmptyField, "description in '" + line + "'");
    if (!resolves(input, obs.v)) {
        throw Error(ErrorCode::UnresolvedId, id_token);
    }
    return obs;
}

} // namespace physnote::canon
