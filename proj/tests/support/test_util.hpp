#pragma once

// Shared helpers for the test binaries: scratch directories, fixture
// building and a backend whose replies come from a plain callback.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "physnote/backend.hpp"
#include "physnote/canon.hpp"
#include "physnote/errors.hpp"

namespace testutil {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir() {
        auto tmpl = (fs::temp_directory_path() / "physnote-test-XXXXXX").string();
        std::vector<char> buf(tmpl.begin(), tmpl.end());
        buf.push_back('\0');
        if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
        path_ = buf.data();
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("write_file failed: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_file failed: " + path);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// Creates a directory holding `frames` empty files, usable as a video asset.
inline std::string make_video_dir(const TempDir& dir, const std::string& name, int frames) {
    const fs::path video = dir.path() / name;
    fs::create_directories(video);
    for (int i = 0; i < frames; ++i) {
        std::ofstream(video / ("frame" + std::to_string(i) + ".png")).put('\n');
    }
    return video.string();
}

inline std::string make_image_file(const TempDir& dir, const std::string& name) {
    const std::string path = (dir.path() / name).string();
    write_file(path, "png\n");
    return path;
}

// Backend whose reply is computed by a callback; thread-safe call log.
class CallbackBackend : public physnote::backend::Backend {
public:
    using Fn = std::function<std::string(const physnote::backend::ModelRequest&)>;

    explicit CallbackBackend(Fn fn) : fn_(std::move(fn)) {}

    physnote::backend::ModelResponse complete(
        const physnote::backend::ModelRequest& request) override {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            requests.push_back(request);
        }
        physnote::backend::ModelResponse response;
        response.text = fn_(request);
        return response;
    }

    std::vector<physnote::backend::ModelRequest> requests;

private:
    Fn fn_;
    std::mutex mutex_;
};

// The user-side text of a request (joined), for prompt inspection.
inline std::string user_text(const physnote::backend::ModelRequest& request) {
    std::string out;
    for (const auto& message : request.messages) {
        if (message.speaker == physnote::backend::Speaker::User) out += message.text;
    }
    return out;
}

// Canonical input over one image plus one n-frame video, for agent tests.
inline physnote::canon::CanonicalInput image_video_input(const std::string& question,
                                                         std::uint32_t video_frames = 12,
                                                         std::uint32_t k = 4) {
    using namespace physnote::canon;
    std::vector<RawAsset> assets;
    assets.push_back({MediaKind::Image, "img0.png", 1});
    assets.push_back({MediaKind::Video, "vid1", video_frames});
    return canonicalize(question, assets, k, 512);
}

inline physnote::canon::CanonicalInput image_input(const std::string& question) {
    using namespace physnote::canon;
    std::vector<RawAsset> assets;
    assets.push_back({MediaKind::Image, "img0.png", 1});
    return canonicalize(question, assets, 4, 512);
}

// Expects fn() to throw physnote::Error with the given code.
template <typename Fn>
bool throws_code(Fn&& fn, physnote::ErrorCode code) {
    try {
        fn();
    } catch (const physnote::Error& e) {
        return e.code() == code;
    } catch (...) {
        return false;
    }
    return false;
}

} // namespace testutil
