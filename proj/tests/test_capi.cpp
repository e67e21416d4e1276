#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

// Exercises the shared-library surface the way an external consumer would:
// only physnote.h plus JSON in and out. No engine internals.

#include <string>

#include <nlohmann/json.hpp>

#include "physnote.h"
#include "support/test_util.hpp"

using nlohmann::json;
using testutil::TempDir;
using testutil::write_file;

namespace {

// RAII for strings handed out by the library.
struct OwnedString {
    char* value = nullptr;
    ~OwnedString() { pn_string_free(value); }
    std::string str() const { return value ? value : ""; }
};

struct KbHandle {
    pn_kb* kb = nullptr;
    ~KbHandle() { pn_kb_free(kb); }
};

struct SessionHandle {
    pn_session* session = nullptr;
    ~SessionHandle() { pn_session_free(session); }
};

std::string scripted_config(const std::string& fixture_path, const json& extra = {}) {
    json config{{"backend", {{"kind", "scripted"}, {"path", fixture_path}}}};
    for (auto it = extra.begin(); it != extra.end(); ++it) config[it.key()] = it.value();
    return config.dump();
}

// Fixture + items for one clean training item (same shape the unit tests use).
struct TrainSetup {
    TempDir dir;
    std::string fixture_path;
    std::string items_path;

    TrainSetup() {
        fixture_path = dir.file("fixture.json");
        const json fixture{
            {"roles",
             {{"discovery",
               {"```\nname: Falling Objects\ndescription: things dropping under gravity\n```"}},
              {"hypothesizer",
               {"The ball is released, so it falls.\n<info>what holds it up</info>\n"
                "Candidate Answer: A"}},
              {"gatherer", {"([#0image] | ball | accelerates downward due to gravity)"}},
              {"validator", {"Verdict: sufficient"}},
              {"reflection", {"Tip[detail]: watch the drop\nTip[general]: compare frames"}}}}};
        write_file(fixture_path, fixture.dump());

        testutil::make_image_file(dir, "img.png");
        const json item{{"id", "item-1"},
                        {"question", "will the ball fall to the ground"},
                        {"choices", json::array({"yes", "no"})},
                        {"assets", json::array({json{{"kind", "image"}, {"path", "img.png"}}})},
                        {"domain", "S1"},
                        {"split", "train"},
                        {"answer", "A"}};
        items_path = dir.file("items.jsonl");
        write_file(items_path, item.dump() + "\n");
    }
};

} // namespace

TEST_CASE("version and baseline error state") {
    REQUIRE(pn_version() != nullptr);
    CHECK(std::string(pn_version()) == "0.1.0");
    REQUIRE(pn_last_error() != nullptr);
    pn_string_free(nullptr); // must be a no-op
}

TEST_CASE("kb lifecycle through the C surface") {
    KbHandle h;
    REQUIRE(pn_kb_create(&h.kb) == PN_OK);
    REQUIRE(h.kb != nullptr);

    OwnedString doc;
    REQUIRE(pn_kb_to_json(h.kb, &doc.value) == PN_OK);
    const json parsed = json::parse(doc.str());
    CHECK(parsed["version"] == 1);
    CHECK(parsed["revision"] == 0);
    CHECK(parsed["general_tips"].is_array());
    CHECK(parsed["task_nodes"].is_object());

    TempDir dir;
    const std::string path = dir.file("kb.json");
    REQUIRE(pn_kb_save(h.kb, path.c_str()) == PN_OK);

    KbHandle loaded;
    REQUIRE(pn_kb_load(path.c_str(), &loaded.kb) == PN_OK);
    OwnedString doc2;
    REQUIRE(pn_kb_to_json(loaded.kb, &doc2.value) == PN_OK);
    CHECK(doc.str() == doc2.str());
}

TEST_CASE("kb load failures set pn_last_error") {
    pn_kb* kb = nullptr;
    CHECK(pn_kb_load("/nonexistent/kb.json", &kb) == PN_ERR_IO);
    CHECK(kb == nullptr);
    CHECK(std::string(pn_last_error()).find("IoFailure") != std::string::npos);

    TempDir dir;
    const std::string bad = dir.file("bad.json");
    write_file(bad, R"({"version": 99})");
    CHECK(pn_kb_load(bad.c_str(), &kb) == PN_ERR_SCHEMA);
    CHECK(kb == nullptr);

    write_file(bad, "not json at all");
    CHECK(pn_kb_load(bad.c_str(), &kb) == PN_ERR_SCHEMA);
}

TEST_CASE("null arguments are rejected uniformly") {
    CHECK(pn_kb_create(nullptr) == PN_ERR_INVALID_ARGUMENT);
    CHECK(std::string(pn_last_error()).find("out_kb") != std::string::npos);

    pn_kb* kb = nullptr;
    CHECK(pn_kb_load(nullptr, &kb) == PN_ERR_INVALID_ARGUMENT);
    CHECK(pn_kb_save(nullptr, "x") == PN_ERR_INVALID_ARGUMENT);
    CHECK(pn_kb_to_json(nullptr, nullptr) == PN_ERR_INVALID_ARGUMENT);
    CHECK(pn_session_create(nullptr, nullptr) == PN_ERR_INVALID_ARGUMENT);
    CHECK(pn_run_train(nullptr, nullptr, nullptr, nullptr) == PN_ERR_INVALID_ARGUMENT);
    CHECK(pn_run_eval(nullptr, nullptr, nullptr, 1, nullptr) == PN_ERR_INVALID_ARGUMENT);

    KbHandle h;
    REQUIRE(pn_kb_create(&h.kb) == PN_OK);
    CHECK(pn_kb_save(h.kb, nullptr) == PN_ERR_INVALID_ARGUMENT);
    char* out = nullptr;
    CHECK(pn_kb_prune_check_json(h.kb, 0.0, 8, &out) == PN_ERR_INVALID_ARGUMENT);
    CHECK(pn_kb_prune_check_json(h.kb, 1.0, 8, &out) == PN_ERR_INVALID_ARGUMENT);
    CHECK(pn_kb_prune_check_json(h.kb, 0.7, 0, &out) == PN_ERR_INVALID_ARGUMENT);
}

TEST_CASE("session creation validates configuration") {
    pn_session* session = nullptr;
    CHECK(pn_session_create("{not json", &session) == PN_ERR_CONFIG);
    CHECK(session == nullptr);
    CHECK(std::string(pn_last_error()).find("not valid JSON") != std::string::npos);

    CHECK(pn_session_create("{}", &session) == PN_ERR_CONFIG); // backend required
    CHECK(session == nullptr);

    const std::string bad = json{{"backend", {{"kind", "scripted"}, {"path", "/nope.json"}}}}.dump();
    CHECK(pn_session_create(bad.c_str(), &session) == PN_ERR_IO);
}

TEST_CASE("train then eval through the C surface") {
    TrainSetup setup;

    SessionHandle train_session;
    const std::string train_config =
        scripted_config(setup.fixture_path, json{{"kb_path", setup.dir.file("kb.json")}});
    REQUIRE(pn_session_create(train_config.c_str(), &train_session.session) == PN_OK);

    KbHandle kb;
    REQUIRE(pn_kb_create(&kb.kb) == PN_OK);

    OwnedString report;
    REQUIRE(pn_run_train(train_session.session, kb.kb, setup.items_path.c_str(),
                         &report.value) == PN_OK);
    const json doc = json::parse(report.str());
    CHECK(doc["overall"]["total"] == 1);
    CHECK(doc["overall"]["correct"] == 1);
    CHECK(doc["eligible_count"] == 1);
    CHECK(doc["per_item"][0]["node"] == "falling_objects");
    CHECK(doc["per_item"][0]["update"] == "reflective");

    OwnedString stats;
    REQUIRE(pn_kb_stats_json(kb.kb, &stats.value) == PN_OK);
    const json stats_doc = json::parse(stats.str());
    CHECK(stats_doc["task_node_count"] == 1);
    CHECK(stats_doc["general_tip_count"] == 1);
    CHECK(stats_doc["nodes"]["falling_objects"]["n_plus"] == 1);
    CHECK(stats_doc["nodes"]["falling_objects"]["n_minus"] == 0);
    CHECK(stats_doc["nodes"]["falling_objects"]["details"] == 1);
    CHECK(stats_doc["nodes"]["falling_objects"]["error_rate"].get<double>() == 0.0);

    OwnedString prune;
    REQUIRE(pn_kb_prune_check_json(kb.kb, 0.7, 8, &prune.value) == PN_OK);
    const json prune_doc = json::parse(prune.str());
    REQUIRE(prune_doc.is_array());
    REQUIRE(prune_doc.size() == 1);
    CHECK(prune_doc[0]["name"] == "falling_objects");
    CHECK(prune_doc[0]["would_prune"] == false);

    // Eval reuses the trained store; fixture cursors are spent, so build a
    // fresh session with a cycling fixture.
    const json eval_fixture{
        {"cycle", true},
        {"roles",
         {{"hypothesizer", {"It falls.\n<info>what holds it up</info>\nCandidate Answer: A"}},
          {"gatherer", {"([#0image] | ball | pulled by gravity)"}},
          {"validator", {"Verdict: sufficient"}}}}};
    const std::string eval_fixture_path = setup.dir.file("eval_fixture.json");
    write_file(eval_fixture_path, eval_fixture.dump());

    SessionHandle eval_session;
    const std::string eval_config =
        scripted_config(eval_fixture_path, json{{"theta", 0.0}, {"expansion", false}});
    REQUIRE(pn_session_create(eval_config.c_str(), &eval_session.session) == PN_OK);

    OwnedString eval_report;
    REQUIRE(pn_run_eval(eval_session.session, kb.kb, setup.items_path.c_str(), 2,
                        &eval_report.value) == PN_OK);
    const json eval_doc = json::parse(eval_report.str());
    CHECK(eval_doc["overall"]["correct"] == 1);
    CHECK(eval_doc["per_item"][0]["node"] == "falling_objects");
    CHECK(eval_doc["per_item"][0]["update"] == "none");

    // Eval left the stats untouched.
    OwnedString stats_after;
    REQUIRE(pn_kb_stats_json(kb.kb, &stats_after.value) == PN_OK);
    CHECK(json::parse(stats_after.str())["nodes"]["falling_objects"]["n_plus"] == 1);
}

TEST_CASE("run failures map to statuses without crashing") {
    TrainSetup setup;
    SessionHandle session;
    const std::string config = scripted_config(setup.fixture_path);
    REQUIRE(pn_session_create(config.c_str(), &session.session) == PN_OK);

    KbHandle kb;
    REQUIRE(pn_kb_create(&kb.kb) == PN_OK);

    char* out = nullptr;
    CHECK(pn_run_train(session.session, kb.kb, "/nonexistent/items.jsonl", &out) == PN_ERR_IO);
    CHECK(out == nullptr); // nothing was emitted on failure

    // Items without ground truth cannot train.
    const std::string unanswered = setup.dir.file("unanswered.jsonl");
    json item = json::parse(testutil::read_file(setup.items_path));
    item.erase("answer");
    write_file(unanswered, item.dump() + "\n");
    CHECK(pn_run_train(session.session, kb.kb, unanswered.c_str(), &out) == PN_ERR_CONFIG);

    // Bad parallelism is a config complaint too.
    CHECK(pn_run_eval(session.session, kb.kb, setup.items_path.c_str(), 0, &out) ==
          PN_ERR_CONFIG);
    CHECK(std::string(pn_last_error()).find("parallelism") != std::string::npos);
}
