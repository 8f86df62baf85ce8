#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <thread>

#include "epog/llm_client.hpp"
#include "epog/oracle.hpp"

using namespace epog;

namespace {

LocationQuery cup_query() {
  LocationQuery q;
  q.object_label = "cup";
  q.candidate_rooms = {{NodeId{"kitchen_0"}, "kitchen"},
                       {NodeId{"livingroom_0"}, "livingroom"}};
  q.candidate_receptacles_by_room[NodeId{"kitchen_0"}] = {
      {NodeId{"countertop_0"}, "countertop"}, {NodeId{"fridge_0"}, "fridge"}};
  q.candidate_receptacles_by_room[NodeId{"livingroom_0"}] = {
      {NodeId{"shelf_0"}, "shelf"}};
  return q;
}

MockOracleConfig cup_config(double accuracy) {
  MockOracleConfig cfg;
  cfg.seed = 3;
  cfg.accuracy = accuracy;
  cfg.prior_table["cup"] = {{"kitchen", "countertop"}};
  return cfg;
}

}  // namespace

TEST_CASE("top-ranked hint wins at full accuracy") {
  MockLocationOracle oracle(cup_config(1.0));
  LocationAnswer a = oracle.predict_location(cup_query(), {});
  CHECK(a.room == NodeId{"kitchen_0"});
  CHECK(a.receptacle == NodeId{"countertop_0"});
}

TEST_CASE("exclusion moves to the next-ranked receptacle") {
  MockLocationOracle oracle(cup_config(1.0));
  LocationAnswer a =
      oracle.predict_location(cup_query(), {NodeId{"countertop_0"}});
  CHECK(a.receptacle != NodeId{"countertop_0"});
  // Membership invariant.
  bool member = false;
  for (const auto& [room, rcpts] :
       cup_query().candidate_receptacles_by_room)
    for (const LabeledNode& r : rcpts)
      if (r.id == a.receptacle && room == a.room) member = true;
  CHECK(member);
}

TEST_CASE("exhaustion raises") {
  MockLocationOracle oracle(cup_config(1.0));
  std::set<NodeId> all{NodeId{"countertop_0"}, NodeId{"fridge_0"},
                       NodeId{"shelf_0"}};
  CHECK_THROWS_AS(oracle.predict_location(cup_query(), all), ExhaustionError);
}

TEST_CASE("accuracy zero demotes the hint to second") {
  MockOracleConfig cfg = cup_config(0.0);
  cfg.prior_table["cup"] = {{"kitchen", "countertop"}, {"kitchen", "fridge"}};
  MockLocationOracle oracle(cfg);
  LocationAnswer first = oracle.predict_location(cup_query(), {});
  CHECK(first.receptacle == NodeId{"fridge_0"});
  LocationAnswer second =
      oracle.predict_location(cup_query(), {NodeId{"fridge_0"}});
  CHECK(second.receptacle == NodeId{"countertop_0"});
}

TEST_CASE("mock oracle is a pure function of its inputs") {
  for (double accuracy : {0.0, 0.3, 0.7, 1.0}) {
    MockLocationOracle a(cup_config(accuracy));
    MockLocationOracle b(cup_config(accuracy));
    for (const std::set<NodeId>& excluded :
         {std::set<NodeId>{}, std::set<NodeId>{NodeId{"countertop_0"}}}) {
      for (int rep = 0; rep < 3; ++rep)
        CHECK(a.predict_location(cup_query(), excluded) ==
              b.predict_location(cup_query(), excluded));
    }
  }
}

TEST_CASE("mock answers never violate candidate membership") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    MockOracleConfig cfg;
    cfg.seed = rng();
    cfg.accuracy = (rng() % 100) / 100.0;
    MockLocationOracle oracle(cfg);
    LocationQuery q = cup_query();
    std::set<NodeId> excluded;
    if (rng() % 2) excluded.insert(NodeId{"fridge_0"});
    LocationAnswer a = oracle.predict_location(q, excluded);
    CHECK_FALSE(excluded.count(a.receptacle));
    bool member = false;
    auto it = q.candidate_receptacles_by_room.find(a.room);
    REQUIRE(it != q.candidate_receptacles_by_room.end());
    for (const LabeledNode& r : it->second) member |= (r.id == a.receptacle);
    CHECK(member);
  }
}

TEST_CASE("placeholder substitution fills the question line") {
  PromptLibrary prompts;
  ExceptionQuery q;
  q.failed_action = make_place(NodeId{"v2"}, NodeId{"v1"});
  q.exception_kind = ExceptionKind::Collision;
  q.involved_nodes = {{NodeId{"v3"}, "v3"}};
  q.parking_place = NodeId{"v0"};
  std::string user = substitute_placeholder(
      prompts.exception_user, "failure_action", describe_action(q.failed_action));
  user = substitute_placeholder(user, "exception", describe_exception(q));
  user = substitute_placeholder(user, "parking_place", q.parking_place.value);
  CHECK(user.find("<failure_action>") == std::string::npos);
  CHECK(user.find("place v1 on v2") != std::string::npos);
  CHECK(user.find("The parking place is v0") != std::string::npos);
}

TEST_CASE("prompt templates load from the prompts directory") {
  PromptLibrary lib = PromptLibrary::load(std::string(EPOG_SOURCE_DIR) +
                                          "/prompts");
  CHECK(lib.exception_user.find("<failure_action>") != std::string::npos);
  CHECK(lib.exception_user.find("<parking_place>") != std::string::npos);
  CHECK(lib.location_room.find("<object>") != std::string::npos);
}

// ---------------------------------------------------------------------------
// LLM backend against a local canned server.

namespace {

struct CannedServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::vector<std::string> replies;
  std::atomic<int> calls{0};

  explicit CannedServer(std::vector<std::string> canned)
      : replies(std::move(canned)) {
    server.Post("/v1/chat/completions",
                [this](const httplib::Request& req, httplib::Response& res) {
                  int i = calls++;
                  std::string content =
                      replies[std::min<std::size_t>(i, replies.size() - 1)];
                  nlohmann::json body{
                      {"choices",
                       {{{"message", {{"role", "assistant"},
                                      {"content", content}}}}}}};
                  res.set_content(body.dump(), "application/json");
                });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this]() { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~CannedServer() {
    server.stop();
    thread.join();
  }

  LlmConfig config() const {
    LlmConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) +
                   "/v1/chat/completions";
    cfg.api_key = "test-key";
    cfg.timeout_seconds = 5;
    return cfg;
  }
};

}  // namespace

TEST_CASE("llm location oracle parses Room/Receptacle replies") {
  CannedServer server({"Room: kitchen", "Receptacle: fridge"});
  auto client = std::make_shared<LlmClient>(server.config());
  LlmLocationOracle oracle(client, cup_config(1.0));
  LocationAnswer a = oracle.predict_location(cup_query(), {});
  CHECK(a.room == NodeId{"kitchen_0"});
  CHECK(a.receptacle == NodeId{"fridge_0"});
  CHECK(server.calls == 2);
}

TEST_CASE("llm location oracle falls back to mock ranking after 3 bad replies") {
  CannedServer server({"no idea", "still no idea", "hmm", "nope", "nada",
                       "zilch"});
  auto client = std::make_shared<LlmClient>(server.config());
  LlmLocationOracle oracle(client, cup_config(1.0));
  LocationAnswer a = oracle.predict_location(cup_query(), {});
  CHECK(a.receptacle == NodeId{"countertop_0"});  // the mock's top hint
}

TEST_CASE("llm resolver parses the bracketed sequence") {
  CannedServer server(
      {"Analysis: move v3 away.\nI summarize the action sequence: "
       "[Place(v1, v0), Pick(v3, v2), Place(v3, v0), Pick(v1, v0), "
       "Place(v1, v2)]"});
  auto client = std::make_shared<LlmClient>(server.config());
  LlmExceptionResolver resolver(client);
  ExceptionQuery q;
  q.failed_action = make_place(NodeId{"v2"}, NodeId{"v1"});
  q.exception_kind = ExceptionKind::Collision;
  q.involved_nodes = {{NodeId{"v3"}, "v3"}};
  q.parking_place = NodeId{"v0"};
  std::vector<Action> seq = resolver.resolve_exception(q);
  REQUIRE(seq.size() == 5);
  CHECK(seq[0] == make_place(NodeId{"v0"}, NodeId{"v1"}));
  CHECK(seq[4] == make_place(NodeId{"v2"}, NodeId{"v1"}));
}

TEST_CASE("llm resolver falls back to the rules after unparseable replies") {
  CannedServer server({"garbage", "garbage", "garbage"});
  auto client = std::make_shared<LlmClient>(server.config());
  LlmExceptionResolver resolver(client);
  ExceptionQuery q;
  q.failed_action = make_pick(NodeId{"fridge_0"}, NodeId{"cup_0"});
  q.exception_kind = ExceptionKind::Inaccessibility;
  q.involved_nodes = {{NodeId{"fridge_0"}, "fridge"}};
  q.parking_place = NodeId{"sidetable_0"};
  std::vector<Action> seq = resolver.resolve_exception(q);
  REQUIRE(seq.size() == 2);
  CHECK(seq[0] == make_open(NodeId{"fridge_0"}));
  CHECK(seq[1] == q.failed_action);
}

TEST_CASE("transport errors surface after retries") {
  LlmConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/nowhere";  // nothing listens here
  cfg.timeout_seconds = 1;
  cfg.max_retries = 2;
  LlmClient client(cfg);
  CHECK_THROWS_AS(client.chat("sys", "user"), TransportError);
}
