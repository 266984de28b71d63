#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include <porgysim/graph_io.hpp>

#include "app/api.hpp"
#include "temp_dir.hpp"

using namespace porgysim;
using app::ApiService;
using app::HttpRequest;

namespace {

struct Reply {
  int status;
  ojson body;
};

Reply call(ApiService& api, const std::string& method, const std::string& target, const ojson& body = nullptr) {
  auto res = api.handle(HttpRequest{method, target, body.is_null() ? "" : body.dump()});
  return {res.status, res.body.empty() ? ojson() : ojson::parse(res.body)};
}

ojson star_session() {
  return ojson{{"edges", "n1 n2\nn1 n3\nn4 n1\n"}, {"model", "ic"}, {"seeds", {"n1"}}, {"p", 1}, {"rng", 42}};
}

}  // namespace

TEST(Api, CreateRunMetrics) {
  ApiService api;
  auto created = call(api, "POST", "/sessions", star_session());
  ASSERT_EQ(created.status, 201) << created.body.dump();
  auto id = created.body["id"].get<std::string>();
  EXPECT_EQ(created.body["nodes"], 4);
  auto rounds = call(api, "POST", "/sessions/" + id + "/rounds", {{"rounds", 2}});
  ASSERT_EQ(rounds.status, 200) << rounds.body.dump();
  EXPECT_EQ(rounds.body["rounds"].size(), 2u);
  auto metrics = call(api, "GET", "/sessions/" + id + "/metrics");
  ASSERT_EQ(metrics.status, 200);
  ASSERT_EQ(metrics.body["rows"].size(), 2u);
  EXPECT_EQ(metrics.body["rows"][1]["active"], 4);
  EXPECT_TRUE(metrics.body["rows"][0]["efficiency"].is_null());
  auto listed = call(api, "GET", "/sessions");
  EXPECT_EQ(listed.body["sessions"], ojson::array({id}));
}

TEST(Api, NotFoundCases) {
  ApiService api;
  EXPECT_EQ(call(api, "GET", "/sessions/nope/tree").status, 404);
  EXPECT_EQ(call(api, "GET", "/elsewhere").status, 404);
  auto id = call(api, "POST", "/sessions", star_session()).body["id"].get<std::string>();
  EXPECT_EQ(call(api, "GET", "/sessions/" + id + "/states/99").status, 404);
  EXPECT_EQ(call(api, "GET", "/sessions/" + id + "/states/abc").status, 404);
  EXPECT_EQ(call(api, "GET", "/sessions/" + id + "/metrics?leaf=77").status, 404);
  EXPECT_EQ(call(api, "POST", "/sessions/" + id + "/branch", {{"state", 12}}).status, 404);
  EXPECT_EQ(call(api, "GET", "/sessions/" + id + "/states/0").status, 200);
}

TEST(Api, BadRequests) {
  ApiService api;
  EXPECT_EQ(call(api, "POST", "/sessions", ojson{{"model", "ic"}}).status, 400);
  auto bad_model = star_session();
  bad_model["model"] = "sir";
  EXPECT_EQ(call(api, "POST", "/sessions", bad_model).status, 400);
  auto res = api.handle(HttpRequest{"POST", "/sessions", "{not json"});
  EXPECT_EQ(res.status, 400);
  auto lt = star_session();
  lt["model"] = "lt";
  auto r = call(api, "POST", "/sessions", lt);
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["error"], "config_error");
  auto sneaky = star_session();
  sneaky["id"] = "../escape";
  EXPECT_EQ(call(api, "POST", "/sessions", sneaky).status, 400);
  sneaky["id"] = "mine_1";
  EXPECT_EQ(call(api, "POST", "/sessions", sneaky).status, 201);
  EXPECT_EQ(call(api, "POST", "/sessions", sneaky).status, 409);
}

TEST(Api, BranchThenRunAddsSecondBranch) {
  ApiService api;
  auto body = ojson{{"edges", "n1 n2\nn2 n3\nn3 n4\n"}, {"model", "ic"}, {"seeds", {"n1"}}, {"p", 1}, {"rng", 1}};
  auto id = call(api, "POST", "/sessions", body).body["id"].get<std::string>();
  ASSERT_EQ(call(api, "POST", "/sessions/" + id + "/rounds", {{"rounds", 10}}).status, 200);
  auto tree = call(api, "GET", "/sessions/" + id + "/tree").body;
  ASSERT_EQ(tree["leaves"].size(), 1u);
  auto branch = call(api, "POST", "/sessions/" + id + "/branch", {{"state", 2}});
  ASSERT_EQ(branch.status, 200);
  EXPECT_EQ(branch.body["cursor"], 2);
  ASSERT_EQ(call(api, "POST", "/sessions/" + id + "/rounds", {{"rounds", 1}}).status, 200);
  tree = call(api, "GET", "/sessions/" + id + "/tree").body;
  EXPECT_EQ(tree["leaves"].size(), 2u);
  std::size_t children_of_2 = 0;
  for (const auto& s : tree["states"]) {
    if (s["id"] == 2) children_of_2 = s["children"].size();
  }
  EXPECT_EQ(children_of_2, 2u);
}

TEST(Api, SelectionBroadcastReachesAllSubscribers) {
  ApiService api;
  auto id = call(api, "POST", "/sessions", star_session()).body["id"].get<std::string>();
  std::vector<std::string> a, b, other;
  api.events().subscribe(id, [&](const std::string& m) { a.push_back(m); });
  api.events().subscribe(id, [&](const std::string& m) { b.push_back(m); });
  api.events().subscribe("someone-else", [&](const std::string& m) { other.push_back(m); });
  auto r = call(api, "POST", "/sessions/" + id + "/selection", {{"elements", {"n5"}}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["delivered"], 2);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(other.empty());
  auto msg = ojson::parse(a[0]);
  EXPECT_EQ(msg["type"], "selection");
  EXPECT_EQ(msg["payload"]["elements"], ojson::array({"n5"}));
}

TEST(Api, AppliedEventsFollowRounds) {
  ApiService api;
  auto id = call(api, "POST", "/sessions", star_session()).body["id"].get<std::string>();
  std::vector<ojson> seen;
  auto token = api.events().subscribe(id, [&](const std::string& m) { seen.push_back(ojson::parse(m)); });
  call(api, "POST", "/sessions/" + id + "/rounds", {{"rounds", 1}});
  ASSERT_EQ(seen.size(), 6u);
  for (const auto& m : seen) {
    EXPECT_EQ(m["type"], "applied");
    EXPECT_EQ(m["payload"]["step"], 1);
  }
  api.events().unsubscribe(token);
  call(api, "POST", "/sessions/" + id + "/branch", {{"state", 0}});
  EXPECT_EQ(seen.size(), 6u);
}

TEST(Api, ConcurrentMutationGets409) {
  ApiService api;
  auto id = call(api, "POST", "/sessions", star_session()).body["id"].get<std::string>();
  auto session = api.session(id);
  {
    std::lock_guard hold(session->mutation);
    auto r = call(api, "POST", "/sessions/" + id + "/rounds", {{"rounds", 1}});
    EXPECT_EQ(r.status, 409);
    EXPECT_EQ(call(api, "POST", "/sessions/" + id + "/apply", {{"rule", "IC trial d2s"}, {"match", "random"}}).status,
              409);
    // reads are not blocked
    EXPECT_EQ(call(api, "GET", "/sessions/" + id + "/tree").status, 200);
  }
  EXPECT_EQ(call(api, "POST", "/sessions/" + id + "/rounds", {{"rounds", 1}}).status, 200);
}

TEST(Api, ConcurrentRoundsNeverInterleave) {
  ApiService api;
  auto body = star_session();
  body["edges"] = "n1 n2\nn2 n3\nn3 n4\nn4 n5\nn5 n6\nn6 n7\n";
  auto id = call(api, "POST", "/sessions", body).body["id"].get<std::string>();
  std::atomic<int> ok{0}, conflict{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&] {
      auto r = call(api, "POST", "/sessions/" + id + "/rounds", {{"rounds", 1}});
      (r.status == 200 ? ok : conflict)++;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok + conflict, 4);
  EXPECT_GE(ok.load(), 1);
  // Every committed step is whole: one trial + one activation per wave.
  auto tree = call(api, "GET", "/sessions/" + id + "/tree").body;
  for (const auto& g : tree["groups"]) {
    EXPECT_TRUE(g["complete"].get<bool>());
    EXPECT_EQ(g["states"].size(), 2u);
  }
  EXPECT_EQ(tree["leaves"].size(), 1u);
}

TEST(Api, ApplyExplicitAndRandom) {
  ApiService api;
  auto id = call(api, "POST", "/sessions", star_session()).body["id"].get<std::string>();
  auto r = call(api, "POST", "/sessions/" + id + "/apply", {{"rule", "IC activate"}, {"match", "random"}});
  EXPECT_EQ(r.status, 422);
  r = call(api, "POST", "/sessions/" + id + "/apply", {{"rule", "IC trial d2s"}, {"match", "random"}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["parent"], 0);
  EXPECT_EQ(r.body["child"], 1);
  EXPECT_EQ(r.body["step"], 1);
  auto state = call(api, "GET", "/sessions/" + id + "/states/1").body["graph"];
  EXPECT_FALSE(state["nodes"].empty());
  r = call(api, "POST", "/sessions/" + id + "/apply", {{"rule", "IC trial d2s"}, {"match", {1, 2, 3, 4, 5}}});
  EXPECT_EQ(r.status, 422);
  r = call(api, "POST", "/sessions/" + id + "/apply", {{"rule", "no such rule"}, {"match", "random"}});
  EXPECT_EQ(r.status, 400);
}

TEST(Api, SetPosFilterAndErrors) {
  ApiService api;
  auto id = call(api, "POST", "/sessions", star_session()).body["id"].get<std::string>();
  auto r = call(api, "POST", "/sessions/" + id + "/setpos", {{"filter", "Property(CrtGraph,Node,active==true)"}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["position"].size(), 1u);
  r = call(api, "POST", "/sessions/" + id + "/setpos", {{"filter", "Property(CrtGraph,Node,active=="}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["line"], 1);
  EXPECT_TRUE(r.body.contains("column"));
  // The override restricts the next application: only trials touching n1 remain possible anyway.
  r = call(api, "POST", "/sessions/" + id + "/setpos", {{"ids", ojson::array()}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(call(api, "POST", "/sessions/" + id + "/apply", {{"rule", "IC trial d2s"}, {"match", "random"}}).status,
            422);
}

TEST(Api, ValidateStrategy) {
  ApiService api;
  auto ok = call(api, "POST", "/validate/strategy", {{"text", "repeat(IC trial d2s);\nrepeat(IC activate)"}});
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(ok.body["instructions"].size(), 2u);
  auto bad = call(api, "POST", "/validate/strategy", {{"text", "repeat(a);\nrepeat("}});
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(bad.body["line"], 2);
  auto wrong_model = call(api, "POST", "/validate/strategy", {{"text", "repeat(IC activate)"}, {"model", "lt"}});
  EXPECT_EQ(wrong_model.status, 400);
}

TEST(Api, TraceEndpoint) {
  ApiService api;
  auto id = call(api, "POST", "/sessions", star_session()).body["id"].get<std::string>();
  call(api, "POST", "/sessions/" + id + "/rounds", {{"rounds", 1}});
  auto r = call(api, "GET", "/sessions/" + id + "/trace/1");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["entries"].size(), 7u);
  EXPECT_FALSE(r.body["entries"][0]["changed"].get<bool>());
}

TEST(Api, PersistedSessionsReload) {
  fixtures::TempDir dir;
  std::string id;
  ojson tree_before;
  {
    ApiService api(dir.path().string());
    id = call(api, "POST", "/sessions", star_session()).body["id"].get<std::string>();
    call(api, "POST", "/sessions/" + id + "/rounds", {{"rounds", 2}});
    tree_before = call(api, "GET", "/sessions/" + id + "/tree").body;
  }
  ApiService again(dir.path().string());
  auto tree = call(again, "GET", "/sessions/" + id + "/tree");
  ASSERT_EQ(tree.status, 200);
  EXPECT_EQ(tree.body, tree_before);
  EXPECT_EQ(call(again, "GET", "/sessions/../etc/tree").status, 404);
}
