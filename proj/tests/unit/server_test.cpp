#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include <httplib.h>

#include "biasvote/server.hpp"
#include "support.hpp"

using namespace biasvote;
using namespace biasvote::triage;
using nlohmann::json;

namespace {

CodingSession make(std::size_t n) {
  std::vector<TriageItem> items;
  for (std::size_t i = 0; i < n; ++i) items.push_back({"i" + std::to_string(i), "text " + std::to_string(i), {1}, {0}, {0, 1, 0}});
  return {"s1", CodingSchema::default_schema(), items};
}

std::string post(const std::string& annotator, const std::string& item, const std::string& code) {
  return json{{"annotator", annotator}, {"item_id", item}, {"code", code}}.dump();
}

struct ApiFixture : ::testing::Test {
  testkit::TempDir dir;
  SessionStore store{dir.path()};
  server::Api api{store};
  void SetUp() override { store.put(make(3)); }
};

}  // namespace

TEST_F(ApiFixture, FreshSessionStartsAtZero) {
  const auto r = api.get_next("s1", "alice");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["position"], 0);
  EXPECT_EQ(r.body["item"]["item_id"], "i0");
  EXPECT_EQ(r.body["complete"], false);
  EXPECT_EQ(r.body["schema"]["codes"].size(), 6u);
  EXPECT_EQ(r.body["progress"]["total"], 3);
}

TEST_F(ApiFixture, ProgressAndCompletion) {
  for (int i = 0; i < 3; ++i) {
    const auto r = api.post_annotation("s1", post("alice", "i" + std::to_string(i), "GEND"));
    ASSERT_EQ(r.status, 200) << r.body.dump();
    EXPECT_EQ(r.body["item_status"], "annotated by 1");
    EXPECT_EQ(r.body["complete"], i == 2);
  }
  const auto next = api.get_next("s1", "alice");
  EXPECT_EQ(next.body["complete"], true);
  EXPECT_TRUE(next.body["item"].is_null());
  EXPECT_EQ(api.get_next("s1", "bob").body["position"], 0);
}

TEST_F(ApiFixture, Errors) {
  EXPECT_EQ(api.get_next("zzz", "alice").status, 404);
  EXPECT_EQ(api.get_next("zzz", "alice").body["error"]["code"], "session_not_found");
  EXPECT_EQ(api.get_next("s1", "").status, 400);
  auto r = api.post_annotation("s1", post("alice", "i0", "NOPE"));
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["error"]["code"], "unknown_code");
  EXPECT_EQ(api.post_annotation("s1", post("alice", "i9", "GEND")).body["error"]["code"], "unknown_item");
  EXPECT_EQ(api.post_annotation("s1", "{oops").status, 400);
  EXPECT_EQ(api.post_annotation("s1", R"({"annotator":"a","item_id":"i0"})").status, 400);
  EXPECT_EQ(api.post_annotation("s1", R"({"annotator":"a","item_id":"i0","code":5})").status, 400);
  r = api.get_report("s1");
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(r.body["error"]["code"], "insufficient_overlap");
}

TEST_F(ApiFixture, ReportMatchesLibraryAndReadsDoNotMutate) {
  api.post_annotation("s1", post("alice", "i0", "GEND"));
  api.post_annotation("s1", post("bob", "i0", "GEND"));
  api.post_annotation("s1", post("bob", "i1", "SLNG"));
  const auto before = testkit::read_file(store.path_for("s1"));
  const auto r = api.get_report("s1");
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body.dump(), triage::to_json(triage::session_report(store.get("s1"))).dump());
  api.get_next("s1", "alice");
  api.get_session("s1");
  EXPECT_EQ(testkit::read_file(store.path_for("s1")), before);
  const auto info = api.get_session("s1");
  EXPECT_EQ(info.body["items"], 3);
  EXPECT_EQ(info.body["progress"]["bob"], 2);
}

TEST(ServerTest, LiveHttp) {
  testkit::TempDir dir;
  std::filesystem::create_directories(dir / "static");
  testkit::write_file(dir / "static" / "index.html", "<html>ui</html>");
  SessionStore store(dir / "store");
  store.put(make(40));
  server::Server srv(store, {"127.0.0.1", 0, dir / "static"});
  const int port = srv.bind();
  std::thread th([&] { srv.listen(); });
  for (int i = 0; i < 200 && !srv.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  ASSERT_TRUE(srv.running());

  httplib::Client cli("127.0.0.1", port);
  auto r = cli.Get("/sessions/s1/next?annotator=alice");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body)["position"], 0);
  EXPECT_EQ(cli.Get("/sessions/zzz/next?annotator=a")->status, 404);
  r = cli.Get("/index.html");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->body, "<html>ui</html>");

  std::vector<std::thread> pool;
  std::atomic<int> ok{0};
  for (int t = 0; t < 4; ++t)
    pool.emplace_back([&, t] {
      httplib::Client c("127.0.0.1", port);
      for (int k = 0; k < 10; ++k) {
        auto res = c.Post("/sessions/s1/annotations", post("ann" + std::to_string(t), "i" + std::to_string(t * 10 + k), "CNTX"),
                          "application/json");
        if (res && res->status == 200) ++ok;
      }
    });
  for (auto& p : pool) p.join();
  EXPECT_EQ(ok, 40);
  EXPECT_EQ(store.get("s1").annotations().size(), 40u);

  srv.stop();
  th.join();
}
