#include <gtest/gtest.h>

#include <thread>

#include "biasvote/error.hpp"
#include "biasvote/session_store.hpp"
#include "support.hpp"

using namespace biasvote;
using namespace biasvote::triage;

namespace {

CodingSession make(const std::string& id, std::size_t n) {
  std::vector<TriageItem> items;
  for (std::size_t i = 0; i < n; ++i) items.push_back({"i" + std::to_string(i), "t", {1}, {0}, {}});
  return {id, CodingSchema::default_schema(), items};
}

}  // namespace

TEST(SessionStoreTest, PutGetList) {
  testkit::TempDir dir;
  SessionStore store(dir.path());
  EXPECT_FALSE(store.exists("s1"));
  EXPECT_THROW(store.get("s1"), SessionNotFound);
  store.put(make("s1", 2));
  store.put(make("s2", 1));
  EXPECT_TRUE(store.exists("s1"));
  EXPECT_EQ(store.list(), (std::vector<std::string>{"s1", "s2"}));
  EXPECT_EQ(store.get("s1"), make("s1", 2));
}

TEST(SessionStoreTest, IdValidation) {
  EXPECT_TRUE(SessionStore::valid_id("triage-abc_1"));
  EXPECT_FALSE(SessionStore::valid_id(""));
  EXPECT_FALSE(SessionStore::valid_id("../etc"));
  EXPECT_FALSE(SessionStore::valid_id(std::string(200, 'a')));
  testkit::TempDir dir;
  SessionStore store(dir.path());
  EXPECT_THROW(store.get("../x"), SessionNotFound);
}

TEST(SessionStoreTest, FailedUpdateWritesNothing) {
  testkit::TempDir dir;
  SessionStore store(dir.path());
  store.put(make("s", 1));
  const auto before = testkit::read_file(store.path_for("s"));
  EXPECT_THROW(store.update("s", [](CodingSession& s) { s.record_annotation("a", "i0", "BAD"); }), UnknownCode);
  EXPECT_EQ(testkit::read_file(store.path_for("s")), before);
}

TEST(SessionStoreTest, ConcurrentUpdatesAllPersist) {
  testkit::TempDir dir;
  constexpr int kThreads = 8, kPer = 10;
  {
    SessionStore store(dir.path());
    store.put(make("s", kThreads * kPer));
    std::vector<std::thread> pool;
    for (int t = 0; t < kThreads; ++t)
      pool.emplace_back([&store, t] {
        for (int k = 0; k < kPer; ++k)
          store.update("s", [&](CodingSession& s) {
            s.record_annotation("ann" + std::to_string(t), "i" + std::to_string(t * kPer + k), "GEND");
          });
      });
    for (auto& th : pool) th.join();
  }
  SessionStore reopened(dir.path());
  const auto s = reopened.get("s");
  EXPECT_EQ(s.annotations().size(), static_cast<std::size_t>(kThreads * kPer));
  EXPECT_EQ(s.trail().size(), static_cast<std::size_t>(kThreads * kPer));
  for (const auto& e : std::filesystem::directory_iterator(dir.path()))
    EXPECT_NE(e.path().extension(), ".tmp");
}

TEST(AtomicWriteTest, Replaces) {
  testkit::TempDir dir;
  atomic_write(dir / "f.txt", "one");
  atomic_write(dir / "f.txt", "two");
  EXPECT_EQ(testkit::read_file(dir / "f.txt"), "two");
}
