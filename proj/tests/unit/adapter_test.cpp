#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "biasvote/adapter.hpp"
#include "biasvote/error.hpp"
#include "support.hpp"

using namespace biasvote;
using namespace biasvote::model;
using nlohmann::json;

namespace {

/// Mock adapter: probability 0.9 for texts containing "bad", else 0.5.
/// `drop` makes it return one probability too few.
class MockService {
public:
  explicit MockService(int status = 200, bool drop = false) {
    svr_.Post("/classify", [this, status, drop](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      auto j = json::parse(req.body);
      json probs = json::array();
      for (const auto& t : j.at("texts")) probs.push_back(t.get<std::string>().find("bad") != std::string::npos ? 0.9 : 0.5);
      if (drop && !probs.empty()) probs.erase(probs.size() - 1);
      res.status = status;
      res.set_content(json{{"probs", probs}}.dump(), "application/json");
    });
    port_ = svr_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { svr_.listen_after_bind(); });
    svr_.wait_until_ready();
  }
  ~MockService() {
    svr_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::atomic<int> requests{0};

private:
  httplib::Server svr_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST(AdapterTest, EchoesHalf) {
  MockService svc;
  const std::vector<std::string> texts{"hello", "world"};
  EXPECT_EQ(adapter_classify(svc.endpoint(), texts), (std::vector<double>{0.5, 0.5}));
}

TEST(AdapterTest, PreservesOrderAcrossBatches) {
  MockService svc;
  AdapterOptions o;
  o.max_batch = 3;
  std::vector<std::string> texts;
  std::vector<double> want;
  for (int i = 0; i < 10; ++i) {
    texts.push_back(i % 3 == 0 ? "bad " + std::to_string(i) : "ok " + std::to_string(i));
    want.push_back(i % 3 == 0 ? 0.9 : 0.5);
  }
  EXPECT_EQ(adapter_classify(svc.endpoint(), texts, o), want);
  EXPECT_EQ(svc.requests.load(), 4);
}

TEST(AdapterTest, EmptyListSendsNothing) {
  MockService svc;
  EXPECT_TRUE(adapter_classify(svc.endpoint(), {}).empty());
  EXPECT_EQ(svc.requests.load(), 0);
}

TEST(AdapterTest, CountMismatchIsProtocolError) {
  MockService svc(200, true);
  const std::vector<std::string> texts{"a", "b"};
  EXPECT_THROW(adapter_classify(svc.endpoint(), texts), ProtocolError);
}

TEST(AdapterTest, Non200IsAdapterError) {
  MockService svc(503);
  const std::vector<std::string> texts{"a"};
  EXPECT_THROW(adapter_classify(svc.endpoint(), texts), AdapterError);
}

TEST(AdapterTest, UnreachableIsUnavailable) {
  AdapterOptions o;
  o.timeout = std::chrono::milliseconds(300);
  const std::vector<std::string> texts{"a"};
  EXPECT_THROW(adapter_classify("http://127.0.0.1:1", texts, o), AdapterUnavailable);
}

TEST(AdapterTest, DecodeValidates) {
  EXPECT_EQ(decode_classify_response(R"({"probs":[0.25,1]})", 2), (std::vector<double>{0.25, 1.0}));
  EXPECT_THROW(decode_classify_response(R"({"probs":[1.5]})", 1), ProtocolError);
  EXPECT_THROW(decode_classify_response(R"({"p":[0.1]})", 1), ProtocolError);
  EXPECT_THROW(decode_classify_response("not json", 1), ProtocolError);
  const std::vector<std::string> texts{"x", "y\n"};
  EXPECT_EQ(json::parse(encode_classify_request(texts)), (json{{"texts", {"x", "y\n"}}}));
}

TEST(AdapterTest, ProcessMode) {
  testkit::TempDir dir;
  testkit::write_file(dir / "adapter.py",
                      "import json, sys\n"
                      "for line in sys.stdin:\n"
                      "    texts = json.loads(line)['texts']\n"
                      "    print(json.dumps({'probs': [0.9 if 'bad' in t else 0.1 for t in texts]}), flush=True)\n");
  const AdapterClassifier c("exec:python3 " + (dir / "adapter.py").string());
  const std::vector<std::string> texts{"bad thing", "fine", "also bad"};
  EXPECT_EQ(c.predict_proba_batch(texts), (std::vector<double>{0.9, 0.1, 0.9}));
  EXPECT_EQ(c.predict_proba("fine"), 0.1);
  EXPECT_EQ(c.fingerprint(), "adapter:exec:python3 " + (dir / "adapter.py").string());
}

TEST(AdapterTest, ProcessTimeoutIsUnavailable) {
  AdapterOptions o;
  o.timeout = std::chrono::milliseconds(200);
  const std::vector<std::string> texts{"a"};
  EXPECT_THROW(adapter_classify("exec:sleep 5", texts, o), AdapterUnavailable);
}
