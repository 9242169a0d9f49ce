#include "biasvote/adapter.hpp"

#include <httplib.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <mutex>

#include "biasvote/error.hpp"

namespace biasvote::model {

using nlohmann::json;

std::string encode_classify_request(std::span<const std::string> texts) {
  json j = {{"texts", json::array()}};
  for (const auto& t : texts) j["texts"].push_back(t);
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::vector<double> decode_classify_response(std::string_view body, std::size_t expected) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("adapter response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("probs") || !j["probs"].is_array())
    throw ProtocolError("adapter response lacks a \"probs\" array");
  const auto& probs = j["probs"];
  if (probs.size() != expected)
    throw ProtocolError("adapter returned " + std::to_string(probs.size()) + " probabilities for " +
                        std::to_string(expected) + " texts");
  std::vector<double> out;
  out.reserve(expected);
  for (const auto& p : probs) {
    if (!p.is_number()) throw ProtocolError("adapter probability is not a number");
    const double v = p.get<double>();
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw ProtocolError("adapter probability " + p.dump() + " outside [0,1]");
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct AdapterClient::Transport {
  virtual ~Transport() = default;
  virtual std::string exchange(const std::string& request) = 0;
};

namespace {

class HttpTransport final : public AdapterClient::Transport {
public:
  HttpTransport(const std::string& endpoint, std::chrono::milliseconds timeout) {
    // split scheme://host:port from an optional path prefix
    auto scheme_end = endpoint.find("://");
    auto path_start = endpoint.find('/', scheme_end + 3);
    base_ = endpoint.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = endpoint.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    client_ = std::make_unique<httplib::Client>(base_);
    if (!client_->is_valid()) throw AdapterUnavailable("invalid adapter endpoint '" + endpoint + "'");
    const auto secs = timeout.count() / 1000;
    const auto usecs = (timeout.count() % 1000) * 1000;
    client_->set_connection_timeout(secs, usecs);
    client_->set_read_timeout(secs, usecs);
    client_->set_write_timeout(secs, usecs);
  }

  std::string exchange(const std::string& request) override {
    std::lock_guard lock(mu_);
    auto res = client_->Post(prefix_ + "/classify", request, "application/json");
    if (!res)
      throw AdapterUnavailable("adapter " + base_ + " unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw AdapterError("adapter " + base_ + " replied HTTP " + std::to_string(res->status));
    return res->body;
  }

private:
  std::string base_;
  std::string prefix_;
  std::unique_ptr<httplib::Client> client_;
  std::mutex mu_;
};

class ProcessTransport final : public AdapterClient::Transport {
public:
  ProcessTransport(const std::string& command, std::chrono::milliseconds timeout)
      : command_(command), timeout_(timeout) {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0)
      throw AdapterUnavailable(std::string("socketpair failed: ") + std::strerror(errno));
    pid_ = ::fork();
    if (pid_ < 0) {
      ::close(fds[0]);
      ::close(fds[1]);
      throw AdapterUnavailable(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
      ::dup2(fds[1], STDIN_FILENO);
      ::dup2(fds[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(fds[1]);
    fd_ = fds[0];
  }

  ~ProcessTransport() override {
    if (fd_ >= 0) ::close(fd_);
    if (pid_ > 0) {
      int status = 0;
      // closing the socket delivers EOF; give the child a moment before killing it
      for (int i = 0; i < 50; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
        ::usleep(10000);
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
  }

  std::string exchange(const std::string& request) override {
    std::lock_guard lock(mu_);
    if (dead_) throw AdapterUnavailable("adapter process '" + command_ + "' is not running");
    std::string line = request + "\n";
    std::size_t sent = 0;
    while (sent < line.size()) {
      auto n = ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail("write failed");
      }
      sent += static_cast<std::size_t>(n);
    }
    for (;;) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string response = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return response;
      }
      pollfd p{fd_, POLLIN, 0};
      int rc = ::poll(&p, 1, static_cast<int>(timeout_.count()));
      if (rc == 0) fail("timed out after " + std::to_string(timeout_.count()) + " ms");
      if (rc < 0) {
        if (errno == EINTR) continue;
        fail("poll failed");
      }
      char chunk[4096];
      auto n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n == 0) fail("exited");
      if (n < 0) {
        if (errno == EINTR) continue;
        fail("read failed");
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

private:
  [[noreturn]] void fail(const std::string& what) {
    dead_ = true;  // the line stream is out of sync from here on
    throw AdapterUnavailable("adapter process '" + command_ + "' " + what);
  }

  std::string command_;
  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int fd_ = -1;
  bool dead_ = false;
  std::string buffer_;
  std::mutex mu_;
};

}  // namespace

AdapterClient::AdapterClient(std::string endpoint, AdapterOptions options)
    : endpoint_(std::move(endpoint)), options_(options) {
  if (options_.max_batch == 0) throw InvalidArgument("adapter max_batch must be positive");
  if (endpoint_.rfind("http://", 0) == 0 || endpoint_.rfind("https://", 0) == 0) {
    transport_ = std::make_unique<HttpTransport>(endpoint_, options_.timeout);
  } else if (endpoint_.rfind("exec:", 0) == 0) {
    transport_ = std::make_unique<ProcessTransport>(endpoint_.substr(5), options_.timeout);
  } else {
    throw InvalidArgument("adapter endpoint must start with http://, https:// or exec: ('" +
                          endpoint_ + "')");
  }
}

AdapterClient::~AdapterClient() = default;

std::vector<double> AdapterClient::classify(std::span<const std::string> texts) const {
  std::vector<double> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += options_.max_batch) {
    auto batch = texts.subspan(start, std::min(options_.max_batch, texts.size() - start));
    auto probs = decode_classify_response(transport_->exchange(encode_classify_request(batch)),
                                          batch.size());
    out.insert(out.end(), probs.begin(), probs.end());
  }
  return out;
}

std::vector<double> adapter_classify(const std::string& endpoint, std::span<const std::string> texts,
                                     AdapterOptions options) {
  if (texts.empty()) return {};
  return AdapterClient(endpoint, options).classify(texts);
}

AdapterClassifier::AdapterClassifier(std::string endpoint, AdapterOptions options)
    : client_(std::make_shared<AdapterClient>(std::move(endpoint), options)) {}

double AdapterClassifier::predict_proba(std::string_view text) const {
  std::string t(text);
  return client_->classify(std::span<const std::string>(&t, 1)).front();
}

std::vector<double> AdapterClassifier::predict_proba_batch(std::span<const std::string> texts) const {
  return client_->classify(texts);
}

}  // namespace biasvote::model
