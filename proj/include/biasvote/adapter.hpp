#pragma once

#include <chrono>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biasvote/model.hpp"

namespace biasvote::model {

/// Client for an external classifier implementing the classify wire protocol.
///
/// Endpoints:
///   http://host:port[/prefix]  POST {prefix}/classify  {"texts": [...]} -> {"probs": [...]}
///   exec:<shell command>       child process; one request object per line on its
///                              stdin, one response object per line on its stdout
///
/// Timeouts and dead peers raise AdapterUnavailable, non-200 replies
/// AdapterError, and malformed or mis-sized replies ProtocolError.
struct AdapterOptions {
  std::chrono::milliseconds timeout{30000};
  std::size_t max_batch = 256;  // texts per request
};

class AdapterClient {
public:
  explicit AdapterClient(std::string endpoint, AdapterOptions options = {});
  ~AdapterClient();
  AdapterClient(const AdapterClient&) = delete;
  AdapterClient& operator=(const AdapterClient&) = delete;

  /// One probability per text, in input order. Thread-safe.
  std::vector<double> classify(std::span<const std::string> texts) const;
  const std::string& endpoint() const noexcept { return endpoint_; }

  struct Transport;

private:
  std::string endpoint_;
  AdapterOptions options_;
  std::unique_ptr<Transport> transport_;
};

std::vector<double> adapter_classify(const std::string& endpoint, std::span<const std::string> texts,
                                     AdapterOptions options = {});

/// Request body for a batch of texts.
std::string encode_classify_request(std::span<const std::string> texts);

/// Validates a response body: a "probs" array of `expected` finite numbers in [0, 1].
std::vector<double> decode_classify_response(std::string_view body, std::size_t expected);

/// BinaryClassifier backed by an adapter, so transformer backends can vote
/// in an ensemble alongside (or instead of) linear models.
class AdapterClassifier final : public BinaryClassifier {
public:
  explicit AdapterClassifier(std::string endpoint, AdapterOptions options = {});

  double predict_proba(std::string_view text) const override;
  std::vector<double> predict_proba_batch(std::span<const std::string> texts) const override;
  std::string fingerprint() const override { return "adapter:" + client_->endpoint(); }
  const std::string& endpoint() const noexcept { return client_->endpoint(); }

private:
  std::shared_ptr<AdapterClient> client_;
};

}  // namespace biasvote::model
