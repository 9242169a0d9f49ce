#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "biasvote/session_store.hpp"

namespace biasvote::server {

struct ApiError {
  int status = 500;  // 400, 404, 409 or 500
  std::string code;
  std::string message;
  nlohmann::json to_json() const;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// Transport-free request handlers over a session store.
class Api {
public:
  explicit Api(triage::SessionStore& store) : store_(store) {}

  ApiResponse get_next(const std::string& session_id, const std::string& annotator) const;
  ApiResponse post_annotation(const std::string& session_id, const std::string& body);
  ApiResponse get_report(const std::string& session_id) const;
  ApiResponse get_session(const std::string& session_id) const;

private:
  triage::SessionStore& store_;
};

nlohmann::json item_json(const triage::TriageItem& item);
nlohmann::json schema_json(const triage::CodingSchema& schema);

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;
};

class Server {
public:
  Server(triage::SessionStore& store, ServerOptions opts);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds the socket; returns the bound port.
  int bind();
  /// Serves until stop(). Calls bind() first when needed.
  void listen();
  void stop();
  bool running() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace biasvote::server
