#include "biasvote/server.hpp"

#include <httplib.h>

#include "biasvote/error.hpp"

namespace biasvote::server {

using nlohmann::json;

namespace {

ApiResponse error(int status, std::string code, std::string message) {
  return {status, ApiError{status, std::move(code), std::move(message)}.to_json()};
}

json progress_json(const triage::CodingSession& s, const std::string& annotator) {
  return {{"annotator", annotator}, {"annotated", s.annotated_by(annotator)}, {"total", s.items().size()}};
}

template <typename Fn>
ApiResponse guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const SessionNotFound& e) {
    return error(404, "session_not_found", e.what());
  } catch (const UnknownCode& e) {
    return error(400, "unknown_code", e.what());
  } catch (const UnknownItem& e) {
    return error(400, "unknown_item", e.what());
  } catch (const InvalidArgument& e) {
    return error(400, "bad_request", e.what());
  } catch (const InsufficientOverlap& e) {
    return error(409, "insufficient_overlap", e.what());
  } catch (const std::exception& e) {
    return error(500, "internal_error", e.what());
  }
}

}  // namespace

json ApiError::to_json() const { return {{"error", {{"code", code}, {"message", message}}}}; }

json item_json(const triage::TriageItem& item) {
  return {{"item_id", item.item_id},
          {"text", item.text},
          {"gold", item.gold},
          {"predicted", item.predicted},
          {"votes", item.votes}};
}

json schema_json(const triage::CodingSchema& schema) {
  json codes = json::array();
  for (const auto& c : schema.codes) codes.push_back({{"name", c.name}, {"definition", c.definition}});
  return {{"version", schema.version}, {"codes", codes}};
}

ApiResponse Api::get_next(const std::string& session_id, const std::string& annotator) const {
  return guarded([&]() -> ApiResponse {
    if (annotator.empty()) throw InvalidArgument("query parameter 'annotator' is required");
    const auto s = store_.get(session_id);
    const auto idx = s.next_index(annotator);
    json body{{"session_id", s.id()},
              {"schema", schema_json(s.schema())},
              {"progress", progress_json(s, annotator)},
              {"complete", !idx.has_value()},
              {"position", idx ? json(*idx) : json(nullptr)},
              {"item", idx ? item_json(s.items()[*idx]) : json(nullptr)}};
    return {200, std::move(body)};
  });
}

ApiResponse Api::post_annotation(const std::string& session_id, const std::string& body) {
  return guarded([&]() -> ApiResponse {
    const auto j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw InvalidArgument("request body must be a JSON object");
    for (const char* field : {"annotator", "item_id", "code"})
      if (!j.contains(field) || !j[field].is_string())
        throw InvalidArgument(std::string("field '") + field + "' must be a string");
    const auto annotator = j["annotator"].get<std::string>();
    const auto item_id = j["item_id"].get<std::string>();
    const auto code = j["code"].get<std::string>();
    const auto s = store_.update(session_id, [&](triage::CodingSession& cs) {
      cs.record_annotation(annotator, item_id, code);
    });
    return {200,
            {{"session_id", s.id()},
             {"item_id", item_id},
             {"code", code},
             {"item_status", s.item_status(item_id)},
             {"progress", progress_json(s, annotator)},
             {"complete", !s.next_index(annotator).has_value()}}};
  });
}

ApiResponse Api::get_report(const std::string& session_id) const {
  return guarded([&]() -> ApiResponse { return {200, triage::to_json(triage::session_report(store_.get(session_id)))}; });
}

ApiResponse Api::get_session(const std::string& session_id) const {
  return guarded([&]() -> ApiResponse {
    const auto s = store_.get(session_id);
    json progress = json::object();
    for (const auto& a : s.annotators()) progress[a] = s.annotated_by(a);
    return {200,
            {{"session_id", s.id()},
             {"schema", schema_json(s.schema())},
             {"items", s.items().size()},
             {"annotators", s.annotators()},
             {"progress", progress}}};
  });
}

// ---------------------------------------------------------------------------

struct Server::Impl {
  Api api;
  ServerOptions opts;
  httplib::Server http;
  int port = -1;

  Impl(triage::SessionStore& store, ServerOptions o) : api(store), opts(std::move(o)) {}
};

namespace {

void reply(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
}

}  // namespace

Server::Server(triage::SessionStore& store, ServerOptions opts)
    : impl_(std::make_unique<Impl>(store, std::move(opts))) {
  auto& http = impl_->http;
  auto& api = impl_->api;
  http.Get(R"(/sessions/([A-Za-z0-9_-]+)/next)", [&api](const httplib::Request& req, httplib::Response& res) {
    reply(res, api.get_next(req.matches[1], req.get_param_value("annotator")));
  });
  http.Post(R"(/sessions/([A-Za-z0-9_-]+)/annotations)",
            [&api](const httplib::Request& req, httplib::Response& res) {
              reply(res, api.post_annotation(req.matches[1], req.body));
            });
  http.Get(R"(/sessions/([A-Za-z0-9_-]+)/report)", [&api](const httplib::Request& req, httplib::Response& res) {
    reply(res, api.get_report(req.matches[1]));
  });
  http.Get(R"(/sessions/([A-Za-z0-9_-]+))", [&api](const httplib::Request& req, httplib::Response& res) {
    reply(res, api.get_session(req.matches[1]));
  });
  if (impl_->opts.static_dir) {
    if (!http.set_mount_point("/", impl_->opts.static_dir->string()))
      throw InvalidArgument("static directory " + impl_->opts.static_dir->string() + " does not exist");
  }
}

Server::~Server() { stop(); }

int Server::bind() {
  if (impl_->port >= 0) return impl_->port;
  auto& o = impl_->opts;
  if (o.port == 0) {
    impl_->port = impl_->http.bind_to_any_port(o.host);
  } else if (impl_->http.bind_to_port(o.host, o.port)) {
    impl_->port = o.port;
  }
  if (impl_->port < 0) throw Error("cannot bind " + o.host + ":" + std::to_string(o.port));
  return impl_->port;
}

void Server::listen() {
  bind();
  impl_->http.listen_after_bind();
}

void Server::stop() {
  if (impl_->http.is_running()) impl_->http.stop();
}

bool Server::running() const { return impl_->http.is_running(); }

}  // namespace biasvote::server
