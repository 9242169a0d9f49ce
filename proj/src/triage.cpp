#include "biasvote/triage.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "biasvote/checksum.hpp"
#include "biasvote/error.hpp"
#include "biasvote/metrics.hpp"
#include "biasvote/rng.hpp"

namespace biasvote::triage {

using nlohmann::json;

CodingSchema CodingSchema::default_schema() {
  return {1,
          {{"GEND", "Gender-related issues"},
           {"CNTX", "Lack of context"},
           {"SLNG", "Issues in resolving slang"},
           {"ERROR", "Issues in original annotation"},
           {"MSCL", "Misclassified by the model"},
           {"OTHER", "Not belong to any category"}}};
}

bool CodingSchema::contains(const std::string& name) const {
  return std::any_of(codes.begin(), codes.end(), [&](const Code& c) { return c.name == name; });
}

void CodingSchema::validate() const {
  std::set<std::string> seen;
  for (const auto& c : codes) {
    if (c.name.empty()) throw InvalidArgument("code names must be nonempty");
    if (!seen.insert(c.name).second) throw InvalidArgument("duplicate code '" + c.name + "'");
  }
}

// ---------------------------------------------------------------------------

std::vector<TriageItem> extract_misclassified(std::span<const Labels> preds, std::span<const Labels> golds,
                                              const Dataset& d, std::span<const Labels> votes) {
  if (preds.size() != golds.size() || preds.size() != d.size())
    throw InvalidArgument("extract_misclassified: " + std::to_string(preds.size()) + " predictions, " +
                          std::to_string(golds.size()) + " gold labels, " + std::to_string(d.size()) +
                          " records");
  if (!votes.empty() && votes.size() != preds.size())
    throw InvalidArgument("extract_misclassified: vote list length mismatch");
  std::vector<TriageItem> out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == golds[i]) continue;
    TriageItem item{d.records[i].id, d.records[i].text, golds[i], preds[i], {}};
    if (!votes.empty()) item.votes = votes[i];
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<TriageItem> extract_misclassified(std::span<const int> preds, std::span<const int> golds,
                                              const Dataset& d) {
  std::vector<Labels> p, g;
  for (int v : preds) p.push_back({v});
  for (int v : golds) g.push_back({v});
  return extract_misclassified(std::span<const Labels>(p), std::span<const Labels>(g), d);
}

std::vector<TriageItem> extract_misclassified(std::span<const LabelTriple> preds,
                                              std::span<const LabelTriple> golds, const Dataset& d) {
  std::vector<Labels> p, g;
  for (const auto& t : preds) p.push_back({t.hs, t.tr, t.ag});
  for (const auto& t : golds) g.push_back({t.hs, t.tr, t.ag});
  return extract_misclassified(std::span<const Labels>(p), std::span<const Labels>(g), d);
}

// ---------------------------------------------------------------------------

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

CodingSession::CodingSession(std::string id, CodingSchema schema, std::vector<TriageItem> items)
    : id_(std::move(id)), schema_(std::move(schema)), items_(std::move(items)) {
  if (id_.empty()) throw InvalidArgument("session id must be nonempty");
  schema_.validate();
  std::set<std::string> seen;
  for (const auto& it : items_)
    if (!seen.insert(it.item_id).second)
      throw InvalidArgument("duplicate item id '" + it.item_id + "' in session");
}

std::optional<std::size_t> CodingSession::item_index(const std::string& item_id) const {
  for (std::size_t i = 0; i < items_.size(); ++i)
    if (items_[i].item_id == item_id) return i;
  return std::nullopt;
}

void CodingSession::record_annotation(const std::string& annotator, const std::string& item_id,
                                      const std::string& code, std::string timestamp) {
  if (annotator.empty()) throw InvalidArgument("annotator name must be nonempty");
  if (!item_index(item_id)) throw UnknownItem("unknown item '" + item_id + "'");
  if (!schema_.contains(code)) throw UnknownCode("code '" + code + "' is not in the schema");
  annotations_[{annotator, item_id}] = Annotation{code, timestamp, schema_.version};
  trail_.push_back({annotator, item_id, code, std::move(timestamp), schema_.version});
}

std::vector<std::string> CodingSession::annotators() const {
  std::set<std::string> names;
  for (const auto& [key, a] : annotations_) names.insert(key.first);
  return {names.begin(), names.end()};
}

std::size_t CodingSession::annotator_count(const std::string& item_id) const {
  std::size_t n = 0;
  for (const auto& [key, a] : annotations_)
    if (key.second == item_id) ++n;
  return n;
}

std::string CodingSession::item_status(const std::string& item_id) const {
  if (!item_index(item_id)) throw UnknownItem("unknown item '" + item_id + "'");
  const auto n = annotator_count(item_id);
  return n == 0 ? "unannotated" : "annotated by " + std::to_string(n);
}

std::size_t CodingSession::annotated_by(const std::string& annotator) const {
  std::size_t n = 0;
  for (const auto& [key, a] : annotations_)
    if (key.first == annotator) ++n;
  return n;
}

std::optional<std::size_t> CodingSession::next_index(const std::string& annotator) const {
  for (std::size_t i = 0; i < items_.size(); ++i)
    if (!annotations_.count({annotator, items_[i].item_id})) return i;
  return std::nullopt;
}

void CodingSession::add_code(Code code) {
  if (code.name.empty()) throw InvalidArgument("code names must be nonempty");
  if (schema_.contains(code.name)) throw SchemaConflict("code '" + code.name + "' already exists");
  schema_.codes.push_back(std::move(code));
  ++schema_.version;
}

void CodingSession::set_definition(const std::string& name, std::string definition) {
  for (auto& c : schema_.codes)
    if (c.name == name) {
      c.definition = std::move(definition);
      ++schema_.version;
      return;
    }
  throw UnknownCode("code '" + name + "' is not in the schema");
}

void CodingSession::remove_code(const std::string& name) {
  auto it = std::find_if(schema_.codes.begin(), schema_.codes.end(),
                         [&](const Code& c) { return c.name == name; });
  if (it == schema_.codes.end()) throw UnknownCode("code '" + name + "' is not in the schema");
  for (const auto& [key, a] : annotations_)
    if (a.code == name)
      throw SchemaConflict("code '" + name + "' is still used by " + key.first + " on item " + key.second);
  schema_.codes.erase(it);
  ++schema_.version;
}

// ---------------------------------------------------------------------------

CodingSession draw_sample(std::span<const TriageItem> items, double confidence_percent,
                          double margin_percent, std::uint64_t seed, std::string session_id) {
  if (items.empty()) throw InvalidArgument("draw_sample: no items to sample");
  metrics::SampleSpec spec;
  spec.population = items.size();
  spec.confidence = metrics::parse_confidence(confidence_percent);
  spec.margin_percent = margin_percent;
  const auto n = static_cast<std::size_t>(metrics::sample_size(spec));

  Rng rng(seed);
  std::vector<TriageItem> chosen;
  chosen.reserve(n);
  for (auto i : rng.sample_indices(items.size(), n)) chosen.push_back(items[i]);

  if (session_id.empty()) {
    std::string basis = std::to_string(seed);
    for (const auto& it : chosen) basis += "\x1f" + it.item_id;
    session_id = "triage-" + sha256_hex(basis).substr(0, 12);
  }
  return CodingSession(std::move(session_id), CodingSchema::default_schema(), std::move(chosen));
}

// ---------------------------------------------------------------------------

SessionReport session_report(const CodingSession& s) {
  SessionReport r;
  r.session_id = s.id();
  r.schema_version = s.schema().version;
  r.annotators = s.annotators();

  const auto& ann = s.annotations();
  for (std::size_t i = 0; i < r.annotators.size(); ++i)
    for (std::size_t j = i + 1; j < r.annotators.size(); ++j) {
      std::vector<std::string> a, b;
      for (const auto& item : s.items()) {
        auto x = ann.find({r.annotators[i], item.item_id});
        auto y = ann.find({r.annotators[j], item.item_id});
        if (x == ann.end() || y == ann.end()) continue;
        a.push_back(x->second.code);
        b.push_back(y->second.code);
      }
      if (a.empty()) continue;
      r.pairwise.push_back({r.annotators[i], r.annotators[j], a.size(), metrics::cohen_kappa(a, b)});
    }
  if (r.pairwise.empty())
    throw InsufficientOverlap("need at least two annotators who coded a common item");

  std::map<std::string, std::size_t> counts;
  for (const auto& item : s.items()) {
    std::map<std::string, std::string> codes;
    for (const auto& name : r.annotators) {
      auto x = ann.find({name, item.item_id});
      if (x != ann.end()) codes[name] = x->second.code;
    }
    if (codes.size() < 2) continue;
    const bool unanimous = std::all_of(codes.begin(), codes.end(),
                                       [&](const auto& kv) { return kv.second == codes.begin()->second; });
    if (!unanimous) {
      r.disagreements.push_back({item.item_id, std::move(codes)});
    } else if (codes.size() == r.annotators.size()) {
      ++counts[codes.begin()->second];
      ++r.agreed_items;
    }
  }
  for (const auto& c : s.schema().codes) {
    const auto n = counts.count(c.name) ? counts[c.name] : 0;
    const double pct = r.agreed_items ? 100.0 * static_cast<double>(n) / static_cast<double>(r.agreed_items) : 0.0;
    r.frequencies.push_back({c.name, n, pct});
  }
  return r;
}

json to_json(const SessionReport& r) {
  json pairs = json::array();
  for (const auto& p : r.pairwise)
    pairs.push_back({{"first", p.first}, {"second", p.second}, {"common_items", p.common_items}, {"kappa", p.kappa}});
  json freqs = json::array();
  for (const auto& f : r.frequencies) freqs.push_back({{"code", f.code}, {"count", f.count}, {"percent", f.percent}});
  json dis = json::array();
  for (const auto& d : r.disagreements) dis.push_back({{"item_id", d.item_id}, {"codes", d.codes}});
  return {{"session_id", r.session_id},
          {"schema_version", r.schema_version},
          {"annotators", r.annotators},
          {"pairwise_kappa", pairs},
          {"agreed_items", r.agreed_items},
          {"frequencies", freqs},
          {"disagreements", dis}};
}

std::string format_report(const SessionReport& r) {
  std::ostringstream out;
  out << "Session " << r.session_id << " (schema v" << r.schema_version << ")\n\n";
  out << std::fixed << std::setprecision(3);
  for (const auto& p : r.pairwise)
    out << "kappa(" << p.first << ", " << p.second << ") = " << p.kappa << "  over " << p.common_items
        << " items\n";
  out << "\nCode    (%)   n   [" << r.agreed_items << " agreed items, " << r.disagreements.size()
      << " disagreements]\n";
  out << std::setprecision(0);
  for (const auto& f : r.frequencies)
    out << std::left << std::setw(6) << f.code << std::right << std::setw(5) << f.percent << std::setw(4)
        << f.count << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------

json to_json(const CodingSession& s) {
  json codes = json::array();
  for (const auto& c : s.schema().codes) codes.push_back({{"name", c.name}, {"definition", c.definition}});
  json items = json::array();
  for (const auto& it : s.items())
    items.push_back({{"item_id", it.item_id},
                     {"text", it.text},
                     {"gold", it.gold},
                     {"predicted", it.predicted},
                     {"votes", it.votes}});
  json anns = json::array();
  for (const auto& [key, a] : s.annotations())
    anns.push_back({{"annotator", key.first},
                    {"item_id", key.second},
                    {"code", a.code},
                    {"timestamp", a.timestamp},
                    {"schema_version", a.schema_version}});
  json trail = json::array();
  for (const auto& t : s.trail())
    trail.push_back({{"annotator", t.annotator},
                     {"item_id", t.item_id},
                     {"code", t.code},
                     {"timestamp", t.timestamp},
                     {"schema_version", t.schema_version}});
  return {{"schema_version", kSessionSchemaVersion},
          {"session_id", s.id()},
          {"schema", {{"version", s.schema().version}, {"codes", codes}}},
          {"items", items},
          {"annotations", anns},
          {"trail", trail}};
}

CodingSession session_from_json(const json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kSessionSchemaVersion)
      throw VersionError("session schema version " + std::to_string(version) + " is not supported");
    CodingSchema schema;
    schema.version = j.at("schema").at("version").get<int>();
    for (const auto& c : j.at("schema").at("codes"))
      schema.codes.push_back({c.at("name").get<std::string>(), c.at("definition").get<std::string>()});
    std::vector<TriageItem> items;
    for (const auto& it : j.at("items"))
      items.push_back({it.at("item_id").get<std::string>(), it.at("text").get<std::string>(),
                       it.at("gold").get<Labels>(), it.at("predicted").get<Labels>(),
                       it.at("votes").get<Labels>()});
    CodingSession s(j.at("session_id").get<std::string>(), std::move(schema), std::move(items));
    for (const auto& a : j.at("annotations")) {
      CodingSession::Key key{a.at("annotator").get<std::string>(), a.at("item_id").get<std::string>()};
      if (!s.item_index(key.second)) throw ModelLoadError("annotation for unknown item '" + key.second + "'");
      s.annotations_[key] = {a.at("code").get<std::string>(), a.at("timestamp").get<std::string>(),
                             a.at("schema_version").get<int>()};
    }
    for (const auto& t : j.at("trail"))
      s.trail_.push_back({t.at("annotator").get<std::string>(), t.at("item_id").get<std::string>(),
                          t.at("code").get<std::string>(), t.at("timestamp").get<std::string>(),
                          t.at("schema_version").get<int>()});
    return s;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw ModelLoadError(std::string("malformed session document: ") + e.what());
  }
}

std::string serialize(const CodingSession& s) {
  return to_json(s).dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

void save_session(const CodingSession& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write session file " + path.string());
  out << serialize(s);
  if (!out) throw Error("write failed for " + path.string());
}

CodingSession load_session(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SessionNotFound("cannot open session file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelLoadError("cannot parse session file " + path.string() + ": " + e.what());
  }
  return session_from_json(j);
}

std::string agreed_items_csv(const CodingSession& s) {
  std::ostringstream out;
  out << "item_id,code\n";
  const auto names = s.annotators();
  if (names.size() < 2) return out.str();
  for (const auto& item : s.items()) {
    std::optional<std::string> code;
    bool agreed = true;
    for (const auto& n : names) {
      auto x = s.annotations().find({n, item.item_id});
      if (x == s.annotations().end() || (code && *code != x->second.code)) {
        agreed = false;
        break;
      }
      code = x->second.code;
    }
    if (agreed && code) out << item.item_id << ',' << *code << '\n';
  }
  return out.str();
}

}  // namespace biasvote::triage
