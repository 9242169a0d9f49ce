#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "biasvote/corpus.hpp"

namespace biasvote::triage {

struct Code {
  std::string name;
  std::string definition;
  bool operator==(const Code&) const = default;
};

/// Ordered misclassification codes. `version` increases on every edit.
struct CodingSchema {
  int version = 1;
  std::vector<Code> codes;

  /// GEND, CNTX, SLNG, ERROR, MSCL, OTHER.
  static CodingSchema default_schema();

  bool contains(const std::string& name) const;
  void validate() const;  // unique nonempty names
  bool operator==(const CodingSchema&) const = default;
};

/// A misclassified record. Labels are one entry for Task A, three (HS, TR, AG) for Task B.
struct TriageItem {
  std::string item_id;
  std::string text;
  std::vector<int> gold;
  std::vector<int> predicted;
  std::vector<int> votes;  // per-voter labels when available
  bool operator==(const TriageItem&) const = default;
};

using Labels = std::vector<int>;

/// Records where prediction != gold, in dataset order.
std::vector<TriageItem> extract_misclassified(std::span<const Labels> preds, std::span<const Labels> golds,
                                              const Dataset& d, std::span<const Labels> votes = {});
std::vector<TriageItem> extract_misclassified(std::span<const int> preds, std::span<const int> golds,
                                              const Dataset& d);
std::vector<TriageItem> extract_misclassified(std::span<const LabelTriple> preds,
                                              std::span<const LabelTriple> golds, const Dataset& d);

struct Annotation {
  std::string code;
  std::string timestamp;
  int schema_version = 1;
  bool operator==(const Annotation&) const = default;
};

struct TrailEntry {
  std::string annotator;
  std::string item_id;
  std::string code;
  std::string timestamp;
  int schema_version = 1;
  bool operator==(const TrailEntry&) const = default;
};

/// UTC ISO-8601 timestamp with second resolution.
std::string utc_now();

class CodingSession {
public:
  using Key = std::pair<std::string, std::string>;  // (annotator, item id)

  CodingSession(std::string id, CodingSchema schema, std::vector<TriageItem> items);

  const std::string& id() const noexcept { return id_; }
  const CodingSchema& schema() const noexcept { return schema_; }
  const std::vector<TriageItem>& items() const noexcept { return items_; }
  const std::map<Key, Annotation>& annotations() const noexcept { return annotations_; }
  const std::vector<TrailEntry>& trail() const noexcept { return trail_; }

  std::optional<std::size_t> item_index(const std::string& item_id) const;

  /// Latest code per (annotator, item) wins; every call is kept in the trail.
  /// Throws UnknownItem / UnknownCode / InvalidArgument (empty annotator).
  void record_annotation(const std::string& annotator, const std::string& item_id,
                         const std::string& code, std::string timestamp = utc_now());

  /// Distinct annotators, sorted.
  std::vector<std::string> annotators() const;
  std::size_t annotator_count(const std::string& item_id) const;
  /// "unannotated" or "annotated by N".
  std::string item_status(const std::string& item_id) const;
  std::size_t annotated_by(const std::string& annotator) const;
  /// Position of the first item this annotator has not coded, in session order.
  std::optional<std::size_t> next_index(const std::string& annotator) const;

  // Schema edits bump the schema version.
  void add_code(Code code);
  void set_definition(const std::string& name, std::string definition);
  /// Throws SchemaConflict while any current annotation uses the code.
  void remove_code(const std::string& name);

  bool operator==(const CodingSession&) const = default;

private:
  friend CodingSession session_from_json(const nlohmann::json& j);
  std::string id_;
  CodingSchema schema_;
  std::vector<TriageItem> items_;
  std::map<Key, Annotation> annotations_;
  std::vector<TrailEntry> trail_;
};

/// Statistically sized seeded sample (finite-population formula, p = 0.5) of
/// `items`, wrapped in a fresh session with the default schema. An empty
/// `session_id` is replaced by one derived from the seed and item ids.
CodingSession draw_sample(std::span<const TriageItem> items, double confidence_percent,
                          double margin_percent, std::uint64_t seed, std::string session_id = {});

struct PairKappa {
  std::string first, second;
  std::size_t common_items = 0;
  double kappa = 0.0;
};

struct CodeFrequency {
  std::string code;
  std::size_t count = 0;
  double percent = 0.0;
};

struct Disagreement {
  std::string item_id;
  std::map<std::string, std::string> codes;  // annotator -> code
};

struct SessionReport {
  std::string session_id;
  int schema_version = 1;
  std::vector<std::string> annotators;
  std::vector<PairKappa> pairwise;
  std::size_t agreed_items = 0;
  std::vector<CodeFrequency> frequencies;  // schema order, over agreed items
  std::vector<Disagreement> disagreements;
};

/// Pairwise kappa over commonly coded items; code frequencies over items every
/// annotator coded identically. Throws InsufficientOverlap unless two
/// annotators share at least one item.
SessionReport session_report(const CodingSession& s);

nlohmann::json to_json(const SessionReport& r);
std::string format_report(const SessionReport& r);

inline constexpr int kSessionSchemaVersion = 1;

nlohmann::json to_json(const CodingSession& s);
CodingSession session_from_json(const nlohmann::json& j);
std::string serialize(const CodingSession& s);
void save_session(const CodingSession& s, const std::filesystem::path& path);
CodingSession load_session(const std::filesystem::path& path);

/// `item_id,code` for items every annotator coded identically.
std::string agreed_items_csv(const CodingSession& s);

}  // namespace biasvote::triage
