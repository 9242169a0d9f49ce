#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biasvote {

/// (HS, TR, AG) gold or predicted labels. Only five of the eight tuples are
/// meaningful: HS=0 forces TR=0 and AG=0.
struct LabelTriple {
  int hs = 0;
  int tr = 0;
  int ag = 0;

  bool valid() const noexcept;
  auto operator<=>(const LabelTriple&) const = default;
};

std::string to_string(const LabelTriple& t);

/// Gold labels as they appear in a file. External corpora only carry HS.
struct GoldLabels {
  int hs = 0;
  std::optional<int> tr;
  std::optional<int> ag;

  /// The full triple when TR and AG are both present.
  std::optional<LabelTriple> triple() const;
  bool operator==(const GoldLabels&) const = default;
};

struct Record {
  std::string id;
  std::string text;  // raw UTF-8, never rewritten by the loader
  std::optional<GoldLabels> gold;

  bool operator==(const Record&) const = default;
};

struct Dataset {
  std::string name;
  std::vector<Record> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
  bool operator==(const Dataset&) const = default;
};

/// Maps a record to a binary training/evaluation label.
using LabelFn = std::function<int(const Record&)>;

/// Gold HS label; throws InvalidArgument for unlabeled records.
int hs_label(const Record& r);

/// Gold triple; throws InvalidArgument when TR/AG are missing.
LabelTriple gold_triple(const Record& r);

enum class DatasetFormat { HatEvalTsv, Olid, DavidsonCsv };

DatasetFormat parse_format(std::string_view name);
std::string_view format_name(DatasetFormat f);

/// Source label -> binary label table for external corpora.
class LabelMap {
public:
  LabelMap() = default;
  explicit LabelMap(std::map<std::string, int> entries);

  /// Parses "OFF=1,NOT=0".
  static LabelMap parse(std::string_view spec);
  static LabelMap olid_default();      // OFF->1, NOT->0
  static LabelMap davidson_default();  // hate(0)->1, offensive(1)->1, neither(2)->0

  std::optional<int> lookup(const std::string& source) const;
  const std::map<std::string, int>& entries() const noexcept { return entries_; }
  std::string to_string() const;
  bool operator==(const LabelMap&) const = default;

private:
  std::map<std::string, int> entries_;
};

struct RowIssue {
  std::size_t line = 0;  // 1-based physical line of the row's start
  std::string message;
};

struct LoadResult {
  Dataset dataset;
  std::vector<RowIssue> issues;  // malformed rows that were skipped
};

struct LoadOptions {
  std::optional<LabelMap> label_map;
  /// Loading aborts when more than this fraction of rows is malformed.
  double max_malformed_fraction = 0.01;
};

LoadResult load_dataset(const std::filesystem::path& path, DatasetFormat format,
                        const LoadOptions& options = {});
LoadResult read_dataset(std::istream& in, DatasetFormat format, std::string name,
                        const LoadOptions& options = {});

/// Canonical HatEval TSV: `id<TAB>text<TAB>HS<TAB>TR<TAB>AG`, empty cells for
/// absent labels. Tabs and line breaks inside text are written as spaces.
void write_hateval_tsv(const Dataset& d, std::ostream& out);
void save_hateval_tsv(const Dataset& d, const std::filesystem::path& path);

/// Uniform sample without replacement; records keep their original order.
Dataset sample_dataset(const Dataset& d, std::size_t n, std::uint64_t seed);

struct ValidationFinding {
  enum class Kind { EmptyId, DuplicateId, EmptyText, InvalidTuple };
  Kind kind;
  std::size_t index = 0;  // position in the dataset
  std::string id;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationFinding> findings;
  bool clean() const noexcept { return findings.empty(); }
  std::size_t count(ValidationFinding::Kind k) const;
};

ValidationReport validate_dataset(const Dataset& d);

}  // namespace biasvote
