#include "biasvote/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "biasvote/error.hpp"
#include "biasvote/rng.hpp"

namespace biasvote {

bool LabelTriple::valid() const noexcept {
  auto binary = [](int v) { return v == 0 || v == 1; };
  if (!binary(hs) || !binary(tr) || !binary(ag)) return false;
  return hs == 1 || (tr == 0 && ag == 0);
}

std::string to_string(const LabelTriple& t) {
  return "(HS=" + std::to_string(t.hs) + ",TR=" + std::to_string(t.tr) +
         ",AG=" + std::to_string(t.ag) + ")";
}

std::optional<LabelTriple> GoldLabels::triple() const {
  if (!tr || !ag) return std::nullopt;
  return LabelTriple{hs, *tr, *ag};
}

int hs_label(const Record& r) {
  if (!r.gold) throw InvalidArgument("record '" + r.id + "' has no gold label");
  return r.gold->hs;
}

LabelTriple gold_triple(const Record& r) {
  if (!r.gold) throw InvalidArgument("record '" + r.id + "' has no gold label");
  auto t = r.gold->triple();
  if (!t) throw InvalidArgument("record '" + r.id + "' has no TR/AG labels");
  return *t;
}

DatasetFormat parse_format(std::string_view name) {
  if (name == "hateval-tsv" || name == "hateval") return DatasetFormat::HatEvalTsv;
  if (name == "olid") return DatasetFormat::Olid;
  if (name == "davidson-csv" || name == "davidson") return DatasetFormat::DavidsonCsv;
  throw InvalidArgument("unknown dataset format '" + std::string(name) + "'");
}

std::string_view format_name(DatasetFormat f) {
  switch (f) {
    case DatasetFormat::HatEvalTsv: return "hateval-tsv";
    case DatasetFormat::Olid: return "olid";
    case DatasetFormat::DavidsonCsv: return "davidson-csv";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// LabelMap

LabelMap::LabelMap(std::map<std::string, int> entries) : entries_(std::move(entries)) {
  for (const auto& [k, v] : entries_) {
    if (v != 0 && v != 1)
      throw MapError("label map value for '" + k + "' must be 0 or 1, got " + std::to_string(v));
  }
}

LabelMap LabelMap::parse(std::string_view spec) {
  std::map<std::string, int> entries;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    auto comma = spec.find(',', pos);
    if (comma == std::string_view::npos) comma = spec.size();
    auto item = spec.substr(pos, comma - pos);
    pos = comma + 1;
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw MapError("malformed label map entry '" + std::string(item) + "' (want SRC=0|1)");
    auto value = item.substr(eq + 1);
    if (value != "0" && value != "1")
      throw MapError("label map value must be 0 or 1 in '" + std::string(item) + "'");
    entries[std::string(item.substr(0, eq))] = value == "1" ? 1 : 0;
  }
  if (entries.empty()) throw MapError("empty label map");
  return LabelMap(std::move(entries));
}

LabelMap LabelMap::olid_default() { return LabelMap({{"OFF", 1}, {"NOT", 0}}); }

LabelMap LabelMap::davidson_default() { return LabelMap({{"0", 1}, {"1", 1}, {"2", 0}}); }

std::optional<int> LabelMap::lookup(const std::string& source) const {
  auto it = entries_.find(source);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string LabelMap::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    if (!out.empty()) out += ',';
    out += k + "=" + std::to_string(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

struct Row {
  std::size_t line;
  std::vector<std::string> fields;
};

void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

void strip_bom(std::string& s) {
  if (s.rfind("\xEF\xBB\xBF", 0) == 0) s.erase(0, 3);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::vector<Row> read_tsv_rows(std::istream& in) {
  std::vector<Row> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (lineno == 1) strip_bom(line);
    if (line.empty() && lineno > 1) continue;
    rows.push_back({lineno, split_tabs(line)});
  }
  return rows;
}

// RFC 4180 reader: quoted fields may contain commas, doubled quotes and line breaks.
std::vector<Row> read_csv_rows(std::istream& in) {
  std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  strip_bom(data);
  std::vector<Row> rows;
  std::size_t line = 1;
  std::size_t i = 0;
  while (i < data.size()) {
    Row row{line, {}};
    std::string field;
    bool in_quotes = false;
    bool row_done = false;
    while (i < data.size() && !row_done) {
      char c = data[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < data.size() && data[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            in_quotes = false;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
        }
        ++i;
        continue;
      }
      switch (c) {
        case '"': in_quotes = true; break;
        case ',':
          row.fields.push_back(std::move(field));
          field.clear();
          break;
        case '\r': break;
        case '\n':
          ++line;
          row_done = true;
          break;
        default: field.push_back(c);
      }
      ++i;
    }
    row.fields.push_back(std::move(field));
    bool blank = row.fields.size() == 1 && row.fields[0].empty();
    if (!blank) rows.push_back(std::move(row));
  }
  return rows;
}

std::optional<std::size_t> column_index(const std::vector<std::string>& header,
                                        std::string_view name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

class Builder {
public:
  explicit Builder(std::string name) { dataset_.name = std::move(name); }

  void issue(std::size_t line, std::string message) {
    issues_.push_back({line, "line " + std::to_string(line) + ": " + std::move(message)});
  }

  void add(std::size_t line, Record r) {
    if (r.id.empty()) return issue(line, "empty id");
    if (r.text.empty()) return issue(line, "empty text for id '" + r.id + "'");
    if (!seen_.insert(r.id).second) return issue(line, "duplicate id '" + r.id + "'");
    dataset_.records.push_back(std::move(r));
  }

  LoadResult finish(std::size_t rows, double max_fraction) {
    if (!issues_.empty() &&
        static_cast<double>(issues_.size()) > max_fraction * static_cast<double>(rows)) {
      std::string msg = std::to_string(issues_.size()) + " of " + std::to_string(rows) +
                        " rows malformed in '" + dataset_.name + "'";
      for (std::size_t i = 0; i < issues_.size() && i < 5; ++i) msg += "; " + issues_[i].message;
      throw ParseError(msg, issues_.front().line);
    }
    return {std::move(dataset_), std::move(issues_)};
  }

private:
  Dataset dataset_;
  std::vector<RowIssue> issues_;
  std::unordered_set<std::string> seen_;
};

// Empty cell -> absent; "0"/"1" -> value; anything else -> error text.
std::optional<int> parse_binary(const std::string& cell, const char* column, std::string& error) {
  if (cell.empty()) return std::nullopt;
  if (cell == "0") return 0;
  if (cell == "1") return 1;
  error = std::string(column) + " value '" + cell + "' not in {0,1}";
  return std::nullopt;
}

constexpr std::string_view kHatEvalHeader = "id\ttext\tHS\tTR\tAG";

LoadResult read_hateval(std::istream& in, std::string name, const LoadOptions& opt) {
  auto rows = read_tsv_rows(in);
  if (rows.empty()) throw FormatError("'" + name + "': missing HatEval header");
  std::string header;
  for (std::size_t i = 0; i < rows[0].fields.size(); ++i)
    header += (i ? "\t" : "") + rows[0].fields[i];
  if (header != kHatEvalHeader)
    throw FormatError("'" + name + "': expected header 'id<TAB>text<TAB>HS<TAB>TR<TAB>AG', got '" +
                      header + "'");

  Builder b(std::move(name));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != 5) {
      b.issue(row.line, "expected 5 columns, got " + std::to_string(row.fields.size()));
      continue;
    }
    std::string err;
    auto hs = parse_binary(row.fields[2], "HS", err);
    auto tr = parse_binary(row.fields[3], "TR", err);
    auto ag = parse_binary(row.fields[4], "AG", err);
    if (!err.empty()) {
      b.issue(row.line, err);
      continue;
    }
    Record rec{row.fields[0], row.fields[1], std::nullopt};
    if (hs) {
      rec.gold = GoldLabels{*hs, tr, ag};
    } else if (tr || ag) {
      b.issue(row.line, "TR/AG present without HS");
      continue;
    }
    b.add(row.line, std::move(rec));
  }
  return b.finish(rows.size() - 1, opt.max_malformed_fraction);
}

const LabelMap& require_map(const LoadOptions& opt, DatasetFormat f) {
  if (!opt.label_map)
    throw MapError("format '" + std::string(format_name(f)) + "' requires a label map");
  return *opt.label_map;
}

std::optional<GoldLabels> map_label(const LabelMap& map, const std::string& source,
                                    std::size_t line) {
  if (source.empty()) return std::nullopt;
  auto v = map.lookup(source);
  if (!v)
    throw MapError("line " + std::to_string(line) + ": unmapped source label '" + source + "'");
  return GoldLabels{*v, std::nullopt, std::nullopt};
}

LoadResult read_olid(std::istream& in, std::string name, const LoadOptions& opt) {
  const auto& map = require_map(opt, DatasetFormat::Olid);
  auto rows = read_tsv_rows(in);
  if (rows.empty()) throw FormatError("'" + name + "': missing OLID header");
  const auto& header = rows[0].fields;
  auto id_col = column_index(header, "id");
  auto text_col = column_index(header, "tweet");
  auto label_col = column_index(header, "subtask_a");
  if (!id_col || !text_col)
    throw FormatError("'" + name + "': OLID header must contain 'id' and 'tweet'");

  Builder b(std::move(name));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != header.size()) {
      b.issue(row.line, "expected " + std::to_string(header.size()) + " columns, got " +
                            std::to_string(row.fields.size()));
      continue;
    }
    Record rec{row.fields[*id_col], row.fields[*text_col], std::nullopt};
    if (label_col) rec.gold = map_label(map, row.fields[*label_col], row.line);
    b.add(row.line, std::move(rec));
  }
  return b.finish(rows.size() - 1, opt.max_malformed_fraction);
}

LoadResult read_davidson(std::istream& in, std::string name, const LoadOptions& opt) {
  const auto& map = require_map(opt, DatasetFormat::DavidsonCsv);
  auto rows = read_csv_rows(in);
  if (rows.empty()) throw FormatError("'" + name + "': missing Davidson CSV header");
  const auto& header = rows[0].fields;
  auto class_col = column_index(header, "class");
  auto text_col = column_index(header, "tweet");
  if (!class_col || !text_col)
    throw FormatError("'" + name + "': Davidson header must contain 'class' and 'tweet'");
  // The published file's id column is the unnamed leading index.
  std::optional<std::size_t> id_col = column_index(header, "id");
  if (!id_col && !header.empty() && header[0].empty()) id_col = 0;

  Builder b(std::move(name));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != header.size()) {
      b.issue(row.line, "expected " + std::to_string(header.size()) + " columns, got " +
                            std::to_string(row.fields.size()));
      continue;
    }
    std::string id = id_col ? row.fields[*id_col] : std::to_string(r);
    Record rec{std::move(id), row.fields[*text_col], std::nullopt};
    rec.gold = map_label(map, row.fields[*class_col], row.line);
    b.add(row.line, std::move(rec));
  }
  return b.finish(rows.size() - 1, opt.max_malformed_fraction);
}

}  // namespace

LoadResult read_dataset(std::istream& in, DatasetFormat format, std::string name,
                        const LoadOptions& options) {
  switch (format) {
    case DatasetFormat::HatEvalTsv: return read_hateval(in, std::move(name), options);
    case DatasetFormat::Olid: return read_olid(in, std::move(name), options);
    case DatasetFormat::DavidsonCsv: return read_davidson(in, std::move(name), options);
  }
  throw InvalidArgument("unknown format");
}

LoadResult load_dataset(const std::filesystem::path& path, DatasetFormat format,
                        const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset file " + path.string());
  return read_dataset(in, format, path.stem().string(), options);
}

// ---------------------------------------------------------------------------
// Writing

namespace {

std::string flatten(const std::string& text) {
  std::string out = text;
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; },
                  ' ');
  return out;
}

std::string cell(const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); }

}  // namespace

void write_hateval_tsv(const Dataset& d, std::ostream& out) {
  out << kHatEvalHeader << '\n';
  for (const auto& r : d.records) {
    out << flatten(r.id) << '\t' << flatten(r.text) << '\t';
    if (r.gold)
      out << r.gold->hs << '\t' << cell(r.gold->tr) << '\t' << cell(r.gold->ag);
    else
      out << "\t\t";
    out << '\n';
  }
}

void save_hateval_tsv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  write_hateval_tsv(d, out);
  if (!out) throw Error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------

Dataset sample_dataset(const Dataset& d, std::size_t n, std::uint64_t seed) {
  if (n >= d.size()) return d;
  Rng rng(seed);
  Dataset out{d.name, {}};
  out.records.reserve(n);
  for (auto i : rng.sample_indices(d.size(), n)) out.records.push_back(d.records[i]);
  return out;
}

std::size_t ValidationReport::count(ValidationFinding::Kind k) const {
  return static_cast<std::size_t>(
      std::count_if(findings.begin(), findings.end(), [k](const auto& f) { return f.kind == k; }));
}

ValidationReport validate_dataset(const Dataset& d) {
  using Kind = ValidationFinding::Kind;
  ValidationReport report;
  std::unordered_map<std::string, std::size_t> first_seen;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    if (r.id.empty()) report.findings.push_back({Kind::EmptyId, i, r.id, "empty id"});
    auto [it, inserted] = first_seen.emplace(r.id, i);
    if (!inserted && !r.id.empty())
      report.findings.push_back({Kind::DuplicateId, i, r.id,
                                 "id '" + r.id + "' already used at index " +
                                     std::to_string(it->second)});
    if (r.text.empty()) report.findings.push_back({Kind::EmptyText, i, r.id, "empty text"});
    if (r.gold) {
      LabelTriple t{r.gold->hs, r.gold->tr.value_or(0), r.gold->ag.value_or(0)};
      if (!t.valid())
        report.findings.push_back({Kind::InvalidTuple, i, r.id, "invalid label tuple " + to_string(t)});
    }
  }
  return report;
}

}  // namespace biasvote
