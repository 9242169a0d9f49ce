#include "biasvote/textprep.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "biasvote/error.hpp"

namespace biasvote::textprep {

namespace detail {
extern const std::string_view kBundledEmojiTable;
}

namespace {

constexpr char32_t kVariationSelector16 = 0xFE0F;

std::string sanitize_alias(std::string_view raw) {
  std::string body;
  for (char c : raw) {
    auto u = static_cast<unsigned char>(c);
    if (c == ':') continue;
    if (std::isalnum(u) || c == '_')
      body.push_back(static_cast<char>(std::tolower(u)));
    else if (!body.empty() && body.back() != '_')
      body.push_back('_');
  }
  while (!body.empty() && body.back() == '_') body.pop_back();
  if (body.empty()) return {};
  return ":" + body + ":";
}

}  // namespace

// ---------------------------------------------------------------------------
// EmojiTable

EmojiTable EmojiTable::parse(std::string_view tsv) {
  EmojiTable t;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos < tsv.size()) {
    auto nl = tsv.find('\n', pos);
    if (nl == std::string_view::npos) nl = tsv.size();
    std::string_view line = tsv.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (t.version_.empty()) {
        auto v = line.substr(1);
        while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
        t.version_ = std::string(v);
      }
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw FormatError("emoji table line " + std::to_string(lineno) + ": missing TAB");
    std::string alias = sanitize_alias(line.substr(tab + 1));
    if (alias.empty())
      throw FormatError("emoji table line " + std::to_string(lineno) + ": empty alias");

    std::istringstream cps{std::string(line.substr(0, tab))};
    std::string hex;
    std::uint32_t node = 0;
    bool any = false;
    while (cps >> hex) {
      char32_t cp = 0;
      try {
        cp = static_cast<char32_t>(std::stoul(hex, nullptr, 16));
      } catch (const std::exception&) {
        throw FormatError("emoji table line " + std::to_string(lineno) + ": bad code point '" +
                          hex + "'");
      }
      if (cp == kVariationSelector16) continue;
      any = true;
      auto it = t.nodes_[node].next.find(cp);
      if (it == t.nodes_[node].next.end()) {
        auto fresh = static_cast<std::uint32_t>(t.nodes_.size());
        t.nodes_[node].next.emplace(cp, fresh);
        t.nodes_.emplace_back();
        node = fresh;
      } else {
        node = it->second;
      }
    }
    if (!any) throw FormatError("emoji table line " + std::to_string(lineno) + ": no code points");
    if (t.nodes_[node].alias < 0) {
      t.nodes_[node].alias = static_cast<int>(t.aliases_.size());
      t.aliases_.push_back(std::move(alias));
      ++t.entries_;
    }
  }
  return t;
}

EmojiTable EmojiTable::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open emoji table " + path.string());
  std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse(data);
}

std::shared_ptr<const EmojiTable> EmojiTable::bundled() {
  static const auto table = std::make_shared<const EmojiTable>(parse(detail::kBundledEmojiTable));
  return table;
}

std::optional<EmojiTable::Match> EmojiTable::match(const std::u32string& text,
                                                   std::size_t pos) const {
  std::uint32_t node = 0;
  std::optional<Match> best;
  std::size_t i = pos;
  while (i < text.size()) {
    char32_t cp = text[i];
    if (cp == kVariationSelector16 && i > pos) {
      ++i;
      if (best && nodes_[node].alias >= 0) best->length = i - pos;
      continue;
    }
    auto it = nodes_[node].next.find(cp);
    if (it == nodes_[node].next.end()) break;
    node = it->second;
    ++i;
    if (nodes_[node].alias >= 0) best = Match{i - pos, &aliases_[nodes_[node].alias]};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Normalization

std::string nfc(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  auto src = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  icu::UnicodeString dst;
  norm->normalize(src, dst, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  std::string out;
  dst.toUTF8String(out);
  return out;
}

namespace {

std::u32string to_code_points(std::string_view utf8) {
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  std::u32string out;
  out.reserve(static_cast<std::size_t>(u.length()));
  for (int32_t i = 0; i < u.length(); i = u.moveIndex32(i, 1)) out.push_back(static_cast<char32_t>(u.char32At(i)));
  return out;
}

bool is_word(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Emoji become space-delimited aliases; other non-ASCII disappears.
std::string to_ascii_lower(const std::u32string& cps, const EmojiTable& table) {
  std::string out;
  out.reserve(cps.size());
  std::size_t i = 0;
  while (i < cps.size()) {
    char32_t cp = cps[i];
    if (cp >= 0x80 || cp == '#' || (cp >= '0' && cp <= '9') || cp == '*') {
      if (auto m = table.match(cps, i)) {
        out.push_back(' ');
        out += *m->alias;
        out.push_back(' ');
        i += m->length;
        continue;
      }
    }
    if (cp < 0x80) {
      char c = static_cast<char>(cp);
      out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    } else if (u_isUWhiteSpace(static_cast<UChar32>(cp)) || u_ispunct(static_cast<UChar32>(cp))) {
      out.push_back(' ');
    }
    ++i;
  }
  return out;
}

bool looks_like_short_url(std::string_view chunk) {
  // host.tld/path without a scheme, e.g. t.co/AbC or bit.ly/x
  auto slash = chunk.find('/');
  if (slash == std::string_view::npos || slash == 0) return false;
  auto host = chunk.substr(0, slash);
  auto dot = host.rfind('.');
  if (dot == std::string_view::npos || dot == 0 || host.size() - dot - 1 < 2) return false;
  return std::all_of(host.begin(), host.end(),
                     [](char c) { return is_word(c) || c == '.' || c == '-'; }) &&
         std::all_of(host.begin() + static_cast<std::ptrdiff_t>(dot) + 1, host.end(),
                     [](char c) { return c >= 'a' && c <= 'z'; });
}

std::string_view strip_urls(std::string_view chunk) {
  std::size_t cut = chunk.size();
  for (std::string_view marker : {"http://", "https://", "www."}) {
    auto p = chunk.find(marker);
    if (p != std::string_view::npos) cut = std::min(cut, p);
  }
  chunk = chunk.substr(0, cut);
  // leading punctuation such as "(" may wrap a scheme-less link
  std::size_t lead = 0;
  while (lead < chunk.size() && !is_word(chunk[lead])) ++lead;
  if (looks_like_short_url(chunk.substr(lead))) return chunk.substr(0, lead);
  return chunk;
}

void tokenize_chunk(std::string_view s, TokenSequence& out) {
  std::size_t i = 0;
  auto word_end = [&](std::size_t from) {
    while (from < s.size() && is_word(s[from])) ++from;
    return from;
  };
  while (i < s.size()) {
    char c = s[i];
    bool boundary = i == 0 || !is_word(s[i - 1]);
    if (is_word(c)) {
      auto e = word_end(i);
      out.emplace_back(s.substr(i, e - i));
      i = e;
    } else if ((c == '#' || c == '@') && boundary && i + 1 < s.size() && is_word(s[i + 1])) {
      auto e = word_end(i + 1);
      if (c == '#')
        out.emplace_back(s.substr(i, e - i));
      else
        out.emplace_back("@user");
      i = e;
    } else if (c == ':' && boundary && i + 1 < s.size() && is_word(s[i + 1])) {
      auto e = word_end(i + 1);
      if (e < s.size() && s[e] == ':' && (e + 1 == s.size() || !is_word(s[e + 1]))) {
        out.emplace_back(s.substr(i, e + 1 - i));
        i = e + 1;
      } else {
        ++i;
      }
    } else {
      ++i;
    }
  }
}

}  // namespace

Preprocessor::Preprocessor() : table_(EmojiTable::bundled()) {}

Preprocessor::Preprocessor(std::shared_ptr<const EmojiTable> table) : table_(std::move(table)) {
  if (!table_) throw InvalidArgument("Preprocessor: null emoji table");
}

TokenSequence Preprocessor::operator()(std::string_view text) const {
  TokenSequence tokens;
  if (text.empty()) return tokens;
  const std::string ascii = to_ascii_lower(to_code_points(nfc(text)), *table_);
  std::size_t i = 0;
  while (i < ascii.size()) {
    while (i < ascii.size() && is_space(ascii[i])) ++i;
    std::size_t start = i;
    while (i < ascii.size() && !is_space(ascii[i])) ++i;
    if (i > start) tokenize_chunk(strip_urls(std::string_view(ascii).substr(start, i - start)), tokens);
  }
  return tokens;
}

TokenSequence preprocess(std::string_view text) {
  static const Preprocessor pre;
  return pre(text);
}

std::string join(const TokenSequence& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature hashing

void FeaturizerConfig::validate() const {
  if (dimension == 0 || (dimension & (dimension - 1)) != 0)
    throw InvalidArgument("feature dimension must be a power of two, got " + std::to_string(dimension));
  if (ngram_orders.empty()) throw InvalidArgument("at least one n-gram order is required");
  for (int n : ngram_orders)
    if (n < 1) throw InvalidArgument("n-gram orders must be positive");
}

double FeatureVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

std::uint64_t stable_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h += 0x9E3779B97F4A7C15ULL;
  h = (h ^ (h >> 30)) * 0xBF58476D1CE4E5B9ULL;
  h = (h ^ (h >> 27)) * 0x94D049BB133111EBULL;
  return h ^ (h >> 31);
}

FeatureVector featurize(const TokenSequence& tokens, const FeaturizerConfig& config) {
  config.validate();
  std::map<std::uint32_t, double> acc;
  const std::uint32_t mask = config.dimension - 1;
  std::string key;
  for (int order : config.ngram_orders) {
    const auto n = static_cast<std::size_t>(order);
    if (tokens.size() < n) continue;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      key = std::to_string(order);
      for (std::size_t k = 0; k < n; ++k) {
        key.push_back('\x1f');
        key += tokens[i + k];
      }
      const std::uint64_t h = stable_hash(key);
      const auto index = static_cast<std::uint32_t>(h) & mask;
      acc[index] += (h >> 63) ? -1.0 : 1.0;
    }
  }
  FeatureVector fv;
  fv.dimension = config.dimension;
  double sq = 0.0;
  for (const auto& [idx, v] : acc) sq += v * v;
  if (sq == 0.0) return fv;
  const double inv = 1.0 / std::sqrt(sq);
  for (const auto& [idx, v] : acc) {
    if (v == 0.0) continue;
    fv.indices.push_back(idx);
    fv.values.push_back(v * inv);
  }
  return fv;
}

}  // namespace biasvote::textprep
