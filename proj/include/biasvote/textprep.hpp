#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biasvote::textprep {

/// Lowercase tokens: words, `#hashtag`, `:emoji_alias:` and the `@user` placeholder.
using TokenSequence = std::vector<std::string>;

/// Emoji code-point sequence -> `:alias:` lookup, matched greedily (longest first).
/// U+FE0F variation selectors are ignored on both sides.
class EmojiTable {
public:
  /// The table compiled in from data/emoji_aliases.tsv.
  static std::shared_ptr<const EmojiTable> bundled();

  /// Two-column TSV `codepoint-sequence<TAB>alias`, code points as space-separated
  /// hex. Lines starting with `#` are comments; the first such comment is kept as
  /// the table's version string.
  static EmojiTable parse(std::string_view tsv);
  static EmojiTable from_file(const std::filesystem::path& path);

  const std::string& version() const noexcept { return version_; }
  std::size_t size() const noexcept { return entries_; }

  struct Match {
    std::size_t length;  // code points consumed, including skipped U+FE0F
    const std::string* alias;
  };
  std::optional<Match> match(const std::u32string& text, std::size_t pos) const;

private:
  struct Node {
    std::map<char32_t, std::uint32_t> next;
    int alias = -1;
  };
  std::vector<Node> nodes_{Node{}};
  std::vector<std::string> aliases_;
  std::string version_;
  std::size_t entries_ = 0;
};

/// Unicode NFC normalization of UTF-8 text. Ill-formed input is repaired with U+FFFD.
std::string nfc(std::string_view utf8);

/// Tweet normalizer. Rules, in order: NFC; emoji -> `:alias:`; remaining
/// non-ASCII dropped (Unicode spaces and punctuation act as separators);
/// lowercase; URLs removed; `@mention` -> `@user`; punctuation stripped
/// except leading `#`/`@` and `:alias:` tokens.
class Preprocessor {
public:
  Preprocessor();  // bundled emoji table
  explicit Preprocessor(std::shared_ptr<const EmojiTable> table);

  TokenSequence operator()(std::string_view text) const;
  const EmojiTable& emoji_table() const noexcept { return *table_; }

private:
  std::shared_ptr<const EmojiTable> table_;
};

/// Preprocess with the bundled emoji table.
TokenSequence preprocess(std::string_view text);

/// Space-joined tokens; preprocess(join(preprocess(t))) == preprocess(t).
std::string join(const TokenSequence& tokens);

struct FeaturizerConfig {
  std::vector<int> ngram_orders{1, 2};
  std::uint32_t dimension = 1u << 18;

  void validate() const;  // throws InvalidArgument
  bool operator==(const FeaturizerConfig&) const = default;
};

/// Sparse vector with strictly increasing indices and nonzero values.
struct FeatureVector {
  std::uint32_t dimension = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  double norm() const;
  bool empty() const noexcept { return indices.empty(); }
  bool operator==(const FeatureVector&) const = default;
};

/// Signed-hash bag of n-grams, L2-normalized.
FeatureVector featurize(const TokenSequence& tokens, const FeaturizerConfig& config = {});

/// 64-bit FNV-1a followed by a SplitMix64 finalizer; stable across platforms.
std::uint64_t stable_hash(std::string_view bytes);

}  // namespace biasvote::textprep
