#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "biasvote/corpus.hpp"

namespace biasvote::audit {

/// Train/dev/test splits audited as one corpus. Dev may be empty.
struct SplitSet {
  Dataset train;
  Dataset dev;
  Dataset test;

  std::array<const Dataset*, 3> splits() const { return {&train, &dev, &test}; }
  std::size_t total() const noexcept { return train.size() + dev.size() + test.size(); }
  bool operator==(const SplitSet&) const = default;
};

inline constexpr std::array<const char*, 3> kSplitNames{"train", "dev", "test"};

/// Throws InvalidArgument if any id occurs twice across the union.
void check_unique_ids(const SplitSet& s);

struct SplitRate {
  std::string split;
  std::size_t count = 0;      // labeled records containing the token
  std::size_t positives = 0;  // ... of which HS=1
  std::optional<double> rate; // absent when count == 0
};

struct TokenRow {
  std::string token;
  std::vector<SplitRate> splits;
  double disparity_points = 0.0;  // (max - min) rate x 100 over splits with count > 0
};

struct TokenRateTable {
  std::vector<TokenRow> rows;
};

/// HS-positive rate of records containing each watchlist token, per split.
/// Matching is whole-token on preprocessed text; unlabeled records are skipped.
TokenRateTable token_rate_table(const SplitSet& s, std::span<const std::string> watchlist);

/// One token per line. Blank lines and lines starting with "# " are skipped.
std::vector<std::string> load_watchlist(const std::filesystem::path& path);

nlohmann::json to_json(const TokenRateTable& t);
/// `token,split,count,rate` with an empty rate cell when absent.
std::string to_csv(const TokenRateTable& t);

struct AdjustOptions {
  bool stratify = false;  // keep HS proportions per split (off: plain shuffle)
};

/// Merge, shuffle with Rng(seed), and cut back into splits of the original sizes.
SplitSet adjust_splits(const SplitSet& s, std::uint64_t seed, const AdjustOptions& options = {});

/// k adjusted variants using seeds seed, seed+1, ..., seed+k-1.
std::vector<SplitSet> adjust_variants(const SplitSet& s, std::uint64_t seed, std::size_t k,
                                      const AdjustOptions& options = {});

}  // namespace biasvote::audit
