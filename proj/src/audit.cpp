#include "biasvote/audit.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

#include "biasvote/error.hpp"
#include "biasvote/rng.hpp"
#include "biasvote/textprep.hpp"

namespace biasvote::audit {

using nlohmann::json;

void check_unique_ids(const SplitSet& s) {
  std::unordered_set<std::string> seen;
  for (std::size_t k = 0; k < 3; ++k)
    for (const auto& r : s.splits()[k]->records)
      if (!seen.insert(r.id).second)
        throw InvalidArgument("id '" + r.id + "' occurs more than once across splits (in " +
                              kSplitNames[k] + ")");
}

namespace {

std::string normalize_watch_token(const std::string& raw) {
  auto toks = textprep::preprocess(raw);
  if (toks.size() == 1) return toks.front();
  std::string lower = raw;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower;
}

}  // namespace

TokenRateTable token_rate_table(const SplitSet& s, std::span<const std::string> watchlist) {
  std::vector<std::string> tokens;
  for (const auto& w : watchlist) {
    if (w.empty()) throw InvalidArgument("watchlist tokens must be nonempty");
    tokens.push_back(normalize_watch_token(w));
  }

  TokenRateTable table;
  table.rows.resize(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) table.rows[t].token = tokens[t];

  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<SplitRate> rates(tokens.size());
    for (const auto& r : s.splits()[k]->records) {
      if (!r.gold) continue;
      const auto toks = textprep::preprocess(r.text);
      const std::unordered_set<std::string> present(toks.begin(), toks.end());
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (!present.count(tokens[t])) continue;
        ++rates[t].count;
        if (r.gold->hs == 1) ++rates[t].positives;
      }
    }
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      rates[t].split = kSplitNames[k];
      if (rates[t].count > 0)
        rates[t].rate = static_cast<double>(rates[t].positives) / static_cast<double>(rates[t].count);
      table.rows[t].splits.push_back(rates[t]);
    }
  }

  for (auto& row : table.rows) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& sr : row.splits) {
      if (!sr.rate) continue;
      lo = std::min(lo, *sr.rate);
      hi = std::max(hi, *sr.rate);
    }
    row.disparity_points = hi >= lo ? (hi - lo) * 100.0 : 0.0;
  }
  return table;
}

std::vector<std::string> load_watchlist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open watchlist " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    line = line.substr(b, line.find_last_not_of(" \t") - b + 1);
    // "# " starts a comment; "#tag" is a hashtag
    if (line == "#" || line.rfind("# ", 0) == 0) continue;
    out.push_back(line);
  }
  return out;
}

json to_json(const TokenRateTable& t) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json splits = json::array();
    for (const auto& s : row.splits) {
      json e = {{"split", s.split}, {"count", s.count}, {"positives", s.positives}};
      e["rate"] = s.rate ? json(*s.rate) : json(nullptr);
      splits.push_back(std::move(e));
    }
    rows.push_back({{"token", row.token}, {"splits", splits}, {"disparity_points", row.disparity_points}});
  }
  return {{"tokens", rows}};
}

std::string to_csv(const TokenRateTable& t) {
  std::ostringstream out;
  out << "token,split,count,rate\n";
  out << std::setprecision(6);
  for (const auto& row : t.rows)
    for (const auto& s : row.splits) {
      out << row.token << ',' << s.split << ',' << s.count << ',';
      if (s.rate) out << *s.rate;
      out << '\n';
    }
  return out.str();
}

// ---------------------------------------------------------------------------

namespace {

// Greatest-deficit apportionment: position i goes to the split furthest
// behind its quota, which hits every target size exactly.
std::vector<std::size_t> apportion(std::size_t total, const std::array<std::size_t, 3>& sizes) {
  std::vector<std::size_t> out(total);
  std::array<std::size_t, 3> given{};
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t best = 3;
    double best_deficit = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < 3; ++k) {
      if (given[k] >= sizes[k]) continue;
      const double deficit = static_cast<double>(sizes[k]) * static_cast<double>(i + 1) /
                                 static_cast<double>(total) -
                             static_cast<double>(given[k]);
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = k;
      }
    }
    out[i] = best;
    ++given[best];
  }
  return out;
}

}  // namespace

SplitSet adjust_splits(const SplitSet& s, std::uint64_t seed, const AdjustOptions& options) {
  check_unique_ids(s);
  if (s.total() == 0) throw InvalidArgument("adjust_splits: all splits are empty");
  const std::array<std::size_t, 3> sizes{s.train.size(), s.dev.size(), s.test.size()};

  std::vector<const Record*> pool;
  pool.reserve(s.total());
  for (const auto* d : s.splits())
    for (const auto& r : d->records) pool.push_back(&r);

  Rng rng(seed);
  rng.shuffle(pool);

  SplitSet out;
  out.train.name = s.train.name;
  out.dev.name = s.dev.name;
  out.test.name = s.test.name;
  std::array<Dataset*, 3> dst{&out.train, &out.dev, &out.test};

  if (!options.stratify) {
    std::size_t pos = 0;
    for (std::size_t k = 0; k < 3; ++k)
      for (std::size_t i = 0; i < sizes[k]; ++i) dst[k]->records.push_back(*pool[pos++]);
    return out;
  }

  // Stratified: order by HS class (shuffled order kept within a class), deal
  // by quota so each class spreads proportionally, then reshuffle each split.
  auto cls = [](const Record* r) { return r->gold ? r->gold->hs : 2; };
  std::stable_sort(pool.begin(), pool.end(), [&](auto* a, auto* b) { return cls(a) < cls(b); });
  const auto assignment = apportion(pool.size(), sizes);
  for (std::size_t i = 0; i < pool.size(); ++i) dst[assignment[i]]->records.push_back(*pool[i]);
  for (auto* d : dst) rng.shuffle(d->records);
  return out;
}

std::vector<SplitSet> adjust_variants(const SplitSet& s, std::uint64_t seed, std::size_t k,
                                      const AdjustOptions& options) {
  std::vector<SplitSet> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(adjust_splits(s, seed + i, options));
  return out;
}

}  // namespace biasvote::audit
