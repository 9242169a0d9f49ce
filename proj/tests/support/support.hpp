#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "biasvote/corpus.hpp"
#include "biasvote/ensemble.hpp"
#include "biasvote/model.hpp"

namespace biasvote::testkit {

class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("biasvote-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

inline Record labeled(std::string id, std::string text, int hs, int tr, int ag) {
  return {std::move(id), std::move(text), GoldLabels{hs, tr, ag}};
}

/// Keyword-separable corpus: every record carries one class keyword among
/// filler words; classes cycle so all five triples are present.
inline Dataset synthetic_corpus(std::size_t n, std::uint64_t seed, const std::string& id_prefix = "r") {
  static const char* keywords[5] = {"sunshine", "targetword", "fullattack", "aggronly", "hatealone"};
  static const std::vector<std::string> filler{"the", "a", "of", "and", "to", "in", "is", "it", "you", "that",
                                               "was", "for", "on", "are", "with", "as", "today", "really"};
  std::mt19937_64 gen(seed);
  Dataset d{"synthetic", {}};
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 5);
    std::string text;
    const int before = 3 + static_cast<int>(gen() % 6);
    for (int k = 0; k < before; ++k) text += filler[gen() % filler.size()] + " ";
    text += keywords[c];
    const int after = static_cast<int>(gen() % 5);
    for (int k = 0; k < after; ++k) text += " " + filler[gen() % filler.size()];
    const auto t = ensemble::kClassTable[c];
    d.records.push_back(labeled(id_prefix + std::to_string(i), text, t.hs, t.tr, t.ag));
  }
  std::shuffle(d.records.begin(), d.records.end(), gen);
  return d;
}

/// Fixed probability per text, `fallback` otherwise.
class TableClassifier final : public model::BinaryClassifier {
public:
  explicit TableClassifier(std::map<std::string, double> table, double fallback = 0.5)
      : table_(std::move(table)), fallback_(fallback) {}
  double predict_proba(std::string_view text) const override {
    auto it = table_.find(std::string(text));
    return it == table_.end() ? fallback_ : it->second;
  }
  std::string fingerprint() const override { return "table"; }

private:
  std::map<std::string, double> table_;
  double fallback_;
};

class ConstantClassifier final : public model::BinaryClassifier {
public:
  explicit ConstantClassifier(double p) : p_(p) {}
  double predict_proba(std::string_view) const override { return p_; }
  std::string fingerprint() const override { return "constant:" + std::to_string(p_); }

private:
  double p_;
};

/// Train/test splits where "#buildthewall" is 100% hateful in train
/// (`in_train` records) and 20% hateful in test (`in_test` records).
inline std::pair<Dataset, Dataset> disparity_splits(std::size_t train_size, std::size_t test_size,
                                                    std::size_t in_train, std::size_t in_test,
                                                    std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  auto filler = [&gen](std::size_t i) {
    static const std::vector<std::string> words{"people", "today", "news", "country", "they", "we", "border",
                                                "city", "vote", "women", "men", "work"};
    std::string t;
    for (int k = 0; k < 6; ++k) t += words[(i * 7 + gen()) % words.size()] + " ";
    return t;
  };
  Dataset train{"train", {}}, test{"test", {}};
  for (std::size_t i = 0; i < train_size; ++i) {
    const bool tok = i < in_train;
    const int hs = tok ? 1 : static_cast<int>(gen() % 2);
    train.records.push_back(labeled("tr" + std::to_string(i), filler(i) + (tok ? "#BuildThatWall" : "ok"), hs, 0, 0));
  }
  for (std::size_t i = 0; i < test_size; ++i) {
    const bool tok = i < in_test;
    const int hs = tok ? (i % 5 == 0 ? 1 : 0) : static_cast<int>(gen() % 2);
    test.records.push_back(labeled("te" + std::to_string(i), filler(i) + (tok ? "#BuildThatWall" : "ok"), hs, 0, 0));
  }
  return {train, test};
}

inline Dataset by_ids(const std::vector<Record>& records, const std::string& name = "d") {
  return {name, records};
}

}  // namespace biasvote::testkit
