#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "biasvote/corpus.hpp"
#include "biasvote/metrics.hpp"
#include "biasvote/model.hpp"

namespace biasvote::crosseval {

/// Probabilities for `texts`, fanned out over `workers` threads in contiguous
/// chunks. Output is identical for any worker count.
std::vector<double> batch_predict(const model::BinaryClassifier& m, std::span<const std::string> texts,
                                  std::size_t workers = 1);

struct CrossEvalRun {
  std::string model_fingerprint;
  std::string dataset_name;
  LabelMap label_map;
  std::size_t dataset_size = 0;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> sample_ids;
  std::vector<int> predictions;
  std::vector<int> golds;
  metrics::MetricsReport report;  // weighted averaging
};

/// Seeded sample of `n` records (all when absent or n >= |d|), batch
/// prediction, weighted P/R/F1 and accuracy. Every record needs a gold HS
/// label already mapped through `map`.
CrossEvalRun cross_eval(const model::BinaryClassifier& m, const Dataset& d, const LabelMap& map,
                        std::optional<std::size_t> n, std::uint64_t seed, std::size_t workers = 1);

nlohmann::json to_json(const CrossEvalRun& run);

/// Reference figures for the three external corpora, keyed by
/// "offenseval2020", "offenseval2019" and "hate-offense". Printed for
/// comparison only.
std::optional<metrics::TableRow> reference_row(const std::string& key);

/// Aligned table with the run's row and, when given, the reference row.
std::string format_comparison(const CrossEvalRun& run, const std::optional<metrics::TableRow>& reference);

}  // namespace biasvote::crosseval
