#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "biasvote/corpus.hpp"
#include "biasvote/error.hpp"

namespace biasvote::metrics {

enum class Averaging { Macro, Weighted };

struct ClassCounts {
  int label = 0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::size_t support() const noexcept { return tp + fn; }
};

/// One-vs-rest counts for every label in the alphabet.
struct ConfusionTable {
  std::vector<ClassCounts> classes;
  std::size_t total = 0;
};

ConfusionTable confusion(std::span<const int> preds, std::span<const int> golds,
                         const std::vector<int>& alphabet);

struct ClassScores {
  int label = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  std::size_t support = 0;
};

struct Aggregate {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct MetricsReport {
  std::vector<ClassScores> per_class;
  Aggregate macro;
  Aggregate weighted;
  double accuracy = 0.0;
  std::optional<double> emr;
  std::size_t sample_size = 0;
  Averaging averaging = Averaging::Macro;

  /// The aggregate selected by `averaging`.
  const Aggregate& headline() const noexcept {
    return averaging == Averaging::Macro ? macro : weighted;
  }
};

/// Per-class precision/recall/F1 (0/0 := 0) with macro and support-weighted
/// means. The alphabet defaults to the sorted union of labels in both lists;
/// labels with no support on either side still count toward the macro mean.
MetricsReport prf(std::span<const int> preds, std::span<const int> golds,
                  Averaging averaging = Averaging::Macro,
                  std::optional<std::vector<int>> alphabet = std::nullopt);

/// Fraction of instances whose whole predicted triple equals the gold triple.
double emr(std::span<const LabelTriple> preds, std::span<const LabelTriple> golds);

/// Cohen's kappa. When chance agreement is 1 the statistic is 1 for perfect
/// observed agreement and undefined (UndefinedKappa) otherwise.
template <typename Label>
double cohen_kappa(std::span<const Label> a, std::span<const Label> b) {
  if (a.size() != b.size())
    throw InvalidArgument("cohen_kappa: annotation lists differ in length");
  if (a.empty()) throw InvalidArgument("cohen_kappa: no annotations");
  const double n = static_cast<double>(a.size());
  std::map<Label, std::pair<std::size_t, std::size_t>> marginals;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++marginals[a[i]].first;
    ++marginals[b[i]].second;
    if (a[i] == b[i]) ++agree;
  }
  const double po = static_cast<double>(agree) / n;
  double pe = 0.0;
  for (const auto& [label, m] : marginals)
    pe += (static_cast<double>(m.first) / n) * (static_cast<double>(m.second) / n);
  if (pe >= 1.0) {
    if (agree == a.size()) return 1.0;
    throw UndefinedKappa("kappa undefined: chance agreement is 1 but annotators disagree");
  }
  return (po - pe) / (1.0 - pe);
}

inline double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b) {
  return cohen_kappa<int>(std::span<const int>(a), std::span<const int>(b));
}

inline double cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return cohen_kappa<std::string>(std::span<const std::string>(a), std::span<const std::string>(b));
}

enum class Confidence { P90, P95, P99 };

double z_value(Confidence c) noexcept;
Confidence parse_confidence(double percent);  // 90, 95 or 99

struct SampleSpec {
  std::uint64_t population = 0;
  Confidence confidence = Confidence::P95;
  double margin_percent = 5.0;  // in (0, 100]
  double proportion = 0.5;
};

/// Finite-population sample size: n0 = z^2 p(1-p) / d^2, n = ceil(n0 / (1 + (n0-1)/N)),
/// clamped to N.
std::uint64_t sample_size(const SampleSpec& spec);

// ---------------------------------------------------------------------------

nlohmann::json to_json(const MetricsReport& r);

/// Element-wise mean of several reports (e.g. over adjusted-split variants).
MetricsReport average_reports(std::span<const MetricsReport> reports);

/// One row of an aligned `Dataset | Sample size | Acc. | P | R | F1` table.
struct TableRow {
  std::string dataset;
  std::size_t sample_size = 0;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
};

TableRow table_row(const std::string& dataset, const MetricsReport& r);
std::string format_table(std::span<const TableRow> rows);

}  // namespace biasvote::metrics
