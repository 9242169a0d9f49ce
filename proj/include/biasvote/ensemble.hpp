#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biasvote/corpus.hpp"
#include "biasvote/model.hpp"

namespace biasvote::ensemble {

using model::BinaryClassifier;
using model::Prediction;
using ClassifierPtr = std::shared_ptr<const BinaryClassifier>;

// ---------------------------------------------------------------------------
// Task A: three-voter ensemble built from two deliberately biased models.

/// pos_major holds every positive plus floor(positives / ratio) sampled
/// negatives; neg_major is the mirror image.
struct BiasedSubsets {
  Dataset pos_major;
  Dataset neg_major;
  double ratio = 2.0;
};

BiasedSubsets build_biased_subsets(const Dataset& d, const LabelFn& label_fn, double ratio,
                                   std::uint64_t seed);

inline constexpr std::size_t kDefaultDisagreementFloor = 20;

struct DisagreementSet {
  Dataset data;
  std::size_t raw_size = 0;  // records where the two voters disagreed, before balancing
  bool fallback = false;     // true when a balanced sample of the full data was used instead
};

/// Records on which `a` and `b` predict different labels, balanced by seeded
/// downsampling of the larger gold class. Falls back to a balanced sample of
/// `d` when the balanced set is smaller than `floor` or has one gold class.
DisagreementSet build_disagreement_set(const BinaryClassifier& a, const BinaryClassifier& b,
                                       const Dataset& d, const LabelFn& label_fn,
                                       std::uint64_t seed,
                                       std::size_t floor = kDefaultDisagreementFloor);

struct TaskAProvenance {
  std::uint64_t seed = 0;
  double ratio = 2.0;
  std::size_t pos_major_positives = 0, pos_major_negatives = 0;
  std::size_t neg_major_positives = 0, neg_major_negatives = 0;
  std::size_t disagreement_raw = 0;
  std::size_t disagreement_size = 0;
  bool fallback = false;
  std::array<std::uint64_t, 3> voter_seeds{};

  bool operator==(const TaskAProvenance&) const = default;
};

class TaskAEnsemble {
public:
  /// Voters in order A (positive-biased), B (negative-biased), C (tie-breaker).
  TaskAEnsemble(std::array<ClassifierPtr, 3> voters, TaskAProvenance provenance = {});

  const std::array<ClassifierPtr, 3>& voters() const noexcept { return voters_; }
  const TaskAProvenance& provenance() const noexcept { return provenance_; }

  /// label = majority of the three votes; probability = mean voter probability.
  Prediction predict(std::string_view text) const;
  std::vector<Prediction> predict_batch(std::span<const std::string> texts) const;

private:
  std::array<ClassifierPtr, 3> voters_;
  TaskAProvenance provenance_;
};

/// BinaryClassifier view of an ensemble: P(positive) is the mean voter
/// probability, reported as 1 or 0 side of the threshold according to the vote.
class TaskAClassifier final : public BinaryClassifier {
public:
  explicit TaskAClassifier(std::shared_ptr<const TaskAEnsemble> e) : ensemble_(std::move(e)) {}
  double predict_proba(std::string_view text) const override;
  std::vector<double> predict_proba_batch(std::span<const std::string> texts) const override;
  std::string fingerprint() const override;
  const TaskAEnsemble& ensemble() const noexcept { return *ensemble_; }

private:
  std::shared_ptr<const TaskAEnsemble> ensemble_;
};

struct TaskAOptions {
  model::TrainConfig train = model::TrainConfig::reference(0);
  double ratio = 2.0;
  std::size_t disagreement_floor = kDefaultDisagreementFloor;
  textprep::FeaturizerConfig featurizer;
};

/// Trains A on pos_major, B on neg_major and C on the disagreement set, with
/// per-stage seeds derived from `seed`. Labels come from the gold HS column.
TaskAEnsemble train_task_a(const Dataset& d, const TaskAOptions& options, std::uint64_t seed);

Prediction predict_task_a(const TaskAEnsemble& e, const Record& r);

int majority_vote(std::span<const int> votes);

// ---------------------------------------------------------------------------
// Task B: one-vs-rest decomposition over the five valid label triples.

inline constexpr std::array<LabelTriple, 5> kClassTable{{
    {0, 0, 0},
    {1, 1, 0},
    {1, 1, 1},
    {1, 0, 1},
    {1, 0, 0},
}};

int encode_class(const LabelTriple& t);  // throws InvalidTuple
LabelTriple decode_class(int index);     // throws InvalidArgument

/// How to choose a class when no classifier crosses the threshold.
enum class NegativeRule {
  LeastConfidentNegative,  // argmax of positive probability
  GlobalMinimum,           // argmin of positive probability
};

std::string_view rule_name(NegativeRule r);
NegativeRule parse_rule(std::string_view name);

/// One positive -> that class; several -> the most probable of them; none ->
/// per `rule`. Ties go to the lowest class index.
int combine_predictions(std::span<const double> probs,
                        NegativeRule rule = NegativeRule::LeastConfidentNegative);

struct TaskBPrediction {
  int class_index = 0;
  LabelTriple triple;
  std::array<double, 5> probabilities{};
};

class TaskBModel {
public:
  TaskBModel(std::array<ClassifierPtr, 5> classifiers, std::vector<std::string> warnings = {},
             NegativeRule rule = NegativeRule::LeastConfidentNegative);

  const std::array<ClassifierPtr, 5>& classifiers() const noexcept { return classifiers_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  NegativeRule rule() const noexcept { return rule_; }
  void set_rule(NegativeRule r) noexcept { rule_ = r; }

  TaskBPrediction predict(std::string_view text) const;
  std::vector<TaskBPrediction> predict_batch(std::span<const std::string> texts) const;

private:
  std::array<ClassifierPtr, 5> classifiers_;
  std::vector<std::string> warnings_;
  NegativeRule rule_;
};

/// Bias of the constant-negative classifier used for a class with no positives.
inline constexpr double kConstantNegativeBias = -40.0;

TaskBModel train_task_b(const Dataset& d, const model::TrainConfig& cfg, std::uint64_t seed,
                        const textprep::FeaturizerConfig& featurizer = {});

// ---------------------------------------------------------------------------

/// Most-frequent-class baseline.
struct MfcModel {
  int constant = 0;
  int predict() const noexcept { return constant; }
};

/// Mode of `labels`; ties go to the smallest label.
MfcModel train_mfc(std::span<const int> labels);

}  // namespace biasvote::ensemble
