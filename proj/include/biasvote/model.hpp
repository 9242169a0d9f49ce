#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "biasvote/corpus.hpp"
#include "biasvote/textprep.hpp"

namespace biasvote::model {

/// Probabilities at or above this are "predicted positive" everywhere.
inline constexpr double kDecisionThreshold = 0.5;

inline int decide(double probability) noexcept { return probability >= kDecisionThreshold ? 1 : 0; }

/// Maps text to P(positive). Implementations must be deterministic, thread-safe
/// for concurrent const calls, and return finite values in [0, 1].
class BinaryClassifier {
public:
  virtual ~BinaryClassifier() = default;

  virtual double predict_proba(std::string_view text) const = 0;

  /// Batch form; adapters override this to make one round trip.
  virtual std::vector<double> predict_proba_batch(std::span<const std::string> texts) const;

  /// Identifies the model for run manifests (content hash or endpoint).
  virtual std::string fingerprint() const = 0;
};

double predict_proba(const BinaryClassifier& m, const Record& r);

/// A binary decision with its positive-class probability. Ensemble
/// predictions also carry the individual voters' labels.
struct Prediction {
  int label = 0;
  double probability = 0.0;
  std::vector<int> votes;
};

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 5;
  int batch_size = 32;
  std::uint64_t seed = 0;

  /// Reference linear model defaults; the seed is always explicit.
  static TrainConfig reference(std::uint64_t seed);
  /// Fine-tuning settings recorded for transformer adapters (5e-5, 3 epochs, batch 32).
  static TrainConfig transformer_adapter_default(std::uint64_t seed);

  void validate() const;  // throws InvalidArgument
  bool operator==(const TrainConfig&) const = default;
};

struct TrainingMetadata {
  TrainConfig config;
  std::size_t examples = 0;
  std::size_t positives = 0;
  std::vector<std::string> warnings;

  bool operator==(const TrainingMetadata&) const = default;
};

/// Logistic regression over hashed n-gram features.
class LinearModel final : public BinaryClassifier {
public:
  LinearModel(textprep::FeaturizerConfig featurizer, std::vector<double> weights, double bias,
              TrainingMetadata metadata);

  /// Zero weights with the given bias; used for classes with no training positives.
  static LinearModel constant(textprep::FeaturizerConfig featurizer, double bias,
                              TrainingMetadata metadata);

  double logit(const textprep::FeatureVector& x) const;
  double predict_features(const textprep::FeatureVector& x) const;
  double predict_proba(std::string_view text) const override;
  std::string fingerprint() const override;

  const textprep::FeaturizerConfig& featurizer() const noexcept { return featurizer_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double bias() const noexcept { return bias_; }
  const TrainingMetadata& metadata() const noexcept { return metadata_; }

private:
  textprep::FeaturizerConfig featurizer_;
  std::vector<double> weights_;
  double bias_ = 0.0;
  TrainingMetadata metadata_;
};

double sigmoid(double z) noexcept;

/// Seeded mini-batch gradient descent on the mean logistic loss.
/// The example order is reshuffled each epoch from cfg.seed.
LinearModel train_linear(const Dataset& data, const LabelFn& label_fn, const TrainConfig& cfg,
                         const textprep::FeaturizerConfig& featurizer = {});

inline constexpr int kModelSchemaVersion = 1;

nlohmann::json to_json(const LinearModel& m);
LinearModel linear_model_from_json(const nlohmann::json& j);

/// Canonical serialized bytes; identical models give identical bytes.
std::string serialize(const LinearModel& m);

void save_model(const LinearModel& m, const std::filesystem::path& path);
LinearModel load_model(const std::filesystem::path& path);

}  // namespace biasvote::model
