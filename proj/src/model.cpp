#include "biasvote/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "biasvote/checksum.hpp"
#include "biasvote/error.hpp"
#include "biasvote/rng.hpp"

namespace biasvote::model {

using nlohmann::json;

std::vector<double> BinaryClassifier::predict_proba_batch(std::span<const std::string> texts) const {
  std::vector<double> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(predict_proba(t));
  return out;
}

double predict_proba(const BinaryClassifier& m, const Record& r) { return m.predict_proba(r.text); }

// ---------------------------------------------------------------------------

TrainConfig TrainConfig::reference(std::uint64_t seed) { return {0.1, 5, 32, seed}; }

TrainConfig TrainConfig::transformer_adapter_default(std::uint64_t seed) { return {5e-5, 3, 32, seed}; }

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw InvalidArgument("learning rate must be a positive finite number");
  if (epochs <= 0) throw InvalidArgument("epochs must be positive");
  if (batch_size <= 0) throw InvalidArgument("batch size must be positive");
}

// ---------------------------------------------------------------------------

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LinearModel::LinearModel(textprep::FeaturizerConfig featurizer, std::vector<double> weights,
                         double bias, TrainingMetadata metadata)
    : featurizer_(std::move(featurizer)),
      weights_(std::move(weights)),
      bias_(bias),
      metadata_(std::move(metadata)) {
  featurizer_.validate();
  if (weights_.size() != featurizer_.dimension)
    throw InvalidArgument("weight vector size " + std::to_string(weights_.size()) +
                          " does not match feature dimension " +
                          std::to_string(featurizer_.dimension));
  if (!std::isfinite(bias_) ||
      !std::all_of(weights_.begin(), weights_.end(), [](double w) { return std::isfinite(w); }))
    throw InvalidArgument("model parameters must be finite");
}

LinearModel LinearModel::constant(textprep::FeaturizerConfig featurizer, double bias,
                                  TrainingMetadata metadata) {
  std::vector<double> w(featurizer.dimension, 0.0);
  return LinearModel(std::move(featurizer), std::move(w), bias, std::move(metadata));
}

double LinearModel::logit(const textprep::FeatureVector& x) const {
  double z = bias_;
  for (std::size_t k = 0; k < x.indices.size(); ++k) z += weights_[x.indices[k]] * x.values[k];
  return z;
}

double LinearModel::predict_features(const textprep::FeatureVector& x) const {
  return sigmoid(logit(x));
}

double LinearModel::predict_proba(std::string_view text) const {
  return predict_features(textprep::featurize(textprep::preprocess(text), featurizer_));
}

std::string LinearModel::fingerprint() const { return "sha256:" + sha256_hex(serialize(*this)); }

// ---------------------------------------------------------------------------

LinearModel train_linear(const Dataset& data, const LabelFn& label_fn, const TrainConfig& cfg,
                         const textprep::FeaturizerConfig& featurizer) {
  cfg.validate();
  featurizer.validate();
  if (data.empty()) throw TrainingError("cannot train on an empty dataset");

  std::vector<textprep::FeatureVector> xs;
  std::vector<double> ys;
  xs.reserve(data.size());
  ys.reserve(data.size());
  for (const auto& r : data.records) {
    int y = label_fn(r);
    if (y != 0 && y != 1) throw TrainingError("label for '" + r.id + "' is not binary");
    xs.push_back(textprep::featurize(textprep::preprocess(r.text), featurizer));
    ys.push_back(y);
  }

  TrainingMetadata meta;
  meta.config = cfg;
  meta.examples = data.size();
  meta.positives = static_cast<std::size_t>(std::count(ys.begin(), ys.end(), 1.0));
  if (meta.positives == 0 || meta.positives == meta.examples)
    meta.warnings.push_back("single-class training data (all labels " +
                            std::to_string(meta.positives ? 1 : 0) +
                            "); model converges to a constant");

  std::vector<double> w(featurizer.dimension, 0.0);
  double b = 0.0;
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.seed);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  // Gradients are accumulated sparsely per batch, then applied in index order.
  std::vector<double> grad(featurizer.dimension, 0.0);
  std::vector<std::uint32_t> touched;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double scale = cfg.learning_rate / static_cast<double>(end - start);
      double gb = 0.0;
      touched.clear();
      for (std::size_t k = start; k < end; ++k) {
        const auto& x = xs[order[k]];
        double z = b;
        for (std::size_t j = 0; j < x.indices.size(); ++j) z += w[x.indices[j]] * x.values[j];
        const double err = sigmoid(z) - ys[order[k]];
        gb += err;
        for (std::size_t j = 0; j < x.indices.size(); ++j) {
          if (grad[x.indices[j]] == 0.0) touched.push_back(x.indices[j]);
          grad[x.indices[j]] += err * x.values[j];
        }
      }
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      for (auto idx : touched) {
        w[idx] -= scale * grad[idx];
        grad[idx] = 0.0;
      }
      b -= scale * gb;
    }
  }
  return LinearModel(featurizer, std::move(w), b, std::move(meta));
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json featurizer_json(const textprep::FeaturizerConfig& f) {
  return {{"ngram_orders", f.ngram_orders},
          {"dimension", f.dimension},
          {"emoji_table", textprep::EmojiTable::bundled()->version()}};
}

json config_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed}};
}

}  // namespace

json to_json(const LinearModel& m) {
  json weights = json::array();
  const auto& w = m.weights();
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] != 0.0) weights.push_back(json::array({i, w[i]}));
  const auto& meta = m.metadata();
  return {{"schema_version", kModelSchemaVersion},
          {"kind", "linear"},
          {"weights", std::move(weights)},
          {"bias", m.bias()},
          {"featurizer", featurizer_json(m.featurizer())},
          {"train_config", config_json(meta.config)},
          {"examples", meta.examples},
          {"positives", meta.positives},
          {"warnings", meta.warnings}};
}

LinearModel linear_model_from_json(const json& j) {
  try {
    if (!j.is_object() || !j.contains("schema_version"))
      throw ModelLoadError("model file has no schema_version");
    const int version = j.at("schema_version").get<int>();
    if (version != kModelSchemaVersion)
      throw VersionError("model schema version " + std::to_string(version) +
                         " is not supported (this build reads version " +
                         std::to_string(kModelSchemaVersion) + ")");
    if (j.at("kind").get<std::string>() != "linear")
      throw ModelLoadError("unsupported model kind '" + j.at("kind").get<std::string>() + "'");

    textprep::FeaturizerConfig f;
    f.ngram_orders = j.at("featurizer").at("ngram_orders").get<std::vector<int>>();
    f.dimension = j.at("featurizer").at("dimension").get<std::uint32_t>();
    f.validate();

    std::vector<double> w(f.dimension, 0.0);
    for (const auto& entry : j.at("weights")) {
      const auto idx = entry.at(0).get<std::size_t>();
      if (idx >= w.size()) throw ModelLoadError("weight index out of range");
      w[idx] = entry.at(1).get<double>();
    }
    TrainingMetadata meta;
    const auto& c = j.at("train_config");
    meta.config = {c.at("learning_rate").get<double>(), c.at("epochs").get<int>(),
                   c.at("batch_size").get<int>(), c.at("seed").get<std::uint64_t>()};
    meta.examples = j.at("examples").get<std::size_t>();
    meta.positives = j.at("positives").get<std::size_t>();
    meta.warnings = j.at("warnings").get<std::vector<std::string>>();
    return LinearModel(std::move(f), std::move(w), j.at("bias").get<double>(), std::move(meta));
  } catch (const ModelLoadError&) {
    throw;
  } catch (const std::exception& e) {
    throw ModelLoadError(std::string("malformed model file: ") + e.what());
  }
}

std::string serialize(const LinearModel& m) { return to_json(m).dump() + "\n"; }

void save_model(const LinearModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write model file " + path.string());
  out << serialize(m);
  if (!out) throw Error("write failed for " + path.string());
}

LinearModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelLoadError("cannot open model file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ModelLoadError("cannot parse model file " + path.string() + ": " + e.what());
  }
  return linear_model_from_json(j);
}

}  // namespace biasvote::model
