#include "biasvote/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "biasvote/checksum.hpp"
#include "biasvote/error.hpp"
#include "biasvote/rng.hpp"

namespace biasvote::ensemble {

namespace {

// Stream tags for derive_seed; changing them changes every trained bundle.
enum SeedStream : std::uint64_t {
  kSubsets = 1,
  kVoterA = 2,
  kVoterB = 3,
  kDisagreement = 4,
  kVoterC = 5,
  kTaskBBase = 16,
};

struct ClassSplit {
  std::vector<std::size_t> pos, neg;
};

ClassSplit split_by_label(const Dataset& d, const LabelFn& label_fn) {
  ClassSplit s;
  for (std::size_t i = 0; i < d.size(); ++i) {
    int y = label_fn(d.records[i]);
    if (y == 1)
      s.pos.push_back(i);
    else if (y == 0)
      s.neg.push_back(i);
    else
      throw InvalidArgument("label for '" + d.records[i].id + "' is not binary");
  }
  return s;
}

std::vector<std::size_t> pick(const std::vector<std::size_t>& from, std::size_t k, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(std::min(k, from.size()));
  for (auto i : rng.sample_indices(from.size(), k)) out.push_back(from[i]);
  return out;
}

Dataset gather(const Dataset& d, std::string name, std::vector<std::size_t> a,
               const std::vector<std::size_t>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  Dataset out{std::move(name), {}};
  out.records.reserve(a.size());
  for (auto i : a) out.records.push_back(d.records[i]);
  return out;
}

Dataset balanced_sample(const Dataset& d, std::string name, const std::vector<std::size_t>& pos,
                        const std::vector<std::size_t>& neg, Rng& rng) {
  const std::size_t m = std::min(pos.size(), neg.size());
  return gather(d, std::move(name), pick(pos, m, rng), pick(neg, m, rng));
}

}  // namespace

BiasedSubsets build_biased_subsets(const Dataset& d, const LabelFn& label_fn, double ratio,
                                   std::uint64_t seed) {
  if (!(ratio >= 1.0) || !std::isfinite(ratio))
    throw InvalidArgument("biased-subset ratio must be a finite number >= 1");
  auto s = split_by_label(d, label_fn);
  if (s.pos.empty() || s.neg.empty())
    throw TrainingError("biased subsets need both classes (" + std::to_string(s.pos.size()) +
                        " positive, " + std::to_string(s.neg.size()) + " negative)");
  Rng rng(seed);
  const auto neg_for_pos = static_cast<std::size_t>(std::floor(static_cast<double>(s.pos.size()) / ratio));
  const auto pos_for_neg = static_cast<std::size_t>(std::floor(static_cast<double>(s.neg.size()) / ratio));
  BiasedSubsets out;
  out.ratio = ratio;
  out.pos_major = gather(d, d.name + ":pos_major", s.pos, pick(s.neg, neg_for_pos, rng));
  out.neg_major = gather(d, d.name + ":neg_major", s.neg, pick(s.pos, pos_for_neg, rng));
  return out;
}

DisagreementSet build_disagreement_set(const BinaryClassifier& a, const BinaryClassifier& b,
                                       const Dataset& d, const LabelFn& label_fn,
                                       std::uint64_t seed, std::size_t floor) {
  std::vector<std::string> texts;
  texts.reserve(d.size());
  for (const auto& r : d.records) texts.push_back(r.text);
  const auto pa = a.predict_proba_batch(texts);
  const auto pb = b.predict_proba_batch(texts);

  std::vector<std::size_t> pos, neg;
  std::size_t raw = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (model::decide(pa[i]) == model::decide(pb[i])) continue;
    ++raw;
    (label_fn(d.records[i]) == 1 ? pos : neg).push_back(i);
  }

  Rng rng(seed);
  DisagreementSet out;
  out.raw_size = raw;
  const std::size_t balanced = 2 * std::min(pos.size(), neg.size());
  if (balanced >= floor && balanced > 0) {
    out.data = balanced_sample(d, d.name + ":disagreement", pos, neg, rng);
    return out;
  }
  auto all = split_by_label(d, label_fn);
  out.fallback = true;
  out.data = balanced_sample(d, d.name + ":fallback", all.pos, all.neg, rng);
  return out;
}

// ---------------------------------------------------------------------------

int majority_vote(std::span<const int> votes) {
  if (votes.size() % 2 == 0) throw InvalidArgument("majority vote needs an odd number of voters");
  const auto ones = std::count(votes.begin(), votes.end(), 1);
  return 2 * static_cast<std::size_t>(ones) > votes.size() ? 1 : 0;
}

TaskAEnsemble::TaskAEnsemble(std::array<ClassifierPtr, 3> voters, TaskAProvenance provenance)
    : voters_(std::move(voters)), provenance_(provenance) {
  for (const auto& v : voters_)
    if (!v) throw InvalidArgument("Task A ensemble needs exactly three voters");
}

namespace {

Prediction assemble(const std::array<double, 3>& p) {
  Prediction out;
  out.votes = {model::decide(p[0]), model::decide(p[1]), model::decide(p[2])};
  out.label = majority_vote(out.votes);
  out.probability = (p[0] + p[1] + p[2]) / 3.0;
  return out;
}

}  // namespace

Prediction TaskAEnsemble::predict(std::string_view text) const {
  return assemble({voters_[0]->predict_proba(text), voters_[1]->predict_proba(text),
                   voters_[2]->predict_proba(text)});
}

std::vector<Prediction> TaskAEnsemble::predict_batch(std::span<const std::string> texts) const {
  std::array<std::vector<double>, 3> p;
  for (std::size_t v = 0; v < 3; ++v) p[v] = voters_[v]->predict_proba_batch(texts);
  std::vector<Prediction> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) out.push_back(assemble({p[0][i], p[1][i], p[2][i]}));
  return out;
}

Prediction predict_task_a(const TaskAEnsemble& e, const Record& r) { return e.predict(r.text); }

namespace {

// Keeps the reported probability on the same side of the threshold as the vote.
double vote_consistent(const Prediction& p) {
  if (p.label == 1) return std::max(p.probability, model::kDecisionThreshold);
  return std::min(p.probability, std::nextafter(model::kDecisionThreshold, 0.0));
}

}  // namespace

double TaskAClassifier::predict_proba(std::string_view text) const {
  return vote_consistent(ensemble_->predict(text));
}

std::vector<double> TaskAClassifier::predict_proba_batch(std::span<const std::string> texts) const {
  std::vector<double> out;
  for (const auto& p : ensemble_->predict_batch(texts)) out.push_back(vote_consistent(p));
  return out;
}

std::string TaskAClassifier::fingerprint() const {
  std::string joined = "task-a";
  for (const auto& v : ensemble_->voters()) joined += "|" + v->fingerprint();
  return "sha256:" + sha256_hex(joined);
}

TaskAEnsemble train_task_a(const Dataset& d, const TaskAOptions& options, std::uint64_t seed) {
  const LabelFn label = hs_label;
  auto subsets = build_biased_subsets(d, label, options.ratio, derive_seed(seed, kSubsets));

  TaskAProvenance prov;
  prov.seed = seed;
  prov.ratio = options.ratio;
  auto count = [&](const Dataset& s, std::size_t& p, std::size_t& n) {
    for (const auto& r : s.records) (label(r) == 1 ? p : n)++;
  };
  count(subsets.pos_major, prov.pos_major_positives, prov.pos_major_negatives);
  count(subsets.neg_major, prov.neg_major_positives, prov.neg_major_negatives);

  auto cfg = options.train;
  prov.voter_seeds = {derive_seed(seed, kVoterA), derive_seed(seed, kVoterB), derive_seed(seed, kVoterC)};

  cfg.seed = prov.voter_seeds[0];
  auto a = std::make_shared<const model::LinearModel>(
      model::train_linear(subsets.pos_major, label, cfg, options.featurizer));
  cfg.seed = prov.voter_seeds[1];
  auto b = std::make_shared<const model::LinearModel>(
      model::train_linear(subsets.neg_major, label, cfg, options.featurizer));

  auto dis = build_disagreement_set(*a, *b, d, label, derive_seed(seed, kDisagreement),
                                    options.disagreement_floor);
  prov.disagreement_raw = dis.raw_size;
  prov.disagreement_size = dis.data.size();
  prov.fallback = dis.fallback;

  cfg.seed = prov.voter_seeds[2];
  auto c = std::make_shared<const model::LinearModel>(
      model::train_linear(dis.data, label, cfg, options.featurizer));
  return TaskAEnsemble({a, b, c}, prov);
}

// ---------------------------------------------------------------------------

int encode_class(const LabelTriple& t) {
  for (std::size_t i = 0; i < kClassTable.size(); ++i)
    if (kClassTable[i] == t) return static_cast<int>(i);
  throw InvalidTuple("label tuple " + to_string(t) + " is not one of the five valid classes");
}

LabelTriple decode_class(int index) {
  if (index < 0 || index >= static_cast<int>(kClassTable.size()))
    throw InvalidArgument("class index " + std::to_string(index) + " outside 0..4");
  return kClassTable[static_cast<std::size_t>(index)];
}

std::string_view rule_name(NegativeRule r) {
  return r == NegativeRule::LeastConfidentNegative ? "least-confident-negative" : "global-minimum";
}

NegativeRule parse_rule(std::string_view name) {
  if (name == "least-confident-negative") return NegativeRule::LeastConfidentNegative;
  if (name == "global-minimum") return NegativeRule::GlobalMinimum;
  throw InvalidArgument("unknown negative rule '" + std::string(name) + "'");
}

int combine_predictions(std::span<const double> probs, NegativeRule rule) {
  if (probs.size() != kClassTable.size())
    throw InvalidArgument("combine_predictions expects 5 probabilities, got " +
                          std::to_string(probs.size()));
  for (double p : probs)
    if (!std::isfinite(p) || p < 0.0 || p > 1.0)
      throw InvalidArgument("probability " + std::to_string(p) + " outside [0,1]");

  int best = -1;
  for (int i = 0; i < 5; ++i) {
    if (model::decide(probs[i]) != 1) continue;
    if (best < 0 || probs[i] > probs[best]) best = i;
  }
  if (best >= 0) return best;

  best = 0;
  for (int i = 1; i < 5; ++i) {
    const bool better = rule == NegativeRule::LeastConfidentNegative ? probs[i] > probs[best]
                                                                      : probs[i] < probs[best];
    if (better) best = i;
  }
  return best;
}

TaskBModel::TaskBModel(std::array<ClassifierPtr, 5> classifiers, std::vector<std::string> warnings,
                       NegativeRule rule)
    : classifiers_(std::move(classifiers)), warnings_(std::move(warnings)), rule_(rule) {
  for (const auto& c : classifiers_)
    if (!c) throw InvalidArgument("Task B model needs five classifiers");
}

TaskBPrediction TaskBModel::predict(std::string_view text) const {
  TaskBPrediction out;
  for (std::size_t k = 0; k < 5; ++k) out.probabilities[k] = classifiers_[k]->predict_proba(text);
  out.class_index = combine_predictions(out.probabilities, rule_);
  out.triple = decode_class(out.class_index);
  return out;
}

std::vector<TaskBPrediction> TaskBModel::predict_batch(std::span<const std::string> texts) const {
  std::array<std::vector<double>, 5> p;
  for (std::size_t k = 0; k < 5; ++k) p[k] = classifiers_[k]->predict_proba_batch(texts);
  std::vector<TaskBPrediction> out(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    for (std::size_t k = 0; k < 5; ++k) out[i].probabilities[k] = p[k][i];
    out[i].class_index = combine_predictions(out[i].probabilities, rule_);
    out[i].triple = decode_class(out[i].class_index);
  }
  return out;
}

TaskBModel train_task_b(const Dataset& d, const model::TrainConfig& cfg, std::uint64_t seed,
                        const textprep::FeaturizerConfig& featurizer) {
  if (d.empty()) throw TrainingError("cannot train Task B on an empty dataset");
  std::vector<int> classes;
  classes.reserve(d.size());
  for (const auto& r : d.records) classes.push_back(encode_class(gold_triple(r)));

  std::array<ClassifierPtr, 5> members;
  std::vector<std::string> warnings;
  for (int k = 0; k < 5; ++k) {
    auto c = cfg;
    c.seed = derive_seed(seed, kTaskBBase + static_cast<std::uint64_t>(k));
    const auto positives = std::count(classes.begin(), classes.end(), k);
    if (positives == 0) {
      std::string w = "class " + std::to_string(k) + " " + to_string(decode_class(k)) +
                      " has no training examples; using a constant-negative classifier";
      warnings.push_back(w);
      model::TrainingMetadata meta{c, d.size(), 0, {w}};
      members[static_cast<std::size_t>(k)] = std::make_shared<const model::LinearModel>(
          model::LinearModel::constant(featurizer, kConstantNegativeBias, std::move(meta)));
      continue;
    }
    LabelFn one_vs_rest = [k](const Record& r) { return encode_class(gold_triple(r)) == k ? 1 : 0; };
    members[static_cast<std::size_t>(k)] =
        std::make_shared<const model::LinearModel>(model::train_linear(d, one_vs_rest, c, featurizer));
  }
  return TaskBModel(std::move(members), std::move(warnings));
}

// ---------------------------------------------------------------------------

MfcModel train_mfc(std::span<const int> labels) {
  if (labels.empty()) throw TrainingError("MFC baseline needs at least one label");
  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it)
    if (it->second > best->second) best = it;
  return MfcModel{best->first};
}

}  // namespace biasvote::ensemble
