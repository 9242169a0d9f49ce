#include <gtest/gtest.h>

#include <map>

#include "biasvote/ensemble.hpp"
#include "biasvote/error.hpp"
#include "biasvote/metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace biasvote;
using namespace biasvote::ensemble;
using biasvote::testkit::ConstantClassifier;
using biasvote::testkit::TableClassifier;

namespace {

Dataset balanced(std::size_t pos, std::size_t neg) {
  Dataset d{"b", {}};
  for (std::size_t i = 0; i < pos; ++i) d.records.push_back(testkit::labeled("p" + std::to_string(i), "bad " + std::to_string(i), 1, 0, 0));
  for (std::size_t i = 0; i < neg; ++i) d.records.push_back(testkit::labeled("n" + std::to_string(i), "good " + std::to_string(i), 0, 0, 0));
  return d;
}

std::pair<std::size_t, std::size_t> counts(const Dataset& d) {
  std::size_t p = 0, n = 0;
  for (const auto& r : d.records) (hs_label(r) ? p : n)++;
  return {p, n};
}

ClassifierPtr constant(double p) { return std::make_shared<ConstantClassifier>(p); }

}  // namespace

TEST(BiasedSubsetsTest, RatioTwo) {
  auto s = build_biased_subsets(balanced(100, 100), hs_label, 2.0, 1);
  EXPECT_EQ(counts(s.pos_major), (std::make_pair<std::size_t, std::size_t>(100, 50)));
  EXPECT_EQ(counts(s.neg_major), (std::make_pair<std::size_t, std::size_t>(50, 100)));
}

TEST(BiasedSubsetsTest, RatioOneBalanced) {
  auto s = build_biased_subsets(balanced(40, 60), hs_label, 1.0, 1);
  EXPECT_EQ(counts(s.pos_major), (std::make_pair<std::size_t, std::size_t>(40, 40)));
  EXPECT_EQ(counts(s.neg_major), (std::make_pair<std::size_t, std::size_t>(40, 60)));
}

TEST(BiasedSubsetsTest, Invariants) {
  for (double ratio : {1.0, 1.5, 2.0, 3.0}) {
    auto s = build_biased_subsets(balanced(70, 130), hs_label, ratio, 5);
    auto [pp, pn] = counts(s.pos_major);
    auto [np, nn] = counts(s.neg_major);
    EXPECT_GE(static_cast<double>(pp), ratio * static_cast<double>(pn) - 1e-9);
    EXPECT_GE(static_cast<double>(nn), ratio * static_cast<double>(np) - 1e-9);
  }
  EXPECT_EQ(build_biased_subsets(balanced(70, 130), hs_label, 2, 5).pos_major,
            build_biased_subsets(balanced(70, 130), hs_label, 2, 5).pos_major);
}

TEST(BiasedSubsetsTest, SingleClassIsError) {
  EXPECT_THROW(build_biased_subsets(balanced(10, 0), hs_label, 2.0, 1), TrainingError);
  EXPECT_THROW(build_biased_subsets(balanced(10, 10), hs_label, 0.5, 1), InvalidArgument);
}

TEST(DisagreementTest, IdenticalVotersFallBack) {
  auto d = balanced(30, 50);
  auto s = build_disagreement_set(ConstantClassifier(0.9), ConstantClassifier(0.9), d, hs_label, 1);
  EXPECT_TRUE(s.fallback);
  EXPECT_EQ(s.raw_size, 0u);
  EXPECT_EQ(counts(s.data), (std::make_pair<std::size_t, std::size_t>(30, 30)));
}

TEST(DisagreementTest, OppositeVotersBalanceWholeSet) {
  auto d = balanced(30, 50);
  auto s = build_disagreement_set(ConstantClassifier(0.9), ConstantClassifier(0.1), d, hs_label, 1);
  EXPECT_FALSE(s.fallback);
  EXPECT_EQ(s.raw_size, 80u);
  EXPECT_EQ(counts(s.data), (std::make_pair<std::size_t, std::size_t>(30, 30)));
}

TEST(DisagreementTest, SingleGoldClassFallsBack) {
  auto d = balanced(30, 50);
  std::map<std::string, double> table;
  for (const auto& r : d.records)
    if (!hs_label(r)) table[r.text] = 0.9;
  auto s = build_disagreement_set(TableClassifier(table, 0.1), ConstantClassifier(0.1), d, hs_label, 1);
  EXPECT_EQ(s.raw_size, 50u);
  EXPECT_TRUE(s.fallback);
}

TEST(TaskATest, VotingMatchesMajorityTable) {
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        TaskAEnsemble e({constant(a ? 0.8 : 0.2), constant(b ? 0.7 : 0.3), constant(c ? 0.6 : 0.4)});
        const auto p = predict_task_a(e, testkit::labeled("x", "text", 0, 0, 0));
        EXPECT_EQ(p.label, oracle::majority(a, b, c));
        EXPECT_EQ(p.votes, (std::vector<int>{a, b, c}));
      }
}

TEST(TaskATest, ClassifierViewAgreesWithVote) {
  auto e = std::make_shared<const TaskAEnsemble>(
      TaskAEnsemble({constant(0.51), constant(0.0), constant(0.55)}));
  TaskAClassifier c(e);
  EXPECT_EQ(model::decide(c.predict_proba("x")), 1);
  auto e2 = std::make_shared<const TaskAEnsemble>(TaskAEnsemble({constant(1.0), constant(0.4), constant(0.3)}));
  EXPECT_EQ(model::decide(TaskAClassifier(e2).predict_proba("x")), 0);
}

TEST(TaskATest, TrainsOnSeparableCorpus) {
  const auto d = testkit::synthetic_corpus(400, 8);
  TaskAOptions o;
  o.train.epochs = 10;
  o.train.learning_rate = 0.5;
  const auto e = train_task_a(d, o, 11);
  std::vector<int> golds, ens;
  std::array<std::vector<int>, 3> voters;
  for (const auto& r : d.records) {
    golds.push_back(hs_label(r));
    const auto p = predict_task_a(e, r);
    ens.push_back(p.label);
    for (int k = 0; k < 3; ++k) voters[k].push_back(p.votes[k]);
  }
  const double acc = metrics::prf(ens, golds, metrics::Averaging::Macro).accuracy;
  EXPECT_GE(acc, metrics::prf(voters[0], golds, metrics::Averaging::Macro).accuracy);
  EXPECT_GE(acc, metrics::prf(voters[1], golds, metrics::Averaging::Macro).accuracy);
  EXPECT_GT(acc, 0.95);
}

TEST(TaskATest, SingleClassCorpusIsError) {
  EXPECT_THROW(train_task_a(balanced(0, 30), TaskAOptions{}, 1), TrainingError);
}

TEST(ClassTableTest, Bijection) {
  EXPECT_EQ(encode_class({0, 0, 0}), 0);
  EXPECT_EQ(encode_class({1, 1, 1}), 2);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(encode_class(decode_class(i)), i);
  EXPECT_THROW(encode_class({0, 1, 0}), InvalidTuple);
  EXPECT_THROW(encode_class({0, 0, 1}), InvalidTuple);
  EXPECT_THROW(encode_class({0, 1, 1}), InvalidTuple);
  EXPECT_THROW(decode_class(5), InvalidArgument);
}

TEST(CombineTest, SpecExamples) {
  EXPECT_EQ(combine_predictions(std::vector<double>{0.9, 0.1, 0.2, 0.3, 0.1}), 0);
  EXPECT_EQ(combine_predictions(std::vector<double>{0.8, 0.6, 0.1, 0.1, 0.1}), 0);
  EXPECT_EQ(combine_predictions(std::vector<double>{0.1, 0.2, 0.4, 0.3, 0.2}), 2);
  EXPECT_EQ(combine_predictions(std::vector<double>{0.1, 0.2, 0.4, 0.3, 0.2}, NegativeRule::GlobalMinimum), 0);
}

TEST(CombineTest, Validation) {
  EXPECT_THROW(combine_predictions(std::vector<double>{0.1, 0.2, 1.4, 0.3, 0.2}), InvalidArgument);
  EXPECT_THROW(combine_predictions(std::vector<double>{0.1, 0.2}), InvalidArgument);
  EXPECT_EQ(parse_rule(rule_name(NegativeRule::GlobalMinimum)), NegativeRule::GlobalMinimum);
}

TEST(TaskBTest, AllClassesNoWarnings) {
  const auto d = testkit::synthetic_corpus(300, 2);
  auto cfg = model::TrainConfig::reference(4);
  const auto m = train_task_b(d, cfg, 4);
  EXPECT_TRUE(m.warnings().empty());
  for (const auto& r : d.records) EXPECT_TRUE(m.predict(r.text).triple.valid());
  EXPECT_EQ(model::serialize(dynamic_cast<const model::LinearModel&>(*m.classifiers()[3])),
            model::serialize(dynamic_cast<const model::LinearModel&>(*train_task_b(d, cfg, 4).classifiers()[3])));
}

TEST(TaskBTest, MissingClassIsConstantNegative) {
  auto d = testkit::synthetic_corpus(300, 2);
  std::erase_if(d.records, [](const Record& r) { return encode_class(gold_triple(r)) == 3; });
  const auto m = train_task_b(d, model::TrainConfig::reference(4), 4);
  ASSERT_EQ(m.warnings().size(), 1u);
  for (const auto& r : d.records) EXPECT_NE(m.predict(r.text).class_index, 3);
  EXPECT_LT(m.classifiers()[3]->predict_proba("aggronly"), 1e-10);
}

TEST(MfcTest, ModeAndTies) {
  EXPECT_EQ(train_mfc(std::vector<int>{0, 0, 1}).predict(), 0);
  EXPECT_EQ(train_mfc(std::vector<int>{0, 1}).predict(), 0);
  EXPECT_EQ(train_mfc(std::vector<int>{4, 2, 2, 4}).predict(), 2);
  EXPECT_THROW(train_mfc(std::vector<int>{}), TrainingError);
}

TEST(MfcTest, EmrEqualsConstantFrequency) {
  const auto d = testkit::synthetic_corpus(103, 6);
  std::vector<int> classes;
  std::vector<LabelTriple> golds;
  for (const auto& r : d.records) {
    classes.push_back(encode_class(gold_triple(r)));
    golds.push_back(gold_triple(r));
  }
  const int c = train_mfc(classes).predict();
  const std::vector<LabelTriple> preds(golds.size(), decode_class(c));
  const double freq = static_cast<double>(std::count(classes.begin(), classes.end(), c)) / classes.size();
  EXPECT_DOUBLE_EQ(metrics::emr(preds, golds), freq);
}
