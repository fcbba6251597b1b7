#include <gtest/gtest.h>

#include "irae/eval.hpp"
#include "irae/synth.hpp"
#include "oracles.hpp"
#include "properties.hpp"

using namespace irae;

namespace {

/// Population of n patients where the first `actual` have the event and the
/// predictions hit tp of them plus fp others.
struct Scenario {
  std::vector<std::string> population;
  std::vector<PatientEvent> predicted, gold;
};

Scenario scenario(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn, const std::string& ae) {
  Scenario s;
  const Date d = Date::parse_or_throw("2021-01-01");
  std::size_t k = 0;
  auto add = [&](std::size_t count, bool pred, bool truth) {
    for (std::size_t i = 0; i < count; ++i, ++k) {
      const std::string id = fmt::format("P{:04d}", k);
      s.population.push_back(id);
      if (pred) s.predicted.push_back({id, ae, d, {"a", "b"}});
      if (truth) s.gold.push_back({id, ae, d, {"a", "b"}});
    }
  };
  add(tp, true, true);
  add(fp, true, false);
  add(fn, false, true);
  add(tn, false, false);
  return s;
}

PatientMetrics metrics(const Scenario& s, const std::string& ae) {
  return patient_metrics(s.predicted, s.gold, s.population, ae);
}

}  // namespace

TEST(RocAuc, Examples) {
  const std::vector<double> a{0.9, 0.8};
  const std::vector<int> la{1, 0};
  EXPECT_DOUBLE_EQ(roc_auc(a, la), 1.0);
  const std::vector<double> b{0.3, 0.3, 0.3};
  const std::vector<int> lb{1, 0, 1};
  EXPECT_DOUBLE_EQ(roc_auc(b, lb), 0.5);
  const std::vector<double> c{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> lc{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(roc_auc(c, lc), 0.75);
  EXPECT_DOUBLE_EQ(oracle::auc(c, lc), 0.75);
}

TEST(RocAuc, Errors) {
  const std::vector<double> s{0.1, 0.2};
  const std::vector<int> one{1, 1}, bad{1, 2}, shorter{1};
  EXPECT_THROW(roc_auc(s, one), Error);
  EXPECT_THROW(roc_auc(s, bad), Error);
  EXPECT_THROW(roc_auc(s, shorter), Error);
}

TEST(RocAuc, EqualsPairwiseEnumeration) { EXPECT_EQ(props::auc_mismatches(1000, 5), 0u); }

TEST(RocAuc, TrapezoidEqualsRankAuc) { EXPECT_LE(props::trapezoid_max_error(1000, 6), 1e-12); }

TEST(RocAuc, InvariantUnderMonotoneTransformAndFlips) {
  Rng rng(10);
  std::vector<double> s;
  std::vector<int> l;
  for (int k = 0; k < 300; ++k) {
    props::random_scored(rng, s, l);
    const double auc = roc_auc(s, l);
    std::vector<double> moved, negated;
    for (double x : s) {
      moved.push_back(std::exp(3.0 * x) + 1.0);
      negated.push_back(-x);
    }
    ASSERT_NEAR(roc_auc(moved, l), auc, 1e-12);
    std::vector<int> flipped;
    for (int x : l) flipped.push_back(1 - x);
    ASSERT_NEAR(roc_auc(s, flipped), 1.0 - auc, 1e-12);
    ASSERT_NEAR(roc_auc(negated, l), 1.0 - auc, 1e-12);
  }
}

TEST(ThresholdSweep, ShapeOfCurve) {
  const std::vector<double> perfect{0.9, 0.8, 0.2, 0.1};
  const std::vector<int> l{1, 1, 0, 0};
  const auto c = threshold_sweep(perfect, l);
  ASSERT_EQ(c.points.size(), 5u);
  EXPECT_EQ(c.points.front().fpr, 0.0);
  EXPECT_EQ(c.points.front().tpr, 0.0);
  EXPECT_EQ(c.points[2].fpr, 0.0);
  EXPECT_EQ(c.points[2].tpr, 1.0);
  EXPECT_EQ(c.points.back().fpr, 1.0);
  EXPECT_EQ(c.points.back().tpr, 1.0);
  EXPECT_DOUBLE_EQ(c.auc, 1.0);

  const std::vector<double> flat{0.4, 0.4, 0.4};
  const std::vector<int> lf{1, 0, 0};
  const auto f = threshold_sweep(flat, lf);
  ASSERT_EQ(f.points.size(), 2u);
  EXPECT_DOUBLE_EQ(f.auc, 0.5);
}

TEST(PatientMetrics, ThyroiditisRow) {
  const auto m = metrics(scenario(11, 0, 1, 315, "thyroiditis"), "thyroiditis");
  EXPECT_EQ(m.counts.total(), 327u);
  EXPECT_NEAR(*m.sensitivity * 100, 91.67, 0.005);
  EXPECT_NEAR(*m.specificity * 100, 100.00, 0.005);
  EXPECT_NEAR(*m.f1 * 100, 95.65, 0.005);
  EXPECT_NEAR(*m.accuracy * 100, 99.69, 0.005);
  EXPECT_NEAR(*m.f1, oracle::f1(11, 0, 1), 1e-12);
}

TEST(PatientMetrics, ColitisCounts) {
  const auto m = metrics(scenario(8, 8, 1, 310, "colitis"), "colitis");
  EXPECT_NEAR(*m.sensitivity * 100, 88.89, 0.005);
  EXPECT_NEAR(*m.specificity * 100, 97.48, 0.005);
  EXPECT_NEAR(*m.f1 * 100, 64.00, 0.005);
  EXPECT_NEAR(*m.accuracy * 100, 97.25, 0.005);
  EXPECT_NEAR(*m.f1, oracle::f1(8, 8, 1), 1e-12);
}

TEST(PatientMetrics, DegenerateCaseIsUndefinedNotZero) {
  const auto m = metrics(scenario(0, 0, 0, 20, "colitis"), "colitis");
  EXPECT_FALSE(m.sensitivity);
  EXPECT_FALSE(m.precision);
  EXPECT_FALSE(m.f1);
  EXPECT_DOUBLE_EQ(*m.specificity, 1.0);
  EXPECT_DOUBLE_EQ(*m.accuracy, 1.0);
  const auto j = to_json(m);
  EXPECT_TRUE(j.at("sensitivity").is_null());
}

TEST(PatientMetrics, F1CountFormMatchesHarmonicMean) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const auto tp = rng.between(1, 50), fp = rng.between(0, 50), fn = rng.between(0, 50);
    const auto m = metrics_from_counts("x", {static_cast<std::size_t>(tp), static_cast<std::size_t>(fp),
                                             static_cast<std::size_t>(fn), 10});
    ASSERT_NEAR(*m.f1, oracle::f1(static_cast<double>(tp), static_cast<double>(fp), static_cast<double>(fn)), 1e-12);
  }
}

TEST(PatientMetrics, OtherAesAndOutsidersHandled) {
  auto s = scenario(2, 1, 1, 3, "colitis");
  s.predicted.push_back({s.population[5], "hepatitis", Date::parse_or_throw("2021-01-01"), {}});
  const auto m = metrics(s, "colitis");
  EXPECT_EQ(m.counts, (ConfusionCounts{2, 1, 1, 3}));
  s.predicted.push_back({"stranger", "colitis", Date::parse_or_throw("2021-01-01"), {}});
  EXPECT_THROW(metrics(s, "colitis"), Error);
}

TEST(Split, SizesAndDisjointness) {
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("P" + std::to_string(i));
  const auto s = split_cohort(ids, 0.2, 1);
  EXPECT_EQ(s.test.size(), 2u);
  EXPECT_EQ(s.train.size(), 8u);
  for (const auto& t : s.test) EXPECT_FALSE(s.is_train(t));
  const auto again = split_cohort(ids, 0.2, 1);
  EXPECT_EQ(again.test, s.test);
  EXPECT_EQ(split_from_json(to_json(s)).test, s.test);
}

TEST(Split, PartitionPropertyAndErrors) {
  Rng rng(44);
  for (int iter = 0; iter < 200; ++iter) {
    const auto n = rng.between(2, 80);
    std::vector<std::string> ids;
    for (std::int64_t i = 0; i < n; ++i) ids.push_back("X" + std::to_string(i));
    const double f = rng.uniform(0.05, 0.95);
    const auto k = std::llround(f * static_cast<double>(n));
    if (k == 0 || k == n) {
      EXPECT_THROW(split_cohort(ids, f, 1), Error);
      continue;
    }
    auto shuffled = ids;
    rng.shuffle(shuffled);
    const auto a = split_cohort(ids, f, static_cast<std::uint64_t>(iter));
    const auto b = split_cohort(shuffled, f, static_cast<std::uint64_t>(iter));
    ASSERT_EQ(a.test, b.test);
    ASSERT_EQ(a.test.size() + a.train.size(), ids.size());
    std::vector<std::string> all = a.test;
    all.insert(all.end(), a.train.begin(), a.train.end());
    std::sort(all.begin(), all.end());
    std::sort(ids.begin(), ids.end());
    ASSERT_EQ(all, ids);
  }
  EXPECT_THROW(split_cohort({"a", "b"}, 1.0, 1), Error);
  EXPECT_THROW(split_cohort({"a", "a", "b"}, 0.5, 1), Error);
}

TEST(RecallAudit, AllInjectedMentionsFound) {
  const auto sample = generate_audit_sample(SynthConfig{}, 1000, 43, 2);
  ASSERT_EQ(sample.notes.size(), 1000u);
  ASSERT_EQ(sample.mentions.size(), 43u);
  const auto audit = stage1_recall_audit(sample.notes, sample.mentions, Lexicon::defaults());
  EXPECT_EQ(audit.detected, 43u);
  EXPECT_DOUBLE_EQ(*audit.recall(), 1.0);
}

TEST(RecallAudit, OneCorruptionBeyondThresholdIsMissed) {
  auto sample = generate_audit_sample(SynthConfig{}, 1000, 43, 2);
  const auto& target = sample.mentions.front();
  auto note = std::find_if(sample.notes.begin(), sample.notes.end(),
                           [&](const ClinicalNote& n) { return n.note_id == target.note_id; });
  ASSERT_NE(note, sample.notes.end());
  const auto tokens = tokenize(std::string_view(note->text));
  const auto& tok = tokens[target.token_index];
  const std::string replacement = "qqqqqqqqqq";
  for (const auto& e : Lexicon::defaults().entries())
    ASSERT_LT(oracle::similarity(replacement, e.term), e.threshold.value_or(0.80));
  note->text.replace(tok.begin, tok.end - tok.begin, replacement);
  const auto audit = stage1_recall_audit(sample.notes, sample.mentions, Lexicon::defaults());
  EXPECT_EQ(audit.detected, 42u);
  EXPECT_EQ(audit.total, 43u);
  ASSERT_EQ(audit.missed.size(), 1u);
  EXPECT_EQ(audit.missed[0], target);
}

TEST(RecallAudit, NoMentionsIsUndefined) {
  const auto sample = generate_audit_sample(SynthConfig{}, 50, 0, 2);
  const auto audit = stage1_recall_audit(sample.notes, sample.mentions, Lexicon::defaults());
  EXPECT_FALSE(audit.recall());
}
