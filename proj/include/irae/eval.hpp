#ifndef IRAE_EVAL_HPP
#define IRAE_EVAL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "irae/aggregate.hpp"
#include "irae/matcher.hpp"
#include "irae/rng.hpp"

namespace irae {

// ---------------------------------------------------------------------------
// Patient-level split

struct CohortSplit {
  std::vector<std::string> train;  // sorted
  std::vector<std::string> test;   // sorted
  std::uint64_t seed = 0;
  double fraction = 0.0;

  bool is_test(std::string_view id) const { return std::binary_search(test.begin(), test.end(), id); }
  bool is_train(std::string_view id) const { return std::binary_search(train.begin(), train.end(), id); }
};

/// Sorts the ids, shuffles them with Rng(seed) and takes the first
/// round(fraction * N) as the test set.
inline CohortSplit split_cohort(std::vector<std::string> ids, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw config_error("split fraction must be in (0,1)");
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw data_error("split_cohort: duplicate patient id");
  const std::size_t n = ids.size();
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n < 2 || k == 0 || k == n)
    throw config_error(fmt::format("split of {} patients at fraction {} leaves an empty side", n, fraction));
  Rng rng(seed);
  rng.shuffle(ids);
  CohortSplit s;
  s.seed = seed;
  s.fraction = fraction;
  s.test.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k));
  s.train.assign(ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

inline json to_json(const CohortSplit& s) {
  return {{"seed", s.seed}, {"fraction", s.fraction}, {"train", s.train}, {"test", s.test}};
}

inline CohortSplit split_from_json(const json& j) {
  CohortSplit s{j.at("train").get<std::vector<std::string>>(), j.at("test").get<std::vector<std::string>>(),
                j.at("seed").get<std::uint64_t>(), j.at("fraction").get<double>()};
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

// ---------------------------------------------------------------------------
// ROC

namespace detail {

inline void check_labels(std::span<const double> scores, std::span<const int> labels, std::size_t& pos,
                         std::size_t& neg) {
  if (scores.size() != labels.size()) throw data_error("scores and labels differ in length");
  pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw data_error("labels must be 0 or 1");
    pos += static_cast<std::size_t>(l);
  }
  neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw data_error("ROC AUC needs at least one positive and one negative label");
}

}  // namespace detail

/// Mann-Whitney statistic: the share of (positive, negative) pairs ranked
/// correctly, ties counting one half. Computed from mid-ranks.
inline double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t pos = 0, neg = 0;
  detail::check_labels(scores, labels, pos, neg);
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // twice the rank sum of positives, kept integral
  double twice_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) pos_in_group += labels[order[j++]];
    // ranks i+1 .. j, mid-rank (i + 1 + j) / 2
    twice_rank_sum += static_cast<double>(pos_in_group) * static_cast<double>(i + 1 + j);
    i = j;
  }
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  const double twice_u = twice_rank_sum - p * (p + 1.0);
  return twice_u / 2.0 / (p * q);
}

struct RocPoint {
  double threshold;  // +inf for the origin
  double fpr;
  double tpr;
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0,0) to (1,1)
  double auc = 0.0;              // trapezoid rule over points
};

/// One point per distinct score, scores >= threshold counted as positive.
inline RocCurve threshold_sweep(std::span<const double> scores, std::span<const int> labels) {
  std::size_t pos = 0, neg = 0;
  detail::check_labels(scores, labels, pos, neg);
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  RocCurve c;
  c.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double t = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == t; ++i) (labels[order[i]] ? tp : fp) += 1;
    c.points.push_back({t, static_cast<double>(fp) / static_cast<double>(neg),
                        static_cast<double>(tp) / static_cast<double>(pos)});
  }
  for (std::size_t i = 1; i < c.points.size(); ++i)
    c.auc += (c.points[i].fpr - c.points[i - 1].fpr) * (c.points[i].tpr + c.points[i - 1].tpr) / 2.0;
  return c;
}

// ---------------------------------------------------------------------------
// Patient-level metrics

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Rates are nullopt where their denominator is zero.
struct PatientMetrics {
  std::string ae_id;
  ConfusionCounts counts;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> precision;
  std::optional<double> f1;
  std::optional<double> accuracy;
};

inline std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

inline PatientMetrics metrics_from_counts(std::string ae_id, const ConfusionCounts& c) {
  PatientMetrics m{std::move(ae_id), c, {}, {}, {}, {}, {}};
  m.sensitivity = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  m.precision = ratio(c.tp, c.tp + c.fp);
  // 2PS/(P+S) written over counts; defined whenever any positive exists
  m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  m.accuracy = ratio(c.tp + c.tn, c.total());
  return m;
}

/// Confusion counts over (patient, ae) pairs for one adverse event.
inline PatientMetrics patient_metrics(std::span<const PatientEvent> predicted, std::span<const PatientEvent> gold,
                                      std::span<const std::string> population, const std::string& ae_id) {
  const std::set<std::string> pop(population.begin(), population.end());
  auto positives = [&](std::span<const PatientEvent> events, const char* what) {
    std::set<std::string> ids;
    for (const auto& e : events) {
      if (e.ae_id != ae_id) continue;
      if (!pop.contains(e.patient_id))
        throw invariant_error(fmt::format("{} event for '{}' outside the evaluated population", what, e.patient_id));
      ids.insert(e.patient_id);
    }
    return ids;
  };
  const auto pred = positives(predicted, "predicted");
  const auto truth = positives(gold, "gold");
  ConfusionCounts c;
  for (const auto& id : pop) {
    const bool p = pred.contains(id), t = truth.contains(id);
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return metrics_from_counts(ae_id, c);
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const PatientMetrics& m) {
  return {{"ae_id", m.ae_id},
          {"tp", m.counts.tp},
          {"fp", m.counts.fp},
          {"fn", m.counts.fn},
          {"tn", m.counts.tn},
          {"sensitivity", optional_json(m.sensitivity)},
          {"specificity", optional_json(m.specificity)},
          {"precision", optional_json(m.precision)},
          {"f1", optional_json(m.f1)},
          {"accuracy", optional_json(m.accuracy)}};
}

// ---------------------------------------------------------------------------
// Stage-1 recall audit

/// A manually annotated adverse-event mention at a token position.
struct GoldMention {
  std::string note_id;
  std::size_t token_index = 0;
  std::string ae_id;

  auto operator<=>(const GoldMention&) const = default;
};

struct RecallAudit {
  std::size_t detected = 0;
  std::size_t total = 0;
  std::vector<GoldMention> missed;

  std::optional<double> recall() const { return ratio(detected, total); }
};

/// Share of annotated mentions for which the scanner emits a candidate at the
/// same token for the same adverse event.
inline RecallAudit stage1_recall_audit(std::span<const ClinicalNote> notes, std::span<const GoldMention> gold,
                                       const Lexicon& lexicon, const MatchConfig& config = {}) {
  const Scanner scanner(lexicon, config);
  std::set<GoldMention> found;
  for (const auto& n : notes)
    for (const auto& c : scanner.scan(tokenize(n))) found.insert({c.note_id, c.token_index, c.ae_id});
  RecallAudit audit;
  audit.total = gold.size();
  for (const auto& g : gold) {
    if (found.contains(g))
      ++audit.detected;
    else
      audit.missed.push_back(g);
  }
  return audit;
}

}  // namespace irae

#endif
