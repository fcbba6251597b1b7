#ifndef IRAE_AGGREGATE_HPP
#define IRAE_AGGREGATE_HPP

#include <algorithm>
#include <atomic>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <fmt/core.h>

#include "irae/classify.hpp"
#include "irae/corpus.hpp"
#include "irae/matcher.hpp"

namespace irae {

struct DecisionConfig {
  double probability_threshold = 0.5;
  int min_positive_notes = 2;

  void validate() const {
    if (!(probability_threshold > 0.0 && probability_threshold < 1.0))
      throw config_error("decision.probability_threshold must be in (0,1)");
    if (min_positive_notes < 1) throw config_error("decision.min_positive_notes must be >= 1");
  }
};

struct NoteVerdict {
  std::string note_id;
  std::string patient_id;
  Date date;
  std::string ae_id;
  bool positive = false;
  double max_probability = 0.0;
  std::size_t window_count = 0;

  bool operator==(const NoteVerdict&) const = default;
};

struct PatientEvent {
  std::string patient_id;
  std::string ae_id;
  Date onset_date;
  std::vector<std::string> supporting_note_ids;  // in (date, note_id) order

  bool operator==(const PatientEvent&) const = default;
};

inline json to_json(const PatientEvent& e) {
  return {{"patient_id", e.patient_id}, {"ae_id", e.ae_id}, {"onset_date", e.onset_date.str()},
          {"supporting_note_ids", e.supporting_note_ids}};
}

inline PatientEvent event_from_json(const json& j) {
  return {j.at("patient_id").get<std::string>(), j.at("ae_id").get<std::string>(),
          Date::parse_or_throw(j.at("onset_date").get<std::string>()),
          j.at("supporting_note_ids").get<std::vector<std::string>>()};
}

inline json to_json(const NoteVerdict& v) {
  return {{"note_id", v.note_id}, {"patient_id", v.patient_id}, {"date", v.date.str()}, {"ae_id", v.ae_id},
          {"positive", v.positive}, {"max_probability", v.max_probability}, {"window_count", v.window_count}};
}

/// A note is positive for an adverse event when any of its windows reaches
/// the threshold.
inline NoteVerdict classify_note(const ClinicalNote& note, std::string_view ae_id,
                                 std::span<const double> probabilities, const DecisionConfig& config = {}) {
  NoteVerdict v{note.note_id, note.patient_id, note.date, std::string(ae_id), false, 0.0, probabilities.size()};
  for (double p : probabilities) v.max_probability = std::max(v.max_probability, p);
  v.positive = !probabilities.empty() && v.max_probability >= config.probability_threshold;
  return v;
}

/// Emits an event when at least min_positive_notes notes are positive; the
/// onset is the date of the first positive note.
inline std::optional<PatientEvent> cluster_patient(std::span<const NoteVerdict> verdicts,
                                                   const DecisionConfig& config = {}) {
  std::vector<const NoteVerdict*> positives;
  for (const auto& v : verdicts) {
    if (v.patient_id != verdicts.front().patient_id || v.ae_id != verdicts.front().ae_id)
      throw invariant_error("cluster_patient expects verdicts for a single patient and adverse event");
    if (v.positive) positives.push_back(&v);
  }
  if (positives.size() < static_cast<std::size_t>(config.min_positive_notes)) return std::nullopt;
  std::sort(positives.begin(), positives.end(), [](const NoteVerdict* a, const NoteVerdict* b) {
    return std::tie(a->date, a->note_id) < std::tie(b->date, b->note_id);
  });
  PatientEvent e{positives.front()->patient_id, positives.front()->ae_id, positives.front()->date, {}};
  for (const auto* v : positives) e.supporting_note_ids.push_back(v->note_id);
  return e;
}

/// Probability assigned to one context window.
struct WindowScore {
  std::string note_id;
  std::string patient_id;
  Date date;
  std::string ae_id;
  std::size_t token_index = 0;
  double probability = 0.0;

  bool operator==(const WindowScore&) const = default;
};

struct Aggregation {
  std::vector<NoteVerdict> verdicts;  // one per (note, ae) with at least one window
  std::vector<PatientEvent> events;   // sorted by (patient_id, ae_id, onset_date)
};

/// Note verdicts and patient events from window scores, in any input order.
inline Aggregation aggregate_scores(std::vector<WindowScore> scores, const DecisionConfig& config = {}) {
  config.validate();
  std::sort(scores.begin(), scores.end(), [](const WindowScore& a, const WindowScore& b) {
    return std::tie(a.patient_id, a.date, a.note_id, a.ae_id, a.token_index) <
           std::tie(b.patient_id, b.date, b.note_id, b.ae_id, b.token_index);
  });
  Aggregation out;
  std::vector<double> probs;
  for (std::size_t i = 0; i < scores.size();) {
    std::size_t j = i;
    probs.clear();
    while (j < scores.size() && scores[j].note_id == scores[i].note_id && scores[j].ae_id == scores[i].ae_id)
      probs.push_back(scores[j++].probability);
    ClinicalNote ref{scores[i].note_id, scores[i].patient_id, scores[i].date, {}, {}};
    out.verdicts.push_back(classify_note(ref, scores[i].ae_id, probs, config));
    i = j;
  }

  // group by (patient, ae); verdicts are already in (patient, date, note) order
  std::vector<const NoteVerdict*> order;
  for (const auto& v : out.verdicts) order.push_back(&v);
  std::stable_sort(order.begin(), order.end(), [](const NoteVerdict* a, const NoteVerdict* b) {
    return std::tie(a->patient_id, a->ae_id) < std::tie(b->patient_id, b->ae_id);
  });
  std::vector<NoteVerdict> group;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    group.clear();
    while (j < order.size() && order[j]->patient_id == order[i]->patient_id && order[j]->ae_id == order[i]->ae_id)
      group.push_back(*order[j++]);
    if (auto e = cluster_patient(group, config)) out.events.push_back(std::move(*e));
    i = j;
  }
  return out;
}

struct ScoredWindow {
  ContextWindow window;
  Date date;
  double similarity = 0.0;
  double probability = 0.0;
  std::vector<double> member_probabilities;
};

inline json to_json(const ScoredWindow& w) {
  json j = to_json(w.window);
  j["date"] = w.date.str();
  j["similarity"] = w.similarity;
  j["probability"] = w.probability;
  j["member_probabilities"] = w.member_probabilities;
  return j;
}

struct PipelineResult {
  std::size_t notes_scanned = 0;
  std::vector<MentionCandidate> candidates;
  std::vector<ScoredWindow> windows;  // parallel to candidates
  std::vector<NoteVerdict> verdicts;
  std::vector<PatientEvent> events;
};

/// Runs `work(i)` for i in [0, n) on up to `threads` threads.
template <class Work>
void parallel_for(std::size_t n, int threads, Work&& work) {
  const std::size_t t = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(n, 1));
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t k = 0; k < t; ++k)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) work(i);
    });
}

struct NoteScan {
  std::vector<MentionCandidate> candidates;
  std::vector<ScoredWindow> windows;
};

/// Stage 1 and 2 for one note: fuzzy scan, windows, ensemble probabilities.
/// With an empty ensemble the windows are left unscored.
inline NoteScan scan_and_score(const ClinicalNote& note, const Scanner& scanner, const EnsembleModel& ensemble) {
  NoteScan out;
  const TokenizedNote tokenized = tokenize(note);
  out.candidates = scanner.scan(tokenized);
  for (const auto& c : out.candidates) {
    ScoredWindow w{extract_window(tokenized, c, scanner.config()), note.date, c.similarity, 0.0, {}};
    if (!ensemble.members.empty()) {
      double sum = 0.0;
      for (const auto& m : ensemble.members) {
        w.member_probabilities.push_back(predict_proba(m, w.window));
        sum += w.member_probabilities.back();
      }
      w.probability = sum / static_cast<double>(ensemble.members.size());
    }
    out.windows.push_back(std::move(w));
  }
  return out;
}

/// scan -> window -> predict -> classify_note -> cluster_patient over every
/// in-window note of the cohort. Output does not depend on `threads`.
inline PipelineResult run_pipeline(const Cohort& cohort, const Lexicon& lexicon, const EnsembleModel& ensemble,
                                   const MatchConfig& match = {}, const DecisionConfig& decision = {},
                                   int threads = 1) {
  if (ensemble.members.empty()) throw invariant_error("run_pipeline needs a fitted ensemble");
  decision.validate();
  const Scanner scanner(lexicon, match);
  std::vector<const ClinicalNote*> notes;
  for (const auto& p : cohort.patients)
    for (const auto& n : p.notes) notes.push_back(&n);

  std::vector<NoteScan> per_note(notes.size());
  parallel_for(notes.size(), threads, [&](std::size_t i) { per_note[i] = scan_and_score(*notes[i], scanner, ensemble); });

  PipelineResult result;
  result.notes_scanned = notes.size();
  std::vector<WindowScore> scores;
  for (auto& s : per_note) {
    for (std::size_t k = 0; k < s.candidates.size(); ++k) {
      const auto& w = s.windows[k];
      scores.push_back({w.window.note_id, w.window.patient_id, w.date, w.window.ae_id, w.window.token_index,
                        w.probability});
      result.candidates.push_back(std::move(s.candidates[k]));
      result.windows.push_back(std::move(s.windows[k]));
    }
  }
  auto agg = aggregate_scores(std::move(scores), decision);
  result.verdicts = std::move(agg.verdicts);
  result.events = std::move(agg.events);
  return result;
}

}  // namespace irae

#endif
