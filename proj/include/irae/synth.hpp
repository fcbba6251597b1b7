#ifndef IRAE_SYNTH_HPP
#define IRAE_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "irae/aggregate.hpp"
#include "irae/corpus.hpp"
#include "irae/eval.hpp"
#include "irae/matcher.hpp"
#include "irae/outcomes.hpp"
#include "irae/rng.hpp"

namespace irae {

// Synthetic EMR corpora with gold labels at mention, note, patient and
// outcome level. Text is template-based: each adverse-event mention is a
// short phrase around the (possibly misspelled) term, surrounded by filler
// sentences.

struct TemplateFamilies {
  std::vector<std::string> affirmative;  // patient has the event, attributed to the ICI
  std::vector<std::string> negation;     // event absent
  std::vector<std::string> attribution;  // event present but caused by something else
  std::vector<std::string> shared;       // uninformative; used by both classes

  static TemplateFamilies defaults() {
    return {
        {"diagnosed with {X} on immunotherapy", "findings consistent with immune related {X}",
         "developed {X} grade 2 after last cycle", "imaging confirms {X} likely immune mediated",
         "admitted for {X} started steroids", "clinical picture of {X} related to checkpoint inhibitor",
         "treated for immune {X} this week", "{X} secondary to immunotherapy",
         "ongoing {X} attributed to nivolumab", "new {X} during pembrolizumab treatment"},
        {"no evidence of {X}", "{X} was ruled out", "negative for {X}", "no signs of {X} on exam",
         "denies symptoms suggestive of {X}", "without clinical {X}", "low suspicion for {X} at present"},
        {"{X} secondary to radiation", "radiation induced {X}", "{X} due to bacterial infection",
         "{X} attributed to prior chemotherapy", "history of {X} before immunotherapy",
         "{X} related to radiotherapy field", "known viral {X} from years ago"},
        {"discussed {X} with patient", "assessment for {X} today", "follow up regarding {X}",
         "question of {X} raised", "{X} workup reviewed", "team aware of possible {X}"},
    };
  }
};

inline std::vector<std::string> default_filler() {
  std::istringstream words(
      "patient seen in clinic today reports good appetite mild fatigue stable weight blood pressure normal "
      "heart rate regular lungs clear abdomen soft labs reviewed hemoglobin platelets creatinine within range "
      "plan continue current treatment next cycle scheduled scan shows partial response tumor burden decreased "
      "family present questions answered medications reconciled pain controlled sleeping well walking "
      "independently nurse performance status oxygen saturation room air temperature afebrile nausea resolved "
      "bowel movements urine output adequate visit weeks comfortable tolerating infusion without delay "
      "counseling provided appointment booked vitals recorded exam unremarkable");
  std::vector<std::string> out;
  for (std::string w; words >> w;) out.push_back(w);
  return out;
}

struct SynthConfig {
  std::uint64_t seed = 20240601;
  std::size_t n_patients = 1000;
  double notes_mean = 20.0;
  double notes_dispersion = 0.5;  // note count uniform in mean * [1 - d, 1 + d]
  std::vector<std::string> regimens = default_regimens();
  std::vector<double> regimen_weights{122, 11, 58, 926, 424, 94};
  std::vector<std::string> ae_ids = default_adverse_events();
  std::vector<std::string> ae_terms{"pneumonitis", "hepatitis", "thyroiditis", "colitis",
                                    "myocarditis", "dermatitis", "myasthenia"};
  std::vector<double> prevalence{0.12, 0.07, 0.09, 0.07, 0.06, 0.07, 0.05};
  double misspelling_rate = 0.15;
  int max_edit_distance = 2;
  double distractor_rate = 0.3;     // per note, one negated or attributed mention
  double difficulty = 0.5;          // share of negative mentions drawn from the shared family
  double shared_positive_ratio = 0.4;  // positives use the shared family at difficulty * ratio
  double steroid_probability = 0.33;
  int steroid_window_days = 14;  // where treated events get their qualifying dose
  double discontinuation_probability = 0.2;
  int min_token_length = 4;
  std::string start_date = "2015-01-01";
  int enrollment_days = 2000;
  TemplateFamilies templates = TemplateFamilies::defaults();
  std::vector<std::string> filler = default_filler();

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw config_error(fmt::format("synth.{} must be in [0,1]", name));
    };
    for (double p : prevalence) prob(p, "prevalence");
    prob(misspelling_rate, "misspelling_rate");
    prob(distractor_rate, "distractor_rate");
    prob(difficulty, "difficulty");
    prob(shared_positive_ratio, "shared_positive_ratio");
    prob(steroid_probability, "steroid_probability");
    prob(discontinuation_probability, "discontinuation_probability");
    if (max_edit_distance < 0) throw config_error("synth.max_edit_distance must be >= 0");
    if (!(notes_dispersion >= 0.0 && notes_dispersion <= 1.0))
      throw config_error("synth.notes_dispersion must be in [0,1]");
    if (ae_ids.size() != ae_terms.size() || ae_ids.size() != prevalence.size() || ae_ids.empty())
      throw config_error("synth: ae_ids, ae_terms and prevalence must have the same non-zero length");
    if (regimens.size() != regimen_weights.size() || regimens.empty())
      throw config_error("synth: regimens and regimen_weights must have the same non-zero length");
    for (const auto& t : ae_terms)
      if (static_cast<int>(utf8::length(t)) <= max_edit_distance)
        throw config_error(fmt::format("synth: term '{}' is not longer than max_edit_distance", t));
    if (!Date::parse(start_date)) throw config_error("synth.start_date must be YYYY-MM-DD");
    if (enrollment_days < 0) throw config_error("synth.enrollment_days must be >= 0");
    if (steroid_window_days < 7) throw config_error("synth.steroid_window_days must be >= 7");
    const bool any_events = std::any_of(prevalence.begin(), prevalence.end(), [](double p) { return p > 0.0; });
    if (any_events && n_patients > 0 && !(notes_mean >= 1.0))
      throw config_error("synth: positive prevalence needs notes_mean >= 1");
    if (filler.empty()) throw config_error("synth: filler vocabulary is empty");
    for (const auto* family : {&templates.affirmative, &templates.negation, &templates.attribution, &templates.shared}) {
      if (family->empty()) throw config_error("synth: every template family needs at least one template");
      for (const auto& t : *family)
        if (t.find("{X}") == std::string::npos) throw config_error(fmt::format("synth: template '{}' has no {{X}}", t));
    }
  }
};

enum class MentionFamily { affirmative, negation, attribution, shared };

inline std::string_view to_string(MentionFamily f) {
  switch (f) {
    case MentionFamily::affirmative: return "affirmative";
    case MentionFamily::negation: return "negation";
    case MentionFamily::attribution: return "attribution";
    case MentionFamily::shared: return "shared";
  }
  return "shared";
}

struct GoldMentionLabel {
  std::string note_id;
  std::string patient_id;
  std::size_t token_index = 0;
  std::string ae_id;
  bool positive = false;
  MentionFamily family = MentionFamily::shared;
  std::string term;
  std::string surface;
};

struct GoldEvent {
  PatientEvent event;
  bool steroid_treated = false;
  bool discontinued = false;
};

struct GoldLabels {
  std::vector<GoldMentionLabel> mentions;
  std::vector<std::pair<std::string, std::string>> positive_notes;  // (note_id, ae_id), sorted
  std::vector<GoldEvent> events;  // sorted by (patient_id, ae_id)

  std::vector<PatientEvent> patient_events() const {
    std::vector<PatientEvent> out;
    for (const auto& e : events) out.push_back(e.event);
    return out;
  }
};

struct SyntheticCorpus {
  std::vector<Patient> patients;
  std::vector<ClinicalNote> notes;
  std::vector<PrescriptionRecord> prescriptions;
  GoldLabels gold;
};

/// 1..max_distance random single-character edits with lowercase ASCII
/// letters. Never returns the input and never shrinks below
/// min_token_length scalar values.
inline std::string corrupt_term(std::string_view term, int max_distance, Rng& rng, int min_token_length = 4) {
  if (max_distance < 1) throw data_error("corrupt_term: max_distance must be >= 1");
  const std::u32string original = utf8::decode(term);
  if (static_cast<int>(original.size()) <= max_distance)
    throw data_error(fmt::format("corrupt_term: '{}' is not longer than max_distance", term));
  const auto letter = [&] { return static_cast<char32_t>('a' + rng.below(26)); };
  for (;;) {
    std::u32string s = original;
    const int edits = static_cast<int>(rng.between(1, max_distance));
    for (int e = 0; e < edits; ++e) {
      const auto op = rng.below(3);
      if (op == 0 && static_cast<int>(s.size()) > min_token_length) {
        s.erase(rng.below(s.size()), 1);
      } else if (op == 1) {
        s.insert(s.begin() + static_cast<std::ptrdiff_t>(rng.below(s.size() + 1)), letter());
      } else {
        const auto pos = rng.below(s.size());
        char32_t c = letter();
        while (c == s[pos]) c = letter();
        s[pos] = c;
      }
    }
    if (s != original) return utf8::encode(s);
  }
}

namespace detail {

/// Builds note text sentence by sentence, tracking token positions.
class NoteText {
 public:
  struct Placed {
    std::size_t sentence;
    std::size_t word;
  };

  void filler_sentence(Rng& rng, const std::vector<std::string>& vocab) {
    std::vector<std::string> words;
    const auto n = rng.between(4, 10);
    for (std::int64_t i = 0; i < n; ++i) words.push_back(rng.pick(vocab));
    sentences_.push_back(std::move(words));
  }

  /// Adds a template sentence with {X} replaced; returns where the term sits.
  Placed mention_sentence(const std::string& tmpl, const std::string& surface) {
    std::vector<std::string> words;
    std::size_t at = 0;
    std::istringstream in(tmpl);
    for (std::string w; in >> w;) {
      if (w == "{X}") {
        at = words.size();
        words.push_back(surface);
      } else {
        words.push_back(w);
      }
    }
    sentences_.push_back(std::move(words));
    return {sentences_.size() - 1, at};
  }

  /// Randomizes sentence order, joins with spaces and ends sentences with
  /// periods. Returns the text and the token index of every mention.
  std::pair<std::string, std::vector<std::size_t>> render(Rng& rng, const std::vector<Placed>& mentions) {
    std::vector<std::size_t> order(sentences_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::size_t> start(sentences_.size());
    std::string text;
    std::size_t tokens = 0;
    for (std::size_t s : order) {
      start[s] = tokens;
      const auto& words = sentences_[s];
      for (std::size_t w = 0; w < words.size(); ++w) {
        if (!text.empty()) text.push_back(' ');
        text += words[w];
        if (w + 1 == words.size()) text.push_back('.');
      }
      tokens += words.size();
    }
    std::vector<std::size_t> idx;
    for (const auto& m : mentions) idx.push_back(start[m.sentence] + m.word);
    return {std::move(text), std::move(idx)};
  }

 private:
  std::vector<std::vector<std::string>> sentences_;
};

struct PlannedMention {
  std::size_t ae;
  bool positive;
  MentionFamily family;
  std::string surface;
  NoteText::Placed placed;
};

struct PlannedNote {
  Date date;
  std::string source;
  NoteText text;
  std::vector<PlannedMention> mentions;
};

inline int dosing_interval(const std::string& regimen) {
  return regimen == "nivolumab" || regimen == "avelumab" || regimen == "durvalumab" ? 14 : 21;
}

inline std::vector<std::string> regimen_drugs(const std::string& regimen) {
  if (regimen == "ipilimumab_nivolumab") return {"ipilimumab", "nivolumab"};
  return {regimen};
}

}  // namespace detail

/// Adds one mention of ae `a` to a planned note.
inline void plan_mention(detail::PlannedNote& note, std::size_t a, bool positive, const SynthConfig& cfg, Rng& rng) {
  MentionFamily family;
  const double shared_rate = positive ? cfg.difficulty * cfg.shared_positive_ratio : cfg.difficulty;
  if (rng.bernoulli(shared_rate))
    family = MentionFamily::shared;
  else if (positive)
    family = MentionFamily::affirmative;
  else
    family = rng.bernoulli(0.5) ? MentionFamily::negation : MentionFamily::attribution;
  const auto& pool = family == MentionFamily::affirmative ? cfg.templates.affirmative
                     : family == MentionFamily::negation  ? cfg.templates.negation
                     : family == MentionFamily::attribution ? cfg.templates.attribution
                                                            : cfg.templates.shared;
  std::string surface = cfg.ae_terms[a];
  if (cfg.max_edit_distance > 0 && rng.bernoulli(cfg.misspelling_rate))
    surface = corrupt_term(surface, cfg.max_edit_distance, rng, cfg.min_token_length);
  const auto placed = note.text.mention_sentence(rng.pick(pool), surface);
  note.mentions.push_back({a, positive, family, std::move(surface), placed});
}

inline SyntheticCorpus generate(const SynthConfig& cfg) {
  cfg.validate();
  SyntheticCorpus out;
  const Date start = Date::parse_or_throw(cfg.start_date);
  const std::vector<std::string> sources{"clinic", "clinic", "clinic", "admission", "discharge"};
  const std::vector<std::string> malignancies{"melanoma", "nsclc", "rcc", "urothelial", "hnscc", "other"};
  std::size_t note_counter = 0;

  for (std::size_t k = 0; k < cfg.n_patients; ++k) {
    Rng rng(derive_seed(cfg.seed, k));
    Patient patient;
    patient.patient_id = fmt::format("P{:06d}", k + 1);
    patient.regimen = cfg.regimens[rng.weighted(cfg.regimen_weights)];
    patient.age = static_cast<int>(rng.between(35, 88));
    patient.sex = rng.bernoulli(0.5) ? Sex::female : Sex::male;
    patient.malignancy = rng.pick(malignancies);

    // dosing schedule, as day offsets from the first administration
    const int interval = detail::dosing_interval(patient.regimen);
    const Date first = start + static_cast<int>(rng.between(0, cfg.enrollment_days));
    std::vector<int> doses;
    const auto cycles = rng.between(3, 24);
    for (std::int64_t c = 0; c < cycles; ++c) doses.push_back(static_cast<int>(c) * interval);

    // events and onsets
    std::vector<std::pair<int, std::size_t>> onsets;  // (onset offset, ae)
    for (std::size_t a = 0; a < cfg.ae_ids.size(); ++a)
      if (rng.bernoulli(cfg.prevalence[a]))
        onsets.push_back({static_cast<int>(rng.between(7, doses.back() + 30)), a});
    std::sort(onsets.begin(), onsets.end());
    if (!onsets.empty() && rng.bernoulli(cfg.discontinuation_probability)) {
      const int stop = onsets.front().first;
      while (doses.size() > 1 && doses.back() > stop) doses.pop_back();
      for (auto& [onset, a] : onsets)
        if (onset > doses.back() + 30) onset = static_cast<int>(rng.between(7, doses.back() + 30));
      std::sort(onsets.begin(), onsets.end());
    }
    const int end = doses.back() + 90;

    std::vector<detail::PlannedNote> notes;
    const double lo = std::round(cfg.notes_mean * (1.0 - cfg.notes_dispersion));
    const double hi = std::round(cfg.notes_mean * (1.0 + cfg.notes_dispersion));
    const auto n_general = std::max<std::int64_t>(1, rng.between(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
    for (std::int64_t i = 0; i < n_general; ++i)
      notes.push_back({first + static_cast<int>(rng.between(0, end)), rng.pick(sources), {}, {}});

    for (const auto& [onset, a] : onsets) {
      detail::PlannedNote onset_note{first + onset, "admission", {}, {}};
      plan_mention(onset_note, a, true, cfg, rng);
      plan_mention(onset_note, a, true, cfg, rng);
      notes.push_back(std::move(onset_note));
      const auto extra = rng.between(2, 3);
      for (std::int64_t i = 0; i < extra; ++i) {
        detail::PlannedNote later{first + onset + static_cast<int>(rng.between(1, 60)), "clinic", {}, {}};
        const auto m = rng.between(1, 2);
        for (std::int64_t j = 0; j < m; ++j) plan_mention(later, a, true, cfg, rng);
        notes.push_back(std::move(later));
      }
    }

    for (auto& note : notes) {
      const auto n_filler = rng.between(3, 7);
      for (std::int64_t i = 0; i < n_filler; ++i) note.text.filler_sentence(rng, cfg.filler);
      if (rng.bernoulli(cfg.distractor_rate)) {
        std::vector<double> w = cfg.prevalence;
        for (const auto& m : note.mentions) w[m.ae] = 0.0;
        if (std::any_of(w.begin(), w.end(), [](double x) { return x > 0.0; }))
          plan_mention(note, rng.weighted(w), false, cfg, rng);
      }
    }

    std::stable_sort(notes.begin(), notes.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
    std::map<std::size_t, std::vector<std::string>> positive_by_ae;
    for (auto& note : notes) {
      ClinicalNote cn{fmt::format("N{:08d}", ++note_counter), patient.patient_id, note.date, note.source, {}};
      std::vector<detail::NoteText::Placed> places;
      for (const auto& m : note.mentions) places.push_back(m.placed);
      auto [text, idx] = note.text.render(rng, places);
      cn.text = std::move(text);
      std::set<std::size_t> positive_here;
      for (std::size_t i = 0; i < note.mentions.size(); ++i) {
        const auto& m = note.mentions[i];
        out.gold.mentions.push_back({cn.note_id, patient.patient_id, idx[i], cfg.ae_ids[m.ae], m.positive, m.family,
                                     cfg.ae_terms[m.ae], m.surface});
        if (m.positive) positive_here.insert(m.ae);
      }
      for (std::size_t a : positive_here) {
        out.gold.positive_notes.push_back({cn.note_id, cfg.ae_ids[a]});
        positive_by_ae[a].push_back(cn.note_id);
      }
      out.notes.push_back(std::move(cn));
    }

    // prescriptions
    std::vector<PrescriptionRecord> rx;
    for (int d : doses)
      for (const auto& drug : detail::regimen_drugs(patient.regimen))
        rx.push_back({patient.patient_id, drug, DrugClass::ici, std::nullopt, first + d});
    auto dose1 = [&](double lo_d, double hi_d) { return std::round(rng.uniform(lo_d, hi_d) * 10.0) / 10.0; };
    std::vector<char> treat(onsets.size());
    for (auto& t : treat) t = rng.bernoulli(cfg.steroid_probability);
    // qualifying doses are kept out of the windows of events meant to stay untreated
    auto place = [&](int lo, int hi) {
      std::vector<int> ok;
      for (int d = lo; d <= hi; ++d) {
        bool clear = true;
        for (std::size_t j = 0; j < onsets.size(); ++j)
          clear = clear && (treat[j] || d < onsets[j].first || d > onsets[j].first + cfg.steroid_window_days);
        if (clear) ok.push_back(d);
      }
      return first + (ok.empty() ? static_cast<int>(rng.between(lo, hi)) : rng.pick(ok));
    };
    for (std::size_t i = 0; i < onsets.size(); ++i) {
      const int onset = onsets[i].first;
      const std::string drug = rng.bernoulli(0.7) ? "prednisone" : "methylprednisolone";
      if (treat[i]) {
        rx.push_back({patient.patient_id, drug, DrugClass::corticosteroid, dose1(1.0, 2.0), place(onset, onset + 7)});
      } else if (rng.bernoulli(0.5)) {
        if (rng.bernoulli(0.5))
          rx.push_back({patient.patient_id, drug, DrugClass::corticosteroid, dose1(0.2, 0.8),
                        first + onset + static_cast<int>(rng.between(0, 10))});
        else
          rx.push_back({patient.patient_id, drug, DrugClass::corticosteroid, dose1(1.0, 2.0),
                        place(onset + cfg.steroid_window_days + 6, onset + cfg.steroid_window_days + 31)});
      }
    }
    if (rng.bernoulli(0.3))
      rx.push_back({patient.patient_id, "dexamethasone", DrugClass::corticosteroid, dose1(0.1, 0.2),
                    first + doses[rng.below(doses.size())]});
    if (rng.bernoulli(0.4))
      rx.push_back({patient.patient_id, "ondansetron", DrugClass::other, std::nullopt,
                    first + static_cast<int>(rng.between(0, end))});
    std::stable_sort(rx.begin(), rx.end(), [](const auto& a, const auto& b) { return a.date < b.date; });

    // gold events, outcome truth by the same rules the pipeline applies
    std::vector<Date> ici_dates;
    for (int d : doses) ici_dates.push_back(first + d);
    for (auto& [a, ids] : positive_by_ae) {
      if (ids.size() < 2) continue;
      PatientEvent e{patient.patient_id, cfg.ae_ids[a], {}, ids};
      for (const auto& n : out.notes)
        if (n.note_id == ids.front()) e.onset_date = n.date;
      GoldEvent g{e, steroid_followup(e, rx).treated, discontinuation(e, ici_dates).discontinued};
      out.gold.events.push_back(std::move(g));
    }

    out.patients.push_back(std::move(patient));
    for (auto& r : rx) out.prescriptions.push_back(std::move(r));
  }

  std::sort(out.gold.positive_notes.begin(), out.gold.positive_notes.end());
  std::sort(out.gold.events.begin(), out.gold.events.end(), [](const GoldEvent& a, const GoldEvent& b) {
    return std::tie(a.event.patient_id, a.event.ae_id) < std::tie(b.event.patient_id, b.event.ae_id);
  });
  return out;
}

/// Audit sample: n_notes filler notes, n_mentions of which carry one
/// adverse-event mention misspelled with 1..max_distance edits.
struct AuditSample {
  std::vector<ClinicalNote> notes;
  std::vector<GoldMention> mentions;
  std::vector<std::string> surfaces;  // parallel to mentions
};

inline AuditSample generate_audit_sample(const SynthConfig& cfg, std::size_t n_notes, std::size_t n_mentions,
                                         int max_distance) {
  cfg.validate();
  if (n_mentions > n_notes) throw config_error("audit sample: more mentions than notes");
  Rng rng(derive_seed(cfg.seed, 0xA0D17));
  std::vector<std::size_t> order(n_notes);
  for (std::size_t i = 0; i < n_notes; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<char> with_mention(n_notes, 0);
  for (std::size_t i = 0; i < n_mentions; ++i) with_mention[order[i]] = 1;

  AuditSample s;
  const Date start = Date::parse_or_throw(cfg.start_date);
  std::vector<std::string> pool;
  for (const auto* fam : {&cfg.templates.affirmative, &cfg.templates.negation, &cfg.templates.attribution,
                          &cfg.templates.shared})
    pool.insert(pool.end(), fam->begin(), fam->end());
  for (std::size_t i = 0; i < n_notes; ++i) {
    detail::NoteText text;
    const auto n_filler = rng.between(3, 7);
    for (std::int64_t f = 0; f < n_filler; ++f) text.filler_sentence(rng, cfg.filler);
    std::vector<detail::NoteText::Placed> places;
    std::size_t a = 0;
    std::string surface;
    if (with_mention[i]) {
      a = rng.below(cfg.ae_ids.size());
      surface = max_distance > 0 ? corrupt_term(cfg.ae_terms[a], max_distance, rng, cfg.min_token_length)
                                 : cfg.ae_terms[a];
      places.push_back(text.mention_sentence(rng.pick(pool), surface));
    }
    auto [body, idx] = text.render(rng, places);
    ClinicalNote note{fmt::format("A{:06d}", i + 1), fmt::format("AP{:05d}", i % 997 + 1),
                      start + static_cast<int>(rng.between(0, cfg.enrollment_days)), "clinic", std::move(body)};
    if (with_mention[i]) {
      s.mentions.push_back({note.note_id, idx.front(), cfg.ae_ids[a]});
      s.surfaces.push_back(surface);
    }
    s.notes.push_back(std::move(note));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Gold label files

inline json to_json(const GoldMentionLabel& m) {
  return {{"note_id", m.note_id}, {"patient_id", m.patient_id}, {"token_index", m.token_index},
          {"ae_id", m.ae_id},     {"label", m.positive ? 1 : 0}, {"family", std::string(to_string(m.family))},
          {"term", m.term},       {"surface", m.surface}};
}

inline GoldMentionLabel gold_mention_from_json(const json& j) {
  GoldMentionLabel m;
  m.note_id = j.at("note_id").get<std::string>();
  m.patient_id = j.at("patient_id").get<std::string>();
  m.token_index = j.at("token_index").get<std::size_t>();
  m.ae_id = j.at("ae_id").get<std::string>();
  m.positive = j.at("label").get<int>() == 1;
  const auto fam = j.value("family", std::string("shared"));
  m.family = fam == "affirmative" ? MentionFamily::affirmative
             : fam == "negation"  ? MentionFamily::negation
             : fam == "attribution" ? MentionFamily::attribution
                                    : MentionFamily::shared;
  m.term = j.value("term", std::string());
  m.surface = j.value("surface", std::string());
  return m;
}

inline json to_json(const GoldEvent& g) {
  json j = to_json(g.event);
  j["steroid_treated"] = g.steroid_treated;
  j["discontinued"] = g.discontinued;
  return j;
}

inline GoldEvent gold_event_from_json(const json& j) {
  return {event_from_json(j), j.value("steroid_treated", false), j.value("discontinued", false)};
}

}  // namespace irae

#endif
