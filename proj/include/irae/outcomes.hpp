#ifndef IRAE_OUTCOMES_HPP
#define IRAE_OUTCOMES_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fmt/core.h>

#include "irae/aggregate.hpp"
#include "irae/corpus.hpp"

namespace irae {

// ---------------------------------------------------------------------------
// Corticosteroid follow-up

struct SteroidConfig {
  int window_days = 14;
  double min_dose = 1.0;
  double max_dose = 2.0;
  bool open_upper = false;  // treat any dose >= min_dose as qualifying
  std::vector<std::string> drugs{"prednisone", "methylprednisolone"};

  void validate() const {
    if (window_days < 0) throw config_error("outcomes.steroid_window_days must be >= 0");
    if (!(min_dose >= 0.0) || (!open_upper && !(max_dose >= min_dose)))
      throw config_error("outcomes steroid dose range must satisfy 0 <= min_dose <= max_dose");
    if (drugs.empty()) throw config_error("outcomes.steroid_drugs must not be empty");
  }
};

struct SteroidFinding {
  PatientEvent event;
  bool treated = false;
  std::vector<PrescriptionRecord> matching;
};

/// Treated when a configured high-dose corticosteroid with a dose in range is
/// dated within [onset, onset + window_days].
inline SteroidFinding steroid_followup(const PatientEvent& event, std::span<const PrescriptionRecord> prescriptions,
                                       const SteroidConfig& config = {}) {
  SteroidFinding f{event, false, {}};
  for (const auto& r : prescriptions) {
    if (r.patient_id != event.patient_id || r.drug_class != DrugClass::corticosteroid || !r.dose_mg_per_kg_day)
      continue;
    if (std::find(config.drugs.begin(), config.drugs.end(), utf8::fold(r.drug_name)) == config.drugs.end()) continue;
    const double dose = *r.dose_mg_per_kg_day;
    if (dose < config.min_dose || (!config.open_upper && dose > config.max_dose)) continue;
    if (r.date < event.onset_date || r.date > event.onset_date + config.window_days) continue;
    f.matching.push_back(r);
  }
  f.treated = !f.matching.empty();
  return f;
}

// ---------------------------------------------------------------------------
// ICI discontinuation

struct DiscontinuationFinding {
  PatientEvent event;
  bool discontinued = false;
  std::optional<Date> last_dose_date;             // latest dose on or before onset
  std::optional<Date> first_post_onset_dose_date;
};

/// Discontinued when the latest dose on or before onset lies within
/// lookback_days of it and no dose follows the onset.
inline DiscontinuationFinding discontinuation(const PatientEvent& event, std::span<const Date> ici_dates,
                                              int lookback_days = 30) {
  if (ici_dates.empty())
    throw invariant_error(fmt::format("patient '{}' has no ICI administrations", event.patient_id));
  DiscontinuationFinding f{event, false, std::nullopt, std::nullopt};
  for (Date d : ici_dates) {
    if (d <= event.onset_date) {
      if (!f.last_dose_date || d > *f.last_dose_date) f.last_dose_date = d;
    } else if (!f.first_post_onset_dose_date || d < *f.first_post_onset_dose_date) {
      f.first_post_onset_dose_date = d;
    }
  }
  f.discontinued = f.last_dose_date && *f.last_dose_date >= event.onset_date - lookback_days &&
                   !f.first_post_onset_dose_date;
  return f;
}

// ---------------------------------------------------------------------------
// Kaplan-Meier

struct SurvivalObservation {
  int time_days = 0;
  bool event = false;  // false: censored
};

struct SurvivalStep {
  int time_days = 0;
  double survival = 1.0;
  std::size_t at_risk = 0;
  std::size_t events = 0;
};

struct CensorMark {
  int time_days = 0;
  double survival = 1.0;
  std::size_t at_risk = 0;
};

struct SurvivalCurve {
  std::string regimen;  // "all" when not filtered
  std::string ae_id;    // "any" when pooled
  std::size_t n_patients = 0;
  std::vector<SurvivalStep> steps;  // one per distinct event time
  std::vector<CensorMark> censored;

  /// Right-continuous step function, S(t) = 1 before the first event.
  double at(double t) const {
    double s = 1.0;
    for (const auto& step : steps) {
      if (step.time_days > t) break;
      s = step.survival;
    }
    return s;
  }
};

/// Product-limit estimate. Subjects censored at an event time are still at
/// risk at that time.
inline SurvivalCurve product_limit(std::vector<SurvivalObservation> obs) {
  std::sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) {
    return a.time_days != b.time_days ? a.time_days < b.time_days : a.event > b.event;
  });
  SurvivalCurve curve;
  curve.n_patients = obs.size();
  double s = 1.0;
  std::size_t at_risk = obs.size();
  for (std::size_t i = 0; i < obs.size();) {
    const int t = obs[i].time_days;
    std::size_t d = 0, c = 0;
    for (; i < obs.size() && obs[i].time_days == t; ++i) (obs[i].event ? d : c) += 1;
    if (d > 0) {
      s *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
      curve.steps.push_back({t, s, at_risk, d});
    }
    for (std::size_t k = 0; k < c; ++k) curve.censored.push_back({t, s, at_risk});
    at_risk -= d + c;
  }
  return curve;
}

/// IrAE-free survival from the first ICI administration. Event-free patients
/// are censored at min(follow-up end, last note date). A pooled curve (no
/// ae filter) uses each patient's earliest event.
inline SurvivalCurve km_estimate(const Cohort& cohort, std::span<const PatientEvent> events,
                                 const std::optional<std::string>& regimen = std::nullopt,
                                 const std::optional<std::string>& ae_id = std::nullopt) {
  std::map<std::string, Date> first_onset;
  for (const auto& e : events) {
    if (!cohort.find(e.patient_id))
      throw invariant_error(fmt::format("event for patient '{}' outside the cohort", e.patient_id));
    if (ae_id && e.ae_id != *ae_id) continue;
    auto [it, fresh] = first_onset.emplace(e.patient_id, e.onset_date);
    if (!fresh && e.onset_date < it->second) it->second = e.onset_date;
  }
  std::vector<SurvivalObservation> obs;
  for (const auto& p : cohort.patients) {
    if (regimen && p.patient.regimen != *regimen) continue;
    if (auto it = first_onset.find(p.patient.patient_id); it != first_onset.end())
      obs.push_back({it->second - p.followup_start, true});
    else
      obs.push_back({std::min(p.followup_end, p.last_observation()) - p.followup_start, false});
  }
  if (obs.empty()) throw data_error("km_estimate: no patients match the filter");
  auto curve = product_limit(std::move(obs));
  curve.regimen = regimen.value_or("all");
  curve.ae_id = ae_id.value_or("any");
  return curve;
}

// ---------------------------------------------------------------------------
// Tables

struct RateCell {
  std::size_t events = 0;
  std::size_t flagged = 0;

  std::optional<double> rate() const {
    if (events == 0) return std::nullopt;
    return static_cast<double>(flagged) / static_cast<double>(events);
  }
};

/// Per (regimen, ae) proportion of events carrying a flag, with per-ae and
/// overall event-weighted rates.
struct RateTable {
  std::vector<std::string> regimens;
  std::vector<std::string> ae_ids;
  std::map<std::string, std::size_t> regimen_patients;
  std::map<std::pair<std::string, std::string>, RateCell> cells;
  std::map<std::string, RateCell> per_ae;
  RateCell overall;

  RateCell cell(const std::string& regimen, const std::string& ae) const {
    const auto it = cells.find({regimen, ae});
    return it == cells.end() ? RateCell{} : it->second;
  }
};

inline std::map<std::string, std::size_t> regimen_sizes(const Cohort& cohort) {
  std::map<std::string, std::size_t> n;
  for (const auto& p : cohort.patients) ++n[p.patient.regimen];
  return n;
}

/// `flag(finding)` decides whether a finding counts; `finding.event` names
/// the patient and adverse event.
template <class Finding, class Flag>
RateTable rate_table(const Cohort& cohort, std::span<const Finding> findings, Flag&& flag,
                     const std::vector<std::string>& regimens, const std::vector<std::string>& ae_ids) {
  RateTable t{regimens, ae_ids, regimen_sizes(cohort), {}, {}, {}};
  for (const auto& f : findings) {
    const auto* p = cohort.find(f.event.patient_id);
    if (!p) throw invariant_error(fmt::format("event for patient '{}' outside the cohort", f.event.patient_id));
    const bool on = flag(f);
    for (RateCell* c : {&t.cells[{p->patient.regimen, f.event.ae_id}], &t.per_ae[f.event.ae_id], &t.overall}) {
      ++c->events;
      c->flagged += on ? 1 : 0;
    }
  }
  return t;
}

struct OutcomeTables {
  RateTable steroid;
  RateTable discontinuation;
};

inline OutcomeTables outcome_tables(const Cohort& cohort, std::span<const SteroidFinding> steroid,
                                    std::span<const DiscontinuationFinding> stopped,
                                    const std::vector<std::string>& regimens, const std::vector<std::string>& ae_ids) {
  return {rate_table(cohort, steroid, [](const SteroidFinding& f) { return f.treated; }, regimens, ae_ids),
          rate_table(cohort, stopped, [](const DiscontinuationFinding& f) { return f.discontinued; }, regimens,
                     ae_ids)};
}

/// Patients with each adverse event per regimen.
struct PrevalenceTable {
  std::vector<std::string> regimens;
  std::vector<std::string> ae_ids;
  std::map<std::string, std::size_t> regimen_patients;
  std::map<std::pair<std::string, std::string>, std::size_t> counts;

  std::size_t count(const std::string& regimen, const std::string& ae) const {
    const auto it = counts.find({regimen, ae});
    return it == counts.end() ? 0 : it->second;
  }
};

inline PrevalenceTable prevalence_table(const Cohort& cohort, std::span<const PatientEvent> events,
                                        const std::vector<std::string>& regimens,
                                        const std::vector<std::string>& ae_ids) {
  PrevalenceTable t{regimens, ae_ids, regimen_sizes(cohort), {}};
  for (const auto& e : events) {
    const auto* p = cohort.find(e.patient_id);
    if (!p) throw invariant_error(fmt::format("event for patient '{}' outside the cohort", e.patient_id));
    ++t.counts[{p->patient.regimen, e.ae_id}];
  }
  return t;
}

}  // namespace irae

#endif
