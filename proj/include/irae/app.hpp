#ifndef IRAE_APP_HPP
#define IRAE_APP_HPP

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "irae/aggregate.hpp"
#include "irae/classify.hpp"
#include "irae/config.hpp"
#include "irae/corpus.hpp"
#include "irae/eval.hpp"
#include "irae/matcher.hpp"
#include "irae/outcomes.hpp"
#include "irae/report.hpp"
#include "irae/synth.hpp"

namespace irae {

// Subcommands. Each reads its declared inputs under the output directory (or
// the configured external corpus), writes its own subdirectory and nothing
// else.

namespace fs = std::filesystem;

struct Layout {
  fs::path root;

  fs::path dir(const char* stage) const { return root / stage; }
  std::string file(const char* stage, const char* name) const { return (root / stage / name).string(); }
};

struct CorpusPaths {
  std::string patients, notes, prescriptions, gold_mentions, gold_events;
};

inline CorpusPaths corpus_paths(const RunConfig& cfg) {
  const Layout l{cfg.out_dir};
  if (cfg.notes_path.empty())
    return {l.file("corpus", "patients.jsonl"), l.file("corpus", "notes.jsonl"),
            l.file("corpus", "prescriptions.jsonl"), l.file("corpus", "gold_mentions.jsonl"),
            l.file("corpus", "gold_events.jsonl")};
  if (cfg.patients_path.empty() || cfg.prescriptions_path.empty())
    throw config_error("input.notes requires input.patients and input.prescriptions");
  return {cfg.patients_path, cfg.notes_path, cfg.prescriptions_path, l.file("corpus", "gold_mentions.jsonl"),
          l.file("corpus", "gold_events.jsonl")};
}

inline void log(const std::string& msg) { fmt::print(stderr, "irae: {}\n", msg); }

inline void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw input_error(fmt::format("missing input file '{}'", path));
}

template <class Fn>
void read_jsonl(const std::string& path, Fn&& fn) {
  require_file(path);
  auto in = open_input(path);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) {
    ++n;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw data_error(fmt::format("{} line {}: {}", path, n, e.what()));
    }
  }
}

template <class Range>
void write_jsonl(const std::string& path, const Range& rows) {
  auto out = open_output(path);
  for (const auto& r : rows) out << to_json(r).dump() << '\n';
}

inline void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline Lexicon load_lexicon(const RunConfig& cfg) {
  return cfg.lexicon_path.empty() ? Lexicon::defaults() : Lexicon::load(cfg.lexicon_path);
}

inline Cohort load_cohort(const RunConfig& cfg) {
  const auto p = corpus_paths(cfg);
  for (const auto& f : {p.patients, p.notes, p.prescriptions}) require_file(f);
  auto patients = load_patients(p.patients, format_from_path(p.patients));
  auto notes = load_notes(p.notes, format_from_path(p.notes));
  auto rx = load_prescriptions(p.prescriptions, format_from_path(p.prescriptions));
  auto cohort = build_cohort(std::move(patients), std::move(notes), std::move(rx), cfg.cohort);
  for (const auto& w : cohort.warnings) log(w);
  return cohort;
}

inline std::vector<std::string> patient_ids(const Cohort& cohort) {
  std::vector<std::string> ids;
  for (const auto& p : cohort.patients) ids.push_back(p.patient.patient_id);
  return ids;
}

// ---------------------------------------------------------------------------
// synth

inline void cmd_synth(const RunConfig& cfg) {
  const Layout l{cfg.out_dir};
  fs::create_directories(l.dir("corpus"));
  const SynthConfig sc = cfg.effective_synth();
  const auto corpus = generate(sc);
  save_jsonl(corpus.patients, l.file("corpus", "patients.jsonl"));
  save_jsonl(corpus.notes, l.file("corpus", "notes.jsonl"));
  save_jsonl(corpus.prescriptions, l.file("corpus", "prescriptions.jsonl"));
  write_jsonl(l.file("corpus", "gold_mentions.jsonl"), corpus.gold.mentions);
  {
    auto out = open_output(l.file("corpus", "gold_notes.jsonl"));
    for (const auto& [note, ae] : corpus.gold.positive_notes)
      out << json{{"note_id", note}, {"ae_id", ae}}.dump() << '\n';
  }
  write_jsonl(l.file("corpus", "gold_events.jsonl"), corpus.gold.events);
  json manifest = {{"seed", sc.seed},
                   {"patients", corpus.patients.size()},
                   {"notes", corpus.notes.size()},
                   {"prescriptions", corpus.prescriptions.size()},
                   {"gold_mentions", corpus.gold.mentions.size()},
                   {"gold_events", corpus.gold.events.size()},
                   {"config", json::object()}};
  const json all = config_json(cfg);
  for (const auto& [k, v] : all.items())
    if (k.starts_with("synth.")) manifest["config"][k] = v;
  write_json(l.file("corpus", "manifest.json"), manifest);
  log(fmt::format("synth: {} patients, {} notes, {} gold events", corpus.patients.size(), corpus.notes.size(),
                  corpus.gold.events.size()));
}

// ---------------------------------------------------------------------------
// scan

inline json scanned_window_json(const ContextWindow& w, Date date, double similarity) {
  json j = to_json(w);
  j["date"] = date.str();
  j["similarity"] = similarity;
  return j;
}

inline void cmd_scan(const RunConfig& cfg) {
  const Layout l{cfg.out_dir};
  const Cohort cohort = load_cohort(cfg);
  const Lexicon lexicon = load_lexicon(cfg);
  const auto paths = corpus_paths(cfg);

  // window labels come from mention-level gold when it is available
  std::map<std::tuple<std::string, std::size_t, std::string>, bool> gold;
  const bool labeled = fs::is_regular_file(paths.gold_mentions);
  if (labeled)
    read_jsonl(paths.gold_mentions, [&](const json& j) {
      const auto m = gold_mention_from_json(j);
      gold[{m.note_id, m.token_index, m.ae_id}] = m.positive;
    });

  const Scanner scanner(lexicon, cfg.match);
  std::vector<const ClinicalNote*> notes;
  for (const auto& p : cohort.patients)
    for (const auto& n : p.notes) notes.push_back(&n);
  std::vector<NoteScan> per_note(notes.size());
  const EnsembleModel none;
  parallel_for(notes.size(), cfg.threads, [&](std::size_t i) { per_note[i] = scan_and_score(*notes[i], scanner, none); });

  fs::create_directories(l.dir("scan"));
  auto cand_out = open_output(l.file("scan", "candidates.jsonl"));
  auto win_out = open_output(l.file("scan", "windows.jsonl"));
  std::size_t n = 0;
  for (auto& s : per_note)
    for (std::size_t k = 0; k < s.candidates.size(); ++k, ++n) {
      auto& w = s.windows[k];
      if (labeled) {
        const auto it = gold.find({w.window.note_id, w.window.token_index, w.window.ae_id});
        w.window.label = it != gold.end() && it->second;
      }
      cand_out << to_json(s.candidates[k]).dump() << '\n';
      win_out << scanned_window_json(w.window, w.date, w.similarity).dump() << '\n';
    }
  log(fmt::format("scan: {} notes, {} candidate windows", notes.size(), n));
}

struct StoredWindow {
  ContextWindow window;
  Date date;
  double similarity = 0.0;
};

inline std::vector<StoredWindow> load_windows(const std::string& path) {
  std::vector<StoredWindow> out;
  read_jsonl(path, [&](const json& j) {
    out.push_back({window_from_json(j), Date::parse_or_throw(j.at("date").get<std::string>()),
                   j.value("similarity", 0.0)});
  });
  return out;
}

// ---------------------------------------------------------------------------
// train

inline TrainConfig member_config(const RunConfig& cfg, ModelKind kind) {
  TrainConfig t = kind == ModelKind::subword_linear ? cfg.subword : cfg.charseq;
  t.seed = derive_seed(cfg.effective_train_seed(), static_cast<std::uint64_t>(kind));
  return t;
}

inline const std::vector<ModelKind>& ensemble_kinds() {
  static const std::vector<ModelKind> kinds{ModelKind::subword_linear, ModelKind::charseq_linear};
  return kinds;
}

inline void cmd_train(const RunConfig& cfg) {
  const Layout l{cfg.out_dir};
  const Cohort cohort = load_cohort(cfg);
  const auto windows = load_windows(l.file("scan", "windows.jsonl"));
  const CohortSplit split = split_cohort(patient_ids(cohort), cfg.test_fraction, cfg.effective_split_seed());

  // optional validation patients carved out of the training cohort
  std::set<std::string> validation;
  if (cfg.validation_fraction > 0.0 && split.train.size() >= 2) {
    const auto k = static_cast<std::size_t>(std::llround(cfg.validation_fraction * split.train.size()));
    if (k > 0 && k < split.train.size()) {
      const auto v = split_cohort(split.train, cfg.validation_fraction, derive_seed(cfg.effective_split_seed(), 1));
      validation.insert(v.test.begin(), v.test.end());
    }
  }

  std::vector<ContextWindow> fit, held;
  for (const auto& w : windows) {
    if (!w.window.label || split.is_test(w.window.patient_id)) continue;
    (validation.contains(w.window.patient_id) ? held : fit).push_back(w.window);
  }
  if (fit.empty()) throw data_error("train: no labeled training windows (is gold mention data available?)");

  EnsembleModel ensemble;
  json members = json::array();
  for (ModelKind kind : ensemble_kinds()) {
    auto model = train(kind, fit, member_config(cfg, kind));
    json m = {{"kind", std::string(to_string(kind))}, {"seed", model.meta.seed}, {"epochs", model.meta.epochs},
              {"final_loss", model.meta.epoch_loss.empty() ? json(nullptr) : json(model.meta.epoch_loss.back())}};
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& w : held) {
      scores.push_back(predict_proba(model, w));
      labels.push_back(*w.label ? 1 : 0);
    }
    const bool both = std::find(labels.begin(), labels.end(), 0) != labels.end() &&
                      std::find(labels.begin(), labels.end(), 1) != labels.end();
    m["validation_auc"] = both ? json(roc_auc(scores, labels)) : json(nullptr);
    members.push_back(m);
    ensemble.members.push_back(std::move(model));
  }

  fs::create_directories(l.dir("train"));
  write_json(l.file("train", "split.json"), to_json(split));
  {
    auto out = open_output(l.file("train", "train_windows.jsonl"));
    for (const auto& w : fit) out << to_json(w).dump() << '\n';
  }
  save_model(ensemble, l.file("train", "ensemble.bin"));
  std::size_t positives = 0;
  for (const auto& w : fit) positives += *w.label ? 1 : 0;
  write_json(l.file("train", "summary.json"),
             {{"train_patients", split.train.size() - validation.size()},
              {"validation_patients", validation.size()},
              {"test_patients", split.test.size()},
              {"train_windows", fit.size()},
              {"train_positive_windows", positives},
              {"validation_windows", held.size()},
              {"members", members}});
  log(fmt::format("train: {} windows from {} patients", fit.size(), split.train.size() - validation.size()));
}

// ---------------------------------------------------------------------------
// predict

inline ScoredWindow scored_from_json(const json& j) {
  return {window_from_json(j), Date::parse_or_throw(j.at("date").get<std::string>()), j.value("similarity", 0.0),
          j.at("probability").get<double>(), j.value("member_probabilities", std::vector<double>{})};
}

inline void cmd_predict(const RunConfig& cfg) {
  const Layout l{cfg.out_dir};
  const std::string model_path = l.file("train", "ensemble.bin");
  require_file(model_path);
  const EnsembleModel ensemble = load_ensemble(model_path);
  const auto windows = load_windows(l.file("scan", "windows.jsonl"));
  std::vector<ScoredWindow> scored(windows.size());
  parallel_for(windows.size(), cfg.threads, [&](std::size_t i) {
    ScoredWindow s{windows[i].window, windows[i].date, windows[i].similarity, 0.0, {}};
    double sum = 0.0;
    for (const auto& m : ensemble.members) {
      s.member_probabilities.push_back(predict_proba(m, s.window));
      sum += s.member_probabilities.back();
    }
    s.probability = sum / static_cast<double>(ensemble.members.size());
    scored[i] = std::move(s);
  });
  fs::create_directories(l.dir("predict"));
  write_jsonl(l.file("predict", "predictions.jsonl"), scored);
  log(fmt::format("predict: {} windows", scored.size()));
}

inline std::vector<ScoredWindow> load_predictions(const RunConfig& cfg) {
  std::vector<ScoredWindow> out;
  read_jsonl(Layout{cfg.out_dir}.file("predict", "predictions.jsonl"),
             [&](const json& j) { out.push_back(scored_from_json(j)); });
  return out;
}

// ---------------------------------------------------------------------------
// aggregate

inline void cmd_aggregate(const RunConfig& cfg) {
  const Layout l{cfg.out_dir};
  std::vector<WindowScore> scores;
  for (const auto& s : load_predictions(cfg))
    scores.push_back({s.window.note_id, s.window.patient_id, s.date, s.window.ae_id, s.window.token_index,
                      s.probability});
  const auto agg = aggregate_scores(std::move(scores), cfg.decision);
  fs::create_directories(l.dir("aggregate"));
  write_jsonl(l.file("aggregate", "note_verdicts.jsonl"), agg.verdicts);
  write_jsonl(l.file("aggregate", "events.jsonl"), agg.events);
  log(fmt::format("aggregate: {} note verdicts, {} patient events", agg.verdicts.size(), agg.events.size()));
}

inline std::vector<PatientEvent> load_events(const std::string& path) {
  std::vector<PatientEvent> out;
  read_jsonl(path, [&](const json& j) { out.push_back(event_from_json(j)); });
  return out;
}

// ---------------------------------------------------------------------------
// outcomes

struct OutcomeFindings {
  std::vector<SteroidFinding> steroid;
  std::vector<DiscontinuationFinding> discontinuation;
};

inline OutcomeFindings compute_outcomes(const RunConfig& cfg, const Cohort& cohort,
                                        const std::vector<PatientEvent>& events) {
  OutcomeFindings f;
  for (const auto& e : events) {
    const auto* p = cohort.find(e.patient_id);
    if (!p) throw invariant_error(fmt::format("event for patient '{}' outside the cohort", e.patient_id));
    f.steroid.push_back(steroid_followup(e, p->prescriptions, cfg.steroid));
    f.discontinuation.push_back(discontinuation(e, p->ici_dates, cfg.discontinuation_lookback_days));
  }
  return f;
}

inline std::vector<std::string> regimen_order(const Cohort& cohort) {
  std::vector<std::string> out = default_regimens();
  for (const auto& [r, n] : regimen_sizes(cohort))
    if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  return out;
}

inline std::vector<std::string> ae_order(const Lexicon& lexicon) {
  std::vector<std::string> out = default_adverse_events();
  for (const auto& ae : lexicon.ae_ids())
    if (std::find(out.begin(), out.end(), ae) == out.end()) out.push_back(ae);
  std::erase_if(out, [&](const std::string& ae) {
    const auto ids = lexicon.ae_ids();
    return std::find(ids.begin(), ids.end(), ae) == ids.end();
  });
  return out;
}

inline void cmd_outcomes(const RunConfig& cfg) {
  const Layout l{cfg.out_dir};
  const Cohort cohort = load_cohort(cfg);
  const auto events = load_events(l.file("aggregate", "events.jsonl"));
  const auto f = compute_outcomes(cfg, cohort, events);
  const auto tables = outcome_tables(cohort, std::span<const SteroidFinding>(f.steroid),
                                     std::span<const DiscontinuationFinding>(f.discontinuation),
                                     regimen_order(cohort), ae_order(load_lexicon(cfg)));
  fs::create_directories(l.dir("outcomes"));
  {
    auto out = open_output(l.file("outcomes", "findings.jsonl"));
    for (std::size_t i = 0; i < events.size(); ++i) {
      json j = to_json(events[i]);
      j["steroid_treated"] = f.steroid[i].treated;
      j["discontinued"] = f.discontinuation[i].discontinued;
      const auto& d = f.discontinuation[i];
      j["last_dose_date"] = d.last_dose_date ? json(d.last_dose_date->str()) : json(nullptr);
      out << j.dump() << '\n';
    }
  }
  write_text(l.file("outcomes", "steroid.csv"), rate_csv(tables.steroid));
  write_text(l.file("outcomes", "discontinuation.csv"), rate_csv(tables.discontinuation));
  write_json(l.file("outcomes", "outcomes.json"),
             {{"events", events.size()},
              {"steroid_treated", tables.steroid.overall.flagged},
              {"steroid_rate", optional_json(tables.steroid.overall.rate())},
              {"discontinued", tables.discontinuation.overall.flagged},
              {"discontinuation_rate", optional_json(tables.discontinuation.overall.rate())}});
  log(fmt::format("outcomes: {} events, steroid rate {}", events.size(), pct(tables.steroid.overall.rate())));
}

// ---------------------------------------------------------------------------
// survival

/// Pooled curve plus one curve per regimen with patients.
inline std::vector<SurvivalCurve> survival_curves(const Cohort& cohort, const std::vector<PatientEvent>& events) {
  std::vector<SurvivalCurve> curves;
  if (cohort.patients.empty()) return curves;
  curves.push_back(km_estimate(cohort, events));
  const auto sizes = regimen_sizes(cohort);
  for (const auto& r : regimen_order(cohort))
    if (sizes.contains(r)) curves.push_back(km_estimate(cohort, events, r));
  return curves;
}

inline void cmd_survival(const RunConfig& cfg) {
  const Layout l{cfg.out_dir};
  const Cohort cohort = load_cohort(cfg);
  const auto curves = survival_curves(cohort, load_events(l.file("aggregate", "events.jsonl")));
  fs::create_directories(l.dir("survival"));
  write_text(l.file("survival", "km.csv"), km_csv(curves));
  write_text(l.file("survival", "km.svg"), km_svg(curves));
  log(fmt::format("survival: {} curves", curves.size()));
}

// ---------------------------------------------------------------------------
// evaluate

inline std::uint64_t audit_seed(const RunConfig& cfg) { return derive_seed(cfg.seed, 4); }

inline EvaluationReport evaluate(const RunConfig& cfg) {
  const Layout l{cfg.out_dir};
  const Cohort cohort = load_cohort(cfg);
  const std::string split_path = l.file("train", "split.json");
  require_file(split_path);
  CohortSplit split;
  {
    auto in = open_input(split_path);
    split = split_from_json(json::parse(in));
  }
  const auto predictions = load_predictions(cfg);
  const auto events = load_events(l.file("aggregate", "events.jsonl"));
  const auto paths = corpus_paths(cfg);
  std::vector<PatientEvent> gold;
  read_jsonl(paths.gold_events, [&](const json& j) { gold.push_back(gold_event_from_json(j).event); });

  EvaluationReport r;
  r.test_patients = split.test.size();
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<std::vector<double>> member_scores(ensemble_kinds().size());
  for (const auto& p : predictions) {
    if (!split.is_test(p.window.patient_id) || !p.window.label) continue;
    scores.push_back(p.probability);
    labels.push_back(*p.window.label ? 1 : 0);
    for (std::size_t m = 0; m < member_scores.size() && m < p.member_probabilities.size(); ++m)
      member_scores[m].push_back(p.member_probabilities[m]);
  }
  r.test_windows = scores.size();
  r.roc = threshold_sweep(scores, labels);
  r.window_auc = roc_auc(scores, labels);
  for (std::size_t m = 0; m < member_scores.size(); ++m)
    if (member_scores[m].size() == labels.size())
      r.member_auc.emplace_back(std::string(to_string(ensemble_kinds()[m])), roc_auc(member_scores[m], labels));

  std::vector<PatientEvent> test_pred, test_gold;
  for (const auto& e : events)
    if (split.is_test(e.patient_id)) test_pred.push_back(e);
  for (const auto& e : gold)
    if (split.is_test(e.patient_id)) test_gold.push_back(e);
  for (const auto& ae : ae_order(load_lexicon(cfg)))
    r.per_ae.push_back(patient_metrics(test_pred, test_gold, split.test, ae));

  SynthConfig audit_cfg = cfg.effective_synth();
  audit_cfg.seed = audit_seed(cfg);
  const auto sample = generate_audit_sample(audit_cfg, cfg.audit_notes, cfg.audit_mentions, cfg.audit_max_distance);
  r.audit = stage1_recall_audit(sample.notes, sample.mentions, load_lexicon(cfg), cfg.match);

  r.notes_scanned = cohort.note_count();
  r.candidates = predictions.size();
  return r;
}

inline void cmd_evaluate(const RunConfig& cfg) {
  const Layout l{cfg.out_dir};
  const auto r = evaluate(cfg);
  fs::create_directories(l.dir("evaluate"));
  write_json(l.file("evaluate", "evaluation.json"), to_json(r));
  write_text(l.file("evaluate", "metrics.csv"), metrics_csv(r.per_ae));
  write_text(l.file("evaluate", "roc.csv"), roc_csv(r.roc));
  write_text(l.file("evaluate", "roc.svg"), roc_svg(r.roc));
  log(fmt::format("evaluate: window AUC {:.4f} on {} test windows, stage-1 recall {}/{}", r.window_auc,
                  r.test_windows, r.audit.detected, r.audit.total));
}

/// Reads back what cmd_evaluate wrote.
inline EvaluationReport load_evaluation(const RunConfig& cfg) {
  const Layout l{cfg.out_dir};
  const std::string path = l.file("evaluate", "evaluation.json");
  require_file(path);
  auto in = open_input(path);
  const json j = json::parse(in);
  EvaluationReport r;
  r.window_auc = j.at("window_auc").get<double>();
  for (const auto& [k, v] : j.at("member_auc").items()) r.member_auc.emplace_back(k, v.get<double>());
  r.test_windows = j.at("test_windows").get<std::size_t>();
  r.test_patients = j.at("test_patients").get<std::size_t>();
  for (const auto& m : j.at("patient_metrics")) {
    ConfusionCounts c{m.at("tp").get<std::size_t>(), m.at("fp").get<std::size_t>(), m.at("fn").get<std::size_t>(),
                      m.at("tn").get<std::size_t>()};
    r.per_ae.push_back(metrics_from_counts(m.at("ae_id").get<std::string>(), c));
  }
  const auto& a = j.at("stage1_recall");
  r.audit.detected = a.at("detected").get<std::size_t>();
  r.audit.total = a.at("total").get<std::size_t>();
  r.notes_scanned = j.at("runtime").at("notes_scanned").get<std::size_t>();
  r.candidates = j.at("runtime").at("candidates").get<std::size_t>();

  const std::string roc_path = l.file("evaluate", "roc.csv");
  require_file(roc_path);
  auto roc_in = open_input(roc_path);
  CsvReader reader(roc_in);
  reader.next();
  while (auto row = reader.next()) {
    if (row->size() != 3) throw data_error(fmt::format("{}: malformed row", roc_path));
    const double t = (*row)[0] == "inf" ? std::numeric_limits<double>::infinity() : std::stod((*row)[0]);
    r.roc.points.push_back({t, std::stod((*row)[1]), std::stod((*row)[2])});
  }
  r.roc.auc = r.window_auc;
  return r;
}

// ---------------------------------------------------------------------------
// report

inline void cmd_report(const RunConfig& cfg) {
  const Layout l{cfg.out_dir};
  const std::string events_path = l.file("aggregate", "events.jsonl");
  require_file(events_path);
  const Cohort cohort = load_cohort(cfg);
  const auto events = load_events(events_path);
  const auto regimens = regimen_order(cohort);
  const auto aes = ae_order(load_lexicon(cfg));
  const auto f = compute_outcomes(cfg, cohort, events);
  ReportInputs in{prevalence_table(cohort, events, regimens, aes),
                  outcome_tables(cohort, std::span<const SteroidFinding>(f.steroid),
                                 std::span<const DiscontinuationFinding>(f.discontinuation), regimens, aes),
                  survival_curves(cohort, events),
                  std::nullopt};
  if (fs::is_regular_file(l.file("evaluate", "evaluation.json"))) in.evaluation = load_evaluation(cfg);
  const auto written = emit_reports(in, l.dir("report").string());
  log(fmt::format("report: {} files", written.size()));
}

// ---------------------------------------------------------------------------
// run-all and throughput

inline void cmd_run_all(const RunConfig& cfg) {
  if (cfg.notes_path.empty()) cmd_synth(cfg);
  cmd_scan(cfg);
  cmd_train(cfg);
  cmd_predict(cfg);
  cmd_aggregate(cfg);
  cmd_outcomes(cfg);
  cmd_survival(cfg);
  cmd_evaluate(cfg);
  cmd_report(cfg);
}

struct ThroughputReport {
  std::size_t notes = 0;
  std::size_t candidates = 0;
  std::size_t events = 0;
  double seconds = 0.0;

  double notes_per_second() const { return seconds > 0.0 ? static_cast<double>(notes) / seconds : 0.0; }
};

inline json to_json(const ThroughputReport& t) {
  return {{"notes", t.notes}, {"candidates", t.candidates}, {"events", t.events}, {"seconds", t.seconds},
          {"notes_per_second", t.notes_per_second()}};
}

/// Wall-clock time of scan, predict and aggregate over the cohort's notes.
inline ThroughputReport measure_throughput(const Cohort& cohort, const Lexicon& lexicon, const EnsembleModel& ensemble,
                                           const MatchConfig& match = {}, const DecisionConfig& decision = {},
                                           int threads = 1) {
  const auto start = std::chrono::steady_clock::now();
  const auto result = run_pipeline(cohort, lexicon, ensemble, match, decision, threads);
  const auto stop = std::chrono::steady_clock::now();
  return {result.notes_scanned, result.candidates.size(), result.events.size(),
          std::chrono::duration<double>(stop - start).count()};
}

/// Synthetic corpus with exactly `n_notes` notes, built from the configured
/// generator and cut at the note budget.
inline Cohort throughput_cohort(const RunConfig& cfg, std::size_t n_notes) {
  SynthConfig sc = cfg.effective_synth();
  sc.seed = derive_seed(sc.seed, 5);
  const double per_patient = sc.notes_mean + 3.0;
  sc.n_patients = static_cast<std::size_t>(static_cast<double>(n_notes) / per_patient * 1.1) + 10;
  auto corpus = generate(sc);
  while (corpus.notes.size() < n_notes) {
    sc.n_patients *= 2;
    corpus = generate(sc);
  }
  corpus.notes.resize(n_notes);
  return build_cohort(std::move(corpus.patients), std::move(corpus.notes), std::move(corpus.prescriptions),
                      cfg.cohort);
}

inline ThroughputReport cmd_throughput(const RunConfig& cfg) {
  const Layout l{cfg.out_dir};
  const std::string model_path = l.file("train", "ensemble.bin");
  require_file(model_path);
  const EnsembleModel ensemble = load_ensemble(model_path);
  const Cohort cohort = throughput_cohort(cfg, cfg.throughput_notes);
  const auto t = measure_throughput(cohort, load_lexicon(cfg), ensemble, cfg.match, cfg.decision, cfg.threads);
  fs::create_directories(l.dir("throughput"));
  write_json(l.file("throughput", "throughput.json"), to_json(t));
  log(fmt::format("throughput: {} notes in {:.2f} s ({:.0f} notes/s)", t.notes, t.seconds, t.notes_per_second()));
  return t;
}

}  // namespace irae

#endif
