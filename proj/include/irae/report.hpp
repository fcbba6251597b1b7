#ifndef IRAE_REPORT_HPP
#define IRAE_REPORT_HPP

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "irae/csv.hpp"
#include "irae/eval.hpp"
#include "irae/outcomes.hpp"

namespace irae {

// Tabular and plot outputs. Undefined rates are written as NA.

inline std::string pct(std::optional<double> v) { return v ? fmt::format("{:.2f}", 100.0 * *v) : "NA"; }
inline std::string frac(std::optional<double> v) { return v ? fmt::format("{:.6f}", *v) : "NA"; }

inline void write_text(const std::string& path, const std::string& body) {
  auto out = open_output(path);
  out << body;
  if (!out) throw input_error(fmt::format("cannot write '{}'", path));
}

/// Patients per regimen and adverse event with percentages of the regimen.
/// `events` is the row sum of the per-AE counts.
inline std::string prevalence_csv(const PrevalenceTable& t) {
  std::vector<std::string> header{"regimen", "n_patients"};
  for (const auto& ae : t.ae_ids) {
    header.push_back(ae);
    header.push_back(ae + "_pct");
  }
  header.push_back("events");
  std::string out = csv_row(header);
  std::map<std::string, std::size_t> column_total;
  std::size_t all_patients = 0;
  auto emit = [&](const std::string& name, std::size_t n, auto&& count) {
    std::vector<std::string> row{name, std::to_string(n)};
    std::size_t sum = 0;
    for (const auto& ae : t.ae_ids) {
      const std::size_t k = count(ae);
      sum += k;
      row.push_back(std::to_string(k));
      row.push_back(pct(ratio(k, n)));
    }
    row.push_back(std::to_string(sum));
    out += csv_row(row);
  };
  for (const auto& r : t.regimens) {
    const auto it = t.regimen_patients.find(r);
    const std::size_t n = it == t.regimen_patients.end() ? 0 : it->second;
    all_patients += n;
    emit(r, n, [&](const std::string& ae) {
      column_total[ae] += t.count(r, ae);
      return t.count(r, ae);
    });
  }
  emit("all", all_patients, [&](const std::string& ae) { return column_total[ae]; });
  return out;
}

/// Per-AE rows with one rate column per regimen, the event-weighted AE rate
/// and counts; a final `overall` row pools every event.
inline std::string rate_csv(const RateTable& t) {
  std::vector<std::string> header{"ae_id"};
  for (const auto& r : t.regimens) header.push_back(r + "_pct");
  for (const char* h : {"events", "flagged", "rate_pct"}) header.emplace_back(h);
  std::string out = csv_row(header);
  for (const auto& ae : t.ae_ids) {
    std::vector<std::string> row{ae};
    for (const auto& r : t.regimens) row.push_back(pct(t.cell(r, ae).rate()));
    const auto it = t.per_ae.find(ae);
    const RateCell c = it == t.per_ae.end() ? RateCell{} : it->second;
    row.push_back(std::to_string(c.events));
    row.push_back(std::to_string(c.flagged));
    row.push_back(pct(c.rate()));
    out += csv_row(row);
  }
  std::vector<std::string> row{"overall"};
  for (const auto& r : t.regimens) {
    RateCell pooled;
    for (const auto& ae : t.ae_ids) {
      pooled.events += t.cell(r, ae).events;
      pooled.flagged += t.cell(r, ae).flagged;
    }
    row.push_back(pct(pooled.rate()));
  }
  row.push_back(std::to_string(t.overall.events));
  row.push_back(std::to_string(t.overall.flagged));
  row.push_back(pct(t.overall.rate()));
  out += csv_row(row);
  return out;
}

inline std::string metrics_csv(const std::vector<PatientMetrics>& metrics) {
  std::string out = csv_row({"ae_id", "sensitivity", "specificity", "precision", "f1", "accuracy"});
  for (const auto& m : metrics)
    out += csv_row({m.ae_id, frac(m.sensitivity), frac(m.specificity), frac(m.precision), frac(m.f1), frac(m.accuracy)});
  return out;
}

inline std::string confusion_csv(const std::vector<PatientMetrics>& metrics) {
  std::string out = csv_row({"ae_id", "actual", "predicted", "tp", "fp", "fn", "tn"});
  for (const auto& m : metrics) {
    const auto& c = m.counts;
    out += csv_row({m.ae_id, std::to_string(c.tp + c.fn), std::to_string(c.tp + c.fp), std::to_string(c.tp),
                    std::to_string(c.fp), std::to_string(c.fn), std::to_string(c.tn)});
  }
  return out;
}

/// Per curve: the origin, one row per event time and one flagged row per
/// censored subject, in time order (events before censorings at a tie).
inline std::string km_csv(const std::vector<SurvivalCurve>& curves) {
  std::string out = csv_row({"regimen", "ae_id", "time_days", "survival", "n_at_risk", "n_events", "censored_flag"});
  for (const auto& c : curves) {
    out += csv_row({c.regimen, c.ae_id, "0", "1", std::to_string(c.n_patients), "0", "0"});
    std::size_t i = 0, j = 0;
    while (i < c.steps.size() || j < c.censored.size()) {
      if (j == c.censored.size() || (i < c.steps.size() && c.steps[i].time_days <= c.censored[j].time_days)) {
        const auto& s = c.steps[i++];
        out += csv_row({c.regimen, c.ae_id, std::to_string(s.time_days), format_number(s.survival),
                        std::to_string(s.at_risk), std::to_string(s.events), "0"});
      } else {
        const auto& m = c.censored[j++];
        out += csv_row({c.regimen, c.ae_id, std::to_string(m.time_days), format_number(m.survival),
                        std::to_string(m.at_risk), "0", "1"});
      }
    }
  }
  return out;
}

inline std::string roc_csv(const RocCurve& roc) {
  std::string out = csv_row({"threshold", "fpr", "tpr"});
  for (const auto& p : roc.points)
    out += csv_row({std::isinf(p.threshold) ? std::string("inf") : format_number(p.threshold), format_number(p.fpr),
                    format_number(p.tpr)});
  return out;
}

namespace detail {

inline constexpr double kPlotW = 640, kPlotH = 420, kLeft = 60, kRight = 170, kTop = 30, kBottom = 50;
inline const std::vector<std::string> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                               "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

inline std::string svg_open(const std::string& title) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"18\" font-size=\"14\">{3}</text>\n",
      kPlotW, kPlotH, kLeft, title);
}

inline std::string svg_axes(const std::string& xlabel, const std::string& ylabel, double xmax,
                            const std::vector<double>& xticks) {
  const double x0 = kLeft, x1 = kPlotW - kRight, y0 = kPlotH - kBottom, y1 = kTop;
  std::string s = fmt::format(
      "<g class=\"axes\" stroke=\"black\">\n<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\"/>\n"
      "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{3:.2f}\"/>\n</g>\n",
      x0, y0, x1, y1);
  for (double v : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double y = y0 - v * (y0 - y1);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.2f}</text>\n", x0 - 6, y + 4, v);
  }
  for (double t : xticks) {
    const double x = x0 + (xmax > 0 ? t / xmax : 0.0) * (x1 - x0);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", x, y0 + 16,
                     format_number(t));
  }
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", (x0 + x1) / 2, kPlotH - 12,
                   xlabel);
  s += fmt::format("<text x=\"14\" y=\"{:.2f}\" transform=\"rotate(-90 14 {:.2f})\" text-anchor=\"middle\">{}</text>\n",
                   (y0 + y1) / 2, (y0 + y1) / 2, ylabel);
  return s;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace detail

/// Step plot, one path per curve. Every event time contributes exactly one
/// vertical segment (a `V` command); censored subjects are drawn as ticks.
inline std::string km_svg(const std::vector<SurvivalCurve>& curves, const std::string& title = "IrAE-free survival") {
  using namespace detail;
  double xmax = 1.0;
  for (const auto& c : curves) {
    for (const auto& s : c.steps) xmax = std::max(xmax, static_cast<double>(s.time_days));
    for (const auto& m : c.censored) xmax = std::max(xmax, static_cast<double>(m.time_days));
  }
  const double x0 = kLeft, x1 = kPlotW - kRight, y0 = kPlotH - kBottom, y1 = kTop;
  auto X = [&](double t) { return x0 + t / xmax * (x1 - x0); };
  auto Y = [&](double s) { return y0 - s * (y0 - y1); };
  const double step = std::max(1.0, std::ceil(xmax / 5.0 / 30.0) * 30.0);
  std::vector<double> ticks;
  for (double t = 0; t <= xmax; t += step) ticks.push_back(t);

  std::string s = svg_open(xml_escape(title)) + svg_axes("days since first ICI administration", "survival", xmax, ticks);
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    const std::string& color = kPalette[i % kPalette.size()];
    std::string d = fmt::format("M {:.2f} {:.2f}", X(0), Y(1));
    double end = 0;
    for (const auto& st : c.steps) {
      d += fmt::format(" H {:.2f} V {:.2f}", X(st.time_days), Y(st.survival));
      end = st.time_days;
    }
    for (const auto& m : c.censored) end = std::max(end, static_cast<double>(m.time_days));
    d += fmt::format(" H {:.2f}", X(end));
    s += fmt::format("<path class=\"km\" data-regimen=\"{}\" data-ae=\"{}\" d=\"{}\" fill=\"none\" stroke=\"{}\" "
                     "stroke-width=\"1.5\"/>\n",
                     xml_escape(c.regimen), xml_escape(c.ae_id), d, color);
    for (const auto& m : c.censored)
      s += fmt::format("<line class=\"censor\" x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" "
                       "stroke=\"{3}\"/>\n",
                       X(m.time_days), Y(m.survival) - 3, Y(m.survival) + 3, color);
    const double ly = y1 + 16.0 * static_cast<double>(i);
    s += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"{3}\" "
                     "stroke-width=\"2\"/>\n<text x=\"{4:.2f}\" y=\"{5:.2f}\">{6} (n={7})</text>\n",
                     x1 + 10, ly, x1 + 30, color, x1 + 36, ly + 4, xml_escape(c.regimen), c.n_patients);
  }
  return s + "</svg>\n";
}

inline std::string roc_svg(const RocCurve& roc, const std::string& title = "Window-level ROC") {
  using namespace detail;
  const double x0 = kLeft, x1 = kPlotW - kRight, y0 = kPlotH - kBottom, y1 = kTop;
  std::string s = svg_open(xml_escape(title)) + svg_axes("false positive rate", "true positive rate", 1.0,
                                                         {0.0, 0.25, 0.5, 0.75, 1.0});
  s += fmt::format("<line class=\"chance\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#999\" "
                   "stroke-dasharray=\"4 4\"/>\n",
                   x0, y0, x1, y1);
  std::string pts;
  for (const auto& p : roc.points) {
    if (!pts.empty()) pts.push_back(' ');
    pts += fmt::format("{:.2f},{:.2f}", x0 + p.fpr * (x1 - x0), y0 - p.tpr * (y0 - y1));
  }
  s += fmt::format("<polyline class=\"roc\" points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n", pts,
                   kPalette[0]);
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">AUC = {:.3f}</text>\n", x1 + 10, y1 + 4, roc.auc);
  return s + "</svg>\n";
}

// ---------------------------------------------------------------------------
// Evaluation report

struct EvaluationReport {
  double window_auc = 0.0;
  std::vector<std::pair<std::string, double>> member_auc;
  std::size_t test_windows = 0;
  std::size_t test_patients = 0;
  std::vector<PatientMetrics> per_ae;
  RecallAudit audit;
  RocCurve roc;
  // deterministic run statistics
  std::size_t notes_scanned = 0;
  std::size_t candidates = 0;
};

inline json to_json(const EvaluationReport& r) {
  json members = json::object();
  for (const auto& [k, v] : r.member_auc) members[k] = v;
  json per_ae = json::array();
  for (const auto& m : r.per_ae) per_ae.push_back(to_json(m));
  json missed = json::array();
  for (const auto& g : r.audit.missed)
    missed.push_back({{"note_id", g.note_id}, {"token_index", g.token_index}, {"ae_id", g.ae_id}});
  return {{"window_auc", r.window_auc},
          {"member_auc", members},
          {"test_windows", r.test_windows},
          {"test_patients", r.test_patients},
          {"patient_metrics", per_ae},
          {"stage1_recall",
           {{"detected", r.audit.detected},
            {"total", r.audit.total},
            {"recall", optional_json(r.audit.recall())},
            {"missed", missed}}},
          {"runtime", {{"notes_scanned", r.notes_scanned}, {"candidates", r.candidates}}}};
}

struct ReportInputs {
  PrevalenceTable prevalence;
  OutcomeTables outcomes;
  std::vector<SurvivalCurve> curves;
  std::optional<EvaluationReport> evaluation;
};

/// Writes every report file into `dir` and returns the written paths.
inline std::vector<std::string> emit_reports(const ReportInputs& in, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& body) {
    const std::string path = (std::filesystem::path(dir) / name).string();
    write_text(path, body);
    written.push_back(path);
  };
  put("prevalence.csv", prevalence_csv(in.prevalence));
  put("steroid.csv", rate_csv(in.outcomes.steroid));
  put("discontinuation.csv", rate_csv(in.outcomes.discontinuation));
  put("km.csv", km_csv(in.curves));
  put("km.svg", km_svg(in.curves));
  if (in.evaluation) {
    put("metrics.csv", metrics_csv(in.evaluation->per_ae));
    put("confusion.csv", confusion_csv(in.evaluation->per_ae));
    put("roc.csv", roc_csv(in.evaluation->roc));
    put("roc.svg", roc_svg(in.evaluation->roc));
    put("evaluation.json", to_json(*in.evaluation).dump(2) + "\n");
  }
  return written;
}

}  // namespace irae

#endif
