#ifndef IRAE_CORPUS_HPP
#define IRAE_CORPUS_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <fmt/core.h>

#include "json.hpp"

#include "irae/csv.hpp"
#include "irae/date.hpp"
#include "irae/error.hpp"
#include "irae/utf8.hpp"

namespace irae {

using json = nlohmann::json;

enum class FileFormat { jsonl, csv };

inline FileFormat format_from_path(std::string_view path) {
  return path.ends_with(".csv") ? FileFormat::csv : FileFormat::jsonl;
}

// ---------------------------------------------------------------------------
// Records

struct ClinicalNote {
  std::string note_id;
  std::string patient_id;
  Date date;
  std::string source;  // clinic / admission / discharge, free tag
  std::string text;

  bool operator==(const ClinicalNote&) const = default;
};

enum class DrugClass { ici, corticosteroid, other };

inline std::string_view to_string(DrugClass c) {
  switch (c) {
    case DrugClass::ici: return "ici";
    case DrugClass::corticosteroid: return "corticosteroid";
    case DrugClass::other: return "other";
  }
  return "other";
}

inline std::optional<DrugClass> parse_drug_class(std::string_view s) {
  if (s == "ici") return DrugClass::ici;
  if (s == "corticosteroid") return DrugClass::corticosteroid;
  if (s == "other") return DrugClass::other;
  return std::nullopt;
}

struct PrescriptionRecord {
  std::string patient_id;
  std::string drug_name;
  DrugClass drug_class = DrugClass::other;
  std::optional<double> dose_mg_per_kg_day;
  Date date;

  bool operator==(const PrescriptionRecord&) const = default;
};

enum class Sex { female, male, other };

struct Patient {
  std::string patient_id;
  std::string regimen;
  std::optional<int> age;
  std::optional<Sex> sex;
  std::optional<std::string> malignancy;

  bool operator==(const Patient&) const = default;
};

/// Drug-name lookup used to classify prescriptions that arrive without a class.
struct DrugTable {
  std::map<std::string, DrugClass, std::less<>> classes;

  static DrugTable defaults() {
    DrugTable t;
    for (const char* n : {"atezolizumab", "avelumab", "durvalumab", "pembrolizumab", "nivolumab",
                          "ipilimumab"})
      t.classes[n] = DrugClass::ici;
    for (const char* n : {"prednisone", "methylprednisolone", "dexamethasone", "hydrocortisone",
                          "prednisolone"})
      t.classes[n] = DrugClass::corticosteroid;
    return t;
  }

  DrugClass lookup(std::string_view name) const {
    const auto it = classes.find(utf8::fold(name));
    return it == classes.end() ? DrugClass::other : it->second;
  }

  bool is_ici(std::string_view name) const { return lookup(name) == DrugClass::ici; }
};

/// The six regimens of the reference cohort.
inline std::vector<std::string> default_regimens() {
  return {"atezolizumab", "avelumab", "durvalumab", "pembrolizumab", "nivolumab",
          "ipilimumab_nivolumab"};
}

// ---------------------------------------------------------------------------
// Loading

namespace detail {

inline const json& require_field(const json& row, const char* field, std::size_t line) {
  const auto it = row.find(field);
  if (it == row.end() || it->is_null())
    throw data_error(fmt::format("line {}: missing field '{}'", line, field));
  return *it;
}

inline std::string require_string(const json& row, const char* field, std::size_t line) {
  const json& v = require_field(row, field, line);
  if (!v.is_string()) throw data_error(fmt::format("line {}: field '{}' must be a string", line, field));
  return v.get<std::string>();
}

inline Date require_date(const json& row, const char* field, std::size_t line) {
  const std::string s = require_string(row, field, line);
  const auto d = Date::parse(s);
  if (!d) throw data_error(fmt::format("line {}: field '{}': unknown date format '{}'", line, field, s));
  return *d;
}

inline bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || (c >= '\t' && c <= '\r'); });
}

/// Maps CSV header names to column indices; throws if a required column is absent.
struct CsvHeader {
  std::map<std::string, std::size_t, std::less<>> index;

  explicit CsvHeader(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = i;
  }
  std::optional<std::size_t> find(std::string_view name) const {
    const auto it = index.find(name);
    return it == index.end() ? std::nullopt : std::optional(it->second);
  }
  std::size_t require(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw data_error(fmt::format("line 1: missing column '{}'", name));
  }
};

/// Visits every record of a JSONL or CSV file as a JSON object with string
/// values for CSV cells (empty cells become null).
template <class Visit>
void for_each_record(const std::string& path, FileFormat format, Visit&& visit) {
  auto in = open_input(path);
  if (format == FileFormat::jsonl) {
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (blank(line)) continue;
      json row;
      try {
        row = json::parse(line);
      } catch (const json::parse_error& e) {
        throw data_error(fmt::format("line {}: malformed JSON ({})", n, e.what()));
      }
      if (!row.is_object()) throw data_error(fmt::format("line {}: record is not a JSON object", n));
      visit(row, n);
    }
    return;
  }
  CsvReader reader(in);
  auto header_row = reader.next();
  if (!header_row) return;
  const CsvHeader header(*header_row);
  while (auto row = reader.next()) {
    if (row->size() == 1 && blank((*row)[0])) continue;
    json obj = json::object();
    for (const auto& [name, col] : header.index) {
      if (col < row->size() && !(*row)[col].empty())
        obj[name] = (*row)[col];
      else
        obj[name] = nullptr;
    }
    visit(obj, reader.record_line());
  }
}

inline std::optional<double> optional_number(const json& row, const char* field, std::size_t line) {
  const auto it = row.find(field);
  if (it == row.end() || it->is_null()) return std::nullopt;
  if (it->is_number()) return it->get<double>();
  if (it->is_string()) {
    const std::string s = it->get<std::string>();
    if (s.empty() || s == "-") return std::nullopt;
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
  }
  throw data_error(fmt::format("line {}: field '{}' is not a number", line, field));
}

}  // namespace detail

inline std::vector<ClinicalNote> load_notes(const std::string& path, FileFormat format) {
  std::vector<ClinicalNote> notes;
  std::unordered_set<std::string> seen;
  detail::for_each_record(path, format, [&](const json& row, std::size_t line) {
    ClinicalNote n;
    n.note_id = detail::require_string(row, "note_id", line);
    n.patient_id = detail::require_string(row, "patient_id", line);
    n.date = detail::require_date(row, "date", line);
    n.source = detail::require_string(row, "source", line);
    n.text = detail::require_string(row, "text", line);
    if (detail::blank(n.text)) throw data_error(fmt::format("line {}: field 'text' is empty", line));
    if (!seen.insert(n.note_id).second)
      throw data_error(fmt::format("line {}: duplicate note_id '{}'", line, n.note_id));
    notes.push_back(std::move(n));
  });
  return notes;
}

inline std::vector<PrescriptionRecord> load_prescriptions(const std::string& path, FileFormat format,
                                                          const DrugTable& drugs = DrugTable::defaults()) {
  std::vector<PrescriptionRecord> out;
  detail::for_each_record(path, format, [&](const json& row, std::size_t line) {
    PrescriptionRecord r;
    r.patient_id = detail::require_string(row, "patient_id", line);
    r.drug_name = detail::require_string(row, "drug_name", line);
    r.date = detail::require_date(row, "date", line);
    r.dose_mg_per_kg_day = detail::optional_number(row, "dose_mg_per_kg_day", line);
    const auto cls = row.find("drug_class");
    if (cls != row.end() && !cls->is_null()) {
      const auto parsed = cls->is_string() ? parse_drug_class(cls->get<std::string>()) : std::nullopt;
      if (!parsed) throw data_error(fmt::format("line {}: field 'drug_class' has unknown value", line));
      r.drug_class = *parsed;
    } else {
      r.drug_class = drugs.lookup(r.drug_name);
    }
    if (r.drug_class == DrugClass::ici && !drugs.is_ici(r.drug_name))
      throw data_error(fmt::format("line {}: '{}' is not a configured ICI drug", line, r.drug_name));
    if (r.dose_mg_per_kg_day && *r.dose_mg_per_kg_day < 0.0)
      throw data_error(fmt::format("line {}: field 'dose_mg_per_kg_day' is negative", line));
    if (r.drug_class == DrugClass::corticosteroid && !r.dose_mg_per_kg_day)
      throw data_error(fmt::format("line {}: missing field 'dose_mg_per_kg_day' for corticosteroid", line));
    out.push_back(std::move(r));
  });
  return out;
}

inline std::vector<Patient> load_patients(const std::string& path, FileFormat format,
                                          const std::vector<std::string>& regimens = default_regimens()) {
  std::vector<Patient> out;
  std::unordered_set<std::string> seen;
  detail::for_each_record(path, format, [&](const json& row, std::size_t line) {
    Patient p;
    p.patient_id = detail::require_string(row, "patient_id", line);
    p.regimen = detail::require_string(row, "regimen", line);
    if (std::find(regimens.begin(), regimens.end(), p.regimen) == regimens.end())
      throw data_error(fmt::format("line {}: unknown regimen '{}'", line, p.regimen));
    if (auto age = detail::optional_number(row, "age", line)) p.age = static_cast<int>(*age);
    if (auto it = row.find("sex"); it != row.end() && !it->is_null()) {
      const std::string s = it->is_string() ? utf8::fold(it->get<std::string>()) : "";
      if (s == "f" || s == "female") p.sex = Sex::female;
      else if (s == "m" || s == "male") p.sex = Sex::male;
      else if (s == "other") p.sex = Sex::other;
      else throw data_error(fmt::format("line {}: field 'sex' has unknown value", line));
    }
    if (auto it = row.find("malignancy"); it != row.end() && it->is_string()) p.malignancy = it->get<std::string>();
    if (!seen.insert(p.patient_id).second)
      throw data_error(fmt::format("line {}: duplicate patient_id '{}'", line, p.patient_id));
    out.push_back(std::move(p));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline json to_json(const ClinicalNote& n) {
  return {{"note_id", n.note_id}, {"patient_id", n.patient_id}, {"date", n.date.str()},
          {"source", n.source}, {"text", n.text}};
}

inline json to_json(const PrescriptionRecord& r) {
  json j = {{"patient_id", r.patient_id}, {"drug_name", r.drug_name},
            {"drug_class", std::string(to_string(r.drug_class))}, {"date", r.date.str()}};
  j["dose_mg_per_kg_day"] = r.dose_mg_per_kg_day ? json(*r.dose_mg_per_kg_day) : json(nullptr);
  return j;
}

inline json to_json(const Patient& p) {
  json j = {{"patient_id", p.patient_id}, {"regimen", p.regimen}};
  if (p.age) j["age"] = *p.age;
  if (p.sex) j["sex"] = *p.sex == Sex::female ? "female" : *p.sex == Sex::male ? "male" : "other";
  if (p.malignancy) j["malignancy"] = *p.malignancy;
  return j;
}

template <class Record>
void save_jsonl(const std::vector<Record>& records, const std::string& path) {
  auto out = open_output(path);
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline void save_notes(const std::vector<ClinicalNote>& notes, const std::string& path, FileFormat format) {
  if (format == FileFormat::jsonl) return save_jsonl(notes, path);
  auto out = open_output(path);
  out << "note_id,patient_id,date,source,text\n";
  for (const auto& n : notes) out << csv_row({n.note_id, n.patient_id, n.date.str(), n.source, n.text});
}

inline std::string format_number(double v) { return json(v).dump(); }

inline void save_prescriptions(const std::vector<PrescriptionRecord>& rows, const std::string& path,
                               FileFormat format) {
  if (format == FileFormat::jsonl) return save_jsonl(rows, path);
  auto out = open_output(path);
  out << "patient_id,drug_name,drug_class,dose_mg_per_kg_day,date\n";
  for (const auto& r : rows)
    out << csv_row({r.patient_id, r.drug_name, std::string(to_string(r.drug_class)),
                    r.dose_mg_per_kg_day ? format_number(*r.dose_mg_per_kg_day) : "", r.date.str()});
}

// ---------------------------------------------------------------------------
// Tokenization

/// One whitespace-delimited token with edge punctuation stripped. surface
/// views the tokenized text, which must outlive the token.
struct Token {
  std::string_view surface;
  std::size_t begin = 0;  // byte offsets into the text, [begin, end)
  std::size_t end = 0;
};

inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    auto d = utf8::decode_at(text, i);
    if (utf8::is_space(d.cp)) {
      i += d.len;
      continue;
    }
    // token run [i, run_end); core is the run minus edge punctuation
    std::size_t core_begin = std::string_view::npos;
    std::size_t core_end = 0;
    std::size_t j = i;
    while (j < text.size()) {
      d = utf8::decode_at(text, j);
      if (utf8::is_space(d.cp)) break;
      if (!utf8::is_punct(d.cp)) {
        if (core_begin == std::string_view::npos) core_begin = j;
        core_end = j + d.len;
      }
      j += d.len;
    }
    if (core_begin != std::string_view::npos)
      tokens.push_back({text.substr(core_begin, core_end - core_begin), core_begin, core_end});
    i = j;
  }
  return tokens;
}

/// A note together with its tokens. Token surfaces view note->text.
struct TokenizedNote {
  const ClinicalNote* note = nullptr;
  std::vector<Token> tokens;
};

inline TokenizedNote tokenize(const ClinicalNote& note) { return {&note, tokenize(note.text)}; }

// ---------------------------------------------------------------------------
// Cohort

struct CohortConfig {
  int followup_days = 90;
  bool include_start = true;
  bool include_end = true;
};

struct PatientRecord {
  Patient patient;
  std::vector<ClinicalNote> notes;                 // in-window, sorted by (date, note_id)
  std::vector<PrescriptionRecord> prescriptions;   // sorted by date
  std::vector<Date> ici_dates;                     // distinct, ascending, never empty
  Date followup_start;
  Date followup_end;

  /// Last in-window note date, or the follow-up end when there are no notes.
  Date last_observation() const { return notes.empty() ? followup_end : notes.back().date; }
};

struct Cohort {
  std::vector<PatientRecord> patients;  // sorted by patient_id
  std::vector<std::string> warnings;
  std::size_t excluded_notes = 0;

  const PatientRecord* find(std::string_view patient_id) const {
    const auto it = std::lower_bound(patients.begin(), patients.end(), patient_id,
                                     [](const PatientRecord& r, std::string_view id) { return r.patient.patient_id < id; });
    return it != patients.end() && it->patient.patient_id == patient_id ? &*it : nullptr;
  }

  std::size_t note_count() const {
    std::size_t n = 0;
    for (const auto& p : patients) n += p.notes.size();
    return n;
  }
};

inline bool in_followup(Date d, Date start, Date end, const CohortConfig& cfg) {
  const bool after = cfg.include_start ? d >= start : d > start;
  const bool before = cfg.include_end ? d <= end : d < end;
  return after && before;
}

inline Cohort build_cohort(std::vector<Patient> patients, std::vector<ClinicalNote> notes,
                           std::vector<PrescriptionRecord> prescriptions, const CohortConfig& cfg = {}) {
  if (cfg.followup_days < 0) throw config_error("cohort.followup_days must be >= 0");
  std::map<std::string, PatientRecord> by_id;
  for (auto& p : patients) {
    const std::string id = p.patient_id;
    if (by_id.contains(id)) throw data_error(fmt::format("duplicate patient_id '{}'", id));
    by_id[id].patient = std::move(p);
  }

  std::set<std::string> unknown;
  for (const auto& n : notes)
    if (!by_id.contains(n.patient_id)) unknown.insert(n.patient_id);
  for (const auto& r : prescriptions)
    if (!by_id.contains(r.patient_id)) unknown.insert(r.patient_id);
  if (!unknown.empty()) {
    std::string list;
    for (const auto& id : unknown) list += (list.empty() ? "" : ", ") + id;
    throw data_error(fmt::format("records reference unknown patients: {}", list));
  }

  for (auto& r : prescriptions) {
    auto& rec = by_id[r.patient_id];
    if (r.drug_class == DrugClass::ici) rec.ici_dates.push_back(r.date);
    rec.prescriptions.push_back(std::move(r));
  }

  Cohort cohort;
  for (auto& [id, rec] : by_id) {
    std::sort(rec.ici_dates.begin(), rec.ici_dates.end());
    rec.ici_dates.erase(std::unique(rec.ici_dates.begin(), rec.ici_dates.end()), rec.ici_dates.end());
    std::stable_sort(rec.prescriptions.begin(), rec.prescriptions.end(),
                     [](const auto& a, const auto& b) { return a.date < b.date; });
    if (rec.ici_dates.empty()) {
      cohort.warnings.push_back(fmt::format("patient '{}' has no ICI administrations; excluded", id));
      continue;
    }
    rec.followup_start = rec.ici_dates.front();
    rec.followup_end = rec.ici_dates.back() + cfg.followup_days;
  }

  for (auto& n : notes) {
    auto& rec = by_id[n.patient_id];
    if (rec.ici_dates.empty()) continue;
    if (in_followup(n.date, rec.followup_start, rec.followup_end, cfg))
      rec.notes.push_back(std::move(n));
    else
      ++cohort.excluded_notes;
  }

  for (auto& [id, rec] : by_id) {
    if (rec.ici_dates.empty()) continue;
    std::sort(rec.notes.begin(), rec.notes.end(), [](const ClinicalNote& a, const ClinicalNote& b) {
      return a.date != b.date ? a.date < b.date : a.note_id < b.note_id;
    });
    cohort.patients.push_back(std::move(rec));
  }
  return cohort;
}

}  // namespace irae

#endif
