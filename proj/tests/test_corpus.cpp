#include <functional>
#include <set>

#include <gtest/gtest.h>

#include "irae/corpus.hpp"
#include "irae/rng.hpp"
#include "test_util.hpp"

using namespace irae;
using testutil::TempDir;
using testutil::write_file;

namespace {

Date day(int n) { return Date::parse_or_throw("2021-01-01") + n; }

ClinicalNote note(std::string id, std::string patient, int d, std::string text = "seen in clinic") {
  return {std::move(id), std::move(patient), day(d), "clinic", std::move(text)};
}

PrescriptionRecord dose(std::string patient, int d, std::string drug = "pembrolizumab") {
  return {std::move(patient), std::move(drug), DrugClass::ici, std::nullopt, day(d)};
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Date, ParsesAndPrintsIsoDates) {
  const auto d = Date::parse("2020-02-29");
  ASSERT_TRUE(d);
  EXPECT_EQ(d->str(), "2020-02-29");
  EXPECT_EQ((*d + 1).str(), "2020-03-01");
  EXPECT_FALSE(Date::parse("2021-02-29"));
  EXPECT_FALSE(Date::parse("2021-1-01"));
  EXPECT_FALSE(Date::parse("01/02/2021"));
  EXPECT_EQ(Date::parse_or_throw("2021-03-01") - Date::parse_or_throw("2021-01-01"), 59);
}

TEST(LoadNotes, KeepsFileOrder) {
  TempDir dir;
  write_file(dir.file("n.jsonl"),
             R"({"note_id":"b","patient_id":"P1","date":"2021-01-02","source":"clinic","text":"second"})"
             "\n"
             R"({"note_id":"a","patient_id":"P1","date":"2021-01-01","source":"admission","text":"first"})"
             "\n");
  const auto notes = load_notes(dir.file("n.jsonl"), FileFormat::jsonl);
  ASSERT_EQ(notes.size(), 2u);
  EXPECT_EQ(notes[0].note_id, "b");
  EXPECT_EQ(notes[1].note_id, "a");
  EXPECT_EQ(notes[1].source, "admission");
}

TEST(LoadNotes, MissingDateNamesLineAndField) {
  TempDir dir;
  write_file(dir.file("n.jsonl"), R"({"note_id":"a","patient_id":"P1","source":"clinic","text":"x"})"
                                  "\n");
  const auto msg = error_of([&] { load_notes(dir.file("n.jsonl"), FileFormat::jsonl); });
  EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("date"), std::string::npos) << msg;
}

TEST(LoadNotes, RejectsDuplicatesBlankTextAndBadDates) {
  TempDir dir;
  const std::string row = R"({"note_id":"a","patient_id":"P1","date":"2021-01-01","source":"clinic","text":"x"})";
  write_file(dir.file("dup.jsonl"), row + "\n" + row + "\n");
  EXPECT_THROW(load_notes(dir.file("dup.jsonl"), FileFormat::jsonl), Error);
  write_file(dir.file("blank.jsonl"),
             R"({"note_id":"a","patient_id":"P1","date":"2021-01-01","source":"clinic","text":"  "})"
             "\n");
  EXPECT_THROW(load_notes(dir.file("blank.jsonl"), FileFormat::jsonl), Error);
  write_file(dir.file("date.jsonl"),
             R"({"note_id":"a","patient_id":"P1","date":"01/01/2021","source":"clinic","text":"x"})"
             "\n");
  EXPECT_THROW(load_notes(dir.file("date.jsonl"), FileFormat::jsonl), Error);
}

TEST(LoadNotes, MissingFileIsAnInputError) {
  try {
    load_notes("/nonexistent/notes.jsonl", FileFormat::jsonl);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::input);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/notes.jsonl"), std::string::npos);
  }
}

TEST(LoadNotes, CsvWithQuotedMultilineText) {
  TempDir dir;
  write_file(dir.file("n.csv"), "note_id,patient_id,date,source,text\n"
                                "n1,P1,2021-01-01,clinic,\"line one,\nline \"\"two\"\"\"\n");
  const auto notes = load_notes(dir.file("n.csv"), FileFormat::csv);
  ASSERT_EQ(notes.size(), 1u);
  EXPECT_EQ(notes[0].text, "line one,\nline \"two\"");
}

TEST(LoadNotes, RoundTripIsRecordEquivalent) {
  TempDir dir;
  std::vector<ClinicalNote> notes{note("n1", "P1", 0, "pneumonitis, \"quoted\"\nnext line"),
                                  note("n2", "P2", 3, "חשד ל pneumonitis")};
  for (auto fmt : {FileFormat::jsonl, FileFormat::csv}) {
    const auto path = dir.file(fmt == FileFormat::jsonl ? "n.jsonl" : "n.csv");
    save_notes(notes, path, fmt);
    EXPECT_EQ(load_notes(path, fmt), notes);
  }
}

TEST(LoadPrescriptions, InfersDrugClass) {
  TempDir dir;
  write_file(dir.file("rx.csv"), "patient_id,drug_name,dose_mg_per_kg_day,date\n"
                                 "P1,prednisone,1.5,2021-03-01\n"
                                 "P1,pembrolizumab,-,2021-01-01\n"
                                 "P1,ondansetron,,2021-01-01\n");
  const auto rx = load_prescriptions(dir.file("rx.csv"), FileFormat::csv);
  ASSERT_EQ(rx.size(), 3u);
  EXPECT_EQ(rx[0].drug_class, DrugClass::corticosteroid);
  EXPECT_DOUBLE_EQ(*rx[0].dose_mg_per_kg_day, 1.5);
  EXPECT_EQ(rx[1].drug_class, DrugClass::ici);
  EXPECT_FALSE(rx[1].dose_mg_per_kg_day);
  EXPECT_EQ(rx[2].drug_class, DrugClass::other);
}

TEST(LoadPrescriptions, CorticosteroidWithoutDoseFails) {
  TempDir dir;
  write_file(dir.file("rx.jsonl"), R"({"patient_id":"P1","drug_name":"prednisone","date":"2021-03-01"})"
                                   "\n");
  EXPECT_THROW(load_prescriptions(dir.file("rx.jsonl"), FileFormat::jsonl), Error);
}

TEST(LoadPrescriptions, RejectsNegativeDoseAndUnknownIci) {
  TempDir dir;
  write_file(dir.file("neg.jsonl"),
             R"({"patient_id":"P1","drug_name":"prednisone","dose_mg_per_kg_day":-1,"date":"2021-03-01"})"
             "\n");
  EXPECT_THROW(load_prescriptions(dir.file("neg.jsonl"), FileFormat::jsonl), Error);
  write_file(dir.file("ici.jsonl"),
             R"({"patient_id":"P1","drug_name":"aspirin","drug_class":"ici","date":"2021-03-01"})"
             "\n");
  EXPECT_THROW(load_prescriptions(dir.file("ici.jsonl"), FileFormat::jsonl), Error);
  write_file(dir.file("date.jsonl"), R"({"patient_id":"P1","drug_name":"nivolumab","date":"2021/03/01"})"
                                     "\n");
  EXPECT_THROW(load_prescriptions(dir.file("date.jsonl"), FileFormat::jsonl), Error);
}

TEST(LoadPatients, ValidatesRegimenAndUniqueness) {
  TempDir dir;
  write_file(dir.file("p.jsonl"), R"({"patient_id":"P1","regimen":"nivolumab","age":61,"sex":"F"})"
                                  "\n");
  const auto p = load_patients(dir.file("p.jsonl"), FileFormat::jsonl);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].age, 61);
  EXPECT_EQ(p[0].sex, Sex::female);
  write_file(dir.file("bad.jsonl"), R"({"patient_id":"P1","regimen":"aspirin"})"
                                    "\n");
  EXPECT_THROW(load_patients(dir.file("bad.jsonl"), FileFormat::jsonl), Error);
  write_file(dir.file("dup.jsonl"), R"({"patient_id":"P1","regimen":"nivolumab"})"
                                    "\n"
                                    R"({"patient_id":"P1","regimen":"nivolumab"})"
                                    "\n");
  EXPECT_THROW(load_patients(dir.file("dup.jsonl"), FileFormat::jsonl), Error);
}

TEST(Tokenize, StripsEdgePunctuation) {
  const std::string text = "suspected pneumonitis.";
  const auto t = tokenize(text);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].surface, "suspected");
  EXPECT_EQ(t[1].surface, "pneumonitis");
  EXPECT_EQ(t[1].begin, 10u);
  EXPECT_EQ(t[1].end, 21u);
}

TEST(Tokenize, EmptyAndPunctuationOnly) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("  ... ,, \n").empty());
}

TEST(Tokenize, MixedScript) {
  const std::string text = "חשד ל pneumonitis";
  const auto t = tokenize(text);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0].surface, "חשד");
  EXPECT_EQ(t[1].surface, "ל");
  EXPECT_EQ(t[2].surface, "pneumonitis");
}

TEST(Tokenize, UnicodeWhitespaceSplits) {
  const std::string text = "a b c\td";
  const auto t = tokenize(text);
  ASSERT_EQ(t.size(), 4u);
  EXPECT_EQ(t[3].surface, "d");
}

TEST(Tokenize, SpansReconstructSurfacesOnRandomUtf8) {
  const std::vector<std::string> pieces{"a", "Z", "é", "ß", "ל", "ש", "中", "😀", " ", "  ", "\t", "\n", ".",
                                        ",", "(", ")", " ", "'", "\"", "-", "\xff", "\xc3"};
  Rng rng(99);
  for (int iter = 0; iter < 2000; ++iter) {
    std::string text;
    const auto n = rng.between(0, 30);
    for (std::int64_t k = 0; k < n; ++k) text += rng.pick(pieces);
    const auto tokens = tokenize(text);
    std::size_t prev_end = 0;
    for (const auto& tok : tokens) {
      ASSERT_LT(tok.begin, tok.end);
      ASSERT_LE(tok.end, text.size());
      ASSERT_GE(tok.begin, prev_end);
      ASSERT_EQ(text.substr(tok.begin, tok.end - tok.begin), tok.surface);
      prev_end = tok.end;
    }
  }
}

TEST(BuildCohort, FollowupWindowFromDoses) {
  std::vector<Patient> patients{{"P1", "pembrolizumab", {}, {}, {}}};
  std::vector<ClinicalNote> notes{note("n0", "P1", 0), note("n1", "P1", 132), note("n2", "P1", 133),
                                  note("n3", "P1", -1)};
  std::vector<PrescriptionRecord> rx{dose("P1", 42), dose("P1", 0), dose("P1", 21)};
  const auto c = build_cohort(patients, notes, rx);
  ASSERT_EQ(c.patients.size(), 1u);
  const auto& p = c.patients[0];
  EXPECT_EQ(p.followup_start, day(0));
  EXPECT_EQ(p.followup_end, day(132));
  ASSERT_EQ(p.notes.size(), 2u);
  EXPECT_EQ(p.notes[0].note_id, "n0");
  EXPECT_EQ(p.notes[1].note_id, "n1");
  EXPECT_EQ(c.excluded_notes, 2u);
}

TEST(BuildCohort, BoundaryInclusionIsConfigurable) {
  std::vector<Patient> patients{{"P1", "pembrolizumab", {}, {}, {}}};
  std::vector<ClinicalNote> notes{note("n0", "P1", 0), note("n1", "P1", 90)};
  std::vector<PrescriptionRecord> rx{dose("P1", 0)};
  CohortConfig open;
  open.include_start = false;
  open.include_end = false;
  EXPECT_EQ(build_cohort(patients, notes, rx).patients[0].notes.size(), 2u);
  EXPECT_EQ(build_cohort(patients, notes, rx, open).patients[0].notes.size(), 0u);
}

TEST(BuildCohort, NoteAfterSingleDoseWindowExcluded) {
  std::vector<Patient> patients{{"P1", "nivolumab", {}, {}, {}}};
  const auto c = build_cohort(patients, {note("n1", "P1", 200)}, {dose("P1", 0, "nivolumab")});
  EXPECT_TRUE(c.patients[0].notes.empty());
}

TEST(BuildCohort, PatientWithoutDosesExcludedWithWarning) {
  std::vector<Patient> patients{{"P1", "nivolumab", {}, {}, {}}, {"P2", "nivolumab", {}, {}, {}}};
  const auto c = build_cohort(patients, {note("n1", "P2", 5)}, {dose("P1", 0, "nivolumab")});
  ASSERT_EQ(c.patients.size(), 1u);
  EXPECT_EQ(c.patients[0].patient.patient_id, "P1");
  ASSERT_EQ(c.warnings.size(), 1u);
  EXPECT_NE(c.warnings[0].find("P2"), std::string::npos);
}

TEST(BuildCohort, UnknownPatientListsOffenders) {
  std::vector<Patient> patients{{"P1", "nivolumab", {}, {}, {}}};
  const auto msg = error_of([&] {
    build_cohort(patients, {note("n1", "X9", 5), note("n2", "X7", 5)}, {dose("P1", 0, "nivolumab")});
  });
  EXPECT_NE(msg.find("X7"), std::string::npos);
  EXPECT_NE(msg.find("X9"), std::string::npos);
}

TEST(BuildCohort, NotesSortedByDateThenId) {
  std::vector<Patient> patients{{"P1", "nivolumab", {}, {}, {}}};
  const auto c = build_cohort(patients, {note("b", "P1", 5), note("c", "P1", 1), note("a", "P1", 5)},
                              {dose("P1", 0, "nivolumab")});
  const auto& n = c.patients[0].notes;
  ASSERT_EQ(n.size(), 3u);
  EXPECT_EQ(n[0].note_id, "c");
  EXPECT_EQ(n[1].note_id, "a");
  EXPECT_EQ(n[2].note_id, "b");
}

TEST(BuildCohort, EnlargingFollowupNeverDropsNotes) {
  Rng rng(5);
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<Patient> patients;
    std::vector<ClinicalNote> notes;
    std::vector<PrescriptionRecord> rx;
    for (int p = 0; p < 5; ++p) {
      const std::string id = "P" + std::to_string(p);
      patients.push_back({id, "nivolumab", {}, {}, {}});
      const auto doses = rng.between(1, 4);
      for (std::int64_t k = 0; k < doses; ++k) rx.push_back(dose(id, static_cast<int>(rng.between(0, 100))));
      for (int k = 0; k < 6; ++k)
        notes.push_back(note("n" + std::to_string(p) + "_" + std::to_string(k), id,
                             static_cast<int>(rng.between(-20, 300))));
    }
    CohortConfig small, large;
    small.followup_days = static_cast<int>(rng.between(0, 120));
    large.followup_days = small.followup_days + static_cast<int>(rng.between(0, 120));
    const auto a = build_cohort(patients, notes, rx, small);
    const auto b = build_cohort(patients, notes, rx, large);
    std::set<std::string> in_b;
    for (const auto& p : b.patients)
      for (const auto& n : p.notes) in_b.insert(n.note_id);
    for (const auto& p : a.patients)
      for (const auto& n : p.notes) ASSERT_TRUE(in_b.contains(n.note_id));
  }
}
