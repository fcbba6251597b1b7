#include <cctype>
#include <map>

#include <gtest/gtest.h>

#include "irae/matcher.hpp"
#include "irae/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace irae;

namespace {

ClinicalNote make_note(std::string text) { return {"n1", "P1", Date::parse_or_throw("2021-01-01"), "clinic", std::move(text)}; }

std::string random_word(Rng& rng, const std::string& alphabet, int lo, int hi) {
  std::string s;
  const auto n = rng.between(lo, hi);
  for (std::int64_t i = 0; i < n; ++i) s += alphabet[rng.below(alphabet.size())];
  return s;
}

std::string mutate(Rng& rng, std::string s, int edits) {
  const std::string letters = "abcdefghijklmnopqrstuvwxyz";
  for (int e = 0; e < edits; ++e) {
    const auto op = rng.below(3);
    if (op == 0 && s.size() > 1) {
      s.erase(rng.below(s.size()), 1);
    } else if (op == 1) {
      s.insert(s.begin() + static_cast<std::ptrdiff_t>(rng.below(s.size() + 1)), letters[rng.below(26)]);
    } else if (!s.empty()) {
      s[rng.below(s.size())] = letters[rng.below(26)];
    }
  }
  return s;
}

std::string ascii_lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

TEST(Levenshtein, Examples) {
  EXPECT_EQ(levenshtein(std::string_view("pneumonitis"), std::string_view("pneumonitis")), 0u);
  EXPECT_EQ(levenshtein(std::string_view(""), std::string_view("abc")), 3u);
  EXPECT_EQ(levenshtein(std::string_view("pnumonitis"), std::string_view("pneumonitis")), 1u);
  EXPECT_EQ(oracle::levenshtein(std::string("pnumonitis"), std::string("pneumonitis")), 1u);
  EXPECT_EQ(levenshtein(std::string_view("kitten"), std::string_view("sitting")), 3u);
}

TEST(Levenshtein, CountsCodePointsNotBytes) {
  EXPECT_EQ(levenshtein(std::string_view("café"), std::string_view("cafe")), 1u);
  EXPECT_EQ(levenshtein(std::string_view("חשד"), std::string_view("חש")), 1u);
}

TEST(Levenshtein, MatchesFullTableOracleOnRandomPairs) {
  Rng rng(2024);
  const std::string alphabet = "abcde";
  for (int i = 0; i < 10000; ++i) {
    const auto a = random_word(rng, alphabet, 0, 12);
    const auto b = rng.bernoulli(0.5) ? mutate(rng, a, static_cast<int>(rng.between(0, 4)))
                                      : random_word(rng, alphabet, 0, 12);
    ASSERT_EQ(levenshtein(std::string_view(a), std::string_view(b)), oracle::levenshtein(a, b)) << a << " / " << b;
  }
}

TEST(Levenshtein, BoundedVersionIsExactWithinBound) {
  Rng rng(7);
  for (int i = 0; i < 3000; ++i) {
    const auto a = oracle::code_points(random_word(rng, "abc", 0, 10));
    const auto b = oracle::code_points(random_word(rng, "abc", 0, 10));
    const auto bound = static_cast<std::size_t>(rng.between(0, 6));
    const auto d = oracle::levenshtein(a, b);
    const auto got = bounded_levenshtein(a, b, bound);
    if (d <= bound) ASSERT_EQ(got, d);
    else ASSERT_GT(got, bound);
  }
}

TEST(Levenshtein, IsAMetric) {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_word(rng, "abcd", 0, 8);
    const auto b = random_word(rng, "abcd", 0, 8);
    const auto c = random_word(rng, "abcd", 0, 8);
    const auto dab = levenshtein(std::string_view(a), std::string_view(b));
    ASSERT_EQ(levenshtein(std::string_view(a), std::string_view(a)), 0u);
    ASSERT_EQ(dab, levenshtein(std::string_view(b), std::string_view(a)));
    ASSERT_LE(levenshtein(std::string_view(a), std::string_view(c)),
              dab + levenshtein(std::string_view(b), std::string_view(c)));
    ASSERT_LE(dab, std::max(a.size(), b.size()));
  }
}

TEST(Similarity, Examples) {
  EXPECT_DOUBLE_EQ(similarity(std::string_view("x"), std::string_view("x")), 1.0);
  EXPECT_NEAR(similarity(std::string_view("pnumonitis"), std::string_view("pneumonitis")), 1.0 - 1.0 / 11.0, 1e-12);
  EXPECT_DOUBLE_EQ(similarity(std::string_view("abc"), std::string_view("xyz")), 0.0);
  EXPECT_THROW(similarity(std::string_view(""), std::string_view("")), Error);
}

TEST(Similarity, OneOnlyForEqualStrings) {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_word(rng, "ab", 1, 5);
    const auto b = random_word(rng, "ab", 1, 5);
    const double s = similarity(std::string_view(a), std::string_view(b));
    ASSERT_EQ(s == 1.0, a == b);
    ASSERT_GE(s, 0.0);
    ASSERT_LE(s, 1.0);
  }
}

TEST(Similarity, TwoEditsOfElevenCharactersPassDefault) {
  EXPECT_TRUE(passes_threshold(1.0 - 2.0 / 11.0, 0.80));
  EXPECT_FALSE(passes_threshold(1.0 - 3.0 / 11.0, 0.80));
  EXPECT_TRUE(passes_threshold(1.0 - 2.0 / 10.0, 0.80));
}

TEST(Scan, FindsSingleMisspelling) {
  const auto note = make_note("suspected pnemonitis after cycle 3");
  const auto tn = tokenize(note);
  const Lexicon lex({{"pneumonitis", "pneumonitis", "en", std::nullopt}});
  const auto c = scan_note(tn, lex);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].token_index, 1u);
  EXPECT_EQ(c[0].matched_surface, "pnemonitis");
  EXPECT_NEAR(c[0].similarity, oracle::similarity("pnemonitis", "pneumonitis"), 1e-12);
  EXPECT_NEAR(c[0].similarity, 0.909, 1e-3);
}

TEST(Scan, ReportedMisspellingsAllFlagged) {
  const auto lex = Lexicon::defaults();
  for (const char* word : {"pneumonirtis", "pnumonitis", "pnemonitis", "pneumnuitis", "pneumonytis"}) {
    const auto note = make_note(std::string("patient has ") + word + " today");
    const auto c = scan_note(tokenize(note), lex);
    bool found = false;
    for (const auto& m : c) found |= m.ae_id == "pneumonitis" && m.token_index == 2;
    EXPECT_TRUE(found) << word;
  }
}

TEST(Scan, NoMatchesGivesEmpty) {
  const auto note = make_note("patient tolerated cycle three without complaint");
  EXPECT_TRUE(scan_note(tokenize(note), Lexicon::defaults()).empty());
}

TEST(Scan, CaseFoldAndShortTokens) {
  const Lexicon lex({{"x", "abcd", "en", std::nullopt}});
  const auto note = make_note("ABCD abc");
  EXPECT_EQ(scan_note(tokenize(note), lex).size(), 1u);
  MatchConfig strict;
  strict.case_fold = false;
  EXPECT_TRUE(scan_note(tokenize(note), lex, strict).empty());
}

TEST(Scan, PerEntryThresholdOverridesDefault) {
  // 2 edits on a 7-letter term: 0.714 fails the global 0.80 but passes 0.70
  const auto note = make_note("acute colitsi noted");
  EXPECT_TRUE(scan_note(tokenize(note), Lexicon({{"colitis", "colitis", "en", std::nullopt}})).empty());
  EXPECT_EQ(scan_note(tokenize(note), Lexicon({{"colitis", "colitis", "en", 0.70}})).size(), 1u);
}

TEST(Scan, MatchesNaiveAllPairsOracle) {
  const Lexicon lex({{"colitis", "colitis", "en", 0.70},
                     {"colitis", "enterocolitis", "en", std::nullopt},
                     {"hepatitis", "hepatitis", "en", 0.75},
                     {"pneumonitis", "pneumonitis", "en", std::nullopt},
                     {"pneumonitis", "pneumonia", "en", std::nullopt},
                     {"thyroiditis", "thyroiditis", "en", std::nullopt},
                     {"thyroiditis", "thyroidits", "en", std::nullopt}});
  MatchConfig cfg;
  const Scanner scanner(lex, cfg);
  Rng rng(42);
  const std::vector<std::string> fillers{"the", "patient", "was", "seen", "no", "evidence", "of", "AND", "with"};
  for (int iter = 0; iter < 1500; ++iter) {
    std::string text;
    const auto n = rng.between(0, 15);
    for (std::int64_t k = 0; k < n; ++k) {
      std::string w;
      const auto kind = rng.below(3);
      if (kind == 0) w = rng.pick(fillers);
      else if (kind == 1) w = mutate(rng, rng.pick(lex.entries()).term, static_cast<int>(rng.between(0, 4)));
      else w = random_word(rng, "aeiolnst", 1, 12);
      if (rng.bernoulli(0.2)) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
      if (rng.bernoulli(0.2)) w += ",";
      text += w + " ";
    }
    const auto note = make_note(text);
    const auto tn = tokenize(note);
    const auto got = scanner.scan(tn);

    std::vector<MentionCandidate> expected;
    for (std::size_t t = 0; t < tn.tokens.size(); ++t) {
      const std::string word = ascii_lower(std::string(tn.tokens[t].surface));
      if (oracle::code_points(word).size() < static_cast<std::size_t>(cfg.min_token_length)) continue;
      std::map<std::string, std::pair<double, std::string>> best;
      for (const auto& e : lex.entries()) {
        const double s = oracle::similarity(word, e.term);
        if (s < e.threshold.value_or(cfg.similarity_threshold) - 1e-9) continue;
        auto it = best.find(e.ae_id);
        if (it == best.end() || s > it->second.first || (s == it->second.first && e.term < it->second.second))
          best[e.ae_id] = {s, e.term};
      }
      for (const auto& [ae, b] : best)
        expected.push_back({"n1", "P1", ae, t, std::string(tn.tokens[t].surface), b.second, b.first});
    }
    ASSERT_EQ(got.size(), expected.size()) << text;
    for (std::size_t i = 0; i < got.size(); ++i) {
      ASSERT_EQ(got[i].token_index, expected[i].token_index) << text;
      ASSERT_EQ(got[i].ae_id, expected[i].ae_id) << text;
      ASSERT_EQ(got[i].matched_term, expected[i].matched_term) << text;
      ASSERT_NEAR(got[i].similarity, expected[i].similarity, 1e-12) << text;
    }
  }
}

TEST(Scan, AnyTwoEditCorruptionOfElevenLetterTermIsFound) {
  const auto lex = Lexicon::defaults();
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    const std::string term = rng.bernoulli(0.5) ? "pneumonitis" : "thyroiditis";
    const auto w = mutate(rng, term, 2);
    const auto d = oracle::levenshtein(w, term);
    if (d == 0 || d > 2) continue;
    const auto note = make_note("x " + w + " y");
    bool found = false;
    for (const auto& c : scan_note(tokenize(note), lex)) found |= c.ae_id == term && c.token_index == 1;
    ASSERT_TRUE(found) << w;
  }
}

TEST(ExtractWindow, CentersAndTruncates) {
  std::string text;
  for (int i = 0; i < 20; ++i) text += "w" + std::to_string(i) + " ";
  const auto note = make_note(text);
  const auto tn = tokenize(note);
  MentionCandidate c{"n1", "P1", "pneumonitis", 7, "w7", "pneumonitis", 1.0};
  auto w = extract_window(tn, c);
  ASSERT_EQ(w.tokens.size(), 11u);
  EXPECT_EQ(w.tokens.front(), "w2");
  EXPECT_EQ(w.tokens.back(), "w12");
  EXPECT_EQ(w.tokens[w.center], "w7");
  c.token_index = 2;
  w = extract_window(tn, c);
  ASSERT_EQ(w.tokens.size(), 8u);
  EXPECT_EQ(w.tokens.front(), "w0");
  EXPECT_EQ(w.tokens.back(), "w7");
  EXPECT_EQ(w.center, 2u);
}

TEST(ExtractWindow, SingleTokenNote) {
  const auto note = make_note("pneumonitis");
  const auto tn = tokenize(note);
  const auto w = extract_window(tn, {"n1", "P1", "pneumonitis", 0, "pneumonitis", "pneumonitis", 1.0});
  ASSERT_EQ(w.tokens.size(), 1u);
  EXPECT_EQ(w.center, 0u);
}

TEST(ExtractWindow, InvariantsOnRandomNotes) {
  Rng rng(17);
  for (int iter = 0; iter < 500; ++iter) {
    std::string text;
    const auto n = rng.between(1, 30);
    for (std::int64_t i = 0; i < n; ++i) text += "t" + std::to_string(i) + " ";
    const auto note = make_note(text);
    const auto tn = tokenize(note);
    const auto idx = static_cast<std::size_t>(rng.below(tn.tokens.size()));
    const auto w = extract_window(tn, {"n1", "P1", "a", idx, "", "", 1.0});
    ASSERT_LE(w.tokens.size(), 11u);
    ASSERT_EQ(w.tokens[w.center], tn.tokens[idx].surface);
    for (std::size_t k = 0; k < w.tokens.size(); ++k)
      ASSERT_EQ(w.tokens[k], tn.tokens[idx - w.center + k].surface);
  }
}

TEST(ExtractWindow, ForeignCandidateRejected) {
  const auto note = make_note("one two");
  EXPECT_THROW(extract_window(tokenize(note), {"n1", "P1", "a", 5, "", "", 1.0}), Error);
}

TEST(Lexicon, LoadWithOptionalThresholdColumnAndRoundTrip) {
  testutil::TempDir dir;
  testutil::write_file(dir.file("lex.tsv"), "# comment\n"
                                            "colitis\tColitis\ten\t0.7\n"
                                            "pneumonitis\tpneumonitis\ten\n");
  const auto lex = Lexicon::load(dir.file("lex.tsv"));
  ASSERT_EQ(lex.entries().size(), 2u);
  EXPECT_EQ(lex.entries()[0].term, "colitis");
  EXPECT_DOUBLE_EQ(*lex.entries()[0].threshold, 0.7);
  EXPECT_FALSE(lex.entries()[1].threshold);
  lex.save(dir.file("out.tsv"));
  EXPECT_EQ(Lexicon::load(dir.file("out.tsv")).entries(), lex.entries());
}

TEST(Lexicon, RejectsMalformedEntries) {
  testutil::TempDir dir;
  testutil::write_file(dir.file("cols.tsv"), "colitis\tcolitis\n");
  EXPECT_THROW(Lexicon::load(dir.file("cols.tsv")), Error);
  testutil::write_file(dir.file("dup.tsv"), "colitis\tcolitis\ten\ncolitis\tCOLITIS\ten\n");
  EXPECT_THROW(Lexicon::load(dir.file("dup.tsv")), Error);
  EXPECT_THROW(Lexicon({{"a", "two words", "en", std::nullopt}}), Error);
  EXPECT_THROW(Lexicon({{"a", "term", "en", 1.5}}), Error);
}

TEST(MatchConfig, Validation) {
  MatchConfig c;
  c.similarity_threshold = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.window_radius = 0;
  EXPECT_THROW(c.validate(), Error);
}
