#ifndef IRAE_MATCHER_HPP
#define IRAE_MATCHER_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <fmt/core.h>

#include "irae/corpus.hpp"
#include "irae/error.hpp"
#include "irae/utf8.hpp"

namespace irae {

// ---------------------------------------------------------------------------
// Edit distance

/// Levenshtein distance capped at bound + 1.
///
/// Only the diagonal band |i - j| <= bound is filled, and the scan stops as
/// soon as a whole row exceeds the bound. Returns the exact distance whenever
/// it is <= bound.
inline std::size_t bounded_levenshtein(std::u32string_view a, std::u32string_view b, std::size_t bound) {
  if (a.size() > b.size()) std::swap(a, b);
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t inf = bound + 1;
  if (m - n > bound) return inf;
  if (n == 0) return m;

  thread_local std::vector<std::size_t> prev;
  thread_local std::vector<std::size_t> cur;
  prev.resize(m + 1);
  cur.resize(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j <= bound ? j : inf;

  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t lo = i > bound ? i - bound : 1;
    const std::size_t hi = std::min(m, i + bound);
    cur[lo - 1] = lo == 1 ? (i <= bound ? i : inf) : inf;
    std::size_t row_min = cur[lo - 1];
    const char32_t ca = a[i - 1];
    for (std::size_t j = lo; j <= hi; ++j) {
      const std::size_t sub = prev[j - 1] + (ca != b[j - 1] ? 1 : 0);
      const std::size_t v = std::min({sub, prev[j] + 1, cur[j - 1] + 1, inf});
      cur[j] = v;
      row_min = std::min(row_min, v);
    }
    if (hi < m) cur[hi + 1] = inf;
    if (row_min > bound) return inf;
    std::swap(prev, cur);
  }
  return std::min(prev[m], inf);
}

inline std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  return bounded_levenshtein(a, b, std::max(a.size(), b.size()));
}

/// Edit distance over Unicode scalar values.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(utf8::decode(a), utf8::decode(b));
}

/// Comparison slack for threshold tests, so that e.g. 1 - 2/10 passes 0.8.
inline constexpr double kThresholdSlack = 1e-9;

inline bool passes_threshold(double similarity, double threshold) {
  return similarity >= threshold - kThresholdSlack;
}

/// 1 - d / max(|a|, |b|), lengths in scalar values.
inline double similarity(std::u32string_view a, std::u32string_view b) {
  const std::size_t m = std::max(a.size(), b.size());
  if (m == 0) throw data_error("similarity of two empty strings is undefined");
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(m);
}

inline double similarity(std::string_view a, std::string_view b) {
  return similarity(utf8::decode(a), utf8::decode(b));
}

/// Largest distance d with passes_threshold(1 - d/max_len, threshold).
inline std::size_t distance_budget(std::size_t max_len, double threshold) {
  const double m = static_cast<double>(max_len);
  auto ok = [&](std::size_t d) { return passes_threshold(1.0 - static_cast<double>(d) / m, threshold); };
  std::size_t k = static_cast<std::size_t>(std::max(0.0, std::floor((1.0 - threshold) * m)));
  k = std::min(k, max_len);
  while (k > 0 && !ok(k)) --k;
  while (k < max_len && ok(k + 1)) ++k;
  return k;
}

// ---------------------------------------------------------------------------
// Lexicon

inline std::vector<std::string> default_adverse_events() {
  return {"pneumonitis", "hepatitis", "thyroiditis", "colitis", "myocarditis", "dermatitis", "myasthenia_gravis"};
}

struct LexiconEntry {
  std::string ae_id;
  std::string term;      // lowercase-normalized
  std::string language;
  std::optional<double> threshold;  // overrides MatchConfig::similarity_threshold

  bool operator==(const LexiconEntry&) const = default;
};

class Lexicon {
 public:
  Lexicon() = default;

  explicit Lexicon(std::vector<LexiconEntry> entries) {
    for (auto& e : entries) {
      e.term = utf8::fold(e.term);
      if (e.ae_id.empty()) throw data_error("lexicon entry with empty ae_id");
      if (e.term.empty() || e.term.find_first_of(" \t") != std::string::npos)
        throw data_error(fmt::format("lexicon term for '{}' must be a single non-empty token", e.ae_id));
      if (e.threshold && !(*e.threshold > 0.0 && *e.threshold <= 1.0))
        throw data_error(fmt::format("lexicon threshold for '{}' must be in (0,1]", e.term));
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      return std::tie(a.ae_id, a.term) < std::tie(b.ae_id, b.term);
    });
    for (std::size_t i = 1; i < entries.size(); ++i)
      if (entries[i].ae_id == entries[i - 1].ae_id && entries[i].term == entries[i - 1].term)
        throw data_error(fmt::format("duplicate lexicon entry ({}, {})", entries[i].ae_id, entries[i].term));
    entries_ = std::move(entries);
  }

  /// English terms for the seven reference adverse events. The two short
  /// terms carry lower thresholds so that any two-edit misspelling still
  /// passes (1 - 2/9 and 1 - 2/7).
  static Lexicon defaults() {
    return Lexicon({
        {"colitis", "colitis", "en", 0.70},
        {"dermatitis", "dermatitis", "en", std::nullopt},
        {"hepatitis", "hepatitis", "en", 0.75},
        {"myasthenia_gravis", "myasthenia", "en", std::nullopt},
        {"myocarditis", "myocarditis", "en", std::nullopt},
        {"pneumonitis", "pneumonitis", "en", std::nullopt},
        {"thyroiditis", "thyroiditis", "en", std::nullopt},
    });
  }

  /// Tab-separated `ae_id term language [threshold]`; '#' starts a comment line.
  static Lexicon load(const std::string& path) {
    auto in = open_input(path);
    std::vector<LexiconEntry> entries;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> cols;
      std::size_t start = 0;
      for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1)
        cols.push_back(line.substr(start, tab - start));
      cols.push_back(line.substr(start));
      if (cols.size() < 3 || cols.size() > 4)
        throw data_error(fmt::format("{}:{}: expected 3 or 4 tab-separated columns", path, n));
      LexiconEntry e{cols[0], cols[1], cols[2], std::nullopt};
      if (cols.size() == 4 && !cols[3].empty()) {
        try {
          e.threshold = std::stod(cols[3]);
        } catch (const std::exception&) {
          throw data_error(fmt::format("{}:{}: bad threshold '{}'", path, n, cols[3]));
        }
      }
      entries.push_back(std::move(e));
    }
    if (entries.empty()) throw data_error(fmt::format("lexicon '{}' has no entries", path));
    return Lexicon(std::move(entries));
  }

  void save(const std::string& path) const {
    auto out = open_output(path);
    out << "# ae_id\tterm\tlanguage\tthreshold\n";
    for (const auto& e : entries_) {
      out << e.ae_id << '\t' << e.term << '\t' << e.language;
      if (e.threshold) out << '\t' << format_number(*e.threshold);
      out << '\n';
    }
  }

  const std::vector<LexiconEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  std::vector<std::string> ae_ids() const {
    std::vector<std::string> ids;
    for (const auto& e : entries_)
      if (ids.empty() || ids.back() != e.ae_id) ids.push_back(e.ae_id);
    return ids;
  }

 private:
  std::vector<LexiconEntry> entries_;  // sorted by (ae_id, term)
};

// ---------------------------------------------------------------------------
// Scanning

struct MatchConfig {
  double similarity_threshold = 0.80;
  int window_radius = 5;
  bool case_fold = true;
  int min_token_length = 4;

  void validate() const {
    if (!(similarity_threshold > 0.0 && similarity_threshold <= 1.0))
      throw config_error("match.similarity_threshold must be in (0,1]");
    if (window_radius < 1) throw config_error("match.window_radius must be >= 1");
    if (min_token_length < 1) throw config_error("match.min_token_length must be >= 1");
  }
};

struct MentionCandidate {
  std::string note_id;
  std::string patient_id;
  std::string ae_id;
  std::size_t token_index = 0;
  std::string matched_surface;
  std::string matched_term;
  double similarity = 0.0;

  bool operator==(const MentionCandidate&) const = default;
};

inline json to_json(const MentionCandidate& c) {
  return {{"note_id", c.note_id},         {"patient_id", c.patient_id},     {"ae_id", c.ae_id},
          {"token_index", c.token_index}, {"matched_surface", c.matched_surface},
          {"matched_term", c.matched_term}, {"similarity", c.similarity}};
}

inline MentionCandidate candidate_from_json(const json& j) {
  return {j.at("note_id").get<std::string>(),      j.at("patient_id").get<std::string>(),
          j.at("ae_id").get<std::string>(),        j.at("token_index").get<std::size_t>(),
          j.at("matched_surface").get<std::string>(), j.at("matched_term").get<std::string>(),
          j.at("similarity").get<double>()};
}

/// Lexicon compiled for repeated scanning. Immutable after construction and
/// safe to share between threads.
class Scanner {
 public:
  Scanner(const Lexicon& lexicon, const MatchConfig& config) : config_(config) {
    config_.validate();
    if (lexicon.empty()) throw data_error("cannot scan with an empty lexicon");
    for (const auto& e : lexicon.entries()) {
      if (ae_ids_.empty() || ae_ids_.back() != e.ae_id) ae_ids_.push_back(e.ae_id);
      terms_.push_back({ae_ids_.size() - 1, e.term, utf8::decode(e.term),
                        e.threshold.value_or(config_.similarity_threshold)});
    }
  }

  /// Candidates ordered by token index, then ae_id.
  std::vector<MentionCandidate> scan(const TokenizedNote& note) const {
    std::vector<MentionCandidate> out;
    thread_local std::u32string word;
    std::vector<std::pair<double, const Term*>> best(ae_ids_.size());
    for (std::size_t t = 0; t < note.tokens.size(); ++t) {
      const std::string_view surface = note.tokens[t].surface;
      word.clear();
      utf8::append(word, surface);
      if (word.size() < static_cast<std::size_t>(config_.min_token_length)) continue;
      if (config_.case_fold)
        for (auto& cp : word) cp = utf8::fold(cp);

      std::fill(best.begin(), best.end(), std::pair<double, const Term*>{-1.0, nullptr});
      for (const auto& term : terms_) {
        const std::size_t max_len = std::max(word.size(), term.code_points.size());
        const std::size_t budget = distance_budget(max_len, term.threshold);
        const std::size_t len_gap = word.size() > term.code_points.size() ? word.size() - term.code_points.size()
                                                                         : term.code_points.size() - word.size();
        if (len_gap > budget) continue;
        const std::size_t d = bounded_levenshtein(word, term.code_points, budget);
        if (d > budget) continue;
        const double sim = 1.0 - static_cast<double>(d) / static_cast<double>(max_len);
        // terms are sorted within an ae, so a tie keeps the smaller term
        if (sim > best[term.ae].first) best[term.ae] = {sim, &term};
      }
      for (std::size_t a = 0; a < ae_ids_.size(); ++a) {
        if (!best[a].second) continue;
        out.push_back({note.note->note_id, note.note->patient_id, ae_ids_[a], t, std::string(surface),
                       best[a].second->text, best[a].first});
      }
    }
    return out;
  }

  const MatchConfig& config() const { return config_; }

 private:
  struct Term {
    std::size_t ae;
    std::string text;
    std::u32string code_points;
    double threshold;
  };
  MatchConfig config_;
  std::vector<std::string> ae_ids_;  // ascending
  std::vector<Term> terms_;
};

inline std::vector<MentionCandidate> scan_note(const TokenizedNote& note, const Lexicon& lexicon,
                                               const MatchConfig& config = {}) {
  return Scanner(lexicon, config).scan(note);
}

// ---------------------------------------------------------------------------
// Context windows

struct ContextWindow {
  std::string note_id;
  std::string patient_id;
  std::string ae_id;
  std::size_t token_index = 0;  // of the matched token within the note
  std::size_t center = 0;       // of the matched token within `tokens`
  std::vector<std::string> tokens;
  std::optional<bool> label;

  bool operator==(const ContextWindow&) const = default;
};

/// The matched token plus up to `window_radius` tokens on each side,
/// truncated at note boundaries.
inline ContextWindow extract_window(const TokenizedNote& note, const MentionCandidate& candidate,
                                    const MatchConfig& config = {}) {
  if (candidate.token_index >= note.tokens.size() || candidate.note_id != note.note->note_id)
    throw invariant_error(fmt::format("candidate at token {} does not belong to note '{}'", candidate.token_index,
                                      note.note->note_id));
  const std::size_t r = static_cast<std::size_t>(config.window_radius);
  const std::size_t first = candidate.token_index > r ? candidate.token_index - r : 0;
  const std::size_t last = std::min(note.tokens.size() - 1, candidate.token_index + r);
  ContextWindow w;
  w.note_id = candidate.note_id;
  w.patient_id = candidate.patient_id;
  w.ae_id = candidate.ae_id;
  w.token_index = candidate.token_index;
  w.center = candidate.token_index - first;
  w.tokens.reserve(last - first + 1);
  for (std::size_t i = first; i <= last; ++i) w.tokens.emplace_back(note.tokens[i].surface);
  return w;
}

inline json to_json(const ContextWindow& w) {
  json j = {{"note_id", w.note_id}, {"patient_id", w.patient_id}, {"ae_id", w.ae_id},
            {"token_index", w.token_index}, {"center", w.center}, {"window_tokens", w.tokens}};
  j["label"] = w.label ? json(*w.label ? 1 : 0) : json(nullptr);
  return j;
}

/// Accepts both the full window dump and the minimal training format
/// {window_tokens, ae_id, label}.
inline ContextWindow window_from_json(const json& j) {
  ContextWindow w;
  w.tokens = j.at("window_tokens").get<std::vector<std::string>>();
  w.ae_id = j.value("ae_id", std::string());
  w.note_id = j.value("note_id", std::string());
  w.patient_id = j.value("patient_id", std::string());
  w.token_index = j.value("token_index", std::size_t{0});
  w.center = j.value("center", std::size_t{0});
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    const int v = it->is_boolean() ? (it->get<bool>() ? 1 : 0) : it->get<int>();
    if (v != 0 && v != 1) throw data_error("window label must be 0 or 1");
    w.label = v == 1;
  }
  if (w.tokens.empty()) throw data_error("window has no tokens");
  return w;
}

}  // namespace irae

#endif
