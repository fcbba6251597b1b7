#ifndef IRAE_CONFIG_HPP
#define IRAE_CONFIG_HPP

#include <charconv>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "irae/aggregate.hpp"
#include "irae/classify.hpp"
#include "irae/corpus.hpp"
#include "irae/csv.hpp"
#include "irae/matcher.hpp"
#include "irae/outcomes.hpp"
#include "irae/synth.hpp"

extern char** environ;

namespace irae {

// Run configuration: a flat `key = value` file with dotted section names.
// Later sources win: defaults, config file, IRAE_* environment variables,
// command line flags.

inline constexpr std::string_view kEnvPrefix = "IRAE_";

struct RunConfig {
  std::uint64_t seed = 42;
  int threads = 1;
  std::string out_dir = "irae-out";

  // External corpus; when notes is empty the synth stage provides one.
  std::string patients_path;
  std::string notes_path;
  std::string prescriptions_path;
  std::string lexicon_path;  // empty: built-in lexicon

  CohortConfig cohort;
  MatchConfig match;
  DecisionConfig decision;
  TrainConfig subword = TrainConfig::defaults(ModelKind::subword_linear);
  TrainConfig charseq = TrainConfig::defaults(ModelKind::charseq_linear);
  std::optional<std::uint64_t> train_seed;
  double validation_fraction = 0.1;

  SteroidConfig steroid;
  int discontinuation_lookback_days = 30;

  double test_fraction = 0.2;
  std::optional<std::uint64_t> split_seed;
  std::size_t audit_notes = 1000;
  std::size_t audit_mentions = 43;
  int audit_max_distance = 2;

  SynthConfig synth;
  std::optional<std::uint64_t> synth_seed;

  std::size_t throughput_notes = 175350;

  // Per-stage seeds default to streams of the master seed.
  std::uint64_t effective_synth_seed() const { return synth_seed.value_or(derive_seed(seed, 1)); }
  std::uint64_t effective_train_seed() const { return train_seed.value_or(derive_seed(seed, 2)); }
  std::uint64_t effective_split_seed() const { return split_seed.value_or(derive_seed(seed, 3)); }

  SynthConfig effective_synth() const {
    SynthConfig s = synth;
    s.seed = effective_synth_seed();
    return s;
  }

  void validate() const {
    if (threads < 1) throw config_error("run.threads must be >= 1");
    if (out_dir.empty()) throw config_error("run.out_dir must not be empty");
    if (cohort.followup_days < 0) throw config_error("cohort.followup_days must be >= 0");
    match.validate();
    decision.validate();
    subword.validate();
    charseq.validate();
    if (subword.epochs < 1 || charseq.epochs < 1) throw config_error("train.epochs must be >= 1");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
      throw config_error("train.validation_fraction must be in [0,1)");
    steroid.validate();
    if (discontinuation_lookback_days < 0) throw config_error("outcomes.discontinuation_lookback_days must be >= 0");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw config_error("eval.test_fraction must be in (0,1)");
    if (audit_mentions > audit_notes) throw config_error("eval.audit_mentions must not exceed eval.audit_notes");
    if (audit_max_distance < 1) throw config_error("eval.audit_max_distance must be >= 1");
    synth.validate();
    for (const auto& t : synth.ae_terms)
      if (static_cast<int>(utf8::length(t)) <= audit_max_distance)
        throw config_error(fmt::format("eval.audit_max_distance too large for term '{}'", t));
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

inline std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto at = s.find(sep, start);
    auto item = trim(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

template <class T>
T parse_integral(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw config_error(fmt::format("{}: expected an integer, got '{}'", key, v));
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw config_error(fmt::format("{}: expected a number, got '{}'", key, v));
}

inline bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw config_error(fmt::format("{}: expected true or false, got '{}'", key, v));
}

inline std::string show(double d) { return format_number(d); }
inline std::string show(bool b) { return b ? "true" : "false"; }
inline std::string join(const std::vector<std::string>& v, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

}  // namespace detail

struct ConfigField {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

/// Every recognised key, bound to a RunConfig instance.
inline std::map<std::string, ConfigField> config_fields(RunConfig& c) {
  using namespace detail;
  std::map<std::string, ConfigField> f;
  auto integer = [&f](const std::string& key, auto& slot) {
    using T = std::remove_reference_t<decltype(slot)>;
    f[key] = {[key, &slot](const std::string& v) { slot = parse_integral<T>(key, v); },
              [&slot] { return std::to_string(slot); }};
  };
  auto real = [&f](const std::string& key, double& slot) {
    f[key] = {[key, &slot](const std::string& v) { slot = parse_real(key, v); }, [&slot] { return show(slot); }};
  };
  auto flag = [&f](const std::string& key, bool& slot) {
    f[key] = {[key, &slot](const std::string& v) { slot = parse_flag(key, v); }, [&slot] { return show(slot); }};
  };
  auto text = [&f](const std::string& key, std::string& slot) {
    f[key] = {[&slot](const std::string& v) { slot = v; }, [&slot] { return slot; }};
  };
  auto seed = [&f](const std::string& key, std::optional<std::uint64_t>& slot) {
    f[key] = {[key, &slot](const std::string& v) {
                if (v == "auto") slot.reset();
                else slot = parse_integral<std::uint64_t>(key, v);
              },
              [&slot] { return slot ? std::to_string(*slot) : std::string("auto"); }};
  };

  integer("run.seed", c.seed);
  integer("run.threads", c.threads);
  text("run.out_dir", c.out_dir);

  text("input.patients", c.patients_path);
  text("input.notes", c.notes_path);
  text("input.prescriptions", c.prescriptions_path);
  text("input.lexicon", c.lexicon_path);

  integer("cohort.followup_days", c.cohort.followup_days);
  flag("cohort.include_start", c.cohort.include_start);
  flag("cohort.include_end", c.cohort.include_end);

  real("match.similarity_threshold", c.match.similarity_threshold);
  integer("match.window_radius", c.match.window_radius);
  flag("match.case_fold", c.match.case_fold);
  integer("match.min_token_length", c.match.min_token_length);

  real("decision.probability_threshold", c.decision.probability_threshold);
  integer("decision.min_positive_notes", c.decision.min_positive_notes);

  // shared training keys apply to both members
  f["train.epochs"] = {[&c](const std::string& v) { c.subword.epochs = c.charseq.epochs = parse_integral<int>("train.epochs", v); },
                       [&c] { return std::to_string(c.subword.epochs); }};
  f["train.learning_rate"] = {[&c](const std::string& v) {
                                c.subword.learning_rate = c.charseq.learning_rate = parse_real("train.learning_rate", v);
                              },
                              [&c] { return show(c.subword.learning_rate); }};
  f["train.l2"] = {[&c](const std::string& v) { c.subword.l2 = c.charseq.l2 = parse_real("train.l2", v); },
                   [&c] { return show(c.subword.l2); }};
  f["train.hash_buckets"] = {[&c](const std::string& v) {
                               c.subword.features.hash_buckets = c.charseq.features.hash_buckets =
                                   parse_integral<std::uint32_t>("train.hash_buckets", v);
                             },
                             [&c] { return std::to_string(c.subword.features.hash_buckets); }};
  f["train.class_weighting"] = {[&c](const std::string& v) {
                                  c.subword.class_weighting = c.charseq.class_weighting =
                                      parse_flag("train.class_weighting", v);
                                },
                                [&c] { return show(c.subword.class_weighting); }};
  f["train.ae_feature"] = {[&c](const std::string& v) {
                             c.subword.features.ae_feature = c.charseq.features.ae_feature =
                                 parse_flag("train.ae_feature", v);
                           },
                           [&c] { return show(c.subword.features.ae_feature); }};
  integer("train.subword.ngram_min", c.subword.features.ngram_min);
  integer("train.subword.ngram_max", c.subword.features.ngram_max);
  integer("train.charseq.ngram_min", c.charseq.features.ngram_min);
  integer("train.charseq.ngram_max", c.charseq.features.ngram_max);
  seed("train.seed", c.train_seed);
  real("train.validation_fraction", c.validation_fraction);

  integer("outcomes.steroid_window_days", c.steroid.window_days);
  real("outcomes.steroid_min_dose", c.steroid.min_dose);
  real("outcomes.steroid_max_dose", c.steroid.max_dose);
  flag("outcomes.steroid_open_upper", c.steroid.open_upper);
  f["outcomes.steroid_drugs"] = {[&c](const std::string& v) {
                                   c.steroid.drugs.clear();
                                   for (const auto& d : split_list(v, ',')) c.steroid.drugs.push_back(utf8::fold(d));
                                 },
                                 [&c] { return join(c.steroid.drugs, ","); }};
  integer("outcomes.discontinuation_lookback_days", c.discontinuation_lookback_days);

  real("eval.test_fraction", c.test_fraction);
  seed("eval.split_seed", c.split_seed);
  integer("eval.audit_notes", c.audit_notes);
  integer("eval.audit_mentions", c.audit_mentions);
  integer("eval.audit_max_distance", c.audit_max_distance);

  seed("synth.seed", c.synth_seed);
  integer("synth.n_patients", c.synth.n_patients);
  real("synth.notes_mean", c.synth.notes_mean);
  real("synth.notes_dispersion", c.synth.notes_dispersion);
  real("synth.misspelling_rate", c.synth.misspelling_rate);
  integer("synth.max_edit_distance", c.synth.max_edit_distance);
  real("synth.distractor_rate", c.synth.distractor_rate);
  real("synth.difficulty", c.synth.difficulty);
  real("synth.shared_positive_ratio", c.synth.shared_positive_ratio);
  real("synth.steroid_probability", c.synth.steroid_probability);
  integer("synth.steroid_window_days", c.synth.steroid_window_days);
  real("synth.discontinuation_probability", c.synth.discontinuation_probability);
  text("synth.start_date", c.synth.start_date);
  integer("synth.enrollment_days", c.synth.enrollment_days);
  for (std::size_t i = 0; i < c.synth.ae_ids.size(); ++i) {
    real("synth.prevalence." + c.synth.ae_ids[i], c.synth.prevalence[i]);
    text("synth.term." + c.synth.ae_ids[i], c.synth.ae_terms[i]);
  }
  for (std::size_t i = 0; i < c.synth.regimens.size(); ++i)
    real("synth.regimen_weight." + c.synth.regimens[i], c.synth.regimen_weights[i]);
  f["synth.filler"] = {[&c](const std::string& v) { c.synth.filler = split_list(v, ' '); },
                       [&c] { return join(c.synth.filler, " "); }};
  auto templates = [&f](const std::string& key, std::vector<std::string>& slot) {
    f[key] = {[&slot](const std::string& v) { slot = split_list(v, '|'); }, [&slot] { return join(slot, " | "); }};
  };
  templates("synth.templates.affirmative", c.synth.templates.affirmative);
  templates("synth.templates.negation", c.synth.templates.negation);
  templates("synth.templates.attribution", c.synth.templates.attribution);
  templates("synth.templates.shared", c.synth.templates.shared);

  integer("throughput.notes", c.throughput_notes);
  return f;
}

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  auto fields = config_fields(c);
  const auto it = fields.find(key);
  if (it == fields.end()) throw config_error(fmt::format("unknown config key '{}'", key));
  it->second.set(value);
}

/// Applies `key = value` lines. '#' starts a comment line; values may be
/// wrapped in double quotes.
inline void apply_config_text(RunConfig& c, std::string_view text, const std::string& origin = "config") {
  auto fields = config_fields(c);
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw config_error(fmt::format("{} line {}: expected 'key = value'", origin, line_no));
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    const auto it = fields.find(key);
    if (it == fields.end()) throw config_error(fmt::format("{} line {}: unknown config key '{}'", origin, line_no, key));
    it->second.set(value);
  }
}

inline void apply_config_file(RunConfig& c, const std::string& path) {
  auto in = open_input(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_config_text(c, buf.str(), path);
}

/// IRAE_MATCH__SIMILARITY_THRESHOLD sets match.similarity_threshold.
inline std::string env_to_key(std::string_view name) {
  name.remove_prefix(kEnvPrefix.size());
  std::string key;
  for (std::size_t i = 0; i < name.size(); ++i) {
    if (name[i] == '_' && i + 1 < name.size() && name[i + 1] == '_') {
      key.push_back('.');
      ++i;
    } else {
      key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(name[i]))));
    }
  }
  return key;
}

inline void apply_environment(RunConfig& c, char** env = environ) {
  if (!env) return;
  std::vector<std::pair<std::string, std::string>> overrides;
  for (char** e = env; *e; ++e) {
    const std::string_view entry(*e);
    if (!entry.starts_with(kEnvPrefix)) continue;
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    overrides.emplace_back(env_to_key(entry.substr(0, eq)), std::string(entry.substr(eq + 1)));
  }
  std::sort(overrides.begin(), overrides.end());
  auto fields = config_fields(c);
  for (const auto& [key, value] : overrides) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw config_error(fmt::format("environment: unknown config key '{}'", key));
    it->second.set(value);
  }
}

/// The effective configuration as sorted `key = value` lines.
inline std::string dump_config(RunConfig c) {
  std::string out;
  for (const auto& [key, field] : config_fields(c)) out += fmt::format("{} = {}\n", key, field.get());
  return out;
}

inline json config_json(RunConfig c) {
  json j = json::object();
  for (const auto& [key, field] : config_fields(c)) j[key] = field.get();
  return j;
}

}  // namespace irae

#endif
