#ifndef IRAE_CLASSIFY_HPP
#define IRAE_CLASSIFY_HPP

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/core.h>

#include "irae/csv.hpp"
#include "irae/error.hpp"
#include "irae/matcher.hpp"
#include "irae/rng.hpp"
#include "irae/utf8.hpp"

namespace irae {

enum class ModelKind : std::uint8_t { subword_linear = 1, charseq_linear = 2 };

inline std::string_view to_string(ModelKind k) {
  return k == ModelKind::subword_linear ? "subword_linear" : "charseq_linear";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "subword_linear") return ModelKind::subword_linear;
  if (s == "charseq_linear") return ModelKind::charseq_linear;
  return std::nullopt;
}

/// How windows are turned into hashed features. Stored with the model.
struct FeatureSpec {
  std::uint32_t hash_buckets = 1u << 20;
  int ngram_min = 3;
  int ngram_max = 6;
  bool ae_feature = true;  // one extra feature naming the window's adverse event

  bool operator==(const FeatureSpec&) const = default;
};

struct TrainConfig {
  std::uint64_t seed = 17;
  int epochs = 10;
  double learning_rate = 0.2;
  double l2 = 1e-6;
  bool class_weighting = true;
  FeatureSpec features;

  static TrainConfig defaults(ModelKind kind) {
    TrainConfig c;
    if (kind == ModelKind::charseq_linear) {
      c.features.ngram_min = 2;
      c.features.ngram_max = 4;
    }
    return c;
  }

  void validate() const {
    if (epochs < 0) throw config_error("train.epochs must be >= 0");
    if (!(learning_rate > 0.0)) throw config_error("train.learning_rate must be positive");
    if (!(l2 >= 0.0)) throw config_error("train.l2 must be non-negative");
    if (features.hash_buckets == 0 || !std::has_single_bit(features.hash_buckets))
      throw config_error("train.hash_buckets must be a power of two");
    if (features.ngram_min < 1 || features.ngram_min > features.ngram_max)
      throw config_error("train n-gram range must satisfy 1 <= ngram_min <= ngram_max");
  }
};

// ---------------------------------------------------------------------------
// Features

/// Hashed features with multiplicity, averaged over the bag. index is sorted
/// and unique.
struct SparseFeatures {
  std::vector<std::uint32_t> index;
  std::vector<double> value;
};

/// A feature before hashing: namespace tag plus text.
struct FeatureString {
  char ns;
  std::string text;

  auto operator<=>(const FeatureString&) const = default;
};

namespace detail {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t fnv_add(std::uint64_t h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv_add(std::uint64_t h, unsigned char c) {
  h ^= c;
  return h * kFnvPrime;
}

/// Hash of ns + '\x1f' + a (+ '_' + b when b is non-empty).
inline std::uint64_t feature_hash(char ns, std::string_view a, std::string_view b) {
  std::uint64_t h = fnv_add(fnv_add(kFnvOffset, static_cast<unsigned char>(ns)), 0x1f);
  h = fnv_add(h, a);
  if (!b.empty()) h = fnv_add(fnv_add(h, '_'), b);
  return h;
}

/// Byte offsets of each code point boundary in s (size = length + 1).
inline void boundaries(std::string_view s, std::vector<std::size_t>& out) {
  out.clear();
  for (std::size_t i = 0; i < s.size(); i += utf8::decode_at(s, i).len) out.push_back(i);
  out.push_back(s.size());
}

template <class Sink>
void visit_char_ngrams(char ns, std::string_view s, int nmin, int nmax, Sink& sink) {
  thread_local std::vector<std::size_t> cut;
  boundaries(s, cut);
  const std::size_t len = cut.size() - 1;
  for (std::size_t start = 0; start < len; ++start)
    for (int n = nmin; n <= nmax && start + static_cast<std::size_t>(n) <= len; ++n)
      sink(ns, s.substr(cut[start], cut[start + n] - cut[start]), std::string_view{});
}

}  // namespace detail

/// Subword family: each token as a whole word plus every character n-gram of
/// "<token>" with n in [ngram_min, ngram_max].
template <class Sink>
void visit_subword_features(const ContextWindow& window, const FeatureSpec& spec, Sink&& sink) {
  std::string marked;
  for (const auto& raw : window.tokens) {
    const std::string token = utf8::fold(raw);
    sink('w', std::string_view(token), std::string_view{});
    marked.assign("<").append(token).append(">");
    detail::visit_char_ngrams('g', marked, spec.ngram_min, spec.ngram_max, sink);
  }
  if (spec.ae_feature && !window.ae_id.empty()) sink('a', std::string_view(window.ae_id), std::string_view{});
}

/// Character-sequence family: n-grams of the space-joined window plus
/// adjacent token bigrams.
template <class Sink>
void visit_charseq_features(const ContextWindow& window, const FeatureSpec& spec, Sink&& sink) {
  std::vector<std::string> tokens;
  tokens.reserve(window.tokens.size());
  std::string joined;
  for (const auto& raw : window.tokens) {
    tokens.push_back(utf8::fold(raw));
    if (!joined.empty()) joined.push_back(' ');
    joined += tokens.back();
  }
  detail::visit_char_ngrams('c', joined, spec.ngram_min, spec.ngram_max, sink);
  for (std::size_t i = 1; i < tokens.size(); ++i)
    sink('b', std::string_view(tokens[i - 1]), std::string_view(tokens[i]));
  if (spec.ae_feature && !window.ae_id.empty()) sink('A', std::string_view(window.ae_id), std::string_view{});
}

template <class Sink>
void visit_features(ModelKind kind, const ContextWindow& window, const FeatureSpec& spec, Sink&& sink) {
  if (kind == ModelKind::subword_linear)
    visit_subword_features(window, spec, sink);
  else
    visit_charseq_features(window, spec, sink);
}

/// Unhashed feature multiset, mainly for inspection and tests.
inline std::vector<FeatureString> feature_strings(ModelKind kind, const ContextWindow& window,
                                                  const FeatureSpec& spec) {
  std::vector<FeatureString> out;
  visit_features(kind, window, spec, [&](char ns, std::string_view a, std::string_view b) {
    std::string text(a);
    if (!b.empty()) text.append("_").append(b);
    out.push_back({ns, std::move(text)});
  });
  std::sort(out.begin(), out.end());
  return out;
}

inline SparseFeatures featurize(ModelKind kind, const ContextWindow& window, const FeatureSpec& spec) {
  thread_local std::vector<std::uint32_t> hashes;
  hashes.clear();
  const std::uint64_t mask = spec.hash_buckets - 1;
  visit_features(kind, window, spec, [&](char ns, std::string_view a, std::string_view b) {
    hashes.push_back(static_cast<std::uint32_t>(detail::feature_hash(ns, a, b) & mask));
  });
  std::sort(hashes.begin(), hashes.end());
  SparseFeatures f;
  const double total = static_cast<double>(hashes.size());
  for (std::size_t i = 0; i < hashes.size();) {
    std::size_t j = i;
    while (j < hashes.size() && hashes[j] == hashes[i]) ++j;
    f.index.push_back(hashes[i]);
    f.value.push_back(static_cast<double>(j - i) / total);
    i = j;
  }
  return f;
}

inline SparseFeatures featurize_subword(const ContextWindow& window, const FeatureSpec& spec) {
  return featurize(ModelKind::subword_linear, window, spec);
}

inline SparseFeatures featurize_charseq(const ContextWindow& window, const FeatureSpec& spec) {
  return featurize(ModelKind::charseq_linear, window, spec);
}

// ---------------------------------------------------------------------------
// Models

inline double sigmoid(double z) {
  z = std::clamp(z, -35.0, 35.0);  // keeps the result strictly inside (0,1)
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct TrainingMeta {
  std::uint64_t seed = 0;
  int epochs = 0;
  double learning_rate = 0.0;
  double l2 = 0.0;
  std::vector<double> epoch_loss;  // objective after each epoch; not persisted
};

struct ClassifierModel {
  ModelKind kind = ModelKind::subword_linear;
  FeatureSpec features;
  std::vector<double> weights;
  double bias = 0.0;
  TrainingMeta meta;

  static ClassifierModel zero(ModelKind kind, const FeatureSpec& spec) {
    ClassifierModel m;
    m.kind = kind;
    m.features = spec;
    m.weights.assign(spec.hash_buckets, 0.0);
    return m;
  }

  double logit(const SparseFeatures& x) const {
    double z = bias;
    for (std::size_t k = 0; k < x.index.size(); ++k) z += weights[x.index[k]] * x.value[k];
    return z;
  }
};

inline double predict_proba(const ClassifierModel& model, const ContextWindow& window) {
  return sigmoid(model.logit(featurize(model.kind, window, model.features)));
}

struct EnsembleModel {
  std::vector<ClassifierModel> members;
};

/// Mean of the member probabilities.
inline double ensemble_predict(const EnsembleModel& ensemble, const ContextWindow& window) {
  if (ensemble.members.empty()) throw invariant_error("ensemble has no members");
  double sum = 0.0;
  for (const auto& m : ensemble.members) sum += predict_proba(m, window);
  return sum / static_cast<double>(ensemble.members.size());
}

// ---------------------------------------------------------------------------
// Training

struct Example {
  SparseFeatures x;
  double y = 0.0;
  double weight = 1.0;
};

/// Featurizes labeled windows. With class weighting, each class receives
/// total weight N/2 (weight N / (2 * class count) per example).
inline std::vector<Example> make_examples(ModelKind kind, const FeatureSpec& spec,
                                          std::span<const ContextWindow> windows, bool class_weighting) {
  std::size_t pos = 0;
  for (const auto& w : windows) {
    if (!w.label) throw data_error(fmt::format("training window from note '{}' has no label", w.note_id));
    pos += *w.label ? 1 : 0;
  }
  const std::size_t neg = windows.size() - pos;
  if (pos == 0 || neg == 0)
    throw data_error(fmt::format("training set needs both classes (positives={}, negatives={})", pos, neg));
  const double n = static_cast<double>(windows.size());
  const double w_pos = class_weighting ? n / (2.0 * static_cast<double>(pos)) : 1.0;
  const double w_neg = class_weighting ? n / (2.0 * static_cast<double>(neg)) : 1.0;
  std::vector<Example> out;
  out.reserve(windows.size());
  for (const auto& w : windows)
    out.push_back({featurize(kind, w, spec), *w.label ? 1.0 : 0.0, *w.label ? w_pos : w_neg});
  return out;
}

/// Mean weighted logistic loss plus (l2 / 2) * |weights|^2; the bias is not
/// regularized.
inline double objective(const ClassifierModel& model, std::span<const Example> examples, double l2) {
  double loss = 0.0;
  for (const auto& e : examples) {
    const double z = model.logit(e.x);
    loss += e.weight * (softplus(z) - e.y * z);
  }
  loss /= static_cast<double>(examples.size());
  double sq = 0.0;
  for (double w : model.weights) sq += w * w;
  return loss + 0.5 * l2 * sq;
}

struct Gradient {
  std::vector<double> weights;
  double bias = 0.0;
};

inline Gradient objective_gradient(const ClassifierModel& model, std::span<const Example> examples, double l2) {
  Gradient g;
  g.weights.assign(model.weights.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(examples.size());
  for (const auto& e : examples) {
    // d/dz softplus(z) = sigmoid(z), taken unclamped to match the loss exactly
    const double z = model.logit(e.x);
    const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    const double r = e.weight * (p - e.y) * inv_n;
    for (std::size_t k = 0; k < e.x.index.size(); ++k) g.weights[e.x.index[k]] += r * e.x.value[k];
    g.bias += r;
  }
  for (std::size_t j = 0; j < g.weights.size(); ++j) g.weights[j] += l2 * model.weights[j];
  return g;
}

/// Plain SGD on the objective above, examples reshuffled every epoch from a
/// generator seeded with config.seed. The step size decays linearly to zero.
/// Weights are kept as scale * v so that the L2 shrink costs O(1) per step.
inline ClassifierModel train_examples(ModelKind kind, std::span<const Example> examples, const TrainConfig& config) {
  config.validate();
  if (examples.empty()) throw data_error("empty training set");
  ClassifierModel model = ClassifierModel::zero(kind, config.features);
  model.meta = {config.seed, config.epochs, config.learning_rate, config.l2, {}};

  std::vector<double>& v = model.weights;
  double scale = 1.0;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(config.seed);
  const double total_steps = static_cast<double>(config.epochs) * static_cast<double>(examples.size());
  double step = 0.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      const Example& e = examples[idx];
      const double lr = config.learning_rate * (1.0 - step / total_steps);
      step += 1.0;
      double dot = 0.0;
      for (std::size_t k = 0; k < e.x.index.size(); ++k) dot += v[e.x.index[k]] * e.x.value[k];
      const double z = scale * dot + model.bias;
      const double r = e.weight * (sigmoid(z) - e.y);
      scale *= 1.0 - lr * config.l2;
      const double coef = lr * r / scale;
      for (std::size_t k = 0; k < e.x.index.size(); ++k) v[e.x.index[k]] -= coef * e.x.value[k];
      model.bias -= lr * r;
      if (scale < 1e-6) {
        for (double& w : v) w *= scale;
        scale = 1.0;
      }
    }
    if (scale != 1.0) {
      for (double& w : v) w *= scale;
      scale = 1.0;
    }
    model.meta.epoch_loss.push_back(objective(model, examples, config.l2));
  }
  return model;
}

inline ClassifierModel train(ModelKind kind, std::span<const ContextWindow> windows, const TrainConfig& config) {
  config.validate();
  const auto examples = make_examples(kind, config.features, windows, config.class_weighting);
  return train_examples(kind, examples, config);
}

// ---------------------------------------------------------------------------
// Model files
//
// Little-endian. A model blob is
//   "IRAEMODL" u32 version u8 kind
//   u32 buckets i32 ngram_min i32 ngram_max u8 ae_feature
//   u64 seed i32 epochs f64 learning_rate f64 l2
//   f64 bias u64 n f64[n] weights
//   u64 checksum (FNV-1a over every preceding byte of the blob)
// An ensemble file is "IRAEENSM" u32 version u32 count, count model blobs,
// then a u64 checksum over everything before it.

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr std::string_view kModelMagic = "IRAEMODL";
inline constexpr std::string_view kEnsembleMagic = "IRAEENSM";

namespace detail {

class ByteWriter {
 public:
  void raw(std::string_view s) { bytes_.append(s); }
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void checksum(std::size_t from) { u64(fnv_add(kFnvOffset, std::string_view(bytes_).substr(from))); }
  std::string& bytes() { return bytes_; }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}
  void need(std::size_t n, const char* what) {
    if (pos_ + n > bytes_.size()) throw data_error(fmt::format("corrupt model file: truncated {}", what));
  }
  std::string_view raw(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(raw(1, what)[0]); }
  std::uint32_t u32(const char* what) {
    auto s = raw(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[i]);
    return v;
  }
  std::uint64_t u64(const char* what) {
    auto s = raw(8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[i]);
    return v;
  }
  std::int32_t i32(const char* what) { return static_cast<std::int32_t>(u32(what)); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  void verify_checksum(std::size_t from) {
    const std::uint64_t expected = fnv_add(kFnvOffset, bytes_.substr(from, pos_ - from));
    if (u64("checksum") != expected) throw data_error("corrupt model file: checksum mismatch");
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

inline void check_header(ByteReader& in, std::string_view magic) {
  if (in.raw(magic.size(), "header") != magic) throw data_error("corrupt model file: bad header magic");
  const std::uint32_t version = in.u32("header");
  if (version != kModelFormatVersion)
    throw data_error(fmt::format("unsupported model format version: expected {}, found {}", kModelFormatVersion,
                                 version));
}

inline void write_model(ByteWriter& out, const ClassifierModel& m) {
  const std::size_t from = out.bytes().size();
  out.raw(kModelMagic);
  out.u32(kModelFormatVersion);
  out.u8(static_cast<std::uint8_t>(m.kind));
  out.u32(m.features.hash_buckets);
  out.i32(m.features.ngram_min);
  out.i32(m.features.ngram_max);
  out.u8(m.features.ae_feature ? 1 : 0);
  out.u64(m.meta.seed);
  out.i32(m.meta.epochs);
  out.f64(m.meta.learning_rate);
  out.f64(m.meta.l2);
  out.f64(m.bias);
  out.u64(m.weights.size());
  for (double w : m.weights) out.f64(w);
  out.checksum(from);
}

inline ClassifierModel read_model(ByteReader& in) {
  const std::size_t from = in.pos();
  check_header(in, kModelMagic);
  ClassifierModel m;
  const auto kind = in.u8("header");
  if (kind != 1 && kind != 2) throw data_error(fmt::format("corrupt model file: unknown model kind {}", kind));
  m.kind = static_cast<ModelKind>(kind);
  m.features.hash_buckets = in.u32("config block");
  m.features.ngram_min = in.i32("config block");
  m.features.ngram_max = in.i32("config block");
  m.features.ae_feature = in.u8("config block") != 0;
  m.meta.seed = in.u64("config block");
  m.meta.epochs = in.i32("config block");
  m.meta.learning_rate = in.f64("config block");
  m.meta.l2 = in.f64("config block");
  m.bias = in.f64("weights");
  const std::uint64_t n = in.u64("weights");
  if (n != m.features.hash_buckets) throw data_error("corrupt model file: weight count differs from bucket count");
  in.need(n * 8, "weights");
  m.weights.resize(n);
  for (auto& w : m.weights) w = in.f64("weights");
  in.verify_checksum(from);
  return m;
}

inline std::string read_file(const std::string& path) {
  auto in = open_input(path, true);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::string& bytes) {
  auto out = open_output(path, true);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace detail

inline void save_model(const ClassifierModel& model, const std::string& path) {
  detail::ByteWriter out;
  detail::write_model(out, model);
  detail::write_file(path, out.bytes());
}

inline void save_model(const EnsembleModel& ensemble, const std::string& path) {
  detail::ByteWriter out;
  out.raw(kEnsembleMagic);
  out.u32(kModelFormatVersion);
  out.u32(static_cast<std::uint32_t>(ensemble.members.size()));
  for (const auto& m : ensemble.members) detail::write_model(out, m);
  out.checksum(0);
  detail::write_file(path, out.bytes());
}

inline ClassifierModel load_model(const std::string& path) {
  const std::string bytes = detail::read_file(path);
  detail::ByteReader in(bytes);
  auto m = detail::read_model(in);
  if (!in.done()) throw data_error("corrupt model file: trailing bytes");
  return m;
}

/// Loads an ensemble file, or a single model file as a one-member ensemble.
inline EnsembleModel load_ensemble(const std::string& path) {
  const std::string bytes = detail::read_file(path);
  if (std::string_view(bytes).starts_with(kModelMagic)) return {{load_model(path)}};
  detail::ByteReader in(bytes);
  detail::check_header(in, kEnsembleMagic);
  const std::uint32_t count = in.u32("header");
  if (count == 0) throw data_error("corrupt model file: ensemble has no members");
  EnsembleModel e;
  for (std::uint32_t i = 0; i < count; ++i) e.members.push_back(detail::read_model(in));
  in.verify_checksum(0);
  if (!in.done()) throw data_error("corrupt model file: trailing bytes");
  return e;
}

}  // namespace irae

#endif
