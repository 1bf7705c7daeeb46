#include "rxnelicit/elicitation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "rxnelicit/binary_io.hpp"
#include "rxnelicit/error.hpp"
#include "rxnelicit/util.hpp"

namespace rxnelicit::elicit {

RTClassifierModel RTClassifierModel::zeros(int n_classes, int input_dim) {
  if (n_classes < 2)
    throw DataError("classifier needs at least 2 classes, got " +
                    std::to_string(n_classes));
  if (input_dim <= 0)
    throw DataError("classifier input dim must be positive");
  RTClassifierModel m;
  m.n_classes = n_classes;
  m.input_dim = input_dim;
  m.weights.assign(static_cast<std::size_t>(n_classes) * input_dim, 0.0);
  m.bias.assign(n_classes, 0.0);
  return m;
}

std::vector<double> RTClassifierModel::logits(const Vector &x) const {
  if (static_cast<int>(x.size()) != input_dim)
    throw DataError("classifier expects dim " + std::to_string(input_dim) +
                    ", got " + std::to_string(x.size()));
  std::vector<double> z(bias);
  for (int c = 0; c < n_classes; ++c) {
    const double *w = &weights[static_cast<std::size_t>(c) * input_dim];
    double s = 0.0;
    for (int j = 0; j < input_dim; ++j)
      s += w[j] * x[j];
    z[c] += s;
  }
  return z;
}

int RTClassifierModel::predict(const Vector &x) const {
  const auto z = logits(x);
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

std::vector<int> RTClassifierModel::predict(std::span<const Vector> xs) const {
  std::vector<int> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    out[i] = predict(xs[i]);
  return out;
}

namespace {

void check_training_inputs(std::span<const Vector> inputs,
                           std::span<const int> labels, int n_classes) {
  if (inputs.empty())
    throw DataError("classifier: empty training set");
  if (inputs.size() != labels.size())
    throw DataError("classifier: " + std::to_string(inputs.size()) +
                    " inputs but " + std::to_string(labels.size()) + " labels");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || labels[i] >= n_classes)
      throw DataError("classifier: label " + std::to_string(labels[i]) +
                      " at row " + std::to_string(i) + " outside [0, " +
                      std::to_string(n_classes) + ")");
}

// Softmax in place; returns log-sum-exp.
double softmax(std::vector<double> &z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto &v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto &v : z)
    v /= sum;
  return mx + std::log(sum);
}

// Accumulates the summed (not averaged) cross-entropy gradient of the
// given rows into dw/db and returns the summed loss.
double accumulate_gradient(const RTClassifierModel &m,
                           std::span<const Vector> inputs,
                           std::span<const int> labels,
                           std::span<const std::size_t> rows,
                           std::vector<double> &dw, std::vector<double> &db) {
  double loss = 0.0;
  const int d = m.input_dim;
  for (std::size_t r : rows) {
    const auto &x = inputs[r];
    auto p = m.logits(x);
    const double label_logit = p[labels[r]];
    loss += softmax(p) - label_logit;
    p[labels[r]] -= 1.0;
    for (int c = 0; c < m.n_classes; ++c) {
      const double g = p[c];
      db[c] += g;
      double *row = &dw[static_cast<std::size_t>(c) * d];
      for (int j = 0; j < d; ++j)
        row[j] += g * x[j];
    }
  }
  return loss;
}

}  // namespace

LossGradient loss_and_gradient(const RTClassifierModel &model,
                               std::span<const Vector> inputs,
                               std::span<const int> labels, double l2) {
  check_training_inputs(inputs, labels, model.n_classes);
  LossGradient out;
  out.d_weights.assign(model.weights.size(), 0.0);
  out.d_bias.assign(model.bias.size(), 0.0);
  std::vector<std::size_t> rows(inputs.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    rows[i] = i;
  const double inv = 1.0 / static_cast<double>(inputs.size());
  out.loss = accumulate_gradient(model, inputs, labels, rows, out.d_weights,
                                 out.d_bias) *
             inv;
  for (auto &g : out.d_weights)
    g *= inv;
  for (auto &g : out.d_bias)
    g *= inv;
  if (l2 > 0.0) {
    double sq = 0.0;
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
      sq += model.weights[i] * model.weights[i];
      out.d_weights[i] += l2 * model.weights[i];
    }
    out.loss += 0.5 * l2 * sq;
  }
  return out;
}

RTClassifierModel train_rt_classifier(std::span<const Vector> inputs,
                                      std::span<const int> labels,
                                      int n_classes, std::uint64_t seed,
                                      const ClassifierOptions &opts) {
  check_training_inputs(inputs, labels, n_classes);
  if (opts.epochs < 0 || opts.batch_size == 0 || !(opts.lr > 0.0))
    throw ConfigError("classifier: epochs >= 0, batch_size > 0, lr > 0 required");
  const int d = static_cast<int>(inputs[0].size());
  for (const auto &x : inputs)
    if (static_cast<int>(x.size()) != d)
      throw DataError("classifier: inconsistent input dimensions");

  auto m = RTClassifierModel::zeros(n_classes, d);
  Rng rng(seed);
  std::vector<std::size_t> order(inputs.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  std::vector<double> dw(m.weights.size()), db(m.bias.size());

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
      const auto count = std::min(opts.batch_size, order.size() - start);
      std::fill(dw.begin(), dw.end(), 0.0);
      std::fill(db.begin(), db.end(), 0.0);
      accumulate_gradient(m, inputs, labels,
                          std::span(order).subspan(start, count), dw, db);
      const double step = opts.lr / static_cast<double>(count);
      for (std::size_t i = 0; i < dw.size(); ++i)
        m.weights[i] -= step * dw[i] + opts.lr * opts.l2 * m.weights[i];
      for (std::size_t i = 0; i < db.size(); ++i)
        m.bias[i] -= step * db[i];
    }
  }
  m.meta.epochs = opts.epochs;
  m.meta.seed = seed;
  m.meta.train_accuracy = classifier_accuracy(m, inputs, labels);
  return m;
}

double classifier_accuracy(const RTClassifierModel &model,
                           std::span<const Vector> inputs,
                           std::span<const int> labels) {
  if (inputs.size() != labels.size())
    throw DataError("accuracy: " + std::to_string(inputs.size()) +
                    " inputs but " + std::to_string(labels.size()) + " labels");
  if (inputs.empty())
    return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    hits += model.predict(inputs[i]) == labels[i];
  return static_cast<double>(hits) / static_cast<double>(inputs.size());
}

namespace {
constexpr std::string_view kClassifierMagic = "RTCL";
constexpr std::uint32_t kClassifierVersion = 1;
}  // namespace

std::string serialize_classifier(const RTClassifierModel &model) {
  binio::Writer out;
  out.magic(kClassifierMagic);
  out.u32(kClassifierVersion);
  out.u32(static_cast<std::uint32_t>(model.n_classes));
  out.u32(static_cast<std::uint32_t>(model.input_dim));
  for (double w : model.weights)
    out.f32(static_cast<float>(w));
  for (double b : model.bias)
    out.f32(static_cast<float>(b));
  return out.bytes();
}

RTClassifierModel parse_classifier(std::string_view bytes,
                                   const std::string &context) {
  binio::Reader in(bytes, context);
  in.expect_magic(kClassifierMagic);
  if (auto v = in.u32(); v != kClassifierVersion)
    throw DataError(context + ": unsupported version " + std::to_string(v));
  const auto n_classes = static_cast<int>(in.u32());
  const auto input_dim = static_cast<int>(in.u32());
  auto m = RTClassifierModel::zeros(n_classes, input_dim);
  for (auto &w : m.weights)
    w = in.f32();
  for (auto &b : m.bias)
    b = in.f32();
  if (!in.at_end())
    throw DataError(context + ": trailing bytes");
  return m;
}

void save_classifier(const std::filesystem::path &path,
                     const RTClassifierModel &model) {
  binio::write_file(path, serialize_classifier(model));
}

RTClassifierModel load_classifier(const std::filesystem::path &path) {
  return parse_classifier(binio::read_file(path), path.string());
}

// --- annotation and self-feedback -----------------------------------------

EmbeddedCorpus embed_corpus(const data::Dataset &records,
                            const embed::Provider &provider) {
  std::vector<embed::EmbedItem> in_items, out_items;
  in_items.reserve(records.size());
  out_items.reserve(records.size());
  for (const auto &r : records) {
    in_items.push_back({embed::embedding_key(r.id, "input"), r.input});
    out_items.push_back({embed::embedding_key(r.id, "output"), r.output});
  }
  EmbeddedCorpus c;
  c.inputs = provider.embed(in_items);
  c.outputs = provider.embed(out_items);
  if (c.inputs.size() != records.size() || c.outputs.size() != records.size())
    throw BackendError("provider returned the wrong number of vectors");
  for (const auto *set : {&c.inputs, &c.outputs})
    for (const auto &v : *set) {
      if (v.size() != provider.dim())
        throw BackendError("provider returned a vector of dim " +
                           std::to_string(v.size()) + ", declared " +
                           std::to_string(provider.dim()));
      for (double x : v)
        if (!std::isfinite(x))
          throw BackendError("provider returned a non-finite value");
    }
  return c;
}

std::vector<Vector> composed_points(const EmbeddedCorpus &corpus,
                                    EncodingMethod method, bool normalize) {
  std::vector<Vector> points;
  points.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto v = embed::compose(method, corpus.inputs[i], corpus.outputs[i]);
    if (normalize) {
      double norm = 0.0;
      for (double x : v)
        norm += x * x;
      if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double &x : v)
          x /= norm;
      }
    }
    points.push_back(std::move(v));
  }
  return points;
}

Annotation annotate_embedded(const EmbeddedCorpus &corpus,
                             EncodingMethod method, int n, std::uint64_t seed,
                             const ElicitOptions &opts) {
  if (corpus.size() == 0)
    throw DataError("annotate: no records");
  if (n <= 0 || static_cast<std::size_t>(n) > corpus.size())
    throw DataError("annotate: cluster count " + std::to_string(n) +
                    " not in [1, " + std::to_string(corpus.size()) + "]");
  const auto points = composed_points(corpus, method, opts.normalize);
  Annotation a;
  a.model = cluster::kmeans_fit(points, n, seed, opts.kmeans);
  a.model.encoding = method;
  a.labels = a.model.labels;
  return a;
}

Annotation annotate_by_cluster(const data::Dataset &records,
                               const embed::Provider &provider,
                               EncodingMethod method, int n,
                               std::uint64_t seed, const ElicitOptions &opts) {
  if (records.empty())
    throw DataError("annotate: no records");
  if (n <= 0 || static_cast<std::size_t>(n) > records.size())
    throw DataError("annotate: cluster count " + std::to_string(n) +
                    " exceeds record count " + std::to_string(records.size()));
  return annotate_embedded(embed_corpus(records, provider), method, n, seed,
                           opts);
}

namespace {

template <class T>
std::vector<T> gather(std::span<const T> xs, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx)
    out.push_back(xs[i]);
  return out;
}

struct IndexSplit {
  std::vector<std::size_t> train, valid, test;
};

IndexSplit split_indices(std::size_t n, std::uint64_t seed) {
  // Same shuffle and rounding as data::split_98_1_1.
  if (n < data::kMinSplitSize)
    throw DataError("self-feedback needs at least " +
                    std::to_string(data::kMinSplitSize) + " records, got " +
                    std::to_string(n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i)
    order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t small = n / 100;
  IndexSplit s;
  s.valid.assign(order.begin(), order.begin() + small);
  s.test.assign(order.begin() + small, order.begin() + 2 * small);
  s.train.assign(order.begin() + 2 * small, order.end());
  return s;
}

}  // namespace

FeedbackResult self_feedback_embedded(const EmbeddedCorpus &corpus,
                                      EncodingMethod method, int n,
                                      std::uint64_t seed,
                                      const ElicitOptions &opts) {
  if (opts.rounds_max < 1)
    throw ConfigError("self-feedback: rounds_max must be >= 1");
  auto annotation = annotate_embedded(corpus, method, n, seed, opts);
  const auto split = split_indices(corpus.size(), seed);
  const std::span<const Vector> inputs(corpus.inputs);

  const auto train_x = gather(inputs, split.train);
  const auto test_x = gather(inputs, split.test);
  const auto valid_x = gather(inputs, split.valid);
  const std::span<const int> reference(annotation.labels);
  const auto test_ref = gather(reference, split.test);
  const auto valid_ref = gather(reference, split.valid);

  FeedbackResult result;
  result.cluster_labels = annotation.labels;
  result.clusters = std::move(annotation.model);

  std::vector<int> labels = result.cluster_labels;
  double previous = 0.0;
  for (int round = 1; round <= opts.rounds_max; ++round) {
    const auto train_y = gather(std::span<const int>(labels), split.train);
    auto model = train_rt_classifier(train_x, train_y, n, seed, opts.classifier);
    const double acc = classifier_accuracy(model, test_x, test_ref);
    result.round_accuracies.push_back(acc);
    result.rounds_used = round;
    if (round > 1 && acc < previous)
      break;  // keep the previous round
    result.labels = labels;
    result.accuracy = acc;
    result.valid_accuracy = classifier_accuracy(model, valid_x, valid_ref);
    const double gain = acc - previous;
    result.model = std::move(model);
    if (round == opts.rounds_max || gain < opts.min_gain || acc >= 1.0)
      break;
    labels = result.model.predict(inputs);
    previous = acc;
  }
  return result;
}

FeedbackResult self_feedback_round(const data::Dataset &records,
                                   const embed::Provider &provider,
                                   EncodingMethod method, int n,
                                   std::uint64_t seed,
                                   const ElicitOptions &opts) {
  if (records.empty())
    throw DataError("self-feedback: no records");
  return self_feedback_embedded(embed_corpus(records, provider), method, n,
                                seed, opts);
}

// --- sweep ---------------------------------------------------------------

BestChoice select_best(std::span<const SweepRow> rows, double accuracy_floor) {
  if (rows.empty())
    throw DataError("select_best: no rows");
  auto encoding_rank = [](EncodingMethod m) { return static_cast<int>(m); };
  const SweepRow *best = nullptr;
  bool best_above = false;
  for (const auto &row : rows) {
    if (row.failed)
      continue;
    const bool above = row.accuracy >= accuracy_floor;
    if (!best) {
      best = &row;
      best_above = above;
      continue;
    }
    bool better;
    if (above != best_above) {
      better = above;
    } else if (above) {
      // Over the floor: more clusters, then accuracy, then encoding order.
      if (row.n != best->n)
        better = row.n > best->n;
      else if (row.accuracy != best->accuracy)
        better = row.accuracy > best->accuracy;
      else
        better = encoding_rank(row.encoding) < encoding_rank(best->encoding);
    } else {
      if (row.accuracy != best->accuracy)
        better = row.accuracy > best->accuracy;
      else if (row.n != best->n)
        better = row.n > best->n;
      else
        better = encoding_rank(row.encoding) < encoding_rank(best->encoding);
    }
    if (better) {
      best = &row;
      best_above = above;
    }
  }
  if (!best)
    throw DataError("select_best: every sweep row failed");
  return {best->encoding, best->n, best->accuracy};
}

SweepReport run_sweep_embedded(const EmbeddedCorpus &corpus,
                               std::span<const EncodingMethod> encodings,
                               int n_min, int n_max, std::uint64_t seed,
                               const SweepPolicy &policy) {
  if (encodings.empty() || n_min > n_max || n_min < 1)
    throw ConfigError("sweep: empty grid");
  SweepReport report;
  for (auto e : encodings)
    for (int n = n_min; n <= n_max; ++n) {
      SweepRow row;
      row.encoding = e;
      row.n = n;
      report.rows.push_back(row);
    }

  auto run_cell = [&](SweepRow &row) {
    try {
      auto r = self_feedback_embedded(corpus, row.encoding, row.n, seed,
                                      policy.elicit);
      row.accuracy = r.accuracy;
      row.valid_accuracy = r.valid_accuracy;
      row.feedback_rounds = r.rounds_used;
      row.round_accuracies = std::move(r.round_accuracies);
    } catch (const std::exception &e) {
      row.failed = true;
      row.error = e.what();
    }
  };

  const unsigned threads =
      std::max(1u, std::min<unsigned>(policy.threads,
                                      static_cast<unsigned>(report.rows.size())));
  if (threads == 1) {
    for (auto &row : report.rows)
      run_cell(row);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&]() {
        for (std::size_t i = next++; i < report.rows.size(); i = next++)
          run_cell(report.rows[i]);
      });
  }
  report.best = select_best(report.rows, policy.accuracy_floor);
  return report;
}

SweepReport run_sweep(const data::Dataset &records,
                      const embed::Provider &provider,
                      std::span<const EncodingMethod> encodings, int n_min,
                      int n_max, std::uint64_t seed, const SweepPolicy &policy) {
  if (records.empty())
    throw DataError("sweep: no records");
  return run_sweep_embedded(embed_corpus(records, provider), encodings, n_min,
                            n_max, seed, policy);
}

}  // namespace rxnelicit::elicit
