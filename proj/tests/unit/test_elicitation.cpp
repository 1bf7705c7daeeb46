#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "../support/planted.hpp"
#include "rxnelicit/elicitation.hpp"
#include "rxnelicit/error.hpp"

using namespace rxnelicit;
using namespace rxnelicit::elicit;

namespace {

struct Blobs {
  std::vector<Vector> x;
  std::vector<int> y;
};

Blobs blobs(std::mt19937_64 &rng, int classes, int per_class, double spread,
            int dim = 2) {
  std::normal_distribution<double> g(0.0, spread);
  Blobs b;
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < per_class; ++i) {
      Vector v(dim);
      for (int j = 0; j < dim; ++j)
        v[j] = g(rng) + (j == c % dim ? 4.0 : 0.0) * (c < dim ? 1 : -1);
      b.x.push_back(v);
      b.y.push_back(c);
    }
  return b;
}

RTClassifierModel random_model(std::mt19937_64 &rng, int classes, int dim) {
  std::normal_distribution<double> g(0.0, 0.5);
  auto m = RTClassifierModel::zeros(classes, dim);
  for (auto &w : m.weights)
    w = g(rng);
  for (auto &b : m.bias)
    b = g(rng);
  return m;
}

}  // namespace

TEST_CASE("separable blobs are fit almost perfectly") {
  std::mt19937_64 rng(1);
  auto b = blobs(rng, 2, 100, 0.5);
  auto m = train_rt_classifier(b.x, b.y, 2, 3);
  CHECK(m.meta.train_accuracy >= 0.99);
  CHECK(m.meta.epochs == 30);
  CHECK(m.meta.seed == 3);
  CHECK(classifier_accuracy(m, b.x, b.y) == m.meta.train_accuracy);
}

TEST_CASE("constant labels give a constant predictor") {
  std::mt19937_64 rng(2);
  auto b = blobs(rng, 3, 30, 1.0);
  std::vector<int> labels(b.x.size(), 2);
  auto m = train_rt_classifier(b.x, labels, 3, 1);
  for (int p : m.predict(b.x))
    CHECK(p == 2);
}

TEST_CASE("zero epochs is chance level") {
  std::mt19937_64 rng(3);
  auto b = blobs(rng, 4, 50, 1.0);
  ClassifierOptions o;
  o.epochs = 0;
  auto m = train_rt_classifier(b.x, b.y, 4, 1, o);
  for (double w : m.weights)
    CHECK(w == 0.0);
  CHECK(std::abs(classifier_accuracy(m, b.x, b.y) - 0.25) <= 0.1);
}

TEST_CASE("training is deterministic and validates input") {
  std::mt19937_64 rng(4);
  auto b = blobs(rng, 3, 40, 1.0);
  auto m1 = train_rt_classifier(b.x, b.y, 3, 9);
  auto m2 = train_rt_classifier(b.x, b.y, 3, 9);
  CHECK(m1.weights == m2.weights);
  CHECK(m1.bias == m2.bias);
  CHECK_THROWS_AS(train_rt_classifier({}, {}, 3, 0), DataError);
  std::vector<int> bad = b.y;
  bad[0] = 3;
  CHECK_THROWS_AS(train_rt_classifier(b.x, bad, 3, 0), DataError);
  CHECK_THROWS_AS(train_rt_classifier(b.x, b.y, 1, 0), DataError);
}

TEST_CASE("accuracy") {
  // Hand-built: class scores are x, y and -x-y.
  auto m = RTClassifierModel::zeros(3, 2);
  m.weights = {1, 0, 0, 1, -1, -1};
  std::vector<Vector> pts{{2, 1}, {0, 3}, {-1, -1}};
  // logits: (2,1,-3) -> 0; (0,3,-3) -> 1; (-1,-1,2) -> 2
  CHECK(m.predict(pts) == std::vector<int>{0, 1, 2});
  CHECK(classifier_accuracy(m, pts, std::vector<int>{0, 1, 2}) == 1.0);
  CHECK(classifier_accuracy(m, pts, std::vector<int>{0, 0, 0}) ==
        doctest::Approx(1.0 / 3.0));

  std::mt19937_64 rng(5);
  auto b = blobs(rng, 2, 60, 2.0);
  auto fit = train_rt_classifier(b.x, b.y, 2, 1);
  auto own = fit.predict(b.x);
  CHECK(classifier_accuracy(fit, b.x, own) == 1.0);
  std::vector<int> flipped;
  for (int y : b.y)
    flipped.push_back(1 - y);
  CHECK(classifier_accuracy(fit, b.x, flipped) ==
        doctest::Approx(1.0 - classifier_accuracy(fit, b.x, b.y)));
  CHECK_THROWS_AS(classifier_accuracy(fit, b.x, std::vector<int>{0}), DataError);
}

TEST_CASE("gradient matches central differences") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const int classes = 2 + trial % 3, dim = 1 + trial % 4;
    auto b = blobs(rng, classes, 4, 1.0, dim);
    auto m = random_model(rng, classes, dim);
    const double l2 = trial % 2 ? 0.1 : 0.0;
    auto g = loss_and_gradient(m, b.x, b.y, l2);
    const double h = 1e-5;
    auto check = [&](double &param, double analytic) {
      const double saved = param;
      param = saved + h;
      const double up = loss_and_gradient(m, b.x, b.y, l2).loss;
      param = saved - h;
      const double down = loss_and_gradient(m, b.x, b.y, l2).loss;
      param = saved;
      const double numeric = (up - down) / (2 * h);
      CHECK(std::abs(numeric - analytic) <=
            1e-4 * std::max(1.0, std::abs(numeric)));
    };
    for (std::size_t i = 0; i < m.weights.size(); ++i)
      check(m.weights[i], g.d_weights[i]);
    for (std::size_t i = 0; i < m.bias.size(); ++i)
      check(m.bias[i], g.d_bias[i]);
  }
}

TEST_CASE("RTCL round trip") {
  std::mt19937_64 rng(7);
  auto m = random_model(rng, 3, 5);
  const auto bytes = serialize_classifier(m);
  CHECK(bytes.size() == 16 + 4 * (15 + 3));
  CHECK(bytes.substr(0, 4) == "RTCL");
  auto back = parse_classifier(bytes);
  CHECK(back.n_classes == 3);
  CHECK(back.input_dim == 5);
  CHECK(serialize_classifier(back) == bytes);
  CHECK_THROWS_AS(parse_classifier(bytes.substr(0, bytes.size() - 2)), DataError);
}

TEST_CASE("annotate_by_cluster") {
  auto store = std::make_shared<embed::EmbeddingStore>(2);
  data::Dataset recs = {{"a", data::TaskType::kForward, "", "C", "CC", {}},
                        {"b", data::TaskType::kForward, "", "O", "OO", {}}};
  store->put("a:input", Vector{0, 0});
  store->put("a:output", Vector{1, 0});
  store->put("b:input", Vector{0, 0});
  store->put("b:output", Vector{0, 1});
  embed::StoreProvider p(store);
  auto a = annotate_by_cluster(recs, p, embed::EncodingMethod::kOutputOnly, 2, 1);
  CHECK(oracle::partition_of(a.labels).size() == 2);
  auto one = annotate_by_cluster(recs, p, embed::EncodingMethod::kOutputOnly, 1, 1);
  CHECK(one.labels == std::vector<int>{0, 0});
  CHECK_THROWS_AS(
      annotate_by_cluster(recs, p, embed::EncodingMethod::kOutputOnly, 3, 1),
      DataError);

  auto c = planted::concat_only(300, 3);
  embed::StoreProvider pp(c.store);
  auto blob = annotate_by_cluster(c.records, pp, embed::EncodingMethod::kConcat, 3, 5);
  CHECK(oracle::best_permutation_agreement(blob.labels, c.family, 3) >= 0.95);
  CHECK(blob.model.encoding == embed::EncodingMethod::kConcat);
}

TEST_CASE("self-feedback") {
  auto c = planted::concat_only(600, 1);
  embed::StoreProvider p(c.store);
  ElicitOptions o;
  o.rounds_max = 1;
  auto one = self_feedback_round(c.records, p, embed::EncodingMethod::kConcat, 3, 2, o);
  CHECK(one.rounds_used == 1);
  CHECK(one.labels == one.cluster_labels);
  CHECK(one.accuracy >= 0.95);

  o.rounds_max = 3;
  o.min_gain = 1.0;
  auto capped = self_feedback_round(c.records, p, embed::EncodingMethod::kOutputOnly,
                                    4, 2, o);
  CHECK(capped.rounds_used == 1);
  CHECK(capped.round_accuracies.size() == 1);

  // Input determines the family, so feedback never hurts.
  ElicitOptions d;
  auto fb = self_feedback_round(c.records, p, embed::EncodingMethod::kConcat, 3, 4, d);
  CHECK(fb.accuracy >= fb.round_accuracies.front() - 0.01);
  for (std::size_t i = 1; i < fb.round_accuracies.size(); ++i)
    CHECK(fb.round_accuracies[i] >= fb.round_accuracies[i - 1] - 0.01);

  // Annotation distribution keeps every class populated.
  auto pred = fb.model.predict(embed_corpus(c.records, p).inputs);
  std::vector<int> counts(3, 0);
  for (int l : pred)
    ++counts[l];
  for (int k : counts)
    CHECK(k > 0);

  data::Dataset tiny(c.records.begin(), c.records.begin() + 50);
  CHECK_THROWS_AS(self_feedback_round(tiny, p, embed::EncodingMethod::kConcat, 3, 1),
                  DataError);
}

TEST_CASE("select_best") {
  using E = embed::EncodingMethod;
  auto row = [](E e, int n, double acc, bool failed = false) {
    SweepRow r;
    r.encoding = e;
    r.n = n;
    r.accuracy = acc;
    r.failed = failed;
    return r;
  };
  std::vector<SweepRow> rows{row(E::kConcat, 6, 0.9), row(E::kConcat, 10, 0.72)};
  CHECK(select_best(rows) == BestChoice{E::kConcat, 10, 0.72});
  rows = {row(E::kOutputOnly, 3, 0.5), row(E::kConcat, 4, 0.4)};
  CHECK(select_best(rows) == BestChoice{E::kOutputOnly, 3, 0.5});
  rows = {row(E::kConcat, 10, 0.71), row(E::kOutputMinusInput, 10, 0.74)};
  CHECK(select_best(rows) == BestChoice{E::kOutputMinusInput, 10, 0.74});
  rows = {row(E::kConcat, 10, 0.8), row(E::kOutputMinusInput, 10, 0.8)};
  CHECK(select_best(rows).encoding == E::kOutputMinusInput);
  rows = {row(E::kConcat, 12, 0.99, true), row(E::kConcat, 3, 0.6)};
  CHECK(select_best(rows) == BestChoice{E::kConcat, 3, 0.6});
  rows = {row(E::kConcat, 12, 0.99, true)};
  CHECK_THROWS_AS(select_best(rows), DataError);
  CHECK_THROWS_AS(select_best(std::vector<SweepRow>{}), DataError);
}

TEST_CASE("run_sweep grid, failures and determinism") {
  auto c = planted::concat_only(300, 2);
  embed::StoreProvider p(c.store);
  const std::vector<embed::EncodingMethod> one{embed::EncodingMethod::kConcat};
  auto single = run_sweep(c.records, p, one, 5, 5, 1);
  REQUIRE(single.rows.size() == 1);
  CHECK(single.best.n == 5);
  CHECK(single.best.accuracy == single.rows[0].accuracy);

  SweepPolicy policy;
  policy.threads = 3;
  auto grid = run_sweep(c.records, p, embed::kAllEncodings, 3, 12, 1, policy);
  CHECK(grid.rows.size() == 40);
  for (const auto &r : grid.rows)
    CHECK_FALSE(r.failed);
  auto again = run_sweep(c.records, p, embed::kAllEncodings, 3, 12, 1);
  for (std::size_t i = 0; i < grid.rows.size(); ++i) {
    CHECK(grid.rows[i].accuracy == again.rows[i].accuracy);
    CHECK(grid.rows[i].round_accuracies == again.rows[i].round_accuracies);
  }
  CHECK(grid.best == again.best);

  // n beyond the record count fails that row only.
  data::Dataset small(c.records.begin(), c.records.begin() + 100);
  auto partial = run_sweep(small, p, one, 98, 101, 1);
  CHECK(partial.rows.back().failed);
  CHECK_FALSE(partial.rows.front().failed);
  CHECK(partial.best.n <= 100);
}
