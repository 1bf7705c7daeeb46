#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rxnelicit/clustering.hpp"
#include "rxnelicit/dataset.hpp"
#include "rxnelicit/embedding.hpp"

// Reaction-type elicitation: cluster composed embeddings into pseudo
// labels, fit a softmax classifier on input embeddings, feed its
// predictions back as labels, and sweep encodings x cluster counts.
namespace rxnelicit::elicit {

using embed::EncodingMethod;
using embed::Vector;

struct TrainingMeta {
  int epochs = 0;
  double train_accuracy = 0.0;
  std::uint64_t seed = 0;
};

// Multinomial logistic regression over input embeddings.
struct RTClassifierModel {
  int n_classes = 0;
  int input_dim = 0;
  std::vector<double> weights;  // n_classes x input_dim, row-major
  std::vector<double> bias;     // n_classes
  TrainingMeta meta;

  static RTClassifierModel zeros(int n_classes, int input_dim);

  std::vector<double> logits(const Vector &x) const;
  // argmax of the logits, lowest class on ties
  int predict(const Vector &x) const;
  std::vector<int> predict(std::span<const Vector> xs) const;
};

struct ClassifierOptions {
  int epochs = 30;
  double lr = 0.05;
  std::size_t batch_size = 128;
  double l2 = 0.0;
};

// Mini-batch gradient descent on mean cross-entropy from zero weights;
// batches are drawn from a seeded shuffle each epoch.
RTClassifierModel train_rt_classifier(std::span<const Vector> inputs,
                                      std::span<const int> labels,
                                      int n_classes, std::uint64_t seed,
                                      const ClassifierOptions &opts = {});

double classifier_accuracy(const RTClassifierModel &model,
                           std::span<const Vector> inputs,
                           std::span<const int> labels);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> d_weights;
  std::vector<double> d_bias;
};

// Mean cross-entropy (+ l2/2 * |W|^2) and its analytic gradient.
LossGradient loss_and_gradient(const RTClassifierModel &model,
                               std::span<const Vector> inputs,
                               std::span<const int> labels, double l2 = 0.0);

// "RTCL" container: version, n_classes, input_dim, weights, bias.
std::string serialize_classifier(const RTClassifierModel &model);
RTClassifierModel parse_classifier(std::string_view bytes,
                                   const std::string &context = "RTCL");
void save_classifier(const std::filesystem::path &path,
                     const RTClassifierModel &model);
RTClassifierModel load_classifier(const std::filesystem::path &path);

struct ElicitOptions {
  cluster::KMeansOptions kmeans{300, 1e-4, 10};
  ClassifierOptions classifier;
  int rounds_max = 3;
  double min_gain = 0.005;
  // L2-normalize composed vectors before clustering.
  bool normalize = false;
};

// Input and output embeddings of a record list, fetched once.
struct EmbeddedCorpus {
  std::vector<Vector> inputs;
  std::vector<Vector> outputs;

  std::size_t size() const { return inputs.size(); }
};

EmbeddedCorpus embed_corpus(const data::Dataset &records,
                            const embed::Provider &provider);

// One composed vector per record, optionally L2-normalized.
std::vector<Vector> composed_points(const EmbeddedCorpus &corpus,
                                    EncodingMethod method, bool normalize);

struct Annotation {
  std::vector<int> labels;
  cluster::ClusterModel model;
};

Annotation annotate_by_cluster(const data::Dataset &records,
                               const embed::Provider &provider,
                               EncodingMethod method, int n,
                               std::uint64_t seed,
                               const ElicitOptions &opts = {});
Annotation annotate_embedded(const EmbeddedCorpus &corpus,
                             EncodingMethod method, int n, std::uint64_t seed,
                             const ElicitOptions &opts = {});

struct FeedbackResult {
  std::vector<int> labels;          // labels the final classifier was fit on
  RTClassifierModel model;
  double accuracy = 0.0;            // D'_test agreement with the clustering
  double valid_accuracy = 0.0;      // same on D'_valid, for the log
  int rounds_used = 0;              // classifier trainings performed
  std::vector<double> round_accuracies;
  std::vector<int> cluster_labels;  // round-0 annotation
  cluster::ClusterModel clusters;
};

// Round 0 clusters the composed vectors. Each round then trains on the
// 98% part of a seeded 98:1:1 split, scores the 1% test part against the
// cluster annotation, and relabels every record with the classifier.
// Stops at rounds_max, when the gain falls below min_gain, or at perfect
// accuracy; a round that lowers accuracy is discarded.
FeedbackResult self_feedback_round(const data::Dataset &records,
                                   const embed::Provider &provider,
                                   EncodingMethod method, int n,
                                   std::uint64_t seed,
                                   const ElicitOptions &opts = {});
FeedbackResult self_feedback_embedded(const EmbeddedCorpus &corpus,
                                      EncodingMethod method, int n,
                                      std::uint64_t seed,
                                      const ElicitOptions &opts = {});

struct SweepRow {
  EncodingMethod encoding = EncodingMethod::kOutputOnly;
  int n = 0;
  double accuracy = 0.0;
  double valid_accuracy = 0.0;
  int feedback_rounds = 0;
  std::vector<double> round_accuracies;
  bool failed = false;
  std::string error;
};

struct BestChoice {
  EncodingMethod encoding = EncodingMethod::kOutputOnly;
  int n = 0;
  double accuracy = 0.0;

  bool operator==(const BestChoice &) const = default;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  BestChoice best;
};

struct SweepPolicy {
  double accuracy_floor = 0.70;
  ElicitOptions elicit;
  unsigned threads = 1;
};

inline constexpr double kDefaultAccuracyFloor = 0.70;

// Largest n whose accuracy clears the floor, then higher accuracy, then
// the earlier encoding. Without any row over the floor, the most accurate
// row. Failed rows never win.
BestChoice select_best(std::span<const SweepRow> rows,
                       double accuracy_floor = kDefaultAccuracyFloor);

SweepReport run_sweep(const data::Dataset &records,
                      const embed::Provider &provider,
                      std::span<const EncodingMethod> encodings, int n_min,
                      int n_max, std::uint64_t seed,
                      const SweepPolicy &policy = {});
SweepReport run_sweep_embedded(const EmbeddedCorpus &corpus,
                               std::span<const EncodingMethod> encodings,
                               int n_min, int n_max, std::uint64_t seed,
                               const SweepPolicy &policy = {});

}  // namespace rxnelicit::elicit
