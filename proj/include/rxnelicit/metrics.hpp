#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rxnelicit/dataset.hpp"

// Text and chemistry metrics for generated predictions.
namespace rxnelicit::metrics {

// Corpus BLEU over regex SMILES tokens, n = 1..4, uniform weights. A zero
// match count for n >= 2 is smoothed to 1 / (t + 1); no unigram match
// gives 0. Throws DataError on a length mismatch or empty corpus.
double bleu(std::span<const std::string> predictions,
            std::span<const std::string> references);

struct MeteorParts {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  double precision = 0.0;
  double recall = 0.0;
  double score = 0.0;
};

// Exact-token METEOR for one pair. The alignment covers the full multiset
// intersection; chunks are reduced by aligning the longest common runs
// first.
MeteorParts meteor_pair(std::span<const std::string> pred_tokens,
                        std::span<const std::string> ref_tokens);

// Mean of the per-pair scores.
double meteor(std::span<const std::string> predictions,
              std::span<const std::string> references);

// Sorted canonical compounds; invalid compounds are kept as trimmed text.
std::vector<std::string> compound_multiset(std::string_view s);

double exact_match(std::span<const std::string> predictions,
                   std::span<const std::string> references);

// Tanimoto between fingerprint unions of the valid compounds on each side.
double pair_similarity(std::string_view prediction, std::string_view reference);
double similarity(std::span<const std::string> predictions,
                  std::span<const std::string> references);

bool is_valid_prediction(std::string_view s);
double validity(std::span<const std::string> predictions);

// (candidate - baseline) / baseline. Throws DataError when baseline <= 0.
double improvement(double candidate_em, double baseline_em);

struct Scores {
  double bleu = 0.0;
  double meteor = 0.0;
  double em = 0.0;
  double similarity = 0.0;
  double validity = 0.0;
  std::size_t count = 0;
  std::optional<double> improve;
};

struct EvalRow {
  std::string id;
  data::TaskType task = data::TaskType::kForward;
  std::string prediction;
  std::string reference;
};

struct MetricReport {
  Scores overall;
  std::map<data::TaskType, Scores> tasks;

  // Fills improve from the baseline's em wherever both sides have the
  // task and the baseline em is positive.
  void apply_baseline(const MetricReport &baseline);

  std::string to_json() const;
  static MetricReport from_json(std::string_view text, const std::string &source);
};

Scores score(std::span<const EvalRow> rows);
MetricReport evaluate(std::span<const EvalRow> rows);

struct Prediction {
  std::string id;
  std::string prediction;
  bool operator==(const Prediction &) const = default;
};

std::string serialize_predictions(std::span<const Prediction> preds);
std::vector<Prediction> parse_predictions(std::string_view text,
                                          const std::string &source);

// Pairs predictions with reference records by id, in reference order.
// Throws DataError naming the first id that has no partner.
std::vector<EvalRow> align(std::span<const Prediction> predictions,
                           const data::Dataset &references);

}  // namespace rxnelicit::metrics
