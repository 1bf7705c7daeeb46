#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rxnelicit/elicitation.hpp"
#include "rxnelicit/embedding.hpp"
#include "rxnelicit/error.hpp"
#include "rxnelicit/genbackend.hpp"

// The three-stage run (elicit, curate, prompt) plus generation and
// evaluation, driven by one flat config.
namespace rxnelicit::pipeline {

struct RunConfig {
  // "hash:<dim>", "file:<path.embs>" or "http:<url>" (dim from embed_dim).
  std::string provider = "hash:64";
  std::size_t embed_dim = 64;
  std::uint64_t seed = 0;
  int n_min = 3;
  int n_max = 12;
  std::vector<embed::EncodingMethod> encodings{embed::kAllEncodings.begin(),
                                               embed::kAllEncodings.end()};
  double accuracy_floor = elicit::kDefaultAccuracyFloor;
  int epochs = 30;
  double lr = 0.05;
  std::size_t batch_size = 128;
  double l2 = 0.0;
  int rounds_max = 3;
  double min_gain = 0.005;
  int kmeans_restarts = 10;
  int kmeans_max_iter = 300;
  bool normalize = false;
  unsigned threads = 1;
  bool clean = true;

  std::string train;
  std::string valid;
  std::string test;
  std::string templates;  // empty: built-in library
  std::string model;      // empty: <out_dir>/rt_classifier.rtcl
  std::string out_dir = "out";

  std::string gen_backend;  // empty: none, "echo", "http:<url>"
  int max_new_tokens = 256;
  double temperature = 0.0;
  bool static_template = false;

  std::string predictions;  // empty: <out_dir>/test.predictions.jsonl
  std::string references;   // empty: <out_dir>/test.curated.jsonl
  std::string baseline;     // optional metric report to compute improve

  elicit::ElicitOptions elicit_options() const;
  std::filesystem::path out(const std::string &name) const;
  std::filesystem::path model_path() const;
};

// Keys and value types mirror RunConfig. Unknown keys and wrong types are
// ConfigErrors.
void apply_json(RunConfig &cfg, const nlohmann::json &obj,
                const std::string &source);
nlohmann::ordered_json to_json(const RunConfig &cfg);

using EnvLookup = std::function<std::optional<std::string>(const char *)>;
std::optional<std::string> process_env(const char *name);

// Defaults, then RXN_EMBED_URL / RXN_GEN_URL, then the config file, then
// the flag overrides.
RunConfig resolve_config(const std::optional<std::filesystem::path> &file,
                         const nlohmann::json &flags,
                         const EnvLookup &env = process_env);

// Range and consistency checks. Throws ConfigError.
void validate(const RunConfig &cfg);

std::unique_ptr<embed::Provider> make_provider(const RunConfig &cfg);

class StageError : public Error {
 public:
  StageError(std::string stage, const Error &cause)
      : Error(cause.kind(), stage + ": " + cause.what()),
        stage_(std::move(stage)) { }
  const std::string &stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Each command returns its summary block of the consolidated report and
// writes its artifacts under out_dir.
nlohmann::ordered_json cmd_elicit(const RunConfig &cfg);
nlohmann::ordered_json cmd_curate(const RunConfig &cfg);
nlohmann::ordered_json cmd_prompts(const RunConfig &cfg);
nlohmann::ordered_json cmd_generate(const RunConfig &cfg);
nlohmann::ordered_json cmd_evaluate(const RunConfig &cfg);
// Runs the stages in order, then writes pipeline_report.json. A failure
// is rethrown as a StageError naming the stage.
nlohmann::ordered_json cmd_run_all(const RunConfig &cfg);

// Artifact names under out_dir.
inline constexpr const char *kSweepReport = "sweep_report.json";
inline constexpr const char *kClassifierFile = "rt_classifier.rtcl";
inline constexpr const char *kClusterFile = "cluster_model.kmns";
inline constexpr const char *kTrainLabeled = "train_labeled.jsonl";
inline constexpr const char *kProjection = "projection.json";
inline constexpr const char *kValidCurated = "valid.curated.jsonl";
inline constexpr const char *kTestCurated = "test.curated.jsonl";
inline constexpr const char *kTrainPrompts = "train.prompts.jsonl";
inline constexpr const char *kValidPrompts = "valid.prompts.jsonl";
inline constexpr const char *kTestPrompts = "test.prompts.jsonl";
inline constexpr const char *kTestPredictions = "test.predictions.jsonl";
inline constexpr const char *kMetricReport = "metric_report.json";
inline constexpr const char *kPipelineReport = "pipeline_report.json";

}  // namespace rxnelicit::pipeline
