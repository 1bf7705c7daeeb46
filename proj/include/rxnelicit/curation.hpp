#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "rxnelicit/dataset.hpp"
#include "rxnelicit/elicitation.hpp"
#include "rxnelicit/embedding.hpp"

// Annotating held-out datasets with a frozen RT classifier.
namespace rxnelicit::curate {

struct CuratedDataset {
  data::Dataset records;
  std::string source;
  std::string model_fingerprint;
  int n_classes = 0;
  std::size_t overwritten = 0;  // records whose existing rt was replaced
};

// 16 hex characters of FNV-1a-64 over the serialized classifier, which is
// exactly the bytes of its RTCL file.
std::string model_fingerprint(const elicit::RTClassifierModel &model);
std::string bytes_fingerprint(std::string_view bytes);

// rt of every record becomes the classifier's prediction on its input
// embedding. Throws ConfigError when the dims disagree.
CuratedDataset annotate_dataset(const data::Dataset &records,
                                const embed::Provider &provider,
                                const elicit::RTClassifierModel &model,
                                std::string source = {});

std::string render_rt_prompt(data::TaskType task, int n_classes,
                             std::string_view input);

// "<path>.meta.json"
std::filesystem::path sidecar_path(const std::filesystem::path &dataset);

// Writes the records plus a sidecar with source, model_fingerprint,
// n_classes, record count and overwrite count.
void save_curated(const std::filesystem::path &path, const CuratedDataset &c);
CuratedDataset load_curated(const std::filesystem::path &path);

}  // namespace rxnelicit::curate
