#include "rxnelicit/curation.hpp"

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "rxnelicit/binary_io.hpp"
#include "rxnelicit/error.hpp"
#include "rxnelicit/util.hpp"

namespace rxnelicit::curate {

std::string bytes_fingerprint(std::string_view bytes) {
  return hex64(fnv1a64(bytes));
}

std::string model_fingerprint(const elicit::RTClassifierModel &model) {
  return bytes_fingerprint(elicit::serialize_classifier(model));
}

CuratedDataset annotate_dataset(const data::Dataset &records,
                                const embed::Provider &provider,
                                const elicit::RTClassifierModel &model,
                                std::string source) {
  if (static_cast<std::size_t>(model.input_dim) != provider.dim())
    throw ConfigError("classifier expects dim " +
                      std::to_string(model.input_dim) + " but provider has dim " +
                      std::to_string(provider.dim()));
  CuratedDataset out;
  out.source = std::move(source);
  out.model_fingerprint = model_fingerprint(model);
  out.n_classes = model.n_classes;
  out.records = records;
  if (records.empty())
    return out;

  std::vector<embed::EmbedItem> items;
  items.reserve(records.size());
  for (const auto &r : records)
    items.push_back({embed::embedding_key(r.id, "input"), r.input});
  const auto vecs = provider.embed(items);
  if (vecs.size() != records.size())
    throw BackendError("provider returned the wrong number of vectors");
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto &r = out.records[i];
    if (r.rt)
      ++out.overwritten;
    r.rt = model.predict(vecs[i]);
  }
  if (out.overwritten > 0)
    spdlog::warn("annotate: overwrote {} existing rt labels{}", out.overwritten,
                 out.source.empty() ? "" : " in " + out.source);
  return out;
}

std::string render_rt_prompt(data::TaskType task, int n_classes,
                             std::string_view input) {
  std::string out = "This is the ";
  out += data::task_name(task);
  out += " reaction prediction task, where the goal is to determine the type "
         "of chemical reaction based on the given compounds, categorized as 0 "
         "through ";
  out += std::to_string(n_classes - 1);
  out += ".\ninput: ";
  out += input;
  return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path &dataset) {
  return dataset.string() + ".meta.json";
}

void save_curated(const std::filesystem::path &path, const CuratedDataset &c) {
  data::save_dataset(path, c.records);
  nlohmann::ordered_json meta;
  meta["source"] = c.source;
  meta["model_fingerprint"] = c.model_fingerprint;
  meta["n_classes"] = c.n_classes;
  meta["records"] = c.records.size();
  meta["overwritten"] = c.overwritten;
  binio::write_file(sidecar_path(path), meta.dump(2) + "\n");
}

CuratedDataset load_curated(const std::filesystem::path &path) {
  CuratedDataset c;
  c.records = data::load_dataset(path);
  const auto meta_path = sidecar_path(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(binio::read_file(meta_path));
    c.source = meta.at("source").get<std::string>();
    c.model_fingerprint = meta.at("model_fingerprint").get<std::string>();
    c.n_classes = meta.at("n_classes").get<int>();
    c.overwritten = meta.value("overwritten", std::size_t{0});
  } catch (const nlohmann::json::exception &e) {
    throw DataError(meta_path.string() + ": " + e.what());
  }
  data::check_labels(c.records, c.n_classes);
  return c;
}

}  // namespace rxnelicit::curate
