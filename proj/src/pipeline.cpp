#include "rxnelicit/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "rxnelicit/binary_io.hpp"
#include "rxnelicit/clustering.hpp"
#include "rxnelicit/curation.hpp"
#include "rxnelicit/dataset.hpp"
#include "rxnelicit/metrics.hpp"
#include "rxnelicit/prompting.hpp"
#include "rxnelicit/util.hpp"

namespace rxnelicit::pipeline {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

elicit::ElicitOptions RunConfig::elicit_options() const {
  elicit::ElicitOptions o;
  o.kmeans.max_iter = kmeans_max_iter;
  o.kmeans.restarts = kmeans_restarts;
  o.classifier.epochs = epochs;
  o.classifier.lr = lr;
  o.classifier.batch_size = batch_size;
  o.classifier.l2 = l2;
  o.rounds_max = rounds_max;
  o.min_gain = min_gain;
  o.normalize = normalize;
  return o;
}

fs::path RunConfig::out(const std::string &name) const {
  return fs::path(out_dir) / name;
}

fs::path RunConfig::model_path() const {
  return model.empty() ? out(kClassifierFile) : fs::path(model);
}

// --- config ----------------------------------------------------------------

namespace {

struct Field {
  std::string where;
  const nlohmann::json &v;

  [[noreturn]] void fail(const char *expected) const {
    throw ConfigError(where + ": expected " + expected + ", got " + v.dump());
  }
  std::string str() const {
    if (!v.is_string())
      fail("a string");
    return v.get<std::string>();
  }
  bool boolean() const {
    if (!v.is_boolean())
      fail("true or false");
    return v.get<bool>();
  }
  double real() const {
    if (!v.is_number())
      fail("a number");
    return v.get<double>();
  }
  long long integer() const {
    if (!v.is_number_integer())
      fail("an integer");
    return v.get<long long>();
  }
  std::uint64_t unsigned_integer() const {
    if (!v.is_number_unsigned() &&
        !(v.is_number_integer() && v.get<long long>() >= 0))
      fail("a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::size_t count() const {
    auto n = integer();
    if (n < 0)
      fail("a non-negative integer");
    return static_cast<std::size_t>(n);
  }
};

std::vector<embed::EncodingMethod> parse_encodings(const Field &f) {
  std::vector<std::string> names;
  if (f.v.is_string()) {
    for (auto part : split(f.v.get<std::string>(), ','))
      if (!trim(part).empty())
        names.emplace_back(trim(part));
  } else if (f.v.is_array()) {
    for (const auto &e : f.v) {
      if (!e.is_string())
        f.fail("a list of encoding names");
      names.push_back(e.get<std::string>());
    }
  } else {
    f.fail("a list of encoding names");
  }
  std::vector<embed::EncodingMethod> out;
  for (const auto &n : names) {
    auto m = embed::parse_encoding(n);
    if (!m)
      throw ConfigError(f.where + ": unknown encoding \"" + n +
                        "\" (expected output, output-input, concat or product)");
    out.push_back(*m);
  }
  return out;
}

using Setter = void (*)(RunConfig &, const Field &);

const std::map<std::string, Setter, std::less<>> &setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"provider", [](RunConfig &c, const Field &f) { c.provider = f.str(); }},
      {"embed_dim", [](RunConfig &c, const Field &f) { c.embed_dim = f.count(); }},
      {"seed", [](RunConfig &c, const Field &f) { c.seed = f.unsigned_integer(); }},
      {"n_min", [](RunConfig &c, const Field &f) { c.n_min = static_cast<int>(f.integer()); }},
      {"n_max", [](RunConfig &c, const Field &f) { c.n_max = static_cast<int>(f.integer()); }},
      {"n_range",
       [](RunConfig &c, const Field &f) {
         if (!f.v.is_array() || f.v.size() != 2 || !f.v[0].is_number_integer() ||
             !f.v[1].is_number_integer())
           f.fail("[min, max]");
         c.n_min = f.v[0].get<int>();
         c.n_max = f.v[1].get<int>();
       }},
      {"encodings", [](RunConfig &c, const Field &f) { c.encodings = parse_encodings(f); }},
      {"accuracy_floor", [](RunConfig &c, const Field &f) { c.accuracy_floor = f.real(); }},
      {"epochs", [](RunConfig &c, const Field &f) { c.epochs = static_cast<int>(f.integer()); }},
      {"lr", [](RunConfig &c, const Field &f) { c.lr = f.real(); }},
      {"batch_size", [](RunConfig &c, const Field &f) { c.batch_size = f.count(); }},
      {"l2", [](RunConfig &c, const Field &f) { c.l2 = f.real(); }},
      {"rounds_max", [](RunConfig &c, const Field &f) { c.rounds_max = static_cast<int>(f.integer()); }},
      {"min_gain", [](RunConfig &c, const Field &f) { c.min_gain = f.real(); }},
      {"kmeans_restarts", [](RunConfig &c, const Field &f) { c.kmeans_restarts = static_cast<int>(f.integer()); }},
      {"kmeans_max_iter", [](RunConfig &c, const Field &f) { c.kmeans_max_iter = static_cast<int>(f.integer()); }},
      {"normalize", [](RunConfig &c, const Field &f) { c.normalize = f.boolean(); }},
      {"threads", [](RunConfig &c, const Field &f) { c.threads = static_cast<unsigned>(f.count()); }},
      {"clean", [](RunConfig &c, const Field &f) { c.clean = f.boolean(); }},
      {"train", [](RunConfig &c, const Field &f) { c.train = f.str(); }},
      {"valid", [](RunConfig &c, const Field &f) { c.valid = f.str(); }},
      {"test", [](RunConfig &c, const Field &f) { c.test = f.str(); }},
      {"templates", [](RunConfig &c, const Field &f) { c.templates = f.str(); }},
      {"model", [](RunConfig &c, const Field &f) { c.model = f.str(); }},
      {"out_dir", [](RunConfig &c, const Field &f) { c.out_dir = f.str(); }},
      {"gen_backend", [](RunConfig &c, const Field &f) { c.gen_backend = f.str(); }},
      {"max_new_tokens", [](RunConfig &c, const Field &f) { c.max_new_tokens = static_cast<int>(f.integer()); }},
      {"temperature", [](RunConfig &c, const Field &f) { c.temperature = f.real(); }},
      {"static_template", [](RunConfig &c, const Field &f) { c.static_template = f.boolean(); }},
      {"predictions", [](RunConfig &c, const Field &f) { c.predictions = f.str(); }},
      {"references", [](RunConfig &c, const Field &f) { c.references = f.str(); }},
      {"baseline", [](RunConfig &c, const Field &f) { c.baseline = f.str(); }},
  };
  return table;
}

}  // namespace

void apply_json(RunConfig &cfg, const nlohmann::json &obj,
                const std::string &source) {
  if (!obj.is_object())
    throw ConfigError(source + ": config must be an object");
  const auto &table = setters();
  for (const auto &[key, value] : obj.items()) {
    auto it = table.find(key);
    if (it == table.end())
      throw ConfigError(source + ": unknown key \"" + key + "\"");
    it->second(cfg, Field{source + ": " + key, value});
  }
}

ojson to_json(const RunConfig &c) {
  ojson j;
  j["provider"] = c.provider;
  j["embed_dim"] = c.embed_dim;
  j["seed"] = c.seed;
  j["n_min"] = c.n_min;
  j["n_max"] = c.n_max;
  j["encodings"] = ojson::array();
  for (auto e : c.encodings)
    j["encodings"].push_back(embed::encoding_name(e));
  j["accuracy_floor"] = c.accuracy_floor;
  j["epochs"] = c.epochs;
  j["lr"] = c.lr;
  j["batch_size"] = c.batch_size;
  j["l2"] = c.l2;
  j["rounds_max"] = c.rounds_max;
  j["min_gain"] = c.min_gain;
  j["kmeans_restarts"] = c.kmeans_restarts;
  j["kmeans_max_iter"] = c.kmeans_max_iter;
  j["normalize"] = c.normalize;
  j["threads"] = c.threads;
  j["clean"] = c.clean;
  j["train"] = c.train;
  j["valid"] = c.valid;
  j["test"] = c.test;
  j["templates"] = c.templates;
  j["model"] = c.model;
  j["out_dir"] = c.out_dir;
  j["gen_backend"] = c.gen_backend;
  j["max_new_tokens"] = c.max_new_tokens;
  j["temperature"] = c.temperature;
  j["static_template"] = c.static_template;
  j["predictions"] = c.predictions;
  j["references"] = c.references;
  j["baseline"] = c.baseline;
  return j;
}

std::optional<std::string> process_env(const char *name) {
  if (const char *v = std::getenv(name); v && *v)
    return std::string(v);
  return std::nullopt;
}

RunConfig resolve_config(const std::optional<fs::path> &file,
                         const nlohmann::json &flags, const EnvLookup &env) {
  RunConfig cfg;
  if (auto url = env("RXN_EMBED_URL"))
    cfg.provider = "http:" + *url;
  if (auto url = env("RXN_GEN_URL"))
    cfg.gen_backend = "http:" + *url;
  if (file) {
    if (!fs::exists(*file))
      throw ConfigError("config file not found: " + file->string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(binio::read_file(*file));
    } catch (const nlohmann::json::parse_error &e) {
      throw ConfigError(file->string() + ": " + e.what());
    }
    apply_json(cfg, doc, file->string());
  }
  if (!flags.is_null())
    apply_json(cfg, flags, "command line");
  validate(cfg);
  return cfg;
}

namespace {

struct ProviderSpec {
  std::string kind;
  std::string arg;
};

ProviderSpec parse_provider(const std::string &spec) {
  auto colon = spec.find(':');
  if (colon == std::string::npos || colon + 1 == spec.size())
    throw ConfigError("provider must be hash:<dim>, file:<path> or http:<url>, got \"" +
                      spec + "\"");
  ProviderSpec p{spec.substr(0, colon), spec.substr(colon + 1)};
  if (p.kind != "hash" && p.kind != "file" && p.kind != "http")
    throw ConfigError("unknown provider kind \"" + p.kind + "\"");
  return p;
}

std::size_t parse_dim(const std::string &s) {
  std::size_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || v < 2)
    throw ConfigError("hash provider dim must be an integer >= 2, got \"" + s +
                      "\"");
  return v;
}

void check(bool ok, const std::string &msg) {
  if (!ok)
    throw ConfigError(msg);
}

}  // namespace

void validate(const RunConfig &c) {
  check(c.n_min >= 2 && c.n_max <= 64 && c.n_min <= c.n_max,
        "n_range must satisfy 2 <= min <= max <= 64, got (" +
            std::to_string(c.n_min) + ", " + std::to_string(c.n_max) + ")");
  check(!c.encodings.empty(), "encodings must not be empty");
  check(std::set(c.encodings.begin(), c.encodings.end()).size() ==
            c.encodings.size(),
        "encodings must not repeat");
  check(c.accuracy_floor >= 0.0 && c.accuracy_floor <= 1.0,
        "accuracy_floor must lie in [0, 1]");
  check(c.epochs >= 1, "epochs must be positive");
  check(c.lr > 0.0, "lr must be positive");
  check(c.batch_size >= 1, "batch_size must be positive");
  check(c.l2 >= 0.0, "l2 must be non-negative");
  check(c.rounds_max >= 1, "rounds_max must be positive");
  check(c.min_gain >= 0.0, "min_gain must be non-negative");
  check(c.kmeans_restarts >= 1, "kmeans_restarts must be positive");
  check(c.kmeans_max_iter >= 1, "kmeans_max_iter must be positive");
  check(c.threads >= 1, "threads must be positive");
  check(c.embed_dim >= 1, "embed_dim must be positive");
  check(c.max_new_tokens >= 1, "max_new_tokens must be positive");
  check(c.temperature >= 0.0, "temperature must be non-negative");
  check(!c.out_dir.empty(), "out_dir must not be empty");
  auto p = parse_provider(c.provider);
  if (p.kind == "hash")
    parse_dim(p.arg);
  if (!c.gen_backend.empty() && c.gen_backend != "echo" &&
      !c.gen_backend.starts_with("http:"))
    throw ConfigError("gen_backend must be echo or http:<url>, got \"" +
                      c.gen_backend + "\"");
}

std::unique_ptr<embed::Provider> make_provider(const RunConfig &cfg) {
  auto p = parse_provider(cfg.provider);
  if (p.kind == "hash")
    return std::make_unique<embed::HashProvider>(parse_dim(p.arg));
  if (p.kind == "file") {
    if (!fs::exists(p.arg))
      throw ConfigError("provider: file not found: " + p.arg);
    return std::make_unique<embed::StoreProvider>(
        std::make_shared<embed::EmbeddingStore>(embed::EmbeddingStore::load(p.arg)));
  }
  return std::make_unique<embed::HttpProvider>(p.arg, cfg.embed_dim);
}

// --- commands --------------------------------------------------------------

namespace {

void require_file(const char *key, const fs::path &path) {
  if (path.empty())
    throw ConfigError(std::string(key) + " is not set");
  if (!fs::is_regular_file(path))
    throw ConfigError(std::string(key) + ": file not found: " + path.string());
}

void write_json(const fs::path &path, const ojson &j) {
  binio::write_file(path, j.dump(2) + "\n");
}

// Reports never carry directories, so they compare equal across output
// locations.
std::string base_name(const std::string &path) {
  return fs::path(path).filename().string();
}

std::string provider_label(const std::string &spec) {
  auto p = parse_provider(spec);
  if (p.kind == "file")
    return "file:" + base_name(p.arg);
  if (p.kind == "http")
    return "http";
  return spec;
}

std::vector<std::size_t> label_counts(const data::Dataset &records,
                                      int n_classes) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
  for (const auto &r : records)
    if (r.rt && *r.rt >= 0 && *r.rt < n_classes)
      ++counts[*r.rt];
  return counts;
}

ojson row_json(const elicit::SweepRow &r) {
  ojson j;
  j["encoding"] = embed::encoding_name(r.encoding);
  j["n"] = r.n;
  j["accuracy"] = r.accuracy;
  j["valid_accuracy"] = r.valid_accuracy;
  j["feedback_rounds"] = r.feedback_rounds;
  j["round_accuracies"] = r.round_accuracies;
  j["failed"] = r.failed;
  j["error"] = r.error;
  return j;
}

}  // namespace

ojson cmd_elicit(const RunConfig &cfg) {
  require_file("train", cfg.train);
  auto records = data::load_dataset(cfg.train);
  std::vector<data::Dropped> dropped;
  if (cfg.clean) {
    auto cleaned = data::clean_dataset(records);
    records = std::move(cleaned.kept);
    dropped = std::move(cleaned.dropped);
    if (!dropped.empty())
      spdlog::warn("elicit: dropped {} invalid records", dropped.size());
  }
  const auto provider = make_provider(cfg);
  spdlog::info("elicit: embedding {} records", records.size());
  const auto corpus = elicit::embed_corpus(records, *provider);

  elicit::SweepPolicy policy;
  policy.accuracy_floor = cfg.accuracy_floor;
  policy.elicit = cfg.elicit_options();
  policy.threads = cfg.threads;
  spdlog::info("elicit: sweeping {} encodings x n in [{}, {}]",
               cfg.encodings.size(), cfg.n_min, cfg.n_max);
  const auto sweep = elicit::run_sweep_embedded(corpus, cfg.encodings, cfg.n_min,
                                                cfg.n_max, cfg.seed, policy);
  const auto &best = sweep.best;
  spdlog::info("elicit: best encoding {} with n = {} (accuracy {:.4f})",
               embed::encoding_name(best.encoding), best.n, best.accuracy);

  const auto fb = elicit::self_feedback_embedded(corpus, best.encoding, best.n,
                                                 cfg.seed, policy.elicit);

  fs::create_directories(cfg.out_dir);
  auto labeled = records;
  for (std::size_t i = 0; i < labeled.size(); ++i)
    labeled[i].rt = fb.labels[i];
  data::save_dataset(cfg.out(kTrainLabeled), labeled);
  elicit::save_classifier(cfg.out(kClassifierFile), fb.model);
  cluster::save_model(cfg.out(kClusterFile), fb.clusters);

  const auto points = elicit::composed_points(corpus, best.encoding, cfg.normalize);
  const auto xy = cluster::project_2d(points, cfg.seed);
  ojson proj;
  proj["encoding"] = embed::encoding_name(best.encoding);
  proj["n"] = best.n;
  proj["points"] = ojson::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    ojson p;
    p["id"] = records[i].id;
    p["x"] = xy[i][0];
    p["y"] = xy[i][1];
    p["cluster"] = fb.cluster_labels[i];
    p["rt"] = fb.labels[i];
    proj["points"].push_back(std::move(p));
  }
  write_json(cfg.out(kProjection), proj);

  // Distribution check: the classifier should not leave a class empty when
  // its training labels used every class.
  const auto predicted = fb.model.predict(corpus.inputs);
  std::vector<std::size_t> train_counts(best.n, 0), pred_counts(best.n, 0);
  for (int l : fb.labels)
    ++train_counts[l];
  for (int l : predicted)
    ++pred_counts[l];
  std::size_t empty_classes = 0;
  for (int k = 0; k < best.n; ++k)
    empty_classes += pred_counts[k] == 0 && train_counts[k] > 0;
  if (empty_classes > 0)
    spdlog::warn("elicit: classifier leaves {} used classes empty", empty_classes);

  ojson report;
  report["seed"] = cfg.seed;
  report["provider"] = provider_label(cfg.provider);
  report["accuracy_floor"] = cfg.accuracy_floor;
  report["n_range"] = {cfg.n_min, cfg.n_max};
  report["records"] = records.size();
  report["dropped"] = ojson::array();
  for (const auto &d : dropped)
    report["dropped"].push_back({{"id", d.id}, {"reason", d.reason}});
  report["rows"] = ojson::array();
  for (const auto &r : sweep.rows)
    report["rows"].push_back(row_json(r));
  report["best"] = {{"encoding", embed::encoding_name(best.encoding)},
                    {"n", best.n},
                    {"accuracy", best.accuracy}};
  write_json(cfg.out(kSweepReport), report);

  ojson summary;
  summary["records"] = records.size();
  summary["dropped"] = dropped.size();
  summary["sweep_rows"] = sweep.rows.size();
  summary["failed_rows"] = std::count_if(
      sweep.rows.begin(), sweep.rows.end(), [](const auto &r) { return r.failed; });
  summary["best"] = report["best"];
  summary["accuracy"] = fb.accuracy;
  summary["valid_accuracy"] = fb.valid_accuracy;
  summary["rounds_used"] = fb.rounds_used;
  summary["round_accuracies"] = fb.round_accuracies;
  summary["label_counts"] = train_counts;
  summary["predicted_counts"] = pred_counts;
  summary["empty_classes"] = empty_classes;
  summary["model_fingerprint"] = curate::model_fingerprint(fb.model);
  return summary;
}

ojson cmd_curate(const RunConfig &cfg) {
  const auto model_path = cfg.model_path();
  require_file("model", model_path);
  if (cfg.valid.empty() && cfg.test.empty())
    throw ConfigError("curate needs valid or test to be set");
  if (!cfg.valid.empty())
    require_file("valid", cfg.valid);
  if (!cfg.test.empty())
    require_file("test", cfg.test);

  const auto model_bytes = binio::read_file(model_path);
  const auto model = elicit::parse_classifier(model_bytes, model_path.string());
  const auto fingerprint = curate::bytes_fingerprint(model_bytes);
  const auto provider = make_provider(cfg);
  fs::create_directories(cfg.out_dir);

  ojson summary;
  summary["model_fingerprint"] = fingerprint;
  summary["n_classes"] = model.n_classes;
  auto run = [&](const char *name, const std::string &path, const char *out) {
    if (path.empty())
      return;
    auto records = data::load_dataset(path);
    auto c = curate::annotate_dataset(records, *provider, model, base_name(path));
    c.model_fingerprint = fingerprint;
    curate::save_curated(cfg.out(out), c);
    ojson s;
    s["source"] = c.source;
    s["records"] = c.records.size();
    s["overwritten"] = c.overwritten;
    s["label_counts"] = label_counts(c.records, c.n_classes);
    summary[name] = std::move(s);
  };
  run("valid", cfg.valid, kValidCurated);
  run("test", cfg.test, kTestCurated);
  return summary;
}

ojson cmd_prompts(const RunConfig &cfg) {
  if (!cfg.templates.empty())
    require_file("templates", cfg.templates);
  const auto library = cfg.templates.empty()
                           ? prompt::TemplateLibrary::builtin()
                           : prompt::TemplateLibrary::load(cfg.templates);

  struct Job {
    const char *name;
    const char *in;
    const char *out;
    bool curated;
  };
  const Job jobs[] = {{"train", kTrainLabeled, kTrainPrompts, false},
                      {"valid", kValidCurated, kValidPrompts, true},
                      {"test", kTestCurated, kTestPrompts, true}};
  bool any = false;
  for (const auto &j : jobs)
    any = any || fs::is_regular_file(cfg.out(j.in));
  if (!any)
    throw ConfigError("prompts: no curated dataset found; expected " +
                      cfg.out(kTestCurated).string());

  const auto provider = make_provider(cfg);
  prompt::PromptOptions opts;
  opts.static_template = cfg.static_template;

  ojson summary;
  summary["static_template"] = cfg.static_template;
  summary["templates"] = cfg.templates.empty() ? "builtin" : base_name(cfg.templates);
  for (const auto &j : jobs) {
    const auto in = cfg.out(j.in);
    if (!fs::is_regular_file(in))
      continue;
    curate::CuratedDataset c = j.curated ? curate::load_curated(in)
                                         : curate::CuratedDataset{};
    if (!j.curated)
      c.records = data::load_dataset(in);
    const auto rows = prompt::build_prompted_dataset(c, library, *provider, opts);
    prompt::save_prompts(cfg.out(j.out), rows);

    // How often each template index was chosen, per task.
    ojson usage = ojson::object();
    for (auto task : data::kAllTasks) {
      if (!library.has(task))
        continue;
      std::vector<std::size_t> counts(library.templates(task).size(), 0);
      bool seen = false;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (c.records[i].task != task)
          continue;
        seen = true;
        const auto parsed = prompt::parse_prompt(rows[i].prompt);
        const auto &ts = library.templates(task);
        for (std::size_t t = 0; t < ts.size(); ++t)
          if (ts[t] == parsed->instruction)
            ++counts[t];
      }
      if (seen)
        usage[std::string(data::task_name(task))] = counts;
    }
    summary[j.name] = {{"rows", rows.size()}, {"template_usage", usage}};
  }
  return summary;
}

ojson cmd_generate(const RunConfig &cfg) {
  if (cfg.gen_backend.empty())
    throw ConfigError("gen_backend is not set (echo or http:<url>)");
  const auto backend = gen::make_backend(cfg.gen_backend);
  const auto in = cfg.out(kTestPrompts);
  require_file("prompts", in);
  const auto rows = prompt::load_prompts(in);

  std::vector<metrics::Prediction> preds;
  if (!rows.empty()) {
    gen::GenerationRequest req;
    req.max_new_tokens = cfg.max_new_tokens;
    req.temperature = cfg.temperature;
    for (const auto &r : rows)
      req.prompts.push_back(r.prompt);
    const auto outputs = backend->generate(req);
    if (outputs.size() != rows.size())
      throw BackendError("backend returned " + std::to_string(outputs.size()) +
                         " outputs for " + std::to_string(rows.size()) + " prompts");
    for (std::size_t i = 0; i < rows.size(); ++i)
      preds.push_back({rows[i].id, outputs[i]});
  }
  const auto out = cfg.predictions.empty() ? cfg.out(kTestPredictions)
                                           : fs::path(cfg.predictions);
  if (out.has_parent_path())
    fs::create_directories(out.parent_path());
  binio::write_file(out, metrics::serialize_predictions(preds));
  ojson summary;
  summary["backend"] = cfg.gen_backend == "echo" ? "echo" : "http";
  summary["predictions"] = preds.size();
  return summary;
}

ojson cmd_evaluate(const RunConfig &cfg) {
  const auto pred_path = cfg.predictions.empty() ? cfg.out(kTestPredictions)
                                                 : fs::path(cfg.predictions);
  const auto ref_path = cfg.references.empty() ? cfg.out(kTestCurated)
                                               : fs::path(cfg.references);
  require_file("predictions", pred_path);
  require_file("references", ref_path);
  if (!cfg.baseline.empty())
    require_file("baseline", cfg.baseline);

  const auto preds =
      metrics::parse_predictions(binio::read_file(pred_path), pred_path.string());
  const auto refs = data::load_dataset(ref_path);
  const auto rows = metrics::align(preds, refs);
  auto report = metrics::evaluate(rows);
  if (!cfg.baseline.empty())
    report.apply_baseline(metrics::MetricReport::from_json(
        binio::read_file(cfg.baseline), cfg.baseline));
  const auto text = report.to_json();
  fs::create_directories(cfg.out_dir);
  binio::write_file(cfg.out(kMetricReport), text);
  return ojson::parse(text);
}

ojson cmd_run_all(const RunConfig &cfg) {
  ojson report;
  ojson conf;
  conf["provider"] = provider_label(cfg.provider);
  conf["seed"] = cfg.seed;
  conf["n_range"] = {cfg.n_min, cfg.n_max};
  conf["encodings"] = ojson::array();
  for (auto e : cfg.encodings)
    conf["encodings"].push_back(embed::encoding_name(e));
  conf["accuracy_floor"] = cfg.accuracy_floor;
  conf["static_template"] = cfg.static_template;
  conf["train"] = base_name(cfg.train);
  conf["valid"] = base_name(cfg.valid);
  conf["test"] = base_name(cfg.test);
  report["config"] = conf;
  report["stages"] = ojson::object();

  auto stage = [&](const char *name, auto &&fn) {
    spdlog::info("run-all: stage {}", name);
    try {
      report["stages"][name] = fn(cfg);
    } catch (const Error &e) {
      throw StageError(name, e);
    } catch (const std::exception &e) {
      throw StageError(name, DataError(e.what()));
    }
  };
  stage("elicit", cmd_elicit);
  stage("curate", cmd_curate);
  stage("prompts", cmd_prompts);

  bool have_predictions = !cfg.predictions.empty() &&
                          fs::is_regular_file(cfg.predictions);
  if (!cfg.gen_backend.empty()) {
    stage("generate", cmd_generate);
    have_predictions = true;
  } else {
    report["stages"]["generate"] = "skipped";
  }
  if (have_predictions && !cfg.test.empty())
    stage("evaluate", cmd_evaluate);
  else
    report["stages"]["evaluate"] = "skipped";

  write_json(cfg.out(kPipelineReport), report);
  return report;
}

}  // namespace rxnelicit::pipeline
