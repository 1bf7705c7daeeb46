#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rxnelicit/clustering.hpp"
#include "rxnelicit/curation.hpp"
#include "rxnelicit/elicitation.hpp"
#include "rxnelicit/metrics.hpp"
#include "rxnelicit/pipeline.hpp"
#include "rxnelicit/prompting.hpp"
#include "rxnelicit/smiles.hpp"

namespace py = pybind11;
using namespace rxnelicit;

namespace {

embed::EncodingMethod encoding_arg(const std::string &name) {
  auto m = embed::parse_encoding(name);
  if (!m)
    throw ConfigError("unknown encoding \"" + name + "\"");
  return *m;
}

data::TaskType task_arg(const std::string &name) {
  auto t = data::parse_task(name);
  if (!t)
    throw ConfigError("unknown task \"" + name + "\"");
  return *t;
}

// JSON crosses the boundary as text; the Python side decodes it.
std::string run_command(const std::string &name, const std::string &config_json) {
  using Cmd = nlohmann::ordered_json (*)(const pipeline::RunConfig &);
  static const std::map<std::string, Cmd> commands = {
      {"elicit", pipeline::cmd_elicit},     {"curate", pipeline::cmd_curate},
      {"prompts", pipeline::cmd_prompts},   {"generate", pipeline::cmd_generate},
      {"evaluate", pipeline::cmd_evaluate}, {"run-all", pipeline::cmd_run_all},
  };
  auto it = commands.find(name);
  if (it == commands.end())
    throw ConfigError("unknown command \"" + name + "\"");
  nlohmann::json flags;
  try {
    flags = nlohmann::json::parse(config_json);
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const auto cfg = pipeline::resolve_config(std::nullopt, flags);
  py::gil_scoped_release release;
  return it->second(cfg).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Reaction-type elicitation pipeline (C++ core)";

  // Translators registered later are tried first, so the subclasses win.
  auto &base = py::register_exception<Error>(m, "RxnError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<BackendError>(m, "BackendError", base.ptr());

  // smiles
  m.def("canonicalize", [](const std::string &s) { return smiles::canonicalize(s); });
  m.def("validate", [](const std::string &s) {
    auto v = smiles::validate(s);
    return py::make_tuple(v.valid, v.reason);
  });
  m.def("regex_tokens", &smiles::regex_tokens);

  // embedding and clustering
  m.def("hash_embed", [](const std::string &text, std::size_t dim) {
    return embed::hash_embed(text, dim);
  });
  m.def("compose", [](const std::string &encoding, const embed::Vector &in,
                      const embed::Vector &out) {
    return embed::compose(encoding_arg(encoding), in, out);
  });
  m.def(
      "kmeans",
      [](const std::vector<embed::Vector> &points, int k, std::uint64_t seed,
         int restarts) {
        cluster::KMeansOptions opts;
        opts.restarts = restarts;
        auto model = cluster::kmeans_fit(points, k, seed, opts);
        py::dict d;
        d["labels"] = model.labels;
        d["centroids"] = model.centroids;
        d["inertia"] = model.inertia;
        return d;
      },
      py::arg("points"), py::arg("k"), py::arg("seed") = 0,
      py::arg("restarts") = 1);

  // elicitation
  m.def(
      "train_rt_classifier",
      [](const std::vector<embed::Vector> &x, const std::vector<int> &y,
         int n_classes, std::uint64_t seed, int epochs, double lr) {
        elicit::ClassifierOptions opts;
        opts.epochs = epochs;
        opts.lr = lr;
        auto model = elicit::train_rt_classifier(x, y, n_classes, seed, opts);
        return py::make_tuple(model.predict(x), model.meta.train_accuracy);
      },
      py::arg("inputs"), py::arg("labels"), py::arg("n_classes"),
      py::arg("seed") = 0, py::arg("epochs") = 30, py::arg("lr") = 0.05,
      "Returns (predictions on the inputs, training accuracy).");

  // curation and prompting
  m.def("render_rt_prompt", [](const std::string &task, int n, const std::string &in) {
    return curate::render_rt_prompt(task_arg(task), n, in);
  });
  m.def("adaptability", [](const embed::Vector &a, const embed::Vector &b) {
    return prompt::adaptability(a, b);
  });
  m.def("nearest_template",
        [](const embed::Vector &input, const std::vector<embed::Vector> &ts) {
          return prompt::nearest(input, ts);
        });
  m.def("fuse", [](const std::string &instruction, int rt, const std::string &in) {
    return prompt::fuse(instruction, rt, in).rendered;
  });
  m.def("parse_prompt", [](const std::string &rendered) -> py::object {
    auto p = prompt::parse_prompt(rendered);
    if (!p)
      return py::none();
    return py::make_tuple(p->instruction, p->rt, p->input);
  });
  m.def("builtin_templates", [] {
    std::map<std::string, std::vector<std::string>> out;
    const auto &lib = prompt::TemplateLibrary::builtin();
    for (auto t : data::kAllTasks)
      out[std::string(data::task_name(t))] = lib.templates(t);
    return out;
  });

  // metrics
  using Texts = std::vector<std::string>;
  m.def("bleu", [](const Texts &p, const Texts &r) { return metrics::bleu(p, r); });
  m.def("meteor", [](const Texts &p, const Texts &r) { return metrics::meteor(p, r); });
  m.def("exact_match",
        [](const Texts &p, const Texts &r) { return metrics::exact_match(p, r); });
  m.def("similarity",
        [](const Texts &p, const Texts &r) { return metrics::similarity(p, r); });
  m.def("validity", [](const Texts &p) { return metrics::validity(p); });
  m.def("improvement", &metrics::improvement);

  m.def("_run_command", &run_command);
}
