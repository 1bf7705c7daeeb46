#include "rxnelicit/prompting.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "rxnelicit/binary_io.hpp"
#include "rxnelicit/error.hpp"
#include "rxnelicit/util.hpp"

namespace rxnelicit::prompt {

namespace detail {
extern const std::string_view kBuiltinTemplates;
}

namespace {

void check_templates(data::TaskType task, const std::vector<std::string> &ts,
                     const std::string &source) {
  const std::string where =
      source + ": task \"" + std::string(data::task_name(task)) + "\"";
  if (ts.empty())
    throw DataError(where + " has no templates");
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto &t = ts[i];
    const std::string at = where + " template " + std::to_string(i);
    if (trim(t).empty())
      throw DataError(at + " is empty");
    if (t.find('\n') != std::string::npos)
      throw DataError(at + " contains a newline");
    if (t.find("Reaction type:") != std::string::npos)
      throw DataError(at + " contains the reserved \"Reaction type:\" marker");
    if (!seen.insert(t).second)
      throw DataError(at + " duplicates an earlier template");
  }
}

}  // namespace

TemplateLibrary TemplateLibrary::parse(std::string_view json,
                                       const std::string &source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error &e) {
    throw DataError(source + ": " + e.what());
  }
  if (!doc.is_object())
    throw DataError(source + ": template library must be an object");
  TemplateLibrary lib;
  for (const auto &[name, list] : doc.items()) {
    auto task = data::parse_task(name);
    if (!task)
      throw DataError(source + ": unknown task \"" + name + "\"");
    if (!list.is_array())
      throw DataError(source + ": task \"" + name + "\" must map to a list");
    std::vector<std::string> ts;
    for (const auto &t : list) {
      if (!t.is_string())
        throw DataError(source + ": task \"" + name +
                        "\" has a non-string template");
      ts.push_back(t.get<std::string>());
    }
    lib.set(*task, std::move(ts));
  }
  if (lib.by_task_.empty())
    throw DataError(source + ": template library is empty");
  return lib;
}

TemplateLibrary TemplateLibrary::load(const std::filesystem::path &path) {
  return parse(binio::read_file(path), path.string());
}

const TemplateLibrary &TemplateLibrary::builtin() {
  static const TemplateLibrary lib =
      parse(detail::kBuiltinTemplates, "builtin templates");
  return lib;
}

const std::vector<std::string> &TemplateLibrary::templates(
    data::TaskType task) const {
  auto it = by_task_.find(task);
  if (it == by_task_.end())
    throw DataError("no templates for task \"" +
                    std::string(data::task_name(task)) + "\"");
  return it->second;
}

bool TemplateLibrary::has(data::TaskType task) const {
  return by_task_.contains(task);
}

std::size_t TemplateLibrary::size() const {
  std::size_t n = 0;
  for (const auto &[_, ts] : by_task_)
    n += ts.size();
  return n;
}

void TemplateLibrary::set(data::TaskType task, std::vector<std::string> ts) {
  check_templates(task, ts, "template library");
  by_task_[task] = std::move(ts);
}

std::string TemplateLibrary::to_json() const {
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  for (auto task : data::kAllTasks)
    if (auto it = by_task_.find(task); it != by_task_.end())
      doc[std::string(data::task_name(task))] = it->second;
  return doc.dump(2) + "\n";
}

double adaptability(std::span<const double> input,
                    std::span<const double> instruction) {
  if (input.size() != instruction.size())
    throw DataError("adaptability: dim mismatch (" +
                    std::to_string(input.size()) + " vs " +
                    std::to_string(instruction.size()) + ")");
  double s = 0.0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    const double d = input[i] - instruction[i];
    s += d * d;
  }
  return -std::sqrt(s);
}

std::size_t nearest(std::span<const double> input,
                    std::span<const embed::Vector> candidates) {
  if (candidates.empty())
    throw DataError("no candidate templates");
  std::size_t best = 0;
  double best_score = adaptability(input, candidates[0]);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double a = adaptability(input, candidates[i]);
    if (a > best_score) {
      best = i;
      best_score = a;
    }
  }
  return best;
}

InstructionSelector::InstructionSelector(const TemplateLibrary &library,
                                         const embed::Provider &provider)
    : library_(library) {
  for (auto task : data::kAllTasks) {
    if (!library.has(task))
      continue;
    const auto &ts = library.templates(task);
    std::vector<embed::EmbedItem> items;
    for (std::size_t i = 0; i < ts.size(); ++i)
      items.push_back({embed::template_key(task, i), ts[i]});
    auto vecs = provider.embed(items);
    if (vecs.size() != ts.size())
      throw BackendError("provider returned the wrong number of vectors");
    vectors_[task] = std::move(vecs);
  }
}

const std::vector<embed::Vector> &InstructionSelector::template_vectors(
    data::TaskType task) const {
  auto it = vectors_.find(task);
  if (it == vectors_.end())
    throw DataError("no templates for task \"" +
                    std::string(data::task_name(task)) + "\"");
  return it->second;
}

Selection InstructionSelector::select(std::span<const double> input_vec,
                                      data::TaskType task) const {
  const auto &vecs = template_vectors(task);
  Selection s;
  s.index = nearest(input_vec, vecs);
  s.instruction = library_.templates(task)[s.index];
  s.adaptability = adaptability(input_vec, vecs[s.index]);
  return s;
}

Selection select_instruction(std::span<const double> input_vec,
                             data::TaskType task, const TemplateLibrary &library,
                             const embed::Provider &provider) {
  TemplateLibrary one;
  one.set(task, library.templates(task));
  return InstructionSelector(one, provider).select(input_vec, task);
}

EnhancedPrompt fuse(std::string_view instruction, int rt,
                    std::string_view input) {
  EnhancedPrompt p;
  p.instruction = std::string(instruction);
  p.rt = rt;
  p.rendered.reserve(instruction.size() + input.size() + 32);
  p.rendered += instruction;
  p.rendered += kRtMarker;
  p.rendered += std::to_string(rt);
  p.rendered += kInputMarker;
  p.rendered += input;
  return p;
}

std::optional<ParsedPrompt> parse_prompt(std::string_view rendered) {
  const auto rt_at = rendered.find(kRtMarker);
  if (rt_at == std::string_view::npos)
    return std::nullopt;
  const auto digits_at = rt_at + kRtMarker.size();
  const auto in_at = rendered.find(kInputMarker, digits_at);
  if (in_at == std::string_view::npos)
    return std::nullopt;
  ParsedPrompt p;
  const auto digits = rendered.substr(digits_at, in_at - digits_at);
  auto [end, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), p.rt);
  if (digits.empty() || ec != std::errc{} || end != digits.data() + digits.size() ||
      p.rt < 0)
    return std::nullopt;
  p.instruction = std::string(rendered.substr(0, rt_at));
  p.input = std::string(rendered.substr(in_at + kInputMarker.size()));
  return p;
}

std::vector<PromptRow> build_prompted_dataset(
    const curate::CuratedDataset &curated, const TemplateLibrary &library,
    const embed::Provider &provider, PromptOptions opts) {
  const auto &records = curated.records;
  std::vector<PromptRow> rows;
  if (records.empty())
    return rows;
  for (const auto &r : records)
    if (!r.rt)
      throw DataError("record \"" + r.id + "\" has no rt");

  std::vector<std::size_t> chosen(records.size(), 0);
  if (!opts.static_template) {
    InstructionSelector selector(library, provider);
    std::vector<embed::EmbedItem> items;
    items.reserve(records.size());
    for (const auto &r : records)
      items.push_back({embed::embedding_key(r.id, "input"), r.input});
    const auto vecs = provider.embed(items);
    if (vecs.size() != records.size())
      throw BackendError("provider returned the wrong number of vectors");
    for (std::size_t i = 0; i < records.size(); ++i)
      chosen[i] = nearest(vecs[i], selector.template_vectors(records[i].task));
  }

  rows.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto &r = records[i];
    const auto &instruction = library.templates(r.task)[chosen[i]];
    rows.push_back({r.id, fuse(instruction, *r.rt, r.input).rendered, r.output});
  }
  return rows;
}

std::string serialize_prompts(std::span<const PromptRow> rows) {
  std::string out;
  for (const auto &r : rows) {
    nlohmann::ordered_json obj;
    obj["id"] = r.id;
    obj["prompt"] = r.prompt;
    obj["reference"] = r.reference;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::vector<PromptRow> parse_prompts(std::string_view text,
                                     const std::string &source) {
  std::vector<PromptRow> rows;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty())
      continue;
    const std::string where = source + ": line " + std::to_string(line_no);
    try {
      auto obj = nlohmann::json::parse(line);
      rows.push_back({obj.at("id").get<std::string>(),
                      obj.at("prompt").get<std::string>(),
                      obj.at("reference").get<std::string>()});
    } catch (const nlohmann::json::exception &e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return rows;
}

void save_prompts(const std::filesystem::path &path,
                  std::span<const PromptRow> rows) {
  binio::write_file(path, serialize_prompts(rows));
}

std::vector<PromptRow> load_prompts(const std::filesystem::path &path) {
  return parse_prompts(binio::read_file(path), path.string());
}

}  // namespace rxnelicit::prompt
