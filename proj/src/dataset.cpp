#include "rxnelicit/dataset.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "rxnelicit/binary_io.hpp"
#include "rxnelicit/error.hpp"
#include "rxnelicit/smiles.hpp"
#include "rxnelicit/util.hpp"

namespace rxnelicit::data {

using ojson = nlohmann::ordered_json;

std::string_view task_name(TaskType t) {
  switch (t) {
  case TaskType::kForward:
    return "forward";
  case TaskType::kRetrosynthesis:
    return "retrosynthesis";
  case TaskType::kReagent:
    return "reagent";
  }
  return "?";
}

std::optional<TaskType> parse_task(std::string_view name) {
  for (auto t : kAllTasks)
    if (task_name(t) == name)
      return t;
  return std::nullopt;
}

namespace {

std::string required_string(const nlohmann::json &obj, const char *key,
                            const std::string &where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw DataError(where + ": missing field \"" + key + "\"");
  if (!it->is_string())
    throw DataError(where + ": field \"" + key + "\" is not a string");
  return it->get<std::string>();
}

}  // namespace

Dataset parse_dataset(std::string_view text, const std::string &source) {
  Dataset records;
  std::set<std::string> seen;
  std::size_t line_index = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos)
      end = text.size();
    const auto line = trim(text.substr(start, end - start));
    const std::string where =
        source + ": line " + std::to_string(line_index + 1);
    start = end + 1;

    if (!line.empty()) {
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error &e) {
        throw DataError(where + ": malformed record: " + e.what());
      }
      if (!obj.is_object())
        throw DataError(where + ": record is not an object");

      ReactionRecord r;
      const auto task = required_string(obj, "task", where);
      auto parsed = parse_task(task);
      if (!parsed)
        throw DataError(where + ": unknown task \"" + task + "\"");
      r.task = *parsed;
      r.instruction = required_string(obj, "instruction", where);
      r.input = std::string(trim(required_string(obj, "input", where)));
      r.output = std::string(trim(required_string(obj, "output", where)));
      if (r.input.empty() || r.output.empty())
        throw DataError(where + ": input and output must be non-empty");

      if (auto it = obj.find("id"); it != obj.end() && !it->is_null()) {
        if (!it->is_string())
          throw DataError(where + ": field \"id\" is not a string");
        r.id = it->get<std::string>();
      } else {
        r.id = std::to_string(line_index);
      }
      if (auto it = obj.find("rt"); it != obj.end() && !it->is_null()) {
        if (!it->is_number_integer() || it->get<long long>() < 0)
          throw DataError(where + ": field \"rt\" must be a non-negative integer");
        r.rt = it->get<int>();
      }
      if (!seen.insert(r.id).second)
        throw DataError(where + ": duplicate id \"" + r.id + "\"");
      records.push_back(std::move(r));
    }
    ++line_index;
  }
  return records;
}

Dataset load_dataset(const std::filesystem::path &path) {
  return parse_dataset(binio::read_file(path), path.string());
}

std::string serialize_dataset(const Dataset &records) {
  std::string out;
  for (const auto &r : records) {
    ojson obj;
    obj["id"] = r.id;
    obj["task"] = task_name(r.task);
    obj["instruction"] = r.instruction;
    obj["input"] = r.input;
    obj["output"] = r.output;
    if (r.rt)
      obj["rt"] = *r.rt;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const std::filesystem::path &path, const Dataset &records) {
  binio::write_file(path, serialize_dataset(records));
}

void check_labels(const Dataset &records, int n_classes) {
  for (const auto &r : records) {
    if (!r.rt)
      throw DataError("record " + r.id + " has no rt label");
    if (*r.rt < 0 || *r.rt >= n_classes)
      throw DataError("record " + r.id + " has rt " + std::to_string(*r.rt) +
                      " outside [0, " + std::to_string(n_classes) + ")");
  }
}

CleanResult clean_dataset(const Dataset &records) {
  CleanResult result;
  for (const auto &r : records) {
    std::optional<std::string> reason;
    if (auto v = smiles::validate(r.input); !v)
      reason = "input compound " + std::to_string(v.compound) + ": " + v.reason;
    else if (auto w = smiles::validate(r.output); !w)
      reason = "output compound " + std::to_string(w.compound) + ": " + w.reason;
    if (reason)
      result.dropped.push_back({r.id, *reason});
    else
      result.kept.push_back(r);
  }
  return result;
}

DatasetSplit split_98_1_1(const Dataset &records, std::uint64_t seed) {
  const std::size_t n = records.size();
  if (n < kMinSplitSize)
    throw DataError("98:1:1 split needs at least " +
                    std::to_string(kMinSplitSize) + " records, got " +
                    std::to_string(n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i)
    order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t small = n / 100;
  DatasetSplit split;
  split.provenance = "uniform shuffle seed=" + std::to_string(seed) +
                     " sizes=" + std::to_string(n - 2 * small) + "/" +
                     std::to_string(small) + "/" + std::to_string(small);
  for (std::size_t i = 0; i < n; ++i) {
    const auto &r = records[order[i]];
    if (i < small)
      split.valid.push_back(r);
    else if (i < 2 * small)
      split.test.push_back(r);
    else
      split.train.push_back(r);
  }
  return split;
}

}  // namespace rxnelicit::data
