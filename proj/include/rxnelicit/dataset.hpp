#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Reaction records, the line-delimited dataset format, cleaning and the
// 98:1:1 inner split.
namespace rxnelicit::data {

enum class TaskType {
  kForward,
  kRetrosynthesis,
  kReagent,
};

inline constexpr std::array<TaskType, 3> kAllTasks = {
    TaskType::kForward, TaskType::kRetrosynthesis, TaskType::kReagent};

std::string_view task_name(TaskType t);
std::optional<TaskType> parse_task(std::string_view name);

struct ReactionRecord {
  std::string id;
  TaskType task = TaskType::kForward;
  std::string instruction;
  std::string input;   // '.'-joined SMILES
  std::string output;  // '.'-joined SMILES
  std::optional<int> rt;

  bool operator==(const ReactionRecord &) const = default;
};

using Dataset = std::vector<ReactionRecord>;

struct DatasetSplit {
  Dataset train;
  Dataset valid;
  Dataset test;
  std::string provenance;
};

// One JSON object per line with keys task, instruction, input, output and
// optional rt / id. Missing ids become the zero-based line index; blank
// lines are skipped. Throws DataError naming the 1-based line.
Dataset parse_dataset(std::string_view text, const std::string &source);
Dataset load_dataset(const std::filesystem::path &path);

std::string serialize_dataset(const Dataset &records);
void save_dataset(const std::filesystem::path &path, const Dataset &records);

// Throws DataError unless every rt is present and in [0, n_classes).
void check_labels(const Dataset &records, int n_classes);

struct Dropped {
  std::string id;
  std::string reason;

  bool operator==(const Dropped &) const = default;
};

struct CleanResult {
  Dataset kept;
  std::vector<Dropped> dropped;
};

// Keeps records whose input and output compounds all pass
// smiles::validate.
CleanResult clean_dataset(const Dataset &records);

inline constexpr std::size_t kMinSplitSize = 100;

// Seeded uniform shuffle, then valid and test get floor(n / 100) records
// each and train keeps the rest.
DatasetSplit split_98_1_1(const Dataset &records, std::uint64_t seed);

}  // namespace rxnelicit::data
