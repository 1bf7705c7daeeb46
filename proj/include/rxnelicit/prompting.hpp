#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rxnelicit/curation.hpp"
#include "rxnelicit/dataset.hpp"
#include "rxnelicit/embedding.hpp"

// Instruction templates, nearest-template selection and prompt fusion.
namespace rxnelicit::prompt {

class TemplateLibrary {
 public:
  TemplateLibrary() = default;

  // Object keyed by task name, each value a list of strings. Unknown task
  // names, empty lists, empty or duplicate templates and templates that
  // contain a newline or the "Reaction type:" marker are rejected.
  static TemplateLibrary parse(std::string_view json, const std::string &source);
  static TemplateLibrary load(const std::filesystem::path &path);
  // The shipped library (12 templates per task), compiled in.
  static const TemplateLibrary &builtin();

  const std::vector<std::string> &templates(data::TaskType task) const;
  bool has(data::TaskType task) const;
  std::size_t size() const;

  void set(data::TaskType task, std::vector<std::string> templates);
  std::string to_json() const;

 private:
  std::map<data::TaskType, std::vector<std::string>> by_task_;
};

// -||a - b||, 0 iff equal. Throws DataError on a dim mismatch.
double adaptability(std::span<const double> input,
                    std::span<const double> instruction);

struct Selection {
  std::size_t index = 0;
  std::string instruction;
  double adaptability = 0.0;
};

// Highest adaptability over the candidate vectors, lowest index on ties.
std::size_t nearest(std::span<const double> input,
                    std::span<const embed::Vector> candidates);

// Embeds each task's templates once (keys "template:{task}:{i}") and
// answers selections against the cache.
class InstructionSelector {
 public:
  InstructionSelector(const TemplateLibrary &library,
                      const embed::Provider &provider);

  Selection select(std::span<const double> input_vec,
                   data::TaskType task) const;
  const std::vector<embed::Vector> &template_vectors(data::TaskType task) const;

 private:
  const TemplateLibrary &library_;
  std::map<data::TaskType, std::vector<embed::Vector>> vectors_;
};

Selection select_instruction(std::span<const double> input_vec,
                             data::TaskType task, const TemplateLibrary &library,
                             const embed::Provider &provider);

inline constexpr std::string_view kRtMarker = "\nReaction type: ";
inline constexpr std::string_view kInputMarker = "\ninput: ";

struct EnhancedPrompt {
  std::string instruction;
  int rt = 0;
  std::string rendered;
};

// instruction + "\nReaction type: " + rt + "\ninput: " + input
EnhancedPrompt fuse(std::string_view instruction, int rt, std::string_view input);

struct ParsedPrompt {
  std::string instruction;
  int rt = 0;
  std::string input;
  bool operator==(const ParsedPrompt &) const = default;
};

// Inverse of fuse for instructions without the markers.
std::optional<ParsedPrompt> parse_prompt(std::string_view rendered);

struct PromptRow {
  std::string id;
  std::string prompt;
  std::string reference;
  bool operator==(const PromptRow &) const = default;
};

struct PromptOptions {
  bool static_template = false;  // always template 0 (RT-only ablation)
};

std::vector<PromptRow> build_prompted_dataset(
    const curate::CuratedDataset &curated, const TemplateLibrary &library,
    const embed::Provider &provider, PromptOptions opts = {});

std::string serialize_prompts(std::span<const PromptRow> rows);
std::vector<PromptRow> parse_prompts(std::string_view text,
                                     const std::string &source);
void save_prompts(const std::filesystem::path &path,
                  std::span<const PromptRow> rows);
std::vector<PromptRow> load_prompts(const std::filesystem::path &path);

}  // namespace rxnelicit::prompt
