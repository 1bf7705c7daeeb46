// rxnelicit command-line entry point. Every RunConfig key is also a flag
// (underscores become hyphens); flags override the config file, which
// overrides RXN_EMBED_URL / RXN_GEN_URL.

#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "rxnelicit/pipeline.hpp"

namespace {

using namespace rxnelicit;
using nlohmann::json;

const char *kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::kConfig:
      return "config";
    case ErrorKind::kData:
      return "data";
    case ErrorKind::kBackend:
      return "backend";
  }
  return "unknown";
}

int report_error(ErrorKind kind, const std::string &message,
                 const std::string &stage = {}) {
  json j;
  j["error"] = kind_name(kind);
  j["exit_code"] = static_cast<int>(kind);
  if (!stage.empty())
    j["stage"] = stage;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
  return static_cast<int>(kind);
}

// Flag storage for one subcommand. Values stay as text until the type of
// the matching config key is known.
struct FlagSet {
  std::optional<std::string> config;
  std::map<std::string, std::string> text;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::Option *> options;
  bool quiet = false;
  bool verbose = false;
};

void add_config_flags(CLI::App &sub, FlagSet &fs) {
  sub.add_option("-c,--config", fs.config, "Flat JSON config file");
  sub.add_flag("-q,--quiet", fs.quiet, "Only log warnings and errors");
  sub.add_flag("-v,--verbose", fs.verbose, "Log debug detail");
  const auto defaults = pipeline::to_json(pipeline::RunConfig{});
  for (const auto &[key, value] : defaults.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (value.is_boolean()) {
      std::string name = flag + ",!--no-" + flag.substr(2);
      fs.options[key] =
          sub.add_flag(name, fs.flags[key], "default " + value.dump())
              ->default_str("");
    } else {
      const char *type = value.is_number_integer() ? "INT"
                         : value.is_number()       ? "FLOAT"
                         : value.is_array()        ? "LIST"
                                                   : "TEXT";
      fs.options[key] =
          sub.add_option(flag, fs.text[key], "default " + value.dump())
              ->type_name(type);
    }
  }
}

json flags_to_json(const FlagSet &fs) {
  const auto defaults = pipeline::to_json(pipeline::RunConfig{});
  json out = json::object();
  for (const auto &[key, opt] : fs.options) {
    if (opt->count() == 0)
      continue;
    const auto &proto = defaults.at(key);
    const std::string flag = opt->get_name();
    if (proto.is_boolean()) {
      out[key] = fs.flags.at(key);
      continue;
    }
    const std::string &s = fs.text.at(key);
    try {
      if (proto.is_string() || proto.is_array()) {
        out[key] = s;
      } else if (proto.is_number_float()) {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size())
          throw std::invalid_argument(s);
        out[key] = v;
      } else {
        std::size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used != s.size())
          throw std::invalid_argument(s);
        out[key] = v;
      }
    } catch (const std::logic_error &) {
      throw ConfigError(flag + ": cannot parse \"" + s + "\"");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char **argv) {
  auto logger = spdlog::stderr_color_mt("rxnelicit");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);

  CLI::App app{"Reaction-type elicitation, curation and prompting pipeline"};
  app.require_subcommand(1);

  using Cmd = nlohmann::ordered_json (*)(const pipeline::RunConfig &);
  const std::pair<const char *, Cmd> commands[] = {
      {"elicit", pipeline::cmd_elicit},     {"curate", pipeline::cmd_curate},
      {"prompts", pipeline::cmd_prompts},   {"generate", pipeline::cmd_generate},
      {"evaluate", pipeline::cmd_evaluate}, {"run-all", pipeline::cmd_run_all},
  };
  const char *help[] = {
      "Sweep encodings and cluster counts, then train the RT classifier",
      "Annotate valid/test sets with the frozen RT classifier",
      "Build enhanced prompts from the curated datasets",
      "Generate predictions for the test prompts",
      "Score predictions against references",
      "Run every stage in order and write pipeline_report.json",
  };
  std::map<std::string, FlagSet> flag_sets;
  std::map<std::string, CLI::App *> subs;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    const std::string name = commands[i].first;
    subs[name] = app.add_subcommand(name, help[i]);
    add_config_flags(*subs[name], flag_sets[name]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0)
      return app.exit(e);
    return report_error(ErrorKind::kConfig, e.what());
  }

  for (const auto &[name, fn] : commands) {
    if (!subs[name]->parsed())
      continue;
    const auto &fs = flag_sets[name];
    spdlog::set_level(fs.quiet     ? spdlog::level::warn
                      : fs.verbose ? spdlog::level::debug
                                   : spdlog::level::info);
    try {
      std::optional<std::filesystem::path> file;
      if (fs.config)
        file = *fs.config;
      const auto cfg = pipeline::resolve_config(file, flags_to_json(fs));
      const auto summary = fn(cfg);
      std::cout << summary.dump(2) << std::endl;
      return 0;
    } catch (const pipeline::StageError &e) {
      return report_error(e.kind(), e.what(), e.stage());
    } catch (const Error &e) {
      return report_error(e.kind(), e.what());
    } catch (const std::exception &e) {
      return report_error(ErrorKind::kData, e.what());
    }
  }
  return report_error(ErrorKind::kConfig, "no subcommand given");
}
