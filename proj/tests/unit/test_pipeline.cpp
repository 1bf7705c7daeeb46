#include <doctest.h>

#include <filesystem>

#include "rxnelicit/binary_io.hpp"
#include "rxnelicit/curation.hpp"
#include "rxnelicit/metrics.hpp"
#include "rxnelicit/pipeline.hpp"
#include "rxnelicit/prompting.hpp"
#include "toy_corpus.hpp"

using namespace rxnelicit;
using namespace rxnelicit::pipeline;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string &f) const { return (path / f).string(); }
};

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars](const char *name) -> std::optional<std::string> {
    auto it = vars.find(name);
    if (it == vars.end())
      return std::nullopt;
    return it->second;
  };
}

RunConfig toy_config(const TempDir &dir, std::size_t n = 300) {
  data::save_dataset(dir / "train.jsonl", toy::corpus(n, 1));
  data::save_dataset(dir / "valid.jsonl", toy::corpus(20, 2));
  data::save_dataset(dir / "test.jsonl", toy::corpus(20, 3));
  RunConfig c;
  c.train = dir / "train.jsonl";
  c.valid = dir / "valid.jsonl";
  c.test = dir / "test.jsonl";
  c.out_dir = dir / "out";
  c.n_min = 3;
  c.n_max = 4;
  c.encodings = {embed::EncodingMethod::kConcat};
  c.kmeans_restarts = 2;
  c.lr = 2.0;
  return c;
}

std::size_t count_of(const std::string &hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto at = hay.find(needle); at != std::string::npos;
       at = hay.find(needle, at + 1))
    ++n;
  return n;
}

}  // namespace

TEST_CASE("config precedence: flags over file over env") {
  TempDir dir("rxn_cfg");
  binio::write_file(dir / "c.json",
                    R"({"provider": "hash:32", "seed": 5, "gen_backend": "echo"})");
  auto env = env_of({{"RXN_EMBED_URL", "http://e:1"}, {"RXN_GEN_URL", "http://g:2"}});

  auto only_env = resolve_config(std::nullopt, json(), env);
  CHECK(only_env.provider == "http:http://e:1");
  CHECK(only_env.gen_backend == "http:http://g:2");

  auto with_file = resolve_config(fs::path(dir / "c.json"), json(), env);
  CHECK(with_file.provider == "hash:32");
  CHECK(with_file.gen_backend == "echo");
  CHECK(with_file.seed == 5);

  auto with_flags = resolve_config(fs::path(dir / "c.json"),
                                   json{{"seed", 9}, {"encodings", "concat,product"}},
                                   env);
  CHECK(with_flags.seed == 9);
  CHECK(with_flags.provider == "hash:32");
  CHECK(with_flags.encodings ==
        std::vector{embed::EncodingMethod::kConcat,
                    embed::EncodingMethod::kElementwiseProduct});

  RunConfig round;
  apply_json(round, to_json(with_flags), "rt");
  CHECK(to_json(round) == to_json(with_flags));
}

TEST_CASE("config errors") {
  auto none = env_of({});
  CHECK_THROWS_AS(resolve_config(fs::path("/no/such.json"), json(), none),
                  ConfigError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, json{{"colour", 1}}, none),
                  ConfigError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, json{{"seed", "x"}}, none),
                  ConfigError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, json{{"seed", -1}}, none),
                  ConfigError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, json{{"n_min", 1}}, none),
                  ConfigError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, json{{"n_max", 65}}, none),
                  ConfigError);
  CHECK_THROWS_AS(
      resolve_config(std::nullopt, json{{"n_min", 6}, {"n_max", 5}}, none),
      ConfigError);
  CHECK_NOTHROW(
      resolve_config(std::nullopt, json{{"n_range", {2, 64}}}, none));
  CHECK_THROWS_AS(resolve_config(std::nullopt, json{{"encodings", "dot"}}, none),
                  ConfigError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, json{{"provider", "hash:1"}}, none),
                  ConfigError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, json{{"provider", "mem:3"}}, none),
                  ConfigError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, json{{"gen_backend", "gpt"}}, none),
                  ConfigError);
}

TEST_CASE("providers") {
  RunConfig c;
  c.provider = "hash:16";
  CHECK(make_provider(c)->dim() == 16);
  TempDir dir("rxn_prov");
  embed::EmbeddingStore store(3);
  store.put("a:input", embed::Vector{1, 2, 3});
  store.save(dir / "s.embs");
  c.provider = "file:" + (dir / "s.embs");
  CHECK(make_provider(c)->dim() == 3);
  c.provider = "file:" + (dir / "missing.embs");
  CHECK_THROWS_AS(make_provider(c), ConfigError);
  c.provider = "http:http://127.0.0.1:9";
  c.embed_dim = 7;
  CHECK(make_provider(c)->dim() == 7);
}

TEST_CASE("elicit") {
  TempDir dir("rxn_elicit");
  auto cfg = toy_config(dir);

  auto missing = cfg;
  missing.train = dir / "nope.jsonl";
  try {
    cmd_elicit(missing);
    FAIL("expected a config error");
  } catch (const ConfigError &e) {
    CHECK(e.exit_code() == 2);
    CHECK(std::string(e.what()).find("nope.jsonl") != std::string::npos);
  }

  auto one = cfg;
  one.n_min = one.n_max = 5;
  auto s = cmd_elicit(one);
  CHECK(s["sweep_rows"] == 1);
  auto report = json::parse(binio::read_file(cfg.out(kSweepReport)));
  CHECK(report["rows"].size() == 1);
  CHECK(report["best"]["n"] == 5);
  for (const char *f : {kClassifierFile, kClusterFile, kTrainLabeled, kProjection})
    CHECK(fs::exists(cfg.out(f)));
  const auto labeled = data::load_dataset(cfg.out(kTrainLabeled));
  CHECK(labeled.size() == 300);
  CHECK_NOTHROW(data::check_labels(labeled, 5));
  CHECK(json::parse(binio::read_file(cfg.out(kProjection)))["points"].size() == 300);

  const auto first = binio::read_file(cfg.out(kSweepReport));
  cmd_elicit(one);
  CHECK(binio::read_file(cfg.out(kSweepReport)) == first);
}

TEST_CASE("curate, prompts, generate, evaluate") {
  TempDir dir("rxn_stages");
  auto cfg = toy_config(dir);
  cmd_elicit(cfg);

  auto cur = cmd_curate(cfg);
  const auto model_hash =
      curate::bytes_fingerprint(binio::read_file(cfg.out(kClassifierFile)));
  CHECK(cur["model_fingerprint"] == model_hash);
  auto test = curate::load_curated(cfg.out(kTestCurated));
  CHECK(test.records.size() == 20);
  CHECK(test.model_fingerprint == model_hash);
  for (const auto &r : test.records)
    CHECK(r.rt.has_value());

  auto p = cmd_prompts(cfg);
  CHECK(p["test"]["rows"] == 20);
  auto rows = prompt::load_prompts(cfg.out(kTestPrompts));
  REQUIRE(rows.size() == test.records.size());
  for (const auto &row : rows)
    CHECK(count_of(row.prompt, "Reaction type: ") == 1);

  auto fixed = cfg;
  fixed.static_template = true;
  cmd_prompts(fixed);
  const auto &lib = prompt::TemplateLibrary::builtin();
  auto static_rows = prompt::load_prompts(cfg.out(kTestPrompts));
  for (std::size_t i = 0; i < static_rows.size(); ++i)
    CHECK(prompt::parse_prompt(static_rows[i].prompt)->instruction ==
          lib.templates(test.records[i].task)[0]);

  CHECK_THROWS_AS(cmd_generate(cfg), ConfigError);
  auto echo = cfg;
  echo.gen_backend = "echo";
  CHECK(cmd_generate(echo)["predictions"] == 20);

  // Predictions equal to references score 1 on every exact metric.
  std::vector<metrics::Prediction> perfect;
  for (const auto &r : test.records)
    perfect.push_back({r.id, r.output});
  binio::write_file(dir / "perfect.jsonl", metrics::serialize_predictions(perfect));
  auto ev = cfg;
  ev.predictions = dir / "perfect.jsonl";
  auto m = cmd_evaluate(ev);
  CHECK(m["overall"]["em"] == 1.0);
  CHECK(m["overall"]["validity"] == 1.0);
  CHECK(m["overall"]["bleu"] == 1.0);

  metrics::MetricReport base;
  base.overall.count = 1;
  base.overall.em = 0.5;
  binio::write_file(dir / "base.json", base.to_json());
  ev.baseline = dir / "base.json";
  CHECK(cmd_evaluate(ev)["overall"]["improve"] == 1.0);
  ev.baseline.clear();

  perfect.back().id = "zzz";
  binio::write_file(dir / "bad.jsonl", metrics::serialize_predictions(perfect));
  ev.predictions = dir / "bad.jsonl";
  try {
    cmd_evaluate(ev);
    FAIL("expected misaligned ids");
  } catch (const DataError &e) {
    CHECK(std::string(e.what()).find(test.records.back().id) != std::string::npos);
  }

  // An empty test set curates to an empty file.
  binio::write_file(dir / "empty.jsonl", "");
  auto empty = cfg;
  empty.test = dir / "empty.jsonl";
  empty.valid.clear();
  CHECK(cmd_curate(empty)["test"]["records"] == 0);
  CHECK(binio::read_file(cfg.out(kTestCurated)).empty());

  auto wrong_dim = cfg;
  wrong_dim.provider = "hash:16";
  CHECK_THROWS_AS(cmd_curate(wrong_dim), ConfigError);
}

TEST_CASE("run_all") {
  TempDir dir("rxn_runall");
  auto cfg = toy_config(dir);
  auto r = cmd_run_all(cfg);
  CHECK(r["stages"]["generate"] == "skipped");
  CHECK(r["stages"]["evaluate"] == "skipped");
  CHECK(fs::exists(cfg.out(kTestPrompts)));

  cfg.gen_backend = "echo";
  auto a = cmd_run_all(cfg);
  const auto first = binio::read_file(cfg.out(kPipelineReport));
  cfg.out_dir = dir / "again";
  auto b = cmd_run_all(cfg);
  CHECK(binio::read_file(cfg.out(kPipelineReport)) == first);
  CHECK(a["stages"]["evaluate"]["overall"]["count"] == 20);

  auto broken = cfg;
  broken.provider = "hash:16";
  broken.model = dir / "out/rt_classifier.rtcl";
  broken.out_dir = dir / "broken";
  try {
    cmd_run_all(broken);
    FAIL("expected a stage failure");
  } catch (const StageError &e) {
    CHECK(e.stage() == "curate");
    CHECK(e.exit_code() == 2);
  }
}
