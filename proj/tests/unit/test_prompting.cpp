#include <doctest.h>

#include <cmath>
#include <set>

#include "rxnelicit/error.hpp"
#include "rxnelicit/prompting.hpp"
#include "rxnelicit/util.hpp"

using namespace rxnelicit;
using namespace rxnelicit::prompt;
using data::TaskType;

namespace {

std::size_t count_of(const std::string &hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto at = hay.find(needle); at != std::string::npos;
       at = hay.find(needle, at + 1))
    ++n;
  return n;
}

TemplateLibrary two_forward() {
  TemplateLibrary lib;
  lib.set(TaskType::kForward, {"first", "second"});
  return lib;
}

std::shared_ptr<embed::EmbeddingStore> store2(
    std::initializer_list<std::pair<const char *, embed::Vector>> xs) {
  auto s = std::make_shared<embed::EmbeddingStore>(2);
  for (const auto &[k, v] : xs)
    s->put(k, v);
  return s;
}

curate::CuratedDataset curated(std::initializer_list<const char *> ids) {
  curate::CuratedDataset c;
  c.n_classes = 4;
  int i = 0;
  for (auto id : ids) {
    data::ReactionRecord r;
    r.id = id;
    r.task = TaskType::kForward;
    r.instruction = "orig";
    r.input = "CCO";
    r.output = std::string("CC") + std::to_string(i);
    r.rt = i++ % 4;
    c.records.push_back(r);
  }
  return c;
}

}  // namespace

TEST_CASE("builtin library") {
  const auto &lib = TemplateLibrary::builtin();
  CHECK(lib.size() == 36);
  for (auto t : data::kAllTasks)
    CHECK(lib.templates(t).size() == 12);
  CHECK(lib.templates(TaskType::kForward)[0] ==
        "Please suggest a potential product based on the given reactants and "
        "reagents.");
  CHECK(lib.templates(TaskType::kRetrosynthesis)[2] ==
        "Given these product, can you propose the corresponding reactants?");
  CHECK(lib.templates(TaskType::kReagent)[1] ==
        "Can you provide potential reagents for the following chemical "
        "reaction?");
  const auto file = TemplateLibrary::load(RXNELICIT_SOURCE_DIR "/data/templates.json");
  CHECK(file.to_json() == lib.to_json());
  CHECK(TemplateLibrary::parse(lib.to_json(), "x").to_json() == lib.to_json());
}

TEST_CASE("library validation") {
  CHECK_NOTHROW(TemplateLibrary::parse(R"({"forward": ["a"]})", "t"));
  CHECK_THROWS_AS(TemplateLibrary::parse(R"({"forward": []})", "t"), DataError);
  CHECK_THROWS_AS(TemplateLibrary::parse(R"({"forward": [""]})", "t"), DataError);
  CHECK_THROWS_AS(TemplateLibrary::parse(R"({"forward": ["a", "a"]})", "t"),
                  DataError);
  CHECK_THROWS_AS(TemplateLibrary::parse(R"({"forward": ["a\nb"]})", "t"),
                  DataError);
  CHECK_THROWS_AS(
      TemplateLibrary::parse(R"({"forward": ["x Reaction type: 3"]})", "t"),
      DataError);
  CHECK_THROWS_AS(TemplateLibrary::parse(R"({"oxidation": ["a"]})", "t"),
                  DataError);
  CHECK_THROWS_AS(TemplateLibrary::parse(R"({})", "t"), DataError);
  CHECK_THROWS_AS(TemplateLibrary::parse(R"([1])", "t"), DataError);
  CHECK_THROWS_AS(TemplateLibrary::parse(R"({"forward": [3]})", "t"), DataError);
  TemplateLibrary lib;
  lib.set(TaskType::kForward, {"a"});
  CHECK_THROWS_AS(lib.templates(TaskType::kReagent), DataError);
}

TEST_CASE("adaptability") {
  const embed::Vector a{1.5, -2.0, 0.25};
  CHECK(adaptability(a, a) == 0.0);
  CHECK(adaptability(embed::Vector{0, 0}, embed::Vector{3, 4}) == -5.0);
  const embed::Vector b{0.5, 7.0, -1.0};
  CHECK(adaptability(a, b) == adaptability(b, a));
  CHECK(adaptability(a, b) < 0.0);
  CHECK_THROWS_AS(adaptability(a, embed::Vector{1.0}), DataError);
}

TEST_CASE("select_instruction") {
  auto lib = two_forward();
  embed::StoreProvider p(
      store2({{"template:forward:0", {1, 0}}, {"template:forward:1", {3, 4}}}));
  auto s = select_instruction(embed::Vector{0, 0}, TaskType::kForward, lib, p);
  CHECK(s.index == 0);
  CHECK(s.instruction == "first");
  CHECK(s.adaptability == -1.0);
  InstructionSelector sel(lib, p);
  CHECK(adaptability(embed::Vector{0, 0}, sel.template_vectors(TaskType::kForward)[1]) ==
        -5.0);
  CHECK(sel.select(embed::Vector{3, 3.9}, TaskType::kForward).index == 1);
  CHECK_THROWS_AS(sel.select(embed::Vector{0, 0}, TaskType::kReagent), DataError);

  embed::StoreProvider tie(
      store2({{"template:forward:0", {2, 2}}, {"template:forward:1", {2, 2}}}));
  CHECK(select_instruction(embed::Vector{0, 0}, TaskType::kForward, lib, tie)
            .index == 0);

  TemplateLibrary single;
  single.set(TaskType::kReagent, {"only"});
  embed::HashProvider hp(8);
  CHECK(select_instruction(embed::Vector(8, 0.3), TaskType::kReagent, single, hp)
            .index == 0);
}

TEST_CASE("selection is translation invariant") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng.uniform_index(6);
    const std::size_t k = 1 + rng.uniform_index(9);
    auto draw = [&] {
      embed::Vector v(d);
      for (auto &x : v)
        x = rng.normal();
      return v;
    };
    const auto input = draw();
    const auto offset = draw();
    std::vector<embed::Vector> ts;
    for (std::size_t i = 0; i < k; ++i)
      ts.push_back(draw());
    auto shifted_in = input;
    auto shifted_ts = ts;
    for (std::size_t j = 0; j < d; ++j) {
      shifted_in[j] += offset[j];
      for (auto &t : shifted_ts)
        t[j] += offset[j];
    }
    CHECK(nearest(input, ts) == nearest(shifted_in, shifted_ts));
  }
}

TEST_CASE("fuse and parse back") {
  auto p = fuse(
      "Please suggest a potential product based on the given reactants and "
      "reagents.",
      4, "CCO");
  CHECK(p.rendered ==
        "Please suggest a potential product based on the given reactants and "
        "reagents.\nReaction type: 4\ninput: CCO");
  CHECK(p.rt == 4);
  CHECK(fuse("x", 0, "C").rendered.find("Reaction type: 0") != std::string::npos);

  std::set<std::string> seen;
  const auto &lib = TemplateLibrary::builtin();
  std::size_t n = 0;
  for (auto t : data::kAllTasks)
    for (const auto &ins : lib.templates(t))
      for (int rt : {0, 1, 9, 10})
        for (const char *in : {"CCO", "CC.O", "c1ccccc1", "CCO "}) {
          auto f = fuse(ins, rt, in);
          seen.insert(f.rendered);
          ++n;
          CHECK(count_of(f.rendered, "Reaction type: ") == 1);
          auto back = parse_prompt(f.rendered);
          REQUIRE(back);
          CHECK(*back == ParsedPrompt{ins, rt, in});
        }
  CHECK(seen.size() == n);
  CHECK_FALSE(parse_prompt("no markers"));
  CHECK_FALSE(parse_prompt("x\nReaction type: a\ninput: C"));
}

TEST_CASE("build_prompted_dataset") {
  embed::HashProvider hp(16);
  const auto &lib = TemplateLibrary::builtin();
  CHECK(build_prompted_dataset({}, lib, hp).empty());

  auto one = curated({"r0"});
  auto rows = build_prompted_dataset(one, lib, hp);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].id == "r0");
  CHECK(rows[0].reference == one.records[0].output);

  auto many = curated({"a", "b", "c", "d", "e"});
  many.records[1].input = "c1ccccc1Cl";
  many.records[2].input = "O=C(O)CCN";
  many.records[3].task = TaskType::kReagent;
  many.records[4].task = TaskType::kRetrosynthesis;
  auto adaptive = build_prompted_dataset(many, lib, hp);
  CHECK(adaptive.size() == many.records.size());
  CHECK(build_prompted_dataset(many, lib, hp) == adaptive);
  InstructionSelector sel(lib, hp);
  for (std::size_t i = 0; i < adaptive.size(); ++i) {
    const auto &r = many.records[i];
    CHECK(count_of(adaptive[i].prompt, "Reaction type: ") == 1);
    auto parsed = parse_prompt(adaptive[i].prompt);
    REQUIRE(parsed);
    CHECK(parsed->rt == *r.rt);
    CHECK(parsed->input == r.input);
    const auto input_vec = hp.embed_texts(std::vector<std::string>{r.input})[0];
    CHECK(parsed->instruction == sel.select(input_vec, r.task).instruction);
  }

  auto fixed = build_prompted_dataset(many, lib, hp, {.static_template = true});
  for (std::size_t i = 0; i < fixed.size(); ++i)
    CHECK(parse_prompt(fixed[i].prompt)->instruction ==
          lib.templates(many.records[i].task)[0]);

  auto missing = many;
  missing.records[2].rt.reset();
  CHECK_THROWS_AS(build_prompted_dataset(missing, lib, hp), DataError);

  auto text = serialize_prompts(adaptive);
  CHECK(parse_prompts(text, "p") == adaptive);
  CHECK_THROWS_AS(parse_prompts("{\"id\": 1}\n", "p"), DataError);
}
