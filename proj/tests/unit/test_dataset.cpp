#include <doctest.h>

#include <filesystem>
#include <set>

#include "rxnelicit/dataset.hpp"
#include "rxnelicit/error.hpp"
#include "rxnelicit/smiles.hpp"

using namespace rxnelicit;
using namespace rxnelicit::data;

namespace {

Dataset make_records(std::size_t n) {
  Dataset out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({"r" + std::to_string(i), TaskType::kForward, "predict",
                   std::string(1 + i % 5, 'C'), "CCO", std::nullopt});
  return out;
}

std::string error_of(std::string_view text) {
  try {
    parse_dataset(text, "mem");
  } catch (const DataError &e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("parse one forward record") {
  auto ds = parse_dataset(
      R"({"task":"forward","instruction":"go","input":"CCO","output":"CC=O"})",
      "mem");
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].task == TaskType::kForward);
  CHECK(ds[0].id == "0");
  CHECK(ds[0].input == "CCO");
  CHECK(ds[0].output == "CC=O");
  CHECK_FALSE(ds[0].rt.has_value());
}

TEST_CASE("empty file and blank lines") {
  CHECK(parse_dataset("", "mem").empty());
  auto ds = parse_dataset(
      "\n{\"task\":\"reagent\",\"instruction\":\"\",\"input\":\" CC \","
      "\"output\":\"O\",\"rt\":2}\n\n",
      "mem");
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].id == "1");
  CHECK(ds[0].input == "CC");
  CHECK(ds[0].rt == 2);
}

TEST_CASE("errors name the line") {
  auto e = error_of(
      R"({"task":"oxidation","instruction":"","input":"C","output":"C"})");
  CHECK(e.find("line 1") != std::string::npos);
  CHECK(e.find("oxidation") != std::string::npos);
  e = error_of("{\"task\":\"forward\",\"instruction\":\"\",\"input\":\"C\","
               "\"output\":\"C\"}\nnot json");
  CHECK(e.find("line 2") != std::string::npos);
  CHECK(error_of(R"({"task":"forward","instruction":"","input":"  ","output":"C"})")
            .find("line 1") != std::string::npos);
  CHECK(error_of(R"({"task":"forward","instruction":"","output":"C"})") != "");
  CHECK(error_of("{\"id\":\"a\",\"task\":\"forward\",\"instruction\":\"\","
                 "\"input\":\"C\",\"output\":\"C\"}\n"
                 "{\"id\":\"a\",\"task\":\"forward\",\"instruction\":\"\","
                 "\"input\":\"C\",\"output\":\"C\"}")
            .find("duplicate") != std::string::npos);
  CHECK_THROWS_AS(load_dataset("/nonexistent/file.jsonl"), Error);
}

TEST_CASE("save/load round trip") {
  auto ds = make_records(7);
  ds[3].rt = 4;
  ds[4].task = TaskType::kRetrosynthesis;
  ds[5].instruction = "quote \" and\nnewline";
  const auto dir = std::filesystem::temp_directory_path() / "rxnelicit_ds_test";
  std::filesystem::create_directories(dir);
  save_dataset(dir / "x.jsonl", ds);
  CHECK(load_dataset(dir / "x.jsonl") == ds);
  CHECK(parse_dataset(serialize_dataset(ds), "mem") == ds);
  std::filesystem::remove_all(dir);
}

TEST_CASE("clean_dataset") {
  Dataset ds = {{"a", TaskType::kForward, "", "C1CC", "CC", std::nullopt}};
  auto res = clean_dataset(ds);
  CHECK(res.kept.empty());
  REQUIRE(res.dropped.size() == 1);
  CHECK(res.dropped[0] == Dropped{"a", "input compound 0: unclosed ring 1"});

  ds = {{"b", TaskType::kForward, "", "CCO", "CC=O", std::nullopt}};
  CHECK(clean_dataset(ds).kept.size() == 1);

  Dataset mixed = {
      {"v1", TaskType::kForward, "", "CCO", "CC=O", std::nullopt},
      {"x1", TaskType::kForward, "", "CC", "C(C)(C)(C)(C)C", std::nullopt},
      {"v2", TaskType::kReagent, "", "c1ccccc1.O", "Cl", std::nullopt},
      {"x2", TaskType::kForward, "", "C.", "C", std::nullopt},
      {"v3", TaskType::kRetrosynthesis, "", "CC(=O)O", "CCO.O", std::nullopt},
  };
  // Oracle: validate every compound directly.
  std::size_t expect_kept = 0;
  for (const auto &r : mixed)
    expect_kept += smiles::validate(r.input).valid && smiles::validate(r.output).valid;
  res = clean_dataset(mixed);
  CHECK(res.kept.size() == expect_kept);
  CHECK(res.kept.size() == 3);
  CHECK(res.dropped.size() == 2);
  CHECK(res.dropped[0].reason.rfind("output compound 0", 0) == 0);
  CHECK(clean_dataset(res.kept).dropped.empty());
}

TEST_CASE("check_labels") {
  auto ds = make_records(3);
  CHECK_THROWS_AS(check_labels(ds, 3), DataError);
  for (auto &r : ds)
    r.rt = 2;
  CHECK_NOTHROW(check_labels(ds, 3));
  CHECK_THROWS_AS(check_labels(ds, 2), DataError);
}

TEST_CASE("98:1:1 split") {
  auto ds = make_records(1000);
  auto s = split_98_1_1(ds, 7);
  CHECK(s.train.size() == 980);
  CHECK(s.valid.size() == 10);
  CHECK(s.test.size() == 10);
  auto again = split_98_1_1(ds, 7);
  CHECK(again.train == s.train);
  CHECK(again.valid == s.valid);
  CHECK(again.test == s.test);

  std::set<std::string> ids;
  for (const auto *part : {&s.train, &s.valid, &s.test})
    for (const auto &r : *part)
      CHECK(ids.insert(r.id).second);
  CHECK(ids.size() == 1000);

  auto other = split_98_1_1(ds, 8);
  CHECK(other.test != s.test);

  // floor(250 / 100) = 2 each, remainder to train.
  auto small = split_98_1_1(make_records(250), 1);
  CHECK(small.train.size() == 246);
  CHECK(small.valid.size() == 2);
  CHECK(small.test.size() == 2);

  CHECK_THROWS_AS(split_98_1_1(make_records(99), 1), DataError);
  CHECK(split_98_1_1(make_records(100), 1).test.size() == 1);
}
