#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "rxnelicit/error.hpp"
#include "rxnelicit/metrics.hpp"
#include "rxnelicit/smiles.hpp"

using namespace rxnelicit;
using namespace rxnelicit::metrics;
using SV = std::vector<std::string>;

TEST_CASE("bleu") {
  CHECK(bleu(SV{"CCO", "c1ccccc1"}, SV{"CCO", "c1ccccc1"}) == 1.0);
  // Unigrams C,C,O vs C,C,N: 2/3. Bigrams {CC, CO} vs {CC, CN}: 1/2.
  // Trigram CCO vs CCN: 0/1, smoothed to 1/2. No 4-grams: 1/1.
  CHECK(bleu(SV{"CCO"}, SV{"CCN"}) ==
        doctest::Approx(std::pow(2.0 / 3 * 0.5 * 0.5 * 1.0, 0.25)));
  CHECK(bleu(SV{"CCO"}, SV{"CCN"}) == doctest::Approx(0.638943).epsilon(1e-6));
  // Every n-gram matches; brevity penalty exp(1 - 3/2).
  CHECK(bleu(SV{"CC"}, SV{"CCO"}) == doctest::Approx(std::exp(-0.5)));
  CHECK(bleu(SV{"NS"}, SV{"CCO"}) < 0.05);
  CHECK(bleu(SV{"[Na+].Cl"}, SV{"Cl.[Na+]"}) < 1.0);
  CHECK_THROWS_AS(bleu(SV{"C"}, SV{}), DataError);
  CHECK_THROWS_AS(bleu(SV{}, SV{}), DataError);
}

TEST_CASE("meteor") {
  const SV abc{"C", "O", "N"};
  auto same = meteor_pair(abc, abc);
  CHECK(same.matches == 3);
  CHECK(same.chunks == 1);
  CHECK(same.score == doctest::Approx(1.0 - 0.5 / 27));
  const SV cba{"N", "O", "C"};
  auto rev = meteor_pair(cba, abc);
  CHECK(rev.chunks == 3);
  CHECK(rev.precision == 1.0);
  CHECK(rev.recall == 1.0);
  CHECK(rev.score == doctest::Approx(0.5));
  CHECK(meteor_pair(SV{"S", "P"}, abc).score == 0.0);
  CHECK(meteor(SV{"CON"}, SV{"CON"}) == doctest::Approx(1.0 - 0.5 / 27));
  CHECK(meteor(SV{"NOC"}, SV{"CON"}) == doctest::Approx(0.5));

  // Repeated tokens: the run alignment keeps one chunk rather than
  // pairing the first C of the prediction with the first C of the
  // reference.
  auto rep = meteor_pair(SV{"O", "C", "C"}, SV{"C", "O", "C", "C"});
  CHECK(rep.matches == 3);
  CHECK(rep.chunks == 1);
  // P = 1, R = 3/4.
  const double f = 10 * 0.75 / (0.75 + 9);
  CHECK(rep.score == doctest::Approx(f * (1 - 0.5 / 27)));
  CHECK_THROWS_AS(meteor(SV{"C"}, SV{"C", "C"}), DataError);
}

TEST_CASE("exact_match") {
  CHECK(exact_match(SV{"CCO.CC"}, SV{"CC.CCO"}) == 1.0);
  CHECK(exact_match(SV{"OCC"}, SV{"CCO"}) == 1.0);
  CHECK(exact_match(SV{"CC"}, SV{"CC.CC"}) == 0.0);
  CHECK(exact_match(SV{"not smiles"}, SV{" not smiles "}) == 1.0);
  CHECK(exact_match(SV{"C1CC.O"}, SV{"O.C1CC"}) == 1.0);
  CHECK(exact_match(SV{"CCO", "CCO"}, SV{"OCC", "CCN"}) == 0.5);
  CHECK(compound_multiset("OCC.C") == SV{"C", "CCO"});
}

TEST_CASE("similarity") {
  CHECK(similarity(SV{"CCO"}, SV{"CCO"}) == 1.0);
  CHECK(similarity(SV{"CCO.c1ccccc1"}, SV{"c1ccccc1.OCC"}) == 1.0);
  // Disjoint path sets give disjoint bits unless two paths share a bucket.
  auto pa = smiles::path_strings(smiles::parse("O=O"));
  auto pb = smiles::path_strings(smiles::parse("N#N"));
  std::vector<std::string> both;
  std::set_intersection(pa.begin(), pa.end(), pb.begin(), pb.end(),
                        std::back_inserter(both));
  CHECK(both.empty());
  CHECK(similarity(SV{"O=O"}, SV{"N#N"}) == 0.0);
  CHECK(similarity(SV{"C1CC"}, SV{"CCO"}) == 0.0);
  CHECK(similarity(SV{"C1CC"}, SV{"C1CC"}) == 1.0);
  CHECK(similarity(SV{"C1CC"}, SV{"C1CCC"}) == 0.0);
  const SV a{"CCO", "c1ccccc1O", "CC(=O)Cl"}, b{"CCN", "c1ccccc1", "CC(=O)O"};
  CHECK(similarity(a, b) == similarity(b, a));
  CHECK(similarity(a, b) > 0.0);
  CHECK(similarity(a, b) < 1.0);
}

TEST_CASE("validity") {
  CHECK(validity(SV{"CCO", "C1CC"}) == 0.5);
  CHECK(validity(SV{"CCO", "CC.O"}) == 1.0);
  CHECK(validity(SV{""}) == 0.0);
  CHECK(validity(SV{"CC."}) == 0.0);
  CHECK_THROWS_AS(validity(SV{}), DataError);
}

TEST_CASE("improvement") {
  CHECK(improvement(0.284, 0.163) == doctest::Approx(0.7423).epsilon(1e-4));
  CHECK(std::round(improvement(0.284, 0.163) * 1000) / 10 == 74.2);
  CHECK(std::round(improvement(0.757, 0.663) * 1000) / 10 == 14.2);
  CHECK(improvement(0.4, 0.4) == 0.0);
  // (a - b) / b = -((b - a) / a) * (a / b)
  for (auto [a, b] : {std::pair{0.3, 0.7}, {0.9, 0.2}, {0.5, 0.51}})
    CHECK(improvement(a, b) ==
          doctest::Approx(-improvement(b, a) * (a / b)));
  CHECK_THROWS_AS(improvement(0.5, 0.0), DataError);
}

TEST_CASE("report") {
  std::vector<EvalRow> rows{
      {"a", data::TaskType::kForward, "CCO", "OCC"},
      {"b", data::TaskType::kForward, "CC", "CCN"},
      {"c", data::TaskType::kReagent, "O", "O"},
  };
  auto rep = evaluate(rows);
  CHECK(rep.overall.count == 3);
  CHECK(rep.overall.em == doctest::Approx(2.0 / 3));
  CHECK(rep.tasks.size() == 2);
  CHECK(rep.tasks.at(data::TaskType::kForward).em == 0.5);
  CHECK(rep.tasks.at(data::TaskType::kReagent).em == 1.0);
  CHECK_FALSE(rep.overall.improve);

  auto json = rep.to_json();
  CHECK(json.find("\"overall\"") < json.find("\"tasks\""));
  CHECK(json.find("\"forward\"") < json.find("\"reagent\""));
  CHECK(MetricReport::from_json(json, "r").to_json() == json);

  MetricReport base = rep;
  base.tasks.at(data::TaskType::kForward).em = 0.25;
  base.tasks.at(data::TaskType::kReagent).em = 0.0;
  rep.apply_baseline(base);
  CHECK(*rep.tasks.at(data::TaskType::kForward).improve == 1.0);
  CHECK_FALSE(rep.tasks.at(data::TaskType::kReagent).improve);
  CHECK(*rep.overall.improve == 0.0);
  CHECK_THROWS_AS(evaluate(std::vector<EvalRow>{}), DataError);
}

TEST_CASE("align") {
  data::Dataset refs(2);
  refs[0].id = "x";
  refs[0].output = "CCO";
  refs[1].id = "y";
  refs[1].output = "CC";
  refs[1].task = data::TaskType::kReagent;
  std::vector<Prediction> preds{{"y", "CC"}, {"x", "CCO"}};
  auto rows = align(preds, refs);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].id == "x");
  CHECK(rows[0].prediction == "CCO");
  CHECK(rows[1].task == data::TaskType::kReagent);

  try {
    align(std::vector<Prediction>{{"x", "C"}, {"z", "C"}}, refs);
    FAIL("expected misalignment");
  } catch (const DataError &e) {
    CHECK(std::string(e.what()).find("\"y\"") != std::string::npos);
  }
  CHECK_THROWS_AS(align(std::vector<Prediction>{{"x", "C"}, {"y", "C"}, {"w", "C"}},
                        refs),
                  DataError);
  CHECK(parse_predictions(serialize_predictions(preds), "p") == preds);
}
