#pragma once

// Small synthetic reaction corpus: a handful of textbook transformations
// over random substituents, spread over the three tasks. Every SMILES it
// emits is valid.

#include <array>
#include <string>
#include <vector>

#include "rxnelicit/dataset.hpp"
#include "rxnelicit/util.hpp"

namespace rxnelicit::toy {

struct Reaction {
  std::string reactants;
  std::string reagents;
  std::string product;
};

inline Reaction draw_reaction(Rng &rng) {
  static const std::array<const char *, 8> acyl = {
      "C", "CC", "CCC", "CC(C)", "c1ccccc1", "c1ccc(C)cc1", "c1ccc(Cl)cc1",
      "C1CCCCC1"};
  static const std::array<const char *, 5> alkyl = {"C", "CC", "CCC", "CC(C)C",
                                                    "CCCC"};
  static const std::array<const char *, 5> aryl_sub = {"C", "Cl", "F", "OC",
                                                       "C(F)(F)F"};
  auto pick = [&](const auto &xs) { return std::string(xs[rng.uniform_index(xs.size())]); };

  switch (rng.uniform_index(6)) {
    case 0: {  // esterification
      auto r = pick(acyl), a = pick(alkyl);
      return {r + "C(=O)O." + a + "O", "O=S(=O)(O)O", r + "C(=O)O" + a};
    }
    case 1: {  // amide coupling
      auto r = pick(acyl), a = pick(alkyl);
      return {r + "C(=O)O." + a + "N", "CCN(CC)CC", r + "C(=O)N" + a};
    }
    case 2: {  // ketone reduction
      auto r = pick(acyl);
      return {r + "C(=O)C", "[BH4-].[Na+]", r + "C(O)C"};
    }
    case 3: {  // alcohol to chloride
      auto a = pick(alkyl);
      return {a + "CO", "O=S(Cl)Cl", a + "CCl"};
    }
    case 4: {  // Suzuki coupling
      auto x = pick(aryl_sub), y = pick(aryl_sub);
      return {"Brc1ccc(" + x + ")cc1.OB(O)c1ccc(" + y + ")cc1",
              "[Pd].O=C([O-])[O-].[K+].[K+]",
              "c1cc(" + x + ")ccc1-c1ccc(" + y + ")cc1"};
    }
    default: {  // nitrile hydrolysis
      auto r = pick(acyl);
      return {r + "C#N", "O.[OH-].[Na+]", r + "C(=O)O"};
    }
  }
}

// Records "t{i}" cycling through forward, retrosynthesis and reagent.
inline data::Dataset corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  data::Dataset out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = draw_reaction(rng);
    data::ReactionRecord rec;
    rec.id = "t" + std::to_string(i);
    switch (i % 3) {
      case 0:
        rec.task = data::TaskType::kForward;
        rec.instruction = "Predict the product.";
        rec.input = r.reactants + "." + r.reagents;
        rec.output = r.product;
        break;
      case 1:
        rec.task = data::TaskType::kRetrosynthesis;
        rec.instruction = "Propose reactants.";
        rec.input = r.product;
        rec.output = r.reactants;
        break;
      default:
        rec.task = data::TaskType::kReagent;
        rec.instruction = "Suggest reagents.";
        rec.input = r.reactants + "." + r.product;
        rec.output = r.reagents;
        break;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace rxnelicit::toy
