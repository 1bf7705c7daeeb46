// Writes a synthetic train/valid/test corpus in the dataset format.
//   rxnelicit_toy <out_dir> [n] [seed]

#include <filesystem>
#include <iostream>
#include <string>

#include "rxnelicit/dataset.hpp"
#include "toy_corpus.hpp"

int main(int argc, char **argv) {
  using namespace rxnelicit;
  if (argc < 2) {
    std::cerr << "usage: rxnelicit_toy <out_dir> [n] [seed]\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  const std::size_t n = argc > 2 ? std::stoul(argv[2]) : 500;
  const std::uint64_t seed = argc > 3 ? std::stoull(argv[3]) : 7;
  std::filesystem::create_directories(dir);
  data::save_dataset(dir / "train.jsonl", toy::corpus(n, seed));
  data::save_dataset(dir / "valid.jsonl", toy::corpus(n / 10, seed + 1));
  data::save_dataset(dir / "test.jsonl", toy::corpus(n / 10, seed + 2));
  return 0;
}
