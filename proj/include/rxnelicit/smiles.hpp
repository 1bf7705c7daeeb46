#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rxnelicit/error.hpp"

// SMILES lexing, parsing into a token-level molecular graph, validity and
// valence checks, canonical output and path fingerprints.
//
// The graph is exactly what the string spells: aromatic flags come from
// lowercase atoms, no aromaticity perception or kekulization is done, and
// stereo marks are carried as atom labels without geometric meaning.
namespace rxnelicit::smiles {

enum class TokenKind {
  kAtom,
  kBond,
  kRingClosure,
  kBranchOpen,
  kBranchClose,
  kDot,
};

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t position;

  bool operator==(const Token &) const = default;
};

class SmilesError : public DataError {
 public:
  SmilesError(const std::string &what, std::optional<std::size_t> offset = {})
      : DataError(what), offset_(offset) { }

  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  std::optional<std::size_t> offset_;
};

std::vector<Token> tokenize(std::string_view s);

enum class BondOrder : std::uint8_t {
  kSingle = 1,
  kDouble = 2,
  kTriple = 3,
  kAromatic = 4,
};

struct Atom {
  std::string element;  // capitalized symbol, "*" for the wildcard
  bool aromatic = false;
  int charge = 0;
  int explicit_h = 0;
  std::optional<int> isotope;
  bool bracket = false;
  std::string chirality;  // "@", "@@", ... or empty

  bool operator==(const Atom &) const = default;
};

struct Bond {
  int a;
  int b;
  BondOrder order;

  bool operator==(const Bond &) const = default;
};

struct MolGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;

  bool empty() const noexcept { return atoms.empty(); }

  // adjacency()[i] lists (neighbor, bond index) pairs in bond order.
  std::vector<std::vector<std::pair<int, int>>> adjacency() const;

  // true for bonds that lie on at least one ring (i.e. are not bridges).
  std::vector<bool> ring_bonds() const;
};

// Parses a single compound; callers split multi-compound strings on '.'.
MolGraph parse(std::string_view s);

struct Validation {
  bool valid = true;
  std::string reason;
  std::size_t compound = 0;  // index of the first failing compound

  explicit operator bool() const noexcept { return valid; }
};

// Checks one compound (no '.') for syntax and valence.
Validation validate_compound(std::string_view s);

// Checks every '.'-separated compound; an empty compound is invalid.
Validation validate(std::string_view s);

// Valence ceiling for an atom, or nullopt when the atom is exempt.
std::optional<int> allowed_valence(const Atom &atom);

// Bond-order sum used against allowed_valence.
int used_valence(const MolGraph &g, int atom);

// SMILES for an arbitrary graph. Lower priority values are visited first;
// the lowest-priority atom of each component starts its traversal.
std::string write_smiles(const MolGraph &g, std::span<const int> priority);

// Canonical form of a graph: components are canonicalized separately,
// sorted, and joined with '.'.
std::string canonical_smiles(const MolGraph &g);

// Canonical form of a valid (possibly multi-compound) SMILES string.
// Throws DataError on invalid input.
std::string canonicalize(std::string_view s);

// Fixed-width bit set.
class Fingerprint {
 public:
  explicit Fingerprint(std::size_t width = 2048)
      : width_(width), words_((width + 63) / 64, 0) { }

  std::size_t width() const noexcept { return width_; }

  void set(std::size_t bit) { words_[bit / 64] |= 1ULL << (bit % 64); }
  bool test(std::size_t bit) const {
    return (words_[bit / 64] >> (bit % 64)) & 1ULL;
  }

  std::size_t count() const;
  bool none() const { return count() == 0; }

  Fingerprint &operator|=(const Fingerprint &o);

  bool is_subset_of(const Fingerprint &o) const;

  std::span<const std::uint64_t> words() const noexcept { return words_; }

  bool operator==(const Fingerprint &) const = default;

 private:
  std::size_t width_;
  std::vector<std::uint64_t> words_;
};

inline constexpr std::size_t kFingerprintWidth = 2048;
inline constexpr int kMaxPathAtoms = 7;

// Canonical-direction label strings of every simple path with
// 1..max_atoms atoms, sorted and de-duplicated.
std::vector<std::string> path_strings(const MolGraph &g,
                                      int max_atoms = kMaxPathAtoms);

Fingerprint fingerprint(const MolGraph &g,
                        std::size_t width = kFingerprintWidth,
                        int max_atoms = kMaxPathAtoms);

// |a & b| / |a | b|, 1.0 when both are empty.
double tanimoto(const Fingerprint &a, const Fingerprint &b);

// Regex-style SMILES tokens (bracket atoms, two-letter halogens, ring
// digits and %NN as single tokens). Whitespace separates words; a word that
// does not lex fully as SMILES becomes one token.
std::vector<std::string> regex_tokens(std::string_view text);

}  // namespace rxnelicit::smiles
