#include "rxnelicit/smiles.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <functional>
#include <map>
#include <tuple>

#include "rxnelicit/util.hpp"

namespace rxnelicit::smiles {
namespace {

constexpr std::array<std::string_view, 118> kElements = {
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg",
    "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr",
    "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr",
    "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd",
    "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf",
    "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po",
    "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs",
    "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
};

bool is_element(std::string_view s) {
  return std::find(kElements.begin(), kElements.end(), s) != kElements.end();
}

// Aromatic symbols accepted inside brackets.
constexpr std::array<std::string_view, 9> kBracketAromatic = {
    "se", "as", "te", "b", "c", "n", "o", "p", "s",
};

bool is_organic_char(char c) {
  return std::string_view("BCNOPSFIbcnops*").find(c) != std::string_view::npos;
}

bool is_bond_char(char c) {
  return std::string_view("-=#:/\\").find(c) != std::string_view::npos;
}

std::string capitalize(std::string_view s) {
  std::string out(s);
  if (!out.empty())
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto &c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Atom parse_bracket(std::string_view lexeme, std::size_t pos) {
  auto fail = [&]() -> SmilesError {
    return SmilesError("bad bracket atom '" + std::string(lexeme) +
                           "' at offset " + std::to_string(pos),
                       pos);
  };
  std::string_view body = lexeme.substr(1, lexeme.size() - 2);
  std::size_t i = 0;
  auto digits = [&]() {
    std::size_t start = i;
    while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i])))
      ++i;
    return body.substr(start, i - start);
  };

  Atom atom;
  atom.bracket = true;
  if (auto iso = digits(); !iso.empty()) {
    int v = std::stoi(std::string(iso));
    if (v <= 0)
      throw fail();
    atom.isotope = v;
  }

  if (i >= body.size())
    throw fail();
  if (body[i] == '*') {
    atom.element = "*";
    ++i;
  } else if (std::islower(static_cast<unsigned char>(body[i]))) {
    bool found = false;
    for (auto sym : kBracketAromatic) {
      if (body.substr(i, sym.size()) == sym) {
        atom.element = capitalize(sym);
        atom.aromatic = true;
        i += sym.size();
        found = true;
        break;
      }
    }
    if (!found)
      throw fail();
  } else if (std::isupper(static_cast<unsigned char>(body[i]))) {
    if (i + 1 < body.size() &&
        std::islower(static_cast<unsigned char>(body[i + 1])) &&
        is_element(body.substr(i, 2))) {
      atom.element = std::string(body.substr(i, 2));
      i += 2;
    } else if (is_element(body.substr(i, 1))) {
      atom.element = std::string(body.substr(i, 1));
      i += 1;
    } else {
      throw fail();
    }
  } else {
    throw fail();
  }

  if (i < body.size() && body[i] == '@') {
    std::size_t start = i;
    while (i < body.size() && body[i] == '@')
      ++i;
    // @TH1, @SP2, @OH12 style classes.
    if (i + 1 < body.size() && std::isupper(static_cast<unsigned char>(body[i])) &&
        std::isupper(static_cast<unsigned char>(body[i + 1]))) {
      i += 2;
      if (digits().empty())
        throw fail();
    }
    atom.chirality = std::string(body.substr(start, i - start));
  }

  if (i < body.size() && body[i] == 'H') {
    ++i;
    auto n = digits();
    atom.explicit_h = n.empty() ? 1 : std::stoi(std::string(n));
  }

  if (i < body.size() && (body[i] == '+' || body[i] == '-')) {
    const char sign = body[i];
    const int unit = sign == '+' ? 1 : -1;
    ++i;
    if (auto n = digits(); !n.empty()) {
      atom.charge = unit * std::stoi(std::string(n));
    } else {
      int count = 1;
      while (i < body.size() && body[i] == sign) {
        ++count;
        ++i;
      }
      atom.charge = unit * count;
    }
  }

  // Atom-map class: accepted and dropped.
  if (i < body.size() && body[i] == ':') {
    ++i;
    if (digits().empty())
      throw fail();
  }

  if (i != body.size())
    throw fail();
  return atom;
}

Atom organic_atom(std::string_view lexeme) {
  Atom atom;
  if (lexeme == "*") {
    atom.element = "*";
    return atom;
  }
  atom.aromatic = std::islower(static_cast<unsigned char>(lexeme[0])) != 0;
  atom.element = atom.aromatic ? capitalize(lexeme) : std::string(lexeme);
  return atom;
}

BondOrder bond_from_char(char c) {
  switch (c) {
  case '=':
    return BondOrder::kDouble;
  case '#':
    return BondOrder::kTriple;
  case ':':
    return BondOrder::kAromatic;
  default:  // '-', '/', '\'
    return BondOrder::kSingle;
  }
}

int ring_number(std::string_view text) {
  return text[0] == '%' ? std::stoi(std::string(text.substr(1)))
                        : text[0] - '0';
}

}  // namespace

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '[') {
      auto close = s.find(']', i + 1);
      if (close == std::string_view::npos)
        throw SmilesError(
            "unterminated bracket atom at offset " + std::to_string(i), i);
      tokens.push_back({TokenKind::kAtom, std::string(s.substr(i, close - i + 1)), i});
      i = close + 1;
    } else if ((c == 'C' && i + 1 < s.size() && s[i + 1] == 'l') ||
               (c == 'B' && i + 1 < s.size() && s[i + 1] == 'r')) {
      tokens.push_back({TokenKind::kAtom, std::string(s.substr(i, 2)), i});
      i += 2;
    } else if (is_organic_char(c)) {
      tokens.push_back({TokenKind::kAtom, std::string(1, c), i});
      ++i;
    } else if (is_bond_char(c)) {
      tokens.push_back({TokenKind::kBond, std::string(1, c), i});
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      tokens.push_back({TokenKind::kRingClosure, std::string(1, c), i});
      ++i;
    } else if (c == '%') {
      if (i + 2 >= s.size() ||
          !std::isdigit(static_cast<unsigned char>(s[i + 1])) ||
          !std::isdigit(static_cast<unsigned char>(s[i + 2])))
        throw SmilesError("bad ring closure at offset " + std::to_string(i), i);
      tokens.push_back({TokenKind::kRingClosure, std::string(s.substr(i, 3)), i});
      i += 3;
    } else if (c == '(') {
      tokens.push_back({TokenKind::kBranchOpen, "(", i});
      ++i;
    } else if (c == ')') {
      tokens.push_back({TokenKind::kBranchClose, ")", i});
      ++i;
    } else if (c == '.') {
      tokens.push_back({TokenKind::kDot, ".", i});
      ++i;
    } else {
      throw SmilesError("illegal character '" + std::string(1, c) +
                            "' at offset " + std::to_string(i),
                        i);
    }
  }
  return tokens;
}

std::vector<std::vector<std::pair<int, int>>> MolGraph::adjacency() const {
  std::vector<std::vector<std::pair<int, int>>> adj(atoms.size());
  for (int b = 0; b < static_cast<int>(bonds.size()); ++b) {
    adj[bonds[b].a].emplace_back(bonds[b].b, b);
    adj[bonds[b].b].emplace_back(bonds[b].a, b);
  }
  return adj;
}

std::vector<bool> MolGraph::ring_bonds() const {
  const int n = static_cast<int>(atoms.size());
  auto adj = adjacency();
  std::vector<bool> ring(bonds.size(), true);
  std::vector<int> disc(n, -1), low(n, 0);
  int timer = 0;
  std::function<void(int, int)> dfs = [&](int u, int parent_bond) {
    disc[u] = low[u] = timer++;
    for (auto [v, b] : adj[u]) {
      if (b == parent_bond)
        continue;
      if (disc[v] < 0) {
        dfs(v, b);
        low[u] = std::min(low[u], low[v]);
        if (low[v] > disc[u])
          ring[b] = false;
      } else {
        low[u] = std::min(low[u], disc[v]);
      }
    }
  };
  for (int i = 0; i < n; ++i)
    if (disc[i] < 0)
      dfs(i, -1);
  return ring;
}

MolGraph parse(std::string_view s) {
  const auto tokens = tokenize(s);
  MolGraph g;
  std::vector<bool> implicit;

  struct OpenRing {
    int atom;
    std::optional<BondOrder> order;
  };
  std::map<int, OpenRing> rings;
  std::vector<int> branches;
  int prev = -1;
  std::optional<BondOrder> pending;
  bool just_opened_branch = false;

  auto add_bond = [&](int a, int b, std::optional<BondOrder> order,
                      const std::string &dup_msg, std::size_t pos) {
    for (const auto &bd : g.bonds)
      if ((bd.a == a && bd.b == b) || (bd.a == b && bd.b == a))
        throw SmilesError(dup_msg, pos);
    g.bonds.push_back({a, b, order.value_or(BondOrder::kSingle)});
    implicit.push_back(!order.has_value());
  };

  for (const auto &tok : tokens) {
    switch (tok.kind) {
    case TokenKind::kAtom: {
      Atom atom = tok.text[0] == '[' ? parse_bracket(tok.text, tok.position)
                                     : organic_atom(tok.text);
      int idx = static_cast<int>(g.atoms.size());
      g.atoms.push_back(std::move(atom));
      if (prev >= 0) {
        add_bond(prev, idx, pending, "duplicate bond", tok.position);
      } else if (pending) {
        throw SmilesError("bond symbol with no preceding atom", tok.position);
      }
      pending.reset();
      prev = idx;
      just_opened_branch = false;
      break;
    }
    case TokenKind::kBond:
      if (prev < 0)
        throw SmilesError("bond symbol with no preceding atom", tok.position);
      if (pending)
        throw SmilesError("consecutive bond symbols at offset " +
                              std::to_string(tok.position),
                          tok.position);
      pending = bond_from_char(tok.text[0]);
      break;
    case TokenKind::kRingClosure: {
      if (prev < 0 || just_opened_branch)
        throw SmilesError("ring closure with no preceding atom", tok.position);
      const int num = ring_number(tok.text);
      if (auto it = rings.find(num); it != rings.end()) {
        auto [partner, open_order] = it->second;
        const std::string dup = "duplicated ring closure " + std::to_string(num);
        if (partner == prev)
          throw SmilesError(dup, tok.position);
        if (pending && open_order && *pending != *open_order)
          throw SmilesError(
              "conflicting bond orders for ring " + std::to_string(num),
              tok.position);
        add_bond(partner, prev, pending ? pending : open_order, dup,
                 tok.position);
        rings.erase(it);
      } else {
        rings[num] = {prev, pending};
      }
      pending.reset();
      break;
    }
    case TokenKind::kBranchOpen:
      if (prev < 0)
        throw SmilesError("branch with no preceding atom", tok.position);
      if (pending)
        throw SmilesError("bond symbol with no following atom", tok.position);
      branches.push_back(prev);
      just_opened_branch = true;
      break;
    case TokenKind::kBranchClose:
      if (branches.empty())
        throw SmilesError("unmatched ')' at offset " +
                              std::to_string(tok.position),
                          tok.position);
      if (pending)
        throw SmilesError("bond symbol with no following atom", tok.position);
      if (just_opened_branch)
        throw SmilesError("empty branch at offset " +
                              std::to_string(tok.position),
                          tok.position);
      prev = branches.back();
      branches.pop_back();
      break;
    case TokenKind::kDot:
      throw SmilesError("unexpected '.' in single compound", tok.position);
    }
  }

  if (g.atoms.empty())
    throw SmilesError("empty SMILES");
  if (pending)
    throw SmilesError("bond symbol with no following atom", s.size());
  if (!branches.empty())
    throw SmilesError("unmatched '('");
  if (!rings.empty())
    throw SmilesError("unclosed ring " + std::to_string(rings.begin()->first));

  // Unmarked bonds between aromatic atoms are aromatic inside rings and
  // single elsewhere (e.g. the biaryl link in c1ccccc1c1ccccc1).
  const auto ring = g.ring_bonds();
  for (std::size_t b = 0; b < g.bonds.size(); ++b) {
    auto &bd = g.bonds[b];
    if (implicit[b] && ring[b] && g.atoms[bd.a].aromatic &&
        g.atoms[bd.b].aromatic)
      bd.order = BondOrder::kAromatic;
  }
  return g;
}

// Valence ceilings: B 3, C 4, N 3, O 2, P 5, S 6, halogens 1.
// Positive charge raises and negative charge lowers the ceiling on the
// nitrogen and oxygen families; carbon loses one per unit of either sign;
// boron gains one per negative unit. Unknown elements and bracket atoms
// that carry explicit hydrogens are exempt.
std::optional<int> allowed_valence(const Atom &atom) {
  if (atom.bracket && atom.explicit_h > 0)
    return std::nullopt;
  const auto &e = atom.element;
  const int q = atom.charge;
  if (e == "C")
    return 4 - std::abs(q);
  if (e == "B")
    return 3 - q;
  if (e == "N")
    return 3 + q;
  if (e == "P")
    return 5 + q;
  if (e == "O")
    return 2 + q;
  if (e == "S")
    return 6 + q;
  if (e == "F" || e == "Cl" || e == "Br" || e == "I")
    return q == 0 ? 1 : (q > 0 ? 2 : 0);
  return std::nullopt;
}

// Non-aromatic bonds count their order. k aromatic bonds count k, plus one
// for the ring double bond on neutral carbon or boron that has no
// exocyclic multiple bond; heteroatoms may donate a lone pair instead.
int used_valence(const MolGraph &g, int atom) {
  int sum = 0;
  int aromatic = 0;
  bool multiple = false;
  for (const auto &b : g.bonds) {
    if (b.a != atom && b.b != atom)
      continue;
    if (b.order == BondOrder::kAromatic) {
      ++aromatic;
    } else {
      sum += static_cast<int>(b.order);
      multiple |= b.order != BondOrder::kSingle;
    }
  }
  sum += aromatic;
  const auto &a = g.atoms[atom];
  if (aromatic > 0 && !multiple && a.charge == 0 &&
      (a.element == "C" || a.element == "B"))
    sum += 1;
  return sum;
}

namespace {

std::string_view element_name(std::string_view e) {
  if (e == "B") return "boron";
  if (e == "C") return "carbon";
  if (e == "N") return "nitrogen";
  if (e == "O") return "oxygen";
  if (e == "P") return "phosphorus";
  if (e == "S") return "sulfur";
  if (e == "F") return "fluorine";
  if (e == "Cl") return "chlorine";
  if (e == "Br") return "bromine";
  if (e == "I") return "iodine";
  return e;
}

}  // namespace

Validation validate_compound(std::string_view s) {
  MolGraph g;
  try {
    g = parse(s);
  } catch (const SmilesError &e) {
    return {false, e.what(), 0};
  }
  for (int i = 0; i < static_cast<int>(g.atoms.size()); ++i) {
    auto ceiling = allowed_valence(g.atoms[i]);
    if (!ceiling)
      continue;
    const int used = used_valence(g, i);
    if (used > *ceiling)
      return {false,
              std::string(element_name(g.atoms[i].element)) + " valence " +
                  std::to_string(used) + " > " + std::to_string(*ceiling),
              0};
  }
  return {};
}

Validation validate(std::string_view s) {
  auto parts = split(s, '.');
  for (std::size_t i = 0; i < parts.size(); ++i) {
    auto compound = trim(parts[i]);
    if (compound.empty())
      return {false, "empty compound", i};
    if (auto v = validate_compound(compound); !v) {
      v.compound = i;
      return v;
    }
  }
  return {};
}

// --- writing -------------------------------------------------------------

namespace {

std::string atom_text(const Atom &a) {
  if (!a.bracket)
    return a.aromatic ? lower(a.element) : a.element;
  std::string out = "[";
  if (a.isotope)
    out += std::to_string(*a.isotope);
  out += a.aromatic ? lower(a.element) : a.element;
  out += a.chirality;
  if (a.explicit_h > 0) {
    out += 'H';
    if (a.explicit_h > 1)
      out += std::to_string(a.explicit_h);
  }
  if (a.charge != 0) {
    out += a.charge > 0 ? '+' : '-';
    if (std::abs(a.charge) > 1)
      out += std::to_string(std::abs(a.charge));
  }
  out += ']';
  return out;
}

std::string bond_text(const MolGraph &g, const Bond &b, bool ring) {
  const bool aromatic_pair = g.atoms[b.a].aromatic && g.atoms[b.b].aromatic;
  switch (b.order) {
  case BondOrder::kSingle:
    return aromatic_pair ? "-" : "";
  case BondOrder::kDouble:
    return "=";
  case BondOrder::kTriple:
    return "#";
  case BondOrder::kAromatic:
    return aromatic_pair && ring ? "" : ":";
  }
  return "";
}

std::string ring_digit(int d) {
  return d < 10 ? std::to_string(d) : "%" + std::to_string(d);
}

}  // namespace

std::string write_smiles(const MolGraph &g, std::span<const int> priority) {
  const int n = static_cast<int>(g.atoms.size());
  if (static_cast<int>(priority.size()) != n)
    throw DataError("write_smiles: priority size mismatch");
  auto adj = g.adjacency();
  for (auto &nbrs : adj)
    std::sort(nbrs.begin(), nbrs.end(), [&](auto x, auto y) {
      return priority[x.first] < priority[y.first];
    });
  const auto ring = g.ring_bonds();

  struct Closure {
    int bond;
    int opener;
    int closer;
    int digit = -1;
  };
  std::vector<Closure> closures;
  std::vector<std::vector<std::pair<int, int>>> children(n);
  std::vector<std::vector<int>> opens(n), closes(n);
  std::vector<int> order(n, -1);
  std::vector<bool> bond_used(g.bonds.size(), false);
  int counter = 0;

  std::function<void(int)> classify = [&](int u) {
    order[u] = counter++;
    for (auto [v, b] : adj[u]) {
      if (bond_used[b])
        continue;
      bond_used[b] = true;
      if (order[v] < 0) {
        children[u].emplace_back(v, b);
        classify(v);
      } else {
        closes[u].push_back(static_cast<int>(closures.size()));
        closures.push_back({b, v, u});
      }
    }
  };

  std::vector<int> roots;
  {
    std::vector<int> by_priority(n);
    for (int i = 0; i < n; ++i)
      by_priority[i] = i;
    std::sort(by_priority.begin(), by_priority.end(),
              [&](int x, int y) { return priority[x] < priority[y]; });
    for (int i : by_priority) {
      if (order[i] >= 0)
        continue;
      roots.push_back(i);
      classify(i);
    }
  }
  for (int c = 0; c < static_cast<int>(closures.size()); ++c)
    opens[closures[c].opener].push_back(c);
  for (auto &o : opens)
    std::sort(o.begin(), o.end(), [&](int x, int y) {
      return order[closures[x].closer] < order[closures[y].closer];
    });

  std::vector<bool> digit_busy(100, false);
  std::string out;
  std::function<void(int)> emit = [&](int u) {
    out += atom_text(g.atoms[u]);
    for (int c : closes[u]) {
      out += ring_digit(closures[c].digit);
      digit_busy[closures[c].digit] = false;
    }
    for (int c : opens[u]) {
      int d = 1;
      while (d < 100 && digit_busy[d])
        ++d;
      if (d == 100)
        throw DataError("write_smiles: more than 99 open rings");
      digit_busy[d] = true;
      closures[c].digit = d;
      const auto &bd = g.bonds[closures[c].bond];
      out += bond_text(g, bd, ring[closures[c].bond]);
      out += ring_digit(d);
    }
    const auto &kids = children[u];
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const auto &bd = g.bonds[kids[i].second];
      const bool branch = i + 1 < kids.size();
      if (branch)
        out += '(';
      out += bond_text(g, bd, ring[kids[i].second]);
      emit(kids[i].first);
      if (branch)
        out += ')';
    }
  };
  for (std::size_t r = 0; r < roots.size(); ++r) {
    if (r > 0)
      out += '.';
    emit(roots[r]);
  }
  return out;
}

// --- canonicalization ----------------------------------------------------

namespace {

template <class Key>
std::vector<int> dense_ranks(const std::vector<Key> &keys) {
  const int n = static_cast<int>(keys.size());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i)
    idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int x, int y) { return keys[x] < keys[y]; });
  std::vector<int> rank(n, 0);
  int r = 0;
  for (int i = 0; i < n; ++i) {
    if (i > 0 && keys[idx[i - 1]] < keys[idx[i]])
      ++r;
    rank[idx[i]] = r;
  }
  return rank;
}

int class_count(const std::vector<int> &ranks) {
  return ranks.empty() ? 0 : *std::max_element(ranks.begin(), ranks.end()) + 1;
}

class Canonicalizer {
 public:
  explicit Canonicalizer(const MolGraph &g) : g_(g), adj_(g.adjacency()) { }

  std::string run() {
    using Inv = std::tuple<std::string, bool, int, int, int, int, bool,
                           std::string>;
    std::vector<Inv> inv;
    for (int i = 0; i < static_cast<int>(g_.atoms.size()); ++i) {
      const auto &a = g_.atoms[i];
      inv.emplace_back(a.element, a.aromatic, a.charge,
                       static_cast<int>(adj_[i].size()), a.explicit_h,
                       a.isotope.value_or(0), a.bracket, a.chirality);
    }
    search(dense_ranks(inv));
    return best_;
  }

 private:
  static constexpr int kLeafBudget = 256;

  std::vector<int> refine(std::vector<int> ranks) const {
    using Key = std::pair<int, std::vector<int>>;
    while (true) {
      std::vector<Key> keys(ranks.size());
      for (std::size_t i = 0; i < ranks.size(); ++i) {
        keys[i].first = ranks[i];
        for (auto [v, b] : adj_[i])
          keys[i].second.push_back(ranks[v] * 8 +
                                   static_cast<int>(g_.bonds[b].order));
        std::sort(keys[i].second.begin(), keys[i].second.end());
      }
      auto next = dense_ranks(keys);
      if (class_count(next) == class_count(ranks))
        return next;
      ranks = std::move(next);
    }
  }

  // Ties left after refinement are broken by doubling ranks and lowering
  // one tied atom. Every member of the lowest tied class is tried (within
  // a leaf budget) and the smallest resulting string wins, so the result
  // does not depend on input atom order.
  void search(std::vector<int> ranks) {
    ranks = refine(std::move(ranks));
    const int n = static_cast<int>(ranks.size());
    if (class_count(ranks) == n) {
      auto s = write_smiles(g_, ranks);
      if (leaves_ == 0 || s < best_)
        best_ = std::move(s);
      ++leaves_;
      return;
    }
    std::vector<int> size(n, 0);
    for (int r : ranks)
      ++size[r];
    int tied = 0;
    while (size[tied] < 2)
      ++tied;
    bool first = true;
    for (int c = 0; c < n; ++c) {
      if (ranks[c] != tied)
        continue;
      if (!first && leaves_ >= kLeafBudget)
        break;
      first = false;
      std::vector<int> split(n);
      for (int i = 0; i < n; ++i)
        split[i] = 2 * ranks[i];
      split[c] -= 1;
      search(dense_ranks(split));
    }
  }

  const MolGraph &g_;
  std::vector<std::vector<std::pair<int, int>>> adj_;
  std::string best_;
  int leaves_ = 0;
};

// Splits a graph into connected components, preserving atom order.
std::vector<MolGraph> components(const MolGraph &g) {
  const int n = static_cast<int>(g.atoms.size());
  auto adj = g.adjacency();
  std::vector<int> comp(n, -1);
  int count = 0;
  for (int i = 0; i < n; ++i) {
    if (comp[i] >= 0)
      continue;
    std::vector<int> stack{i};
    comp[i] = count;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (auto [v, b] : adj[u])
        if (comp[v] < 0) {
          comp[v] = count;
          stack.push_back(v);
        }
    }
    ++count;
  }
  std::vector<MolGraph> parts(count);
  std::vector<int> local(n);
  for (int i = 0; i < n; ++i) {
    local[i] = static_cast<int>(parts[comp[i]].atoms.size());
    parts[comp[i]].atoms.push_back(g.atoms[i]);
  }
  for (const auto &b : g.bonds)
    parts[comp[b.a]].bonds.push_back({local[b.a], local[b.b], b.order});
  return parts;
}

}  // namespace

std::string canonical_smiles(const MolGraph &g) {
  std::vector<std::string> parts;
  for (const auto &c : components(g))
    parts.push_back(Canonicalizer(c).run());
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0)
      out += '.';
    out += parts[i];
  }
  return out;
}

std::string canonicalize(std::string_view s) {
  if (auto v = validate(s); !v)
    throw DataError("cannot canonicalize invalid SMILES (compound " +
                    std::to_string(v.compound) + ": " + v.reason + ")");
  std::vector<std::string> parts;
  for (auto part : split(s, '.'))
    parts.push_back(canonical_smiles(parse(trim(part))));
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0)
      out += '.';
    out += parts[i];
  }
  return out;
}

// --- fingerprints --------------------------------------------------------

std::size_t Fingerprint::count() const {
  std::size_t c = 0;
  for (auto w : words_)
    c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

Fingerprint &Fingerprint::operator|=(const Fingerprint &o) {
  if (o.width_ != width_)
    throw DataError("fingerprint width mismatch");
  for (std::size_t i = 0; i < words_.size(); ++i)
    words_[i] |= o.words_[i];
  return *this;
}

bool Fingerprint::is_subset_of(const Fingerprint &o) const {
  if (o.width_ != width_)
    throw DataError("fingerprint width mismatch");
  for (std::size_t i = 0; i < words_.size(); ++i)
    if ((words_[i] & ~o.words_[i]) != 0)
      return false;
  return true;
}

namespace {

std::string path_atom_label(const Atom &a) {
  std::string s = a.aromatic ? lower(a.element) : a.element;
  if (a.charge != 0)
    s += (a.charge > 0 ? "+" : "-") + std::to_string(std::abs(a.charge));
  return s;
}

std::string_view path_bond_label(BondOrder o) {
  switch (o) {
  case BondOrder::kSingle:
    return "-";
  case BondOrder::kDouble:
    return "=";
  case BondOrder::kTriple:
    return "#";
  case BondOrder::kAromatic:
    return ":";
  }
  return "?";
}

template <class Visit>
void for_each_path(const MolGraph &g, int max_atoms, Visit &&visit) {
  const int n = static_cast<int>(g.atoms.size());
  auto adj = g.adjacency();
  std::vector<std::string> atom_labels(n);
  for (int i = 0; i < n; ++i)
    atom_labels[i] = path_atom_label(g.atoms[i]);

  std::vector<int> path_atoms;
  std::vector<int> path_bonds;
  std::vector<bool> on_path(n, false);

  auto emit = [&]() {
    std::string fwd, rev;
    const std::size_t k = path_atoms.size();
    for (std::size_t i = 0; i < k; ++i) {
      if (i > 0)
        fwd += path_bond_label(g.bonds[path_bonds[i - 1]].order);
      fwd += atom_labels[path_atoms[i]];
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (i > 0)
        rev += path_bond_label(g.bonds[path_bonds[k - 1 - i]].order);
      rev += atom_labels[path_atoms[k - 1 - i]];
    }
    visit(std::min(fwd, rev));
  };

  std::function<void(int)> extend = [&](int u) {
    emit();
    if (static_cast<int>(path_atoms.size()) == max_atoms)
      return;
    for (auto [v, b] : adj[u]) {
      if (on_path[v])
        continue;
      on_path[v] = true;
      path_atoms.push_back(v);
      path_bonds.push_back(b);
      extend(v);
      path_atoms.pop_back();
      path_bonds.pop_back();
      on_path[v] = false;
    }
  };

  for (int s = 0; s < n; ++s) {
    on_path[s] = true;
    path_atoms.push_back(s);
    extend(s);
    path_atoms.pop_back();
    on_path[s] = false;
  }
}

}  // namespace

std::vector<std::string> path_strings(const MolGraph &g, int max_atoms) {
  std::vector<std::string> out;
  for_each_path(g, max_atoms, [&](std::string s) { out.push_back(std::move(s)); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Fingerprint fingerprint(const MolGraph &g, std::size_t width, int max_atoms) {
  Fingerprint fp(width);
  for_each_path(g, max_atoms,
                [&](const std::string &s) { fp.set(bucket_hash(s) % width); });
  return fp;
}

double tanimoto(const Fingerprint &a, const Fingerprint &b) {
  if (a.width() != b.width())
    throw DataError("fingerprint width mismatch: " + std::to_string(a.width()) +
                    " vs " + std::to_string(b.width()));
  std::size_t both = 0, either = 0;
  auto wa = a.words();
  auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) {
    both += static_cast<std::size_t>(std::popcount(wa[i] & wb[i]));
    either += static_cast<std::size_t>(std::popcount(wa[i] | wb[i]));
  }
  if (either == 0)
    return 1.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

// --- regex tokens --------------------------------------------------------

namespace {

bool lex_word(std::string_view w, std::vector<std::string> &out) {
  constexpr std::string_view kSingles = "BCNOSPFIbcnosp()\\.=#-+/:~@?>*$";
  std::vector<std::string> toks;
  std::size_t i = 0;
  while (i < w.size()) {
    const char c = w[i];
    if (c == '[') {
      auto close = w.find(']', i + 1);
      if (close == std::string_view::npos || close == i + 1)
        return false;
      toks.emplace_back(w.substr(i, close - i + 1));
      i = close + 1;
    } else if ((c == 'B' && i + 1 < w.size() && w[i + 1] == 'r') ||
               (c == 'C' && i + 1 < w.size() && w[i + 1] == 'l')) {
      toks.emplace_back(w.substr(i, 2));
      i += 2;
    } else if (c == '%' && i + 2 < w.size() &&
               std::isdigit(static_cast<unsigned char>(w[i + 1])) &&
               std::isdigit(static_cast<unsigned char>(w[i + 2]))) {
      toks.emplace_back(w.substr(i, 3));
      i += 3;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               kSingles.find(c) != std::string_view::npos) {
      toks.emplace_back(1, c);
      ++i;
    } else {
      return false;
    }
  }
  out.insert(out.end(), toks.begin(), toks.end());
  return true;
}

}  // namespace

std::vector<std::string> regex_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])))
      ++i;
    if (i > start) {
      auto word = text.substr(start, i - start);
      if (!lex_word(word, out))
        out.emplace_back(word);
    }
  }
  return out;
}

}  // namespace rxnelicit::smiles
