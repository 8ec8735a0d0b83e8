#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "janus/element.hpp"
#include "janus/error.hpp"
#include "janus/molgraph.hpp"

namespace janus {

namespace detail {

struct ParsedAtom {
  Element element = Element::C;
  int charge = 0;
  int explicit_h = -1;  // -1: organic-subset atom, hydrogens implied
  bool aromatic = false;
};

struct ParsedBond {
  int a;
  int b;
  int order;  // 0 while the bond is an unresolved aromatic bond
};

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view text) : text_(text) {}

  MolGraph parse() {
    if (text_.empty()) fail("empty input");
    while (pos_ < text_.size()) step();
    if (!branch_stack_.empty()) fail("unclosed branch");
    if (pending_bond_) fail("dangling bond symbol");
    if (!open_rings_.empty()) fail("unclosed ring bond " + std::to_string(open_rings_.begin()->first));
    if (atoms_.empty()) fail("no atoms");
    kekulize();
    return finish();
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("SMILES '" + std::string(text_) + "' at " + std::to_string(pos_) + ": " + what);
  }

  void step() {
    char c = text_[pos_];
    switch (c) {
      case '(':
        if (prev_ < 0) fail("branch before any atom");
        if (pending_bond_) fail("bond symbol before branch");
        branch_stack_.push_back(prev_);
        just_opened_ = true;
        ++pos_;
        return;
      case ')':
        if (branch_stack_.empty()) fail("unbalanced ')'");
        if (just_opened_) fail("empty branch");
        if (pending_bond_) fail("dangling bond symbol");
        prev_ = branch_stack_.back();
        branch_stack_.pop_back();
        ++pos_;
        return;
      case '-':
      case '=':
      case '#':
        if (pending_bond_) fail("two consecutive bond symbols");
        if (prev_ < 0) fail("bond before any atom");
        pending_bond_ = c == '-' ? 1 : c == '=' ? 2 : 3;
        ++pos_;
        return;
      case '.':
        fail("disconnected input ('.') is not supported");
      case '[':
        add_atom(parse_bracket());
        return;
      case '%': {
        if (pos_ + 2 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])) ||
            !std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))) {
          fail("'%' must be followed by two digits");
        }
        int num = (text_[pos_ + 1] - '0') * 10 + (text_[pos_ + 2] - '0');
        pos_ += 3;
        ring_bond(num);
        return;
      }
      default:
        break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ++pos_;
      ring_bond(c - '0');
      return;
    }
    add_atom(parse_organic());
  }

  ParsedAtom parse_organic() {
    char c = text_[pos_];
    ParsedAtom a;
    auto next = pos_ + 1 < text_.size() ? text_[pos_ + 1] : '\0';
    if (c == 'C' && next == 'l') {
      a.element = Element::Cl;
      pos_ += 2;
      return a;
    }
    if (c == 'B' && next == 'r') {
      a.element = Element::Br;
      pos_ += 2;
      return a;
    }
    switch (c) {
      case 'B': a.element = Element::B; break;
      case 'C': a.element = Element::C; break;
      case 'N': a.element = Element::N; break;
      case 'O': a.element = Element::O; break;
      case 'P': a.element = Element::P; break;
      case 'S': a.element = Element::S; break;
      case 'F': a.element = Element::F; break;
      case 'I': a.element = Element::I; break;
      case 'b': a.element = Element::B; a.aromatic = true; break;
      case 'c': a.element = Element::C; a.aromatic = true; break;
      case 'n': a.element = Element::N; a.aromatic = true; break;
      case 'o': a.element = Element::O; a.aromatic = true; break;
      case 'p': a.element = Element::P; a.aromatic = true; break;
      case 's': a.element = Element::S; a.aromatic = true; break;
      default: fail(std::string("unsupported character '") + c + "'");
    }
    ++pos_;
    return a;
  }

  ParsedAtom parse_bracket() {
    ++pos_;  // '['
    auto peek = [&]() -> char { return pos_ < text_.size() ? text_[pos_] : '\0'; };
    if (std::isdigit(static_cast<unsigned char>(peek()))) fail("isotopes are not supported");
    ParsedAtom a;
    a.explicit_h = 0;
    char c = peek();
    if (std::islower(static_cast<unsigned char>(c))) {
      switch (c) {
        case 'b': a.element = Element::B; break;
        case 'c': a.element = Element::C; break;
        case 'n': a.element = Element::N; break;
        case 'o': a.element = Element::O; break;
        case 'p': a.element = Element::P; break;
        case 's': a.element = Element::S; break;
        default: fail(std::string("unknown aromatic symbol '") + c + "'");
      }
      a.aromatic = true;
      ++pos_;
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      std::optional<Element> e;
      if (pos_ + 1 < text_.size() && std::islower(static_cast<unsigned char>(text_[pos_ + 1]))) {
        e = element_from_symbol(text_.substr(pos_, 2));
        if (e) pos_ += 2;
      }
      if (!e) {
        e = element_from_symbol(text_.substr(pos_, 1));
        if (!e) fail("unknown atom symbol");
        ++pos_;
      }
      a.element = *e;
    } else {
      fail("expected atom symbol in bracket");
    }
    if (peek() == '@') fail("stereochemistry is not supported");
    if (peek() == 'H') {
      ++pos_;
      a.explicit_h = 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        a.explicit_h = peek() - '0';
        ++pos_;
      }
    }
    if (peek() == '+' || peek() == '-') {
      char sign = peek();
      int mag = 1;
      ++pos_;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        mag = peek() - '0';
        ++pos_;
      } else {
        while (peek() == sign) {
          ++mag;
          ++pos_;
        }
      }
      a.charge = sign == '+' ? mag : -mag;
      if (a.charge < kMinCharge || a.charge > kMaxCharge) fail("charge outside [-2, +2]");
    }
    if (peek() == ':') fail("atom classes are not supported");
    if (peek() != ']') fail("expected ']'");
    ++pos_;
    return a;
  }

  void add_atom(const ParsedAtom& a) {
    int idx = static_cast<int>(atoms_.size());
    atoms_.push_back(a);
    if (prev_ >= 0) {
      int order = pending_bond_;
      if (order == 0) order = (a.aromatic && atoms_[static_cast<std::size_t>(prev_)].aromatic) ? 0 : 1;
      bonds_.push_back({prev_, idx, order});
    }
    pending_bond_ = 0;
    prev_ = idx;
    just_opened_ = false;
  }

  void ring_bond(int num) {
    if (prev_ < 0) fail("ring bond before any atom");
    auto it = open_rings_.find(num);
    if (it == open_rings_.end()) {
      open_rings_[num] = {prev_, pending_bond_};
      pending_bond_ = 0;
      return;
    }
    auto [other, open_order] = it->second;
    open_rings_.erase(it);
    if (other == prev_) fail("ring bond to itself");
    for (const ParsedBond& b : bonds_) {
      if ((b.a == other && b.b == prev_) || (b.a == prev_ && b.b == other)) fail("duplicate ring bond");
    }
    int order = pending_bond_;
    if (open_order != 0 && order != 0 && open_order != order) fail("conflicting ring bond orders");
    if (order == 0) order = open_order;
    if (order == 0) {
      bool arom = atoms_[static_cast<std::size_t>(other)].aromatic && atoms_[static_cast<std::size_t>(prev_)].aromatic;
      order = arom ? 0 : 1;
    }
    bonds_.push_back({other, prev_, order});
    pending_bond_ = 0;
  }

  // Turns aromatic bonds into an alternating single/double assignment by
  // perfect matching over the atoms that still need a double bond.
  void kekulize() {
    const std::size_t n = atoms_.size();
    std::vector<int> sigma(n, 0);
    std::vector<std::vector<int>> arom_adj(n);
    bool any = false;
    for (std::size_t i = 0; i < bonds_.size(); ++i) {
      const ParsedBond& b = bonds_[i];
      int w = b.order == 0 ? 1 : b.order;
      sigma[static_cast<std::size_t>(b.a)] += w;
      sigma[static_cast<std::size_t>(b.b)] += w;
      if (b.order == 0) {
        any = true;
        arom_adj[static_cast<std::size_t>(b.a)].push_back(static_cast<int>(i));
        arom_adj[static_cast<std::size_t>(b.b)].push_back(static_cast<int>(i));
      }
    }
    if (!any) return;
    std::vector<char> needs(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!atoms_[i].aromatic || arom_adj[i].empty()) continue;
      int h = atoms_[i].explicit_h < 0 ? 0 : atoms_[i].explicit_h;
      auto free = default_hydrogens(atoms_[i].element, atoms_[i].charge, sigma[i] + h);
      needs[i] = free && *free >= 1;
    }
    std::vector<int> mate(n, -1);
    std::vector<int> nodes;
    for (std::size_t i = 0; i < n; ++i) {
      if (needs[i]) nodes.push_back(static_cast<int>(i));
    }
    auto partner = [&](int atom, int bond) { return bonds_[static_cast<std::size_t>(bond)].a == atom
                                                        ? bonds_[static_cast<std::size_t>(bond)].b
                                                        : bonds_[static_cast<std::size_t>(bond)].a; };
    // choose the most constrained unmatched atom first
    std::function<bool()> solve = [&]() -> bool {
      int best = -1;
      int best_opts = 1 << 30;
      for (int a : nodes) {
        if (mate[static_cast<std::size_t>(a)] >= 0) continue;
        int opts = 0;
        for (int bd : arom_adj[static_cast<std::size_t>(a)]) {
          int p = partner(a, bd);
          if (needs[static_cast<std::size_t>(p)] && mate[static_cast<std::size_t>(p)] < 0) ++opts;
        }
        if (opts < best_opts) {
          best_opts = opts;
          best = a;
        }
      }
      if (best < 0) return true;
      if (best_opts == 0) return false;
      for (int bd : arom_adj[static_cast<std::size_t>(best)]) {
        int p = partner(best, bd);
        if (!needs[static_cast<std::size_t>(p)] || mate[static_cast<std::size_t>(p)] >= 0) continue;
        mate[static_cast<std::size_t>(best)] = bd;
        mate[static_cast<std::size_t>(p)] = bd;
        if (solve()) return true;
        mate[static_cast<std::size_t>(best)] = -1;
        mate[static_cast<std::size_t>(p)] = -1;
      }
      return false;
    };
    if (!solve()) fail("cannot kekulize aromatic system");
    for (std::size_t i = 0; i < bonds_.size(); ++i) {
      if (bonds_[i].order != 0) continue;
      bool dbl = mate[static_cast<std::size_t>(bonds_[i].a)] == static_cast<int>(i);
      bonds_[i].order = dbl ? 2 : 1;
    }
  }

  MolGraph finish() {
    std::vector<int> sum(atoms_.size(), 0);
    std::vector<Bond> bonds;
    bonds.reserve(bonds_.size());
    for (const ParsedBond& b : bonds_) {
      sum[static_cast<std::size_t>(b.a)] += b.order;
      sum[static_cast<std::size_t>(b.b)] += b.order;
      bonds.push_back({b.a, b.b, b.order});
    }
    std::vector<Atom> atoms;
    atoms.reserve(atoms_.size());
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const ParsedAtom& p = atoms_[i];
      Atom a{p.element, p.charge, 0};
      if (p.explicit_h < 0) {
        auto h = default_hydrogens(p.element, p.charge, sum[i]);
        if (!h) throw ValenceError("SMILES '" + std::string(text_) + "': valence exceeded at atom " + std::to_string(i));
        a.implicit_h = *h;
      } else {
        a.implicit_h = p.explicit_h;
        if (!is_valence_valid(p.element, p.charge, sum[i], p.explicit_h)) {
          throw ValenceError("SMILES '" + std::string(text_) + "': invalid valence at atom " + std::to_string(i));
        }
      }
      atoms.push_back(a);
    }
    return MolGraph(std::move(atoms), std::move(bonds));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<ParsedAtom> atoms_;
  std::vector<ParsedBond> bonds_;
  std::vector<int> branch_stack_;
  std::map<int, std::pair<int, int>> open_rings_;  // digit -> (atom, order or 0)
  int prev_ = -1;
  int pending_bond_ = 0;
  bool just_opened_ = false;
};

inline bool needs_brackets(const MolGraph& g, int i) {
  const Atom& a = g.atom(i);
  if (a.charge != 0) return true;
  auto h = default_hydrogens(a.element, 0, g.bond_order_sum(i));
  return !h || *h != a.implicit_h;
}

inline void append_atom(std::string& out, const MolGraph& g, int i) {
  const Atom& a = g.atom(i);
  if (!needs_brackets(g, i)) {
    out += symbol(a.element);
    return;
  }
  out += '[';
  out += symbol(a.element);
  if (a.implicit_h > 0) {
    out += 'H';
    if (a.implicit_h > 1) out += std::to_string(a.implicit_h);
  }
  if (a.charge != 0) {
    out += a.charge > 0 ? '+' : '-';
    if (std::abs(a.charge) > 1) out += std::to_string(std::abs(a.charge));
  }
  out += ']';
}

inline void append_bond(std::string& out, int order) {
  if (order == 2) out += '=';
  if (order == 3) out += '#';
}

inline void append_ring_label(std::string& out, int label) {
  if (label < 10) {
    out += static_cast<char>('0' + label);
  } else {
    out += '%';
    out += std::to_string(label);
  }
}

}  // namespace detail

/// Parses the supported SMILES subset.  Aromatic input is kekulized.
inline MolGraph parse_smiles(std::string_view text) { return detail::SmilesParser(text).parse(); }

/// Writes SMILES by depth-first traversal: the lowest-priority atom starts
/// and neighbours are visited in ascending priority.  `priority` must be a
/// permutation-like ranking (distinct values) for a deterministic string.
inline std::string write_smiles_with_priority(const MolGraph& g, std::span<const int> priority) {
  const int n = static_cast<int>(g.atom_count());
  std::string out;
  if (n == 0) return out;

  std::vector<int> order_pos(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
  std::vector<int> child_bond(static_cast<std::size_t>(n), -1);  // bond to tree parent
  std::vector<char> ring_bond(g.bond_count(), 0);
  std::vector<std::vector<int>> ring_bonds_at(static_cast<std::size_t>(n));
  int counter = 0;

  auto sorted_neighbors = [&](int a) {
    std::vector<Neighbor> nb(g.neighbors(a).begin(), g.neighbors(a).end());
    std::sort(nb.begin(), nb.end(), [&](const Neighbor& x, const Neighbor& y) {
      return priority[static_cast<std::size_t>(x.atom)] < priority[static_cast<std::size_t>(y.atom)];
    });
    return nb;
  };

  std::function<void(int, int)> dfs = [&](int a, int via) {
    order_pos[static_cast<std::size_t>(a)] = counter++;
    for (const Neighbor& nb : sorted_neighbors(a)) {
      if (nb.bond == via) continue;
      if (order_pos[static_cast<std::size_t>(nb.atom)] >= 0) {
        if (!ring_bond[static_cast<std::size_t>(nb.bond)]) {
          ring_bond[static_cast<std::size_t>(nb.bond)] = 1;
          ring_bonds_at[static_cast<std::size_t>(a)].push_back(nb.bond);
          ring_bonds_at[static_cast<std::size_t>(nb.atom)].push_back(nb.bond);
        }
        continue;
      }
      children[static_cast<std::size_t>(a)].push_back(nb.atom);
      child_bond[static_cast<std::size_t>(nb.atom)] = nb.bond;
      dfs(nb.atom, nb.bond);
    }
  };

  std::vector<int> label_of_bond(g.bond_count(), -1);
  std::vector<char> label_used(100, 0);

  std::function<void(int)> emit = [&](int a) {
    detail::append_atom(out, g, a);
    auto& rb = ring_bonds_at[static_cast<std::size_t>(a)];
    std::sort(rb.begin(), rb.end(), [&](int x, int y) {
      int px = order_pos[static_cast<std::size_t>(g.bond(x).other(a))];
      int py = order_pos[static_cast<std::size_t>(g.bond(y).other(a))];
      return px < py;
    });
    std::vector<int> freed;
    for (int bd : rb) {  // closings: partner written earlier
      if (order_pos[static_cast<std::size_t>(g.bond(bd).other(a))] > order_pos[static_cast<std::size_t>(a)]) continue;
      detail::append_ring_label(out, label_of_bond[static_cast<std::size_t>(bd)]);
      freed.push_back(label_of_bond[static_cast<std::size_t>(bd)]);
    }
    for (int bd : rb) {  // openings
      if (order_pos[static_cast<std::size_t>(g.bond(bd).other(a))] < order_pos[static_cast<std::size_t>(a)]) continue;
      int label = 1;
      while (label_used[static_cast<std::size_t>(label)]) ++label;
      if (label > 99) throw Error("too many simultaneous ring bonds to write SMILES");
      label_used[static_cast<std::size_t>(label)] = 1;
      label_of_bond[static_cast<std::size_t>(bd)] = label;
      detail::append_bond(out, g.bond(bd).order);
      detail::append_ring_label(out, label);
    }
    for (int l : freed) label_used[static_cast<std::size_t>(l)] = 0;
    const auto& ch = children[static_cast<std::size_t>(a)];
    for (std::size_t k = 0; k < ch.size(); ++k) {
      bool last = k + 1 == ch.size();
      if (!last) out += '(';
      detail::append_bond(out, g.bond(child_bond[static_cast<std::size_t>(ch[k])]).order);
      emit(ch[k]);
      if (!last) out += ')';
    }
  };

  // components in order of their lowest-priority atom, joined with '.'
  std::vector<int> atoms_by_priority(static_cast<std::size_t>(n));
  std::iota(atoms_by_priority.begin(), atoms_by_priority.end(), 0);
  std::sort(atoms_by_priority.begin(), atoms_by_priority.end(), [&](int x, int y) {
    return priority[static_cast<std::size_t>(x)] < priority[static_cast<std::size_t>(y)];
  });
  bool first = true;
  for (int start : atoms_by_priority) {
    if (order_pos[static_cast<std::size_t>(start)] >= 0) continue;
    dfs(start, -1);
    if (!first) out += '.';
    first = false;
    emit(start);
  }
  return out;
}

}  // namespace janus
