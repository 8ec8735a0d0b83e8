#pragma once

// Robust token grammar: every token sequence decodes to a valence-valid,
// connected molecular graph.
//
// Decoding keeps a current attachment atom and its remaining valence.  An
// atom token attaches with order min(token order, remaining valence of the
// current atom, capacity of the new atom); when the current atom is already
// saturated the token closes the enclosing branch (or ends derivation at top
// level).  Branch and ring tokens read `level` following tokens as base-N
// digits (N = alphabet size, digit = alphabet position, pad = 0): a branch
// derives the next Q+1 tokens from the current atom, a ring bonds the current
// atom to the atom Q+1 steps back in derivation order.

#include <algorithm>
#include <cctype>
#include <compare>
#include <functional>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "janus/element.hpp"
#include "janus/error.hpp"
#include "janus/molgraph.hpp"
#include "janus/random.hpp"

namespace janus {

enum class TokenKind : std::uint8_t { Pad, Atom, Branch, Ring };

struct Token {
  TokenKind kind = TokenKind::Pad;
  Element element = Element::C;  // atom
  std::int8_t charge = 0;        // atom
  std::int8_t order = 1;         // atom / ring bond order
  std::int8_t level = 1;         // branch / ring payload length

  static Token pad() { return {}; }

  static Token atom(Element e, int order = 1, int charge = 0) {
    if (order < 1 || order > 3) throw PreconditionError("atom token bond order must be 1..3");
    if (charge < kMinCharge || charge > kMaxCharge || allowed_valences(e, charge).empty()) {
      throw PreconditionError("impossible atom token charge");
    }
    return {TokenKind::Atom, e, static_cast<std::int8_t>(charge), static_cast<std::int8_t>(order), 1};
  }

  static Token branch(int level) {
    if (level < 1 || level > 3) throw PreconditionError("branch level must be 1..3");
    return {TokenKind::Branch, Element::C, 0, 1, static_cast<std::int8_t>(level)};
  }

  static Token ring(int level, int order = 1) {
    if (level < 1 || level > 3) throw PreconditionError("ring level must be 1..3");
    if (order < 1 || order > 3) throw PreconditionError("ring bond order must be 1..3");
    return {TokenKind::Ring, Element::C, 0, static_cast<std::int8_t>(order), static_cast<std::int8_t>(level)};
  }

  std::string text() const {
    std::string bond = order == 2 ? "=" : order == 3 ? "#" : "";
    switch (kind) {
      case TokenKind::Pad: return "[nop]";
      case TokenKind::Branch: return "[Branch" + std::to_string(level) + "]";
      case TokenKind::Ring: return "[" + bond + "Ring" + std::to_string(level) + "]";
      case TokenKind::Atom: {
        std::string s = "[" + bond + std::string(symbol(element));
        if (charge != 0) s += (charge > 0 ? "+" : "-") + std::to_string(charge > 0 ? charge : -charge);
        return s + "]";
      }
    }
    return "[?]";
  }

  // Normalized tuple so unused fields never affect comparison.
  auto key() const {
    switch (kind) {
      case TokenKind::Pad: return std::tuple<int, int, int, int, int>(0, 0, 0, 0, 0);
      case TokenKind::Atom: return std::tuple<int, int, int, int, int>(1, static_cast<int>(element), charge, order, 0);
      case TokenKind::Branch: return std::tuple<int, int, int, int, int>(2, 0, 0, 0, level);
      case TokenKind::Ring: return std::tuple<int, int, int, int, int>(3, 0, 0, order, level);
    }
    return std::tuple<int, int, int, int, int>(0, 0, 0, 0, 0);
  }
  friend bool operator==(const Token& a, const Token& b) { return a.key() == b.key(); }
  friend auto operator<=>(const Token& a, const Token& b) { return a.key() <=> b.key(); }
};

/// Ordered token set.  A token's position is the integer it stands for when
/// read as a branch/ring payload digit; the pad token is always position 0.
class Alphabet {
 public:
  explicit Alphabet(std::vector<Token> tokens) {
    tokens_.push_back(Token::pad());
    for (const Token& t : tokens) add(t);
  }

  std::size_t size() const { return tokens_.size(); }
  const Token& token_at(std::size_t i) const { return tokens_[i]; }
  std::span<const Token> tokens() const { return tokens_; }

  /// Position of `t`; tokens outside the alphabet read as 0.
  std::size_t index_of(const Token& t) const {
    auto it = index_.find(t);
    return it == index_.end() ? 0 : it->second;
  }
  bool contains(const Token& t) const { return index_.count(t) > 0; }

  /// Appends any new tokens (order preserved).  Returns true if it grew.
  bool extend(std::span<const Token> tokens) {
    std::size_t before = tokens_.size();
    for (const Token& t : tokens) add(t);
    return tokens_.size() != before;
  }

 private:
  void add(const Token& t) {
    if (t.kind == TokenKind::Pad) {
      index_.emplace(t, 0);
      return;
    }
    if (index_.emplace(t, tokens_.size()).second) tokens_.push_back(t);
  }

  std::vector<Token> tokens_;
  std::map<Token, std::size_t> index_;
};

/// Atom tokens for every supported element and bond order up to the
/// element's decoder capacity, two branch levels, two ring levels, pad.
inline Alphabet default_alphabet() {
  std::vector<Token> toks;
  for (Element e : {Element::C, Element::N, Element::O, Element::S, Element::P, Element::F, Element::Cl,
                    Element::Br, Element::B, Element::I}) {
    int max_order = std::min(3, decoder_capacity(e));
    for (int o = 1; o <= max_order; ++o) toks.push_back(Token::atom(e, o));
  }
  toks.push_back(Token::branch(1));
  toks.push_back(Token::branch(2));
  toks.push_back(Token::ring(1));
  toks.push_back(Token::ring(2));
  return Alphabet(std::move(toks));
}

struct SelfiesString {
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }

  std::string text() const {
    std::string s;
    for (const Token& t : tokens) s += t.text();
    return s;
  }

  friend bool operator==(const SelfiesString&, const SelfiesString&) = default;
  friend auto operator<=>(const SelfiesString& a, const SelfiesString& b) { return a.tokens <=> b.tokens; }
};

inline Token parse_token(std::string_view body) {
  auto bad = [&]() -> ParseError { return ParseError("unknown token [" + std::string(body) + "]"); };
  if (body == "nop") return Token::pad();
  int order = 1;
  std::string_view rest = body;
  if (!rest.empty() && (rest[0] == '=' || rest[0] == '#')) {
    order = rest[0] == '=' ? 2 : 3;
    rest.remove_prefix(1);
  }
  auto level_of = [&](std::string_view prefix) -> int {
    if (rest.size() != prefix.size() + 1 || rest.substr(0, prefix.size()) != prefix) return 0;
    char d = rest.back();
    return (d >= '1' && d <= '3') ? d - '0' : -1;
  };
  if (int l = level_of("Branch"); l != 0) {
    if (l < 0 || order != 1) throw bad();
    return Token::branch(l);
  }
  if (int l = level_of("Ring"); l != 0) {
    if (l < 0) throw bad();
    return Token::ring(l, order);
  }
  std::size_t sym_len = (rest.size() >= 2 && std::islower(static_cast<unsigned char>(rest[1]))) ? 2 : 1;
  if (rest.empty()) throw bad();
  auto e = element_from_symbol(rest.substr(0, sym_len));
  if (!e) throw bad();
  rest.remove_prefix(sym_len);
  int charge = 0;
  if (!rest.empty()) {
    if (rest[0] != '+' && rest[0] != '-') throw bad();
    int sign = rest[0] == '+' ? 1 : -1;
    rest.remove_prefix(1);
    int mag = 1;
    if (rest.size() == 1 && rest[0] >= '1' && rest[0] <= '2') {
      mag = rest[0] - '0';
    } else if (!rest.empty()) {
      throw bad();
    }
    charge = sign * mag;
  }
  try {
    return Token::atom(*e, order, charge);
  } catch (const PreconditionError&) {
    throw bad();
  }
}

/// Parses the bracketed text form, e.g. "[C][=C][Branch1][C][O]".
inline SelfiesString parse_selfies(std::string_view text) {
  SelfiesString s;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '[') throw ParseError("expected '[' at offset " + std::to_string(i));
    auto close = text.find(']', i);
    if (close == std::string_view::npos) throw ParseError("unterminated token at offset " + std::to_string(i));
    s.tokens.push_back(parse_token(text.substr(i + 1, close - i - 1)));
    i = close + 1;
  }
  return s;
}

namespace detail {

class GrammarDecoder {
 public:
  GrammarDecoder(std::span<const Token> toks, const Alphabet& alphabet) : toks_(toks), alphabet_(alphabet) {}

  MolGraph decode() {
    std::size_t i = 0;
    derive(i, toks_.size(), -1, true);
    if (atoms_.empty()) return MolGraph::with_default_hydrogens({Atom{Element::C, 0, 0}}, {});
    return MolGraph::with_default_hydrogens(std::move(atoms_), std::move(bonds_));
  }

 private:
  int new_atom(const Token& t) {
    atoms_.push_back(Atom{t.element, t.charge, 0});
    remaining_.push_back(decoder_capacity(t.element, t.charge));
    return static_cast<int>(atoms_.size()) - 1;
  }

  bool bonded(int x, int y) const {
    for (const Bond& b : bonds_) {
      if ((b.a == x && b.b == y) || (b.a == y && b.b == x)) return true;
    }
    return false;
  }

  void add_bond(int x, int y, int order) {
    bonds_.push_back({x, y, order});
    remaining_[static_cast<std::size_t>(x)] -= order;
    remaining_[static_cast<std::size_t>(y)] -= order;
  }

  std::size_t read_index(std::size_t& i, int level, std::size_t end) const {
    std::size_t value = 0;
    for (int k = 0; k < level && i < end; ++k, ++i) value = value * alphabet_.size() + alphabet_.index_of(toks_[i]);
    return value;
  }

  // Returns false when derivation must stop entirely.
  bool derive(std::size_t& i, std::size_t end, int current, bool top) {
    while (i < end) {
      const Token& t = toks_[i];
      switch (t.kind) {
        case TokenKind::Pad:
          ++i;
          break;
        case TokenKind::Atom: {
          if (current < 0) {
            current = new_atom(t);
            ++i;
            break;
          }
          int rem = remaining_[static_cast<std::size_t>(current)];
          if (rem == 0) {
            // saturated: closes this branch, or ends derivation at top level
            i = end;
            return !top;
          }
          int order = std::min({static_cast<int>(t.order), rem, decoder_capacity(t.element, t.charge)});
          ++i;
          if (order < 1) break;
          int next = new_atom(t);
          add_bond(current, next, order);
          current = next;
          break;
        }
        case TokenKind::Branch: {
          ++i;
          std::size_t q = read_index(i, t.level, end);
          std::size_t stop = std::min(end, i + std::min(q + 1, end - i));
          if (current >= 0 && remaining_[static_cast<std::size_t>(current)] > 0) {
            std::size_t j = i;
            derive(j, stop, current, false);
          }
          i = stop;
          break;
        }
        case TokenKind::Ring: {
          ++i;
          std::size_t q = read_index(i, t.level, end);
          if (current < 0) break;
          std::size_t back = q + 1;
          int target = static_cast<std::size_t>(current) > back ? current - static_cast<int>(back) : 0;
          if (target == current || bonded(current, target)) break;
          int order = std::min({static_cast<int>(t.order), remaining_[static_cast<std::size_t>(current)],
                                remaining_[static_cast<std::size_t>(target)]});
          if (order >= 1) add_bond(current, target, order);
          break;
        }
      }
    }
    return true;
  }

  std::span<const Token> toks_;
  const Alphabet& alphabet_;
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<int> remaining_;
};

inline void append_payload(std::vector<Token>& out, std::size_t value, int level, const Alphabet& alphabet) {
  std::vector<Token> digits(static_cast<std::size_t>(level));
  for (int k = level - 1; k >= 0; --k) {
    digits[static_cast<std::size_t>(k)] = alphabet.token_at(value % alphabet.size());
    value /= alphabet.size();
  }
  out.insert(out.end(), digits.begin(), digits.end());
}

inline int payload_level(std::size_t value, std::size_t base) {
  std::size_t cap = base;
  for (int level = 1; level <= 3; ++level, cap *= base) {
    if (value < cap) return level;
  }
  throw UnsupportedError("branch or ring payload too large for a level-3 token");
}

}  // namespace detail

/// Total decoder: any token sequence yields a valid connected graph.  Empty
/// or fully ignored input yields a single carbon.
inline MolGraph decode(const SelfiesString& s, const Alphabet& alphabet) {
  return detail::GrammarDecoder(s.tokens, alphabet).decode();
}

/// Encodes by depth-first traversal from atom 0, visiting neighbours in index
/// order, so a relabeled graph yields a different (equivalent) string.
inline SelfiesString encode(const MolGraph& g, const Alphabet& alphabet) {
  const int n = static_cast<int>(g.atom_count());
  if (n == 0) throw PreconditionError("cannot encode an empty graph");
  if (!g.is_connected()) throw UnsupportedError("cannot encode a disconnected graph");
  for (int a = 0; a < n; ++a) {
    const Atom& at = g.atom(a);
    int sum = g.bond_order_sum(a);
    auto h = default_hydrogens(at.element, at.charge, sum);
    if (sum > decoder_capacity(at.element, at.charge) || !h || *h != at.implicit_h) {
      throw UnsupportedError("atom " + std::to_string(a) + " (" + std::string(symbol(at.element)) +
                             ") has a valence the grammar cannot express");
    }
  }

  std::vector<int> pos(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
  std::vector<int> parent_order(static_cast<std::size_t>(n), 1);
  std::vector<std::vector<std::pair<int, int>>> closures(static_cast<std::size_t>(n));  // (earlier atom, order)
  std::vector<char> used(g.bond_count(), 0);
  int counter = 0;
  std::function<void(int)> dfs = [&](int a) {
    pos[static_cast<std::size_t>(a)] = counter++;
    for (const Neighbor& nb : g.neighbors(a)) {
      if (used[static_cast<std::size_t>(nb.bond)]) continue;
      used[static_cast<std::size_t>(nb.bond)] = 1;
      int order = g.bond(nb.bond).order;
      if (pos[static_cast<std::size_t>(nb.atom)] >= 0) {
        closures[static_cast<std::size_t>(a)].emplace_back(nb.atom, order);
        continue;
      }
      children[static_cast<std::size_t>(a)].push_back(nb.atom);
      parent_order[static_cast<std::size_t>(nb.atom)] = order;
      dfs(nb.atom);
    }
  };
  dfs(0);

  std::function<std::vector<Token>(int)> emit = [&](int a) {
    std::vector<Token> out;
    const Atom& at = g.atom(a);
    out.push_back(Token::atom(at.element, parent_order[static_cast<std::size_t>(a)], at.charge));
    for (auto [earlier, order] : closures[static_cast<std::size_t>(a)]) {
      std::size_t q = static_cast<std::size_t>(pos[static_cast<std::size_t>(a)] - pos[static_cast<std::size_t>(earlier)] - 1);
      int level = detail::payload_level(q, alphabet.size());
      out.push_back(Token::ring(level, order));
      detail::append_payload(out, q, level, alphabet);
    }
    const auto& ch = children[static_cast<std::size_t>(a)];
    for (std::size_t k = 0; k < ch.size(); ++k) {
      std::vector<Token> sub = emit(ch[k]);
      if (k + 1 < ch.size()) {
        std::size_t q = sub.size() - 1;
        int level = detail::payload_level(q, alphabet.size());
        out.push_back(Token::branch(level));
        detail::append_payload(out, q, level, alphabet);
      }
      out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
  };
  return SelfiesString{emit(0)};
}

/// I.i.d. uniform draws from the alphabet.
inline SelfiesString random_tokens(std::size_t length, const Alphabet& alphabet, Rng& rng) {
  if (length < 1) throw PreconditionError("random_tokens: length must be >= 1");
  SelfiesString s;
  s.tokens.reserve(length);
  for (std::size_t k = 0; k < length; ++k) s.tokens.push_back(alphabet.token_at(uniform_index(rng, alphabet.size())));
  return s;
}

}  // namespace janus
