#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string_view>
#include <vector>

namespace janus {

enum class Element : std::uint8_t { B, C, N, O, P, S, F, Cl, Br, I };

inline constexpr std::array<Element, 10> kAllElements = {
    Element::B, Element::C, Element::N,  Element::O,  Element::P,
    Element::S, Element::F, Element::Cl, Element::Br, Element::I};

inline constexpr int kMinCharge = -2;
inline constexpr int kMaxCharge = 2;

inline constexpr std::string_view symbol(Element e) {
  switch (e) {
    case Element::B: return "B";
    case Element::C: return "C";
    case Element::N: return "N";
    case Element::O: return "O";
    case Element::P: return "P";
    case Element::S: return "S";
    case Element::F: return "F";
    case Element::Cl: return "Cl";
    case Element::Br: return "Br";
    case Element::I: return "I";
  }
  return "?";
}

inline std::optional<Element> element_from_symbol(std::string_view s) {
  for (Element e : kAllElements) {
    if (symbol(e) == s) return e;
  }
  return std::nullopt;
}

/// Normal valences of the neutral element, strictly increasing.  These match
/// the SMILES organic-subset defaults.
inline std::vector<int> normal_valences(Element e) {
  switch (e) {
    case Element::B: return {3};
    case Element::C: return {4};
    case Element::N: return {3, 5};
    case Element::O: return {2};
    case Element::P: return {3, 5};
    case Element::S: return {2, 4, 6};
    default: return {1};
  }
}

namespace detail {

// Charged atoms behave like their isoelectronic neighbour: electron-rich
// elements gain one bond per positive charge, boron loses one, carbon loses
// one per unit of either sign.
inline int adjust_valence(Element e, int valence, int charge) {
  if (e == Element::B) return valence - charge;
  if (e == Element::C) return valence - std::abs(charge);
  return valence + charge;
}

}  // namespace detail

/// Allowed total valences (bond-order sum + hydrogens) for an atom of the
/// given element and formal charge, strictly increasing.  May be empty for
/// impossible combinations (e.g. F+2 is still allowed, F-2 is not).
inline std::vector<int> allowed_valences(Element e, int charge) {
  std::vector<int> out;
  for (int v : normal_valences(e)) {
    int a = detail::adjust_valence(e, v, charge);
    if (a >= 0 && (out.empty() || a > out.back())) out.push_back(a);
  }
  return out;
}

/// Largest bond-order sum the token decoder lets an atom reach.
inline int decoder_capacity(Element e, int charge = 0) {
  int base = 1;
  switch (e) {
    case Element::B: base = 3; break;
    case Element::C: base = 4; break;
    case Element::N: base = 3; break;
    case Element::O: base = 2; break;
    case Element::P: base = 5; break;
    case Element::S: base = 6; break;
    default: base = 1; break;
  }
  int cap = detail::adjust_valence(e, base, charge);
  return cap < 0 ? 0 : cap;
}

/// Hydrogen count that brings `bond_sum` up to the smallest allowed valence,
/// or nullopt if the bond sum already exceeds every allowed valence.
inline std::optional<int> default_hydrogens(Element e, int charge, int bond_sum) {
  for (int v : allowed_valences(e, charge)) {
    if (v >= bond_sum) return v - bond_sum;
  }
  return std::nullopt;
}

inline bool is_valence_valid(Element e, int charge, int bond_sum, int hydrogens) {
  if (charge < kMinCharge || charge > kMaxCharge || hydrogens < 0) return false;
  for (int v : allowed_valences(e, charge)) {
    if (v == bond_sum + hydrogens) return true;
  }
  return false;
}

}  // namespace janus
