#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "kite/common/error.hpp"
#include "kite/smiles/smiles.hpp"

namespace kite::smiles {
namespace {

constexpr std::array<std::string_view, 118> kElements = {
    "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si", "P",  "S",
    "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge",
    "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd",
    "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn",
    "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

// Lowercase symbols allowed for aromatic bracket atoms.
constexpr std::array<std::string_view, 8> kAromaticBracket = {"se", "as", "b", "c", "n", "o", "p", "s"};

struct RingOpen {
  std::size_t atom;
  std::optional<char> bond;
  std::size_t offset;
};

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  MolecularGraph run() {
    if (s_.empty()) throw ParseError("empty SMILES", 0);
    while (pos_ < s_.size()) step();
    if (!branches_.empty()) throw ParseError("unbalanced parentheses: '(' never closed", branches_.back().second);
    if (!rings_.empty()) {
      const auto& [num, open] = *rings_.begin();
      throw ParseError("unmatched ring closure " + std::to_string(num), open.offset);
    }
    if (pending_bond_) throw ParseError("bond symbol without a following atom", pending_offset_);
    if (expect_atom_) throw ParseError("component separator without a following atom", pos_);
    if (g_.atom_count() == 0) throw ParseError("no atoms", 0);
    return std::move(g_);
  }

 private:
  void step() {
    const char c = s_[pos_];
    switch (c) {
      case '(':
        if (!prev_) throw ParseError("branch opened before any atom", pos_);
        if (pending_bond_) throw ParseError("bond symbol before '('", pos_);
        branches_.emplace_back(*prev_, pos_);
        last_was_open_ = true;
        ++pos_;
        return;
      case ')':
        if (branches_.empty()) throw ParseError("unbalanced parentheses: unexpected ')'", pos_);
        if (last_was_open_) throw ParseError("empty branch", pos_);
        if (pending_bond_) throw ParseError("bond symbol before ')'", pos_);
        prev_ = branches_.back().first;
        branches_.pop_back();
        ++pos_;
        return;
      case '.':
        if (pending_bond_) throw ParseError("bond symbol before '.'", pos_);
        if (!prev_ || !branches_.empty()) throw ParseError("misplaced '.'", pos_);
        prev_.reset();
        expect_atom_ = true;
        ++pos_;
        return;
      case '-': case '=': case '#': case '$': case ':': case '/': case '\\':
        if (!prev_) throw ParseError(std::string("bond symbol '") + c + "' without a preceding atom", pos_);
        if (pending_bond_) throw ParseError("two consecutive bond symbols", pos_);
        pending_bond_ = c;
        pending_offset_ = pos_;
        ++pos_;
        return;
      case '%':
        ring_closure();
        return;
      case '[':
        add_atom(bracket_atom());
        return;
      default:
        break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ring_closure();
      return;
    }
    add_atom(organic_atom());
  }

  Atom organic_atom() {
    const char c = s_[pos_];
    Atom a;
    auto next_is = [&](char n) { return pos_ + 1 < s_.size() && s_[pos_ + 1] == n; };
    if (c == 'C' && next_is('l')) {
      a.element = "Cl";
      pos_ += 2;
      return a;
    }
    if (c == 'B' && next_is('r')) {
      a.element = "Br";
      pos_ += 2;
      return a;
    }
    switch (c) {
      case 'B': case 'C': case 'N': case 'O': case 'P': case 'S': case 'F': case 'I': case '*':
        a.element = std::string(1, c);
        break;
      case 'b': case 'c': case 'n': case 'o': case 'p': case 's':
        a.element = std::string(1, static_cast<char>(std::toupper(c)));
        a.aromatic = true;
        break;
      default:
        throw ParseError(std::string("unknown symbol '") + c + "'", pos_);
    }
    ++pos_;
    return a;
  }

  int read_number() {
    int v = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      v = v * 10 + (s_[pos_] - '0');
      if (v > 100000) throw ParseError("number too large", pos_);
      ++pos_;
    }
    return v;
  }

  Atom bracket_atom() {
    const std::size_t open = pos_;
    const auto close = s_.find(']', pos_);
    if (close == std::string_view::npos) throw ParseError("unterminated bracket atom", open);
    if (close == open + 1) throw ParseError("empty bracket atom", open);
    ++pos_;
    Atom a;
    a.bracket = true;
    if (std::isdigit(static_cast<unsigned char>(s_[pos_]))) a.isotope = read_number();

    // element symbol
    const char c = s_[pos_];
    if (c == '*') {
      a.element = "*";
      ++pos_;
    } else if (std::islower(static_cast<unsigned char>(c))) {
      bool found = false;
      for (auto sym : kAromaticBracket) {
        if (s_.substr(pos_, sym.size()) == sym) {
          a.element = std::string(sym);
          a.element[0] = static_cast<char>(std::toupper(a.element[0]));
          a.aromatic = true;
          pos_ += sym.size();
          found = true;
          break;
        }
      }
      if (!found) throw ParseError("unknown aromatic symbol in bracket atom", pos_);
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      if (pos_ + 1 < close && std::islower(static_cast<unsigned char>(s_[pos_ + 1])) &&
          is_known_element(s_.substr(pos_, 2))) {
        a.element = std::string(s_.substr(pos_, 2));
        pos_ += 2;
      } else if (is_known_element(s_.substr(pos_, 1))) {
        a.element = std::string(1, c);
        ++pos_;
      } else {
        throw ParseError("unknown element in bracket atom", pos_);
      }
    } else {
      throw ParseError("bracket atom must start with an element symbol", pos_);
    }

    // chirality
    if (pos_ < close && s_[pos_] == '@') {
      const std::size_t start = pos_++;
      if (pos_ < close && s_[pos_] == '@') {
        ++pos_;
      } else {
        for (std::string_view cls : {"TH", "AL", "SP", "TB", "OH"}) {
          if (s_.substr(pos_, 2) == cls) {
            pos_ += 2;
            if (pos_ >= close || !std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
              throw ParseError("chirality class without a number", pos_);
            }
            read_number();
            break;
          }
        }
      }
      a.chirality = std::string(s_.substr(start, pos_ - start));
    }
    // hydrogens
    if (pos_ < close && s_[pos_] == 'H') {
      ++pos_;
      a.hydrogens = (pos_ < close && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ? read_number() : 1;
    }
    // charge
    if (pos_ < close && (s_[pos_] == '+' || s_[pos_] == '-')) {
      const char sign = s_[pos_++];
      int mag = 1;
      if (pos_ < close && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        mag = read_number();
      } else {
        while (pos_ < close && s_[pos_] == sign) {
          ++mag;
          ++pos_;
        }
      }
      a.charge = sign == '+' ? mag : -mag;
    }
    // atom class
    if (pos_ < close && s_[pos_] == ':') {
      ++pos_;
      if (pos_ >= close || !std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        throw ParseError("atom class without a number", pos_);
      }
      a.atom_class = read_number();
    }
    if (pos_ != close) throw ParseError("unexpected character in bracket atom", pos_);
    ++pos_;
    return a;
  }

  static BondOrder order_of(char c) {
    switch (c) {
      case '=': return BondOrder::Double;
      case '#': return BondOrder::Triple;
      case '$': return BondOrder::Quadruple;
      case ':': return BondOrder::Aromatic;
      default: return BondOrder::Single;
    }
  }

  BondOrder implicit_order(std::size_t a, std::size_t b) const {
    return g_.atoms()[a].aromatic && g_.atoms()[b].aromatic ? BondOrder::Aromatic : BondOrder::Single;
  }

  void connect(std::size_t a, std::size_t b, std::optional<char> sym, std::size_t offset) {
    const BondOrder order = sym ? order_of(*sym) : implicit_order(a, b);
    BondStereo stereo = BondStereo::None;
    if (sym == '/') stereo = BondStereo::Up;
    if (sym == '\\') stereo = BondStereo::Down;
    if (a == b) throw ParseError("ring closure bonds an atom to itself", offset);
    if (g_.has_bond(a, b)) throw ParseError("duplicate bond between the same atoms", offset);
    g_.add_bond(a, b, order, stereo);
  }

  void add_atom(Atom atom) {
    const std::size_t at = pos_;
    const auto idx = g_.add_atom(std::move(atom));
    if (prev_) connect(*prev_, idx, pending_bond_, at);
    pending_bond_.reset();
    prev_ = idx;
    last_was_open_ = false;
    expect_atom_ = false;
  }

  void ring_closure() {
    const std::size_t start = pos_;
    if (!prev_) throw ParseError("ring closure without a preceding atom", pos_);
    int num;
    if (s_[pos_] == '%') {
      if (pos_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(s_[pos_ + 2]))) {
        throw ParseError("'%' must be followed by two digits", pos_);
      }
      num = (s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      num = s_[pos_] - '0';
      ++pos_;
    }
    auto it = rings_.find(num);
    if (it == rings_.end()) {
      rings_[num] = RingOpen{*prev_, pending_bond_, start};
    } else {
      const RingOpen open = it->second;
      rings_.erase(it);
      std::optional<char> sym = open.bond;
      if (pending_bond_) {
        if (sym && *sym != *pending_bond_ && order_of(*sym) != order_of(*pending_bond_)) {
          throw ParseError("conflicting bond symbols on ring closure " + std::to_string(num), start);
        }
        if (!sym) sym = pending_bond_;
      }
      connect(open.atom, *prev_, sym, start);
    }
    pending_bond_.reset();
    last_was_open_ = false;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  MolecularGraph g_;
  std::optional<std::size_t> prev_;
  std::optional<char> pending_bond_;
  std::size_t pending_offset_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> branches_;  // (atom, offset of '(')
  std::map<int, RingOpen> rings_;
  bool last_was_open_ = false;
  bool expect_atom_ = false;
};

}  // namespace

bool is_known_element(std::string_view symbol) {
  for (auto e : kElements)
    if (e == symbol) return true;
  return false;
}

MolecularGraph parse_smiles(std::string_view smiles) {
  for (std::size_t i = 0; i < smiles.size(); ++i) {
    const auto c = static_cast<unsigned char>(smiles[i]);
    if (c >= 0x80 || std::isspace(c) || !std::isprint(c)) {
      throw ParseError("non-printable or non-ASCII character", i);
    }
  }
  return Parser(smiles).run();
}

}  // namespace kite::smiles
