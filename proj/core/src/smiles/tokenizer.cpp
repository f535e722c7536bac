#include "kite/smiles/tokenizer.hpp"

#include <cctype>

#include "kite/common/error.hpp"

namespace kite::smiles {

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    std::size_t len = 1;
    if (c == '[') {
      const auto close = s.find(']', i + 1);
      if (close == std::string_view::npos) throw ParseError("unterminated bracket atom", i);
      len = close - i + 1;
    } else if ((c == 'C' || c == 'B') && i + 1 < s.size() && s[i + 1] == (c == 'C' ? 'l' : 'r')) {
      len = 2;
    } else if (c == '%' && i + 2 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])) &&
               std::isdigit(static_cast<unsigned char>(s[i + 2]))) {
      len = 3;
    }
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

}  // namespace kite::smiles
