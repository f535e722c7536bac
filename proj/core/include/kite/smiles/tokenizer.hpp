#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kite::smiles {

// Maximal-munch lexing: "[...]" bracket atoms, Cl, Br and "%nn" ring labels
// are single tokens, every other character is its own token. Concatenating
// the result reproduces the input. Throws ParseError on an unterminated
// bracket.
std::vector<std::string> tokenize(std::string_view smiles);

}  // namespace kite::smiles
