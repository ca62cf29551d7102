#pragma once

#include "psp/ast.hpp"
#include "psp/token.hpp"

namespace psp::lang {

// Grammar: one boolean-returning program per source file.
//   bool Name(double[10, 2] x, double[] h, double s, bool f) { ... return e; }
// Statements: assignment / probabilistic assignment (x = Dist(...) or
// x ~ Dist(...)), counted for loops. 'while' and 'if' are rejected with a
// message explaining the restriction.
Program parse(const std::vector<Token>& tokens);
Program parse(std::string_view source);

} // namespace psp::lang
