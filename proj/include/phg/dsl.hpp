#pragma once

// Prefix text format for symbols, e.g.
//   (+ (^ t 2) (^ (qnorm) 2))
//   (* (phi) (pow (qnorm) -6))
//
// Atoms: numbers, pi, x<i>, xi<i>, t.
// Heads: + - * / ^ pow exp glue abs guard cut qnorm qnorm_sum phi chi_K
//        chi0 chi1 chi0h chi1h step dilate divt
// "; ..." starts a comment that runs to the end of the line.

#include <string>

#include "phg/grading.hpp"
#include "phg/symbol.hpp"

namespace phg {

struct DslContext {
  Signature sig;
  Weights weights;
};

/// Throws ParseError (with byte offset) on malformed input.
SymbolExpr parse_symbol(const std::string& source, const DslContext& ctx);

std::string print_symbol(const SymbolExpr& e);

}  // namespace phg
