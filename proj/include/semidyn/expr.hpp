// Polynomial expression grammar:
//
//   expr    := term (('+' | '-') term)*
//   term    := unary ('*' unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' integer)?
//   primary := number ['i'] | 'i' | 'z'[1-9] | '(' expr ')'
//
// Whitespace is ignored. Example: "(0.25)*z1 - z2^2".
#pragma once

#include "semidyn/polyalg.hpp"

#include <string>
#include <string_view>

namespace semidyn {

class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& message)
      : Error(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Parses a polynomial in nvars variables z1..z{nvars}.
MultiPoly parse_poly(std::string_view text, int nvars);

/// Parses an expression that must reduce to a constant (e.g. "0.5-2i").
Complex parse_complex(std::string_view text);

}  // namespace semidyn
