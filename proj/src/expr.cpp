#include "semidyn/expr.hpp"

#include <cctype>
#include <cstdlib>

namespace semidyn {

namespace {

class Parser {
 public:
  Parser(std::string_view text, int nvars) : text_(text), nvars_(nvars) {}

  MultiPoly parse() {
    skip_space();
    if (at_end()) fail("empty expression");
    MultiPoly result = expr();
    skip_space();
    if (!at_end()) fail(std::string("unexpected '") + text_[pos_] + "'");
    return result;
  }

 private:
  MultiPoly expr() {
    MultiPoly acc = term();
    for (;;) {
      skip_space();
      if (accept('+')) acc += term();
      else if (accept('-')) acc -= term();
      else return acc;
    }
  }

  MultiPoly term() {
    MultiPoly acc = unary();
    for (;;) {
      skip_space();
      if (!accept('*')) return acc;
      acc = acc * unary();
    }
  }

  MultiPoly unary() {
    skip_space();
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  MultiPoly power() {
    MultiPoly base = primary();
    skip_space();
    if (!accept('^')) return base;
    skip_space();
    if (at_end() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
      fail("exponent must be a nonnegative integer");
    unsigned long n = 0;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      n = n * 10 + static_cast<unsigned long>(text_[pos_] - '0');
      if (n > 4096) fail("exponent too large");
      ++pos_;
    }
    if (!at_end() && (text_[pos_] == '.' || text_[pos_] == 'i')) fail("exponent must be a nonnegative integer");
    return pow(base, static_cast<unsigned>(n));
  }

  MultiPoly primary() {
    skip_space();
    if (at_end()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      MultiPoly inner = expr();
      skip_space();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (c == 'z') {
      ++pos_;
      if (at_end() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) fail("expected variable index after 'z'");
      const int index = text_[pos_] - '0';
      if (index < 1 || index > nvars_)
        fail("variable z" + std::to_string(index) + " outside z1..z" + std::to_string(nvars_));
      ++pos_;
      if (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) fail("variables are z1..z9");
      return MultiPoly::variable(nvars_, index - 1);
    }
    if (c == 'i') {
      ++pos_;
      return MultiPoly::constant(nvars_, Complex(0.0, 1.0));
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    fail(std::string("unexpected '") + c + "'");
  }

  MultiPoly number() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) ++pos_;
    if (!at_end() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    const std::string literal(text_.substr(start, pos_ - start));
    char* end = nullptr;
    const double value = std::strtod(literal.c_str(), &end);
    if (end != literal.c_str() + literal.size()) fail_at(start, "malformed number '" + literal + "'");
    if (accept('i')) return MultiPoly::constant(nvars_, Complex(0.0, value));
    return MultiPoly::constant(nvars_, Complex(value, 0.0));
  }

  bool at_end() const { return pos_ >= text_.size(); }

  bool accept(char c) {
    if (!at_end() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& message) const { fail_at(pos_, message); }

  [[noreturn]] void fail_at(std::size_t where, const std::string& message) const {
    int line = 1;
    int column = 1;
    for (std::size_t i = 0; i < where && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError(line, column, message);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int nvars_;
};

}  // namespace

MultiPoly parse_poly(std::string_view text, int nvars) { return Parser(text, nvars).parse(); }

Complex parse_complex(std::string_view text) {
  const MultiPoly p = Parser(text, 1).parse();
  if (!p.is_constant()) throw ParseError(1, 1, "expected a constant, found variables");
  return p.constant_term();
}

}  // namespace semidyn
