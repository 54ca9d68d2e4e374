#pragma once

#include <memory>
#include <string>

namespace kw {

/// A compiled scalar expression in the arclength variable `s`.
///
/// Grammar: numbers, `s`, constants `pi` and `e`, binary + - * / ^ (^ is
/// right-associative and binds tighter than unary minus), parentheses, and
/// the functions sin, cos, tan, exp, log, sqrt, abs. The Unicode minus sign
/// U+2212 is accepted as '-'. Parse failures throw Error(ParseError).
class Expression {
public:
  explicit Expression(const std::string& source);

  double operator()(double s) const;
  const std::string& source() const noexcept { return source_; }

  struct Node;

private:
  std::string source_;
  std::shared_ptr<const Node> root_;
};

}  // namespace kw
