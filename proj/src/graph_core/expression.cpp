#include "kw/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "kw/error.hpp"

namespace kw {

struct Expression::Node {
  enum class Kind { Number, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };
  enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt, Abs };

  Kind kind{Kind::Number};
  double number{0.0};
  Func func{Func::Sin};
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;

  double eval(double s) const
  {
    switch (kind) {
      case Kind::Number: return number;
      case Kind::Variable: return s;
      case Kind::Neg: return -lhs->eval(s);
      case Kind::Add: return lhs->eval(s) + rhs->eval(s);
      case Kind::Sub: return lhs->eval(s) - rhs->eval(s);
      case Kind::Mul: return lhs->eval(s) * rhs->eval(s);
      case Kind::Div: return lhs->eval(s) / rhs->eval(s);
      case Kind::Pow: return std::pow(lhs->eval(s), rhs->eval(s));
      case Kind::Call: {
        const double x = lhs->eval(s);
        switch (func) {
          case Func::Sin: return std::sin(x);
          case Func::Cos: return std::cos(x);
          case Func::Tan: return std::tan(x);
          case Func::Exp: return std::exp(x);
          case Func::Log: return std::log(x);
          case Func::Sqrt: return std::sqrt(x);
          case Func::Abs: return std::abs(x);
        }
      }
    }
    return 0.0;
  }
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make_number(double v)
{
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Number;
  n->number = v;
  return n;
}

NodePtr make_binary(Node::Kind kind, NodePtr a, NodePtr b)
{
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

std::string normalize(const std::string& in)
{
  std::string out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    // U+2212 MINUS SIGN
    if (i + 2 < in.size() && static_cast<unsigned char>(in[i]) == 0xE2 &&
        static_cast<unsigned char>(in[i + 1]) == 0x88 && static_cast<unsigned char>(in[i + 2]) == 0x92) {
      out.push_back('-');
      i += 2;
    } else {
      out.push_back(in[i]);
    }
  }
  return out;
}

class Parser {
public:
  explicit Parser(std::string text) : text_(std::move(text)) {}

  NodePtr parse()
  {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& msg) const
  {
    throw Error(ErrorCode::ParseError, msg + " at position " + std::to_string(pos_) + " in \"" + text_ + "\"");
  }

  void skip_ws()
  {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c)
  {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr()
  {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) lhs = make_binary(Node::Kind::Add, lhs, term());
      else if (accept('-')) lhs = make_binary(Node::Kind::Sub, lhs, term());
      else return lhs;
    }
  }

  NodePtr term()
  {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make_binary(Node::Kind::Mul, lhs, unary());
      else if (accept('/')) lhs = make_binary(Node::Kind::Div, lhs, unary());
      else return lhs;
    }
  }

  NodePtr unary()
  {
    if (accept('-')) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Neg;
      n->lhs = unary();
      return n;
    }
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power()
  {
    NodePtr base = primary();
    if (accept('^')) return make_binary(Node::Kind::Pow, base, unary());
    return base;
  }

  NodePtr primary()
  {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (accept('(')) {
      NodePtr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - begin);
      return make_number(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string name = text_.substr(start, pos_ - start);
      if (name == "s") {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Variable;
        return n;
      }
      if (name == "pi") return make_number(std::numbers::pi);
      if (name == "e") return make_number(std::numbers::e);
      static const std::vector<std::pair<std::string, Node::Func>> funcs{
          {"sin", Node::Func::Sin}, {"cos", Node::Func::Cos},   {"tan", Node::Func::Tan}, {"exp", Node::Func::Exp},
          {"log", Node::Func::Log}, {"sqrt", Node::Func::Sqrt}, {"abs", Node::Func::Abs}};
      for (const auto& [fname, f] : funcs) {
        if (name == fname) {
          if (!accept('(')) fail("expected '(' after " + name);
          auto n = std::make_shared<Node>();
          n->kind = Node::Kind::Call;
          n->func = f;
          n->lhs = expr();
          if (!accept(')')) fail("expected ')'");
          return n;
        }
      }
      pos_ = start;
      fail("unknown identifier '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string text_;
  std::size_t pos_{0};
};

}  // namespace

Expression::Expression(const std::string& source) : source_(source), root_(Parser(normalize(source)).parse()) {}

double Expression::operator()(double s) const { return root_->eval(s); }

}  // namespace kw
