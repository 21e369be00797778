#pragma once

#include <cctype>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nnop/errors.hpp"

namespace nnop {

/// Compiled arithmetic expression over a fixed list of named variables.
///
/// Grammar: numbers, the constants `pi` and `e`, variables, `+ - * / ^`,
/// unary minus, parentheses, and the functions exp, log, sqrt, abs, sin,
/// cos, tanh. Compilation produces a postfix program, so evaluation does
/// not allocate.
class Expression {
  static constexpr int kMaxDepth = 64;

public:
  Expression() = default;

  Expression(std::string_view text, std::vector<std::string> variables)
      : text_(text), variables_(std::move(variables)) {
    Parser p{text_, variables_, program_, 0};
    p.parse_sum();
    p.skip_ws();
    if (p.pos != text_.size())
      p.fail("unexpected character");
    if (program_.empty())
      p.fail("empty expression");
    int depth = 0;
    for (const auto& op : program_) {
      depth += op.stack_delta();
      max_depth_ = std::max(max_depth_, depth);
    }
    if (max_depth_ > kMaxDepth)
      throw ValidationError("expression '" + text_ + "': nesting too deep");
  }

  double operator()(std::span<const double> vars) const {
    double stack[kMaxDepth];
    int top = 0;
    for (const auto& op : program_) {
      switch (op.kind) {
      case Op::Const: stack[top++] = op.value; break;
      case Op::Var: stack[top++] = vars[op.index]; break;
      case Op::Neg: stack[top - 1] = -stack[top - 1]; break;
      case Op::Add: --top; stack[top - 1] += stack[top]; break;
      case Op::Sub: --top; stack[top - 1] -= stack[top]; break;
      case Op::Mul: --top; stack[top - 1] *= stack[top]; break;
      case Op::Div: --top; stack[top - 1] /= stack[top]; break;
      case Op::Pow: --top; stack[top - 1] = std::pow(stack[top - 1], stack[top]); break;
      case Op::Exp: stack[top - 1] = std::exp(stack[top - 1]); break;
      case Op::Log: stack[top - 1] = std::log(stack[top - 1]); break;
      case Op::Sqrt: stack[top - 1] = std::sqrt(stack[top - 1]); break;
      case Op::Abs: stack[top - 1] = std::abs(stack[top - 1]); break;
      case Op::Sin: stack[top - 1] = std::sin(stack[top - 1]); break;
      case Op::Cos: stack[top - 1] = std::cos(stack[top - 1]); break;
      case Op::Tanh: stack[top - 1] = std::tanh(stack[top - 1]); break;
      }
    }
    return stack[0];
  }

  double operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }

  const std::string& text() const { return text_; }
  int stack_depth() const { return max_depth_; }
  std::size_t arity() const { return variables_.size(); }

private:
  struct Op {
    enum Kind { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Exp, Log, Sqrt, Abs, Sin, Cos, Tanh } kind;
    double value = 0.0;
    std::size_t index = 0;

    int stack_delta() const {
      switch (kind) {
      case Const:
      case Var: return 1;
      case Add:
      case Sub:
      case Mul:
      case Div:
      case Pow: return -1;
      default: return 0;
      }
    }
  };

  struct Parser {
    std::string_view src;
    const std::vector<std::string>& vars;
    std::vector<Op>& out;
    std::size_t pos;

    [[noreturn]] void fail(const std::string& what) const {
      throw ValidationError("expression '" + std::string(src) + "': " + what + " at offset " +
                            std::to_string(pos));
    }

    void skip_ws() {
      while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos])))
        ++pos;
    }

    bool eat(char c) {
      skip_ws();
      if (pos < src.size() && src[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    void parse_sum() {
      parse_product();
      for (;;) {
        if (eat('+')) {
          parse_product();
          out.push_back({Op::Add});
        } else if (eat('-')) {
          parse_product();
          out.push_back({Op::Sub});
        } else {
          return;
        }
      }
    }

    void parse_product() {
      parse_unary();
      for (;;) {
        if (eat('*')) {
          parse_unary();
          out.push_back({Op::Mul});
        } else if (eat('/')) {
          parse_unary();
          out.push_back({Op::Div});
        } else {
          return;
        }
      }
    }

    void parse_unary() {
      if (eat('-')) {
        parse_unary();
        out.push_back({Op::Neg});
        return;
      }
      if (eat('+')) {
        parse_unary();
        return;
      }
      parse_power();
    }

    // right associative; binds tighter than unary minus on its left
    void parse_power() {
      parse_atom();
      if (eat('^')) {
        parse_unary();
        out.push_back({Op::Pow});
      }
    }

    void parse_atom() {
      skip_ws();
      if (pos >= src.size())
        fail("unexpected end");
      const char c = src[pos];
      if (c == '(') {
        ++pos;
        parse_sum();
        if (!eat(')'))
          fail("expected ')'");
        return;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const std::string rest(src.substr(pos));
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(rest, &used);
        } catch (const std::exception&) {
          fail("bad number");
        }
        pos += used;
        out.push_back({Op::Const, v});
        return;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const std::size_t start = pos;
        while (pos < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
          ++pos;
        const std::string_view name = src.substr(start, pos - start);
        for (std::size_t i = 0; i < vars.size(); ++i) {
          if (vars[i] == name) {
            out.push_back({Op::Var, 0.0, i});
            return;
          }
        }
        if (name == "pi") {
          out.push_back({Op::Const, std::numbers::pi});
          return;
        }
        if (name == "e") {
          out.push_back({Op::Const, std::numbers::e});
          return;
        }
        Op::Kind fn;
        if (name == "exp") fn = Op::Exp;
        else if (name == "log") fn = Op::Log;
        else if (name == "sqrt") fn = Op::Sqrt;
        else if (name == "abs") fn = Op::Abs;
        else if (name == "sin") fn = Op::Sin;
        else if (name == "cos") fn = Op::Cos;
        else if (name == "tanh") fn = Op::Tanh;
        else fail("unknown identifier '" + std::string(name) + "'");
        if (!eat('('))
          fail("expected '(' after function name");
        parse_sum();
        if (!eat(')'))
          fail("expected ')'");
        out.push_back({fn});
        return;
      }
      fail(std::string("unexpected character '") + c + "'");
    }
  };

  std::string text_;
  std::vector<std::string> variables_;
  std::vector<Op> program_;
  int max_depth_ = 0;
};

} // namespace nnop
