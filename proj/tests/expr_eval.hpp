#pragma once

// Tiny interpreter for the arithmetic programs produced by to_expression:
//   program := (ident '=' expr ';')* expr
//   expr    := term (('+' | '-') term)*
//   term    := factor ('*' factor)*
//   factor  := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')' | '-' factor

#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

class ExprEval {
 public:
  ExprEval(const std::string& text, const std::vector<double>& x) : s_(text), x_(x) {}

  double run() {
    for (;;) {
      const std::size_t save = pos_;
      skip();
      if (std::isalpha(static_cast<unsigned char>(peek()))) {
        const std::string name = ident();
        skip();
        if (peek() == '=') {
          ++pos_;
          const double v = expr();
          expect(';');
          vars_[name] = v;
          continue;
        }
      }
      pos_ = save;
      const double v = expr();
      skip();
      if (pos_ != s_.size()) throw std::runtime_error("trailing text at " + std::to_string(pos_));
      return v;
    }
  }

 private:
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip();
    if (peek() != c) throw std::runtime_error(std::string("expected ") + c + " at " + std::to_string(pos_));
    ++pos_;
  }
  std::string ident() {
    std::string out;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') out += s_[pos_++];
    return out;
  }
  double expr() {
    double v = term();
    for (;;) {
      skip();
      if (peek() == '+') {
        ++pos_;
        v += term();
      } else if (peek() == '-') {
        ++pos_;
        v -= term();
      } else {
        return v;
      }
    }
  }
  double term() {
    double v = factor();
    for (;;) {
      skip();
      if (peek() != '*') return v;
      ++pos_;
      v *= factor();
    }
  }
  double factor() {
    skip();
    const char c = peek();
    if (c == '-') {
      ++pos_;
      return -factor();
    }
    if (c == '(') {
      ++pos_;
      const double v = expr();
      expect(')');
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      const double v = std::stod(s_.substr(pos_), &used);
      pos_ += used;
      return v;
    }
    const std::string name = ident();
    if (name.empty()) throw std::runtime_error("unexpected character at " + std::to_string(pos_));
    skip();
    if (peek() == '(') {
      ++pos_;
      std::vector<double> args{expr()};
      skip();
      while (peek() == ',') {
        ++pos_;
        args.push_back(expr());
        skip();
      }
      expect(')');
      if (name == "pow" && args.size() == 2) return std::pow(args[0], args[1]);
      if (name == "floor" && args.size() == 1) return std::floor(args[0]);
      throw std::runtime_error("unknown function " + name);
    }
    if (name[0] == 'x') return x_.at(std::stoul(name.substr(1)) - 1);
    return vars_.at(name);
  }

  std::string s_;
  std::vector<double> x_;
  std::map<std::string, double> vars_;
  std::size_t pos_ = 0;
};

inline double eval_expression(const std::string& text, const std::vector<double>& x) {
  return ExprEval(text, x).run();
}

}  // namespace oracle
