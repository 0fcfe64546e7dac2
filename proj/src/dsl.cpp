#include "phg/dsl.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "phg/cutoffs.hpp"
#include "phg/errors.hpp"

namespace phg {
namespace {

class Parser {
 public:
  Parser(const std::string& src, const DslContext& ctx) : s_(src), ctx_(ctx) {}

  Expr parse_all() {
    Expr e = parse();
    skip();
    if (pos_ != s_.size()) throw ParseError("trailing input", pos_);
    return e;
  }

 private:
  void skip() {
    while (pos_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
      } else if (s_[pos_] == ';') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string token() {
    skip();
    std::size_t b = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '(' &&
           s_[pos_] != ')' && s_[pos_] != ';')
      ++pos_;
    if (b == pos_) throw ParseError("expected a token", b);
    return s_.substr(b, pos_ - b);
  }

  static bool is_number(const std::string& tok, double* out) {
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) return false;
    *out = v;
    return true;
  }

  double number_arg() {
    std::size_t at = pos_;
    Expr e = parse();
    double v;
    if (!is_constant(e, &v)) throw ParseError("expected a numeric argument", at);
    return v;
  }

  int int_arg() {
    std::size_t at = pos_;
    double v = number_arg();
    if (v != std::round(v)) throw ParseError("expected an integer argument", at);
    return static_cast<int>(v);
  }

  Expr atom(const std::string& tok, std::size_t at) {
    double v;
    if (is_number(tok, &v)) return constant(v);
    if (tok == "pi") return constant(std::numbers::pi);
    const Signature& sig = ctx_.sig;
    if (tok == "t") {
      if (!sig.has_t) throw ParseError("t used but the signature has no t slot", at);
      return t_var(sig);
    }
    auto index_of = [&](std::size_t prefix) -> int {
      std::string digits = tok.substr(prefix);
      if (digits.empty()) return -1;
      for (char c : digits)
        if (!std::isdigit(static_cast<unsigned char>(c))) return -1;
      return std::atoi(digits.c_str()) - sig.index_base;
    };
    if (tok.rfind("xi", 0) == 0) {
      int k = index_of(2);
      if (k < 0 || k >= sig.d_xi) throw ParseError("unknown frequency variable '" + tok + "'", at);
      return xi_var(sig, k);
    }
    if (tok.rfind("x", 0) == 0) {
      int i = index_of(1);
      if (i < 0 || i >= sig.n_x) throw ParseError("unknown space variable '" + tok + "'", at);
      return x_var(sig, i);
    }
    throw ParseError("unknown atom '" + tok + "'", at);
  }

  void expect_close() {
    skip();
    if (pos_ >= s_.size() || s_[pos_] != ')') throw ParseError("expected ')'", pos_);
    ++pos_;
  }

  bool at_close() {
    skip();
    return pos_ < s_.size() && s_[pos_] == ')';
  }

  std::vector<Expr> rest() {
    std::vector<Expr> out;
    while (!at_close()) {
      if (pos_ >= s_.size()) throw ParseError("unterminated list", pos_);
      out.push_back(parse());
    }
    return out;
  }

  const Weights& weights(std::size_t at) {
    if (ctx_.weights.d() != ctx_.sig.d_xi) throw ParseError("no weights for the frequency variables", at);
    return ctx_.weights;
  }

  Expr parse() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    std::size_t at = pos_;
    if (s_[pos_] == ')') throw ParseError("unexpected ')'", pos_);
    if (s_[pos_] != '(') return atom(token(), at);
    ++pos_;
    std::string head = token();
    Expr r = list(head, at);
    expect_close();
    return r;
  }

  Expr list(const std::string& head, std::size_t at) {
    const Signature& sig = ctx_.sig;
    if (head == "+") return add(rest());
    if (head == "*") return mul(rest());
    if (head == "-") {
      auto a = rest();
      if (a.empty()) throw ParseError("'-' needs arguments", at);
      if (a.size() == 1) return -a[0];
      Expr r = a[0];
      for (std::size_t i = 1; i < a.size(); ++i) r = r - a[i];
      return r;
    }
    if (head == "/") {
      Expr a = parse();
      Expr b = parse();
      return a / b;
    }
    if (head == "^") {
      Expr a = parse();
      return pow_int(a, int_arg());
    }
    if (head == "pow") {
      Expr a = parse();
      return pow_real(a, number_arg());
    }
    if (head == "exp") return exp_of(parse());
    if (head == "glue") return glue(parse());
    if (head == "abs") return abs_of(parse());
    if (head == "guard") {
      Expr g = parse();
      return guard(g, parse());
    }
    if (head == "cut") {
      Expr g = parse();
      return guarded_product(g, parse());
    }
    if (head == "qnorm") return quasi_norm_expr(sig, weights(at), NormVariant::Smooth);
    if (head == "qnorm_sum") return quasi_norm_expr(sig, weights(at), NormVariant::Sum);
    if (head == "phi") return phi_cutoff(sig, weights(at));
    if (head == "chi_K") return chi_K(sig, weights(at), number_arg());
    if (head == "chi0") return chi0(parse(), kExtractionProfile);
    if (head == "chi1") return chi1(parse(), kExtractionProfile);
    if (head == "chi0h") return chi0(parse(), kExtensionProfile);
    if (head == "chi1h") return chi1(parse(), kExtensionProfile);
    if (head == "step") {
      Expr r = parse();
      double a = number_arg();
      double b = number_arg();
      if (!(a < b)) throw ParseError("step needs a < b", at);
      return smooth_step(r, a, b);
    }
    if (head == "dilate") {
      double s = number_arg();
      if (!(s > 0.0)) throw ParseError("dilate needs s > 0", at);
      return compose_dilation(parse(), sig, weights(at), s);
    }
    if (head == "divt") {
      int k = int_arg();
      double ts = number_arg();
      if (!sig.has_t) throw ParseError("divt needs a t slot", at);
      return divide_by_t_power(parse(), k, sig.t_index(), ts);
    }
    throw ParseError("unknown head '" + head + "'", at);
  }

  const std::string& s_;
  const DslContext& ctx_;
  std::size_t pos_ = 0;
};

}  // namespace

SymbolExpr parse_symbol(const std::string& source, const DslContext& ctx) {
  Parser p(source, ctx);
  try {
    return {ctx.sig, p.parse_all()};
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what(), 0);
  }
}

std::string print_symbol(const SymbolExpr& e) { return e.str(); }

}  // namespace phg
