// Text form of comparison functions: `tag(arg, ...)` where an argument is a
// number, a nested function, or a bracketed list of numbers.

#include <cctype>
#include <charconv>
#include <variant>

#include "comparison/nodes.hpp"
#include "mhe/errors.hpp"

namespace mhe {
namespace {

struct Expr;
struct List {
  std::vector<double> values;
};
using Arg = std::variant<double, std::shared_ptr<Expr>, List>;
struct Expr {
  std::string tag;
  std::vector<Arg> args;
};

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  std::shared_ptr<Expr> parse_top() {
    auto e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("comparison function text: " + msg + " at offset " + std::to_string(pos_) + " in '" + text_ + "'");
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  double parse_number() {
    skip_ws();
    double v = 0.0;
    auto res = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (res.ec != std::errc()) fail("expected a number");
    pos_ = static_cast<std::size_t>(res.ptr - text_.data());
    return v;
  }

  std::shared_ptr<Expr> parse_expr() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    if (start == pos_) fail("expected a function tag");
    auto e = std::make_shared<Expr>();
    e->tag = text_.substr(start, pos_ - start);
    expect('(');
    if (!peek(')')) {
      do {
        e->args.push_back(parse_arg());
      } while (peek(',') && (++pos_, true));
    }
    expect(')');
    return e;
  }

  Arg parse_arg() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end");
    char c = text_[pos_];
    if (c == '[') {
      ++pos_;
      List l;
      if (!peek(']')) {
        do {
          l.values.push_back(parse_number());
        } while (peek(',') && (++pos_, true));
      }
      expect(']');
      return l;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      // inf/nan are not valid parameters; anything alphabetic is a nested function
      return parse_expr();
    }
    return parse_number();
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

[[noreturn]] void bad(const Expr& e, const std::string& msg) { throw ParseError(e.tag + ": " + msg); }

void arity(const Expr& e, std::size_t n) {
  if (e.args.size() != n) bad(e, "expected " + std::to_string(n) + " arguments");
}

double num(const Expr& e, std::size_t i) {
  if (auto* d = std::get_if<double>(&e.args.at(i))) return *d;
  bad(e, "argument " + std::to_string(i + 1) + " must be a number");
}

std::int64_t integer(const Expr& e, std::size_t i) {
  double v = num(e, i);
  if (v != static_cast<double>(static_cast<std::int64_t>(v))) bad(e, "argument must be an integer");
  return static_cast<std::int64_t>(v);
}

const std::vector<double>& list(const Expr& e, std::size_t i) {
  if (auto* l = std::get_if<List>(&e.args.at(i))) return l->values;
  bad(e, "argument " + std::to_string(i + 1) + " must be a list");
}

const Expr& sub(const Expr& e, std::size_t i) {
  if (auto* p = std::get_if<std::shared_ptr<Expr>>(&e.args.at(i))) return **p;
  bad(e, "argument " + std::to_string(i + 1) + " must be a function");
}

KLFn to_kl(const Expr& e);

ScalarKFn to_k(const Expr& e) {
  const auto& t = e.tag;
  if (t == "linear") {
    arity(e, 1);
    return ScalarKFn::linear(num(e, 0));
  }
  if (t == "power") {
    arity(e, 2);
    return ScalarKFn::power(num(e, 0), num(e, 1));
  }
  if (t == "pwl") {
    arity(e, 2);
    return ScalarKFn::piecewise_linear(list(e, 0), list(e, 1));
  }
  if (t == "compose" || t == "sum") {
    std::vector<ScalarKFn> parts;
    for (std::size_t i = 0; i < e.args.size(); ++i) parts.push_back(to_k(sub(e, i)));
    return t == "compose" ? ScalarKFn::compose(std::move(parts)) : ScalarKFn::sum(std::move(parts));
  }
  if (t == "inverse") {
    arity(e, 1);
    return ScalarKFn::inverse(to_k(sub(e, 0)));
  }
  if (t == "section") {
    arity(e, 2);
    return ScalarKFn::section(to_kl(sub(e, 0)), integer(e, 1));
  }
  if (t == "gap") {
    arity(e, 2);
    return ScalarKFn::gap(num(e, 0), to_k(sub(e, 1)));
  }
  if (t == "series") {
    arity(e, 1);
    return ScalarKFn::series(to_kl(sub(e, 0)));
  }
  throw ParseError("unknown K-function tag '" + t + "'");
}

KLFn to_kl(const Expr& e) {
  const auto& t = e.tag;
  if (t == "geom") {
    arity(e, 3);
    return KLFn::separable_geometric(num(e, 0), num(e, 1), num(e, 2));
  }
  if (t == "table") {
    if (e.args.size() < 2) bad(e, "expected knots and at least one row");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 1; i < e.args.size(); ++i) rows.push_back(list(e, i));
    return KLFn::tabulated(list(e, 0), std::move(rows));
  }
  if (t == "scaled") {
    arity(e, 4);
    return KLFn::scaled_shift(to_kl(sub(e, 0)), num(e, 1), list(e, 2), integer(e, 3));
  }
  if (t == "max" || t == "sum") {
    std::vector<KLFn> parts;
    for (std::size_t i = 0; i < e.args.size(); ++i) parts.push_back(to_kl(sub(e, i)));
    return t == "max" ? KLFn::pointwise_max(std::move(parts)) : KLFn::pointwise_sum(std::move(parts));
  }
  if (t == "iterated") {
    arity(e, 2);
    return KLFn::iterated(to_k(sub(e, 0)), to_k(sub(e, 1)));
  }
  if (t == "window") {
    arity(e, 4);
    return KLFn::window_iterated(to_k(sub(e, 0)), to_kl(sub(e, 1)), static_cast<int>(integer(e, 2)), num(e, 3));
  }
  if (t == "window_sum") {
    arity(e, 5);
    return KLFn::window_summed(to_k(sub(e, 0)), to_k(sub(e, 1)), to_kl(sub(e, 2)), static_cast<int>(integer(e, 3)),
                               num(e, 4));
  }
  if (t == "inner") {
    arity(e, 3);
    return KLFn::inner_discounted(to_k(sub(e, 0)), to_kl(sub(e, 1)), static_cast<int>(integer(e, 2)));
  }
  throw ParseError("unknown KL-function tag '" + t + "'");
}

}  // namespace

ScalarKFn parse_k(const std::string& text) {
  Parser p(text);
  return to_k(*p.parse_top());
}

KLFn parse_kl(const std::string& text) {
  Parser p(text);
  return to_kl(*p.parse_top());
}

}  // namespace mhe
