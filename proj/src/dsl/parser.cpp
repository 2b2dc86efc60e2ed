#include "malmas/dsl/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <vector>

#include <fmt/format.h>

#include "malmas/common/overloaded.hpp"

namespace malmas::dsl {

namespace {

std::string_view kind_label(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::lexical: return "lexical error";
    case ParseErrorKind::syntax: return "syntax error";
    case ParseErrorKind::limit: return "limit exceeded";
  }
  return "error";
}

}  // namespace

ParseError::ParseError(ParseErrorKind kind, std::size_t offset, std::string message)
    : std::runtime_error(fmt::format("{} at offset {}: {}", kind_label(kind), offset, message)),
      kind_(kind),
      offset_(offset),
      detail_(std::move(message)) {}

namespace {

enum class Tok {
  ident, number, string, lparen, rparen, lbracket, rbracket, comma, assign,
  plus, minus, star, slash, lt, le, gt, ge, eqeq, end
};

struct Token {
  Tok kind;
  std::size_t offset;
  std::string text;  // ident / string contents / raw number
  double number = 0.0;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::ident: return fmt::format("identifier '{}'", t.text);
    case Tok::number: return fmt::format("number {}", t.text);
    case Tok::string: return "string literal";
    case Tok::end: return "end of input";
    default: return fmt::format("'{}'", t.text);
  }
}

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto punct = [&](Tok kind, std::size_t len) {
    out.push_back(Token{kind, i, std::string(src.substr(i, len))});
    i += len;
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i + 1;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back(Token{Tok::ident, i, std::string(src.substr(i, j - i))});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && src[j] == '.') {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k >= src.size() || !std::isdigit(static_cast<unsigned char>(src[k])))
          throw ParseError(ParseErrorKind::lexical, i, "malformed number exponent");
        while (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) ++k;
        j = k;
      }
      Token t{Tok::number, i, std::string(src.substr(i, j - i))};
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (ec == std::errc::result_out_of_range) {
        // Subnormals report ERANGE but are representable; overflow is not.
        t.number = std::strtod(t.text.c_str(), nullptr);
        if (std::isfinite(t.number)) ec = std::errc{}, ptr = t.text.data() + t.text.size();
      }
      if (ec != std::errc{} || ptr != t.text.data() + t.text.size() || !std::isfinite(t.number))
        throw ParseError(ParseErrorKind::lexical, i, fmt::format("number '{}' is out of range", t.text));
      out.push_back(std::move(t));
      i = j;
      continue;
    }
    if (c == '"') {
      std::string value;
      std::size_t j = i + 1;
      bool closed = false;
      while (j < src.size()) {
        if (src[j] == '\\') {
          if (j + 1 >= src.size()) break;
          const char e = src[j + 1];
          if (e != '"' && e != '\\') throw ParseError(ParseErrorKind::lexical, j, "unknown escape in string");
          value.push_back(e);
          j += 2;
        } else if (src[j] == '"') {
          closed = true;
          ++j;
          break;
        } else {
          value.push_back(src[j++]);
        }
      }
      if (!closed) throw ParseError(ParseErrorKind::lexical, i, "unterminated string literal");
      out.push_back(Token{Tok::string, i, std::move(value)});
      i = j;
      continue;
    }
    const bool next_eq = i + 1 < src.size() && src[i + 1] == '=';
    switch (c) {
      case '(': punct(Tok::lparen, 1); break;
      case ')': punct(Tok::rparen, 1); break;
      case '[': punct(Tok::lbracket, 1); break;
      case ']': punct(Tok::rbracket, 1); break;
      case ',': punct(Tok::comma, 1); break;
      case '+': punct(Tok::plus, 1); break;
      case '-': punct(Tok::minus, 1); break;
      case '*': punct(Tok::star, 1); break;
      case '/': punct(Tok::slash, 1); break;
      case '<': next_eq ? punct(Tok::le, 2) : punct(Tok::lt, 1); break;
      case '>': next_eq ? punct(Tok::ge, 2) : punct(Tok::gt, 1); break;
      case '=': next_eq ? punct(Tok::eqeq, 2) : punct(Tok::assign, 1); break;
      default:
        throw ParseError(ParseErrorKind::lexical, i, fmt::format("unexpected character '{}'", c));
    }
  }
  out.push_back(Token{Tok::end, src.size(), ""});
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

bool is_keyword(std::string_view s) { return iequals(s, "if") || iequals(s, "then") || iequals(s, "else"); }

constexpr int kMaxRecursion = 200;

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Program program() {
    const Token& kw = peek();
    if (kw.kind != Tok::ident || !iequals(kw.text, "FEATURE"))
      fail(kw, "expected 'FEATURE' at start of program");
    advance();
    const Token& name = expect(Tok::ident, "feature name");
    if (!is_identifier(name.text)) fail(name, "invalid feature name");
    std::string feature = name.text;
    expect(Tok::assign, "'='");
    Expr body = expr();
    if (peek().kind != Tok::end) fail(peek(), fmt::format("unexpected {} after expression", describe(peek())));
    return Program{std::move(feature), std::move(body)};
  }

  Expr bare() {
    Expr e = expr();
    if (peek().kind != Tok::end) fail(peek(), fmt::format("unexpected {} after expression", describe(peek())));
    return e;
  }

 private:
  [[noreturn]] void fail(const Token& at, std::string message) {
    throw ParseError(ParseErrorKind::syntax, at.offset, std::move(message));
  }

  const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  const Token& advance() { return toks_[pos_++]; }
  bool accept(Tok kind) {
    if (peek().kind != kind) return false;
    ++pos_;
    return true;
  }
  const Token& expect(Tok kind, std::string_view what) {
    if (peek().kind != kind) fail(peek(), fmt::format("expected {}, found {}", what, describe(peek())));
    return advance();
  }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p_(p) {
      if (++p_.recursion_ > kMaxRecursion)
        throw ParseError(ParseErrorKind::limit, p_.peek().offset, "expression nesting too deep");
    }
    ~DepthGuard() { --p_.recursion_; }
    Parser& p_;
  };

  Expr expr() {
    DepthGuard guard(*this);
    Expr lhs = term();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      const Token& op = advance();
      Expr rhs = term();
      const std::size_t at = lhs.offset;
      lhs = make::binary(op.kind == Tok::plus ? BinaryOp::add : BinaryOp::sub, std::move(lhs), std::move(rhs));
      lhs.offset = at;
    }
    return lhs;
  }

  Expr term() {
    Expr lhs = factor();
    while (peek().kind == Tok::star || peek().kind == Tok::slash) {
      const Token& op = advance();
      Expr rhs = factor();
      const std::size_t at = lhs.offset;
      lhs = make::binary(op.kind == Tok::star ? BinaryOp::mul : BinaryOp::div_s, std::move(lhs), std::move(rhs));
      lhs.offset = at;
    }
    return lhs;
  }

  Expr factor() {
    DepthGuard guard(*this);
    if (peek().kind == Tok::minus) {
      const std::size_t at = advance().offset;
      if (peek().kind == Tok::number) {
        Expr e = make::lit(-advance().number);
        e.offset = at;
        return e;
      }
      Expr e = make::unary(UnaryOp::neg, factor());
      e.offset = at;
      return e;
    }
    return primary();
  }

  double signed_number(std::string_view what) {
    const bool negative = accept(Tok::minus);
    const Token& t = expect(Tok::number, what);
    return negative ? -t.number : t.number;
  }

  int integer(std::string_view what) {
    const Token& t = expect(Tok::number, what);
    if (t.number != std::floor(t.number) || std::fabs(t.number) > 1e6) fail(t, fmt::format("{} must be an integer", what));
    return static_cast<int>(t.number);
  }

  ColumnRef colref() {
    const Token& t = peek();
    if (t.kind == Tok::ident && iequals(t.text, "col") && peek(1).kind == Tok::lparen) {
      advance();
      advance();
      const Token& s = expect(Tok::string, "column name string");
      ColumnRef ref{s.text, t.offset};
      expect(Tok::rparen, "')'");
      return ref;
    }
    if (t.kind == Tok::ident && !is_keyword(t.text) && peek(1).kind != Tok::lparen) {
      advance();
      return ColumnRef{t.text, t.offset};
    }
    fail(t, fmt::format("expected column reference, found {}", describe(t)));
  }

  Expr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::number: {
        advance();
        Expr e = make::lit(t.number);
        e.offset = t.offset;
        return e;
      }
      case Tok::lparen: {
        advance();
        Expr e = expr();
        expect(Tok::rparen, "')'");
        return e;
      }
      case Tok::ident: break;
      default: fail(t, fmt::format("expected expression, found {}", describe(t)));
    }
    if (iequals(t.text, "if")) return conditional();
    if (iequals(t.text, "col") || peek(1).kind != Tok::lparen) {
      if (is_keyword(t.text)) fail(t, fmt::format("unexpected keyword '{}'", t.text));
      ColumnRef ref = colref();
      Expr e{std::move(ref)};
      e.offset = t.offset;
      return e;
    }
    Expr e = call();
    e.offset = t.offset;
    return e;
  }

  Expr conditional() {
    advance();  // if
    Expr lhs = expr();
    CmpOp cmp;
    switch (peek().kind) {
      case Tok::lt: cmp = CmpOp::lt; break;
      case Tok::le: cmp = CmpOp::le; break;
      case Tok::gt: cmp = CmpOp::gt; break;
      case Tok::ge: cmp = CmpOp::ge; break;
      case Tok::eqeq: cmp = CmpOp::eq; break;
      default: fail(peek(), fmt::format("expected comparison operator, found {}", describe(peek())));
    }
    advance();
    Expr rhs = expr();
    if (peek().kind != Tok::ident || !iequals(peek().text, "then"))
      fail(peek(), fmt::format("expected 'then', found {}", describe(peek())));
    advance();
    Expr then_branch = expr();
    if (peek().kind != Tok::ident || !iequals(peek().text, "else"))
      fail(peek(), fmt::format("expected 'else', found {}", describe(peek())));
    advance();
    Expr else_branch = expr();
    return make::if_then_else(cmp, std::move(lhs), std::move(rhs), std::move(then_branch), std::move(else_branch));
  }

  // Optional `name=` prefix for keyword arguments.
  void keyword(std::string_view name) {
    if (peek().kind == Tok::ident && iequals(peek().text, name) && peek(1).kind == Tok::assign) {
      advance();
      advance();
    }
  }

  Expr call() {
    const Token& fn = advance();
    const std::string fname = fn.text;
    expect(Tok::lparen, "'('");
    Expr result;
    if (auto op = parse_unary_op(fname)) {
      result = make::unary(*op, expr());
    } else if (auto bop = parse_binary_op(fname)) {
      Expr a = expr();
      expect(Tok::comma, "','");
      Expr b = expr();
      result = make::binary(*bop, std::move(a), std::move(b));
    } else if (iequals(fname, "zscore")) {
      result = make::zscore(expr());
    } else if (iequals(fname, "bin")) {
      Expr a = expr();
      expect(Tok::comma, "','");
      keyword("n");
      const Token& at = peek();
      const int bins = integer("bin count");
      if (bins < kMinBins || bins > kMaxBins)
        fail(at, fmt::format("bin count {} outside [{}, {}]", bins, kMinBins, kMaxBins));
      result = make::bin(std::move(a), bins);
    } else if (iequals(fname, "clip")) {
      Expr a = expr();
      expect(Tok::comma, "','");
      keyword("lo");
      const Token& at = peek();
      const double lo = signed_number("lower bound");
      expect(Tok::comma, "','");
      keyword("hi");
      const double hi = signed_number("upper bound");
      if (lo > hi) fail(at, "clip lower bound exceeds upper bound");
      result = make::clip(std::move(a), lo, hi);
    } else if (iequals(fname, "group_agg")) {
      keyword("agg");
      const Token& agg_tok = expect(Tok::ident, "aggregate name");
      auto agg = parse_agg_op(agg_tok.text);
      if (!agg) fail(agg_tok, fmt::format("unknown aggregate '{}' (mean, std, min, max, count)", agg_tok.text));
      expect(Tok::comma, "','");
      keyword("key");
      ColumnRef key = colref();
      expect(Tok::comma, "','");
      keyword("value");
      Expr value = expr();
      result = Expr{GroupAgg{*agg, std::move(key), std::move(value)}};
    } else if (iequals(fname, "cluster")) {
      keyword("k");
      const Token& at = peek();
      const int k = integer("cluster count");
      if (k < kMinClusters || k > kMaxClusters)
        fail(at, fmt::format("cluster count {} outside [{}, {}]", k, kMinClusters, kMaxClusters));
      Cluster c{k, {}};
      expect(Tok::comma, "','");
      keyword("cols");
      const bool bracketed = accept(Tok::lbracket);
      c.cols.push_back(colref());
      while (accept(Tok::comma)) c.cols.push_back(colref());
      if (bracketed) expect(Tok::rbracket, "']'");
      result = Expr{std::move(c)};
    } else if (iequals(fname, "date_part")) {
      keyword("part");
      const Token& part_tok = expect(Tok::ident, "date part");
      auto part = parse_date_part(part_tok.text);
      if (!part) fail(part_tok, fmt::format("unknown date part '{}' (year, month, day, dow, hour)", part_tok.text));
      expect(Tok::comma, "','");
      result = Expr{DatePart{*part, colref()}};
    } else if (iequals(fname, "elapsed_days")) {
      ColumnRef to = colref();
      expect(Tok::comma, "','");
      ColumnRef from = colref();
      result = Expr{ElapsedDays{std::move(to), std::move(from)}};
    } else {
      fail(fn, fmt::format("unknown function '{}'", fname));
    }
    expect(Tok::rparen, "')'");
    return result;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int recursion_ = 0;
};

// Pre-order walk reporting the first node deeper than kMaxDepth and the node
// that pushes the count past kMaxNodes.
class LimitChecker {
 public:
  void check(const Expr& e, int depth) {
    visit_node(e.offset, depth);
    std::visit(Overloaded{
                   [&](const Literal&) {},
                   [&](const ColumnRef&) {},
                   [&](const Unary& n) { check(*n.arg, depth + 1); },
                   [&](const Binary& n) {
                     check(*n.lhs, depth + 1);
                     check(*n.rhs, depth + 1);
                   },
                   [&](const IfThenElse& n) {
                     check(*n.lhs, depth + 1);
                     check(*n.rhs, depth + 1);
                     check(*n.then_branch, depth + 1);
                     check(*n.else_branch, depth + 1);
                   },
                   [&](const GroupAgg& n) {
                     visit_node(n.key.offset, depth + 1);
                     check(*n.value, depth + 1);
                   },
                   [&](const Bin& n) { check(*n.arg, depth + 1); },
                   [&](const Clip& n) { check(*n.arg, depth + 1); },
                   [&](const ZScore& n) { check(*n.arg, depth + 1); },
                   [&](const Cluster& n) {
                     for (const auto& c : n.cols) visit_node(c.offset, depth + 1);
                   },
                   [&](const DatePart& n) { visit_node(n.col.offset, depth + 1); },
                   [&](const ElapsedDays& n) {
                     visit_node(n.to.offset, depth + 1);
                     visit_node(n.from.offset, depth + 1);
                   },
               },
               e.node);
  }

 private:
  void visit_node(std::size_t offset, int depth) {
    if (depth > kMaxDepth)
      throw ParseError(ParseErrorKind::limit, offset, fmt::format("expression depth exceeds {}", kMaxDepth));
    if (++nodes_ > kMaxNodes)
      throw ParseError(ParseErrorKind::limit, offset, fmt::format("expression has more than {} nodes", kMaxNodes));
  }
  int nodes_ = 0;
};

}  // namespace

Program parse(std::string_view text) {
  Parser parser(lex(text));
  Program p = parser.program();
  LimitChecker{}.check(p.body, 1);
  return p;
}

Expr parse_expr(std::string_view text) {
  Parser parser(lex(text));
  Expr e = parser.bare();
  LimitChecker{}.check(e, 1);
  return e;
}

}  // namespace malmas::dsl
