#include "tidyfit/formula.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

namespace tidyfit {

std::string_view to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Subtract: return "-";
    case BinaryOp::Multiply: return "*";
    case BinaryOp::Divide: return "/";
    case BinaryOp::Power: return "^";
  }
  return "?";
}

std::string_view to_string(Function fn) {
  switch (fn) {
    case Function::Log: return "log";
    case Function::Log10: return "log10";
    case Function::Exp: return "exp";
    case Function::Sqrt: return "sqrt";
  }
  return "?";
}

std::optional<Function> function_from_name(std::string_view name) {
  if (name == "log") return Function::Log;
  if (name == "log10") return Function::Log10;
  if (name == "exp") return Function::Exp;
  if (name == "sqrt") return Function::Sqrt;
  return std::nullopt;
}

ExprPtr make_constant(double value) { return std::make_shared<const Expr>(Constant{value}); }
ExprPtr make_symbol(std::string name) { return std::make_shared<const Expr>(Symbol{std::move(name)}); }
ExprPtr make_negate(ExprPtr operand) { return std::make_shared<const Expr>(Negate{std::move(operand)}); }
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  return std::make_shared<const Expr>(Binary{op, std::move(lhs), std::move(rhs)});
}
ExprPtr make_call(Function fn, ExprPtr arg) { return std::make_shared<const Expr>(Call{fn, std::move(arg)}); }

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node().index() != b.node().index()) return false;
  if (const auto* c = a.as<Constant>()) return c->value == b.as<Constant>()->value;
  if (const auto* s = a.as<Symbol>()) return s->name == b.as<Symbol>()->name;
  if (const auto* n = a.as<Negate>()) return structurally_equal(*n->operand, *b.as<Negate>()->operand);
  if (const auto* x = a.as<Binary>()) {
    const auto* y = b.as<Binary>();
    return x->op == y->op && structurally_equal(*x->lhs, *y->lhs) && structurally_equal(*x->rhs, *y->rhs);
  }
  const auto* x = a.as<Call>();
  const auto* y = b.as<Call>();
  return x->fn == y->fn && structurally_equal(*x->arg, *y->arg);
}

// ---------------------------------------------------------------------------
// Printing

namespace {

int precedence(const Expr& e) {
  if (const auto* b = e.as<Binary>()) {
    switch (b->op) {
      case BinaryOp::Add:
      case BinaryOp::Subtract: return 1;
      case BinaryOp::Multiply:
      case BinaryOp::Divide: return 2;
      case BinaryOp::Power: return 3;
    }
  }
  return 4;
}

std::string format_constant(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string wrap_if(const Expr& e, bool parens) {
  return parens ? "(" + to_string(e) + ")" : to_string(e);
}

}  // namespace

std::string to_string(const Expr& expr) {
  if (const auto* c = expr.as<Constant>()) return format_constant(c->value);
  if (const auto* s = expr.as<Symbol>()) return s->name;
  if (const auto* n = expr.as<Negate>()) return "-" + wrap_if(*n->operand, precedence(*n->operand) < 4);
  if (const auto* call = expr.as<Call>()) return std::string(to_string(call->fn)) + "(" + to_string(*call->arg) + ")";

  const auto& b = *expr.as<Binary>();
  const int lp = precedence(*b.lhs), rp = precedence(*b.rhs);
  switch (b.op) {
    case BinaryOp::Add:
    case BinaryOp::Subtract:
      return wrap_if(*b.lhs, lp < 1) + " " + std::string(to_string(b.op)) + " " + wrap_if(*b.rhs, rp <= 1);
    case BinaryOp::Multiply:
    case BinaryOp::Divide:
      return wrap_if(*b.lhs, lp < 2) + " " + std::string(to_string(b.op)) + " " + wrap_if(*b.rhs, rp <= 2);
    case BinaryOp::Power:
      return wrap_if(*b.lhs, lp <= 3) + "^" + wrap_if(*b.rhs, rp <= 3);
  }
  return "?";
}

namespace {

void collect_symbols(const Expr& e, std::vector<std::string>& out) {
  if (const auto* s = e.as<Symbol>()) {
    if (std::find(out.begin(), out.end(), s->name) == out.end()) out.push_back(s->name);
  } else if (const auto* n = e.as<Negate>()) {
    collect_symbols(*n->operand, out);
  } else if (const auto* b = e.as<Binary>()) {
    collect_symbols(*b->lhs, out);
    collect_symbols(*b->rhs, out);
  } else if (const auto* c = e.as<Call>()) {
    collect_symbols(*c->arg, out);
  }
}

}  // namespace

std::vector<std::string> symbols(const Expr& expr) {
  std::vector<std::string> out;
  collect_symbols(expr, out);
  return out;
}

bool depends_on(const Expr& expr, std::string_view name) {
  if (const auto* s = expr.as<Symbol>()) return s->name == name;
  if (const auto* n = expr.as<Negate>()) return depends_on(*n->operand, name);
  if (const auto* b = expr.as<Binary>()) return depends_on(*b->lhs, name) || depends_on(*b->rhs, name);
  if (const auto* c = expr.as<Call>()) return depends_on(*c->arg, name);
  return false;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

enum class Tok { Number, Name, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
  Tok kind;
  std::size_t offset;
  std::size_t end;
  std::string text;
  double number = 0.0;
};

bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

[[noreturn]] void syntax_error(std::size_t offset, const std::string& what) {
  throw Error(ErrorKind::Parse, "syntax error at byte " + std::to_string(offset) + ": " + what);
}

std::vector<Token> lex(std::string_view text, std::size_t base) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    auto single = [&](Tok k) {
      out.push_back({k, base + start, base + start + 1, std::string(1, c)});
      ++i;
    };
    if (digit(c) || (c == '.' && i + 1 < text.size() && digit(text[i + 1]))) {
      while (i < text.size() && digit(text[i])) ++i;
      if (i < text.size() && text[i] == '.') {
        ++i;
        while (i < text.size() && digit(text[i])) ++i;
      }
      if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < text.size() && (text[j] == '+' || text[j] == '-')) ++j;
        if (j < text.size() && digit(text[j])) {
          i = j;
          while (i < text.size() && digit(text[i])) ++i;
        }
      }
      Token t{Tok::Number, base + start, base + i, std::string(text.substr(start, i - start))};
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
      if (ec != std::errc{} || ptr != t.text.data() + t.text.size()) syntax_error(base + start, "bad number '" + t.text + "'");
      out.push_back(std::move(t));
    } else if (name_start(c) || (c == '.' && (i + 1 >= text.size() || !digit(text[i + 1])))) {
      while (i < text.size() && name_char(text[i])) ++i;
      out.push_back({Tok::Name, base + start, base + i, std::string(text.substr(start, i - start))});
    } else {
      switch (c) {
        case '+': single(Tok::Plus); break;
        case '-': single(Tok::Minus); break;
        case '*': single(Tok::Star); break;
        case '/': single(Tok::Slash); break;
        case '^': single(Tok::Caret); break;
        case '(': single(Tok::LParen); break;
        case ')': single(Tok::RParen); break;
        case ',': single(Tok::Comma); break;
        default: syntax_error(base + start, std::string("unexpected character '") + c + "'");
      }
    }
  }
  out.push_back({Tok::End, base + text.size(), base + text.size(), ""});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  ExprPtr parse_all() {
    auto e = expr();
    expect_end();
    return e;
  }

  /// Top-level "+"-separated terms with their source byte spans.
  std::vector<std::pair<ExprPtr, std::pair<std::size_t, std::size_t>>> parse_terms() {
    std::vector<std::pair<ExprPtr, std::pair<std::size_t, std::size_t>>> out;
    while (true) {
      const std::size_t begin = peek().offset;
      auto t = term();
      out.push_back({t, {begin, tokens_[pos_ - 1].end}});
      if (peek().kind == Tok::Plus) {
        ++pos_;
        continue;
      }
      if (peek().kind == Tok::Minus)
        throw Error(ErrorKind::Unsupported,
                    "term removal with '-' is not supported (byte " + std::to_string(peek().offset) + ")");
      break;
    }
    expect_end();
    return out;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }

  void expect_end() {
    if (peek().kind != Tok::End) syntax_error(peek().offset, "unexpected '" + peek().text + "'");
  }

  ExprPtr expr() {
    auto lhs = term();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const auto op = peek().kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Subtract;
      ++pos_;
      lhs = make_binary(op, lhs, term());
    }
    return lhs;
  }

  ExprPtr term() {
    auto lhs = factor();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const auto op = peek().kind == Tok::Star ? BinaryOp::Multiply : BinaryOp::Divide;
      ++pos_;
      lhs = make_binary(op, lhs, factor());
    }
    return lhs;
  }

  ExprPtr factor() {
    auto base = primary();
    if (peek().kind == Tok::Caret) {
      ++pos_;
      return make_binary(BinaryOp::Power, base, primary());
    }
    return base;
  }

  ExprPtr primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number:
        ++pos_;
        return make_constant(t.number);
      case Tok::Minus:
        ++pos_;
        return make_negate(primary());
      case Tok::LParen: {
        ++pos_;
        auto inner = expr();
        if (peek().kind != Tok::RParen) syntax_error(peek().offset, "expected ')'");
        ++pos_;
        return inner;
      }
      case Tok::Name: {
        ++pos_;
        if (peek().kind != Tok::LParen) return make_symbol(t.text);
        if (t.text == "ns")
          throw Error(ErrorKind::Unsupported, "unsupported: spline basis 'ns()' (byte " + std::to_string(t.offset) + ")");
        const auto fn = function_from_name(t.text);
        if (!fn)
          throw Error(ErrorKind::Parse, "unknown function '" + t.text + "' at byte " + std::to_string(t.offset));
        ++pos_;
        auto arg = expr();
        if (peek().kind != Tok::RParen) syntax_error(peek().offset, "expected ')'");
        ++pos_;
        return make_call(*fn, arg);
      }
      case Tok::End:
        syntax_error(t.offset, "unexpected end of input");
      default:
        syntax_error(t.offset, "unexpected '" + t.text + "'");
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

ExprPtr parse_expression(std::string_view text) { return Parser(lex(text, 0)).parse_all(); }

std::vector<std::string> NlsFormula::parameter_names() const {
  std::vector<std::string> out;
  for (const auto& [name, value] : parameters) out.push_back(name);
  return out;
}

std::vector<std::string> NlsFormula::data_symbols() const {
  const auto params = parameter_names();
  std::vector<std::string> out;
  for (const auto* e : {response.get(), rhs.get()})
    for (auto& s : symbols(*e))
      if (std::find(params.begin(), params.end(), s) == params.end() &&
          std::find(out.begin(), out.end(), s) == out.end())
        out.push_back(s);
  return out;
}

Formula parse_formula(std::string_view text, const std::optional<StartValues>& start) {
  const auto tilde = text.find('~');
  if (tilde == std::string_view::npos) throw Error(ErrorKind::Parse, "formula has no '~'");
  if (text.find('~', tilde + 1) != std::string_view::npos)
    syntax_error(text.find('~', tilde + 1), "formula has more than one '~'");

  const auto lhs_text = text.substr(0, tilde);
  const auto rhs_text = text.substr(tilde + 1);
  if (trim(lhs_text).empty()) syntax_error(0, "formula has no response");
  auto response = Parser(lex(lhs_text, 0)).parse_all();

  if (start) {
    if (start->empty()) throw Error(ErrorKind::Argument, "nonlinear formula needs at least one parameter");
    for (std::size_t i = 0; i < start->size(); ++i) {
      const auto& [name, value] = (*start)[i];
      for (std::size_t j = 0; j < i; ++j)
        if ((*start)[j].first == name) throw Error(ErrorKind::Argument, "parameter '" + name + "' declared twice");
      if (!std::isfinite(value)) throw Error(ErrorKind::Argument, "start value for '" + name + "' is not finite");
    }
    auto rhs = Parser(lex(rhs_text, tilde + 1)).parse_all();
    for (const auto& [name, value] : *start)
      if (depends_on(*response, name))
        throw Error(ErrorKind::Argument, "parameter '" + name + "' appears in the response");
    return NlsFormula{response, rhs, *start};
  }

  LinearFormula f;
  f.response = response;
  for (auto& [term, span] : Parser(lex(rhs_text, tilde + 1)).parse_terms()) {
    if (const auto* c = term->as<Constant>(); c && c->value == 1.0) continue;  // explicit intercept
    f.terms.push_back(term);
    f.term_names.emplace_back(trim(text.substr(span.first, span.second - span.first)));
  }
  return f;
}

LinearFormula parse_linear_formula(std::string_view text) {
  return std::get<LinearFormula>(parse_formula(text));
}

NlsFormula parse_nls_formula(std::string_view text, StartValues start) {
  return std::get<NlsFormula>(parse_formula(text, std::move(start)));
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

using Array = Eigen::ArrayXd;

Array eval_array(const Expr& e, const Bindings& b, Eigen::Index n) {
  if (const auto* c = e.as<Constant>()) return Array::Constant(n, c->value);
  if (const auto* s = e.as<Symbol>()) {
    const auto it = b.find(s->name);
    if (it == b.end()) throw Error(ErrorKind::Argument, "unbound symbol '" + s->name + "'");
    if (const auto* scalar = std::get_if<double>(&it->second)) return Array::Constant(n, *scalar);
    return std::get<VectorXd>(it->second).array();
  }
  if (const auto* neg = e.as<Negate>()) return -eval_array(*neg->operand, b, n);
  if (const auto* call = e.as<Call>()) {
    const Array a = eval_array(*call->arg, b, n);
    switch (call->fn) {
      case Function::Log: return a.log();
      case Function::Log10: return a.unaryExpr([](double v) { return std::log10(v); });
      case Function::Exp: return a.exp();
      case Function::Sqrt: return a.sqrt();
    }
  }
  const auto& bin = *e.as<Binary>();
  const Array l = eval_array(*bin.lhs, b, n);
  const Array r = eval_array(*bin.rhs, b, n);
  switch (bin.op) {
    case BinaryOp::Add: return l + r;
    case BinaryOp::Subtract: return l - r;
    case BinaryOp::Multiply: return l * r;
    case BinaryOp::Divide: return l / r;
    case BinaryOp::Power: return l.binaryExpr(r, [](double x, double y) { return std::pow(x, y); });
  }
  throw Error(ErrorKind::Internal, "unknown expression node");
}

}  // namespace

VectorXd eval_expr(const Expr& expr, const Bindings& bindings) {
  std::optional<Eigen::Index> n;
  for (const auto& [name, binding] : bindings) {
    if (const auto* v = std::get_if<VectorXd>(&binding)) {
      if (n && *n != v->size())
        throw Error(ErrorKind::Argument, "binding '" + name + "' has length " + std::to_string(v->size()) +
                                             ", expected " + std::to_string(*n));
      n = v->size();
    }
  }
  return eval_array(expr, bindings, n.value_or(1)).matrix();
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

bool is_const(const ExprPtr& e, double v) {
  const auto* c = e->as<Constant>();
  return c && c->value == v;
}

ExprPtr add(ExprPtr a, ExprPtr b) {
  if (is_const(a, 0)) return b;
  if (is_const(b, 0)) return a;
  return make_binary(BinaryOp::Add, a, b);
}
ExprPtr sub(ExprPtr a, ExprPtr b) {
  if (is_const(b, 0)) return a;
  if (is_const(a, 0)) return make_negate(b);
  return make_binary(BinaryOp::Subtract, a, b);
}
ExprPtr mul(ExprPtr a, ExprPtr b) {
  if (is_const(a, 0) || is_const(b, 0)) return make_constant(0);
  if (is_const(a, 1)) return b;
  if (is_const(b, 1)) return a;
  return make_binary(BinaryOp::Multiply, a, b);
}
ExprPtr div(ExprPtr a, ExprPtr b) {
  if (is_const(a, 0)) return make_constant(0);
  if (is_const(b, 1)) return a;
  return make_binary(BinaryOp::Divide, a, b);
}
ExprPtr pow(ExprPtr a, double c) {
  if (c == 1) return a;
  if (c == 0) return make_constant(1);
  return make_binary(BinaryOp::Power, a, make_constant(c));
}
ExprPtr neg(ExprPtr a) {
  if (is_const(a, 0)) return a;
  return make_negate(a);
}

ExprPtr derive(const ExprPtr& e, std::string_view x) {
  if (!depends_on(*e, x)) return make_constant(0);
  if (e->as<Symbol>()) return make_constant(1);
  if (const auto* n = e->as<Negate>()) return neg(derive(n->operand, x));
  if (const auto* call = e->as<Call>()) {
    const auto& u = call->arg;
    const auto du = derive(u, x);
    switch (call->fn) {
      case Function::Log: return div(du, u);
      case Function::Log10: return div(du, mul(u, make_constant(std::numbers::ln10)));
      case Function::Exp: return mul(du, e);
      case Function::Sqrt: return div(du, mul(make_constant(2), e));
    }
  }
  const auto& b = *e->as<Binary>();
  const auto& u = b.lhs;
  const auto& v = b.rhs;
  const bool du_dep = depends_on(*u, x);
  const bool dv_dep = depends_on(*v, x);
  switch (b.op) {
    case BinaryOp::Add: return add(derive(u, x), derive(v, x));
    case BinaryOp::Subtract: return sub(derive(u, x), derive(v, x));
    case BinaryOp::Multiply:
      if (!dv_dep) return mul(derive(u, x), v);
      if (!du_dep) return mul(u, derive(v, x));
      return add(mul(derive(u, x), v), mul(u, derive(v, x)));
    case BinaryOp::Divide:
      if (!dv_dep) return div(derive(u, x), v);
      if (!du_dep) return neg(div(mul(u, derive(v, x)), pow(v, 2)));
      return div(sub(mul(derive(u, x), v), mul(u, derive(v, x))), pow(v, 2));
    case BinaryOp::Power: {
      if (!symbols(*v).empty())
        throw Error(ErrorKind::Unsupported, "cannot differentiate '" + to_string(*e) +
                                                "': exponent is not constant");
      const double c = eval_expr(*v, {})(0);
      return mul(mul(make_constant(c), pow(u, c - 1)), derive(u, x));
    }
  }
  throw Error(ErrorKind::Internal, "unknown expression node");
}

}  // namespace

ExprPtr differentiate(const ExprPtr& expr, std::string_view with_respect_to) {
  if (function_from_name(with_respect_to))
    throw Error(ErrorKind::Argument, "cannot differentiate with respect to function name '" +
                                         std::string(with_respect_to) + "'");
  return derive(expr, with_respect_to);
}

// ---------------------------------------------------------------------------
// Design matrices

Bindings bind_columns(const Frame& frame, const std::vector<std::string>& names) {
  Bindings out;
  for (const auto& name : names) {
    if (!frame.has_column(name)) throw Error(ErrorKind::Schema, "unresolved symbol '" + name + "'");
    const auto values = frame.column(name).as_doubles();
    out.emplace(name, VectorXd(Eigen::Map<const VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()))));
  }
  return out;
}

DesignMatrix design_matrix(const LinearFormula& formula, const Frame& frame) {
  if (frame.n_rows() == 0) throw Error(ErrorKind::InsufficientData, "no rows to fit");
  std::vector<std::string> needed = symbols(*formula.response);
  for (const auto& t : formula.terms)
    for (auto& s : symbols(*t))
      if (std::find(needed.begin(), needed.end(), s) == needed.end()) needed.push_back(s);
  const Bindings bindings = bind_columns(frame, needed);
  const auto n = static_cast<Eigen::Index>(frame.n_rows());

  auto evaluate = [&](const Expr& e, const std::string& label) {
    // An expression without symbols still needs one value per row.
    VectorXd v = eval_expr(e, bindings);
    if (v.size() != n) v = VectorXd::Constant(n, v(0));
    for (Eigen::Index i = 0; i < n; ++i)
      if (!std::isfinite(v(i)))
        throw Error(ErrorKind::Argument, "non-finite value in '" + label + "' at row " + std::to_string(i + 1));
    return v;
  };

  DesignMatrix out;
  out.y = evaluate(*formula.response, to_string(*formula.response));
  out.x.resize(n, static_cast<Eigen::Index>(formula.terms.size() + 1));
  out.x.col(0).setOnes();
  out.names.push_back("(Intercept)");
  for (std::size_t j = 0; j < formula.terms.size(); ++j) {
    out.x.col(static_cast<Eigen::Index>(j + 1)) = evaluate(*formula.terms[j], formula.term_names[j]);
    out.names.push_back(formula.term_names[j]);
  }
  return out;
}

}  // namespace tidyfit
