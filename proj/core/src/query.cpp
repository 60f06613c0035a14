#include "olaraw/query.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>

#include "olaraw/error.hpp"

namespace olaraw {

std::string_view to_string(AggregateKind kind) {
  switch (kind) {
    case AggregateKind::kSum: return "SUM";
    case AggregateKind::kCount: return "COUNT";
    case AggregateKind::kAvg: return "AVG";
  }
  return "?";
}

ExprPtr Expr::make_number(double v, bool integral) {
  auto e = std::make_shared<Expr>();
  e->op = Op::kNumber;
  e->number = v;
  e->integral_literal = integral;
  return e;
}

ExprPtr Expr::make_column(std::string name) {
  auto e = std::make_shared<Expr>();
  e->op = Op::kColumn;
  e->column = std::move(name);
  return e;
}

ExprPtr Expr::make_binary(Op op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  return e;
}

ExprPtr Expr::make_neg(ExprPtr operand) {
  auto e = std::make_shared<Expr>();
  e->op = Op::kNeg;
  e->lhs = std::move(operand);
  return e;
}

namespace {

// ---------------------------------------------------------------- lexer

struct Token {
  enum class Kind { kIdent, kNumber, kSymbol, kEnd };
  Kind kind = Kind::kEnd;
  std::string text;  // identifiers keep their spelling; symbols as written
  std::size_t pos = 0;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char ch = text[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
      continue;
    }
    Token t;
    t.pos = i;
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
      t.kind = Token::Kind::kIdent;
      t.text = std::string(text.substr(i, j - i));
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(ch)) || (ch == '.' && i + 1 < text.size() &&
                                                               std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      std::size_t j = i;
      while (j < text.size() && (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.')) ++j;
      if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) {
          j = k;
          while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
        }
      }
      t.kind = Token::Kind::kNumber;
      t.text = std::string(text.substr(i, j - i));
      i = j;
    } else {
      static constexpr std::string_view kTwo[] = {"<=", ">=", "!=", "<>"};
      t.kind = Token::Kind::kSymbol;
      bool matched = false;
      for (auto two : kTwo) {
        if (text.substr(i, 2) == two) {
          t.text = std::string(two);
          i += 2;
          matched = true;
          break;
        }
      }
      if (!matched) {
        if (std::string_view("+-*(),<>=;").find(ch) == std::string_view::npos)
          throw ParseError(std::string("unexpected character '") + ch + "'", i);
        t.text = std::string(1, ch);
        ++i;
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.pos = text.size();
  out.push_back(end);
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return std::toupper(x) == std::toupper(y); });
}

constexpr std::string_view kKeywords[] = {"SELECT", "FROM", "WHERE", "GROUP", "BY", "AND", "OR", "BETWEEN"};

bool is_keyword(std::string_view s) {
  return std::any_of(std::begin(kKeywords), std::end(kKeywords), [&](auto k) { return iequals(s, k); });
}

// ---------------------------------------------------------------- parser

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(tokenize(text)) {}

  AggregateQuery parse() {
    AggregateQuery q;
    expect_keyword("SELECT");
    const Token& agg = peek();
    if (agg.kind != Token::Kind::kIdent) throw ParseError("expected aggregate", agg.pos);
    if (iequals(agg.text, "SUM")) q.kind = AggregateKind::kSum;
    else if (iequals(agg.text, "COUNT")) q.kind = AggregateKind::kCount;
    else if (iequals(agg.text, "AVG")) q.kind = AggregateKind::kAvg;
    else throw ParseError("unknown aggregate '" + agg.text + "'", agg.pos);
    ++pos_;
    expect_symbol("(");
    if (q.kind == AggregateKind::kCount && peek_symbol("*")) {
      ++pos_;
      q.count_star = true;
      q.expression = Expr::make_number(1.0, true);
    } else {
      q.expression = parse_expr();
    }
    expect_symbol(")");
    expect_keyword("FROM");
    q.table = expect_identifier("table name");
    if (peek_keyword("WHERE")) {
      ++pos_;
      q.predicate = parse_pred();
    }
    if (peek_keyword("GROUP")) {
      ++pos_;
      expect_keyword("BY");
      q.group_column = expect_identifier("group column");
    }
    if (peek_symbol(";")) ++pos_;
    if (peek().kind != Token::Kind::kEnd) throw ParseError("unexpected trailing input '" + peek().text + "'", peek().pos);
    return q;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  bool peek_symbol(std::string_view s) const {
    return peek().kind == Token::Kind::kSymbol && peek().text == s;
  }
  bool peek_keyword(std::string_view k) const {
    return peek().kind == Token::Kind::kIdent && iequals(peek().text, k);
  }
  void expect_symbol(std::string_view s) {
    if (!peek_symbol(s)) throw ParseError("expected '" + std::string(s) + "'", peek().pos);
    ++pos_;
  }
  void expect_keyword(std::string_view k) {
    if (!peek_keyword(k)) throw ParseError("expected " + std::string(k), peek().pos);
    ++pos_;
  }
  std::string expect_identifier(std::string_view what) {
    if (peek().kind != Token::Kind::kIdent || is_keyword(peek().text))
      throw ParseError("expected " + std::string(what), peek().pos);
    return tokens_[pos_++].text;
  }

  ExprPtr parse_expr() {
    ExprPtr lhs = parse_term();
    while (peek_symbol("+") || peek_symbol("-")) {
      auto op = peek().text == "+" ? Expr::Op::kAdd : Expr::Op::kSub;
      ++pos_;
      lhs = Expr::make_binary(op, lhs, parse_term());
    }
    return lhs;
  }

  ExprPtr parse_term() {
    ExprPtr lhs = parse_factor();
    while (peek_symbol("*")) {
      ++pos_;
      lhs = Expr::make_binary(Expr::Op::kMul, lhs, parse_factor());
    }
    return lhs;
  }

  ExprPtr parse_factor() {
    const Token& t = peek();
    if (t.kind == Token::Kind::kNumber) {
      ++pos_;
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (ec != std::errc() || ptr != t.text.data() + t.text.size()) throw ParseError("bad number '" + t.text + "'", t.pos);
      const bool integral = t.text.find_first_of(".eE") == std::string::npos;
      return Expr::make_number(v, integral);
    }
    if (t.kind == Token::Kind::kIdent) {
      if (is_keyword(t.text)) throw ParseError("expected expression, found keyword '" + t.text + "'", t.pos);
      ++pos_;
      return Expr::make_column(t.text);
    }
    if (peek_symbol("(")) {
      ++pos_;
      ExprPtr e = parse_expr();
      expect_symbol(")");
      return e;
    }
    if (peek_symbol("-")) {
      ++pos_;
      return Expr::make_neg(parse_factor());
    }
    throw ParseError("expected expression", t.pos);
  }

  PredPtr parse_pred() {
    PredPtr lhs = parse_and();
    while (peek_keyword("OR")) {
      ++pos_;
      auto p = std::make_shared<Pred>();
      p->kind = Pred::Kind::kOr;
      p->lhs = lhs;
      p->rhs = parse_and();
      lhs = p;
    }
    return lhs;
  }

  PredPtr parse_and() {
    PredPtr lhs = parse_atom();
    while (peek_keyword("AND")) {
      ++pos_;
      auto p = std::make_shared<Pred>();
      p->kind = Pred::Kind::kAnd;
      p->lhs = lhs;
      p->rhs = parse_atom();
      lhs = p;
    }
    return lhs;
  }

  PredPtr parse_atom() {
    if (peek_symbol("(")) {
      // "(pred)" or a comparison whose left side starts with "(expr)"
      const std::size_t saved = pos_;
      try {
        ++pos_;
        PredPtr inner = parse_pred();
        expect_symbol(")");
        return inner;
      } catch (const ParseError&) {
        pos_ = saved;
      }
    }
    auto p = std::make_shared<Pred>();
    p->a = parse_expr();
    if (peek_keyword("BETWEEN")) {
      ++pos_;
      p->kind = Pred::Kind::kBetween;
      p->b = parse_expr();
      expect_keyword("AND");
      p->c = parse_expr();
      return p;
    }
    const Token& t = peek();
    if (t.kind != Token::Kind::kSymbol) throw ParseError("expected comparison operator", t.pos);
    if (t.text == "<") p->cmp = CompareOp::kLt;
    else if (t.text == "<=") p->cmp = CompareOp::kLe;
    else if (t.text == ">") p->cmp = CompareOp::kGt;
    else if (t.text == ">=") p->cmp = CompareOp::kGe;
    else if (t.text == "=") p->cmp = CompareOp::kEq;
    else if (t.text == "!=" || t.text == "<>") p->cmp = CompareOp::kNe;
    else throw ParseError("expected comparison operator", t.pos);
    ++pos_;
    p->kind = Pred::Kind::kCompare;
    p->b = parse_expr();
    return p;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

void collect_columns(const Expr& e, std::vector<std::string>& out) {
  if (e.op == Expr::Op::kColumn) {
    if (std::find(out.begin(), out.end(), e.column) == out.end()) out.push_back(e.column);
    return;
  }
  if (e.lhs) collect_columns(*e.lhs, out);
  if (e.rhs) collect_columns(*e.rhs, out);
}

void collect_columns(const Pred& p, std::vector<std::string>& out) {
  for (const auto* e : {p.a.get(), p.b.get(), p.c.get()})
    if (e) collect_columns(*e, out);
  if (p.lhs) collect_columns(*p.lhs, out);
  if (p.rhs) collect_columns(*p.rhs, out);
}

int precedence(const Expr& e) {
  switch (e.op) {
    case Expr::Op::kAdd:
    case Expr::Op::kSub: return 1;
    case Expr::Op::kMul: return 2;
    case Expr::Op::kNeg: return 3;
    default: return 4;
  }
}

std::string number_text(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void print(const Expr& e, std::string& out) {
  auto child = [&](const Expr& c, bool parens) {
    if (parens) out += '(';
    print(c, out);
    if (parens) out += ')';
  };
  switch (e.op) {
    case Expr::Op::kNumber: {
      std::string s = number_text(e.number);
      // keep the literal's integral-ness across a round trip
      if (!e.integral_literal && s.find_first_of(".e") == std::string::npos) s += ".0";
      if (e.integral_literal && s.find_first_of(".e") != std::string::npos) {
        char buf[64];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), e.number, std::chars_format::fixed);
        s.assign(buf, ptr);
      }
      out += s;
      return;
    }
    case Expr::Op::kColumn: out += e.column; return;
    case Expr::Op::kNeg:
      out += '-';
      child(*e.lhs, precedence(*e.lhs) < 3 || e.lhs->op == Expr::Op::kNeg);
      return;
    default: {
      const int p = precedence(e);
      child(*e.lhs, precedence(*e.lhs) < p);
      out += e.op == Expr::Op::kAdd ? " + " : e.op == Expr::Op::kSub ? " - " : " * ";
      child(*e.rhs, precedence(*e.rhs) <= p);
    }
  }
}

int precedence(const Pred& p) {
  switch (p.kind) {
    case Pred::Kind::kOr: return 1;
    case Pred::Kind::kAnd: return 2;
    default: return 3;
  }
}

std::string_view compare_text(CompareOp op) {
  switch (op) {
    case CompareOp::kLt: return " < ";
    case CompareOp::kLe: return " <= ";
    case CompareOp::kGt: return " > ";
    case CompareOp::kGe: return " >= ";
    case CompareOp::kEq: return " = ";
    case CompareOp::kNe: return " != ";
  }
  return " ? ";
}

void print(const Pred& p, std::string& out) {
  switch (p.kind) {
    case Pred::Kind::kCompare:
      print(*p.a, out);
      out += compare_text(p.cmp);
      print(*p.b, out);
      return;
    case Pred::Kind::kBetween:
      print(*p.a, out);
      out += " BETWEEN ";
      print(*p.b, out);
      out += " AND ";
      print(*p.c, out);
      return;
    default: {
      const int prec = precedence(p);
      auto child = [&](const Pred& c, bool parens) {
        if (parens) out += '(';
        print(c, out);
        if (parens) out += ')';
      };
      child(*p.lhs, precedence(*p.lhs) < prec);
      out += p.kind == Pred::Kind::kAnd ? " AND " : " OR ";
      child(*p.rhs, precedence(*p.rhs) <= prec);
    }
  }
}

bool equal_ptr(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return structurally_equal(*a, *b);
}

bool equal_ptr(const PredPtr& a, const PredPtr& b) {
  if (!a || !b) return !a && !b;
  return structurally_equal(*a, *b);
}

}  // namespace

std::vector<std::string> AggregateQuery::referenced_columns() const {
  std::vector<std::string> out;
  if (expression && !count_star) collect_columns(*expression, out);
  if (predicate) collect_columns(*predicate, out);
  if (group_column && std::find(out.begin(), out.end(), *group_column) == out.end()) out.push_back(*group_column);
  return out;
}

void AggregateQuery::validate() const {
  if (!expression) throw Error("query has no expression");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error("epsilon must lie in (0, 1)");
  if (!(delta_ms >= 1.0)) throw Error("delta must be at least 1 ms");
  if (!(confidence > 0.0 && confidence <= 1.0)) throw Error("confidence must lie in (0, 1]");
}

AggregateQuery parse_query(std::string_view text, const Schema* schema) {
  AggregateQuery q = Parser(text).parse();
  if (schema != nullptr) {
    for (const auto& c : q.referenced_columns())
      if (!schema->index_of(c)) throw SchemaError("unknown column '" + c + "'");
  }
  return q;
}

std::string to_sql(const Expr& expr) {
  std::string out;
  print(expr, out);
  return out;
}

std::string to_sql(const Pred& pred) {
  std::string out;
  print(pred, out);
  return out;
}

std::string to_sql(const AggregateQuery& q) {
  std::string out = "SELECT ";
  out += to_string(q.kind);
  out += '(';
  out += q.count_star ? std::string("*") : to_sql(*q.expression);
  out += ") FROM ";
  out += q.table;
  if (q.predicate) {
    out += " WHERE ";
    out += to_sql(*q.predicate);
  }
  if (q.group_column) {
    out += " GROUP BY ";
    out += *q.group_column;
  }
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case Expr::Op::kNumber: return a.number == b.number && a.integral_literal == b.integral_literal;
    case Expr::Op::kColumn: return a.column == b.column;
    default: return equal_ptr(a.lhs, b.lhs) && equal_ptr(a.rhs, b.rhs);
  }
}

bool structurally_equal(const Pred& a, const Pred& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == Pred::Kind::kCompare && a.cmp != b.cmp) return false;
  return equal_ptr(a.a, b.a) && equal_ptr(a.b, b.b) && equal_ptr(a.c, b.c) && equal_ptr(a.lhs, b.lhs) &&
         equal_ptr(a.rhs, b.rhs);
}

bool structurally_equal(const AggregateQuery& a, const AggregateQuery& b) {
  return a.kind == b.kind && a.count_star == b.count_star && equal_ptr(a.expression, b.expression) &&
         equal_ptr(a.predicate, b.predicate) && a.table == b.table && a.group_column == b.group_column;
}

// ---------------------------------------------------------------- BoundQuery

BoundQuery::BoundQuery(AggregateQuery query, const Schema& schema) : query_(std::move(query)), schema_(schema) {
  query_.validate();
  for (const auto& name : query_.referenced_columns()) {
    auto idx = schema.index_of(name);
    if (!idx) throw SchemaError("unknown column '" + name + "'");
    columns_.push_back(*idx);
  }
  std::sort(columns_.begin(), columns_.end());
  if (query_.group_column) group_index_ = schema.index_of(*query_.group_column);

  integral_ = true;
  std::function<void(const Expr&)> check = [&](const Expr& e) {
    if (e.op == Expr::Op::kNumber && (!e.integral_literal || std::abs(e.number) > 9.0e15)) integral_ = false;
    if (e.op == Expr::Op::kColumn && schema.columns()[*schema.index_of(e.column)].type != ColumnType::kInt64)
      integral_ = false;
    if (e.lhs) check(*e.lhs);
    if (e.rhs) check(*e.rhs);
  };
  check(*query_.expression);
  if (query_.kind == AggregateKind::kCount) integral_ = true;

  expr_ = compile(*query_.expression, schema);
  if (query_.predicate) pred_ = compile(*query_.predicate, schema);
}

std::vector<BoundQuery::Instr> BoundQuery::compile(const Expr& e, const Schema& schema) {
  std::vector<Instr> prog;
  std::size_t depth = 0;
  std::size_t max_depth = 0;
  std::function<void(const Expr&)> emit = [&](const Expr& n) {
    Instr ins{};
    switch (n.op) {
      case Expr::Op::kNumber:
        ins.code = Instr::Code::kPushConst;
        ins.value = n.number;
        ins.exact = static_cast<Int128>(static_cast<long long>(n.integral_literal ? n.number : 0.0));
        prog.push_back(ins);
        max_depth = std::max(max_depth, ++depth);
        return;
      case Expr::Op::kColumn:
        ins.code = Instr::Code::kPushColumn;
        ins.column = static_cast<std::uint32_t>(*schema.index_of(n.column));
        prog.push_back(ins);
        max_depth = std::max(max_depth, ++depth);
        return;
      case Expr::Op::kNeg:
        emit(*n.lhs);
        ins.code = Instr::Code::kNeg;
        prog.push_back(ins);
        return;
      default:
        emit(*n.lhs);
        emit(*n.rhs);
        ins.code = n.op == Expr::Op::kAdd ? Instr::Code::kAdd : n.op == Expr::Op::kSub ? Instr::Code::kSub
                                                                                        : Instr::Code::kMul;
        prog.push_back(ins);
        --depth;
    }
  };
  emit(e);
  stack_depth_ = std::max(stack_depth_, max_depth);
  return prog;
}

std::unique_ptr<BoundQuery::BoundPred> BoundQuery::compile(const Pred& p, const Schema& schema) {
  auto out = std::make_unique<BoundPred>();
  out->kind = p.kind;
  out->cmp = p.cmp;
  if (p.a) out->a = compile(*p.a, schema);
  if (p.b) out->b = compile(*p.b, schema);
  if (p.c) out->c = compile(*p.c, schema);
  if (p.lhs) out->lhs = compile(*p.lhs, schema);
  if (p.rhs) out->rhs = compile(*p.rhs, schema);
  return out;
}

namespace {
constexpr std::size_t kMaxStack = 64;
}

double BoundQuery::eval(const std::vector<Instr>& prog, std::span<const Value> tuple) const {
  if (prog.size() == 1) {
    const auto& ins = prog.front();
    return ins.code == Instr::Code::kPushColumn ? tuple[ins.column].f : ins.value;
  }
  double small[kMaxStack];
  small[0] = 0.0;
  std::vector<double> large;
  double* stack = small;
  if (stack_depth_ > kMaxStack) {
    large.resize(stack_depth_);
    stack = large.data();
  }
  std::size_t top = 0;
  for (const auto& ins : prog) {
    switch (ins.code) {
      case Instr::Code::kPushConst: stack[top++] = ins.value; break;
      case Instr::Code::kPushColumn: stack[top++] = tuple[ins.column].f; break;
      case Instr::Code::kNeg: stack[top - 1] = -stack[top - 1]; break;
      case Instr::Code::kAdd: --top; stack[top - 1] += stack[top]; break;
      case Instr::Code::kSub: --top; stack[top - 1] -= stack[top]; break;
      case Instr::Code::kMul: --top; stack[top - 1] *= stack[top]; break;
    }
  }
  return stack[0];
}

Int128 BoundQuery::eval_exact(const std::vector<Instr>& prog, std::span<const Value> tuple) const {
  Int128 small[kMaxStack];
  small[0] = 0;
  std::vector<Int128> large;
  Int128* stack = small;
  if (stack_depth_ > kMaxStack) {
    large.resize(stack_depth_);
    stack = large.data();
  }
  std::size_t top = 0;
  for (const auto& ins : prog) {
    switch (ins.code) {
      case Instr::Code::kPushConst: stack[top++] = ins.exact; break;
      case Instr::Code::kPushColumn: stack[top++] = tuple[ins.column].i; break;
      case Instr::Code::kNeg: stack[top - 1] = -stack[top - 1]; break;
      case Instr::Code::kAdd:
        --top;
        if (__builtin_add_overflow(stack[top - 1], stack[top], &stack[top - 1])) throw EvalError("arithmetic overflow");
        break;
      case Instr::Code::kSub:
        --top;
        if (__builtin_sub_overflow(stack[top - 1], stack[top], &stack[top - 1])) throw EvalError("arithmetic overflow");
        break;
      case Instr::Code::kMul:
        --top;
        if (__builtin_mul_overflow(stack[top - 1], stack[top], &stack[top - 1])) throw EvalError("arithmetic overflow");
        break;
    }
  }
  return stack[0];
}

bool BoundQuery::eval(const BoundPred& p, std::span<const Value> tuple) const {
  switch (p.kind) {
    case Pred::Kind::kAnd: return eval(*p.lhs, tuple) && eval(*p.rhs, tuple);
    case Pred::Kind::kOr: return eval(*p.lhs, tuple) || eval(*p.rhs, tuple);
    case Pred::Kind::kBetween: {
      const double v = eval(p.a, tuple);
      return eval(p.b, tuple) <= v && v <= eval(p.c, tuple);
    }
    case Pred::Kind::kCompare: {
      const double a = eval(p.a, tuple);
      const double b = eval(p.b, tuple);
      switch (p.cmp) {
        case CompareOp::kLt: return a < b;
        case CompareOp::kLe: return a <= b;
        case CompareOp::kGt: return a > b;
        case CompareOp::kGe: return a >= b;
        case CompareOp::kEq: return a == b;
        case CompareOp::kNe: return a != b;
      }
    }
  }
  return false;
}

bool BoundQuery::predicate(std::span<const Value> tuple) const { return !pred_ || eval(*pred_, tuple); }

double BoundQuery::value(std::span<const Value> tuple) const {
  if (query_.kind == AggregateKind::kCount) return 1.0;
  const double v = eval(expr_, tuple);
  if (!std::isfinite(v)) throw EvalError("arithmetic overflow");
  return v;
}

Int128 BoundQuery::exact_value(std::span<const Value> tuple) const {
  if (query_.kind == AggregateKind::kCount) return 1;
  if (!integral_) throw EvalError("expression is not integral");
  return eval_exact(expr_, tuple);
}

double BoundQuery::x_value(std::span<const Value> tuple) const {
  return predicate(tuple) ? value(tuple) : 0.0;
}

Int128 BoundQuery::x_exact(std::span<const Value> tuple) const {
  return predicate(tuple) ? exact_value(tuple) : 0;
}

double BoundQuery::group_key(std::span<const Value> tuple) const {
  return group_index_ ? tuple[*group_index_].f : 0.0;
}

}  // namespace olaraw
