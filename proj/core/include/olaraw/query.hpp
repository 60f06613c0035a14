#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "olaraw/int128.hpp"
#include "olaraw/raw_store.hpp"

namespace olaraw {

enum class AggregateKind { kSum, kCount, kAvg };

std::string_view to_string(AggregateKind kind);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Arithmetic expression tree. Immutable once built.
struct Expr {
  enum class Op { kNumber, kColumn, kAdd, kSub, kMul, kNeg };

  Op op = Op::kNumber;
  double number = 0.0;
  bool integral_literal = false;
  std::string column;
  ExprPtr lhs;
  ExprPtr rhs;

  static ExprPtr make_number(double v, bool integral);
  static ExprPtr make_column(std::string name);
  static ExprPtr make_binary(Op op, ExprPtr lhs, ExprPtr rhs);
  static ExprPtr make_neg(ExprPtr operand);
};

enum class CompareOp { kLt, kLe, kGt, kGe, kEq, kNe };

struct Pred;
using PredPtr = std::shared_ptr<const Pred>;

/// Boolean predicate tree: comparisons, BETWEEN, AND/OR.
struct Pred {
  enum class Kind { kCompare, kBetween, kAnd, kOr };

  Kind kind = Kind::kCompare;
  CompareOp cmp = CompareOp::kEq;
  ExprPtr a;  // compare: a cmp b; between: a BETWEEN b AND c
  ExprPtr b;
  ExprPtr c;
  PredPtr lhs;
  PredPtr rhs;
};

struct AggregateQuery {
  AggregateKind kind = AggregateKind::kSum;
  ExprPtr expression;       // COUNT(*) keeps the literal 1
  bool count_star = false;
  PredPtr predicate;        // null: always true
  std::string table = "t";
  std::optional<std::string> group_column;

  double epsilon = 0.05;    // target relative half-width
  double delta_ms = 1000.0; // reporting interval
  double confidence = 0.95;

  /// Columns referenced by expression, predicate and GROUP BY, deduplicated,
  /// in first-appearance order.
  std::vector<std::string> referenced_columns() const;
  /// Throws Error when epsilon, delta or confidence are out of range.
  void validate() const;
};

/// Parses `SELECT AGG(expr) FROM name [WHERE pred] [GROUP BY col]`.
/// With a schema, unknown columns are rejected.
AggregateQuery parse_query(std::string_view text, const Schema* schema = nullptr);

/// Canonical SQL text; parse_query(to_sql(q)) is structurally equal to q.
std::string to_sql(const AggregateQuery& query);
std::string to_sql(const Expr& expr);
std::string to_sql(const Pred& pred);

bool structurally_equal(const Expr& a, const Expr& b);
bool structurally_equal(const Pred& a, const Pred& b);
/// Compares the parsed parts (kind, expression, predicate, table, group).
bool structurally_equal(const AggregateQuery& a, const AggregateQuery& b);

/// A query compiled against a schema. Evaluates x_i for one tuple: the
/// expression value when the predicate holds, 0 otherwise (1 for COUNT).
class BoundQuery {
 public:
  BoundQuery(AggregateQuery query, const Schema& schema);

  const AggregateQuery& query() const { return query_; }
  const Schema& schema() const { return schema_; }
  /// Schema positions the evaluator reads, ascending.
  const std::vector<std::size_t>& columns() const { return columns_; }
  /// True when the expression only involves int64 columns and integer
  /// literals, so x_exact is available.
  bool integral() const { return integral_; }
  bool has_group() const { return group_index_.has_value(); }

  bool predicate(std::span<const Value> tuple) const;
  /// Masked expression value; for COUNT, 1 when the predicate holds.
  double x_value(std::span<const Value> tuple) const;
  /// Exact masked expression value; requires integral(). Throws EvalError on
  /// 128-bit overflow.
  Int128 x_exact(std::span<const Value> tuple) const;
  /// Unmasked expression value; 1 for COUNT.
  double value(std::span<const Value> tuple) const;
  Int128 exact_value(std::span<const Value> tuple) const;
  /// GROUP BY key of the tuple (the group column's numeric value).
  double group_key(std::span<const Value> tuple) const;

 private:
  struct Instr {
    enum class Code : std::uint8_t { kPushConst, kPushColumn, kAdd, kSub, kMul, kNeg };
    Code code;
    std::uint32_t column = 0;
    double value = 0.0;
    Int128 exact = 0;
  };
  struct BoundPred {
    Pred::Kind kind;
    CompareOp cmp;
    std::vector<Instr> a, b, c;
    std::unique_ptr<BoundPred> lhs, rhs;
  };

  std::vector<Instr> compile(const Expr& e, const Schema& schema);
  std::unique_ptr<BoundPred> compile(const Pred& p, const Schema& schema);
  double eval(const std::vector<Instr>& prog, std::span<const Value> tuple) const;
  Int128 eval_exact(const std::vector<Instr>& prog, std::span<const Value> tuple) const;
  bool eval(const BoundPred& p, std::span<const Value> tuple) const;

  AggregateQuery query_;
  Schema schema_;
  std::vector<Instr> expr_;
  std::shared_ptr<const BoundPred> pred_;
  std::vector<std::size_t> columns_;
  std::optional<std::size_t> group_index_;
  bool integral_ = false;
  std::size_t stack_depth_ = 0;
};

}  // namespace olaraw
