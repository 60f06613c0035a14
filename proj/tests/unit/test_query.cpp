#include <vector>

#include "doctest.h"
#include "olaraw/error.hpp"
#include "olaraw/query.hpp"

using namespace olaraw;

namespace {

Schema abc_schema() {
  return Schema({{"a", ColumnType::kInt64, 0}, {"b", ColumnType::kInt64, 0}, {"c", ColumnType::kFloat64, 0}},
                FormatKind::kDelimitedText);
}

std::vector<Value> tuple(std::int64_t a, std::int64_t b, double c) {
  return {Value{static_cast<double>(a), a}, Value{static_cast<double>(b), b}, Value{c, 0}};
}

}  // namespace

TEST_CASE("parse a SUM over a linear expression with a range predicate") {
  const auto q = parse_query("SELECT SUM(2*a3 + a7) FROM t WHERE a1 BETWEEN 0 AND 10");
  CHECK(q.kind == AggregateKind::kSum);
  REQUIRE(q.predicate);
  CHECK(q.predicate->kind == Pred::Kind::kBetween);
  CHECK(q.expression->op == Expr::Op::kAdd);
  CHECK(q.referenced_columns() == std::vector<std::string>{"a3", "a7", "a1"});
  CHECK_FALSE(q.group_column);
}

TEST_CASE("parse COUNT with a group column") {
  const auto q = parse_query("SELECT COUNT(hits) FROM wiki GROUP BY language");
  CHECK(q.kind == AggregateKind::kCount);
  CHECK(q.table == "wiki");
  REQUIRE(q.group_column);
  CHECK(*q.group_column == "language");
}

TEST_CASE("a query without WHERE has no predicate") {
  const auto q = parse_query("SELECT SUM(a1) FROM t");
  CHECK_FALSE(q.predicate);
  CHECK(q.referenced_columns() == std::vector<std::string>{"a1"});
}

TEST_CASE("keywords are case-insensitive and AVG parses") {
  const auto q = parse_query("select avg(a - -b) from t where a >= 1 and (b < 2 or c <> 3)");
  CHECK(q.kind == AggregateKind::kAvg);
  CHECK(q.predicate->kind == Pred::Kind::kAnd);
}

TEST_CASE("malformed queries report the offending position") {
  CHECK_THROWS_AS(parse_query("SELECT SUM(a1 FROM t"), ParseError);
  CHECK_THROWS_AS(parse_query("SELECT MAX(a1) FROM t"), ParseError);
  CHECK_THROWS_AS(parse_query("SELECT SUM(a1) FROM t WHERE"), ParseError);
  CHECK_THROWS_AS(parse_query("SELECT SUM(a1) FROM t extra"), ParseError);
  try {
    parse_query("SELECT SUM(a1) FROM t WHERE a1 ? 3");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 31);
  }
}

TEST_CASE("unknown columns are rejected against a schema") {
  const auto s = abc_schema();
  CHECK_NOTHROW(parse_query("SELECT SUM(a) FROM t", &s));
  CHECK_THROWS_AS(parse_query("SELECT SUM(zz) FROM t", &s), SchemaError);
}

TEST_CASE("printing and reparsing is structurally stable") {
  const char* texts[] = {
      "SELECT SUM(2*a3 + a7) FROM t WHERE a1 BETWEEN 0 AND 10",
      "SELECT COUNT(*) FROM t WHERE a > 3 OR b <= -2",
      "SELECT AVG(a*(b - 1)) FROM t WHERE NOT_A_KEYWORD = 1 GROUP BY c",
      "SELECT SUM(-a - (b - c)) FROM t",
      "SELECT SUM(1.5*c) FROM t WHERE (a < 1 OR b < 2) AND c != 0.25",
  };
  for (const char* text : texts) {
    CAPTURE(text);
    const auto q = parse_query(text);
    const auto again = parse_query(to_sql(q));
    CHECK(structurally_equal(q, again));
    CHECK(to_sql(again) == to_sql(q));
  }
}

TEST_CASE("x_value masks by the predicate") {
  const auto s = abc_schema();
  BoundQuery sum(parse_query("SELECT SUM(2*a+b) FROM t WHERE c > 0"), s);
  CHECK(sum.x_value(tuple(3, 4, 1.0)) == 10.0);
  CHECK(sum.x_value(tuple(3, 4, -1.0)) == 0.0);
  CHECK(sum.value(tuple(3, 4, -1.0)) == 10.0);

  BoundQuery count(parse_query("SELECT COUNT(*) FROM t WHERE a = 3"), s);
  CHECK(count.x_value(tuple(3, 0, 0)) == 1.0);
  CHECK(count.x_value(tuple(4, 0, 0)) == 0.0);
  CHECK(count.integral());
}

TEST_CASE("integral expressions evaluate exactly in 128 bits") {
  const auto s = abc_schema();
  BoundQuery q(parse_query("SELECT SUM(a*b) FROM t"), s);
  REQUIRE(q.integral());
  const std::int64_t big = 3'000'000'000'000'000'000;
  const Int128 expect = static_cast<Int128>(big) * 3;
  CHECK(q.x_exact(tuple(big, 3, 0)) == expect);
  BoundQuery f(parse_query("SELECT SUM(a + c) FROM t"), s);
  CHECK_FALSE(f.integral());
  BoundQuery frac(parse_query("SELECT SUM(0.5*a) FROM t"), s);
  CHECK_FALSE(frac.integral());
}

TEST_CASE("non-finite expression values are evaluation errors") {
  const auto s = abc_schema();
  BoundQuery q(parse_query("SELECT SUM(c*c) FROM t"), s);
  CHECK_THROWS_AS(q.x_value(tuple(0, 0, 1e200)), EvalError);
}

TEST_CASE("query parameters are range-checked") {
  auto q = parse_query("SELECT SUM(a) FROM t");
  q.epsilon = 0.0;
  CHECK_THROWS_AS(q.validate(), Error);
  q.epsilon = 0.05;
  q.delta_ms = 0.5;
  CHECK_THROWS_AS(q.validate(), Error);
  q.delta_ms = 1.0;
  q.confidence = 1.5;
  CHECK_THROWS_AS(q.validate(), Error);
  q.confidence = 1.0;
  CHECK_NOTHROW(q.validate());
}

TEST_CASE("group keys come from the group column") {
  const auto s = abc_schema();
  BoundQuery q(parse_query("SELECT SUM(a) FROM t GROUP BY b"), s);
  CHECK(q.has_group());
  CHECK(q.group_key(tuple(1, 7, 0)) == 7.0);
}
