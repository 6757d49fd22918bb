#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sql/ast.hpp"
#include "storage/index.hpp"
#include "value.hpp"

namespace snel {

class Catalog;
struct Query;

enum class AggFn : uint8_t { Sum, Avg, Min, Max, Count, CountDistinct };
enum class BinFn : uint8_t { Bin, BinMin, BinMax };

const char* agg_fn_name(AggFn fn);
const char* bin_fn_name(BinFn fn);

// A resolved expression: every column reference carries its table and type.
// For Aggregate (unless counting *) and Bin kinds, the column fields describe
// the argument column.
struct SQLExpression {
    enum class Kind : uint8_t { Column, Literal, Aggregate, Bin };

    Kind kind = Kind::Literal;
    std::string alias;  // output name; lowering always fills it for fields

    std::string table;
    std::string column;
    ColumnType column_type = ColumnType::Int64;
    bool column_nullable = false;

    Value literal;

    AggFn agg_fn = AggFn::Count;
    bool agg_star = false;  // COUNT(*)

    BinFn bin_fn = BinFn::Bin;
    uint32_t bin_count = 0;  // BIN only; BIN_MIN/BIN_MAX take it from the BIN spec

    bool is_aggregate() const { return kind == Kind::Aggregate; }
    bool is_column() const { return kind == Kind::Column; }
    bool is_literal() const { return kind == Kind::Literal; }
    bool is_bin() const { return kind == Kind::Bin; }

    // Structural identity ignoring the alias; used for GROUP BY dedup and
    // membership checks.
    bool same_expr(const SQLExpression& other) const;

    // Qualified rendering ("table1.int8col1", "COUNT(*)"), used by EXPLAIN.
    std::string display() const;

    // Type of the value this expression produces (a NULL literal reports Int64).
    ColumnType result_type() const;
};

SQLExpression column_expr(const std::string& table, const std::string& column, ColumnType type,
                          bool nullable);

struct Constraint {
    enum class Kind : uint8_t { True, False, Leaf, In, And, Or, Not };

    Kind kind = Kind::True;

    CmpOp op = CmpOp::Eq;         // Leaf
    SQLExpression lhs;            // Leaf: column; In: probe column
    SQLExpression rhs;            // Leaf: literal or column
    std::shared_ptr<Query> subquery;  // In
    std::vector<Constraint> children;  // And/Or: 2+; Not: 1

    bool is_true() const { return kind == Kind::True; }
    std::string display() const;

    static Constraint make_true() { return Constraint{}; }
    static Constraint make_false();
    static Constraint leaf(SQLExpression lhs, CmpOp op, SQLExpression rhs);
    static Constraint conjunction(std::vector<Constraint> children);
};

constexpr uint64_t NO_LIMIT = UINT64_MAX;

// The resolved, engine-facing form of one SELECT statement.
struct Query {
    struct OrderClause {
        SQLExpression expr;
        bool desc = false;
    };

    std::vector<SQLExpression> fields;
    Constraint constraint;  // True when there is no WHERE clause
    std::vector<std::string> source_tables;  // FROM order, no duplicates
    std::vector<SQLExpression> group_by;     // deduplicated
    std::vector<OrderClause> order_by;
    uint64_t limit = NO_LIMIT;
    uint64_t offset = 0;
    bool distinct = false;

    bool has_aggregates() const;
};

// Resolves names and types against the catalog and validates the query
// against the supported subset. Throws BindError with a specific message.
Query lower_to_query(const AstSelect& ast, const Catalog& catalog);

// True iff lower_to_query would succeed.
bool can_optimize_select(const AstSelect& ast, const Catalog& catalog);

}  // namespace snel
