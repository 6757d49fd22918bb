#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "storage/index.hpp"
#include "value.hpp"

namespace snel {

struct AstSelect;

struct Span {
    int line = 0;
    int column = 0;
};

// Expression as written: identifiers unresolved, aliases attached.
struct AstExpr {
    enum class Kind : uint8_t { Column, Literal, Star, Call, Subquery };

    Kind kind = Kind::Literal;
    Span span;
    std::string alias;  // from AS, empty if none

    // Column: optional `table.` qualifier.
    std::string table;
    std::string column;

    Value literal;

    // Call: name uppercased; COUNT(*) has one Star argument;
    // COUNT(DISTINCT x) sets distinct_arg.
    std::string fn;
    std::vector<AstExpr> args;
    bool distinct_arg = false;

    // Subquery in expression position (only valid under IN; gated elsewhere).
    std::shared_ptr<AstSelect> subquery;
};

struct AstCondition {
    enum class Kind : uint8_t { Compare, In, And, Or, Not };

    Kind kind = Kind::Compare;
    Span span;

    CmpOp op = CmpOp::Eq;  // Compare
    std::vector<AstExpr> exprs;  // Compare: [lhs, rhs]; In: [lhs]
    std::shared_ptr<AstSelect> subquery;  // In
    std::vector<AstCondition> children;  // And/Or: 2+; Not: 1
};

struct AstOrderItem {
    AstExpr expr;
    bool desc = false;
};

struct AstSelect {
    Span span;
    bool distinct = false;
    std::vector<AstExpr> items;
    std::vector<std::string> from;
    std::vector<Span> from_spans;
    std::optional<AstCondition> where;
    std::vector<AstExpr> group_by;
    std::optional<AstCondition> having;  // parsed, rejected at lowering
    std::vector<AstOrderItem> order_by;
    std::optional<uint64_t> limit;
    std::optional<uint64_t> offset;
    std::shared_ptr<AstSelect> union_next;  // parsed, rejected at lowering
};

// Parses exactly one statement (an optional trailing ';' is consumed).
// Throws SyntaxError with the source position on malformed input.
AstSelect parse_select(const std::string& sql);

// Renders the tree back to SQL. Reparsing the result yields an identical tree.
std::string render_sql(const AstSelect& select);
std::string render_sql(const AstExpr& expr);
std::string render_sql(const AstCondition& cond);

}  // namespace snel
