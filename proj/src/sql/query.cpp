#include "sql/query.hpp"

#include "common.hpp"

namespace snel {

const char* agg_fn_name(AggFn fn) {
    switch (fn) {
        case AggFn::Sum: return "SUM";
        case AggFn::Avg: return "AVG";
        case AggFn::Min: return "MIN";
        case AggFn::Max: return "MAX";
        case AggFn::Count: return "COUNT";
        case AggFn::CountDistinct: return "COUNT";
    }
    return "?";
}

const char* bin_fn_name(BinFn fn) {
    switch (fn) {
        case BinFn::Bin: return "BIN";
        case BinFn::BinMin: return "BIN_MIN";
        case BinFn::BinMax: return "BIN_MAX";
    }
    return "?";
}

SQLExpression column_expr(const std::string& table, const std::string& column, ColumnType type,
                          bool nullable) {
    SQLExpression e;
    e.kind = SQLExpression::Kind::Column;
    e.table = table;
    e.column = column;
    e.column_type = type;
    e.column_nullable = nullable;
    return e;
}

bool SQLExpression::same_expr(const SQLExpression& other) const {
    if (kind != other.kind) return false;
    switch (kind) {
        case Kind::Column: return table == other.table && column == other.column;
        case Kind::Literal: return literal == other.literal;
        case Kind::Aggregate:
            if (agg_fn != other.agg_fn || agg_star != other.agg_star) return false;
            if (agg_star) return true;
            return table == other.table && column == other.column;
        case Kind::Bin:
            if (bin_fn != other.bin_fn) return false;
            if (table != other.table || column != other.column) return false;
            return bin_fn != BinFn::Bin || bin_count == other.bin_count;
    }
    return false;
}

std::string SQLExpression::display() const {
    switch (kind) {
        case Kind::Column: return table.empty() ? column : table + "." + column;
        case Kind::Literal: return literal.to_sql();
        case Kind::Aggregate: {
            std::string arg = agg_star ? "*"
                              : agg_fn == AggFn::CountDistinct
                                  ? "DISTINCT " + (table.empty() ? column : table + "." + column)
                                  : (table.empty() ? column : table + "." + column);
            return std::string(agg_fn_name(agg_fn)) + "(" + arg + ")";
        }
        case Kind::Bin: {
            std::string text = std::string(bin_fn_name(bin_fn)) + "(" +
                               (table.empty() ? column : table + "." + column);
            if (bin_fn == BinFn::Bin) text += ", " + std::to_string(bin_count);
            return text + ")";
        }
    }
    return "?";
}

ColumnType SQLExpression::result_type() const {
    switch (kind) {
        case Kind::Column: return column_type;
        case Kind::Literal:
            switch (literal.kind()) {
                case Value::Kind::Bool: return ColumnType::Bool;
                case Value::Kind::Int8: return ColumnType::Int8;
                case Value::Kind::Int16: return ColumnType::Int16;
                case Value::Kind::Int32: return ColumnType::Int32;
                case Value::Kind::Float32: return ColumnType::Float32;
                case Value::Kind::String: return ColumnType::String;
                default: return ColumnType::Int64;
            }
        case Kind::Aggregate:
            switch (agg_fn) {
                case AggFn::Count:
                case AggFn::CountDistinct: return ColumnType::Int64;
                case AggFn::Avg: return ColumnType::Float32;
                case AggFn::Sum:
                    return column_type == ColumnType::Float32 ? ColumnType::Float32
                                                              : ColumnType::Int64;
                case AggFn::Min:
                case AggFn::Max: return column_type;
            }
            return ColumnType::Int64;
        case Kind::Bin:
            return bin_fn == BinFn::Bin ? ColumnType::Int64 : ColumnType::Float32;
    }
    return ColumnType::Int64;
}

Constraint Constraint::make_false() {
    Constraint c;
    c.kind = Kind::False;
    return c;
}

Constraint Constraint::leaf(SQLExpression lhs, CmpOp op, SQLExpression rhs) {
    Constraint c;
    c.kind = Kind::Leaf;
    c.op = op;
    c.lhs = std::move(lhs);
    c.rhs = std::move(rhs);
    return c;
}

Constraint Constraint::conjunction(std::vector<Constraint> children) {
    if (children.empty()) return make_true();
    if (children.size() == 1) return std::move(children.front());
    Constraint c;
    c.kind = Kind::And;
    c.children = std::move(children);
    return c;
}

std::string Constraint::display() const {
    auto child_text = [](const Constraint& child) {
        bool wrap = child.kind == Kind::And || child.kind == Kind::Or;
        std::string t = child.display();
        return wrap ? "(" + t + ")" : t;
    };
    switch (kind) {
        case Kind::True: return "TRUE";
        case Kind::False: return "FALSE";
        case Kind::Leaf:
            return lhs.display() + " " + cmp_op_text(op) + " " + rhs.display();
        case Kind::In: return lhs.display() + " IN (subquery)";
        case Kind::And: {
            std::string out;
            for (std::size_t i = 0; i < children.size(); ++i) {
                if (i) out += " AND ";
                out += child_text(children[i]);
            }
            return out;
        }
        case Kind::Or: {
            std::string out;
            for (std::size_t i = 0; i < children.size(); ++i) {
                if (i) out += " OR ";
                out += child_text(children[i]);
            }
            return out;
        }
        case Kind::Not: return "NOT " + child_text(children[0]);
    }
    return "?";
}

bool Query::has_aggregates() const {
    for (const SQLExpression& f : fields)
        if (f.is_aggregate()) return true;
    return false;
}

}  // namespace snel
