#include "common.hpp"
#include "sql/query.hpp"
#include "storage/table.hpp"

namespace snel {

namespace {

bool numeric_type(ColumnType t) { return t != ColumnType::String; }

enum class ExprCtx { SelectItem, GroupBy, OrderBy, Where };

class Lowerer {
public:
    Lowerer(const AstSelect& ast, const Catalog& catalog) : ast_(ast), catalog_(catalog) {}

    Query run() {
        if (ast_.union_next) throw BindError("UNION is not supported");
        if (ast_.having) throw BindError("HAVING is not supported");

        resolve_from();
        resolve_fields();
        if (ast_.where) out_.constraint = lower_condition(*ast_.where);
        resolve_group_by();
        resolve_order_by();
        check_aggregate_consistency();

        out_.limit = ast_.limit.value_or(NO_LIMIT);
        out_.offset = ast_.offset.value_or(0);
        out_.distinct = ast_.distinct;
        return std::move(out_);
    }

private:
    void resolve_from() {
        for (const std::string& name : ast_.from) {
            const Table* table = catalog_.find(name);
            if (!table) throw BindError("unknown table '" + name + "'");
            for (const Table* seen : tables_)
                if (seen == table)
                    throw BindError("table '" + name + "' appears more than once in FROM");
            tables_.push_back(table);
            out_.source_tables.push_back(name);
        }
    }

    SQLExpression resolve_column(const AstExpr& e) const {
        if (!e.table.empty()) {
            const Table* table = nullptr;
            for (const Table* t : tables_)
                if (t->name() == e.table) table = t;
            if (!table) throw BindError("table '" + e.table + "' is not listed in FROM");
            int idx = table->column_index(e.column);
            if (idx < 0)
                throw BindError("unknown column '" + e.table + "." + e.column + "'");
            const ColumnDescriptor& col = table->column(static_cast<std::size_t>(idx));
            return column_expr(table->name(), col.name, col.type, col.nullable);
        }
        const Table* found = nullptr;
        const ColumnDescriptor* found_col = nullptr;
        for (const Table* t : tables_) {
            int idx = t->column_index(e.column);
            if (idx < 0) continue;
            if (found)
                throw BindError("ambiguous column '" + e.column + "' (in '" + found->name() +
                                "' and '" + t->name() + "')");
            found = t;
            found_col = &t->column(static_cast<std::size_t>(idx));
        }
        if (!found) throw BindError("unknown column '" + e.column + "'");
        return column_expr(found->name(), found_col->name, found_col->type,
                           found_col->nullable);
    }

    SQLExpression lower_call(const AstExpr& e, ExprCtx ctx) const {
        auto require_column_arg = [&](const AstExpr& arg) -> SQLExpression {
            if (arg.kind != AstExpr::Kind::Column)
                throw BindError(e.fn + " requires a column argument");
            return resolve_column(arg);
        };

        SQLExpression out;
        if (e.fn == "SUM" || e.fn == "AVG" || e.fn == "MIN" || e.fn == "MAX" ||
            e.fn == "COUNT") {
            if (ctx == ExprCtx::Where)
                throw BindError("aggregate function " + e.fn + " is not allowed in WHERE");
            if (ctx == ExprCtx::GroupBy)
                throw BindError("aggregate function " + e.fn + " is not allowed in GROUP BY");
            out.kind = SQLExpression::Kind::Aggregate;
            if (e.fn == "COUNT" && e.args.size() == 1 &&
                e.args[0].kind == AstExpr::Kind::Star) {
                if (e.distinct_arg) throw BindError("COUNT(DISTINCT *) is not supported");
                out.agg_fn = AggFn::Count;
                out.agg_star = true;
                return out;
            }
            if (e.args.size() != 1) throw BindError(e.fn + " takes exactly one argument");
            if (e.distinct_arg && e.fn != "COUNT")
                throw BindError("DISTINCT is only supported inside COUNT");
            SQLExpression arg = require_column_arg(e.args[0]);
            out.table = arg.table;
            out.column = arg.column;
            out.column_type = arg.column_type;
            out.column_nullable = arg.column_nullable;
            if (e.fn == "SUM" || e.fn == "AVG") {
                if (!numeric_type(arg.column_type))
                    throw BindError(e.fn + " requires a numeric column, and '" + arg.display() +
                                    "' is a STRING column");
                out.agg_fn = e.fn == "SUM" ? AggFn::Sum : AggFn::Avg;
            } else if (e.fn == "MIN" || e.fn == "MAX") {
                out.agg_fn = e.fn == "MIN" ? AggFn::Min : AggFn::Max;
            } else {
                out.agg_fn = e.distinct_arg ? AggFn::CountDistinct : AggFn::Count;
            }
            return out;
        }
        if (e.fn == "BIN" || e.fn == "BIN_MIN" || e.fn == "BIN_MAX") {
            if (ctx == ExprCtx::Where)
                throw BindError(e.fn + " is not allowed in WHERE");
            out.kind = SQLExpression::Kind::Bin;
            if (e.distinct_arg) throw BindError("DISTINCT is not supported inside " + e.fn);
            if (e.fn == "BIN") {
                if (e.args.size() != 2)
                    throw BindError("BIN takes a column and a bin count");
                SQLExpression arg = require_column_arg(e.args[0]);
                const AstExpr& count = e.args[1];
                if (count.kind != AstExpr::Kind::Literal ||
                    !count.literal.is_integer() || count.literal.widened_int() < 1)
                    throw BindError("BIN requires a positive integer bin count");
                out.bin_fn = BinFn::Bin;
                out.bin_count = static_cast<uint32_t>(count.literal.widened_int());
                out.table = arg.table;
                out.column = arg.column;
                out.column_type = arg.column_type;
                out.column_nullable = arg.column_nullable;
            } else {
                if (e.args.size() != 1) throw BindError(e.fn + " takes exactly one argument");
                SQLExpression arg = require_column_arg(e.args[0]);
                out.bin_fn = e.fn == "BIN_MIN" ? BinFn::BinMin : BinFn::BinMax;
                out.table = arg.table;
                out.column = arg.column;
                out.column_type = arg.column_type;
                out.column_nullable = arg.column_nullable;
            }
            if (!numeric_type(out.column_type))
                throw BindError(e.fn + " requires a numeric column");
            return out;
        }
        throw BindError("unknown function '" + e.fn + "'");
    }

    SQLExpression lower_expr(const AstExpr& e, ExprCtx ctx) const {
        switch (e.kind) {
            case AstExpr::Kind::Star:
                throw BindError("'*' is only valid as a select item or inside COUNT(*)");
            case AstExpr::Kind::Literal: {
                SQLExpression out;
                out.kind = SQLExpression::Kind::Literal;
                out.literal = e.literal;
                return out;
            }
            case AstExpr::Kind::Column: {
                // GROUP BY / ORDER BY may name a select alias.
                if ((ctx == ExprCtx::GroupBy || ctx == ExprCtx::OrderBy) && e.table.empty()) {
                    for (const SQLExpression& field : out_.fields) {
                        if (field.alias == e.column) {
                            SQLExpression copy = field;
                            copy.alias.clear();
                            return copy;
                        }
                    }
                }
                return resolve_column(e);
            }
            case AstExpr::Kind::Call: return lower_call(e, ctx);
            case AstExpr::Kind::Subquery:
                throw BindError("subqueries are only supported in '<column> IN (<subquery>)'");
        }
        throw InternalError("unhandled expression kind");
    }

    void resolve_fields() {
        for (const AstExpr& item : ast_.items) {
            if (item.kind == AstExpr::Kind::Star) {
                for (const Table* t : tables_) {
                    for (std::size_t i = 0; i < t->column_count(); ++i) {
                        const ColumnDescriptor& col = t->column(i);
                        SQLExpression e =
                            column_expr(t->name(), col.name, col.type, col.nullable);
                        e.alias = col.name;
                        out_.fields.push_back(std::move(e));
                    }
                }
                continue;
            }
            SQLExpression e = lower_expr(item, ExprCtx::SelectItem);
            e.alias = item.alias.empty() ? render_sql(item) : item.alias;
            out_.fields.push_back(std::move(e));
        }
    }

    static CmpOp flip(CmpOp op) {
        switch (op) {
            case CmpOp::Lt: return CmpOp::Gt;
            case CmpOp::Le: return CmpOp::Ge;
            case CmpOp::Gt: return CmpOp::Lt;
            case CmpOp::Ge: return CmpOp::Le;
            default: return op;
        }
    }

    void check_comparable(const SQLExpression& a, const SQLExpression& b) const {
        bool a_str = a.result_type() == ColumnType::String ||
                     (a.is_literal() && a.literal.is_string());
        bool b_str = b.result_type() == ColumnType::String ||
                     (b.is_literal() && b.literal.is_string());
        if (a.is_literal() && a.literal.is_null()) return;
        if (b.is_literal() && b.literal.is_null()) return;
        if (a_str != b_str)
            throw BindError("cannot compare " + a.display() + " with " + b.display() +
                            " (string vs numeric)");
    }

    Constraint lower_leaf(const AstCondition& c) const {
        SQLExpression lhs = lower_expr(c.exprs[0], ExprCtx::Where);
        SQLExpression rhs = lower_expr(c.exprs[1], ExprCtx::Where);
        CmpOp op = c.op;
        if (lhs.is_literal() && rhs.is_literal()) {
            auto cmp = sql_compare(lhs.literal, rhs.literal);
            bool satisfied = false;
            if (cmp) {
                switch (op) {
                    case CmpOp::Lt: satisfied = *cmp == std::strong_ordering::less; break;
                    case CmpOp::Le: satisfied = *cmp != std::strong_ordering::greater; break;
                    case CmpOp::Gt: satisfied = *cmp == std::strong_ordering::greater; break;
                    case CmpOp::Ge: satisfied = *cmp != std::strong_ordering::less; break;
                    case CmpOp::Eq: satisfied = *cmp == std::strong_ordering::equal; break;
                    case CmpOp::Ne: satisfied = *cmp != std::strong_ordering::equal; break;
                }
            }
            return satisfied ? Constraint::make_true() : Constraint::make_false();
        }
        if (lhs.is_literal()) {
            std::swap(lhs, rhs);
            op = flip(op);
        }
        if (!lhs.is_column())
            throw BindError("the left side of a comparison must be a column or literal");
        if (!rhs.is_column() && !rhs.is_literal())
            throw BindError("the right side of a comparison must be a column or literal");
        check_comparable(lhs, rhs);
        return Constraint::leaf(std::move(lhs), op, std::move(rhs));
    }

    Constraint lower_condition(const AstCondition& c) const {
        Constraint out;
        switch (c.kind) {
            case AstCondition::Kind::Compare: return lower_leaf(c);
            case AstCondition::Kind::In: {
                SQLExpression probe = lower_expr(c.exprs[0], ExprCtx::Where);
                if (!probe.is_column())
                    throw BindError("the left side of IN must be a column");
                Query sub = lower_to_query(*c.subquery, catalog_);
                if (sub.fields.size() != 1)
                    throw BindError("an IN subquery must return exactly one column");
                bool probe_str = probe.result_type() == ColumnType::String;
                bool sub_str = sub.fields[0].result_type() == ColumnType::String;
                if (probe_str != sub_str)
                    throw BindError("type mismatch between " + probe.display() +
                                    " and the IN subquery column");
                out.kind = Constraint::Kind::In;
                out.lhs = std::move(probe);
                out.subquery = std::make_shared<Query>(std::move(sub));
                return out;
            }
            case AstCondition::Kind::And:
            case AstCondition::Kind::Or: {
                out.kind = c.kind == AstCondition::Kind::And ? Constraint::Kind::And
                                                             : Constraint::Kind::Or;
                for (const AstCondition& child : c.children)
                    out.children.push_back(lower_condition(child));
                return out;
            }
            case AstCondition::Kind::Not: {
                out.kind = Constraint::Kind::Not;
                out.children.push_back(lower_condition(c.children[0]));
                return out;
            }
        }
        throw InternalError("unhandled condition kind");
    }

    void resolve_group_by() {
        for (const AstExpr& e : ast_.group_by) {
            SQLExpression g = lower_expr(e, ExprCtx::GroupBy);
            if (g.is_aggregate())
                throw BindError("aggregate functions are not allowed in GROUP BY");
            bool seen = false;
            for (const SQLExpression& prev : out_.group_by)
                if (prev.same_expr(g)) seen = true;
            if (!seen) out_.group_by.push_back(std::move(g));
        }
    }

    void resolve_order_by() {
        for (const AstOrderItem& item : ast_.order_by) {
            Query::OrderClause clause;
            clause.expr = lower_expr(item.expr, ExprCtx::OrderBy);
            clause.desc = item.desc;
            bool member = false;
            for (const SQLExpression& f : out_.fields)
                if (f.same_expr(clause.expr)) member = true;
            for (const SQLExpression& g : out_.group_by)
                if (g.same_expr(clause.expr)) member = true;
            if (!member)
                throw BindError("ORDER BY expression '" + clause.expr.display() +
                                "' must appear in the select list or GROUP BY");
            out_.order_by.push_back(std::move(clause));
        }
    }

    void check_aggregate_consistency() const {
        bool grouped = out_.has_aggregates() || !out_.group_by.empty();
        for (const SQLExpression& f : out_.fields) {
            if (f.is_bin() && f.bin_fn != BinFn::Bin) {
                // BIN_MIN/BIN_MAX are per-group bin boundaries; they need a
                // matching BIN over the same column in GROUP BY.
                bool matched = false;
                for (const SQLExpression& g : out_.group_by)
                    if (g.is_bin() && g.bin_fn == BinFn::Bin && g.table == f.table &&
                        g.column == f.column)
                        matched = true;
                if (!matched)
                    throw BindError(f.display() +
                                    " requires BIN over the same column in GROUP BY");
                continue;
            }
            if (!grouped || f.is_aggregate() || f.is_literal()) continue;
            bool member = false;
            for (const SQLExpression& g : out_.group_by)
                if (g.same_expr(f)) member = true;
            if (!member)
                throw BindError("'" + f.display() +
                                "' must appear in GROUP BY or inside an aggregate function");
        }
    }

    const AstSelect& ast_;
    const Catalog& catalog_;
    std::vector<const Table*> tables_;
    Query out_;
};

}  // namespace

Query lower_to_query(const AstSelect& ast, const Catalog& catalog) {
    return Lowerer(ast, catalog).run();
}

bool can_optimize_select(const AstSelect& ast, const Catalog& catalog) {
    try {
        lower_to_query(ast, catalog);
        return true;
    } catch (const BindError&) {
        return false;
    }
}

}  // namespace snel
