#include "common.hpp"
#include "sql/ast.hpp"

namespace snel {

namespace {

void render_expr(const AstExpr& e, std::string& out) {
    switch (e.kind) {
        case AstExpr::Kind::Star: out += "*"; return;
        case AstExpr::Kind::Literal: out += e.literal.to_sql(); return;
        case AstExpr::Kind::Column:
            if (!e.table.empty()) {
                out += e.table;
                out += '.';
            }
            out += e.column;
            return;
        case AstExpr::Kind::Call: {
            out += e.fn;
            out += '(';
            if (e.distinct_arg) out += "DISTINCT ";
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += ", ";
                render_expr(e.args[i], out);
            }
            out += ')';
            return;
        }
        case AstExpr::Kind::Subquery:
            out += '(';
            out += render_sql(*e.subquery);
            out += ')';
            return;
    }
}

void render_cond(const AstCondition& c, std::string& out) {
    auto render_child = [&](const AstCondition& child, bool parens) {
        if (parens) out += '(';
        render_cond(child, out);
        if (parens) out += ')';
    };
    switch (c.kind) {
        case AstCondition::Kind::Compare:
            render_expr(c.exprs[0], out);
            out += ' ';
            out += cmp_op_text(c.op);
            out += ' ';
            render_expr(c.exprs[1], out);
            return;
        case AstCondition::Kind::In:
            render_expr(c.exprs[0], out);
            out += " IN (";
            out += render_sql(*c.subquery);
            out += ')';
            return;
        case AstCondition::Kind::And:
            for (std::size_t i = 0; i < c.children.size(); ++i) {
                if (i) out += " AND ";
                const auto k = c.children[i].kind;
                render_child(c.children[i],
                             k == AstCondition::Kind::And || k == AstCondition::Kind::Or);
            }
            return;
        case AstCondition::Kind::Or:
            for (std::size_t i = 0; i < c.children.size(); ++i) {
                if (i) out += " OR ";
                render_child(c.children[i], c.children[i].kind == AstCondition::Kind::Or);
            }
            return;
        case AstCondition::Kind::Not: {
            out += "NOT ";
            const auto k = c.children[0].kind;
            render_child(c.children[0],
                         k == AstCondition::Kind::And || k == AstCondition::Kind::Or);
            return;
        }
    }
}

}  // namespace

std::string render_sql(const AstExpr& expr) {
    std::string out;
    render_expr(expr, out);
    return out;
}

std::string render_sql(const AstCondition& cond) {
    std::string out;
    render_cond(cond, out);
    return out;
}

std::string render_sql(const AstSelect& s) {
    std::string out = "SELECT ";
    if (s.distinct) out += "DISTINCT ";
    for (std::size_t i = 0; i < s.items.size(); ++i) {
        if (i) out += ", ";
        render_expr(s.items[i], out);
        if (!s.items[i].alias.empty()) {
            out += " AS ";
            out += s.items[i].alias;
        }
    }
    out += " FROM ";
    for (std::size_t i = 0; i < s.from.size(); ++i) {
        if (i) out += ", ";
        out += s.from[i];
    }
    if (s.where) {
        out += " WHERE ";
        render_cond(*s.where, out);
    }
    if (!s.group_by.empty()) {
        out += " GROUP BY ";
        for (std::size_t i = 0; i < s.group_by.size(); ++i) {
            if (i) out += ", ";
            render_expr(s.group_by[i], out);
        }
    }
    if (s.having) {
        out += " HAVING ";
        render_cond(*s.having, out);
    }
    if (!s.order_by.empty()) {
        out += " ORDER BY ";
        for (std::size_t i = 0; i < s.order_by.size(); ++i) {
            if (i) out += ", ";
            render_expr(s.order_by[i].expr, out);
            if (s.order_by[i].desc) out += " DESC";
        }
    }
    if (s.limit) {
        out += " LIMIT " + std::to_string(*s.limit);
        if (s.offset) out += " OFFSET " + std::to_string(*s.offset);
    }
    if (s.union_next) {
        out += " UNION ";
        out += render_sql(*s.union_next);
    }
    return out;
}

}  // namespace snel
