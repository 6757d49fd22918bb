#include "plan/plan.hpp"

#include <algorithm>

#include "common.hpp"
#include "storage/table.hpp"

namespace snel {

const char* plan_op_name(PlanOp op) {
    switch (op) {
        case PlanOp::FullScan: return "FULL SCAN";
        case PlanOp::IndexScan: return "INDEX SCAN";
        case PlanOp::Constraint: return "CONSTRAINT";
        case PlanOp::Aggregator: return "AGGREGATE";
        case PlanOp::ParallelAggregator: return "PARALLEL_AGGREGATOR";
        case PlanOp::Binner: return "BINNER";
        case PlanOp::Sort: return "SORT";
        case PlanOp::Limit: return "LIMIT";
        case PlanOp::Accumulate: return "ACCUMULATE";
        case PlanOp::MergeJoin: return "MERGEJOIN";
        case PlanOp::XJoin: return "XJOIN";
        case PlanOp::Debug: return "DEBUG";
    }
    return "?";
}

std::unique_ptr<PlanNode> PlanNode::clone() const {
    auto out = std::make_unique<PlanNode>(op);
    out->expressions = expressions;
    out->cost = cost;
    out->table = table;
    out->index_column = index_column;
    out->has_range = has_range;
    out->range_op = range_op;
    out->range_key = range_key;
    out->constraint = constraint;
    out->group_exprs = group_exprs;
    out->agg_exprs = agg_exprs;
    out->lanes = lanes;
    out->bin_specs = bin_specs;
    out->sort_keys = sort_keys;
    out->limit = limit;
    out->offset = offset;
    out->left_key = left_key;
    out->right_key = right_key;
    for (const auto& child : children) out->children.push_back(child->clone());
    return out;
}

bool PlanNode::provides(const SQLExpression& e) const {
    for (const SQLExpression& mine : expressions)
        if (mine.same_expr(e)) return true;
    return false;
}

bool constraint_equal(const Constraint& a, const Constraint& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Constraint::Kind::True:
        case Constraint::Kind::False: return true;
        case Constraint::Kind::Leaf:
            return a.op == b.op && a.lhs.same_expr(b.lhs) && a.rhs.same_expr(b.rhs);
        case Constraint::Kind::In:
            return a.lhs.same_expr(b.lhs) && a.subquery == b.subquery;
        case Constraint::Kind::And:
        case Constraint::Kind::Or:
        case Constraint::Kind::Not: {
            if (a.children.size() != b.children.size()) return false;
            for (std::size_t i = 0; i < a.children.size(); ++i)
                if (!constraint_equal(a.children[i], b.children[i])) return false;
            return true;
        }
    }
    return false;
}

namespace {

bool expr_lists_equal(const std::vector<SQLExpression>& a, const std::vector<SQLExpression>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!a[i].same_expr(b[i])) return false;
    return true;
}

}  // namespace

bool plan_equal(const PlanNode& a, const PlanNode& b) {
    if (a.op != b.op || a.cost != b.cost) return false;
    if (!expr_lists_equal(a.expressions, b.expressions)) return false;
    if (a.table != b.table || a.index_column != b.index_column) return false;
    if (a.op == PlanOp::IndexScan) {
        if (a.has_range != b.has_range) return false;
        if (a.has_range && (a.range_op != b.range_op || !(a.range_key == b.range_key)))
            return false;
    }
    if (!constraint_equal(a.constraint, b.constraint)) return false;
    if (!expr_lists_equal(a.group_exprs, b.group_exprs)) return false;
    if (!expr_lists_equal(a.agg_exprs, b.agg_exprs)) return false;
    if (a.lanes != b.lanes) return false;
    if (!expr_lists_equal(a.bin_specs, b.bin_specs)) return false;
    if (a.sort_keys.size() != b.sort_keys.size()) return false;
    for (std::size_t i = 0; i < a.sort_keys.size(); ++i)
        if (a.sort_keys[i].desc != b.sort_keys[i].desc ||
            !a.sort_keys[i].expr.same_expr(b.sort_keys[i].expr))
            return false;
    if (a.limit != b.limit || a.offset != b.offset) return false;
    if (a.op == PlanOp::MergeJoin &&
        (!a.left_key.same_expr(b.left_key) || !a.right_key.same_expr(b.right_key)))
        return false;
    if (a.children.size() != b.children.size()) return false;
    for (std::size_t i = 0; i < a.children.size(); ++i)
        if (!plan_equal(*a.children[i], *b.children[i])) return false;
    return true;
}

namespace {

uint64_t sat_mul(uint64_t a, uint64_t b) {
    if (a == 0 || b == 0) return 0;
    if (a > UINT64_MAX / b) return UINT64_MAX;
    return a * b;
}

void add_unique(std::vector<SQLExpression>& list, const SQLExpression& e) {
    for (const SQLExpression& seen : list)
        if (seen.same_expr(e)) return;
    list.push_back(e);
}

// Collects every column reference (including aggregate/bin arguments) so the
// scans project only what the query touches.
void collect_columns(const SQLExpression& e, std::vector<SQLExpression>& out) {
    if (e.kind == SQLExpression::Kind::Literal) return;
    if (e.kind == SQLExpression::Kind::Aggregate && e.agg_star) return;
    add_unique(out, column_expr(e.table, e.column, e.column_type, e.column_nullable));
}

void collect_columns(const Constraint& c, std::vector<SQLExpression>& out) {
    switch (c.kind) {
        case Constraint::Kind::Leaf:
            collect_columns(c.lhs, out);
            collect_columns(c.rhs, out);
            return;
        case Constraint::Kind::In: collect_columns(c.lhs, out); return;
        case Constraint::Kind::And:
        case Constraint::Kind::Or:
        case Constraint::Kind::Not:
            for (const Constraint& child : c.children) collect_columns(child, out);
            return;
        default: return;
    }
}

}  // namespace

PlanPtr build_plan(const Query& q, const Catalog& catalog) {
    std::vector<SQLExpression> referenced;
    for (const SQLExpression& f : q.fields) collect_columns(f, referenced);
    for (const SQLExpression& g : q.group_by) collect_columns(g, referenced);
    for (const Query::OrderClause& o : q.order_by) collect_columns(o.expr, referenced);
    collect_columns(q.constraint, referenced);

    // One FULL SCAN per source table, combined left-deep with XJOIN.
    PlanPtr root;
    for (const std::string& name : q.source_tables) {
        const Table* table = catalog.find(name);
        if (!table) throw InternalError("table '" + name + "' vanished from the catalog");
        auto scan = std::make_unique<PlanNode>(PlanOp::FullScan);
        scan->table = name;
        scan->cost = table->row_count();
        for (std::size_t i = 0; i < table->column_count(); ++i) {
            const ColumnDescriptor& col = table->column(i);
            SQLExpression e = column_expr(name, col.name, col.type, col.nullable);
            for (const SQLExpression& want : referenced)
                if (want.same_expr(e)) scan->expressions.push_back(e);
        }
        if (!root) {
            root = std::move(scan);
        } else {
            auto join = std::make_unique<PlanNode>(PlanOp::XJoin);
            join->cost = sat_mul(root->cost, scan->cost);
            join->expressions = root->expressions;
            join->expressions.insert(join->expressions.end(), scan->expressions.begin(),
                                     scan->expressions.end());
            join->children.push_back(std::move(root));
            join->children.push_back(std::move(scan));
            root = std::move(join);
        }
    }

    if (!q.constraint.is_true()) {
        auto node = std::make_unique<PlanNode>(PlanOp::Constraint);
        node->constraint = q.constraint;
        node->cost = root->cost;
        node->expressions = root->expressions;
        node->children.push_back(std::move(root));
        root = std::move(node);
    }

    // Histogram bins: computed per row above the filter, so bin bounds reflect
    // only qualifying rows.
    std::vector<SQLExpression> bin_family;
    for (const SQLExpression& f : q.fields)
        if (f.is_bin()) add_unique(bin_family, f);
    for (const SQLExpression& g : q.group_by)
        if (g.is_bin()) add_unique(bin_family, g);
    if (!bin_family.empty()) {
        auto node = std::make_unique<PlanNode>(PlanOp::Binner);
        for (const SQLExpression& e : bin_family)
            if (e.bin_fn == BinFn::Bin) node->bin_specs.push_back(e);
        node->cost = root->cost;
        node->expressions = root->expressions;
        for (const SQLExpression& e : bin_family) add_unique(node->expressions, e);
        node->children.push_back(std::move(root));
        root = std::move(node);
    }

    if (q.has_aggregates() || !q.group_by.empty()) {
        auto node = std::make_unique<PlanNode>(PlanOp::Aggregator);
        node->group_exprs = q.group_by;
        for (const SQLExpression& f : q.fields) {
            if (f.is_aggregate()) add_unique(node->agg_exprs, f);
            // BIN_MIN/BIN_MAX are constant within a group; the aggregator
            // carries them through like an aggregate.
            if (f.is_bin() && f.bin_fn != BinFn::Bin) add_unique(node->agg_exprs, f);
        }
        node->cost = root->cost;
        node->expressions = node->group_exprs;
        for (const SQLExpression& e : node->agg_exprs) add_unique(node->expressions, e);
        node->children.push_back(std::move(root));
        root = std::move(node);
    }

    if (q.distinct) {
        auto node = std::make_unique<PlanNode>(PlanOp::Aggregator);
        for (const SQLExpression& f : q.fields) add_unique(node->group_exprs, f);
        node->cost = root->cost;
        node->expressions = node->group_exprs;
        node->children.push_back(std::move(root));
        root = std::move(node);
    }

    if (!q.order_by.empty()) {
        auto node = std::make_unique<PlanNode>(PlanOp::Sort);
        node->sort_keys = q.order_by;
        node->cost = root->cost;
        node->expressions = root->expressions;
        node->children.push_back(std::move(root));
        root = std::move(node);
    }

    if (q.limit != NO_LIMIT || q.offset != 0) {
        auto node = std::make_unique<PlanNode>(PlanOp::Limit);
        node->limit = q.limit;
        node->offset = q.offset;
        node->cost = std::min(root->cost, q.limit);
        node->expressions = root->expressions;
        node->children.push_back(std::move(root));
        root = std::move(node);
    }

    return root;
}

namespace {

std::string node_detail(const PlanNode& n) {
    switch (n.op) {
        case PlanOp::Constraint: return n.constraint.display();
        case PlanOp::Sort: {
            std::string out;
            for (std::size_t i = 0; i < n.sort_keys.size(); ++i) {
                if (i) out += ", ";
                out += n.sort_keys[i].expr.display();
                out += n.sort_keys[i].desc ? " DESC" : " ASC";
            }
            return out;
        }
        case PlanOp::Limit: {
            std::string out;
            if (n.limit != NO_LIMIT) out += std::to_string(n.limit);
            if (n.offset != 0) {
                if (!out.empty()) out += ' ';
                out += "OFFSET " + std::to_string(n.offset);
            }
            return out;
        }
        case PlanOp::Binner: {
            std::string out;
            for (std::size_t i = 0; i < n.bin_specs.size(); ++i) {
                if (i) out += ", ";
                out += n.bin_specs[i].display();
            }
            return out;
        }
        case PlanOp::MergeJoin:
            return n.left_key.display() + " = " + n.right_key.display();
        case PlanOp::ParallelAggregator: return "lanes: " + std::to_string(n.lanes);
        default: return "";
    }
}

void render_node(const PlanNode& n, bool root, std::string& out) {
    out += plan_op_name(n.op);
    if (n.op == PlanOp::FullScan) {
        out += " FOR TABLE '" + n.table + "' (" + std::to_string(n.cost) + " rows)";
    } else if (n.op == PlanOp::IndexScan) {
        out += " FOR TABLE '" + n.table + "' USING '" + n.table + "." + n.index_column + "' (" +
               std::to_string(n.cost) + " rows)";
    } else {
        if (root) out += " (cost: " + std::to_string(n.cost) + ")";
        std::string detail = node_detail(n);
        if (!detail.empty()) out += " [" + detail + "]";
    }
    for (const auto& child : n.children) {
        out += " { ";
        render_node(*child, false, out);
        out += " }";
    }
}

}  // namespace

std::string explain(const PlanNode& root) {
    std::string out;
    render_node(root, true, out);
    return out;
}

std::string plan_to_dot(const PlanNode& root) {
    std::string out = "digraph queryplan {\n  node [shape=box];\n";
    int counter = 0;
    auto escape = [](const std::string& s) {
        std::string e;
        for (char c : s) {
            if (c == '"' || c == '\\') e += '\\';
            e += c;
        }
        return e;
    };
    // Emits this node, then edges to its children.
    auto emit = [&](auto&& self, const PlanNode& n) -> int {
        int id = counter++;
        std::string label = plan_op_name(n.op);
        if (n.op == PlanOp::FullScan || n.op == PlanOp::IndexScan) {
            label += "\\n'" + n.table + "' (" + std::to_string(n.cost) + " rows)";
            if (n.op == PlanOp::IndexScan) label += "\\nusing " + n.table + "." + n.index_column;
        } else {
            std::string detail = node_detail(n);
            if (!detail.empty()) label += "\\n" + escape(detail);
            label += "\\ncost: " + std::to_string(n.cost);
        }
        out += "  n" + std::to_string(id) + " [label=\"" + label + "\"];\n";
        for (const auto& child : n.children) {
            int cid = self(self, *child);
            out += "  n" + std::to_string(id) + " -> n" + std::to_string(cid) + ";\n";
        }
        return id;
    };
    emit(emit, root);
    out += "}\n";
    return out;
}

}  // namespace snel
