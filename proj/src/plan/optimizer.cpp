#include "plan/optimizer.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "common.hpp"
#include "storage/table.hpp"

namespace snel {

namespace {

uint64_t sat_mul(uint64_t a, uint64_t b) {
    if (a == 0 || b == 0) return 0;
    if (a > UINT64_MAX / b) return UINT64_MAX;
    return a * b;
}

void tables_in(const SQLExpression& e, std::set<std::string>& out) {
    if (e.kind == SQLExpression::Kind::Literal) return;
    if (e.kind == SQLExpression::Kind::Aggregate && e.agg_star) return;
    out.insert(e.table);
}

void tables_in(const Constraint& c, std::set<std::string>& out) {
    switch (c.kind) {
        case Constraint::Kind::Leaf:
            tables_in(c.lhs, out);
            tables_in(c.rhs, out);
            return;
        case Constraint::Kind::In: tables_in(c.lhs, out); return;
        case Constraint::Kind::And:
        case Constraint::Kind::Or:
        case Constraint::Kind::Not:
            for (const Constraint& child : c.children) tables_in(child, out);
            return;
        default: return;
    }
}

// Removes constant-true branches left behind when a pass consumes a leaf.
Constraint simplify(Constraint c) {
    switch (c.kind) {
        case Constraint::Kind::And: {
            std::vector<Constraint> kept;
            for (Constraint& child : c.children) {
                Constraint s = simplify(std::move(child));
                if (s.kind == Constraint::Kind::True) continue;
                if (s.kind == Constraint::Kind::False) return Constraint::make_false();
                kept.push_back(std::move(s));
            }
            if (kept.empty()) return Constraint::make_true();
            if (kept.size() == 1) return std::move(kept.front());
            c.children = std::move(kept);
            return c;
        }
        case Constraint::Kind::Or: {
            std::vector<Constraint> kept;
            for (Constraint& child : c.children) {
                Constraint s = simplify(std::move(child));
                if (s.kind == Constraint::Kind::False) continue;
                if (s.kind == Constraint::Kind::True) return Constraint::make_true();
                kept.push_back(std::move(s));
            }
            if (kept.empty()) return Constraint::make_false();
            if (kept.size() == 1) return std::move(kept.front());
            c.children = std::move(kept);
            return c;
        }
        case Constraint::Kind::Not: {
            Constraint s = simplify(std::move(c.children[0]));
            if (s.kind == Constraint::Kind::True) return Constraint::make_false();
            if (s.kind == Constraint::Kind::False) return Constraint::make_true();
            c.children[0] = std::move(s);
            return c;
        }
        default: return c;
    }
}

// AND-reachable leaves: conjuncts usable independently of the rest.
void collect_conjuncts(Constraint& c, std::vector<Constraint*>& out) {
    if (c.kind == Constraint::Kind::And) {
        for (Constraint& child : c.children) collect_conjuncts(child, out);
        return;
    }
    if (c.kind != Constraint::Kind::True) out.push_back(&c);
}

bool column_indexed(const Catalog& catalog, const std::string& table,
                    const std::string& column) {
    const Table* t = catalog.find(table);
    if (!t) return false;
    int idx = t->column_index(column);
    return idx >= 0 && t->column(static_cast<std::size_t>(idx)).indexed;
}

// Position of `column` in its table's declaration order; used as a
// deterministic tie-breaker between equally selective index candidates.
int column_order(const Catalog& catalog, const std::string& table, const std::string& column) {
    const Table* t = catalog.find(table);
    int idx = t ? t->column_index(column) : -1;
    return idx >= 0 ? idx : std::numeric_limits<int>::max();
}

// Folds `extra` into the constraint node at `slot` (creating one over the
// child when the slot holds something else).
void add_constraint_above(PlanPtr& slot, Constraint extra) {
    if (slot->op == PlanOp::Constraint) {
        std::vector<Constraint> parts;
        if (slot->constraint.kind == Constraint::Kind::And)
            parts = std::move(slot->constraint.children);
        else
            parts.push_back(std::move(slot->constraint));
        parts.push_back(std::move(extra));
        slot->constraint = Constraint::conjunction(std::move(parts));
        return;
    }
    auto node = std::make_unique<PlanNode>(PlanOp::Constraint);
    node->constraint = std::move(extra);
    node->expressions = slot->expressions;
    node->cost = slot->cost;
    node->children.push_back(std::move(slot));
    slot = std::move(node);
}

// ---------------------------------------------------------------- pass 1 ---

// Turns `XJOIN + equality on two indexed columns` into a MERGEJOIN whose
// inputs walk the key indexes in value order. Only plain full scans are
// converted; anything fancier keeps the cross join.
struct JoinRewriter {
    const Catalog& catalog;
    int rewrites = 0;

    PlanPtr make_index_scan(PlanNode& scan, const SQLExpression& key) {
        auto node = std::make_unique<PlanNode>(PlanOp::IndexScan);
        node->table = scan.table;
        node->index_column = key.column;
        node->cost = scan.cost;
        node->expressions = scan.expressions;
        return node;
    }

    bool try_rewrite_join(PlanNode& join, Constraint& leaf) {
        const SQLExpression& a = leaf.lhs;
        const SQLExpression& b = leaf.rhs;
        if (!a.is_column() || !b.is_column()) return false;
        if (!column_indexed(catalog, a.table, a.column) ||
            !column_indexed(catalog, b.table, b.column))
            return false;
        PlanNode& left = *join.children[0];
        PlanNode& right = *join.children[1];
        if (left.op != PlanOp::FullScan || right.op != PlanOp::FullScan) return false;
        const SQLExpression* left_key = nullptr;
        const SQLExpression* right_key = nullptr;
        if (a.table == left.table && b.table == right.table) {
            left_key = &a;
            right_key = &b;
        } else if (b.table == left.table && a.table == right.table) {
            left_key = &b;
            right_key = &a;
        } else {
            return false;
        }
        join.op = PlanOp::MergeJoin;
        join.left_key = *left_key;
        join.right_key = *right_key;
        join.children[0] = make_index_scan(left, *left_key);
        join.children[1] = make_index_scan(right, *right_key);
        leaf = Constraint::make_true();
        ++rewrites;
        return true;
    }

    void visit(PlanPtr& slot) {
        for (auto& child : slot->children) visit(child);
        if (slot->op != PlanOp::Constraint) return;
        PlanNode& n = *slot;
        std::vector<Constraint*> conjuncts;
        collect_conjuncts(n.constraint, conjuncts);
        for (Constraint* leaf : conjuncts) {
            if (leaf->kind != Constraint::Kind::Leaf || leaf->op != CmpOp::Eq) continue;
            // Try every cross join reachable through the join chain below.
            std::vector<PlanNode*> stack = {n.children[0].get()};
            while (!stack.empty()) {
                PlanNode* j = stack.back();
                stack.pop_back();
                if (j->op != PlanOp::XJoin) continue;
                if (try_rewrite_join(*j, *leaf)) break;
                stack.push_back(j->children[0].get());
                stack.push_back(j->children[1].get());
            }
        }
        n.constraint = simplify(std::move(n.constraint));
        if (n.constraint.is_true()) slot = std::move(n.children[0]);
    }
};

// ---------------------------------------------------------------- pass 2 ---

struct PushdownRewriter {
    int rewrites = 0;

    static bool is_join(const PlanNode& n) {
        return n.op == PlanOp::XJoin || n.op == PlanOp::MergeJoin;
    }

    // Finds where a single-table conjunct should land inside a join subtree:
    // the slot holding that table's scan, or the constraint already sitting
    // on it (so repeated pushes merge instead of stacking).
    PlanPtr* find_push_slot(PlanPtr& slot, const std::string& table) {
        PlanNode& n = *slot;
        if (n.op == PlanOp::FullScan || n.op == PlanOp::IndexScan)
            return n.table == table ? &slot : nullptr;
        if (n.op == PlanOp::Constraint)
            return find_push_slot(n.children[0], table) ? &slot : nullptr;
        if (is_join(n)) {
            for (auto& child : n.children)
                if (PlanPtr* found = find_push_slot(child, table)) return found;
        }
        return nullptr;
    }

    void visit(PlanPtr& slot) {
        for (auto& child : slot->children) visit(child);
        if (slot->op != PlanOp::Constraint || !is_join(*slot->children[0])) return;
        PlanNode& n = *slot;

        std::vector<Constraint*> conjuncts;
        collect_conjuncts(n.constraint, conjuncts);
        for (Constraint* conjunct : conjuncts) {
            std::set<std::string> tables;
            tables_in(*conjunct, tables);
            if (tables.size() != 1) continue;
            PlanPtr* target = find_push_slot(n.children[0], *tables.begin());
            if (!target) continue;
            add_constraint_above(*target, std::move(*conjunct));
            *conjunct = Constraint::make_true();
            ++rewrites;
        }
        n.constraint = simplify(std::move(n.constraint));
        if (n.constraint.is_true()) slot = std::move(n.children[0]);
    }
};

// ---------------------------------------------------------------- pass 3 ---

struct IndexRewriter {
    const Catalog& catalog;
    int rewrites = 0;

    // Estimated rows served by `table.column op key`, probing the real index
    // when the table has data on disk.
    uint64_t estimate(const std::string& table, const std::string& column, CmpOp op,
                      const Value& key) {
        const Table* t = catalog.find(table);
        if (!t) return UINT64_MAX;
        if (!t->has_data()) return t->row_count();
        int idx = t->column_index(column);
        const IndexFile* index = t->index(static_cast<std::size_t>(idx));
        if (!index) return t->row_count();
        return index->range_for(op, key).size();
    }

    void visit(PlanPtr& slot) {
        for (auto& child : slot->children) visit(child);
        if (slot->op != PlanOp::Constraint || slot->children[0]->op != PlanOp::FullScan)
            return;
        PlanNode& n = *slot;
        PlanNode& scan = *n.children[0];

        std::vector<Constraint*> conjuncts;
        collect_conjuncts(n.constraint, conjuncts);
        Constraint* best = nullptr;
        uint64_t best_rows = 0;
        int best_order = 0;
        for (Constraint* c : conjuncts) {
            if (c->kind != Constraint::Kind::Leaf || c->op == CmpOp::Ne) continue;
            if (!c->lhs.is_column() || !c->rhs.is_literal()) continue;
            if (c->rhs.literal.is_null()) continue;
            if (c->lhs.table != scan.table) continue;
            if (!column_indexed(catalog, c->lhs.table, c->lhs.column)) continue;
            uint64_t rows = estimate(c->lhs.table, c->lhs.column, c->op, c->rhs.literal);
            int order = column_order(catalog, c->lhs.table, c->lhs.column);
            if (!best || rows < best_rows || (rows == best_rows && order < best_order)) {
                best = c;
                best_rows = rows;
                best_order = order;
            }
        }
        if (!best) return;

        auto index_scan = std::make_unique<PlanNode>(PlanOp::IndexScan);
        index_scan->table = scan.table;
        index_scan->index_column = best->lhs.column;
        index_scan->has_range = true;
        index_scan->range_op = best->op;
        index_scan->range_key = best->rhs.literal;
        index_scan->cost = best_rows;
        index_scan->expressions = scan.expressions;
        *best = Constraint::make_true();
        n.children[0] = std::move(index_scan);
        n.constraint = simplify(std::move(n.constraint));
        ++rewrites;
        if (n.constraint.is_true()) slot = std::move(n.children[0]);
    }
};

// ---------------------------------------------------------------- pass 4 ---

struct SortPushdown {
    int rewrites = 0;

    static bool order_preserving(PlanOp op) {
        return op == PlanOp::Constraint || op == PlanOp::Binner || op == PlanOp::Debug;
    }

    // `slot` holds a SORT; sink it below row-local operators while its keys
    // remain computable (a sort on BIN output cannot sink past BINNER).
    void push_down(PlanPtr& slot) {
        PlanNode& sort = *slot;
        PlanNode& mid = *sort.children[0];
        if (!order_preserving(mid.op)) return;
        for (const Query::OrderClause& key : sort.sort_keys)
            if (!mid.children[0]->provides(key.expr)) return;
        PlanPtr mid_ptr = std::move(sort.children[0]);
        sort.children[0] = std::move(mid_ptr->children[0]);
        sort.expressions = sort.children[0]->expressions;
        PlanPtr sort_ptr = std::move(slot);
        mid_ptr->children[0] = std::move(sort_ptr);
        slot = std::move(mid_ptr);
        ++rewrites;
        push_down(slot->children[0]);
    }

    void visit(PlanPtr& slot) {
        if (slot->op == PlanOp::Sort) push_down(slot);
        for (auto& child : slot->children) visit(child);
    }
};

// ---------------------------------------------------------------- pass 5 ---

// True when `n` already emits rows ordered by `keys`.
bool already_ordered(const PlanNode& n, const std::vector<Query::OrderClause>& keys) {
    switch (n.op) {
        case PlanOp::IndexScan: {
            if (keys.size() != 1 || keys[0].desc) return false;
            const SQLExpression& e = keys[0].expr;
            return e.is_column() && e.table == n.table && e.column == n.index_column;
        }
        case PlanOp::MergeJoin: {
            if (keys.size() != 1 || keys[0].desc) return false;
            return keys[0].expr.same_expr(n.left_key) || keys[0].expr.same_expr(n.right_key);
        }
        case PlanOp::Sort: {
            if (keys.size() > n.sort_keys.size()) return false;
            for (std::size_t i = 0; i < keys.size(); ++i)
                if (keys[i].desc != n.sort_keys[i].desc ||
                    !keys[i].expr.same_expr(n.sort_keys[i].expr))
                    return false;
            return true;
        }
        case PlanOp::Constraint:
        case PlanOp::Binner:
        case PlanOp::Limit:
        case PlanOp::Accumulate:
        case PlanOp::Debug: return already_ordered(*n.children[0], keys);
        default: return false;
    }
}

struct SortElimination {
    int rewrites = 0;

    void visit(PlanPtr& slot) {
        while (slot->op == PlanOp::Sort &&
               already_ordered(*slot->children[0], slot->sort_keys)) {
            slot = std::move(slot->children[0]);
            ++rewrites;
        }
        for (auto& child : slot->children) visit(child);
    }
};

// ---------------------------------------------------------------- pass 6 ---

// A subtree an aggregation can consume in independent row-range lanes: one
// scan under row-local operators only.
bool partitionable_pipeline(const PlanNode& n) {
    switch (n.op) {
        case PlanOp::FullScan:
        case PlanOp::IndexScan: return true;
        case PlanOp::Constraint:
        case PlanOp::Binner:
        case PlanOp::Debug: return partitionable_pipeline(*n.children[0]);
        default: return false;
    }
}

struct Parallelizer {
    unsigned lanes;
    int rewrites = 0;

    void visit(PlanPtr& slot) {
        PlanNode& n = *slot;
        if (n.op == PlanOp::Aggregator && partitionable_pipeline(*n.children[0])) {
            auto wrap = std::make_unique<PlanNode>(PlanOp::ParallelAggregator);
            wrap->lanes = lanes;
            wrap->cost = n.cost;
            wrap->expressions = n.expressions;
            wrap->children.push_back(std::move(slot));
            slot = std::move(wrap);
            ++rewrites;
            return;
        }
        // Descend only through operators that can sit above an aggregation.
        if (n.op == PlanOp::Sort || n.op == PlanOp::Limit || n.op == PlanOp::Debug ||
            n.op == PlanOp::Accumulate || n.op == PlanOp::Aggregator)
            visit(n.children[0]);
    }
};

// --------------------------------------------------------------- costs -----

uint64_t refresh_costs(PlanNode& n) {
    for (auto& child : n.children) refresh_costs(*child);
    switch (n.op) {
        case PlanOp::FullScan:
        case PlanOp::IndexScan: break;  // seeded by the planner / pass 3
        case PlanOp::XJoin:
            n.cost = sat_mul(n.children[0]->cost, n.children[1]->cost);
            break;
        case PlanOp::MergeJoin:
            n.cost = std::max(n.children[0]->cost, n.children[1]->cost);
            break;
        case PlanOp::Limit:
            n.cost = std::min(n.children[0]->cost, n.limit);
            break;
        default: n.cost = n.children[0]->cost; break;
    }
    return n.cost;
}

}  // namespace

PlanPtr pass1_optimize_joins(PlanPtr plan, const Catalog& catalog, int* rewrites) {
    JoinRewriter r{catalog};
    r.visit(plan);
    if (rewrites) *rewrites = r.rewrites;
    refresh_costs(*plan);
    return plan;
}

PlanPtr pass2_pushdown_constraints(PlanPtr plan, int* rewrites) {
    PushdownRewriter r;
    r.visit(plan);
    if (rewrites) *rewrites = r.rewrites;
    refresh_costs(*plan);
    return plan;
}

PlanPtr pass3_apply_indexes(PlanPtr plan, const Catalog& catalog, int* rewrites) {
    IndexRewriter r{catalog};
    r.visit(plan);
    if (rewrites) *rewrites = r.rewrites;
    refresh_costs(*plan);
    return plan;
}

PlanPtr pass4_pushdown_sorts(PlanPtr plan, int* rewrites) {
    SortPushdown r;
    r.visit(plan);
    if (rewrites) *rewrites = r.rewrites;
    refresh_costs(*plan);
    return plan;
}

PlanPtr pass5_eliminate_sorts(PlanPtr plan, int* rewrites) {
    SortElimination r;
    r.visit(plan);
    if (rewrites) *rewrites = r.rewrites;
    refresh_costs(*plan);
    return plan;
}

PlanPtr pass6_parallelize(PlanPtr plan, unsigned max_lanes, int* rewrites) {
    int count = 0;
    if (max_lanes > 1) {
        Parallelizer r{max_lanes};
        r.visit(plan);
        count = r.rewrites;
    }
    if (rewrites) *rewrites = count;
    refresh_costs(*plan);
    return plan;
}

std::pair<PlanPtr, PassReport> optimize(PlanPtr plan, const Catalog& catalog,
                                        unsigned max_lanes) {
    PassReport report;
    auto record = [&](const char* name, int n) {
        report.entries.push_back({name, n > 0, n});
    };
    int n = 0;
    plan = pass1_optimize_joins(std::move(plan), catalog, &n);
    record("join optimization", n);
    plan = pass2_pushdown_constraints(std::move(plan), &n);
    record("predicate pushdown", n);
    plan = pass3_apply_indexes(std::move(plan), catalog, &n);
    record("index application", n);
    plan = pass4_pushdown_sorts(std::move(plan), &n);
    record("sort pushdown", n);
    plan = pass5_eliminate_sorts(std::move(plan), &n);
    record("sort elimination", n);
    plan = pass6_parallelize(std::move(plan), max_lanes, &n);
    record("parallelization", n);
    return {std::move(plan), std::move(report)};
}

std::string PassReport::to_text() const {
    std::string out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const Entry& e = entries[i];
        out += std::to_string(i + 1) + ". " + e.name + ": ";
        out += e.fired ? std::to_string(e.nodes_rewritten) + " rewrite(s)" : "no change";
        out += '\n';
    }
    return out;
}

}  // namespace snel
