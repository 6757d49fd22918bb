#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sql/query.hpp"

namespace snel {

class Catalog;

enum class PlanOp : uint8_t {
    FullScan,
    IndexScan,
    Constraint,
    Aggregator,
    ParallelAggregator,
    Binner,
    Sort,
    Limit,
    Accumulate,
    MergeJoin,
    XJoin,
    Debug,
};

const char* plan_op_name(PlanOp op);

// One relational-algebra operator. `expressions` lists what the node can
// provide to its parent; `cost` estimates the rows flowing through the node
// (scans: rows produced; everything else: rows received from below, except
// LIMIT which caps it).
struct PlanNode {
    PlanOp op = PlanOp::FullScan;
    std::vector<std::unique_ptr<PlanNode>> children;
    std::vector<SQLExpression> expressions;
    uint64_t cost = 0;

    // FullScan / IndexScan
    std::string table;
    // IndexScan: the traversed index and, when has_range is set, the served
    // predicate `table.index_column range_op range_key`. Without a range the
    // scan walks the whole index in value order (a merge-join input).
    std::string index_column;
    bool has_range = false;
    CmpOp range_op = CmpOp::Eq;
    Value range_key;

    Constraint constraint;  // Constraint

    std::vector<SQLExpression> group_exprs;  // Aggregator
    std::vector<SQLExpression> agg_exprs;    // Aggregator: aggregates + bin boundaries

    unsigned lanes = 1;  // ParallelAggregator

    std::vector<SQLExpression> bin_specs;  // Binner: the BIN(col, n) expressions

    std::vector<Query::OrderClause> sort_keys;  // Sort

    uint64_t limit = NO_LIMIT;  // Limit
    uint64_t offset = 0;

    SQLExpression left_key, right_key;  // MergeJoin

    PlanNode() = default;
    explicit PlanNode(PlanOp op) : op(op) {}

    std::unique_ptr<PlanNode> clone() const;
    bool provides(const SQLExpression& e) const;
};

using PlanPtr = std::unique_ptr<PlanNode>;

bool plan_equal(const PlanNode& a, const PlanNode& b);
bool constraint_equal(const Constraint& a, const Constraint& b);

// Naive translation: scans joined by XJOIN, one CONSTRAINT for the whole
// WHERE clause, BINNER/AGGREGATOR/SORT/LIMIT stacked as the query requires.
PlanPtr build_plan(const Query& q, const Catalog& catalog);

// Nested-brace rendering, read inside-out. Only the root shows `(cost: n)`;
// scans always show `(n rows)` instead.
std::string explain(const PlanNode& root);

// Graphviz rendering of the operator tree.
std::string plan_to_dot(const PlanNode& root);

}  // namespace snel
