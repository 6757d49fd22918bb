#pragma once

#include <string>
#include <utility>
#include <vector>

#include "plan/plan.hpp"

namespace snel {

class Catalog;

// What each optimization pass did, in the fixed pass order.
struct PassReport {
    struct Entry {
        std::string name;
        bool fired = false;
        int nodes_rewritten = 0;
    };
    std::vector<Entry> entries;

    std::string to_text() const;
};

// The six passes, exposed individually for targeted testing. Each takes and
// returns the plan (rewritten in place where possible) and reports how many
// nodes it rewrote.
PlanPtr pass1_optimize_joins(PlanPtr plan, const Catalog& catalog, int* rewrites = nullptr);
PlanPtr pass2_pushdown_constraints(PlanPtr plan, int* rewrites = nullptr);
PlanPtr pass3_apply_indexes(PlanPtr plan, const Catalog& catalog, int* rewrites = nullptr);
PlanPtr pass4_pushdown_sorts(PlanPtr plan, int* rewrites = nullptr);
PlanPtr pass5_eliminate_sorts(PlanPtr plan, int* rewrites = nullptr);
PlanPtr pass6_parallelize(PlanPtr plan, unsigned max_lanes, int* rewrites = nullptr);

// Applies the passes in order and refreshes cost estimates.
std::pair<PlanPtr, PassReport> optimize(PlanPtr plan, const Catalog& catalog,
                                        unsigned max_lanes);

}  // namespace snel
