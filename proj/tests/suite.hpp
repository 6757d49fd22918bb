#pragma once

// Shared harness for the randomized comparison suites: builds a pool of
// fixture tables on disk, attaches them to a catalog, and runs queries
// through selectable planner and engine configurations.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "oracle.hpp"
#include "query_gen.hpp"
#include "table_builder.hpp"
#include "test_util.hpp"

struct EnginePool {
    TempDir dir;
    snel::Catalog cat;
    std::vector<oracle::Table> tables;
    std::vector<std::size_t> singles;    // every table, by pool index
    std::vector<std::size_t> joinables;  // small enough for the oracle's cross product

    void add(oracle::Table t, bool joinable) {
        write_table(dir.path(), t.name, t.cols);
        cat.attach(dir.path(), t.name);
        singles.push_back(tables.size());
        if (joinable) joinables.push_back(tables.size());
        tables.push_back(std::move(t));
    }

    std::string next_query(Gen& g) { return g.make_query(tables, singles, joinables); }
};

// A spread of single-table sizes (including empty and single-row tables)
// plus small join partners.
inline void fill_pool(EnginePool& p, Gen& g, std::size_t big_rows) {
    const std::size_t single_sizes[] = {0, 1, 37, 311, 2500, big_rows};
    int n = 0;
    for (std::size_t rows : single_sizes)
        p.add(g.make_table("s" + std::to_string(n++), rows), false);
    const std::size_t join_sizes[] = {0, 23, 150, 300};
    n = 0;
    for (std::size_t rows : join_sizes)
        p.add(g.make_table("j" + std::to_string(n++), rows), true);
}

// Compiles and drains one already-built plan.
inline std::vector<std::vector<snel::Value>> run_plan(const snel::Catalog& cat,
                                                      const snel::Query& q, snel::PlanPtr plan,
                                                      unsigned lanes) {
    snel::ResultCursor cur(snel::compile(cat, std::move(plan), q, lanes));
    std::vector<std::vector<snel::Value>> rows;
    while (cur.next()) rows.push_back(cur.values());
    return rows;
}
