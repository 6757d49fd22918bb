#include <string>
#include <vector>

#include <doctest.h>

#include "suite.hpp"

using snel::Value;

namespace {

// Evaluates q through the reference interpreter with LIMIT/OFFSET stripped,
// so result checking can reason about the ambiguous row selection itself.
std::vector<std::vector<Value>> reference_rows(oracle::Evaluator& eval, const snel::Query& q) {
    snel::Query full = q;
    full.limit = snel::NO_LIMIT;
    full.offset = 0;
    return eval.eval(full);
}

}  // namespace

TEST_CASE("engine output matches the reference interpreter on random queries") {
    Gen g(20260814ull);
    EnginePool pool;
    fill_pool(pool, g, 4000);
    oracle::Evaluator oracle_eval(pool.tables);
    const int target = 140;
    int executed = 0;
    for (int iter = 0; executed < target && iter < target * 4; ++iter) {
        std::string sql = pool.next_query(g);
        CAPTURE(sql);
        snel::Query q;
        try {
            q = lower_sql(pool.cat, sql);
        } catch (const snel::Error&) {
            continue;  // the generator occasionally overshoots the subset
        }
        auto expected = reference_rows(oracle_eval, q);
        auto naive = run_plan(pool.cat, q, snel::build_plan(q, pool.cat), 1);
        std::string diff = oracle::compare_results(q, naive, expected);
        CHECK_MESSAGE(diff.empty(), "naive plan: " << diff);
        for (unsigned lanes : {1u, 4u}) {
            auto plan = snel::optimize(snel::build_plan(q, pool.cat), pool.cat, lanes).first;
            auto rows = run_plan(pool.cat, q, std::move(plan), lanes);
            diff = oracle::compare_results(q, rows, expected);
            CHECK_MESSAGE(diff.empty(), "optimized with " << lanes << " lanes: " << diff);
        }
        ++executed;
    }
    CHECK(executed >= target);
}

TEST_CASE("every optimizer pass preserves results and the pipeline is idempotent") {
    Gen g(77002026ull);
    EnginePool pool;
    fill_pool(pool, g, 1200);
    oracle::Evaluator oracle_eval(pool.tables);
    struct NamedPass {
        const char* name;
        snel::PlanPtr (*apply)(snel::PlanPtr, const snel::Catalog&);
    };
    const NamedPass passes[] = {
        {"join ordering", [](snel::PlanPtr p, const snel::Catalog& c) {
             return snel::pass1_optimize_joins(std::move(p), c);
         }},
        {"constraint pushdown", [](snel::PlanPtr p, const snel::Catalog&) {
             return snel::pass2_pushdown_constraints(std::move(p));
         }},
        {"index application", [](snel::PlanPtr p, const snel::Catalog& c) {
             return snel::pass3_apply_indexes(std::move(p), c);
         }},
        {"sort pushdown", [](snel::PlanPtr p, const snel::Catalog&) {
             return snel::pass4_pushdown_sorts(std::move(p));
         }},
        {"sort elimination", [](snel::PlanPtr p, const snel::Catalog&) {
             return snel::pass5_eliminate_sorts(std::move(p));
         }},
        {"parallelization", [](snel::PlanPtr p, const snel::Catalog&) {
             return snel::pass6_parallelize(std::move(p), 4);
         }},
    };
    const int target = 60;
    int executed = 0;
    for (int iter = 0; executed < target && iter < target * 4; ++iter) {
        std::string sql = pool.next_query(g);
        CAPTURE(sql);
        snel::Query q;
        try {
            q = lower_sql(pool.cat, sql);
        } catch (const snel::Error&) {
            continue;
        }
        auto expected = reference_rows(oracle_eval, q);
        for (const NamedPass& pass : passes) {
            auto plan = pass.apply(snel::build_plan(q, pool.cat), pool.cat);
            auto rows = run_plan(pool.cat, q, std::move(plan), 4);
            std::string diff = oracle::compare_results(q, rows, expected);
            CHECK_MESSAGE(diff.empty(), pass.name << ": " << diff);
        }
        auto once = snel::optimize(snel::build_plan(q, pool.cat), pool.cat, 4).first;
        auto rows = run_plan(pool.cat, q, once->clone(), 4);
        std::string diff = oracle::compare_results(q, rows, expected);
        CHECK_MESSAGE(diff.empty(), "full pipeline: " << diff);
        auto twice = snel::optimize(once->clone(), pool.cat, 4).first;
        CHECK_MESSAGE(snel::plan_equal(*once, *twice), "pipeline is not idempotent");
        ++executed;
    }
    CHECK(executed >= target);
}
