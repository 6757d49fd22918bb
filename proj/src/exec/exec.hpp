#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "plan/plan.hpp"
#include "sql/query.hpp"
#include "storage/table.hpp"
#include "value.hpp"

namespace snel {

// One named per-lane state slot registered by an operator during compilation,
// e.g. "Limit.currentPosition". Every lane starts from the initial value.
struct ContextVariable {
    std::string name;
    int64_t initial = 0;
};

// One top-level result column. The fused routine writes the current row's
// value here; string data is borrowed and valid until the next fetch.
struct OutputSlot {
    std::string name;
    ColumnType type = ColumnType::Int64;
    bool is_null = true;
    int64_t i = 0;       // Bool..Int64 value
    double f = 0.0;      // Float32 value (64-bit internally)
    std::string_view s;  // String value

    // Typed copy of the current value.
    Value value() const;
};

// A plan lowered to one fused fetch-row routine per pipeline. Pipeline
// breakers (sorts, aggregations, join inputs) materialize internally on the
// first fetch; fetch_row then streams the top pipeline one row per call.
class CompiledQuery {
public:
    ~CompiledQuery();
    CompiledQuery(CompiledQuery&&) noexcept;
    CompiledQuery& operator=(CompiledQuery&&) noexcept;

    // Runs the pipeline-breaker phases. fetch_row calls this lazily.
    void init();
    // Advances the output slots to the next result row; false means EOF and
    // stays false forever after.
    bool fetch_row();
    // Releases buffers and materialized state early. Idempotent; fetch_row
    // afterwards reports EOF.
    void destroy();

    const std::vector<OutputSlot>& outputs() const;
    const std::vector<ContextVariable>& context_variables() const;

    struct Impl;

private:
    friend std::unique_ptr<CompiledQuery> compile(const Catalog&, PlanPtr, const Query&,
                                                  unsigned);
    CompiledQuery();
    std::unique_ptr<Impl> impl_;
};

// Fuses the plan into a CompiledQuery. `query` supplies the output column
// list (plan nodes carry only column/aggregate expressions, not the SELECT
// projection with its aliases and literals). `max_lanes` caps parallel
// aggregation lanes. Throws CompileError when the plan references a table
// without on-disk data or an unavailable column/index.
std::unique_ptr<CompiledQuery> compile(const Catalog& catalog, PlanPtr plan, const Query& query,
                                       unsigned max_lanes);

// Row-by-row iteration: while (cursor.next()) use cursor.values().
class ResultCursor {
public:
    explicit ResultCursor(std::unique_ptr<CompiledQuery> query);

    bool next();
    // Valid only after next() returned true.
    const std::vector<Value>& values() const { return row_; }
    const std::vector<OutputSlot>& outputs() const { return query_->outputs(); }
    CompiledQuery& query() { return *query_; }

private:
    std::unique_ptr<CompiledQuery> query_;
    std::vector<Value> row_;
};

}  // namespace snel
