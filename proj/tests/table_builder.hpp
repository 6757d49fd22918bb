#pragma once

#include <string>
#include <vector>

#include "exec/exec.hpp"
#include "plan/optimizer.hpp"
#include "plan/plan.hpp"
#include "sql/ast.hpp"
#include "sql/query.hpp"
#include "storage/column.hpp"
#include "storage/index.hpp"
#include "storage/schema.hpp"
#include "storage/table.hpp"
#include "value.hpp"

// One column of a fixture table, with its data inline.
struct TestColumn {
    std::string name;
    snel::ColumnType type = snel::ColumnType::Int64;
    bool nullable = false;
    bool indexed = false;
    std::vector<snel::Value> values;
};

// Writes a complete table (schema, columns, null maps, indexes) into `dir`.
inline void write_table(const std::string& dir, const std::string& name,
                        const std::vector<TestColumn>& cols) {
    snel::SchemaDescriptor s;
    s.table_name = name;
    s.row_count = cols.empty() ? 0 : cols[0].values.size();
    for (const TestColumn& c : cols)
        s.columns.push_back(snel::ColumnDescriptor{c.name, c.type, c.nullable, c.indexed});
    snel::write_schema_json(s, snel::schema_file_path(dir, name));
    for (const TestColumn& c : cols) {
        if (c.type == snel::ColumnType::String)
            snel::write_text_column(c.values, snel::column_file_path(dir, name, c.name));
        else
            snel::write_fixed_column(c.values, c.type, c.nullable,
                                     snel::column_file_path(dir, name, c.name),
                                     snel::nullmap_file_path(dir, name, c.name));
    }
    for (std::size_t i = 0; i < cols.size(); ++i)
        if (cols[i].indexed) snel::build_column_index(dir, s, i);
}

inline snel::Query lower_sql(const snel::Catalog& cat, const std::string& sql) {
    return snel::lower_to_query(snel::parse_select(sql), cat);
}

// Full stack: parse, lower, plan, (optionally) optimize, compile, drain.
inline std::vector<std::vector<snel::Value>> run_query(const snel::Catalog& cat,
                                                       const std::string& sql,
                                                       unsigned max_lanes = 1,
                                                       bool optimized = true) {
    snel::Query q = lower_sql(cat, sql);
    snel::PlanPtr plan = snel::build_plan(q, cat);
    if (optimized) plan = snel::optimize(std::move(plan), cat, max_lanes).first;
    snel::ResultCursor cur(snel::compile(cat, std::move(plan), q, max_lanes));
    std::vector<std::vector<snel::Value>> rows;
    while (cur.next()) rows.push_back(cur.values());
    return rows;
}
