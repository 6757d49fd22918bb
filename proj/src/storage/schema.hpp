#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "value.hpp"

namespace snel {

struct ColumnDescriptor {
    std::string name;
    ColumnType type = ColumnType::Int32;
    bool nullable = false;
    bool indexed = false;

    bool operator==(const ColumnDescriptor&) const = default;
};

struct SchemaDescriptor {
    std::string table_name;
    uint64_t row_count = 0;
    std::vector<ColumnDescriptor> columns;

    const ColumnDescriptor* find_column(const std::string& name) const;
    int column_index(const std::string& name) const;  // -1 if absent
};

bool valid_identifier(const std::string& name);

// <table>.snel JSON: {"table": ..., "rows": ..., "columns": [{...}]}
SchemaDescriptor read_schema_json(const std::string& path);
void write_schema_json(const SchemaDescriptor& schema, const std::string& path);

// File naming convention relative to the directory holding the .snel file.
std::string column_file_path(const std::string& dir, const std::string& table,
                             const std::string& column);
std::string index_file_path(const std::string& dir, const std::string& table,
                            const std::string& column);
std::string nullmap_file_path(const std::string& dir, const std::string& table,
                              const std::string& column);
std::string schema_file_path(const std::string& dir, const std::string& table);

}  // namespace snel
