#pragma once

#include <cstdint>
#include <istream>
#include <string>

#include "storage/schema.hpp"

namespace snel {

struct ImportOptions {
    char separator = '|';
    uint64_t buffer_rows = 100000;  // rows held before flushing to disk
    bool safe = false;              // reject malformed values instead of coercing
    std::string null_repr;          // token treated as null, besides the empty field
    bool verbose = false;           // progress on stderr
};

// Parses the table-schema text format: comma-separated entries of
// `<name> <type> [NULLABLE] [INDEXED]`, usually one per line. Types (aliases
// accepted case-insensitively): BOOLEAN/BOOL/BIT, INT8/CHAR, INT16/SHORT,
// INT32/INT, INT64/LONG, FLOAT, STRING/TEXT. Columns reject nulls and stay
// unindexed unless flagged. The returned descriptor carries no table name or
// row count; errors cite the offending line.
SchemaDescriptor parse_snelschema(const std::string& text);
SchemaDescriptor parse_snelschema_file(const std::string& path);

// Imports separator-delimited text rows into a new table under out_dir,
// which is created if missing. schema.table_name must be set; its row_count
// is ignored. An empty field or one equal to null_repr loads as null (an
// error for non-nullable columns). In safe mode malformed values abort with
// the row number; otherwise they are coerced to null or zero. Returns the
// schema as written, including the final row count.
SchemaDescriptor import_delimited(std::istream& rows, SchemaDescriptor schema,
                                  const ImportOptions& opts, const std::string& out_dir);

// Merges the source table into the destination table through key_column,
// which must exist with the same type on both sides and hold unique non-null
// values in the source. Shared columns are overwritten on key matches;
// columns only the source has are created NULLABLE (null on unmatched rows);
// source rows whose key is absent from the destination are ignored. Indexes
// on touched columns are rebuilt. Arguments are paths to .snel schema files.
void merge_tables(const std::string& source_schema_path, const std::string& dest_schema_path,
                  const std::string& key_column);

}  // namespace snel
