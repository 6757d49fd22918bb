#pragma once

#include <memory>
#include <string>
#include <vector>

#include "storage/column.hpp"
#include "storage/index.hpp"
#include "storage/schema.hpp"

namespace snel {

// One on-disk table: the schema descriptor plus, unless opened metadata-only,
// memory-mapped column data, null bitmaps and secondary indexes.
class Table {
public:
    // Opens the schema and maps every column, bitmap and index, validating
    // file sizes against the schema's row count.
    static std::unique_ptr<Table> open(const std::string& dir, const std::string& name);
    // Opens the schema alone; queries can be planned and explained against the
    // table but not executed.
    static std::unique_ptr<Table> open_metadata(const std::string& dir, const std::string& name);

    const SchemaDescriptor& schema() const { return schema_; }
    const std::string& name() const { return schema_.table_name; }
    const std::string& directory() const { return dir_; }
    uint64_t row_count() const { return schema_.row_count; }
    bool has_data() const { return has_data_; }
    std::size_t column_count() const { return schema_.columns.size(); }
    const ColumnDescriptor& column(std::size_t idx) const { return schema_.columns[idx]; }
    int column_index(const std::string& name) const { return schema_.column_index(name); }

    const FixedColumn& fixed(std::size_t idx) const { return slots_[idx].fixed; }
    const TextColumn& text(std::size_t idx) const { return slots_[idx].text; }
    const NullBitmap& nulls(std::size_t idx) const { return slots_[idx].nulls; }
    // Null when the column is unindexed or the table is metadata-only.
    const IndexFile* index(std::size_t idx) const { return slots_[idx].index.get(); }

    bool is_null(std::size_t idx, uint64_t row) const;
    Value read_value(std::size_t idx, uint64_t row) const;

private:
    struct ColumnSlot {
        FixedColumn fixed;
        TextColumn text;
        NullBitmap nulls;
        std::unique_ptr<IndexFile> index;
    };

    std::string dir_;
    SchemaDescriptor schema_;
    bool has_data_ = false;
    std::vector<ColumnSlot> slots_;
};

// Builds (or rebuilds) the secondary index file for one column from the
// column data already on disk.
void build_column_index(const std::string& dir, const SchemaDescriptor& schema,
                        std::size_t col_idx);

// The set of tables a session can query, keyed by table name. Attaching a
// name twice replaces the earlier table.
class Catalog {
public:
    Table* attach(const std::string& dir, const std::string& name, bool metadata_only = false);
    Table* find(const std::string& name);
    const Table* find(const std::string& name) const;
    std::vector<const Table*> tables() const;

private:
    std::vector<std::unique_ptr<Table>> tables_;
};

}  // namespace snel
