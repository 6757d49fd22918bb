#include "storage/table.hpp"

#include "common.hpp"

namespace snel {

std::unique_ptr<Table> Table::open_metadata(const std::string& dir, const std::string& name) {
    auto table = std::make_unique<Table>();
    table->dir_ = dir;
    table->schema_ = read_schema_json(schema_file_path(dir, name));
    if (table->schema_.table_name != name)
        throw DataError("schema file for '" + name + "' declares table '" +
                        table->schema_.table_name + "'");
    table->slots_.resize(table->schema_.columns.size());
    return table;
}

std::unique_ptr<Table> Table::open(const std::string& dir, const std::string& name) {
    auto table = open_metadata(dir, name);
    const SchemaDescriptor& schema = table->schema_;
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
        const ColumnDescriptor& col = schema.columns[i];
        ColumnSlot& slot = table->slots_[i];
        std::string col_path = column_file_path(dir, name, col.name);
        if (col.type == ColumnType::String)
            slot.text = TextColumn(col_path, schema.row_count);
        else
            slot.fixed = FixedColumn(col_path, col.type, schema.row_count);
        // Text columns carry nulls in their offset table; only fixed-width
        // columns have a companion bitmap.
        if (col.nullable && col.type != ColumnType::String)
            slot.nulls = NullBitmap(nullmap_file_path(dir, name, col.name), schema.row_count);
        if (col.indexed) {
            std::string idx_path = index_file_path(dir, name, col.name);
            uint64_t entries = col.nullable ? (col.type == ColumnType::String
                                                   ? [&] {
                                                         uint64_t n = 0;
                                                         for (uint64_t r = 0; r < schema.row_count; ++r)
                                                             if (!slot.text.is_null(r)) ++n;
                                                         return n;
                                                     }()
                                                   : slot.nulls.count_valid(schema.row_count))
                                            : schema.row_count;
            if (col.type == ColumnType::String)
                slot.index = std::make_unique<IndexFile>(idx_path, &slot.text, entries);
            else
                slot.index = std::make_unique<IndexFile>(idx_path, col.type, entries);
        }
    }
    table->has_data_ = true;
    return table;
}

bool Table::is_null(std::size_t idx, uint64_t row) const {
    const ColumnDescriptor& col = schema_.columns[idx];
    if (!col.nullable) return false;
    if (col.type == ColumnType::String) return slots_[idx].text.is_null(row);
    return !slots_[idx].nulls.valid(row);
}

Value Table::read_value(std::size_t idx, uint64_t row) const {
    if (is_null(idx, row)) return Value::null();
    if (schema_.columns[idx].type == ColumnType::String) return slots_[idx].text.value(row);
    return slots_[idx].fixed.value(row);
}

void build_column_index(const std::string& dir, const SchemaDescriptor& schema,
                        std::size_t col_idx) {
    const ColumnDescriptor& col = schema.columns[col_idx];
    std::string col_path = column_file_path(dir, schema.table_name, col.name);
    std::string idx_path = index_file_path(dir, schema.table_name, col.name);
    if (col.type == ColumnType::String) {
        TextColumn text(col_path, schema.row_count);
        build_string_index(text, idx_path);
    } else {
        FixedColumn fixed(col_path, col.type, schema.row_count);
        NullBitmap nulls;
        if (col.nullable)
            nulls = NullBitmap(nullmap_file_path(dir, schema.table_name, col.name),
                               schema.row_count);
        build_fixed_index(fixed, nulls, idx_path);
    }
}

Table* Catalog::attach(const std::string& dir, const std::string& name, bool metadata_only) {
    auto table = metadata_only ? Table::open_metadata(dir, name) : Table::open(dir, name);
    for (auto& existing : tables_) {
        if (existing->name() == name) {
            existing = std::move(table);
            return existing.get();
        }
    }
    tables_.push_back(std::move(table));
    return tables_.back().get();
}

Table* Catalog::find(const std::string& name) {
    for (auto& t : tables_)
        if (t->name() == name) return t.get();
    return nullptr;
}

const Table* Catalog::find(const std::string& name) const {
    for (const auto& t : tables_)
        if (t->name() == name) return t.get();
    return nullptr;
}

std::vector<const Table*> Catalog::tables() const {
    std::vector<const Table*> out;
    out.reserve(tables_.size());
    for (const auto& t : tables_) out.push_back(t.get());
    return out;
}

}  // namespace snel
