#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "storage/column.hpp"
#include "storage/mapped_file.hpp"
#include "value.hpp"

namespace snel {

enum class CmpOp : uint8_t { Lt, Le, Gt, Ge, Eq, Ne };

const char* cmp_op_text(CmpOp op);

// Build <table>-<col>.snelidx from an already-written column. Fixed-width
// entries are (value, rowid) pairs sorted ascending by value then rowid;
// string indexes hold rowids only, sorted by the referenced string.
// Null rows are excluded.
void build_fixed_index(const FixedColumn& column, const NullBitmap& nulls,
                       const std::string& index_path);
void build_string_index(const TextColumn& column, const std::string& index_path);

// Open index over one column. Equality and range probes are binary searches;
// string lookups dereference the column file (the index is not covering).
class IndexFile {
public:
    IndexFile() = default;
    // Fixed-width column index.
    IndexFile(const std::string& path, ColumnType type, uint64_t expected_entries);
    // String column index; keeps a pointer to the column for value resolution.
    IndexFile(const std::string& path, const TextColumn* column, uint64_t expected_entries);

    ColumnType type() const { return type_; }
    uint64_t entry_count() const { return entry_count_; }
    uint64_t rowid_at(uint64_t pos) const;
    Value value_at(uint64_t pos) const;

    struct Range {
        uint64_t begin = 0;
        uint64_t end = 0;
        uint64_t size() const { return end - begin; }
    };
    // Entry positions whose value satisfies (value op key). Eq/ranges only;
    // Ne is not a contiguous range and is rejected.
    Range range_for(CmpOp op, const Value& key) const;

    // Rowids for a range lookup, in index order.
    std::vector<uint64_t> lookup(CmpOp op, const Value& key) const;

private:
    uint64_t lower_bound(const Value& key) const;
    uint64_t upper_bound(const Value& key) const;
    uint64_t nan_begin() const;

    MappedFile map_;
    ColumnType type_ = ColumnType::Int32;
    const TextColumn* string_column_ = nullptr;
    uint64_t entry_count_ = 0;
    std::size_t entry_size_ = 0;
};

}  // namespace snel
