#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "storage/mapped_file.hpp"
#include "value.hpp"

namespace snel {

// --- writers ---------------------------------------------------------------

// Flat little-endian payload, one fixed_width(type) entry per row. Nulls are
// stored as zero payload bytes with the companion bitmap cleared; the bitmap
// file is written iff `nullable` (bit i set = row i non-null, LSB first).
void write_fixed_column(const std::vector<Value>& values, ColumnType type, bool nullable,
                        const std::string& column_path, const std::string& nullmap_path);

// Text layout: NUL-terminated strings back to back, sync bytes 'S' 'B',
// one int64 offset per row (from file start, -1 for null), and a trailing
// int64 holding the position of the first offset entry.
void write_text_column(const std::vector<Value>& values, const std::string& column_path);

// --- readers ---------------------------------------------------------------

class NullBitmap {
public:
    NullBitmap() = default;
    NullBitmap(const std::string& path, uint64_t row_count);
    // Row is non-null. Without a bitmap every row is non-null.
    bool valid(uint64_t row) const {
        if (map_.data() == nullptr) return true;
        return (map_.data()[row >> 3] >> (row & 7)) & 1;
    }
    bool present() const { return map_.data() != nullptr || loaded_; }
    uint64_t count_valid(uint64_t row_count) const;

private:
    MappedFile map_;
    bool loaded_ = false;
};

class FixedColumn {
public:
    FixedColumn() = default;
    FixedColumn(const std::string& path, ColumnType type, uint64_t row_count);

    ColumnType type() const { return type_; }
    const unsigned char* raw() const { return map_.data(); }
    uint64_t row_count() const { return row_count_; }

    // Typed access; caller checks nulls through the bitmap.
    template <typename T>
    T get(uint64_t row) const {
        T v;
        std::memcpy(&v, map_.data() + row * sizeof(T), sizeof(T));
        return v;
    }
    Value value(uint64_t row) const;

private:
    MappedFile map_;
    ColumnType type_ = ColumnType::Int32;
    uint64_t row_count_ = 0;
};

class TextColumn {
public:
    TextColumn() = default;
    TextColumn(const std::string& path, uint64_t row_count);

    uint64_t row_count() const { return row_count_; }
    bool is_null(uint64_t row) const { return offset(row) < 0; }
    // View into the mapped file; valid while the column stays open.
    std::string_view get(uint64_t row) const;
    Value value(uint64_t row) const;

private:
    int64_t offset(uint64_t row) const;
    MappedFile map_;
    uint64_t row_count_ = 0;
    uint64_t offset_table_pos_ = 0;  // == string region size + 2
};

}  // namespace snel
