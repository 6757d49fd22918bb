#include "storage/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "common.hpp"

namespace snel {

const char* cmp_op_text(CmpOp op) {
    switch (op) {
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
        case CmpOp::Eq: return "=";
        case CmpOp::Ne: return "!=";
    }
    return "?";
}

namespace {

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write file '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("write failed for '" + path + "'");
}

void append_value_bytes(std::string& buf, const Value& v, ColumnType type) {
    unsigned char tmp[8];
    switch (type) {
        case ColumnType::Bool: tmp[0] = v.as_bool() ? 1 : 0; break;
        case ColumnType::Int8: store_le(tmp, v.as_int8()); break;
        case ColumnType::Int16: store_le(tmp, v.as_int16()); break;
        case ColumnType::Int32: store_le(tmp, v.as_int32()); break;
        case ColumnType::Int64: store_le(tmp, v.as_int64()); break;
        case ColumnType::Float32: store_le(tmp, v.as_float32()); break;
        case ColumnType::String: throw InternalError("fixed index entry for STRING column");
    }
    buf.append(reinterpret_cast<const char*>(tmp), fixed_width(type));
}

}  // namespace

void build_fixed_index(const FixedColumn& column, const NullBitmap& nulls,
                       const std::string& index_path) {
    std::vector<std::pair<Value, uint64_t>> entries;
    entries.reserve(column.row_count());
    for (uint64_t row = 0; row < column.row_count(); ++row) {
        if (!nulls.valid(row)) continue;
        entries.emplace_back(column.value(row), row);
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        auto c = total_compare(a.first, b.first);
        if (c != std::strong_ordering::equal) return c == std::strong_ordering::less;
        return a.second < b.second;
    });
    std::string bytes;
    bytes.reserve(entries.size() * (fixed_width(column.type()) + 8));
    for (const auto& [value, rowid] : entries) {
        append_value_bytes(bytes, value, column.type());
        unsigned char tmp[8];
        store_le(tmp, rowid);
        bytes.append(reinterpret_cast<const char*>(tmp), 8);
    }
    write_file(index_path, bytes);
}

void build_string_index(const TextColumn& column, const std::string& index_path) {
    std::vector<uint64_t> rowids;
    rowids.reserve(column.row_count());
    for (uint64_t row = 0; row < column.row_count(); ++row)
        if (!column.is_null(row)) rowids.push_back(row);
    std::stable_sort(rowids.begin(), rowids.end(), [&](uint64_t a, uint64_t b) {
        return column.get(a) < column.get(b);
    });
    std::string bytes;
    bytes.reserve(rowids.size() * 8);
    for (uint64_t rowid : rowids) {
        unsigned char tmp[8];
        store_le(tmp, rowid);
        bytes.append(reinterpret_cast<const char*>(tmp), 8);
    }
    write_file(index_path, bytes);
}

IndexFile::IndexFile(const std::string& path, ColumnType type, uint64_t expected_entries)
    : map_(path), type_(type) {
    entry_size_ = fixed_width(type) + 8;
    if (map_.size() % entry_size_ != 0)
        throw DataError("index file '" + path + "' size is not a multiple of the entry size");
    entry_count_ = map_.size() / entry_size_;
    if (entry_count_ != expected_entries)
        throw DataError("index file '" + path + "' has " + std::to_string(entry_count_) +
                        " entries, expected " + std::to_string(expected_entries));
}

IndexFile::IndexFile(const std::string& path, const TextColumn* column,
                     uint64_t expected_entries)
    : map_(path), type_(ColumnType::String), string_column_(column), entry_size_(8) {
    if (map_.size() % 8 != 0)
        throw DataError("index file '" + path + "' size is not a multiple of 8");
    entry_count_ = map_.size() / 8;
    if (entry_count_ != expected_entries)
        throw DataError("index file '" + path + "' has " + std::to_string(entry_count_) +
                        " entries, expected " + std::to_string(expected_entries));
}

uint64_t IndexFile::rowid_at(uint64_t pos) const {
    std::size_t rowid_offset = (type_ == ColumnType::String) ? 0 : fixed_width(type_);
    return load_le<uint64_t>(map_.data() + pos * entry_size_ + rowid_offset);
}

Value IndexFile::value_at(uint64_t pos) const {
    const unsigned char* p = map_.data() + pos * entry_size_;
    switch (type_) {
        case ColumnType::Bool: return Value::boolean(*p != 0);
        case ColumnType::Int8: return Value::int8(load_le<int8_t>(p));
        case ColumnType::Int16: return Value::int16(load_le<int16_t>(p));
        case ColumnType::Int32: return Value::int32(load_le<int32_t>(p));
        case ColumnType::Int64: return Value::int64(load_le<int64_t>(p));
        case ColumnType::Float32: return Value::float32(load_le<float>(p));
        case ColumnType::String: return string_column_->value(rowid_at(pos));
    }
    throw InternalError("bad index type");
}

namespace {

// Entry-vs-key order consistent with the on-disk total order. The key is
// guaranteed non-null and non-NaN here.
std::strong_ordering entry_order(const Value& entry, const Value& key) {
    if (entry.is_float() && std::isnan(entry.as_float32()))
        return std::strong_ordering::greater;
    auto c = sql_compare(entry, key);
    if (!c)
        throw InternalError("unordered index comparison");
    return *c;
}

}  // namespace

uint64_t IndexFile::lower_bound(const Value& key) const {
    uint64_t lo = 0, hi = entry_count_;
    while (lo < hi) {
        uint64_t mid = lo + (hi - lo) / 2;
        if (entry_order(value_at(mid), key) == std::strong_ordering::less)
            lo = mid + 1;
        else
            hi = mid;
    }
    return lo;
}

uint64_t IndexFile::upper_bound(const Value& key) const {
    uint64_t lo = 0, hi = entry_count_;
    while (lo < hi) {
        uint64_t mid = lo + (hi - lo) / 2;
        if (entry_order(value_at(mid), key) == std::strong_ordering::greater)
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

// First NaN entry; NaN sorts after every number, so this is a suffix.
uint64_t IndexFile::nan_begin() const {
    if (type_ != ColumnType::Float32) return entry_count_;
    uint64_t lo = 0, hi = entry_count_;
    while (lo < hi) {
        uint64_t mid = lo + (hi - lo) / 2;
        Value v = value_at(mid);
        if (std::isnan(v.as_float32()))
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

IndexFile::Range IndexFile::range_for(CmpOp op, const Value& key) const {
    if (key.is_null())
        return {0, 0};
    if (type_ == ColumnType::String) {
        if (!key.is_string())
            throw DataError("index lookup with a non-string key on a STRING column");
    } else {
        if (!key.is_numeric())
            throw DataError("index lookup with a non-numeric key on a numeric column");
    }
    if (key.is_float() && std::isnan(key.as_float32()))
        return {0, 0};  // nothing compares against NaN
    switch (op) {
        case CmpOp::Eq: return {lower_bound(key), upper_bound(key)};
        case CmpOp::Lt: return {0, lower_bound(key)};
        case CmpOp::Le: return {0, upper_bound(key)};
        case CmpOp::Gt: return {upper_bound(key), nan_begin()};
        case CmpOp::Ge: return {lower_bound(key), nan_begin()};
        case CmpOp::Ne: break;
    }
    throw InternalError("index range lookup does not support !=");
}

std::vector<uint64_t> IndexFile::lookup(CmpOp op, const Value& key) const {
    Range r = range_for(op, key);
    std::vector<uint64_t> out;
    out.reserve(r.size());
    for (uint64_t pos = r.begin; pos < r.end; ++pos)
        out.push_back(rowid_at(pos));
    return out;
}

}  // namespace snel
