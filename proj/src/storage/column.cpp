#include "storage/column.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "common.hpp"

namespace snel {

namespace {

template <typename T>
void append_raw(std::string& buf, T v) {
    unsigned char tmp[sizeof(T)];
    store_le(tmp, v);
    buf.append(reinterpret_cast<const char*>(tmp), sizeof(T));
}

// Narrow a Value to the column's storage type, range-checked.
template <typename T>
T narrow_int(const Value& v) {
    if (!v.is_integer() && v.kind() != Value::Kind::Bool)
        throw DataError("expected an integer value, got " + v.to_text());
    int64_t wide = v.widened_int();
    if (wide < std::numeric_limits<T>::min() || wide > std::numeric_limits<T>::max())
        throw DataError("value " + std::to_string(wide) + " out of range for column type");
    return static_cast<T>(wide);
}

void encode_fixed(std::string& buf, const Value& v, ColumnType type) {
    switch (type) {
        case ColumnType::Bool: {
            uint8_t b;
            if (v.kind() == Value::Kind::Bool) {
                b = v.as_bool() ? 1 : 0;
            } else {
                int64_t wide = narrow_int<int64_t>(v);
                if (wide != 0 && wide != 1)
                    throw DataError("BOOL column accepts only 0 or 1, got " + v.to_text());
                b = static_cast<uint8_t>(wide);
            }
            buf.push_back(static_cast<char>(b));
            break;
        }
        case ColumnType::Int8: append_raw(buf, narrow_int<int8_t>(v)); break;
        case ColumnType::Int16: append_raw(buf, narrow_int<int16_t>(v)); break;
        case ColumnType::Int32: append_raw(buf, narrow_int<int32_t>(v)); break;
        case ColumnType::Int64: append_raw(buf, narrow_int<int64_t>(v)); break;
        case ColumnType::Float32: {
            float f;
            if (v.is_float()) f = v.as_float32();
            else if (v.is_numeric()) f = static_cast<float>(v.widened_int());
            else throw DataError("expected a numeric value, got " + v.to_text());
            append_raw(buf, f);
            break;
        }
        case ColumnType::String:
            throw InternalError("encode_fixed on STRING column");
    }
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write file '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw IoError("write failed for '" + path + "'");
}

}  // namespace

void write_fixed_column(const std::vector<Value>& values, ColumnType type, bool nullable,
                        const std::string& column_path, const std::string& nullmap_path) {
    std::size_t width = fixed_width(type);
    std::string payload;
    payload.reserve(values.size() * width);
    std::string bitmap((values.size() + 7) / 8, '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        const Value& v = values[i];
        if (v.is_null()) {
            if (!nullable)
                throw DataError("null value in non-nullable column at row " + std::to_string(i));
            payload.append(width, '\0');
        } else {
            encode_fixed(payload, v, type);
            bitmap[i >> 3] = static_cast<char>(bitmap[i >> 3] | (1 << (i & 7)));
        }
    }
    write_file(column_path, payload);
    if (nullable)
        write_file(nullmap_path, bitmap);
}

void write_text_column(const std::vector<Value>& values, const std::string& column_path) {
    std::string strings;
    std::vector<int64_t> offsets;
    offsets.reserve(values.size());
    for (const Value& v : values) {
        if (v.is_null()) {
            offsets.push_back(-1);
            continue;
        }
        if (!v.is_string())
            throw DataError("expected a string value, got " + v.to_text());
        const std::string& s = v.as_string();
        if (s.find('\0') != std::string::npos)
            throw DataError("string value contains an embedded NUL byte");
        offsets.push_back(static_cast<int64_t>(strings.size()));
        strings += s;
        strings += '\0';
    }
    std::string bytes = std::move(strings);
    int64_t offset_table_pos = static_cast<int64_t>(bytes.size()) + 2;
    bytes += 'S';
    bytes += 'B';
    for (int64_t off : offsets) append_raw(bytes, off);
    append_raw(bytes, offset_table_pos);
    write_file(column_path, bytes);
}

NullBitmap::NullBitmap(const std::string& path, uint64_t row_count)
    : map_(path), loaded_(true) {
    uint64_t expected = (row_count + 7) / 8;
    if (map_.size() != expected)
        throw DataError("null bitmap '" + path + "' has " + std::to_string(map_.size()) +
                        " bytes, expected " + std::to_string(expected));
}

uint64_t NullBitmap::count_valid(uint64_t row_count) const {
    if (map_.data() == nullptr) return row_count;
    uint64_t n = 0;
    for (uint64_t row = 0; row < row_count; ++row)
        if (valid(row)) ++n;
    return n;
}

FixedColumn::FixedColumn(const std::string& path, ColumnType type, uint64_t row_count)
    : map_(path), type_(type), row_count_(row_count) {
    uint64_t expected = row_count * fixed_width(type);
    if (map_.size() != expected)
        throw DataError("column file '" + path + "' has " + std::to_string(map_.size()) +
                        " bytes, expected " + std::to_string(expected));
}

Value FixedColumn::value(uint64_t row) const {
    switch (type_) {
        case ColumnType::Bool: return Value::boolean(get<uint8_t>(row) != 0);
        case ColumnType::Int8: return Value::int8(get<int8_t>(row));
        case ColumnType::Int16: return Value::int16(get<int16_t>(row));
        case ColumnType::Int32: return Value::int32(get<int32_t>(row));
        case ColumnType::Int64: return Value::int64(get<int64_t>(row));
        case ColumnType::Float32: return Value::float32(get<float>(row));
        case ColumnType::String: break;
    }
    throw InternalError("FixedColumn::value on STRING column");
}

TextColumn::TextColumn(const std::string& path, uint64_t row_count)
    : map_(path), row_count_(row_count) {
    uint64_t expected_tail = row_count * 8 + 8;  // offsets + trailer
    if (map_.size() < expected_tail + 2)
        throw DataError("text column '" + path + "' too short for " +
                        std::to_string(row_count) + " rows");
    int64_t trailer = load_le<int64_t>(map_.data() + map_.size() - 8);
    if (trailer < 2 || static_cast<uint64_t>(trailer) + expected_tail != map_.size())
        throw DataError("text column '" + path + "' has an inconsistent offset-table trailer");
    offset_table_pos_ = static_cast<uint64_t>(trailer);
    if (map_.data()[offset_table_pos_ - 2] != 'S' || map_.data()[offset_table_pos_ - 1] != 'B')
        throw DataError("text column '" + path + "' is missing the 'SB' sync marker");
}

int64_t TextColumn::offset(uint64_t row) const {
    return load_le<int64_t>(map_.data() + offset_table_pos_ + row * 8);
}

std::string_view TextColumn::get(uint64_t row) const {
    int64_t off = offset(row);
    if (off < 0)
        throw InternalError("TextColumn::get on null row");
    uint64_t start = static_cast<uint64_t>(off);
    uint64_t region_end = offset_table_pos_ - 2;
    if (start >= region_end)
        throw DataError("text column '" + map_.path() + "' has an offset past the string region");
    const unsigned char* base = map_.data() + start;
    const void* nul = std::memchr(base, 0, region_end - start);
    if (nul == nullptr)
        throw DataError("text column '" + map_.path() + "' has an unterminated string");
    return std::string_view(reinterpret_cast<const char*>(base),
                            static_cast<std::size_t>(static_cast<const unsigned char*>(nul) - base));
}

Value TextColumn::value(uint64_t row) const {
    if (is_null(row)) return Value::null();
    return Value::string(std::string(get(row)));
}

}  // namespace snel
