#include "ingest/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "common.hpp"
#include "storage/column.hpp"
#include "storage/table.hpp"
#include "value.hpp"

namespace snel {

namespace {

// ------------------------------------------------------------- schema text ---

std::string upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::optional<ColumnType> type_for_alias(const std::string& token) {
    static const std::unordered_map<std::string, ColumnType> aliases = {
        {"BOOLEAN", ColumnType::Bool},  {"BOOL", ColumnType::Bool},
        {"BIT", ColumnType::Bool},      {"INT8", ColumnType::Int8},
        {"CHAR", ColumnType::Int8},     {"INT16", ColumnType::Int16},
        {"SHORT", ColumnType::Int16},   {"INT32", ColumnType::Int32},
        {"INT", ColumnType::Int32},     {"INT64", ColumnType::Int64},
        {"LONG", ColumnType::Int64},    {"FLOAT", ColumnType::Float32},
        {"STRING", ColumnType::String}, {"TEXT", ColumnType::String},
    };
    auto it = aliases.find(upper(token));
    if (it == aliases.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> whitespace_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) out.emplace_back(s.substr(start, i - start));
    }
    return out;
}

[[noreturn]] void schema_error(int line, const std::string& what) {
    throw DataError("schema line " + std::to_string(line) + ": " + what);
}

// --------------------------------------------------------------- field text ---

template <typename T>
std::optional<Value> parse_int_field(std::string_view f, Value (*make)(T)) {
    int64_t wide = 0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), wide);
    if (ec != std::errc() || ptr != f.data() + f.size()) return std::nullopt;
    if (wide < std::numeric_limits<T>::min() || wide > std::numeric_limits<T>::max())
        return std::nullopt;
    return make(static_cast<T>(wide));
}

// nullopt = malformed for the type.
std::optional<Value> parse_field(std::string_view f, ColumnType type) {
    switch (type) {
        case ColumnType::Bool:
            if (f == "0") return Value::boolean(false);
            if (f == "1") return Value::boolean(true);
            return std::nullopt;
        case ColumnType::Int8: return parse_int_field<int8_t>(f, &Value::int8);
        case ColumnType::Int16: return parse_int_field<int16_t>(f, &Value::int16);
        case ColumnType::Int32: return parse_int_field<int32_t>(f, &Value::int32);
        case ColumnType::Int64: return parse_int_field<int64_t>(f, &Value::int64);
        case ColumnType::Float32: {
            float v = 0.0f;
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size()) return std::nullopt;
            return Value::float32(v);
        }
        case ColumnType::String: return Value::string(std::string(f));
    }
    return std::nullopt;
}

Value zero_value(ColumnType type) {
    switch (type) {
        case ColumnType::Bool: return Value::boolean(false);
        case ColumnType::Int8: return Value::int8(0);
        case ColumnType::Int16: return Value::int16(0);
        case ColumnType::Int32: return Value::int32(0);
        case ColumnType::Int64: return Value::int64(0);
        case ColumnType::Float32: return Value::float32(0.0f);
        case ColumnType::String: return Value::string(std::string());
    }
    return Value::null();
}

// ---------------------------------------------------------- column writers ---

std::ofstream open_trunc(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file '" + path + "'");
    return out;
}

void write_buffer(std::ofstream& out, std::string& buf, const std::string& path) {
    if (buf.empty()) return;
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
    buf.clear();
}

// Streams one column's payload (and null bitmap when nullable) in the flat
// little-endian layout, flushing at the importer's buffer boundary.
class FixedWriter {
public:
    FixedWriter(const std::string& column_path, const std::string& nullmap_path, ColumnType type,
                bool nullable)
        : column_path_(column_path),
          nullmap_path_(nullmap_path),
          type_(type),
          width_(fixed_width(type)),
          nullable_(nullable),
          data_(open_trunc(column_path)) {
        if (nullable_) bits_ = open_trunc(nullmap_path);
    }

    void append(const Value& v) {
        if (v.is_null()) {
            buf_.append(width_, '\0');
        } else {
            unsigned char raw[8];
            switch (type_) {
                case ColumnType::Bool: raw[0] = v.as_bool() ? 1 : 0; break;
                case ColumnType::Int8: store_le(raw, static_cast<int8_t>(v.widened_int())); break;
                case ColumnType::Int16:
                    store_le(raw, static_cast<int16_t>(v.widened_int()));
                    break;
                case ColumnType::Int32:
                    store_le(raw, static_cast<int32_t>(v.widened_int()));
                    break;
                case ColumnType::Int64: store_le(raw, v.widened_int()); break;
                case ColumnType::Float32: store_le(raw, v.as_float32()); break;
                case ColumnType::String: throw InternalError("fixed writer on STRING column");
            }
            buf_.append(reinterpret_cast<const char*>(raw), width_);
            cur_ |= static_cast<uint8_t>(1u << bit_);
        }
        if (nullable_ && ++bit_ == 8) {
            bitbuf_.push_back(static_cast<char>(cur_));
            cur_ = 0;
            bit_ = 0;
        }
    }

    void flush() {
        write_buffer(data_, buf_, column_path_);
        if (nullable_) write_buffer(bits_, bitbuf_, nullmap_path_);
    }

    void finish() {
        if (bit_ != 0) bitbuf_.push_back(static_cast<char>(cur_));
        flush();
        data_.close();
        if (nullable_) bits_.close();
    }

private:
    std::string column_path_, nullmap_path_;
    ColumnType type_;
    std::size_t width_;
    bool nullable_;
    std::ofstream data_, bits_;
    std::string buf_, bitbuf_;
    uint8_t cur_ = 0;
    int bit_ = 0;
};

// Streams the string region of a text column; the sync marker, offset table
// and trailer are appended on finish. Offsets are kept in memory, as the
// layout places them after all string bytes.
class TextWriter {
public:
    explicit TextWriter(const std::string& column_path)
        : column_path_(column_path), out_(open_trunc(column_path)) {}

    void append(const Value& v) {
        if (v.is_null()) {
            offsets_.push_back(-1);
            return;
        }
        const std::string& s = v.as_string();
        if (s.find('\0') != std::string::npos)
            throw DataError("string value contains an embedded NUL byte");
        offsets_.push_back(static_cast<int64_t>(pos_));
        buf_ += s;
        buf_ += '\0';
        pos_ += s.size() + 1;
    }

    void flush() { write_buffer(out_, buf_, column_path_); }

    void finish() {
        buf_ += 'S';
        buf_ += 'B';
        unsigned char raw[8];
        for (int64_t off : offsets_) {
            store_le(raw, off);
            buf_.append(reinterpret_cast<const char*>(raw), 8);
        }
        store_le(raw, static_cast<int64_t>(pos_) + 2);
        buf_.append(reinterpret_cast<const char*>(raw), 8);
        flush();
        out_.close();
    }

private:
    std::string column_path_;
    std::ofstream out_;
    std::vector<int64_t> offsets_;
    uint64_t pos_ = 0;
    std::string buf_;
};

struct ColumnWriter {
    std::optional<FixedWriter> fixed;
    std::optional<TextWriter> text;

    void append(const Value& v) { fixed ? fixed->append(v) : text->append(v); }
    void flush() { fixed ? fixed->flush() : text->flush(); }
    void finish() { fixed ? fixed->finish() : text->finish(); }
};

[[noreturn]] void row_error(uint64_t row, const std::string& what) {
    throw DataError("row " + std::to_string(row) + ": " + what);
}

}  // namespace

SchemaDescriptor parse_snelschema(const std::string& text) {
    SchemaDescriptor schema;
    int line = 1;
    std::size_t start = 0;
    // Entries are comma-separated; line numbers count newlines seen before
    // the entry's first token.
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        std::string_view entry(text.data() + start,
                               (comma == std::string::npos ? text.size() : comma) - start);
        // The entry is reported at the line of its first non-blank character.
        int entry_line = line;
        {
            int l = line;
            for (char c : entry) {
                if (c == '\n') {
                    ++l;
                } else if (!std::isspace(static_cast<unsigned char>(c))) {
                    entry_line = l;
                    break;
                }
            }
        }
        std::vector<std::string> tokens = whitespace_tokens(entry);
        if (!tokens.empty()) {
            if (tokens.size() < 2) schema_error(entry_line, "expected '<name> <type> [flags]'");
            ColumnDescriptor col;
            col.name = tokens[0];
            if (!valid_identifier(col.name))
                schema_error(entry_line, "invalid column name '" + col.name + "'");
            std::optional<ColumnType> type = type_for_alias(tokens[1]);
            if (!type) schema_error(entry_line, "unknown type '" + tokens[1] + "'");
            col.type = *type;
            for (std::size_t i = 2; i < tokens.size(); ++i) {
                std::string flag = upper(tokens[i]);
                if (flag == "NULLABLE" && !col.nullable)
                    col.nullable = true;
                else if (flag == "INDEXED" && !col.indexed)
                    col.indexed = true;
                else
                    schema_error(entry_line, "unexpected token '" + tokens[i] + "'");
            }
            for (const ColumnDescriptor& prev : schema.columns)
                if (prev.name == col.name)
                    schema_error(entry_line, "duplicate column '" + col.name + "'");
            schema.columns.push_back(std::move(col));
        }
        for (char c : entry)
            if (c == '\n') ++line;
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (schema.columns.empty()) throw DataError("schema defines no columns");
    return schema;
}

SchemaDescriptor parse_snelschema_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read schema file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_snelschema(text);
}

SchemaDescriptor import_delimited(std::istream& rows, SchemaDescriptor schema,
                                  const ImportOptions& opts, const std::string& out_dir) {
    if (schema.table_name.empty()) throw DataError("import needs a table name");
    if (!valid_identifier(schema.table_name))
        throw DataError("invalid table name '" + schema.table_name + "'");
    if (schema.columns.empty()) throw DataError("schema defines no columns");
    if (opts.buffer_rows == 0) throw DataError("buffer size must be positive");
    if (opts.separator == '\n') throw DataError("separator must not be a newline");
    std::filesystem::create_directories(out_dir);

    const std::string& table = schema.table_name;
    std::vector<ColumnWriter> writers(schema.columns.size());
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
        const ColumnDescriptor& col = schema.columns[i];
        if (col.type == ColumnType::String)
            writers[i].text.emplace(column_file_path(out_dir, table, col.name));
        else
            writers[i].fixed.emplace(column_file_path(out_dir, table, col.name),
                                     nullmap_file_path(out_dir, table, col.name), col.type,
                                     col.nullable);
    }

    uint64_t row = 0;
    uint64_t pending = 0;
    std::string line;
    std::vector<std::string_view> fields;
    while (std::getline(rows, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        fields.clear();
        std::size_t start = 0;
        while (true) {
            std::size_t sep = line.find(opts.separator, start);
            if (sep == std::string::npos) {
                fields.emplace_back(line.data() + start, line.size() - start);
                break;
            }
            fields.emplace_back(line.data() + start, sep - start);
            start = sep + 1;
        }
        if (fields.size() != schema.columns.size())
            row_error(row, "expected " + std::to_string(schema.columns.size()) +
                               " fields, got " + std::to_string(fields.size()));
        for (std::size_t i = 0; i < schema.columns.size(); ++i) {
            const ColumnDescriptor& col = schema.columns[i];
            std::string_view f = fields[i];
            if (f.empty() || f == opts.null_repr) {
                if (!col.nullable)
                    row_error(row, "null value in non-nullable column '" + col.name + "'");
                writers[i].append(Value::null());
                continue;
            }
            std::optional<Value> v = parse_field(f, col.type);
            if (!v) {
                if (opts.safe)
                    row_error(row, "cannot parse '" + std::string(f) + "' for column '" +
                                       col.name + "'");
                v = col.nullable ? Value::null() : zero_value(col.type);
            }
            writers[i].append(*v);
        }
        if (++pending == opts.buffer_rows) {
            for (ColumnWriter& w : writers) w.flush();
            pending = 0;
            if (opts.verbose) std::fprintf(stderr, "%llu rows\n", (unsigned long long)row);
        }
    }
    for (ColumnWriter& w : writers) w.finish();

    schema.row_count = row;
    write_schema_json(schema, schema_file_path(out_dir, table));
    for (std::size_t i = 0; i < schema.columns.size(); ++i)
        if (schema.columns[i].indexed) build_column_index(out_dir, schema, i);
    if (opts.verbose)
        std::fprintf(stderr, "imported %llu rows into %s\n", (unsigned long long)row,
                     table.c_str());
    return schema;
}

namespace {

std::string table_dir_of(const std::string& schema_path) {
    std::string dir = std::filesystem::path(schema_path).parent_path().string();
    return dir.empty() ? std::string(".") : dir;
}

}  // namespace

void merge_tables(const std::string& source_schema_path, const std::string& dest_schema_path,
                  const std::string& key_column) {
    std::string src_dir = table_dir_of(source_schema_path);
    std::string dst_dir = table_dir_of(dest_schema_path);
    SchemaDescriptor src_meta = read_schema_json(source_schema_path);
    SchemaDescriptor dst_meta = read_schema_json(dest_schema_path);
    std::unique_ptr<Table> src = Table::open(src_dir, src_meta.table_name);
    std::unique_ptr<Table> dst = Table::open(dst_dir, dst_meta.table_name);

    int src_key = src->column_index(key_column);
    int dst_key = dst->column_index(key_column);
    if (src_key < 0 || dst_key < 0)
        throw DataError("key column '" + key_column + "' must exist in both tables");
    if (src->column(static_cast<std::size_t>(src_key)).type !=
        dst->column(static_cast<std::size_t>(dst_key)).type)
        throw DataError("key column '" + key_column + "' has conflicting types");

    // Unique non-null source keys; null keys can never match and are ignored.
    std::unordered_map<Value, uint64_t, GroupValueHash, GroupValueEq> by_key;
    for (uint64_t r = 0; r < src->row_count(); ++r) {
        Value k = src->read_value(static_cast<std::size_t>(src_key), r);
        if (k.is_null()) continue;
        if (!by_key.emplace(std::move(k), r).second)
            throw DataError("duplicate key " +
                            src->read_value(static_cast<std::size_t>(src_key), r).to_sql() +
                            " in source table");
    }
    std::vector<int64_t> match(dst->row_count(), -1);
    bool any_match = false;
    for (uint64_t r = 0; r < dst->row_count(); ++r) {
        Value k = dst->read_value(static_cast<std::size_t>(dst_key), r);
        if (k.is_null()) continue;
        auto it = by_key.find(k);
        if (it == by_key.end()) continue;
        match[r] = static_cast<int64_t>(it->second);
        any_match = true;
    }

    // Materialize every rewritten column before touching any file, so the
    // mapped inputs are never read after their files change.
    struct Rewrite {
        ColumnDescriptor col;   // final descriptor
        int dst_index;          // -1 = new column, appended to the schema
        std::vector<Value> values;
    };
    std::vector<Rewrite> rewrites;
    for (std::size_t c = 0; c < src->column_count(); ++c) {
        if (static_cast<int>(c) == src_key) continue;
        const ColumnDescriptor& scol = src->column(c);
        int d = dst->column_index(scol.name);
        if (d >= 0) {
            const ColumnDescriptor& dcol = dst->column(static_cast<std::size_t>(d));
            if (dcol.type != scol.type)
                throw DataError("column '" + scol.name + "' has conflicting types");
            if (!any_match) continue;  // nothing to overwrite
            Rewrite rw;
            rw.col = dcol;
            rw.dst_index = d;
            rw.values.reserve(dst->row_count());
            bool any_null = false;
            for (uint64_t r = 0; r < dst->row_count(); ++r) {
                Value v = match[r] >= 0
                              ? src->read_value(c, static_cast<uint64_t>(match[r]))
                              : dst->read_value(static_cast<std::size_t>(d), r);
                any_null = any_null || v.is_null();
                rw.values.push_back(std::move(v));
            }
            // A null from a nullable source column widens the destination.
            rw.col.nullable = dcol.nullable || any_null;
            rewrites.push_back(std::move(rw));
        } else {
            Rewrite rw;
            rw.col = ColumnDescriptor{scol.name, scol.type, true, scol.indexed};
            rw.dst_index = -1;
            rw.values.reserve(dst->row_count());
            for (uint64_t r = 0; r < dst->row_count(); ++r)
                rw.values.push_back(match[r] >= 0
                                        ? src->read_value(c, static_cast<uint64_t>(match[r]))
                                        : Value::null());
            rewrites.push_back(std::move(rw));
        }
    }

    SchemaDescriptor updated = dst->schema();
    const std::string& table = updated.table_name;
    src.reset();
    dst.reset();

    std::vector<std::size_t> touched;
    for (Rewrite& rw : rewrites) {
        if (rw.col.type == ColumnType::String)
            write_text_column(rw.values, column_file_path(dst_dir, table, rw.col.name));
        else
            write_fixed_column(rw.values, rw.col.type, rw.col.nullable,
                               column_file_path(dst_dir, table, rw.col.name),
                               nullmap_file_path(dst_dir, table, rw.col.name));
        if (rw.dst_index >= 0) {
            updated.columns[static_cast<std::size_t>(rw.dst_index)] = rw.col;
            touched.push_back(static_cast<std::size_t>(rw.dst_index));
        } else {
            updated.columns.push_back(rw.col);
            touched.push_back(updated.columns.size() - 1);
        }
    }
    write_schema_json(updated, dest_schema_path);
    for (std::size_t idx : touched)
        if (updated.columns[idx].indexed) build_column_index(dst_dir, updated, idx);
}

}  // namespace snel
