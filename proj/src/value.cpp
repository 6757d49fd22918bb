#include "value.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>

namespace snel {

std::size_t fixed_width(ColumnType type) {
    switch (type) {
        case ColumnType::Bool: return 1;
        case ColumnType::Int8: return 1;
        case ColumnType::Int16: return 2;
        case ColumnType::Int32: return 4;
        case ColumnType::Int64: return 8;
        case ColumnType::Float32: return 4;
        case ColumnType::String: break;
    }
    throw InternalError("fixed_width called on STRING column");
}

bool is_fixed_width(ColumnType type) {
    return type != ColumnType::String;
}

bool is_numeric(ColumnType type) {
    return type != ColumnType::String;
}

const char* type_name(ColumnType type) {
    switch (type) {
        case ColumnType::Bool: return "BOOL";
        case ColumnType::Int8: return "INT8";
        case ColumnType::Int16: return "INT16";
        case ColumnType::Int32: return "INT32";
        case ColumnType::Int64: return "INT64";
        case ColumnType::Float32: return "FLOAT";
        case ColumnType::String: return "STRING";
    }
    return "?";
}

std::optional<ColumnType> type_from_name(std::string_view name) {
    std::string upper(name);
    for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (upper == "BOOL" || upper == "BOOLEAN" || upper == "BIT") return ColumnType::Bool;
    if (upper == "INT8" || upper == "CHAR") return ColumnType::Int8;
    if (upper == "INT16" || upper == "SHORT") return ColumnType::Int16;
    if (upper == "INT32" || upper == "INT") return ColumnType::Int32;
    if (upper == "INT64" || upper == "LONG") return ColumnType::Int64;
    if (upper == "FLOAT") return ColumnType::Float32;
    if (upper == "STRING" || upper == "TEXT") return ColumnType::String;
    return std::nullopt;
}

bool Value::is_integer() const {
    switch (kind()) {
        case Kind::Int8:
        case Kind::Int16:
        case Kind::Int32:
        case Kind::Int64:
            return true;
        default:
            return false;
    }
}

bool Value::is_numeric() const {
    switch (kind()) {
        case Kind::Bool:
        case Kind::Int8:
        case Kind::Int16:
        case Kind::Int32:
        case Kind::Int64:
        case Kind::Float32:
            return true;
        default:
            return false;
    }
}

int64_t Value::widened_int() const {
    switch (kind()) {
        case Kind::Bool: return as_bool() ? 1 : 0;
        case Kind::Int8: return as_int8();
        case Kind::Int16: return as_int16();
        case Kind::Int32: return as_int32();
        case Kind::Int64: return as_int64();
        default: throw InternalError("widened_int on non-integer value");
    }
}

double Value::as_double() const {
    if (kind() == Kind::Float32) return as_float32();
    return static_cast<double>(widened_int());
}

static std::string float_to_text(float f) {
    std::array<char, 64> buf;
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), f);
    (void)ec;
    return std::string(buf.data(), ptr);
}

std::string Value::to_text() const {
    switch (kind()) {
        case Kind::Null: return "NULL";
        case Kind::Bool: return as_bool() ? "1" : "0";
        case Kind::Int8: return std::to_string(static_cast<int>(as_int8()));
        case Kind::Int16: return std::to_string(as_int16());
        case Kind::Int32: return std::to_string(as_int32());
        case Kind::Int64: return std::to_string(as_int64());
        case Kind::Float32: return float_to_text(as_float32());
        case Kind::String: return as_string();
    }
    return "?";
}

std::string Value::to_sql() const {
    if (kind() == Kind::String) {
        std::string out = "'";
        for (char c : as_string()) {
            out += c;
            if (c == '\'') out += '\'';
        }
        out += '\'';
        return out;
    }
    if (kind() == Kind::Float32) {
        // Keep float literals lexically distinct from integers ("10" -> "10.0").
        std::string text = float_to_text(as_float32());
        if (text.find_first_of(".eEni") == std::string::npos) text += ".0";
        return text;
    }
    return to_text();
}

std::partial_ordering compare_int64_double(int64_t i, double d) {
    if (std::isnan(d)) return std::partial_ordering::unordered;
    // 2^63 is exactly representable as a double; -2^63 likewise.
    constexpr double kTwo63 = 9223372036854775808.0;
    if (d >= kTwo63) return std::partial_ordering::less;
    if (d < -kTwo63) return std::partial_ordering::greater;
    double fl = std::floor(d);
    // fl fits in int64 given the bounds above.
    int64_t di = static_cast<int64_t>(fl);
    if (i < di) return std::partial_ordering::less;
    if (i > di) return std::partial_ordering::greater;
    // i == floor(d): equal unless d has a fractional part.
    return (d > fl) ? std::partial_ordering::less : std::partial_ordering::equivalent;
}

static std::strong_ordering from_partial(std::partial_ordering p) {
    if (p == std::partial_ordering::less) return std::strong_ordering::less;
    if (p == std::partial_ordering::greater) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

std::optional<std::strong_ordering> sql_compare(const Value& a, const Value& b) {
    if (a.is_null() || b.is_null()) return std::nullopt;
    if (a.is_string() != b.is_string())
        throw InternalError("comparison between string and non-string values");
    if (a.is_string()) {
        int c = a.as_string().compare(b.as_string());
        if (c < 0) return std::strong_ordering::less;
        if (c > 0) return std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }
    bool af = a.is_float();
    bool bf = b.is_float();
    if (!af && !bf) {
        int64_t x = a.widened_int();
        int64_t y = b.widened_int();
        return x <=> y;
    }
    if (af && bf) {
        float x = a.as_float32();
        float y = b.as_float32();
        if (std::isnan(x) || std::isnan(y)) return std::nullopt;
        return from_partial(std::partial_ordering(x <=> y));
    }
    // One integer side compared exactly against the float side.
    if (!af) {
        auto p = compare_int64_double(a.widened_int(), static_cast<double>(b.as_float32()));
        if (p == std::partial_ordering::unordered) return std::nullopt;
        return from_partial(p);
    }
    auto p = compare_int64_double(b.widened_int(), static_cast<double>(a.as_float32()));
    if (p == std::partial_ordering::unordered) return std::nullopt;
    if (p == std::partial_ordering::less) return std::strong_ordering::greater;
    if (p == std::partial_ordering::greater) return std::strong_ordering::less;
    return std::strong_ordering::equal;
}

std::strong_ordering total_compare(const Value& a, const Value& b) {
    if (a.is_null() || b.is_null())
        throw InternalError("total_compare on null value");
    if (a.is_string() && b.is_string()) {
        int c = a.as_string().compare(b.as_string());
        return c < 0 ? std::strong_ordering::less
                     : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
    }
    bool an = a.is_float() && std::isnan(a.as_float32());
    bool bn = b.is_float() && std::isnan(b.as_float32());
    if (an || bn) {
        if (an && bn) return std::strong_ordering::equal;
        return an ? std::strong_ordering::greater : std::strong_ordering::less;
    }
    auto c = sql_compare(a, b);
    return *c;
}

bool group_equal(const Value& a, const Value& b) {
    if (a.is_null() || b.is_null()) return a.is_null() && b.is_null();
    if (a.is_string() || b.is_string()) {
        if (!a.is_string() || !b.is_string()) return false;
        return a.as_string() == b.as_string();
    }
    return total_compare(a, b) == std::strong_ordering::equal;
}

std::size_t group_hash(const Value& v) {
    switch (v.kind()) {
        case Value::Kind::Null:
            return 0x9e3779b97f4a7c15ull;
        case Value::Kind::String:
            return std::hash<std::string>()(v.as_string());
        case Value::Kind::Float32: {
            float f = v.as_float32();
            if (std::isnan(f)) return 0x517cc1b727220a95ull;
            if (f == 0.0f) f = 0.0f;  // collapse -0
            // Integral floats hash like the equal integer so cross-type
            // group keys of equal magnitude collide as group_equal demands.
            double d = f;
            if (d == std::floor(d) && d >= -9223372036854775808.0 && d < 9223372036854775808.0)
                return std::hash<int64_t>()(static_cast<int64_t>(d));
            return std::hash<float>()(f);
        }
        default:
            return std::hash<int64_t>()(v.widened_int());
    }
}

std::size_t GroupKeyHash::operator()(const std::vector<Value>& key) const {
    std::size_t h = 0x243f6a8885a308d3ull;
    for (const Value& v : key) h = h * 1099511628211ull ^ group_hash(v);
    return h;
}

bool GroupKeyEq::operator()(const std::vector<Value>& a, const std::vector<Value>& b) const {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!group_equal(a[i], b[i])) return false;
    return true;
}

}  // namespace snel
