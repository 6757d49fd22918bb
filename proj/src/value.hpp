#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "common.hpp"

namespace snel {

enum class ColumnType : uint8_t {
    Bool,
    Int8,
    Int16,
    Int32,
    Int64,
    Float32,
    String,
};

// Byte width of one stored value; STRING columns have no fixed width.
std::size_t fixed_width(ColumnType type);
bool is_fixed_width(ColumnType type);
bool is_numeric(ColumnType type);  // bool counts as numeric (stored 0/1)
const char* type_name(ColumnType type);
std::optional<ColumnType> type_from_name(std::string_view name);

// Tagged scalar. Null is the empty state.
class Value {
public:
    enum class Kind : uint8_t { Null, Bool, Int8, Int16, Int32, Int64, Float32, String };

    Value() = default;
    static Value null() { return Value(); }
    static Value boolean(bool v) { return Value(Storage(std::in_place_index<1>, v)); }
    static Value int8(int8_t v) { return Value(Storage(std::in_place_index<2>, v)); }
    static Value int16(int16_t v) { return Value(Storage(std::in_place_index<3>, v)); }
    static Value int32(int32_t v) { return Value(Storage(std::in_place_index<4>, v)); }
    static Value int64(int64_t v) { return Value(Storage(std::in_place_index<5>, v)); }
    static Value float32(float v) { return Value(Storage(std::in_place_index<6>, v)); }
    static Value string(std::string v) { return Value(Storage(std::in_place_index<7>, std::move(v))); }

    Kind kind() const { return static_cast<Kind>(storage_.index()); }
    bool is_null() const { return storage_.index() == 0; }
    bool is_integer() const;
    bool is_float() const { return kind() == Kind::Float32; }
    bool is_numeric() const;  // bool, ints, float
    bool is_string() const { return kind() == Kind::String; }

    bool as_bool() const { return std::get<1>(storage_); }
    int8_t as_int8() const { return std::get<2>(storage_); }
    int16_t as_int16() const { return std::get<3>(storage_); }
    int32_t as_int32() const { return std::get<4>(storage_); }
    int64_t as_int64() const { return std::get<5>(storage_); }
    float as_float32() const { return std::get<6>(storage_); }
    const std::string& as_string() const { return std::get<7>(storage_); }

    // Integer/bool widened to int64. Precondition: is_integer() or Bool.
    int64_t widened_int() const;
    // Any numeric as double.
    double as_double() const;

    // Text rendering used by the CLI and DEBUG operator: nulls as "NULL",
    // floats shortest round-trip, bools 0/1, strings verbatim.
    std::string to_text() const;
    // Rendering for SQL/plan display: strings quoted.
    std::string to_sql() const;

    bool operator==(const Value& other) const = default;

private:
    using Storage = std::variant<std::monostate, bool, int8_t, int16_t, int32_t, int64_t,
                                 float, std::string>;
    explicit Value(Storage s) : storage_(std::move(s)) {}
    Storage storage_;
};

// SQL comparison: nullopt when either side is null or the comparison is
// unordered (NaN). Numeric cross-type comparisons are exact (int64 vs double
// handled without precision loss). String vs string is byte order.
// Mixed string/numeric is a caller bug and throws.
std::optional<std::strong_ordering> sql_compare(const Value& a, const Value& b);

// Total order for sorting and index layout over same-family values:
// numbers ordered naturally with NaN greater than everything, -0 == +0,
// strings byte order. Nulls are not handled here.
std::strong_ordering total_compare(const Value& a, const Value& b);

// Grouping equality: null == null, all NaN collapse, -0 == +0,
// cross-width integers with equal magnitude are equal.
bool group_equal(const Value& a, const Value& b);
std::size_t group_hash(const Value& v);

struct GroupValueHash {
    std::size_t operator()(const Value& v) const { return group_hash(v); }
};
struct GroupValueEq {
    bool operator()(const Value& a, const Value& b) const { return group_equal(a, b); }
};
struct GroupKeyHash {
    std::size_t operator()(const std::vector<Value>& key) const;
};
struct GroupKeyEq {
    bool operator()(const std::vector<Value>& a, const std::vector<Value>& b) const;
};

// Exact comparison of an int64 against a double (no rounding through double).
std::partial_ordering compare_int64_double(int64_t i, double d);

}  // namespace snel
