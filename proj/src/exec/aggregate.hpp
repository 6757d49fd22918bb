#pragma once

#include <unordered_set>

#include "sql/query.hpp"
#include "value.hpp"

namespace snel {

// Running state of one aggregate expression within one group. Integer sums
// wrap in 64-bit two's complement; float sums (and AVG for any input type)
// accumulate in 64-bit precision and are narrowed to float32 only at output.
struct AggregateState {
    AggFn fn = AggFn::Count;
    ColumnType input_type = ColumnType::Int64;  // argument type; Int64 for COUNT(*)

    int64_t count = 0;  // non-null inputs consumed (all rows for COUNT(*))
    int64_t isum = 0;   // integer SUM
    double fsum = 0.0;  // float SUM / AVG numerator
    bool seen = false;  // MIN/MAX hold a value
    Value extremum;     // MIN/MAX current value
    std::unordered_set<Value, GroupValueHash, GroupValueEq> distinct;  // COUNT(DISTINCT)
};

// Merges two partial states of the same aggregate (associative, commutative,
// with the fresh state as identity). Mismatched kinds are an internal error.
AggregateState combine_partials(const AggregateState& a, const AggregateState& b);

// Final value, null when no inputs were seen (except COUNT, which yields 0).
Value finalize_aggregate(const AggregateState& s);

}  // namespace snel
