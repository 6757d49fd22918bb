#include "exec/aggregate.hpp"

#include "common.hpp"

namespace snel {

AggregateState combine_partials(const AggregateState& a, const AggregateState& b) {
    if (a.fn != b.fn || a.input_type != b.input_type)
        throw InternalError("cannot combine aggregate states of different kinds");
    AggregateState out = a;
    out.count = static_cast<int64_t>(static_cast<uint64_t>(a.count) +
                                     static_cast<uint64_t>(b.count));
    out.isum = static_cast<int64_t>(static_cast<uint64_t>(a.isum) +
                                    static_cast<uint64_t>(b.isum));
    out.fsum = a.fsum + b.fsum;
    if (b.seen) {
        bool replace = !a.seen;
        if (!replace) {
            auto cmp = total_compare(b.extremum, a.extremum);
            replace = a.fn == AggFn::Min ? cmp == std::strong_ordering::less
                                         : cmp == std::strong_ordering::greater;
        }
        if (replace) out.extremum = b.extremum;
        out.seen = true;
    }
    for (const Value& v : b.distinct) out.distinct.insert(v);
    return out;
}

Value finalize_aggregate(const AggregateState& s) {
    switch (s.fn) {
        case AggFn::Count: return Value::int64(s.count);
        case AggFn::CountDistinct: return Value::int64(static_cast<int64_t>(s.distinct.size()));
        case AggFn::Sum:
            if (s.count == 0) return Value::null();
            if (s.input_type == ColumnType::Float32)
                return Value::float32(static_cast<float>(s.fsum));
            return Value::int64(s.isum);
        case AggFn::Avg:
            if (s.count == 0) return Value::null();
            return Value::float32(static_cast<float>(s.fsum / static_cast<double>(s.count)));
        case AggFn::Min:
        case AggFn::Max: return s.seen ? s.extremum : Value::null();
    }
    throw InternalError("unknown aggregate function");
}

}  // namespace snel
