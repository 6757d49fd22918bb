#include "exec/exec.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <compare>
#include <deque>
#include <exception>
#include <iostream>
#include <numeric>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "common.hpp"
#include "exec/aggregate.hpp"
#include "plan/optimizer.hpp"

namespace snel {

namespace {

// ----------------------------------------------------------- registers -----

// Runtime value families. Every integer width (and BOOL) runs as int64,
// FLOAT runs as double; the declared column type is reapplied only at the
// output slots.
enum class RegType : uint8_t { Int, Float, Str };

RegType reg_type_of(ColumnType t) {
    switch (t) {
        case ColumnType::Float32: return RegType::Float;
        case ColumnType::String: return RegType::Str;
        default: return RegType::Int;
    }
}

// One register: the current value of one expression. String registers are
// views into mapped column files, row buffers or the query's own literals,
// all of which outlive the rows flowing through them.
struct Reg {
    int64_t i = 0;
    double f = 0.0;
    std::string_view s;
    bool null = true;
};

// Per-lane execution state: the register file plus every registered context
// variable (scan cursors, limit counters, buffer positions).
struct ExecState {
    std::vector<Reg> regs;
    std::vector<int64_t> ctx;
};

Value reg_value(const Reg& r, RegType t) {
    if (r.null) return Value::null();
    switch (t) {
        case RegType::Int: return Value::int64(r.i);
        case RegType::Float: return Value::float32(static_cast<float>(r.f));
        case RegType::Str: return Value::string(std::string(r.s));
    }
    return Value::null();
}

// Total order used by SORT and by the merge-join regression check:
// nulls first, NaN after every real number, -0 == +0.
int reg_order(const Reg& a, const Reg& b, RegType t) {
    if (a.null || b.null) {
        if (a.null == b.null) return 0;
        return a.null ? -1 : 1;
    }
    switch (t) {
        case RegType::Int: return a.i < b.i ? -1 : a.i > b.i ? 1 : 0;
        case RegType::Float: {
            bool an = std::isnan(a.f), bn = std::isnan(b.f);
            if (an || bn) {
                if (an == bn) return 0;
                return an ? 1 : -1;
            }
            return a.f < b.f ? -1 : a.f > b.f ? 1 : 0;
        }
        case RegType::Str: {
            int c = a.s.compare(b.s);
            return c < 0 ? -1 : c > 0 ? 1 : 0;
        }
    }
    return 0;
}

// -------------------------------------------------------------- buffers ----

// Materialized rows: `width` registers per row. The arena owns strings that
// were created during materialization (aggregate finalization); everything
// else keeps borrowing from stable storage.
struct RowBuffer {
    std::size_t width = 0;
    std::size_t nrows = 0;
    std::vector<Reg> cells;
    std::deque<std::string> arena;

    std::string_view own(std::string s) {
        arena.push_back(std::move(s));
        return arena.back();
    }
};

// -------------------------------------------------------------- loaders ----

// Column readers specialized per (storage type, nullability) when the query
// is compiled, so the per-row path is a single indirect call with no type
// dispatch.
struct Loader {
    void (*fn)(const Loader&, uint64_t, ExecState&) = nullptr;
    const FixedColumn* fixed = nullptr;
    const TextColumn* text = nullptr;
    const NullBitmap* nulls = nullptr;
    int reg = -1;
};

template <typename T, bool Nullable>
void load_int(const Loader& l, uint64_t row, ExecState& st) {
    Reg& r = st.regs[static_cast<std::size_t>(l.reg)];
    if constexpr (Nullable) {
        if (!l.nulls->valid(row)) {
            r.null = true;
            return;
        }
    }
    r.null = false;
    r.i = static_cast<int64_t>(l.fixed->get<T>(row));
}

template <bool Nullable>
void load_float(const Loader& l, uint64_t row, ExecState& st) {
    Reg& r = st.regs[static_cast<std::size_t>(l.reg)];
    if constexpr (Nullable) {
        if (!l.nulls->valid(row)) {
            r.null = true;
            return;
        }
    }
    r.null = false;
    r.f = static_cast<double>(l.fixed->get<float>(row));
}

void load_text(const Loader& l, uint64_t row, ExecState& st) {
    Reg& r = st.regs[static_cast<std::size_t>(l.reg)];
    if (l.text->is_null(row)) {
        r.null = true;
        return;
    }
    r.null = false;
    r.s = l.text->get(row);
}

Loader make_loader(const Table& table, int col_idx, int reg) {
    const ColumnDescriptor& cd = table.column(static_cast<std::size_t>(col_idx));
    Loader l;
    l.reg = reg;
    if (cd.type == ColumnType::String) {
        l.text = &table.text(static_cast<std::size_t>(col_idx));
        l.fn = &load_text;
        return l;
    }
    l.fixed = &table.fixed(static_cast<std::size_t>(col_idx));
    l.nulls = &table.nulls(static_cast<std::size_t>(col_idx));
    bool n = cd.nullable;
    switch (cd.type) {
        case ColumnType::Bool:
        case ColumnType::Int8: l.fn = n ? &load_int<int8_t, true> : &load_int<int8_t, false>; break;
        case ColumnType::Int16:
            l.fn = n ? &load_int<int16_t, true> : &load_int<int16_t, false>;
            break;
        case ColumnType::Int32:
            l.fn = n ? &load_int<int32_t, true> : &load_int<int32_t, false>;
            break;
        case ColumnType::Int64:
            l.fn = n ? &load_int<int64_t, true> : &load_int<int64_t, false>;
            break;
        case ColumnType::Float32: l.fn = n ? &load_float<true> : &load_float<false>; break;
        case ColumnType::String: break;  // handled above
    }
    return l;
}

// --------------------------------------------------- constraint programs ---

enum class Tri : uint8_t { False, True, Unknown };

// One IN (subquery) set: distinct non-null, non-NaN elements. A null or NaN
// element cannot match anything but turns a miss into Unknown, exactly as
// expanding `x IN (a, b, ...)` into a chain of OR-ed equalities would.
struct InSet {
    std::unordered_set<Value, GroupValueHash, GroupValueEq> values;
    bool any_row = false;
    bool unknown_maker = false;
};

struct CNode;
using LeafFn = Tri (*)(const CNode&, const ExecState&);

// Compiled boolean tree evaluated in three-valued logic; a row passes only
// when the root comes out True.
struct CNode {
    enum class Kind : uint8_t { Always, Leaf, In, And, Or, Not };
    Kind kind = Kind::Always;
    Tri always = Tri::True;
    std::vector<std::unique_ptr<CNode>> kids;
    // Leaf
    LeafFn leaf = nullptr;
    int lhs = -1;
    int rhs = -1;
    CmpOp op = CmpOp::Eq;
    // In
    int probe = -1;
    RegType probe_type = RegType::Int;
    const InSet* set = nullptr;
};

std::partial_ordering flip(std::partial_ordering c) {
    if (c == std::partial_ordering::less) return std::partial_ordering::greater;
    if (c == std::partial_ordering::greater) return std::partial_ordering::less;
    return c;
}

bool cmp_hit(CmpOp op, std::partial_ordering c) {
    switch (op) {
        case CmpOp::Lt: return c < 0;
        case CmpOp::Le: return c <= 0;
        case CmpOp::Gt: return c > 0;
        case CmpOp::Ge: return c >= 0;
        case CmpOp::Eq: return c == 0;
        case CmpOp::Ne: return c != 0;
    }
    return false;
}

template <RegType L, RegType R>
Tri leaf_cmp(const CNode& n, const ExecState& st) {
    const Reg& a = st.regs[static_cast<std::size_t>(n.lhs)];
    const Reg& b = st.regs[static_cast<std::size_t>(n.rhs)];
    if (a.null || b.null) return Tri::Unknown;
    std::partial_ordering c = std::partial_ordering::unordered;
    if constexpr (L == RegType::Str) {
        c = a.s <=> b.s;
    } else if constexpr (L == RegType::Int && R == RegType::Int) {
        c = a.i <=> b.i;
    } else if constexpr (L == RegType::Int && R == RegType::Float) {
        c = compare_int64_double(a.i, b.f);
    } else if constexpr (L == RegType::Float && R == RegType::Int) {
        c = flip(compare_int64_double(b.i, a.f));
    } else {
        c = a.f <=> b.f;  // unordered when either side is NaN
    }
    if (c == std::partial_ordering::unordered) return Tri::Unknown;
    return cmp_hit(n.op, c) ? Tri::True : Tri::False;
}

LeafFn pick_leaf(RegType l, RegType r) {
    if (l == RegType::Str && r == RegType::Str) return &leaf_cmp<RegType::Str, RegType::Str>;
    if (l == RegType::Int && r == RegType::Int) return &leaf_cmp<RegType::Int, RegType::Int>;
    if (l == RegType::Int && r == RegType::Float) return &leaf_cmp<RegType::Int, RegType::Float>;
    if (l == RegType::Float && r == RegType::Int) return &leaf_cmp<RegType::Float, RegType::Int>;
    return &leaf_cmp<RegType::Float, RegType::Float>;
}

Tri eval_in(const CNode& n, const ExecState& st) {
    const Reg& p = st.regs[static_cast<std::size_t>(n.probe)];
    const InSet& s = *n.set;
    // A null or NaN probe compares Unknown against every element; with no
    // elements at all the disjunction is empty and therefore False.
    if (p.null || (n.probe_type == RegType::Float && std::isnan(p.f)))
        return s.any_row ? Tri::Unknown : Tri::False;
    if (s.values.count(reg_value(p, n.probe_type)) != 0) return Tri::True;
    return s.unknown_maker ? Tri::Unknown : Tri::False;
}

Tri eval_cnode(const CNode& n, const ExecState& st) {
    switch (n.kind) {
        case CNode::Kind::Always: return n.always;
        case CNode::Kind::Leaf: return n.leaf(n, st);
        case CNode::Kind::In: return eval_in(n, st);
        case CNode::Kind::Not: {
            Tri t = eval_cnode(*n.kids[0], st);
            if (t == Tri::True) return Tri::False;
            if (t == Tri::False) return Tri::True;
            return Tri::Unknown;
        }
        case CNode::Kind::And: {
            bool unknown = false;
            for (const auto& kid : n.kids) {
                Tri t = eval_cnode(*kid, st);
                if (t == Tri::False) return Tri::False;
                if (t == Tri::Unknown) unknown = true;
            }
            return unknown ? Tri::Unknown : Tri::True;
        }
        case CNode::Kind::Or: {
            bool unknown = false;
            for (const auto& kid : n.kids) {
                Tri t = eval_cnode(*kid, st);
                if (t == Tri::True) return Tri::True;
                if (t == Tri::Unknown) unknown = true;
            }
            return unknown ? Tri::Unknown : Tri::False;
        }
    }
    return Tri::Unknown;
}

// ---------------------------------------------------------------- steps ----

enum class StepResult : uint8_t { Keep, Skip, Stop };

struct BinOp {
    int src = -1;
    int dst = -1;
    int bounds_id = -1;
    uint32_t n = 1;
    RegType src_type = RegType::Int;
};

struct DebugCol {
    int reg = -1;
    RegType type = RegType::Int;
};

// One fused operator applied to the row currently in the registers.
struct Step {
    enum class Kind : uint8_t { Filter, Limit, Bin, Debug };
    Kind kind = Kind::Filter;

    std::unique_ptr<CNode> tree;  // Filter

    int limit_ctx = -1;           // Limit: rows-consumed counter
    uint64_t limit_skip = 0;      // rows to skip (OFFSET)
    uint64_t limit_cap = 0;       // skip + limit, saturated

    std::vector<BinOp> bins;      // Bin

    std::vector<DebugCol> debug_cols;  // Debug
};

struct BinBounds {
    double lo = 0.0;
    double hi = 0.0;
    bool any = false;
};

std::string debug_text(const Reg& r, RegType t) {
    if (r.null) return "NULL";
    switch (t) {
        case RegType::Int: return std::to_string(r.i);
        case RegType::Float: {
            std::array<char, 64> buf;
            auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(),
                                           static_cast<float>(r.f));
            (void)ec;
            return std::string(buf.data(), ptr);
        }
        case RegType::Str: return std::string(r.s);
    }
    return "?";
}

// ------------------------------------------------------------- pipelines ---

struct MergeState {
    bool init = false;
    bool done = false;
    bool have_left = false;
    bool left_fresh = false;

    bool have_pending = false;
    std::vector<Reg> pending;  // staged right row, one past the buffered run
    Reg pending_key;

    std::vector<Reg> run;  // buffered right rows sharing one key
    std::size_t run_rows = 0;
    std::size_t run_pos = 0;
    Reg run_key;

    bool left_seen = false;
    Reg last_left_key;
    bool right_seen = false;
    Reg last_right_key;
};

struct CrossState {
    bool init = false;
    bool have_left = false;
    RowBuffer right_rows;
    std::size_t pos = 0;
};

// One fused pipeline: a row source followed by filter/limit/bin/debug steps.
// Joins nest the input pipelines; everything else in the plan becomes either
// a step here or a pipeline-breaking phase that feeds a Buffer source.
struct Pipeline {
    enum class Source : uint8_t { Table, Index, Buffer, Merge, Cross };
    Source source = Source::Table;

    // Table / Index
    const Table* table = nullptr;
    const IndexFile* index = nullptr;
    std::vector<Loader> loaders;
    int pos_ctx = -1;
    int end_ctx = -1;
    uint64_t scan_begin = 0;
    uint64_t scan_end = 0;

    // Buffer
    const RowBuffer* buffer = nullptr;
    int buf_pos_ctx = -1;
    std::vector<int> buffer_regs;

    // Merge / Cross
    std::unique_ptr<Pipeline> left, right;
    std::vector<int> right_regs;  // registers the right input produces
    int left_key_reg = -1;
    int right_key_reg = -1;
    RegType left_key_type = RegType::Int;
    RegType right_key_type = RegType::Int;
    std::unique_ptr<MergeState> merge;
    std::unique_ptr<CrossState> cross;

    std::vector<Step> steps;
};

// ---------------------------------------------------------------- phases ---

struct BoundsSpec {
    int src = -1;
    RegType type = RegType::Int;
    int bounds_id = -1;
};

// One aggregate output column: either a plain aggregate or a BIN_MIN/BIN_MAX
// bound derived from the group's bin ordinal.
struct AggDesc {
    enum class Kind : uint8_t { Agg, BinMin, BinMax };
    Kind kind = Kind::Agg;
    AggFn fn = AggFn::Count;
    int src = -1;
    RegType src_type = RegType::Int;
    ColumnType input_type = ColumnType::Int64;
    void (*update)(AggregateState&, const ExecState&, int) = nullptr;
    // BinMin / BinMax
    int key_index = -1;  // group-key position holding the BIN ordinal
    int bounds_id = -1;
    uint32_t n = 1;
};

struct OutCol {
    bool from_key = false;
    int index = -1;  // group-key position or AggDesc position
    RegType type = RegType::Int;
};

// Work executed once, before the first row is fetched: IN-set fills, bin
// bound resolution, aggregations and sorts/materializations. Each phase
// consumes a private pipeline and (except bounds/set fills) fills a buffer
// that a later pipeline reads back.
struct Phase {
    enum class Kind : uint8_t { BinBounds, Aggregate, Materialize, Sort };
    Kind kind = Kind::Materialize;
    std::unique_ptr<Pipeline> child;
    RowBuffer* out = nullptr;

    std::vector<BoundsSpec> specs;  // BinBounds

    // Aggregate
    std::vector<int> group_regs;
    std::vector<RegType> group_types;
    std::vector<AggDesc> descs;
    std::vector<OutCol> out_cols;
    unsigned lanes = 1;
    int chunk_pos_ctx = -1;
    int chunk_end_ctx = -1;
    uint64_t chunk_begin = 0;
    uint64_t chunk_end = 0;

    // Materialize / Sort: registers stored per row
    std::vector<int> cols;
    struct SortKey {
        int col = -1;
        bool desc = false;
        RegType type = RegType::Int;
    };
    std::vector<SortKey> keys;  // Sort
};

struct InSetFill {
    int set_id = -1;
    std::unique_ptr<CompiledQuery> sub;
};

// Aggregate update functions, one per (function, input family).

void upd_count_star(AggregateState& s, const ExecState&, int) { ++s.count; }

void upd_count(AggregateState& s, const ExecState& st, int src) {
    if (!st.regs[static_cast<std::size_t>(src)].null) ++s.count;
}

void upd_sum_int(AggregateState& s, const ExecState& st, int src) {
    const Reg& r = st.regs[static_cast<std::size_t>(src)];
    if (r.null) return;
    ++s.count;
    s.isum = static_cast<int64_t>(static_cast<uint64_t>(s.isum) + static_cast<uint64_t>(r.i));
}

void upd_sum_float(AggregateState& s, const ExecState& st, int src) {
    const Reg& r = st.regs[static_cast<std::size_t>(src)];
    if (r.null) return;
    ++s.count;
    s.fsum += r.f;
}

void upd_avg_int(AggregateState& s, const ExecState& st, int src) {
    const Reg& r = st.regs[static_cast<std::size_t>(src)];
    if (r.null) return;
    ++s.count;
    s.fsum += static_cast<double>(r.i);
}

void upd_avg_float(AggregateState& s, const ExecState& st, int src) {
    const Reg& r = st.regs[static_cast<std::size_t>(src)];
    if (r.null) return;
    ++s.count;
    s.fsum += r.f;
}

template <bool IsMin, RegType T>
void upd_extremum(AggregateState& s, const ExecState& st, int src) {
    const Reg& r = st.regs[static_cast<std::size_t>(src)];
    if (r.null) return;
    Value v = reg_value(r, T);
    if (!s.seen) {
        s.seen = true;
        s.extremum = std::move(v);
        return;
    }
    auto c = total_compare(v, s.extremum);
    if (IsMin ? c == std::strong_ordering::less : c == std::strong_ordering::greater)
        s.extremum = std::move(v);
}

template <RegType T>
void upd_distinct(AggregateState& s, const ExecState& st, int src) {
    const Reg& r = st.regs[static_cast<std::size_t>(src)];
    if (r.null) return;
    s.distinct.insert(reg_value(r, T));
}

struct SlotRef {
    int reg = -1;
};

struct ConstInit {
    int reg = -1;
    Reg value;
};

// Assigns one register per distinct expression across the whole plan, so a
// value produced once flows through every operator without being copied.
struct RegAlloc {
    std::vector<SQLExpression> exprs;

    int reg_of(const SQLExpression& e) {
        for (std::size_t i = 0; i < exprs.size(); ++i)
            if (exprs[i].same_expr(e)) return static_cast<int>(i);
        exprs.push_back(e);
        return static_cast<int>(exprs.size() - 1);
    }
};

}  // namespace

// ------------------------------------------------------------------ impl ---

struct CompiledQuery::Impl {
    PlanPtr plan;   // owns expression literals the registers may borrow from
    Query query;
    unsigned max_lanes = 1;

    RegAlloc regs;
    std::vector<ContextVariable> ctx_vars;
    std::deque<RowBuffer> buffers;
    std::deque<InSet> in_sets;
    std::unordered_map<const Query*, int> in_set_ids;
    std::vector<BinBounds> bounds;

    std::vector<InSetFill> inset_phases;
    std::vector<Phase> phases;
    std::unique_ptr<Pipeline> top;

    std::vector<OutputSlot> slots;
    std::vector<SlotRef> slot_refs;
    std::vector<ConstInit> consts;

    ExecState state;
    bool prepared = false;
    bool eof = false;
    bool destroyed = false;
};

namespace {

using Impl = CompiledQuery::Impl;

// -------------------------------------------------------------- runtime ----

bool advance(Pipeline& p, ExecState& st, Impl& impl);

StepResult run_step(const Step& s, ExecState& st, Impl& impl) {
    switch (s.kind) {
        case Step::Kind::Filter:
            return eval_cnode(*s.tree, st) == Tri::True ? StepResult::Keep : StepResult::Skip;
        case Step::Kind::Limit: {
            uint64_t pos = static_cast<uint64_t>(st.ctx[static_cast<std::size_t>(s.limit_ctx)]++);
            if (pos < s.limit_skip) return StepResult::Skip;
            if (pos < s.limit_cap) return StepResult::Keep;
            return StepResult::Stop;
        }
        case Step::Kind::Bin: {
            for (const BinOp& b : s.bins) {
                const Reg& src = st.regs[static_cast<std::size_t>(b.src)];
                Reg& dst = st.regs[static_cast<std::size_t>(b.dst)];
                if (src.null) {
                    dst.null = true;
                    continue;
                }
                double v = b.src_type == RegType::Float ? src.f : static_cast<double>(src.i);
                if (std::isnan(v)) {
                    dst.null = true;
                    continue;
                }
                const BinBounds& bb = impl.bounds[static_cast<std::size_t>(b.bounds_id)];
                int64_t idx = 0;
                if (bb.lo < bb.hi) {
                    double t = std::floor((v - bb.lo) * static_cast<double>(b.n) / (bb.hi - bb.lo));
                    if (t > 0) idx = static_cast<int64_t>(t);
                    if (idx >= static_cast<int64_t>(b.n)) idx = static_cast<int64_t>(b.n) - 1;
                }
                dst.null = false;
                dst.i = idx;
            }
            return StepResult::Keep;
        }
        case Step::Kind::Debug: {
            std::string line;
            for (std::size_t i = 0; i < s.debug_cols.size(); ++i) {
                if (i) line += '|';
                line += debug_text(st.regs[static_cast<std::size_t>(s.debug_cols[i].reg)],
                                   s.debug_cols[i].type);
            }
            std::cerr << line << '\n';
            return StepResult::Keep;
        }
    }
    return StepResult::Keep;
}

void load_buffer_row(const Pipeline& p, std::size_t row, ExecState& st) {
    const Reg* cells = p.buffer->cells.data() + row * p.buffer->width;
    for (std::size_t c = 0; c < p.buffer_regs.size(); ++c)
        st.regs[static_cast<std::size_t>(p.buffer_regs[c])] = cells[c];
}

void load_staged_row(const Pipeline& p, const Reg* cells, ExecState& st) {
    for (std::size_t c = 0; c < p.right_regs.size(); ++c)
        st.regs[static_cast<std::size_t>(p.right_regs[c])] = cells[c];
}

bool key_is_nan(const Reg& r, RegType t) {
    return t == RegType::Float && std::isnan(r.f);
}

// Advances the left input and verifies the keys never regress.
bool merge_advance_left(Pipeline& p, MergeState& m, ExecState& st, Impl& impl) {
    if (!advance(*p.left, st, impl)) {
        m.have_left = false;
        return false;
    }
    m.have_left = true;
    m.left_fresh = true;
    const Reg& k = st.regs[static_cast<std::size_t>(p.left_key_reg)];
    if (!k.null && !key_is_nan(k, p.left_key_type)) {
        if (m.left_seen && !m.last_left_key.null &&
            reg_order(k, m.last_left_key, p.left_key_type) < 0)
            throw InternalError("merge join left input is not ordered by the join key");
        m.last_left_key = k;
        m.left_seen = true;
    }
    return true;
}

// Advances the right input into the staging row.
bool merge_advance_right(Pipeline& p, MergeState& m, ExecState& st, Impl& impl) {
    if (!advance(*p.right, st, impl)) {
        m.have_pending = false;
        return false;
    }
    const Reg& k = st.regs[static_cast<std::size_t>(p.right_key_reg)];
    if (!k.null && !key_is_nan(k, p.right_key_type)) {
        if (m.right_seen && !m.last_right_key.null &&
            reg_order(k, m.last_right_key, p.right_key_type) < 0)
            throw InternalError("merge join right input is not ordered by the join key");
        m.last_right_key = k;
        m.right_seen = true;
    }
    m.pending.assign(p.right_regs.size(), Reg{});
    for (std::size_t c = 0; c < p.right_regs.size(); ++c)
        m.pending[c] = st.regs[static_cast<std::size_t>(p.right_regs[c])];
    m.pending_key = k;
    m.have_pending = true;
    return true;
}

// Comparison of two non-null, non-NaN keys; cross-family numeric pairs are
// compared exactly.
std::partial_ordering key_order(const Reg& a, RegType ta, const Reg& b, RegType tb) {
    if (ta == RegType::Str || tb == RegType::Str) return a.s <=> b.s;
    if (ta == RegType::Int && tb == RegType::Int) return a.i <=> b.i;
    if (ta == RegType::Int) return compare_int64_double(a.i, b.f);
    if (tb == RegType::Int) return flip(compare_int64_double(b.i, a.f));
    return a.f <=> b.f;
}

// Sort-merge join: both inputs arrive ordered by their key; equal-key runs on
// the right are buffered once and replayed for every matching left row, which
// keeps the output ordered by key and left-major within it. A NaN key on
// either side ends the join because NaN sorts after every number and never
// compares equal.
bool merge_next(Pipeline& p, ExecState& st, Impl& impl) {
    MergeState& m = *p.merge;
    if (m.done) return false;
    if (!m.init) {
        m.init = true;
        merge_advance_left(p, m, st, impl);
        merge_advance_right(p, m, st, impl);
    }
    for (;;) {
        if (m.run_pos < m.run_rows) {
            load_staged_row(p, m.run.data() + m.run_pos * p.right_regs.size(), st);
            ++m.run_pos;
            return true;
        }
        if (!m.have_left) {
            m.done = true;
            return false;
        }
        if (!m.left_fresh && !merge_advance_left(p, m, st, impl)) {
            m.done = true;
            return false;
        }
        m.left_fresh = false;
        const Reg& lk = st.regs[static_cast<std::size_t>(p.left_key_reg)];
        if (lk.null) continue;  // null keys never match
        if (key_is_nan(lk, p.left_key_type)) {
            m.done = true;
            return false;
        }
        if (m.run_rows > 0) {
            if (key_order(lk, p.left_key_type, m.run_key, p.right_key_type) == 0) {
                m.run_pos = 0;  // this left row joins the buffered run too
                continue;
            }
            m.run.clear();
            m.run_rows = 0;
            m.run_pos = 0;
        }
        // Align the right side with the current left key and buffer its run.
        bool left_behind = false;
        while (!left_behind) {
            if (!m.have_pending) {
                m.done = true;
                return false;
            }
            if (m.pending_key.null) {
                merge_advance_right(p, m, st, impl);
                continue;
            }
            if (key_is_nan(m.pending_key, p.right_key_type)) {
                m.done = true;
                return false;
            }
            auto c = key_order(lk, p.left_key_type, m.pending_key, p.right_key_type);
            if (c < 0) {
                left_behind = true;  // advance the left side
            } else if (c > 0) {
                merge_advance_right(p, m, st, impl);
            } else {
                m.run_key = m.pending_key;
                do {
                    m.run.insert(m.run.end(), m.pending.begin(), m.pending.end());
                    ++m.run_rows;
                } while (merge_advance_right(p, m, st, impl) && !m.pending_key.null &&
                         !key_is_nan(m.pending_key, p.right_key_type) &&
                         key_order(m.pending_key, p.right_key_type, m.run_key,
                                   p.right_key_type) == 0);
                m.run_pos = 0;
                break;
            }
        }
    }
}

// Nested-loop cross product: the right input is drained once into a buffer,
// the left input streams, giving left-major output order.
bool cross_next(Pipeline& p, ExecState& st, Impl& impl) {
    CrossState& c = *p.cross;
    if (!c.init) {
        c.init = true;
        c.right_rows.width = p.right_regs.size();
        while (advance(*p.right, st, impl)) {
            for (int r : p.right_regs) c.right_rows.cells.push_back(st.regs[static_cast<std::size_t>(r)]);
            ++c.right_rows.nrows;
        }
        c.have_left = c.right_rows.nrows > 0 && advance(*p.left, st, impl);
        c.pos = 0;
    }
    for (;;) {
        if (!c.have_left) return false;
        if (c.pos < c.right_rows.nrows) {
            load_staged_row(p, c.right_rows.cells.data() + c.pos * c.right_rows.width, st);
            ++c.pos;
            return true;
        }
        c.have_left = advance(*p.left, st, impl);
        c.pos = 0;
    }
}

bool source_next(Pipeline& p, ExecState& st, Impl& impl) {
    switch (p.source) {
        case Pipeline::Source::Table: {
            int64_t pos = st.ctx[static_cast<std::size_t>(p.pos_ctx)];
            if (pos >= st.ctx[static_cast<std::size_t>(p.end_ctx)]) return false;
            st.ctx[static_cast<std::size_t>(p.pos_ctx)] = pos + 1;
            for (const Loader& l : p.loaders) l.fn(l, static_cast<uint64_t>(pos), st);
            return true;
        }
        case Pipeline::Source::Index: {
            int64_t pos = st.ctx[static_cast<std::size_t>(p.pos_ctx)];
            if (pos >= st.ctx[static_cast<std::size_t>(p.end_ctx)]) return false;
            st.ctx[static_cast<std::size_t>(p.pos_ctx)] = pos + 1;
            uint64_t row = p.index->rowid_at(static_cast<uint64_t>(pos));
            for (const Loader& l : p.loaders) l.fn(l, row, st);
            return true;
        }
        case Pipeline::Source::Buffer: {
            int64_t pos = st.ctx[static_cast<std::size_t>(p.buf_pos_ctx)];
            if (static_cast<std::size_t>(pos) >= p.buffer->nrows) return false;
            st.ctx[static_cast<std::size_t>(p.buf_pos_ctx)] = pos + 1;
            load_buffer_row(p, static_cast<std::size_t>(pos), st);
            return true;
        }
        case Pipeline::Source::Merge: return merge_next(p, st, impl);
        case Pipeline::Source::Cross: return cross_next(p, st, impl);
    }
    return false;
}

bool advance(Pipeline& p, ExecState& st, Impl& impl) {
    for (;;) {
        if (!source_next(p, st, impl)) return false;
        bool keep = true;
        for (const Step& s : p.steps) {
            StepResult r = run_step(s, st, impl);
            if (r == StepResult::Keep) continue;
            if (r == StepResult::Stop) return false;
            keep = false;
            break;
        }
        if (keep) return true;
    }
}

// ------------------------------------------------------------ aggregation --

struct GroupTable {
    struct Entry {
        std::vector<Reg> key_regs;
        std::vector<AggregateState> states;
    };
    std::unordered_map<std::vector<Value>, std::size_t, GroupKeyHash, GroupKeyEq> index;
    std::vector<Entry> entries;
};

AggregateState make_state(const AggDesc& d) {
    AggregateState s;
    s.fn = d.fn;
    s.input_type = d.input_type;
    return s;
}

void run_aggregate_lane(const Phase& ph, ExecState& st, GroupTable& g, Impl& impl) {
    Pipeline& child = *ph.child;
    const std::size_t nd = ph.descs.size();
    if (ph.group_regs.empty()) {
        // Global aggregation: one group that exists even for empty input.
        if (g.entries.empty()) {
            GroupTable::Entry e;
            for (const AggDesc& d : ph.descs) e.states.push_back(make_state(d));
            g.entries.push_back(std::move(e));
            g.index.emplace(std::vector<Value>{}, 0);
        }
        std::vector<AggregateState>& states = g.entries[0].states;
        while (advance(child, st, impl))
            for (std::size_t k = 0; k < nd; ++k)
                if (ph.descs[k].update) ph.descs[k].update(states[k], st, ph.descs[k].src);
        return;
    }
    std::vector<Value> key;
    key.reserve(ph.group_regs.size());
    while (advance(child, st, impl)) {
        key.clear();
        for (std::size_t i = 0; i < ph.group_regs.size(); ++i)
            key.push_back(
                reg_value(st.regs[static_cast<std::size_t>(ph.group_regs[i])], ph.group_types[i]));
        std::size_t idx;
        auto it = g.index.find(key);
        if (it == g.index.end()) {
            idx = g.entries.size();
            GroupTable::Entry e;
            for (int r : ph.group_regs) e.key_regs.push_back(st.regs[static_cast<std::size_t>(r)]);
            for (const AggDesc& d : ph.descs) e.states.push_back(make_state(d));
            g.entries.push_back(std::move(e));
            g.index.emplace(key, idx);
        } else {
            idx = it->second;
        }
        std::vector<AggregateState>& states = g.entries[idx].states;
        for (std::size_t k = 0; k < nd; ++k)
            if (ph.descs[k].update) ph.descs[k].update(states[k], st, ph.descs[k].src);
    }
}

// Folds a lane-local table into the global one. Merging lane 0 first keeps
// group discovery order identical to a single-lane scan, because the lanes
// cover contiguous, ascending row ranges.
void merge_group_tables(const Phase& ph, GroupTable& global, GroupTable& lane) {
    for (std::size_t e = 0; e < lane.entries.size(); ++e) {
        GroupTable::Entry& src = lane.entries[e];
        std::vector<Value> key;
        for (std::size_t i = 0; i < ph.group_regs.size(); ++i)
            key.push_back(reg_value(src.key_regs[i], ph.group_types[i]));
        auto it = global.index.find(key);
        std::size_t idx;
        if (it == global.index.end()) {
            idx = global.entries.size();
            global.entries.push_back(std::move(src));
            global.index.emplace(std::move(key), idx);
            continue;
        }
        idx = it->second;
        std::vector<AggregateState>& dst = global.entries[idx].states;
        for (std::size_t k = 0; k < dst.size(); ++k)
            dst[k] = combine_partials(dst[k], src.states[k]);
    }
}

void finalize_aggregate_phase(const Phase& ph, GroupTable& g, Impl& impl) {
    RowBuffer& out = *ph.out;
    out.width = ph.out_cols.size();
    out.nrows = g.entries.size();
    out.cells.reserve(out.width * out.nrows);
    for (GroupTable::Entry& e : g.entries) {
        for (const OutCol& oc : ph.out_cols) {
            Reg r;
            if (oc.from_key) {
                r = e.key_regs[static_cast<std::size_t>(oc.index)];
            } else {
                const AggDesc& d = ph.descs[static_cast<std::size_t>(oc.index)];
                if (d.kind == AggDesc::Kind::Agg) {
                    Value v = finalize_aggregate(e.states[static_cast<std::size_t>(oc.index)]);
                    if (!v.is_null()) {
                        r.null = false;
                        switch (oc.type) {
                            case RegType::Int: r.i = v.widened_int(); break;
                            case RegType::Float: r.f = v.as_double(); break;
                            case RegType::Str: r.s = out.own(v.as_string()); break;
                        }
                    }
                } else {
                    // BIN_MIN / BIN_MAX: derived from the group's bin ordinal.
                    const Reg& bin = e.key_regs[static_cast<std::size_t>(d.key_index)];
                    if (!bin.null) {
                        const BinBounds& bb = impl.bounds[static_cast<std::size_t>(d.bounds_id)];
                        double edge = static_cast<double>(bin.i) +
                                      (d.kind == AggDesc::Kind::BinMax ? 1.0 : 0.0);
                        r.null = false;
                        r.f = bb.lo + edge * (bb.hi - bb.lo) / static_cast<double>(d.n);
                    }
                }
            }
            out.cells.push_back(r);
        }
    }
}

void run_aggregate_phase(Phase& ph, Impl& impl) {
    GroupTable global;
    unsigned lanes = ph.lanes;
    if (lanes <= 1 || ph.chunk_pos_ctx < 0) {
        run_aggregate_lane(ph, impl.state, global, impl);
    } else {
        uint64_t span = ph.chunk_end - ph.chunk_begin;
        uint64_t chunk = span / lanes;
        uint64_t rem = span % lanes;
        std::vector<GroupTable> tables(lanes);
        std::vector<ExecState> states(lanes);
        std::vector<std::exception_ptr> errors(lanes);
        std::vector<std::thread> threads;
        threads.reserve(lanes);
        uint64_t begin = ph.chunk_begin;
        for (unsigned l = 0; l < lanes; ++l) {
            uint64_t len = chunk + (l < rem ? 1 : 0);
            states[l].regs = impl.state.regs;  // carries the literal constants
            states[l].ctx.reserve(impl.ctx_vars.size());
            for (const ContextVariable& v : impl.ctx_vars) states[l].ctx.push_back(v.initial);
            states[l].ctx[static_cast<std::size_t>(ph.chunk_pos_ctx)] =
                static_cast<int64_t>(begin);
            states[l].ctx[static_cast<std::size_t>(ph.chunk_end_ctx)] =
                static_cast<int64_t>(begin + len);
            begin += len;
            threads.emplace_back([&, l] {
                try {
                    run_aggregate_lane(ph, states[l], tables[l], impl);
                } catch (...) {
                    errors[l] = std::current_exception();
                }
            });
        }
        for (std::thread& t : threads) t.join();
        for (unsigned l = 0; l < lanes; ++l)
            if (errors[l]) std::rethrow_exception(errors[l]);
        for (unsigned l = 0; l < lanes; ++l) merge_group_tables(ph, global, tables[l]);
        if (ph.group_regs.empty() && global.entries.empty()) {
            GroupTable::Entry e;
            for (const AggDesc& d : ph.descs) e.states.push_back(make_state(d));
            global.entries.push_back(std::move(e));
        }
    }
    finalize_aggregate_phase(ph, global, impl);
}

void run_bounds_phase(Phase& ph, Impl& impl) {
    while (advance(*ph.child, impl.state, impl)) {
        for (const BoundsSpec& sp : ph.specs) {
            const Reg& r = impl.state.regs[static_cast<std::size_t>(sp.src)];
            if (r.null) continue;
            double v = sp.type == RegType::Float ? r.f : static_cast<double>(r.i);
            if (std::isnan(v)) continue;
            BinBounds& bb = impl.bounds[static_cast<std::size_t>(sp.bounds_id)];
            if (!bb.any) {
                bb.any = true;
                bb.lo = bb.hi = v;
            } else {
                bb.lo = std::min(bb.lo, v);
                bb.hi = std::max(bb.hi, v);
            }
        }
    }
}

void run_materialize_phase(Phase& ph, Impl& impl) {
    RowBuffer& out = *ph.out;
    out.width = ph.cols.size();
    while (advance(*ph.child, impl.state, impl)) {
        for (int c : ph.cols) out.cells.push_back(impl.state.regs[static_cast<std::size_t>(c)]);
        ++out.nrows;
    }
}

void run_sort_phase(Phase& ph, Impl& impl) {
    run_materialize_phase(ph, impl);
    RowBuffer& out = *ph.out;
    const std::size_t w = out.width;
    std::vector<std::size_t> order(out.nrows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        for (const Phase::SortKey& k : ph.keys) {
            int c = reg_order(out.cells[a * w + static_cast<std::size_t>(k.col)],
                              out.cells[b * w + static_cast<std::size_t>(k.col)], k.type);
            if (k.desc) c = -c;
            if (c != 0) return c < 0;
        }
        return false;
    });
    std::vector<Reg> sorted;
    sorted.reserve(out.cells.size());
    for (std::size_t row : order)
        sorted.insert(sorted.end(), out.cells.begin() + static_cast<std::ptrdiff_t>(row * w),
                      out.cells.begin() + static_cast<std::ptrdiff_t>((row + 1) * w));
    out.cells = std::move(sorted);
}

void run_inset_fill(InSetFill& fill, Impl& impl) {
    InSet& set = impl.in_sets[static_cast<std::size_t>(fill.set_id)];
    CompiledQuery& sub = *fill.sub;
    while (sub.fetch_row()) {
        const OutputSlot& slot = sub.outputs()[0];
        set.any_row = true;
        if (slot.is_null) {
            set.unknown_maker = true;
            continue;
        }
        if (slot.type == ColumnType::Float32 && std::isnan(slot.f)) {
            set.unknown_maker = true;
            continue;
        }
        set.values.insert(slot.value());
    }
    sub.destroy();
}

void prepare_impl(Impl& impl) {
    if (impl.prepared) return;
    impl.prepared = true;
    for (const ConstInit& c : impl.consts)
        impl.state.regs[static_cast<std::size_t>(c.reg)] = c.value;
    for (InSetFill& f : impl.inset_phases) run_inset_fill(f, impl);
    for (Phase& ph : impl.phases) {
        switch (ph.kind) {
            case Phase::Kind::BinBounds: run_bounds_phase(ph, impl); break;
            case Phase::Kind::Aggregate: run_aggregate_phase(ph, impl); break;
            case Phase::Kind::Materialize: run_materialize_phase(ph, impl); break;
            case Phase::Kind::Sort: run_sort_phase(ph, impl); break;
        }
    }
}

// ------------------------------------------------------------- compiler ----

struct Compiler {
    Impl& impl;
    const Catalog& catalog;
    unsigned max_lanes;
    // BIN expression -> resolved bounds slot, filled when the BINNER compiles.
    std::vector<std::pair<SQLExpression, int>> bin_bounds;

    int reg_of(const SQLExpression& e) { return impl.regs.reg_of(e); }

    int register_ctx(const std::string& base, int64_t initial) {
        std::string name = base;
        int suffix = 2;
        auto taken = [&](const std::string& n) {
            for (const ContextVariable& v : impl.ctx_vars)
                if (v.name == n) return true;
            return false;
        };
        while (taken(name)) name = base + "#" + std::to_string(suffix++);
        impl.ctx_vars.push_back(ContextVariable{name, initial});
        return static_cast<int>(impl.ctx_vars.size() - 1);
    }

    const Table* data_table(const std::string& name) {
        const Table* t = catalog.find(name);
        if (!t) throw CompileError("unknown table '" + name + "'");
        if (!t->has_data())
            throw CompileError("table '" + name +
                               "' was opened without data and cannot be executed");
        return t;
    }

    void add_loaders(Pipeline& p, const Table& t, const std::vector<SQLExpression>& exprs) {
        for (const SQLExpression& e : exprs) {
            int col = t.column_index(e.column);
            if (col < 0)
                throw CompileError("table '" + t.name() + "' has no column '" + e.column + "'");
            p.loaders.push_back(make_loader(t, col, reg_of(e)));
        }
    }

    std::unique_ptr<Pipeline> compile_full_scan(const PlanNode& n) {
        const Table* t = data_table(n.table);
        auto p = std::make_unique<Pipeline>();
        p->source = Pipeline::Source::Table;
        p->table = t;
        p->scan_begin = 0;
        p->scan_end = t->row_count();
        p->pos_ctx = register_ctx("FullScan.currentRowId", 0);
        p->end_ctx = register_ctx("FullScan.endRowId", static_cast<int64_t>(p->scan_end));
        add_loaders(*p, *t, n.expressions);
        return p;
    }

    std::unique_ptr<Pipeline> compile_index_scan(const PlanNode& n) {
        const Table* t = data_table(n.table);
        int col = t->column_index(n.index_column);
        if (col < 0)
            throw CompileError("table '" + n.table + "' has no column '" + n.index_column + "'");
        const IndexFile* index = t->index(static_cast<std::size_t>(col));
        if (!index)
            throw CompileError("column '" + n.table + "." + n.index_column + "' has no index");
        IndexFile::Range range{0, index->entry_count()};
        if (n.has_range) range = index->range_for(n.range_op, n.range_key);
        auto p = std::make_unique<Pipeline>();
        p->source = Pipeline::Source::Index;
        p->table = t;
        p->index = index;
        p->scan_begin = range.begin;
        p->scan_end = range.end;
        p->pos_ctx = register_ctx("IndexScan.currentPosition", static_cast<int64_t>(range.begin));
        p->end_ctx = register_ctx("IndexScan.endPosition", static_cast<int64_t>(range.end));
        add_loaders(*p, *t, n.expressions);
        return p;
    }

    int in_set_for(const std::shared_ptr<Query>& sub) {
        auto it = impl.in_set_ids.find(sub.get());
        if (it != impl.in_set_ids.end()) return it->second;
        if (sub->fields.size() != 1)
            throw CompileError("IN subquery must produce exactly one column");
        int id = static_cast<int>(impl.in_sets.size());
        impl.in_sets.emplace_back();
        impl.in_set_ids.emplace(sub.get(), id);
        PlanPtr plan = build_plan(*sub, catalog);
        plan = optimize(std::move(plan), catalog, 1).first;
        InSetFill fill;
        fill.set_id = id;
        fill.sub = compile(catalog, std::move(plan), *sub, 1);
        impl.inset_phases.push_back(std::move(fill));
        return id;
    }

    std::unique_ptr<CNode> compile_constraint(const Constraint& c) {
        auto node = std::make_unique<CNode>();
        switch (c.kind) {
            case Constraint::Kind::True:
                node->kind = CNode::Kind::Always;
                node->always = Tri::True;
                return node;
            case Constraint::Kind::False:
                node->kind = CNode::Kind::Always;
                node->always = Tri::False;
                return node;
            case Constraint::Kind::Leaf: {
                node->kind = CNode::Kind::Leaf;
                node->op = c.op;
                node->lhs = reg_of(c.lhs);
                node->rhs = reg_of(c.rhs);
                RegType lt = reg_type_of(c.lhs.result_type());
                RegType rt = reg_type_of(c.rhs.result_type());
                if ((lt == RegType::Str) != (rt == RegType::Str))
                    throw CompileError("cannot compare string and numeric expressions");
                node->leaf = pick_leaf(lt, rt);
                return node;
            }
            case Constraint::Kind::In: {
                node->kind = CNode::Kind::In;
                node->probe = reg_of(c.lhs);
                node->probe_type = reg_type_of(c.lhs.result_type());
                if (!c.subquery->fields.empty()) {
                    RegType elem = reg_type_of(c.subquery->fields[0].result_type());
                    if ((node->probe_type == RegType::Str) != (elem == RegType::Str))
                        throw CompileError("cannot compare string and numeric expressions");
                }
                node->set = &impl.in_sets[static_cast<std::size_t>(in_set_for(c.subquery))];
                return node;
            }
            case Constraint::Kind::And:
            case Constraint::Kind::Or:
            case Constraint::Kind::Not: {
                node->kind = c.kind == Constraint::Kind::And  ? CNode::Kind::And
                             : c.kind == Constraint::Kind::Or ? CNode::Kind::Or
                                                              : CNode::Kind::Not;
                for (const Constraint& kid : c.children)
                    node->kids.push_back(compile_constraint(kid));
                return node;
            }
        }
        throw InternalError("unknown constraint kind");
    }

    SQLExpression argument_column(const SQLExpression& e) {
        return column_expr(e.table, e.column, e.column_type, e.column_nullable);
    }

    AggDesc make_agg_desc(const SQLExpression& e, const std::vector<SQLExpression>& group_exprs) {
        AggDesc d;
        if (e.is_bin()) {
            d.kind = e.bin_fn == BinFn::BinMin ? AggDesc::Kind::BinMin : AggDesc::Kind::BinMax;
            for (std::size_t g = 0; g < group_exprs.size(); ++g) {
                const SQLExpression& k = group_exprs[g];
                if (k.is_bin() && k.bin_fn == BinFn::Bin && k.table == e.table &&
                    k.column == e.column) {
                    d.key_index = static_cast<int>(g);
                    d.n = k.bin_count;
                    for (const auto& [expr, id] : bin_bounds)
                        if (expr.same_expr(k)) d.bounds_id = id;
                    break;
                }
            }
            if (d.key_index < 0 || d.bounds_id < 0)
                throw InternalError("BIN_MIN/BIN_MAX without a matching BIN group expression");
            return d;
        }
        d.fn = e.agg_fn;
        if (e.agg_star) {
            d.update = &upd_count_star;
            return d;
        }
        SQLExpression arg = argument_column(e);
        d.src = reg_of(arg);
        d.src_type = reg_type_of(arg.result_type());
        d.input_type = d.src_type == RegType::Float ? ColumnType::Float32
                       : d.src_type == RegType::Str ? ColumnType::String
                                                    : ColumnType::Int64;
        switch (e.agg_fn) {
            case AggFn::Count: d.update = &upd_count; break;
            case AggFn::Sum:
                if (d.src_type == RegType::Str) throw CompileError("SUM over a string column");
                d.update = d.src_type == RegType::Float ? &upd_sum_float : &upd_sum_int;
                break;
            case AggFn::Avg:
                if (d.src_type == RegType::Str) throw CompileError("AVG over a string column");
                d.update = d.src_type == RegType::Float ? &upd_avg_float : &upd_avg_int;
                break;
            case AggFn::Min:
                d.update = d.src_type == RegType::Int     ? &upd_extremum<true, RegType::Int>
                           : d.src_type == RegType::Float ? &upd_extremum<true, RegType::Float>
                                                          : &upd_extremum<true, RegType::Str>;
                break;
            case AggFn::Max:
                d.update = d.src_type == RegType::Int     ? &upd_extremum<false, RegType::Int>
                           : d.src_type == RegType::Float ? &upd_extremum<false, RegType::Float>
                                                          : &upd_extremum<false, RegType::Str>;
                break;
            case AggFn::CountDistinct:
                d.update = d.src_type == RegType::Int     ? &upd_distinct<RegType::Int>
                           : d.src_type == RegType::Float ? &upd_distinct<RegType::Float>
                                                          : &upd_distinct<RegType::Str>;
                break;
        }
        return d;
    }

    std::unique_ptr<Pipeline> make_buffer_source(RowBuffer* out, const std::string& ctx_name,
                                                 const std::vector<SQLExpression>& exprs) {
        auto p = std::make_unique<Pipeline>();
        p->source = Pipeline::Source::Buffer;
        p->buffer = out;
        p->buf_pos_ctx = register_ctx(ctx_name, 0);
        for (const SQLExpression& e : exprs) p->buffer_regs.push_back(reg_of(e));
        return p;
    }

    std::unique_ptr<Pipeline> compile_aggregator(const PlanNode& n, unsigned lanes) {
        auto child = compile_node(*n.children[0], 1);
        Phase ph;
        ph.kind = Phase::Kind::Aggregate;
        for (const SQLExpression& g : n.group_exprs) {
            ph.group_regs.push_back(reg_of(g));
            ph.group_types.push_back(reg_type_of(g.result_type()));
        }
        for (const SQLExpression& a : n.agg_exprs) ph.descs.push_back(make_agg_desc(a, n.group_exprs));
        for (const SQLExpression& e : n.expressions) {
            OutCol oc;
            oc.type = reg_type_of(e.result_type());
            bool found = false;
            for (std::size_t g = 0; g < n.group_exprs.size(); ++g)
                if (n.group_exprs[g].same_expr(e)) {
                    oc.from_key = true;
                    oc.index = static_cast<int>(g);
                    found = true;
                    break;
                }
            if (!found)
                for (std::size_t a = 0; a < n.agg_exprs.size(); ++a)
                    if (n.agg_exprs[a].same_expr(e)) {
                        oc.from_key = false;
                        oc.index = static_cast<int>(a);
                        found = true;
                        break;
                    }
            if (!found) throw InternalError("aggregator output is neither a key nor an aggregate");
            ph.out_cols.push_back(oc);
        }
        // Parallel lanes split the source scan's position range; anything that
        // is not a plain scan pipeline runs on one lane.
        if (lanes > 1 && (child->source == Pipeline::Source::Table ||
                          child->source == Pipeline::Source::Index)) {
            ph.lanes = lanes;
            ph.chunk_pos_ctx = child->pos_ctx;
            ph.chunk_end_ctx = child->end_ctx;
            ph.chunk_begin = child->scan_begin;
            ph.chunk_end = child->scan_end;
        }
        impl.buffers.emplace_back();
        ph.out = &impl.buffers.back();
        ph.child = std::move(child);
        RowBuffer* out = ph.out;
        impl.phases.push_back(std::move(ph));
        return make_buffer_source(out, "Aggregate.outputPosition", n.expressions);
    }

    std::unique_ptr<Pipeline> compile_sort(const PlanNode& n) {
        auto child = compile_node(*n.children[0], 1);
        Phase ph;
        ph.kind = Phase::Kind::Sort;
        for (const SQLExpression& e : n.expressions) ph.cols.push_back(reg_of(e));
        for (const Query::OrderClause& k : n.sort_keys) {
            if (k.expr.is_literal()) continue;  // a constant key cannot affect the order
            int col = -1;
            for (std::size_t i = 0; i < n.expressions.size(); ++i)
                if (n.expressions[i].same_expr(k.expr)) {
                    col = static_cast<int>(i);
                    break;
                }
            if (col < 0) throw InternalError("sort key is not produced by the sorted input");
            ph.keys.push_back(Phase::SortKey{col, k.desc, reg_type_of(k.expr.result_type())});
        }
        impl.buffers.emplace_back();
        ph.out = &impl.buffers.back();
        ph.child = std::move(child);
        RowBuffer* out = ph.out;
        impl.phases.push_back(std::move(ph));
        return make_buffer_source(out, "Sort.outputPosition", n.expressions);
    }

    std::unique_ptr<Pipeline> compile_accumulate(const PlanNode& n) {
        auto child = compile_node(*n.children[0], 1);
        Phase ph;
        ph.kind = Phase::Kind::Materialize;
        for (const SQLExpression& e : n.expressions) ph.cols.push_back(reg_of(e));
        impl.buffers.emplace_back();
        ph.out = &impl.buffers.back();
        ph.child = std::move(child);
        RowBuffer* out = ph.out;
        impl.phases.push_back(std::move(ph));
        return make_buffer_source(out, "Accumulate.outputPosition", n.expressions);
    }

    std::unique_ptr<Pipeline> compile_binner(const PlanNode& n) {
        // Phase one walks the qualifying rows once to resolve each bin's
        // bounds, so the child is compiled twice: once for the bounds pass,
        // once for the main pipeline.
        Phase bounds;
        bounds.kind = Phase::Kind::BinBounds;
        bounds.child = compile_node(*n.children[0], 1);
        Step bin_step;
        bin_step.kind = Step::Kind::Bin;
        for (const SQLExpression& spec : n.bin_specs) {
            int bounds_id = static_cast<int>(impl.bounds.size());
            impl.bounds.emplace_back();
            bin_bounds.emplace_back(spec, bounds_id);
            SQLExpression arg = argument_column(spec);
            RegType src_type = reg_type_of(arg.result_type());
            if (src_type == RegType::Str)
                throw CompileError("BIN requires a numeric column");
            bounds.specs.push_back(BoundsSpec{reg_of(arg), src_type, bounds_id});
            bin_step.bins.push_back(BinOp{reg_of(arg), reg_of(spec), bounds_id,
                                          spec.bin_count == 0 ? 1 : spec.bin_count, src_type});
        }
        impl.phases.push_back(std::move(bounds));
        auto p = compile_node(*n.children[0], 1);
        p->steps.push_back(std::move(bin_step));
        return p;
    }

    std::unique_ptr<Pipeline> compile_join(const PlanNode& n) {
        auto p = std::make_unique<Pipeline>();
        p->left = compile_node(*n.children[0], 1);
        p->right = compile_node(*n.children[1], 1);
        for (const SQLExpression& e : n.children[1]->expressions)
            p->right_regs.push_back(reg_of(e));
        if (n.op == PlanOp::XJoin) {
            p->source = Pipeline::Source::Cross;
            p->cross = std::make_unique<CrossState>();
        } else {
            p->source = Pipeline::Source::Merge;
            p->left_key_reg = reg_of(n.left_key);
            p->right_key_reg = reg_of(n.right_key);
            p->left_key_type = reg_type_of(n.left_key.result_type());
            p->right_key_type = reg_type_of(n.right_key.result_type());
            if ((p->left_key_type == RegType::Str) != (p->right_key_type == RegType::Str))
                throw CompileError("cannot join a string column with a numeric column");
            p->merge = std::make_unique<MergeState>();
        }
        return p;
    }

    std::unique_ptr<Pipeline> compile_node(const PlanNode& n, unsigned lanes) {
        switch (n.op) {
            case PlanOp::FullScan: return compile_full_scan(n);
            case PlanOp::IndexScan: return compile_index_scan(n);
            case PlanOp::Constraint: {
                auto p = compile_node(*n.children[0], 1);
                Step s;
                s.kind = Step::Kind::Filter;
                s.tree = compile_constraint(n.constraint);
                p->steps.push_back(std::move(s));
                return p;
            }
            case PlanOp::Limit: {
                auto p = compile_node(*n.children[0], 1);
                Step s;
                s.kind = Step::Kind::Limit;
                s.limit_ctx = register_ctx("Limit.currentPosition", 0);
                s.limit_skip = n.offset;
                s.limit_cap = n.limit == NO_LIMIT || n.offset > NO_LIMIT - n.limit
                                  ? NO_LIMIT
                                  : n.offset + n.limit;
                p->steps.push_back(std::move(s));
                return p;
            }
            case PlanOp::Debug: {
                auto p = compile_node(*n.children[0], 1);
                Step s;
                s.kind = Step::Kind::Debug;
                for (const SQLExpression& e : n.expressions)
                    s.debug_cols.push_back(DebugCol{reg_of(e), reg_type_of(e.result_type())});
                p->steps.push_back(std::move(s));
                return p;
            }
            case PlanOp::Binner: return compile_binner(n);
            case PlanOp::Aggregator: return compile_aggregator(n, lanes);
            case PlanOp::ParallelAggregator: {
                if (n.children[0]->op != PlanOp::Aggregator)
                    throw InternalError("parallel aggregation requires an aggregator input");
                unsigned lane_count = std::min(n.lanes == 0 ? 1u : n.lanes,
                                               max_lanes == 0 ? 1u : max_lanes);
                return compile_node(*n.children[0], lane_count < 1 ? 1 : lane_count);
            }
            case PlanOp::Sort: return compile_sort(n);
            case PlanOp::Accumulate: return compile_accumulate(n);
            case PlanOp::MergeJoin:
            case PlanOp::XJoin: return compile_join(n);
        }
        throw InternalError("unknown plan operator");
    }
};

}  // namespace

// --------------------------------------------------------------- facade ----

Value OutputSlot::value() const {
    if (is_null) return Value::null();
    switch (type) {
        case ColumnType::Bool: return Value::boolean(i != 0);
        case ColumnType::Int8: return Value::int8(static_cast<int8_t>(i));
        case ColumnType::Int16: return Value::int16(static_cast<int16_t>(i));
        case ColumnType::Int32: return Value::int32(static_cast<int32_t>(i));
        case ColumnType::Int64: return Value::int64(i);
        case ColumnType::Float32: return Value::float32(static_cast<float>(f));
        case ColumnType::String: return Value::string(std::string(s));
    }
    return Value::null();
}

CompiledQuery::CompiledQuery() : impl_(std::make_unique<Impl>()) {}
CompiledQuery::~CompiledQuery() = default;
CompiledQuery::CompiledQuery(CompiledQuery&&) noexcept = default;
CompiledQuery& CompiledQuery::operator=(CompiledQuery&&) noexcept = default;

void CompiledQuery::init() { prepare_impl(*impl_); }

bool CompiledQuery::fetch_row() {
    Impl& impl = *impl_;
    if (impl.destroyed || impl.eof) return false;
    prepare_impl(impl);
    if (!advance(*impl.top, impl.state, impl)) {
        impl.eof = true;
        return false;
    }
    for (std::size_t i = 0; i < impl.slots.size(); ++i) {
        const Reg& r = impl.state.regs[static_cast<std::size_t>(impl.slot_refs[i].reg)];
        OutputSlot& slot = impl.slots[i];
        slot.is_null = r.null;
        slot.i = r.i;
        slot.f = r.f;
        slot.s = r.s;
    }
    return true;
}

void CompiledQuery::destroy() {
    Impl& impl = *impl_;
    if (impl.destroyed) return;
    impl.destroyed = true;
    impl.eof = true;
    impl.top.reset();
    impl.phases.clear();
    impl.inset_phases.clear();
    impl.buffers.clear();
    impl.in_sets.clear();
    impl.bounds.clear();
    impl.state = ExecState{};
}

const std::vector<OutputSlot>& CompiledQuery::outputs() const { return impl_->slots; }

const std::vector<ContextVariable>& CompiledQuery::context_variables() const {
    return impl_->ctx_vars;
}

std::unique_ptr<CompiledQuery> compile(const Catalog& catalog, PlanPtr plan, const Query& query,
                                       unsigned max_lanes) {
    auto out = std::unique_ptr<CompiledQuery>(new CompiledQuery());
    Impl& impl = *out->impl_;
    impl.plan = std::move(plan);
    impl.query = query;
    impl.max_lanes = max_lanes == 0 ? 1 : max_lanes;

    Compiler compiler{impl, catalog, impl.max_lanes, {}};
    impl.top = compiler.compile_node(*impl.plan, 1);

    for (const SQLExpression& f : impl.query.fields) {
        impl.slot_refs.push_back(SlotRef{compiler.reg_of(f)});
        OutputSlot slot;
        slot.name = f.alias.empty() ? f.display() : f.alias;
        slot.type = f.result_type();
        impl.slots.push_back(std::move(slot));
    }

    // Literal expressions become constant registers, written once per state.
    // The views point into the register table's own copies of the literals.
    for (std::size_t i = 0; i < impl.regs.exprs.size(); ++i) {
        const SQLExpression& e = impl.regs.exprs[i];
        if (!e.is_literal()) continue;
        ConstInit c;
        c.reg = static_cast<int>(i);
        if (!e.literal.is_null()) {
            c.value.null = false;
            switch (reg_type_of(e.result_type())) {
                case RegType::Int: c.value.i = e.literal.widened_int(); break;
                case RegType::Float: c.value.f = e.literal.as_double(); break;
                case RegType::Str: c.value.s = e.literal.as_string(); break;
            }
        }
        impl.consts.push_back(c);
    }

    impl.state.regs.resize(impl.regs.exprs.size());
    impl.state.ctx.reserve(impl.ctx_vars.size());
    for (const ContextVariable& v : impl.ctx_vars) impl.state.ctx.push_back(v.initial);
    return out;
}

ResultCursor::ResultCursor(std::unique_ptr<CompiledQuery> query) : query_(std::move(query)) {}

bool ResultCursor::next() {
    if (!query_->fetch_row()) return false;
    row_.clear();
    for (const OutputSlot& slot : query_->outputs()) row_.push_back(slot.value());
    return true;
}

}  // namespace snel
