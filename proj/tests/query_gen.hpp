#pragma once

// Randomized table and SQL generator for the oracle comparison suites. Every
// construct it emits stays inside the supported SQL subset, and the emitted
// data stays inside each column type's storable range.

#include <cinttypes>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "oracle.hpp"

struct Gen {
    std::mt19937_64 rng;

    explicit Gen(uint64_t seed) : rng(seed) {}

    int64_t irange(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(rng() % static_cast<uint64_t>(hi - lo + 1));
    }
    std::size_t pick_index(std::size_t n) { return static_cast<std::size_t>(rng() % n); }
    bool chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[pick_index(v.size())];
    }

    // ------------------------------------------------------------ tables ---

    static const std::vector<std::string>& string_pool() {
        static const std::vector<std::string> pool = {"",    "a",     "b",    "ab",  "ba",
                                                      "zed", "grape", "Zed",  "x1",  "mm",
                                                      "Foo", "bar",   "quux", "a b", "0"};
        return pool;
    }

    snel::Value random_value(snel::ColumnType t, bool nullable) {
        using snel::ColumnType;
        using snel::Value;
        if (nullable && chance(0.18)) return Value::null();
        switch (t) {
            case ColumnType::Bool: return Value::boolean(chance(0.5));
            case ColumnType::Int8: return Value::int8(static_cast<int8_t>(irange(-15, 15)));
            case ColumnType::Int16: return Value::int16(static_cast<int16_t>(irange(-15, 15)));
            case ColumnType::Int32: return Value::int32(static_cast<int32_t>(irange(-15, 15)));
            case ColumnType::Int64:
                if (chance(0.03)) return Value::int64(irange(-15, 15) * (int64_t{1} << 40));
                return Value::int64(irange(-15, 15));
            case ColumnType::Float32:
                if (chance(0.04)) return Value::float32(std::nanf(""));
                return Value::float32(static_cast<float>(irange(-60, 60)) * 0.25f);
            case ColumnType::String: return Value::string(pick(string_pool()));
        }
        return Value::null();
    }

    oracle::Table make_table(const std::string& name, std::size_t rows) {
        using snel::ColumnType;
        oracle::Table t;
        t.name = name;
        // Every table carries an integer join key with a dense value range.
        {
            TestColumn k;
            k.name = "k";
            k.type = ColumnType::Int64;
            k.nullable = chance(0.3);
            k.indexed = chance(0.7);
            for (std::size_t r = 0; r < rows; ++r) {
                if (k.nullable && chance(0.1))
                    k.values.push_back(snel::Value::null());
                else
                    k.values.push_back(snel::Value::int64(irange(-5, 5)));
            }
            t.cols.push_back(std::move(k));
        }
        static const ColumnType types[] = {ColumnType::Bool,  ColumnType::Int8,
                                           ColumnType::Int16, ColumnType::Int32,
                                           ColumnType::Int64, ColumnType::Float32,
                                           ColumnType::String};
        int extra = static_cast<int>(irange(2, 5));
        for (int c = 0; c < extra; ++c) {
            TestColumn col;
            col.name = "c" + std::to_string(c);
            col.type = types[pick_index(7)];
            col.nullable = chance(0.5);
            col.indexed = chance(0.5);
            for (std::size_t r = 0; r < rows; ++r)
                col.values.push_back(random_value(col.type, col.nullable));
            t.cols.push_back(std::move(col));
        }
        return t;
    }

    // ----------------------------------------------------------- queries ---

    static bool is_numeric(snel::ColumnType t) { return t != snel::ColumnType::String; }
    static bool summable(snel::ColumnType t) {
        return is_numeric(t) && t != snel::ColumnType::Bool;
    }

    std::string render_value(const snel::Value& v) {
        if (v.is_float()) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f", static_cast<double>(v.as_float32()));
            return buf;
        }
        if (v.is_string()) return "'" + v.as_string() + "'";
        return std::to_string(v.widened_int());
    }

    std::string literal_for(const TestColumn& c) {
        // Sample the column's own data often enough that predicates hit.
        if (chance(0.6) && !c.values.empty()) {
            for (int attempt = 0; attempt < 6; ++attempt) {
                const snel::Value& v = c.values[pick_index(c.values.size())];
                if (v.is_null()) continue;
                if (v.is_float() && std::isnan(v.as_float32())) continue;
                return render_value(v);
            }
        }
        if (c.type == snel::ColumnType::String) return "'" + pick(string_pool()) + "'";
        if (c.type == snel::ColumnType::Float32) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f", static_cast<double>(irange(-60, 60)) * 0.25);
            return buf;
        }
        return std::to_string(irange(-15, 15));
    }

    const char* cmp_op() {
        static const char* ops[] = {"=", "<>", "!=", "<", "<=", ">", ">="};
        return ops[pick_index(7)];
    }

    std::string qualified(const oracle::Table& t, const TestColumn& c) {
        return t.name + "." + c.name;
    }

    const TestColumn& any_column(const oracle::Table& t) { return pick(t.cols); }

    // A leaf predicate over one of the FROM tables.
    std::string leaf(const std::vector<const oracle::Table*>& from,
                     const std::vector<oracle::Table>& pool) {
        const oracle::Table& t = *from[pick_index(from.size())];
        const TestColumn& c = any_column(t);
        if (chance(0.15)) {
            // IN over a single-column subquery of a matching type family. No
            // LIMIT inside: without ORDER BY the kept rows would depend on
            // the inner access path. Small sources keep the reference
            // evaluator's disjunction expansion cheap.
            for (int attempt = 0; attempt < 8; ++attempt) {
                const oracle::Table& sub = pool[pick_index(pool.size())];
                if (sub.cols[0].values.size() > 2500) continue;
                std::vector<const TestColumn*> match;
                for (const TestColumn& sc : sub.cols)
                    if (is_numeric(sc.type) == is_numeric(c.type)) match.push_back(&sc);
                if (match.empty()) continue;
                const TestColumn& sc = *match[pick_index(match.size())];
                std::string q = qualified(t, c) + " IN (SELECT " + sub.name + "." + sc.name +
                                " FROM " + sub.name;
                if (chance(0.5)) {
                    const TestColumn& wc = any_column(sub);
                    q += " WHERE " + sub.name + "." + wc.name + " " + cmp_op() + " " +
                         literal_for(wc);
                }
                return q + ")";
            }
        }
        if (chance(0.3)) {
            // Column against a column of the same family, possibly cross-table.
            const oracle::Table& t2 = *from[pick_index(from.size())];
            std::vector<const TestColumn*> match;
            for (const TestColumn& c2 : t2.cols)
                if (is_numeric(c2.type) == is_numeric(c.type)) match.push_back(&c2);
            if (!match.empty()) {
                const TestColumn& c2 = *match[pick_index(match.size())];
                return qualified(t, c) + " " + cmp_op() + " " + qualified(t2, c2);
            }
        }
        return qualified(t, c) + " " + cmp_op() + " " + literal_for(c);
    }

    std::string condition(const std::vector<const oracle::Table*>& from,
                          const std::vector<oracle::Table>& pool, int depth) {
        if (depth <= 0 || chance(0.45)) return leaf(from, pool);
        double roll = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        if (roll < 0.4)
            return "(" + condition(from, pool, depth - 1) + " AND " +
                   condition(from, pool, depth - 1) + ")";
        if (roll < 0.8)
            return "(" + condition(from, pool, depth - 1) + " OR " +
                   condition(from, pool, depth - 1) + ")";
        return "(NOT " + condition(from, pool, depth - 1) + ")";
    }

    std::string order_suffix(const std::vector<std::string>& exprs) {
        if (exprs.empty() || !chance(0.5)) return "";
        std::vector<std::string> used;
        int want = chance(0.3) && exprs.size() > 1 ? 2 : 1;
        for (int i = 0; i < want; ++i) {
            const std::string& e = exprs[pick_index(exprs.size())];
            bool dup = false;
            for (const auto& u : used) dup = dup || u == e;
            if (!dup) used.push_back(e);
        }
        std::string s = " ORDER BY ";
        for (std::size_t i = 0; i < used.size(); ++i) {
            if (i) s += ", ";
            s += used[i];
            if (chance(0.4)) s += " DESC";
        }
        return s;
    }

    std::string limit_suffix(double p = 0.3) {
        if (!chance(p)) return "";
        std::string s = " LIMIT " + std::to_string(irange(0, 40));
        if (chance(0.5)) s += " OFFSET " + std::to_string(irange(0, 10));
        return s;
    }

    std::string plain_select(const oracle::Table& t, const std::vector<oracle::Table>& pool) {
        std::vector<std::string> fields;
        int nf = static_cast<int>(irange(1, 3));
        for (int i = 0; i < nf; ++i) fields.push_back(qualified(t, any_column(t)));
        if (chance(0.15)) {
            // A per-row BIN projection without grouping.
            std::vector<const TestColumn*> nums;
            for (const TestColumn& c : t.cols)
                if (summable(c.type)) nums.push_back(&c);
            if (!nums.empty())
                fields.push_back("BIN(" + qualified(t, *nums[pick_index(nums.size())]) + ", " +
                                 std::to_string(irange(1, 10)) + ")");
        }
        if (chance(0.1)) fields.push_back(std::to_string(irange(-9, 9)));
        std::string sql = "SELECT ";
        if (chance(0.15)) sql += "DISTINCT ";
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) sql += ", ";
            sql += fields[i];
        }
        sql += " FROM " + t.name;
        if (chance(0.75)) sql += " WHERE " + condition({&t}, pool, 2);
        sql += order_suffix(fields);
        sql += limit_suffix();
        return sql;
    }

    std::string agg_select(const std::vector<const oracle::Table*>& from,
                           const std::vector<oracle::Table>& pool) {
        std::vector<std::string> keys;    // rendered group expressions
        std::vector<std::string> fields;  // rendered select list
        int nkeys = static_cast<int>(irange(0, 2));
        bool used_bin = false;
        std::string bin_arg;
        for (int i = 0; i < nkeys; ++i) {
            const oracle::Table& t = *from[pick_index(from.size())];
            const TestColumn& c = any_column(t);
            std::string expr;
            if (!used_bin && summable(c.type) && chance(0.4)) {
                used_bin = true;
                bin_arg = qualified(t, c);
                expr = "BIN(" + bin_arg + ", " + std::to_string(irange(1, 10)) + ")";
            } else {
                expr = qualified(t, c);
            }
            bool dup = false;
            for (const auto& k : keys) dup = dup || k == expr;
            if (dup) continue;
            keys.push_back(expr);
            fields.push_back(expr);
        }
        if (used_bin && chance(0.6)) {
            fields.push_back("BIN_MIN(" + bin_arg + ")");
            fields.push_back("BIN_MAX(" + bin_arg + ")");
        }
        int naggs = static_cast<int>(irange(1, 3));
        for (int i = 0; i < naggs; ++i) {
            const oracle::Table& t = *from[pick_index(from.size())];
            if (chance(0.25)) {
                fields.push_back("COUNT(*)");
                continue;
            }
            double roll = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            if (roll < 0.35) {
                std::vector<const TestColumn*> nums;
                for (const TestColumn& c : t.cols)
                    if (summable(c.type)) nums.push_back(&c);
                if (!nums.empty()) {
                    const TestColumn& c = *nums[pick_index(nums.size())];
                    fields.push_back(std::string(chance(0.5) ? "SUM" : "AVG") + "(" +
                                     qualified(t, c) + ")");
                    continue;
                }
            }
            const TestColumn& c = any_column(t);
            if (roll < 0.6)
                fields.push_back(std::string(chance(0.5) ? "MIN" : "MAX") + "(" +
                                 qualified(t, c) + ")");
            else if (roll < 0.8)
                fields.push_back("COUNT(" + qualified(t, c) + ")");
            else
                fields.push_back("COUNT(DISTINCT " + qualified(t, c) + ")");
        }
        std::string sql = "SELECT ";
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) sql += ", ";
            sql += fields[i];
        }
        sql += " FROM ";
        for (std::size_t i = 0; i < from.size(); ++i) {
            if (i) sql += ", ";
            sql += from[i]->name;
        }
        std::string where;
        if (from.size() > 1) {
            where = from[0]->name + ".k = " + from[1]->name + ".k";
            if (chance(0.5)) where = "(" + where + " AND " + condition(from, pool, 1) + ")";
        } else if (chance(0.7)) {
            where = condition(from, pool, 2);
        }
        if (!where.empty()) sql += " WHERE " + where;
        if (!keys.empty()) {
            sql += " GROUP BY ";
            for (std::size_t i = 0; i < keys.size(); ++i) {
                if (i) sql += ", ";
                sql += keys[i];
            }
        }
        sql += order_suffix(fields);
        sql += limit_suffix(0.25);
        return sql;
    }

    std::string join_select(const oracle::Table& a, const oracle::Table& b,
                            const std::vector<oracle::Table>& pool) {
        std::vector<const oracle::Table*> from = {&a, &b};
        if (chance(0.3)) return agg_select(from, pool);
        std::vector<std::string> fields = {qualified(a, any_column(a)),
                                           qualified(b, any_column(b))};
        std::string sql = "SELECT " + fields[0] + ", " + fields[1] + " FROM " + a.name + ", " +
                          b.name;
        std::size_t rows_a = a.cols[0].values.size();
        std::size_t rows_b = b.cols[0].values.size();
        bool pure_cross = chance(0.2) && rows_a * rows_b <= 20000;
        if (!pure_cross) {
            std::string where = a.name + ".k = " + b.name + ".k";
            if (chance(0.5)) where = "(" + where + " AND " + condition(from, pool, 1) + ")";
            sql += " WHERE " + where;
        } else if (chance(0.5)) {
            sql += " WHERE " + condition(from, pool, 1);
        }
        sql += order_suffix(fields);
        sql += limit_suffix();
        return sql;
    }

    // `singles` and `joinables` index into `pool`: joinables stay small enough
    // for the oracle's nested-loop cross product.
    std::string make_query(const std::vector<oracle::Table>& pool,
                           const std::vector<std::size_t>& singles,
                           const std::vector<std::size_t>& joinables) {
        double roll = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        if (roll < 0.45 || joinables.size() < 2)
            return plain_select(pool[singles[pick_index(singles.size())]], pool);
        if (roll < 0.80) {
            const oracle::Table& t = pool[singles[pick_index(singles.size())]];
            return agg_select({&t}, pool);
        }
        std::size_t i = joinables[pick_index(joinables.size())];
        std::size_t j = joinables[pick_index(joinables.size())];
        while (j == i) j = joinables[pick_index(joinables.size())];
        return join_select(pool[i], pool[j], pool);
    }
};
