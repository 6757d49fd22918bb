#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "common.hpp"
#include "storage/table.hpp"
#include "test_util.hpp"

using namespace snel;

namespace {

std::vector<unsigned char> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<unsigned char> bytes(std::initializer_list<int> list) {
    std::vector<unsigned char> out;
    for (int b : list) out.push_back(static_cast<unsigned char>(b));
    return out;
}

}  // namespace

TEST_CASE("fixed column golden bytes") {
    TempDir tmp;
    std::string col = tmp.path() + "/t-a.snelcol";
    std::string nul = tmp.path() + "/t-a.snelnull";

    SUBCASE("int32 values") {
        write_fixed_column({Value::int64(1), Value::int64(2), Value::int64(3)},
                           ColumnType::Int32, false, col, nul);
        CHECK(read_bytes(col) == bytes({0x01, 0, 0, 0, 0x02, 0, 0, 0, 0x03, 0, 0, 0}));
        CHECK_FALSE(std::filesystem::exists(nul));
    }

    SUBCASE("int16 with a null") {
        write_fixed_column({Value::int64(5), Value::null(), Value::int64(7)},
                           ColumnType::Int16, true, col, nul);
        CHECK(read_bytes(col) == bytes({0x05, 0, 0, 0, 0x07, 0}));
        CHECK(read_bytes(nul) == bytes({0x05}));  // rows 0 and 2 valid
    }

    SUBCASE("bool accepts only 0 and 1") {
        write_fixed_column({Value::int64(0), Value::int64(1), Value::boolean(true)},
                           ColumnType::Bool, false, col, nul);
        CHECK(read_bytes(col) == bytes({0x00, 0x01, 0x01}));
        CHECK_THROWS_AS(write_fixed_column({Value::int64(2)}, ColumnType::Bool, false, col, nul),
                        DataError);
    }

    SUBCASE("float32 little endian") {
        write_fixed_column({Value::float32(1.77f)}, ColumnType::Float32, false, col, nul);
        auto raw = read_bytes(col);
        REQUIRE(raw.size() == 4);
        float back;
        std::memcpy(&back, raw.data(), 4);
        CHECK(back == 1.77f);
    }

    SUBCASE("narrowing is range checked") {
        CHECK_THROWS_AS(write_fixed_column({Value::int64(300)}, ColumnType::Int8, false, col, nul),
                        DataError);
        CHECK_THROWS_AS(
            write_fixed_column({Value::int64(-40000)}, ColumnType::Int16, false, col, nul),
            DataError);
    }

    SUBCASE("null rejected when not nullable") {
        CHECK_THROWS_WITH_AS(
            write_fixed_column({Value::int64(1), Value::null()}, ColumnType::Int32, false, col, nul),
            "null value in non-nullable column at row 1", DataError);
    }
}

TEST_CASE("text column golden bytes") {
    TempDir tmp;
    std::string col = tmp.path() + "/t-s.snelcol";

    SUBCASE("single value") {
        write_text_column({Value::string("a")}, col);
        CHECK(read_bytes(col) == bytes({0x61, 0x00, 'S', 'B',
                                        0, 0, 0, 0, 0, 0, 0, 0,      // offset of "a"
                                        4, 0, 0, 0, 0, 0, 0, 0}));   // offset table at 4
    }

    SUBCASE("single null") {
        write_text_column({Value::null()}, col);
        CHECK(read_bytes(col) == bytes({'S', 'B',
                                        0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff,
                                        2, 0, 0, 0, 0, 0, 0, 0}));
    }

    SUBCASE("two values") {
        write_text_column({Value::string("x"), Value::string("y")}, col);
        CHECK(read_bytes(col) == bytes({0x78, 0x00, 0x79, 0x00, 'S', 'B',
                                        0, 0, 0, 0, 0, 0, 0, 0,
                                        2, 0, 0, 0, 0, 0, 0, 0,
                                        6, 0, 0, 0, 0, 0, 0, 0}));
    }

    SUBCASE("embedded NUL rejected") {
        CHECK_THROWS_AS(write_text_column({Value::string(std::string("a\0b", 3))}, col), DataError);
    }

    SUBCASE("round trip with empties and nulls") {
        write_text_column({Value::string(""), Value::null(), Value::string("hello")}, col);
        TextColumn t(col, 3);
        CHECK(t.get(0) == "");
        CHECK(t.is_null(1));
        CHECK_FALSE(t.is_null(0));
        CHECK(t.get(2) == "hello");
        CHECK(t.value(2) == Value::string("hello"));
    }
}

TEST_CASE("text column corruption is detected") {
    TempDir tmp;
    std::string col = tmp.path() + "/t-s.snelcol";
    write_text_column({Value::string("x"), Value::string("y")}, col);
    auto raw = read_bytes(col);

    SUBCASE("bad sync bytes") {
        raw[4] = 'Q';
        std::ofstream(col, std::ios::binary).write(reinterpret_cast<char*>(raw.data()),
                                                   static_cast<std::streamsize>(raw.size()));
        CHECK_THROWS_AS(TextColumn(col, 2), DataError);
    }
    SUBCASE("bad trailer") {
        raw[raw.size() - 8] = 99;
        std::ofstream(col, std::ios::binary).write(reinterpret_cast<char*>(raw.data()),
                                                   static_cast<std::streamsize>(raw.size()));
        CHECK_THROWS_AS(TextColumn(col, 2), DataError);
    }
    SUBCASE("wrong row count") { CHECK_THROWS_AS(TextColumn(col, 3), DataError); }
}

TEST_CASE("fixed column read back") {
    TempDir tmp;
    std::string col = tmp.path() + "/t-a.snelcol";
    std::string nul = tmp.path() + "/t-a.snelnull";
    write_fixed_column({Value::int64(-3), Value::null(), Value::int64(250)},
                       ColumnType::Int64, true, col, nul);
    FixedColumn c(col, ColumnType::Int64, 3);
    NullBitmap nb(nul, 3);
    CHECK(c.get<int64_t>(0) == -3);
    CHECK(c.get<int64_t>(2) == 250);
    CHECK(c.value(0) == Value::int64(-3));
    CHECK(nb.valid(0));
    CHECK_FALSE(nb.valid(1));
    CHECK(nb.valid(2));
    CHECK(nb.count_valid(3) == 2);
    CHECK_THROWS_AS(FixedColumn(col, ColumnType::Int64, 4), DataError);
    CHECK_THROWS_AS(FixedColumn(col, ColumnType::Int32, 3), DataError);
}

TEST_CASE("fixed index golden bytes and lookups") {
    TempDir tmp;
    std::string col = tmp.path() + "/t-a.snelcol";
    std::string nul = tmp.path() + "/t-a.snelnull";
    std::string idx = tmp.path() + "/t-a.snelidx";
    write_fixed_column({Value::int64(7), Value::int64(3), Value::int64(3)},
                       ColumnType::Int32, false, col, nul);
    FixedColumn c(col, ColumnType::Int32, 3);
    build_fixed_index(c, NullBitmap{}, idx);
    CHECK(read_bytes(idx) == bytes({0x03, 0, 0, 0, 0x01, 0, 0, 0, 0, 0, 0, 0,
                                    0x03, 0, 0, 0, 0x02, 0, 0, 0, 0, 0, 0, 0,
                                    0x07, 0, 0, 0, 0x00, 0, 0, 0, 0, 0, 0, 0}));

    IndexFile f(idx, ColumnType::Int32, 3);
    CHECK(f.lookup(CmpOp::Eq, Value::int64(3)) == std::vector<uint64_t>{1, 2});
    CHECK(f.lookup(CmpOp::Eq, Value::int64(5)).empty());
    CHECK(f.lookup(CmpOp::Lt, Value::int64(7)) == std::vector<uint64_t>{1, 2});
    CHECK(f.lookup(CmpOp::Le, Value::int64(7)) == std::vector<uint64_t>{1, 2, 0});
    CHECK(f.lookup(CmpOp::Gt, Value::int64(3)) == std::vector<uint64_t>{0});
    CHECK(f.lookup(CmpOp::Ge, Value::int64(3)) == std::vector<uint64_t>{1, 2, 0});
    CHECK(f.lookup(CmpOp::Ge, Value::float32(3.5f)) == std::vector<uint64_t>{0});
    CHECK(f.lookup(CmpOp::Eq, Value::null()).empty());
    CHECK_THROWS_AS(f.lookup(CmpOp::Ne, Value::int64(3)), InternalError);
}

TEST_CASE("string index is a rowid list sorted by value") {
    TempDir tmp;
    std::string col = tmp.path() + "/t-s.snelcol";
    std::string idx = tmp.path() + "/t-s.snelidx";
    write_text_column({Value::string("b"), Value::string("a")}, col);
    TextColumn t(col, 2);
    build_string_index(t, idx);
    CHECK(read_bytes(idx) == bytes({1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}));

    IndexFile f(idx, &t, 2);
    CHECK(f.lookup(CmpOp::Eq, Value::string("a")) == std::vector<uint64_t>{1});
    CHECK(f.lookup(CmpOp::Ge, Value::string("a")) == std::vector<uint64_t>{1, 0});
    CHECK(f.lookup(CmpOp::Gt, Value::string("a")) == std::vector<uint64_t>{0});
    CHECK(f.lookup(CmpOp::Lt, Value::string("a")).empty());
    CHECK(f.value_at(0) == Value::string("a"));
}

TEST_CASE("index lookups agree with a linear scan") {
    TempDir tmp;
    std::mt19937_64 rng(42);

    auto check_against_scan = [&](const std::vector<Value>& values, const IndexFile& f,
                                  const Value& key) {
        for (CmpOp op : {CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq}) {
            std::vector<uint64_t> expect;
            for (uint64_t i = 0; i < values.size(); ++i) {
                if (values[i].is_null()) continue;
                auto c = sql_compare(values[i], key);
                if (!c) continue;
                bool keep = false;
                switch (op) {
                    case CmpOp::Lt: keep = *c == std::strong_ordering::less; break;
                    case CmpOp::Le: keep = *c != std::strong_ordering::greater; break;
                    case CmpOp::Gt: keep = *c == std::strong_ordering::greater; break;
                    case CmpOp::Ge: keep = *c != std::strong_ordering::less; break;
                    case CmpOp::Eq: keep = *c == std::strong_ordering::equal; break;
                    case CmpOp::Ne: break;
                }
                if (keep) expect.push_back(i);
            }
            std::vector<uint64_t> got = f.lookup(op, key);
            std::sort(got.begin(), got.end());
            CAPTURE(static_cast<int>(op));
            CAPTURE(key.to_text());
            CHECK(got == expect);
        }
    };

    SUBCASE("int16 with nulls") {
        std::vector<Value> values;
        for (int i = 0; i < 500; ++i) {
            if (rng() % 5 == 0)
                values.push_back(Value::null());
            else
                values.push_back(Value::int64(static_cast<int64_t>(rng() % 200) - 100));
        }
        std::string col = tmp.path() + "/t-a.snelcol", nul = tmp.path() + "/t-a.snelnull",
                    idx = tmp.path() + "/t-a.snelidx";
        write_fixed_column(values, ColumnType::Int16, true, col, nul);
        FixedColumn c(col, ColumnType::Int16, values.size());
        NullBitmap nb(nul, values.size());
        build_fixed_index(c, nb, idx);
        uint64_t entries = nb.count_valid(values.size());
        IndexFile f(idx, ColumnType::Int16, entries);
        for (int k = -110; k <= 110; k += 7) check_against_scan(values, f, Value::int64(k));
        check_against_scan(values, f, Value::float32(0.5f));
    }

    SUBCASE("float32 with NaN entries") {
        std::vector<Value> values;
        for (int i = 0; i < 300; ++i) {
            uint64_t r = rng() % 10;
            if (r == 0)
                values.push_back(Value::float32(std::numeric_limits<float>::quiet_NaN()));
            else
                values.push_back(Value::float32(static_cast<float>(rng() % 100) / 4.0f - 10.0f));
        }
        std::string col = tmp.path() + "/t-f.snelcol", nul = tmp.path() + "/t-f.snelnull",
                    idx = tmp.path() + "/t-f.snelidx";
        write_fixed_column(values, ColumnType::Float32, false, col, nul);
        FixedColumn c(col, ColumnType::Float32, values.size());
        build_fixed_index(c, NullBitmap{}, idx);
        IndexFile f(idx, ColumnType::Float32, values.size());
        for (float k : {-10.0f, -3.25f, 0.0f, 5.5f, 14.75f, 20.0f})
            check_against_scan(values, f, Value::float32(k));
        CHECK(f.lookup(CmpOp::Eq, Value::float32(std::numeric_limits<float>::quiet_NaN())).empty());
        CHECK(f.lookup(CmpOp::Ge, Value::float32(std::numeric_limits<float>::quiet_NaN())).empty());
    }

    SUBCASE("strings") {
        std::vector<Value> values;
        for (int i = 0; i < 400; ++i) {
            if (rng() % 7 == 0) {
                values.push_back(Value::null());
                continue;
            }
            std::string s;
            for (uint64_t n = rng() % 6; n > 0; --n) s += static_cast<char>('a' + rng() % 4);
            values.push_back(Value::string(s));
        }
        std::string col = tmp.path() + "/t-s.snelcol", idx = tmp.path() + "/t-s.snelidx";
        write_text_column(values, col);
        TextColumn t(col, values.size());
        build_string_index(t, idx);
        uint64_t entries = 0;
        for (const Value& v : values)
            if (!v.is_null()) ++entries;
        IndexFile f(idx, &t, entries);
        for (const char* k : {"", "a", "ab", "ba", "dddd", "zz"})
            check_against_scan(values, f, Value::string(k));
    }
}

TEST_CASE("schema json round trip") {
    TempDir tmp;
    SchemaDescriptor s;
    s.table_name = "people";
    s.row_count = 3;
    s.columns = {{"mdn", ColumnType::String, false, true},
                 {"eye_color", ColumnType::Int8, true, false},
                 {"height", ColumnType::Float32, true, false}};
    std::string path = schema_file_path(tmp.path(), "people");
    write_schema_json(s, path);
    SchemaDescriptor back = read_schema_json(path);
    CHECK(back.table_name == "people");
    CHECK(back.row_count == 3);
    REQUIRE(back.columns.size() == 3);
    CHECK(back.columns[0].name == "mdn");
    CHECK(back.columns[0].type == ColumnType::String);
    CHECK(back.columns[0].indexed);
    CHECK_FALSE(back.columns[0].nullable);
    CHECK(back.columns[2].type == ColumnType::Float32);
    CHECK(back.columns[2].nullable);
}

TEST_CASE("table open validates and reads") {
    TempDir tmp;
    SchemaDescriptor s;
    s.table_name = "t";
    s.row_count = 4;
    s.columns = {{"id", ColumnType::Int32, false, true},
                 {"name", ColumnType::String, true, true},
                 {"score", ColumnType::Float32, true, false}};
    write_schema_json(s, schema_file_path(tmp.path(), "t"));
    write_fixed_column({Value::int64(10), Value::int64(20), Value::int64(30), Value::int64(40)},
                       ColumnType::Int32, false, column_file_path(tmp.path(), "t", "id"),
                       nullmap_file_path(tmp.path(), "t", "id"));
    write_text_column({Value::string("ada"), Value::null(), Value::string("bob"),
                       Value::string("ada")},
                      column_file_path(tmp.path(), "t", "name"));
    write_fixed_column({Value::float32(1.5f), Value::float32(2.5f), Value::null(),
                        Value::float32(-1.0f)},
                       ColumnType::Float32, true, column_file_path(tmp.path(), "t", "score"),
                       nullmap_file_path(tmp.path(), "t", "score"));
    build_column_index(tmp.path(), s, 0);
    build_column_index(tmp.path(), s, 1);

    auto table = Table::open(tmp.path(), "t");
    CHECK(table->row_count() == 4);
    CHECK(table->has_data());
    CHECK(table->read_value(0, 2) == Value::int32(30));
    CHECK(table->read_value(1, 1).is_null());
    CHECK(table->read_value(1, 3) == Value::string("ada"));
    CHECK(table->read_value(2, 2).is_null());
    CHECK(table->read_value(2, 3) == Value::float32(-1.0f));
    REQUIRE(table->index(0) != nullptr);
    CHECK(table->index(2) == nullptr);
    CHECK(table->index(1)->lookup(CmpOp::Eq, Value::string("ada")) ==
          std::vector<uint64_t>{0, 3});

    SUBCASE("metadata only open works without data files") {
        TempDir meta;
        SchemaDescriptor big;
        big.table_name = "table1";
        big.row_count = 100000000;
        big.columns = {{"int8col1", ColumnType::Int8, false, false}};
        write_schema_json(big, schema_file_path(meta.path(), "table1"));
        auto m = Table::open_metadata(meta.path(), "table1");
        CHECK(m->row_count() == 100000000);
        CHECK_FALSE(m->has_data());
        CHECK_THROWS_AS(Table::open(meta.path(), "table1"), DataError);
    }

    SUBCASE("catalog attach and replace") {
        Catalog cat;
        Table* first = cat.attach(tmp.path(), "t");
        CHECK(cat.find("t") == first);
        CHECK(cat.find("missing") == nullptr);
        Table* again = cat.attach(tmp.path(), "t");
        CHECK(cat.find("t") == again);
        CHECK(cat.tables().size() == 1);
    }
}
