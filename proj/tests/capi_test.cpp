// Exercises the C interface as an external consumer: sessions, attach and
// introspection, prepare/step/column getters, error classification, explain,
// import and merge, and the plan dump switch.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "snel.h"
#include "table_builder.hpp"
#include "test_util.hpp"

namespace {

struct Session {
    snel_session* s = snel_open();
    ~Session() { snel_close(s); }
    operator snel_session*() const { return s; }
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

// Collects every row of a query as its text rendering (nulls as "NULL").
std::vector<std::vector<std::string>> fetch_all(snel_session* s, const char* sql) {
    snel_stmt* st = nullptr;
    REQUIRE_MESSAGE(snel_prepare(s, sql, &st) == SNEL_OK, snel_errmsg(s));
    std::vector<std::vector<std::string>> rows;
    int rc;
    while ((rc = snel_step(st)) == SNEL_ROW) {
        std::vector<std::string> row;
        for (int i = 0; i < snel_column_count(st); ++i)
            row.push_back(snel_column_is_null(st, i) ? "NULL" : snel_column_text(st, i));
        rows.push_back(std::move(row));
    }
    CHECK(rc == SNEL_DONE);
    snel_finalize(st);
    return rows;
}

const char* kVariablesSchema =
    "mdn STRING INDEXED,\n"
    "eye_color INT8 NULLABLE,\n"
    "height FLOAT NULLABLE\n";

const char* kVariablesRows =
    "B0A00F35C9B07D09275F55C5F5E185A2B3E5F7A1|0|1.77\n"
    "9386711E6A7D5CDD283C6BE653A8B8D1F203E7B9|2|1.52\n"
    "3328EFF287D51B65A2CDBA5E7A534B44D3C0EF1B|3|1.85\n";

// Imports the three-row variables table and returns its schema path.
std::string import_variables(snel_session* s, const std::string& dir) {
    std::string schema_path = dir + "/new_variables.snelschema";
    std::string data_path = dir + "/new_variables.csv";
    write_file(schema_path, kVariablesSchema);
    write_file(data_path, kVariablesRows);
    std::string out_dir = dir + "/tables";
    REQUIRE_MESSAGE(snel_import(s, "new_variables", schema_path.c_str(), out_dir.c_str(),
                                data_path.c_str(), nullptr) == SNEL_OK,
                    snel_errmsg(s));
    return out_dir + "/new_variables.snel";
}

}  // namespace

TEST_CASE("session lifecycle and error reporting") {
    Session s;
    REQUIRE(s.s != nullptr);
    CHECK(std::string(snel_errmsg(s)) == "");
    CHECK(std::string(snel_version()).find('.') != std::string::npos);

    CHECK(snel_attach(s, "/nonexistent/missing.snel") == SNEL_ERROR);
    CHECK(std::string(snel_errmsg(s)) != "");

    CHECK(snel_attach(s, "schema.txt") == SNEL_ERROR);
    CHECK(std::string(snel_errmsg(s)).find(".snel") != std::string::npos);

    snel_stmt* st = reinterpret_cast<snel_stmt*>(&s);
    CHECK(snel_prepare(s, "SELEC 1", &st) == SNEL_ERROR);
    CHECK(st == nullptr);
    std::string msg = snel_errmsg(s);
    CHECK(msg.find("syntax error at line 1, column") != std::string::npos);

    // A successful call clears the message.
    CHECK(snel_set_max_threads(s, 2) == SNEL_OK);
    CHECK(std::string(snel_errmsg(s)) == "");

    // Null handles are tolerated.
    snel_close(nullptr);
    snel_finalize(nullptr);
    CHECK(std::string(snel_errmsg(nullptr)) == "null session");
    CHECK(snel_table_count(nullptr) == 0);
}

TEST_CASE("import, introspection, and the imported values") {
    TempDir dir;
    Session s;
    std::string schema = import_variables(s, dir.path());
    REQUIRE(snel_attach(s, schema.c_str()) == SNEL_OK);

    REQUIRE(snel_table_count(s) == 1);
    CHECK(std::string(snel_table_name(s, 0)) == "new_variables");
    CHECK(snel_table_row_count(s, 0) == 3);
    REQUIRE(snel_table_column_count(s, 0) == 3);
    CHECK(std::string(snel_table_column_name(s, 0, 0)) == "mdn");
    CHECK(snel_table_column_type(s, 0, 0) == SNEL_TYPE_STRING);
    CHECK(snel_table_column_nullable(s, 0, 0) == 0);
    CHECK(snel_table_column_indexed(s, 0, 0) == 1);
    CHECK(std::string(snel_table_column_name(s, 0, 1)) == "eye_color");
    CHECK(snel_table_column_type(s, 0, 1) == SNEL_TYPE_INT8);
    CHECK(snel_table_column_nullable(s, 0, 1) == 1);
    CHECK(snel_table_column_indexed(s, 0, 1) == 0);
    CHECK(std::string(snel_table_column_name(s, 0, 2)) == "height");
    CHECK(snel_table_column_type(s, 0, 2) == SNEL_TYPE_FLOAT);

    // Out-of-range introspection degrades without touching the error state.
    CHECK(snel_table_name(s, 7) == nullptr);
    CHECK(snel_table_row_count(s, -1) == -1);
    CHECK(snel_table_column_type(s, 0, 9) == -1);

    snel_stmt* st = nullptr;
    REQUIRE_MESSAGE(snel_prepare(s, "SELECT height FROM new_variables", &st) == SNEL_OK,
                    snel_errmsg(s));
    REQUIRE(snel_column_count(st) == 1);
    CHECK(std::string(snel_column_name(st, 0)) == "height");
    CHECK(snel_column_type(st, 0) == SNEL_TYPE_FLOAT);

    std::vector<std::string> texts;
    while (snel_step(st) == SNEL_ROW) {
        CHECK(snel_column_is_null(st, 0) == 0);
        texts.push_back(snel_column_text(st, 0));
    }
    CHECK(texts == std::vector<std::string>{"1.77", "1.52", "1.85"});
    CHECK(snel_step(st) == SNEL_DONE);  // stays done
    snel_finalize(st);

    auto rows = fetch_all(s, "SELECT COUNT(*) FROM new_variables");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0][0] == "3");
}

TEST_CASE("typed cell getters cover every column type") {
    TempDir dir;
    write_table(dir.path(), "t",
                {{"b", snel::ColumnType::Bool, false, false,
                  {snel::Value::boolean(true), snel::Value::boolean(false)}},
                 {"i", snel::ColumnType::Int32, true, false,
                  {snel::Value::int32(-42), snel::Value::null()}},
                 {"f", snel::ColumnType::Float32, false, false,
                  {snel::Value::float32(2.5f), snel::Value::float32(-0.25f)}},
                 {"t", snel::ColumnType::String, false, false,
                  {snel::Value::string("alpha"), snel::Value::string("")}}});
    Session s;
    REQUIRE(snel_attach(s, (dir.path() + "/t.snel").c_str()) == SNEL_OK);

    snel_stmt* st = nullptr;
    REQUIRE_MESSAGE(snel_prepare(s, "SELECT b, i, f, t FROM t", &st) == SNEL_OK,
                    snel_errmsg(s));
    REQUIRE(snel_step(st) == SNEL_ROW);
    CHECK(snel_column_int64(st, 0) == 1);
    CHECK(std::string(snel_column_text(st, 0)) == "1");
    CHECK(snel_column_int64(st, 1) == -42);
    CHECK(snel_column_double(st, 1) == -42.0);
    CHECK(std::string(snel_column_text(st, 1)) == "-42");
    CHECK(snel_column_double(st, 2) == 2.5);
    CHECK(snel_column_int64(st, 2) == 2);  // float truncates toward zero
    CHECK(std::string(snel_column_text(st, 2)) == "2.5");
    CHECK(std::string(snel_column_text(st, 3)) == "alpha");

    REQUIRE(snel_step(st) == SNEL_ROW);
    CHECK(std::string(snel_column_text(st, 0)) == "0");
    CHECK(snel_column_is_null(st, 1) == 1);
    CHECK(snel_column_int64(st, 1) == 0);
    CHECK(snel_column_double(st, 1) == 0.0);
    CHECK(std::string(snel_column_text(st, 1)) == "");
    CHECK(std::string(snel_column_text(st, 2)) == "-0.25");
    CHECK(std::string(snel_column_text(st, 3)) == "");
    CHECK(snel_column_is_null(st, 3) == 0);  // empty string, not null

    // Out-of-range cells read as null/zero/empty.
    CHECK(snel_column_is_null(st, 9) == 1);
    CHECK(snel_column_int64(st, 9) == 0);
    CHECK(std::string(snel_column_text(st, 9)) == "");
    CHECK(snel_column_name(st, 9) == nullptr);

    CHECK(snel_step(st) == SNEL_DONE);
    snel_finalize(st);
}

TEST_CASE("statements the engine cannot take are classified as unsupported") {
    TempDir dir;
    write_table(dir.path(), "t",
                {{"a", snel::ColumnType::Int64, false, false, {snel::Value::int64(1)}}});
    Session s;
    REQUIRE(snel_attach(s, (dir.path() + "/t.snel").c_str()) == SNEL_OK);

    snel_stmt* st = nullptr;
    CHECK(snel_prepare(s, "SELECT a FROM t UNION SELECT a FROM t", &st) == SNEL_UNSUPPORTED);
    CHECK(st == nullptr);
    CHECK(std::string(snel_errmsg(s)).find("UNION") != std::string::npos);

    CHECK(snel_prepare(s, "SELECT nosuch FROM t", &st) == SNEL_UNSUPPORTED);
    CHECK(std::string(snel_errmsg(s)).find("nosuch") != std::string::npos);

    const char* text = nullptr;
    CHECK(snel_explain(s, "SELECT a FROM missing", 0, &text) == SNEL_UNSUPPORTED);
    CHECK(text == nullptr);
    CHECK(snel_explain(s, "SELECT a FROM t", 0, nullptr) == SNEL_ERROR);
}

TEST_CASE("metadata-only tables plan and explain but do not execute") {
    TempDir dir;
    write_table(dir.path(), "m",
                {{"a", snel::ColumnType::Int64, false, true,
                  {snel::Value::int64(1), snel::Value::int64(2)}}});
    Session s;
    REQUIRE(snel_attach_metadata(s, (dir.path() + "/m.snel").c_str()) == SNEL_OK);

    const char* text = nullptr;
    REQUIRE_MESSAGE(snel_explain(s, "SELECT a FROM m WHERE a = 1;", 0, &text) == SNEL_OK,
                    snel_errmsg(s));
    REQUIRE(text != nullptr);
    std::string plan = text;
    CHECK(plan.find("INDEX SCAN") != std::string::npos);

    const char* with_report = nullptr;
    REQUIRE(snel_explain(s, "SELECT a FROM m WHERE a = 1", 1, &with_report) == SNEL_OK);
    std::string full = with_report;
    CHECK(full.find(plan) == 0);
    CHECK(full.find("\n\n") != std::string::npos);
    CHECK(full.find("1. ") != std::string::npos);

    snel_stmt* st = nullptr;
    CHECK(snel_prepare(s, "SELECT a FROM m", &st) == SNEL_ERROR);
    CHECK(st == nullptr);
    CHECK(std::string(snel_errmsg(s)) != "");
}

TEST_CASE("thread cap applies to subsequent statements") {
    TempDir dir;
    std::vector<snel::Value> vals;
    for (int i = 0; i < 1000; ++i) vals.push_back(snel::Value::int64(i));
    write_table(dir.path(), "n", {{"v", snel::ColumnType::Int64, false, false, vals}});
    Session s;
    REQUIRE(snel_attach(s, (dir.path() + "/n.snel").c_str()) == SNEL_OK);

    for (unsigned lanes : {1u, 4u, 0u}) {
        REQUIRE(snel_set_max_threads(s, lanes) == SNEL_OK);
        auto rows = fetch_all(s, "SELECT SUM(v), COUNT(*) FROM n");
        REQUIRE(rows.size() == 1);
        CHECK(rows[0][0] == "499500");
        CHECK(rows[0][1] == "1000");
    }
}

TEST_CASE("merge through the C interface updates the destination") {
    TempDir dir;
    Session s;
    std::string source_schema = import_variables(s, dir.path());

    write_table(dir.path(), "clients",
                {{"mdn", snel::ColumnType::String, false, true,
                  {snel::Value::string("9386711E6A7D5CDD283C6BE653A8B8D1F203E7B9"),
                   snel::Value::string("FFFF000000000000000000000000000000000000")}},
                 {"age", snel::ColumnType::Int8, false, false,
                  {snel::Value::int8(41), snel::Value::int8(23)}}});
    std::string dest_schema = dir.path() + "/clients.snel";

    REQUIRE_MESSAGE(snel_merge(s, source_schema.c_str(), dest_schema.c_str(), "mdn") == SNEL_OK,
                    snel_errmsg(s));
    REQUIRE(snel_attach(s, dest_schema.c_str()) == SNEL_OK);

    auto rows = fetch_all(s, "SELECT mdn, age, height FROM clients ORDER BY age");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][1] == "23");
    CHECK(rows[0][2] == "NULL");  // unmatched row gets null in the new column
    CHECK(rows[1][1] == "41");
    CHECK(rows[1][2] == "1.52");

    CHECK(snel_merge(s, source_schema.c_str(), dest_schema.c_str(), "nokey") == SNEL_ERROR);
    CHECK(std::string(snel_errmsg(s)).find("nokey") != std::string::npos);
}

TEST_CASE("plan dump switch writes queryplan.dot") {
    TempDir dir;
    write_table(dir.path(), "t",
                {{"a", snel::ColumnType::Int64, false, false, {snel::Value::int64(1)}}});
    Session s;
    REQUIRE(snel_attach(s, (dir.path() + "/t.snel").c_str()) == SNEL_OK);

    auto previous = std::filesystem::current_path();
    std::filesystem::current_path(dir.path());
    setenv("SNEL_DUMP_PLAN", "1", 1);
    snel_stmt* st = nullptr;
    REQUIRE(snel_prepare(s, "SELECT a FROM t", &st) == SNEL_OK);
    snel_finalize(st);
    unsetenv("SNEL_DUMP_PLAN");
    std::filesystem::current_path(previous);

    std::ifstream dot(dir.path() + "/queryplan.dot");
    REQUIRE(dot.good());
    std::string first;
    std::getline(dot, first);
    CHECK(first.find("digraph") != std::string::npos);
}

TEST_CASE("closing a session releases statements still open") {
    TempDir dir;
    write_table(dir.path(), "t",
                {{"a", snel::ColumnType::Int64, false, false, {snel::Value::int64(1)}}});
    snel_session* s = snel_open();
    REQUIRE(snel_attach(s, (dir.path() + "/t.snel").c_str()) == SNEL_OK);
    snel_stmt* st = nullptr;
    REQUIRE(snel_prepare(s, "SELECT a FROM t", &st) == SNEL_OK);
    REQUIRE(snel_step(st) == SNEL_ROW);
    snel_close(s);  // must free the un-finalized statement
}
