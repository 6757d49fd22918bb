// C interface over the library: sessions wrap a Catalog plus an error
// buffer, statements wrap a CompiledQuery. See include/snel.h for the
// contracts; this file only adapts exceptions and lifetimes to C.

#include "snel.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "common.hpp"
#include "exec/exec.hpp"
#include "ingest/ingest.hpp"
#include "plan/optimizer.hpp"
#include "plan/plan.hpp"
#include "sql/ast.hpp"
#include "sql/query.hpp"
#include "storage/table.hpp"
#include "value.hpp"

static_assert(SNEL_TYPE_BOOL == static_cast<int>(snel::ColumnType::Bool));
static_assert(SNEL_TYPE_INT8 == static_cast<int>(snel::ColumnType::Int8));
static_assert(SNEL_TYPE_INT16 == static_cast<int>(snel::ColumnType::Int16));
static_assert(SNEL_TYPE_INT32 == static_cast<int>(snel::ColumnType::Int32));
static_assert(SNEL_TYPE_INT64 == static_cast<int>(snel::ColumnType::Int64));
static_assert(SNEL_TYPE_FLOAT == static_cast<int>(snel::ColumnType::Float32));
static_assert(SNEL_TYPE_STRING == static_cast<int>(snel::ColumnType::String));

struct snel_session {
    snel::Catalog catalog;
    unsigned max_lanes = default_lanes();
    std::string errmsg;
    std::string explain_buf;
    std::vector<snel_stmt*> stmts;

    static unsigned default_lanes() {
        unsigned n = std::thread::hardware_concurrency();
        return n == 0 ? 1 : n;
    }
};

struct snel_stmt {
    snel_session* session = nullptr;
    std::unique_ptr<snel::CompiledQuery> query;
    bool done = false;
    // Per-column text renderings of the current row, filled on demand.
    std::vector<std::string> text;
    std::vector<bool> text_ready;
};

namespace {

int fail(snel_session* s, int code, std::string message) {
    s->errmsg = std::move(message);
    return code;
}

// Runs fn and maps the library's exception hierarchy onto status codes.
template <typename Fn>
int guarded(snel_session* s, Fn&& fn) {
    s->errmsg.clear();
    try {
        return fn();
    } catch (const snel::SyntaxError& e) {
        return fail(s, SNEL_ERROR, "syntax error at line " + std::to_string(e.line) +
                                       ", column " + std::to_string(e.column) + ": " + e.what());
    } catch (const snel::BindError& e) {
        // The engine runs a SQL subset; anything lowering rejects — an
        // unknown name just as much as a construct outside the subset — is
        // a statement this engine cannot take.
        return fail(s, SNEL_UNSUPPORTED, e.what());
    } catch (const snel::InternalError& e) {
        return fail(s, SNEL_INTERNAL, e.what());
    } catch (const snel::Error& e) {  // DataError, IoError, CompileError
        return fail(s, SNEL_ERROR, e.what());
    } catch (const std::exception& e) {
        return fail(s, SNEL_INTERNAL, e.what());
    }
}

// Splits "/path/to/name.snel" into the directory and table name Table::open
// expects. A bare name or a path without extension is accepted too.
std::pair<std::string, std::string> split_schema_path(const std::string& path) {
    std::filesystem::path p(path);
    std::string ext = p.extension().string();
    if (!ext.empty() && ext != ".snel")
        throw snel::DataError("expected a .snel schema path, got '" + path + "'");
    std::string dir = p.parent_path().string();
    if (dir.empty()) dir = ".";
    return {dir, p.stem().string()};
}

int attach_common(snel_session* session, const char* schema_path, bool metadata_only) {
    if (!session) return SNEL_ERROR;
    return guarded(session, [&] {
        if (!schema_path) throw snel::DataError("schema path is null");
        auto [dir, name] = split_schema_path(schema_path);
        session->catalog.attach(dir, name, metadata_only);
        return SNEL_OK;
    });
}

const snel::Table* table_at(const snel_session* session, int table) {
    if (!session) return nullptr;
    auto tables = session->catalog.tables();
    if (table < 0 || static_cast<std::size_t>(table) >= tables.size()) return nullptr;
    return tables[table];
}

const snel::ColumnDescriptor* column_at(const snel_session* session, int table, int column) {
    const snel::Table* t = table_at(session, table);
    if (!t || column < 0 || static_cast<std::size_t>(column) >= t->column_count()) return nullptr;
    return &t->column(column);
}

// Parse, lower, plan and optimize one SELECT. Shared by prepare and explain.
struct Planned {
    snel::Query query;
    snel::PlanPtr plan;
    snel::PassReport report;
};

Planned plan_statement(snel_session* session, const char* sql) {
    if (!sql) throw snel::DataError("sql text is null");
    snel::AstSelect ast = snel::parse_select(sql);
    snel::Query query = snel::lower_to_query(ast, session->catalog);
    snel::PlanPtr plan = snel::build_plan(query, session->catalog);
    auto [optimized, report] = snel::optimize(std::move(plan), session->catalog,
                                              session->max_lanes);
    return {std::move(query), std::move(optimized), std::move(report)};
}

const snel::OutputSlot* slot_at(const snel_stmt* stmt, int column) {
    if (!stmt || !stmt->query) return nullptr;
    const auto& outputs = stmt->query->outputs();
    if (column < 0 || static_cast<std::size_t>(column) >= outputs.size()) return nullptr;
    return &outputs[column];
}

}  // namespace

extern "C" {

snel_session* snel_open(void) {
    try {
        return new snel_session;
    } catch (...) {
        return nullptr;
    }
}

void snel_close(snel_session* session) {
    if (!session) return;
    for (snel_stmt* stmt : session->stmts) delete stmt;
    delete session;
}

const char* snel_errmsg(const snel_session* session) {
    return session ? session->errmsg.c_str() : "null session";
}

int snel_set_max_threads(snel_session* session, unsigned n) {
    if (!session) return SNEL_ERROR;
    session->errmsg.clear();
    session->max_lanes = n == 0 ? snel_session::default_lanes() : n;
    return SNEL_OK;
}

int snel_attach(snel_session* session, const char* schema_path) {
    return attach_common(session, schema_path, false);
}

int snel_attach_metadata(snel_session* session, const char* schema_path) {
    return attach_common(session, schema_path, true);
}

int snel_table_count(const snel_session* session) {
    return session ? static_cast<int>(session->catalog.tables().size()) : 0;
}

const char* snel_table_name(const snel_session* session, int table) {
    const snel::Table* t = table_at(session, table);
    return t ? t->name().c_str() : nullptr;
}

int64_t snel_table_row_count(const snel_session* session, int table) {
    const snel::Table* t = table_at(session, table);
    return t ? static_cast<int64_t>(t->row_count()) : -1;
}

int snel_table_column_count(const snel_session* session, int table) {
    const snel::Table* t = table_at(session, table);
    return t ? static_cast<int>(t->column_count()) : -1;
}

const char* snel_table_column_name(const snel_session* session, int table, int column) {
    const snel::ColumnDescriptor* c = column_at(session, table, column);
    return c ? c->name.c_str() : nullptr;
}

int snel_table_column_type(const snel_session* session, int table, int column) {
    const snel::ColumnDescriptor* c = column_at(session, table, column);
    return c ? static_cast<int>(c->type) : -1;
}

int snel_table_column_nullable(const snel_session* session, int table, int column) {
    const snel::ColumnDescriptor* c = column_at(session, table, column);
    return c ? (c->nullable ? 1 : 0) : -1;
}

int snel_table_column_indexed(const snel_session* session, int table, int column) {
    const snel::ColumnDescriptor* c = column_at(session, table, column);
    return c ? (c->indexed ? 1 : 0) : -1;
}

int snel_prepare(snel_session* session, const char* sql, snel_stmt** out_stmt) {
    if (out_stmt) *out_stmt = nullptr;
    if (!session) return SNEL_ERROR;
    return guarded(session, [&] {
        if (!out_stmt) throw snel::DataError("output statement pointer is null");
        Planned p = plan_statement(session, sql);
        const char* dump = std::getenv("SNEL_DUMP_PLAN");
        if (dump && std::strcmp(dump, "1") == 0)
            std::ofstream("queryplan.dot") << snel::plan_to_dot(*p.plan);
        auto compiled = snel::compile(session->catalog, std::move(p.plan), p.query,
                                      session->max_lanes);
        auto stmt = std::make_unique<snel_stmt>();
        stmt->session = session;
        stmt->query = std::move(compiled);
        stmt->text.resize(stmt->query->outputs().size());
        stmt->text_ready.assign(stmt->text.size(), false);
        session->stmts.push_back(stmt.get());
        *out_stmt = stmt.release();
        return SNEL_OK;
    });
}

int snel_step(snel_stmt* stmt) {
    if (!stmt || !stmt->session) return SNEL_ERROR;
    if (stmt->done) return SNEL_DONE;
    int rc = guarded(stmt->session, [&] {
        stmt->text_ready.assign(stmt->text_ready.size(), false);
        if (stmt->query->fetch_row()) return SNEL_ROW;
        stmt->done = true;
        return SNEL_DONE;
    });
    if (rc != SNEL_ROW && rc != SNEL_DONE) stmt->done = true;
    return rc;
}

int snel_column_count(const snel_stmt* stmt) {
    return stmt && stmt->query ? static_cast<int>(stmt->query->outputs().size()) : 0;
}

const char* snel_column_name(const snel_stmt* stmt, int column) {
    const snel::OutputSlot* slot = slot_at(stmt, column);
    return slot ? slot->name.c_str() : nullptr;
}

int snel_column_type(const snel_stmt* stmt, int column) {
    const snel::OutputSlot* slot = slot_at(stmt, column);
    return slot ? static_cast<int>(slot->type) : -1;
}

int snel_column_is_null(const snel_stmt* stmt, int column) {
    const snel::OutputSlot* slot = slot_at(stmt, column);
    return !slot || slot->is_null ? 1 : 0;
}

int64_t snel_column_int64(const snel_stmt* stmt, int column) {
    const snel::OutputSlot* slot = slot_at(stmt, column);
    if (!slot || slot->is_null) return 0;
    if (slot->type == snel::ColumnType::Float32) return static_cast<int64_t>(slot->f);
    return slot->i;
}

double snel_column_double(const snel_stmt* stmt, int column) {
    const snel::OutputSlot* slot = slot_at(stmt, column);
    if (!slot || slot->is_null) return 0.0;
    if (slot->type == snel::ColumnType::Float32) return slot->f;
    return static_cast<double>(slot->i);
}

const char* snel_column_text(snel_stmt* stmt, int column) {
    const snel::OutputSlot* slot = slot_at(stmt, column);
    if (!slot) return "";
    if (!stmt->text_ready[column]) {
        stmt->text[column] = slot->is_null ? std::string() : slot->value().to_text();
        stmt->text_ready[column] = true;
    }
    return stmt->text[column].c_str();
}

void snel_finalize(snel_stmt* stmt) {
    if (!stmt) return;
    if (stmt->session) {
        auto& open = stmt->session->stmts;
        open.erase(std::remove(open.begin(), open.end(), stmt), open.end());
    }
    delete stmt;
}

int snel_explain(snel_session* session, const char* sql, int with_passes,
                 const char** out_text) {
    if (out_text) *out_text = nullptr;
    if (!session) return SNEL_ERROR;
    return guarded(session, [&] {
        if (!out_text) throw snel::DataError("output text pointer is null");
        Planned p = plan_statement(session, sql);
        session->explain_buf = snel::explain(*p.plan);
        if (with_passes) {
            if (!session->explain_buf.empty() && session->explain_buf.back() != '\n')
                session->explain_buf += '\n';
            session->explain_buf += '\n';
            session->explain_buf += p.report.to_text();
        }
        *out_text = session->explain_buf.c_str();
        return SNEL_OK;
    });
}

void snel_import_options_init(snel_import_options* options) {
    if (!options) return;
    options->separator = '|';
    options->buffer_rows = 100000;
    options->safe = 0;
    options->null_repr = nullptr;
    options->verbose = 0;
}

int snel_import(snel_session* session, const char* table_name, const char* schema_path,
                const char* out_dir, const char* input_path,
                const snel_import_options* options) {
    if (!session) return SNEL_ERROR;
    return guarded(session, [&] {
        if (!table_name || !schema_path || !out_dir)
            throw snel::DataError("table name, schema path and output directory are required");
        snel::SchemaDescriptor schema = snel::parse_snelschema_file(schema_path);
        schema.table_name = table_name;
        snel::ImportOptions opts;
        if (options) {
            opts.separator = options->separator;
            opts.buffer_rows = options->buffer_rows;
            opts.safe = options->safe != 0;
            if (options->null_repr) opts.null_repr = options->null_repr;
            opts.verbose = options->verbose != 0;
        }
        if (input_path) {
            std::ifstream in(input_path, std::ios::binary);
            if (!in) throw snel::IoError(std::string("cannot open input file '") + input_path +
                                         "'");
            snel::import_delimited(in, std::move(schema), opts, out_dir);
        } else {
            snel::import_delimited(std::cin, std::move(schema), opts, out_dir);
        }
        return SNEL_OK;
    });
}

int snel_merge(snel_session* session, const char* source_schema_path,
               const char* dest_schema_path, const char* key_column) {
    if (!session) return SNEL_ERROR;
    return guarded(session, [&] {
        if (!source_schema_path || !dest_schema_path || !key_column)
            throw snel::DataError("source schema, destination schema and key column are required");
        snel::merge_tables(source_schema_path, dest_schema_path, key_column);
        return SNEL_OK;
    });
}

const char* snel_version(void) { return "1.0.0"; }

}  // extern "C"
