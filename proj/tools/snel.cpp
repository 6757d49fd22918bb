// snel — command line front end over the C interface (snel.h).
//
//   snel import [options] <table name> <schema file> <output directory> [input file]
//   snel merge <source.snel> <dest.snel> <key column>
//   snel query [--table <path.snel>]... [--max-threads N] [sql]
//   snel info <table.snel>
//
// Exit codes: 0 success, 1 user or data error, 2 internal error. Query
// results go to standard output, one row per line, columns separated by
// `|`, nulls printed as NULL. Without a SQL argument, `snel query` reads
// statements from standard input (terminated by `;`; `.exit` quits).

#include <unistd.h>

#include <cctype>
#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "snel.h"

namespace {

struct SessionDeleter {
    void operator()(snel_session* s) const { snel_close(s); }
};
using SessionPtr = std::unique_ptr<snel_session, SessionDeleter>;

// Maps an API status to the tool's exit code.
int exit_code(int rc) {
    if (rc == SNEL_OK) return 0;
    return rc == SNEL_INTERNAL ? 2 : 1;
}

void print_error(snel_session* session, int rc) {
    if (rc == SNEL_UNSUPPORTED)
        std::fprintf(stderr, "not supported by engine: %s\n", snel_errmsg(session));
    else
        std::fprintf(stderr, "error: %s\n", snel_errmsg(session));
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Removes a leading EXPLAIN QUERY PLAN (case-insensitive) and reports
// whether it was present.
bool strip_explain_prefix(std::string& sql) {
    static const char* kWords[] = {"EXPLAIN", "QUERY", "PLAN"};
    std::size_t pos = 0;
    for (const char* word : kWords) {
        while (pos < sql.size() && std::isspace(static_cast<unsigned char>(sql[pos]))) ++pos;
        std::size_t start = pos;
        while (pos < sql.size() && !std::isspace(static_cast<unsigned char>(sql[pos]))) ++pos;
        std::string token = sql.substr(start, pos - start);
        for (char& c : token) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (token != word) return false;
    }
    sql.erase(0, pos);
    return true;
}

// Position of the first statement-terminating `;` outside string literals,
// or npos when the buffer holds no complete statement yet.
std::size_t find_statement_end(const std::string& buf) {
    bool in_string = false;
    for (std::size_t i = 0; i < buf.size(); ++i) {
        char c = buf[i];
        if (in_string) {
            if (c == '\'') {
                if (i + 1 < buf.size() && buf[i + 1] == '\'')
                    ++i;  // escaped quote
                else
                    in_string = false;
            }
        } else if (c == '\'') {
            in_string = true;
        } else if (c == ';') {
            return i;
        }
    }
    return std::string::npos;
}

// Runs one SELECT and prints its rows.
int run_select(snel_session* session, const std::string& sql) {
    snel_stmt* stmt = nullptr;
    int rc = snel_prepare(session, sql.c_str(), &stmt);
    if (rc != SNEL_OK) return rc;
    int columns = snel_column_count(stmt);
    std::string line;
    for (;;) {
        rc = snel_step(stmt);
        if (rc != SNEL_ROW) break;
        line.clear();
        for (int i = 0; i < columns; ++i) {
            if (i > 0) line += '|';
            if (snel_column_is_null(stmt, i))
                line += "NULL";
            else
                line += snel_column_text(stmt, i);
        }
        line += '\n';
        std::fwrite(line.data(), 1, line.size(), stdout);
    }
    snel_finalize(stmt);
    return rc == SNEL_DONE ? SNEL_OK : rc;
}

// Runs one statement: either EXPLAIN QUERY PLAN <select> or a SELECT.
int run_statement(snel_session* session, std::string sql, bool with_passes) {
    if (strip_explain_prefix(sql)) {
        const char* text = nullptr;
        int rc = snel_explain(session, sql.c_str(), with_passes ? 1 : 0, &text);
        if (rc != SNEL_OK) return rc;
        std::string rendered = text;
        if (!rendered.empty() && rendered.back() != '\n') rendered += '\n';
        std::fputs(rendered.c_str(), stdout);
        return SNEL_OK;
    }
    return run_select(session, sql);
}

// Reads `;`-terminated statements from standard input until EOF or `.exit`.
int repl(snel_session* session, bool with_passes) {
    bool interactive = isatty(fileno(stdin)) != 0;
    std::string buffer, line;
    if (interactive) {
        std::fputs("snel> ", stdout);
        std::fflush(stdout);
    }
    while (std::getline(std::cin, line)) {
        if (buffer.empty() && trim(line) == ".exit") break;
        buffer += line;
        buffer += '\n';
        std::size_t end;
        while ((end = find_statement_end(buffer)) != std::string::npos) {
            std::string stmt = buffer.substr(0, end);
            buffer.erase(0, end + 1);
            // Error positions are relative to the statement text, so leading
            // blank space kept from the buffer would shift them.
            std::size_t content = stmt.find_first_not_of(" \t\r\n");
            if (content != std::string::npos) {
                int rc = run_statement(session, stmt.substr(content), with_passes);
                if (rc != SNEL_OK) print_error(session, rc);
                std::fflush(stdout);
            }
        }
        if (buffer.find_first_not_of(" \t\r\n") == std::string::npos) buffer.clear();
        if (interactive) {
            std::fputs(buffer.empty() ? "snel> " : "  ...> ", stdout);
            std::fflush(stdout);
        }
    }
    // A final statement without `;` still runs at end of input.
    std::size_t content = buffer.find_first_not_of(" \t\r\n");
    if (content != std::string::npos) {
        int rc = run_statement(session, buffer.substr(content), with_passes);
        if (rc != SNEL_OK) print_error(session, rc);
    }
    return 0;
}

int cmd_import(const std::string& table, const std::string& schema, const std::string& out_dir,
               const std::string& input, const std::string& separator, uint64_t buffer_rows,
               bool safe, const std::string& null_repr, bool verbose) {
    if (separator.size() != 1) {
        std::fprintf(stderr, "error: separator must be a single character\n");
        return 1;
    }
    snel_import_options options;
    snel_import_options_init(&options);
    options.separator = separator[0];
    options.buffer_rows = buffer_rows;
    options.safe = safe ? 1 : 0;
    options.null_repr = null_repr.c_str();
    options.verbose = verbose ? 1 : 0;
    SessionPtr session(snel_open());
    int rc = snel_import(session.get(), table.c_str(), schema.c_str(), out_dir.c_str(),
                         input.empty() ? nullptr : input.c_str(), &options);
    if (rc != SNEL_OK) print_error(session.get(), rc);
    return exit_code(rc);
}

int cmd_merge(const std::string& source, const std::string& dest, const std::string& key) {
    SessionPtr session(snel_open());
    int rc = snel_merge(session.get(), source.c_str(), dest.c_str(), key.c_str());
    if (rc != SNEL_OK) print_error(session.get(), rc);
    return exit_code(rc);
}

int cmd_query(const std::vector<std::string>& tables, unsigned max_threads,
              const std::string& sql, bool with_passes) {
    SessionPtr session(snel_open());
    if (max_threads > 0) snel_set_max_threads(session.get(), max_threads);
    for (const std::string& path : tables) {
        int rc = snel_attach(session.get(), path.c_str());
        if (rc != SNEL_OK) {
            print_error(session.get(), rc);
            return exit_code(rc);
        }
    }
    if (sql.empty()) return repl(session.get(), with_passes);
    int rc = run_statement(session.get(), sql, with_passes);
    if (rc != SNEL_OK) print_error(session.get(), rc);
    return exit_code(rc);
}

int cmd_info(const std::string& schema_path) {
    SessionPtr session(snel_open());
    int rc = snel_attach_metadata(session.get(), schema_path.c_str());
    if (rc != SNEL_OK) {
        print_error(session.get(), rc);
        return exit_code(rc);
    }
    static const char* kTypeNames[] = {"BOOL", "INT8", "INT16", "INT32",
                                       "INT64", "FLOAT", "STRING"};
    int t = snel_table_count(session.get()) - 1;
    std::printf("table: %s\n", snel_table_name(session.get(), t));
    std::printf("rows: %lld\n",
                static_cast<long long>(snel_table_row_count(session.get(), t)));
    int columns = snel_table_column_count(session.get(), t);
    for (int c = 0; c < columns; ++c) {
        int type = snel_table_column_type(session.get(), t, c);
        std::printf("  %s %s", snel_table_column_name(session.get(), t, c),
                    type >= 0 && type <= 6 ? kTypeNames[type] : "?");
        if (snel_table_column_nullable(session.get(), t, c) == 1) std::printf(" NULLABLE");
        if (snel_table_column_indexed(session.get(), t, c) == 1) std::printf(" INDEXED");
        std::printf("\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"snel — read-only columnar analytics over imported tables"};
    app.require_subcommand(1);
    app.set_version_flag("--version", snel_version());

    std::string table, schema, out_dir, input;
    std::string separator = "|", null_repr;
    uint64_t buffer_rows = 100000;
    bool safe = false, verbose = false;
    CLI::App* imp = app.add_subcommand("import", "Import delimited text into a new table");
    imp->add_option("table", table, "Name of the table to create")->required();
    imp->add_option("schema", schema, "Schema file (.snelschema)")->required();
    imp->add_option("output", out_dir, "Output directory for the table files")->required();
    imp->add_option("input", input, "Input file (standard input when omitted)");
    imp->add_option("-s", separator, "Field separator character (default: \"|\")");
    imp->add_option("-b", buffer_rows, "Buffer size, in number of rows (default: 100,000)");
    imp->add_flag("--safe", safe, "Check for invalid input (SLOWER)");
    imp->add_option("--null-repr", null_repr, "Representation for null fields");
    imp->add_flag("-v", verbose, "Be verbose");

    std::string merge_source, merge_dest, merge_key;
    CLI::App* mrg = app.add_subcommand("merge", "Merge a table into another by key");
    mrg->add_option("source", merge_source, "Source table schema (.snel)")->required();
    mrg->add_option("dest", merge_dest, "Destination table schema (.snel)")->required();
    mrg->add_option("key", merge_key, "Key column name")->required();

    std::vector<std::string> query_tables;
    unsigned max_threads = 0;
    std::string sql;
    bool with_passes = false;
    CLI::App* qry = app.add_subcommand("query", "Run SQL against attached tables");
    qry->add_option("--table", query_tables, "Table schema (.snel) to attach; repeatable")
        ->allow_extra_args(false);
    qry->add_option("--max-threads", max_threads, "Cap on parallel execution lanes")
        ->check(CLI::PositiveNumber);
    qry->add_flag("--passes", with_passes,
                  "Append the optimizer pass report to EXPLAIN QUERY PLAN output");
    qry->add_option("sql", sql, "Statement to run (reads standard input when omitted)");

    std::string info_path;
    CLI::App* inf = app.add_subcommand("info", "Show a table's schema and row count");
    inf->add_option("table", info_path, "Table schema (.snel)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (imp->parsed())
        return cmd_import(table, schema, out_dir, input, separator, buffer_rows, safe,
                          null_repr, verbose);
    if (mrg->parsed()) return cmd_merge(merge_source, merge_dest, merge_key);
    if (qry->parsed()) return cmd_query(query_tables, max_threads, sql, with_passes);
    if (inf->parsed()) return cmd_info(info_path);
    return 1;
}
