/*
 * snel.h — C interface to the snel columnar query library.
 *
 * A session owns a catalog of attached tables and an error message buffer.
 * Statements are prepared from SQL text, stepped row by row, and finalized.
 * All functions are thread-compatible: distinct sessions may be used from
 * distinct threads, but one session (and its statements) must not be shared
 * across threads without external synchronization.
 *
 * Every function that takes a session reports failures through its return
 * code and leaves a human-readable description in snel_errmsg().
 */
#ifndef SNEL_H
#define SNEL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. The first three double as process exit codes for tools. */
#define SNEL_OK 0          /* success */
#define SNEL_ERROR 1       /* user or data error; details in snel_errmsg() */
#define SNEL_INTERNAL 2    /* engine invariant violation */
#define SNEL_UNSUPPORTED 3 /* well-formed SQL outside the supported subset */

/* snel_step() results. */
#define SNEL_ROW 100  /* a result row is available through the column getters */
#define SNEL_DONE 101 /* end of results; stays SNEL_DONE on further calls */

/* Column type tags, as stored on disk and reported by the getters. */
#define SNEL_TYPE_BOOL 0
#define SNEL_TYPE_INT8 1
#define SNEL_TYPE_INT16 2
#define SNEL_TYPE_INT32 3
#define SNEL_TYPE_INT64 4
#define SNEL_TYPE_FLOAT 5
#define SNEL_TYPE_STRING 6

typedef struct snel_session snel_session;
typedef struct snel_stmt snel_stmt;

/* --- Session lifecycle --------------------------------------------------- */

/* Creates an empty session. Returns NULL only on allocation failure. */
snel_session* snel_open(void);

/* Destroys the session and every statement still open on it. NULL is a no-op. */
void snel_close(snel_session* session);

/* Message describing the most recent failure on this session. Never NULL;
 * empty string when no error has occurred. Valid until the next call that
 * takes this session (or one of its statements). */
const char* snel_errmsg(const snel_session* session);

/* Caps the number of parallel lanes used by query execution. 0 restores the
 * default (the machine's hardware concurrency); 1 disables parallelism.
 * Affects statements prepared after the call. */
int snel_set_max_threads(snel_session* session, unsigned n);

/* --- Tables -------------------------------------------------------------- */

/* Attaches the table described by a .snel schema file; its column files are
 * expected alongside it. The table becomes queryable under its schema name,
 * replacing any previously attached table with the same name. */
int snel_attach(snel_session* session, const char* schema_path);

/* Attaches schema metadata only: the table can be planned and explained
 * against but not executed. */
int snel_attach_metadata(snel_session* session, const char* schema_path);

/* Introspection over attached tables, in attach order. The getters return
 * NULL / a negative value when an index is out of range. Returned strings
 * are owned by the session and valid until the table is detached or
 * replaced. */
int snel_table_count(const snel_session* session);
const char* snel_table_name(const snel_session* session, int table);
int64_t snel_table_row_count(const snel_session* session, int table);
int snel_table_column_count(const snel_session* session, int table);
const char* snel_table_column_name(const snel_session* session, int table, int column);
int snel_table_column_type(const snel_session* session, int table, int column);
int snel_table_column_nullable(const snel_session* session, int table, int column);
int snel_table_column_indexed(const snel_session* session, int table, int column);

/* --- Statements ---------------------------------------------------------- */

/* Parses, plans, optimizes and compiles one SELECT statement. On success
 * stores a statement handle in *out_stmt. On failure *out_stmt is NULL and
 * the return code classifies the error: SNEL_ERROR for syntax errors (the
 * message carries the line/column position) and data problems,
 * SNEL_UNSUPPORTED for SQL outside the engine's subset, SNEL_INTERNAL for
 * engine bugs. With the environment variable SNEL_DUMP_PLAN=1 the optimized
 * plan is also written to queryplan.dot in the working directory. */
int snel_prepare(snel_session* session, const char* sql, snel_stmt** out_stmt);

/* Advances to the next result row. Returns SNEL_ROW, SNEL_DONE, or an error
 * code (after which the statement only reports SNEL_DONE). */
int snel_step(snel_stmt* stmt);

/* Result shape; valid as soon as the statement is prepared. */
int snel_column_count(const snel_stmt* stmt);
const char* snel_column_name(const snel_stmt* stmt, int column);
int snel_column_type(const snel_stmt* stmt, int column);

/* Cell accessors; valid after snel_step() returned SNEL_ROW and until the
 * next snel_step() or snel_finalize(). Out-of-range columns read as NULL /
 * zero / empty. snel_column_text() renders any type as text (booleans as
 * 0/1, floats in shortest round-trip form); it never returns NULL, and
 * returns "" for NULL cells — check snel_column_is_null() to distinguish. */
int snel_column_is_null(const snel_stmt* stmt, int column);
int64_t snel_column_int64(const snel_stmt* stmt, int column);
double snel_column_double(const snel_stmt* stmt, int column);
const char* snel_column_text(snel_stmt* stmt, int column);

/* Releases the statement. NULL is a no-op. */
void snel_finalize(snel_stmt* stmt);

/* --- Plan inspection ----------------------------------------------------- */

/* Renders the optimized plan for one SELECT statement without executing it
 * (metadata-only tables are fine). On success stores a session-owned string
 * in *out_text, valid until the next call on the session. When with_passes
 * is nonzero, a per-pass optimizer report follows the plan, separated by a
 * blank line. */
int snel_explain(snel_session* session, const char* sql, int with_passes,
                 const char** out_text);

/* --- Ingest -------------------------------------------------------------- */

typedef struct snel_import_options {
    char separator;       /* field separator, default '|' */
    uint64_t buffer_rows; /* rows buffered between flushes, default 100000 */
    int safe;             /* nonzero: abort on malformed input instead of coercing */
    const char* null_repr; /* field text treated as NULL (besides empty); may be NULL */
    int verbose;          /* nonzero: progress messages on stderr */
} snel_import_options;

/* Fills *options with the defaults above. */
void snel_import_options_init(snel_import_options* options);

/* Creates table `table_name` under out_dir from delimited text. The schema
 * file lists one `<name> <TYPE> [NULLABLE] [INDEXED]` entry per column,
 * comma-separated. input_path NULL reads standard input. options NULL uses
 * the defaults. */
int snel_import(snel_session* session, const char* table_name, const char* schema_path,
                const char* out_dir, const char* input_path,
                const snel_import_options* options);

/* Merges the source table into the destination table by the given key
 * column: matched destination rows take the source values, new columns are
 * appended as NULLABLE, destination row count never changes. Both arguments
 * are .snel schema paths. */
int snel_merge(snel_session* session, const char* source_schema_path,
               const char* dest_schema_path, const char* key_column);

/* Library version as "major.minor.patch". */
const char* snel_version(void);

#ifdef __cplusplus
}
#endif

#endif /* SNEL_H */
