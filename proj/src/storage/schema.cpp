#include "storage/schema.hpp"

#include <cctype>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "common.hpp"

namespace snel {

const ColumnDescriptor* SchemaDescriptor::find_column(const std::string& name) const {
    for (const auto& col : columns)
        if (col.name == name) return &col;
    return nullptr;
}

int SchemaDescriptor::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name) return static_cast<int>(i);
    return -1;
}

bool valid_identifier(const std::string& name) {
    if (name.empty()) return false;
    unsigned char first = static_cast<unsigned char>(name[0]);
    if (!std::isalpha(first) && first != '_') return false;
    for (std::size_t i = 1; i < name.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(name[i]);
        if (!std::isalnum(c) && c != '_') return false;
    }
    return true;
}

static void validate_schema(const SchemaDescriptor& schema, const std::string& origin) {
    if (!valid_identifier(schema.table_name))
        throw DataError(origin + ": invalid table name '" + schema.table_name + "'");
    std::unordered_set<std::string> seen;
    for (const auto& col : schema.columns) {
        if (!valid_identifier(col.name))
            throw DataError(origin + ": invalid column name '" + col.name + "'");
        if (!seen.insert(col.name).second)
            throw DataError(origin + ": duplicate column '" + col.name + "'");
    }
}

SchemaDescriptor read_schema_json(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open schema file '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed JSON in '" + path + "': " + e.what());
    }
    SchemaDescriptor schema;
    try {
        schema.table_name = doc.at("table").get<std::string>();
        schema.row_count = doc.at("rows").get<uint64_t>();
        for (const auto& c : doc.at("columns")) {
            ColumnDescriptor col;
            col.name = c.at("name").get<std::string>();
            std::string tn = c.at("type").get<std::string>();
            auto type = type_from_name(tn);
            if (!type)
                throw DataError("unknown column type '" + tn + "' in '" + path + "'");
            col.type = *type;
            col.nullable = c.value("nullable", false);
            col.indexed = c.value("indexed", false);
            schema.columns.push_back(std::move(col));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed schema in '" + path + "': " + e.what());
    }
    validate_schema(schema, path);
    return schema;
}

void write_schema_json(const SchemaDescriptor& schema, const std::string& path) {
    validate_schema(schema, path);
    nlohmann::json doc;
    doc["table"] = schema.table_name;
    doc["rows"] = schema.row_count;
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& col : schema.columns) {
        cols.push_back({{"name", col.name},
                        {"type", type_name(col.type)},
                        {"nullable", col.nullable},
                        {"indexed", col.indexed}});
    }
    doc["columns"] = std::move(cols);
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot write schema file '" + path + "'");
    out << doc.dump(2) << '\n';
}

static std::string join_path(const std::string& dir, const std::string& file) {
    if (dir.empty()) return file;
    if (dir.back() == '/') return dir + file;
    return dir + "/" + file;
}

std::string column_file_path(const std::string& dir, const std::string& table,
                             const std::string& column) {
    return join_path(dir, table + "-" + column + ".snelcol");
}

std::string index_file_path(const std::string& dir, const std::string& table,
                            const std::string& column) {
    return join_path(dir, table + "-" + column + ".snelidx");
}

std::string nullmap_file_path(const std::string& dir, const std::string& table,
                              const std::string& column) {
    return join_path(dir, table + "-" + column + ".snelnull");
}

std::string schema_file_path(const std::string& dir, const std::string& table) {
    return join_path(dir, table + ".snel");
}

}  // namespace snel
