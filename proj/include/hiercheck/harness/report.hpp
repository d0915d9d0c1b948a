#pragma once

// Tabular results and their CSV / JSON emission. Nothing run-dependent
// (times, hostnames, worker counts) is written, so equal inputs give
// byte-identical files.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "hiercheck/errors.hpp"
#include "hiercheck/harness/config.hpp"

namespace hiercheck::harness {

using Cell = std::variant<std::string, double, std::int64_t, bool>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) {
        if (row.size() != columns.size()) throw std::logic_error("table '" + name + "': row width mismatch");
        rows.push_back(std::move(row));
    }

    std::size_t column(const std::string& c) const {
        for (std::size_t j = 0; j < columns.size(); ++j)
            if (columns[j] == c) return j;
        throw std::out_of_range("table '" + name + "' has no column '" + c + "'");
    }

    double number(std::size_t row, const std::string& c) const {
        const auto& v = rows.at(row).at(column(c));
        if (auto d = std::get_if<double>(&v)) return *d;
        if (auto i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
        throw std::logic_error("column '" + c + "' is not numeric");
    }

    std::string text(std::size_t row, const std::string& c) const {
        return std::get<std::string>(rows.at(row).at(column(c)));
    }
};

struct Report {
    std::string command;
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    std::vector<Table> tables;

    Table& table(const std::string& name) {
        for (auto& t : tables)
            if (t.name == name) return t;
        throw std::out_of_range("report has no table '" + name + "'");
    }
    const Table& table(const std::string& name) const {
        for (const auto& t : tables)
            if (t.name == name) return t;
        throw std::out_of_range("report has no table '" + name + "'");
    }
};

inline std::int64_t count_cell(std::size_t n) { return static_cast<std::int64_t>(n); }

inline std::string format_double(double x) {
    if (std::isnan(x)) return "NA";
    if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

inline std::string csv_field(const Cell& c) {
    struct V {
        std::string operator()(const std::string& s) const {
            if (s.find_first_of(",\"\n") == std::string::npos) return s;
            std::string q = "\"";
            for (char ch : s) {
                if (ch == '"') q += '"';
                q += ch;
            }
            return q + '"';
        }
        std::string operator()(double d) const { return format_double(d); }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
    };
    return std::visit(V{}, c);
}

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t j = 0; j < t.columns.size(); ++j) os << (j ? "," : "") << t.columns[j];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << csv_field(row[j]);
        os << '\n';
    }
}

inline nlohmann::ordered_json to_json(const Cell& c) {
    struct V {
        nlohmann::ordered_json operator()(const std::string& s) const { return s; }
        nlohmann::ordered_json operator()(double d) const {
            return std::isfinite(d) ? nlohmann::ordered_json(d) : nlohmann::ordered_json(nullptr);
        }
        nlohmann::ordered_json operator()(std::int64_t i) const { return i; }
        nlohmann::ordered_json operator()(bool b) const { return b; }
    };
    return std::visit(V{}, c);
}

inline nlohmann::ordered_json to_json(const Table& t) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        nlohmann::ordered_json o = nlohmann::ordered_json::object();
        for (std::size_t j = 0; j < row.size(); ++j) o[t.columns[j]] = to_json(row[j]);
        arr.push_back(std::move(o));
    }
    return arr;
}

inline nlohmann::ordered_json to_json(const Report& r) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    j["command"] = r.command;
    j["meta"] = r.meta;
    nlohmann::ordered_json tables = nlohmann::ordered_json::object();
    for (const auto& t : r.tables) tables[t.name] = to_json(t);
    j["tables"] = std::move(tables);
    return j;
}

// With an output directory: <name>.csv per table and/or <command>.json.
// Without one: everything goes to `os`.
inline std::vector<std::string> emit(const Report& r, const std::string& out_dir, Format fmt, std::ostream& os) {
    std::vector<std::string> written;
    const bool csv = fmt != Format::Json, json = fmt != Format::Csv;
    if (out_dir.empty()) {
        if (csv) {
            for (const auto& t : r.tables) {
                os << "# " << t.name << '\n';
                write_csv(os, t);
                os << '\n';
            }
        }
        if (json) os << to_json(r).dump(2) << '\n';
        return written;
    }
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw config_error("cannot create output directory '" + out_dir + "': " + ec.message());
    auto open = [&](const std::string& file) {
        const auto path = (fs::path(out_dir) / file).string();
        std::ofstream f(path, std::ios::binary);
        if (!f) throw config_error("cannot write '" + path + "'");
        written.push_back(path);
        return f;
    };
    if (csv) {
        for (const auto& t : r.tables) {
            auto f = open(t.name + ".csv");
            write_csv(f, t);
        }
    }
    if (json) {
        auto f = open(r.command + ".json");
        f << to_json(r).dump(2) << '\n';
    }
    return written;
}

}  // namespace hiercheck::harness
