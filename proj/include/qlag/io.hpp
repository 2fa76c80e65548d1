// io.hpp: CSV and JSON emission of result tables, and the matching readers.
//
// CSV layout:
//   # qlag <version>
//   # command: <subcommand>
//   # seed: <u64>
//   # flags: <JSON array of the argument list>
//   # meta <key>: <value>        (zero or more)
//   col1,col2,...
//   rows...
// Numbers are written with %.17g so they re-parse to the same double.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "qlag/errors.hpp"

namespace qlag {

inline constexpr const char* kVersion = "0.1.0";

using Cell = std::variant<double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) {
        if (row.size() != columns.size()) throw IoError("Table: row width differs from the header");
        rows.push_back(std::move(row));
    }

    std::size_t column(const std::string& name) const {
        for (std::size_t k = 0; k < columns.size(); ++k)
            if (columns[k] == name) return k;
        throw IoError("Table: no column '" + name + "'");
    }

    double number(std::size_t row, const std::string& name) const {
        const Cell& c = rows.at(row).at(column(name));
        if (const double* d = std::get_if<double>(&c)) return *d;
        throw IoError("Table: cell in column '" + name + "' is not numeric");
    }

    const std::string& text(std::size_t row, const std::string& name) const {
        const Cell& c = rows.at(row).at(column(name));
        if (const auto* s = std::get_if<std::string>(&c)) return *s;
        throw IoError("Table: cell in column '" + name + "' is not text");
    }
};

struct Document {
    std::string version{kVersion};
    std::string command;
    std::uint64_t seed{0};
    std::vector<std::string> flags;
    std::vector<std::pair<std::string, std::string>> meta;
    Table table;

    const std::string& meta_value(const std::string& key) const {
        for (const auto& [k, v] : meta)
            if (k == key) return v;
        throw IoError("Document: no meta entry '" + key + "'");
    }
};

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline bool same_cell(const Cell& a, const Cell& b) {
    if (a.index() != b.index()) return false;
    if (const double* x = std::get_if<double>(&a)) {
        const double y = std::get<double>(b);
        return (std::isnan(*x) && std::isnan(y)) || *x == y;
    }
    return std::get<std::string>(a) == std::get<std::string>(b);
}

inline Cell parse_cell(const std::string& s) {
    if (s.empty()) return s;
    const char* begin = s.c_str();
    char* end = nullptr;
    const double d = std::strtod(begin, &end);
    if (end == begin + s.size()) return d;
    return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (const char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline void check_text(const std::string& s) {
    if (s.find_first_of(",\n\r") != std::string::npos)
        throw IoError("CSV: text cell '" + s + "' contains a separator");
}

} // namespace detail

inline bool operator==(const Table& a, const Table& b) {
    if (a.columns != b.columns || a.rows.size() != b.rows.size()) return false;
    for (std::size_t r = 0; r < a.rows.size(); ++r)
        for (std::size_t c = 0; c < a.columns.size(); ++c)
            if (!detail::same_cell(a.rows[r][c], b.rows[r][c])) return false;
    return true;
}

inline bool operator==(const Document& a, const Document& b) {
    return a.version == b.version && a.command == b.command && a.seed == b.seed && a.flags == b.flags &&
           a.meta == b.meta && a.table == b.table;
}

inline std::string write_csv(const Document& doc) {
    std::ostringstream os;
    os << "# qlag " << doc.version << "\n";
    os << "# command: " << doc.command << "\n";
    os << "# seed: " << doc.seed << "\n";
    os << "# flags: " << nlohmann::json(doc.flags).dump() << "\n";
    for (const auto& [k, v] : doc.meta) {
        if (k.find(':') != std::string::npos || v.find('\n') != std::string::npos)
            throw IoError("CSV: meta entry '" + k + "' cannot be represented");
        os << "# meta " << k << ": " << v << "\n";
    }
    for (std::size_t c = 0; c < doc.table.columns.size(); ++c) {
        detail::check_text(doc.table.columns[c]);
        os << (c ? "," : "") << doc.table.columns[c];
    }
    os << "\n";
    for (const auto& row : doc.table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) os << ",";
            if (const double* d = std::get_if<double>(&row[c])) {
                os << format_double(*d);
            } else {
                const auto& s = std::get<std::string>(row[c]);
                detail::check_text(s);
                if (std::holds_alternative<double>(detail::parse_cell(s)))
                    throw IoError("CSV: text cell '" + s + "' would re-parse as a number");
                os << s;
            }
        }
        os << "\n";
    }
    return os.str();
}

inline Document read_csv(const std::string& text) {
    Document doc;
    std::istringstream is(text);
    std::string line;
    bool have_header = false;
    auto after = [](const std::string& s, const std::string& prefix) { return s.substr(prefix.size()); };
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("#", 0) == 0) {
            if (line.rfind("# qlag ", 0) == 0) {
                doc.version = after(line, "# qlag ");
            } else if (line.rfind("# command: ", 0) == 0) {
                doc.command = after(line, "# command: ");
            } else if (line.rfind("# seed: ", 0) == 0) {
                doc.seed = std::stoull(after(line, "# seed: "));
            } else if (line.rfind("# flags: ", 0) == 0) {
                try {
                    doc.flags = nlohmann::json::parse(after(line, "# flags: ")).get<std::vector<std::string>>();
                } catch (const nlohmann::json::exception& e) {
                    throw IoError(std::string("CSV: unreadable flags line: ") + e.what());
                }
            } else if (line.rfind("# meta ", 0) == 0) {
                const std::string rest = after(line, "# meta ");
                const auto colon = rest.find(": ");
                if (colon == std::string::npos) throw IoError("CSV: malformed meta line");
                doc.meta.emplace_back(rest.substr(0, colon), rest.substr(colon + 2));
            }
            continue;
        }
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (!have_header) {
            doc.table.columns = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != doc.table.columns.size()) throw IoError("CSV: row width differs from the header");
        std::vector<Cell> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(detail::parse_cell(f));
        doc.table.rows.push_back(std::move(row));
    }
    if (!have_header) throw IoError("CSV: no column header");
    return doc;
}

inline std::string write_json(const Document& doc) {
    using nlohmann::json;
    json meta = json::object();
    json meta_order = json::array();
    for (const auto& [k, v] : doc.meta) {
        meta[k] = v;
        meta_order.push_back(k);
    }
    json rows = json::array();
    for (const auto& row : doc.table.rows) {
        json r = json::array();
        for (const auto& c : row) {
            if (const double* d = std::get_if<double>(&c)) {
                if (std::isfinite(*d))
                    r.push_back(*d);
                else
                    r.push_back(format_double(*d));  // JSON has no inf/nan literals
            } else {
                r.push_back(std::get<std::string>(c));
            }
        }
        rows.push_back(std::move(r));
    }
    const json out{{"qlag", doc.version}, {"command", doc.command}, {"seed", doc.seed}, {"flags", doc.flags},
                   {"meta", meta},        {"meta_order", meta_order}, {"columns", doc.table.columns},
                   {"rows", rows}};
    return out.dump(2) + "\n";
}

inline Document read_json(const std::string& text) {
    using nlohmann::json;
    Document doc;
    try {
        const json j = json::parse(text);
        doc.version = j.at("qlag").get<std::string>();
        doc.command = j.at("command").get<std::string>();
        doc.seed = j.at("seed").get<std::uint64_t>();
        doc.flags = j.at("flags").get<std::vector<std::string>>();
        for (const auto& k : j.at("meta_order")) {
            const auto key = k.get<std::string>();
            doc.meta.emplace_back(key, j.at("meta").at(key).get<std::string>());
        }
        doc.table.columns = j.at("columns").get<std::vector<std::string>>();
        for (const auto& r : j.at("rows")) {
            std::vector<Cell> row;
            for (const auto& c : r) {
                if (c.is_number()) {
                    row.emplace_back(c.get<double>());
                } else {
                    const auto s = c.get<std::string>();
                    const Cell parsed = detail::parse_cell(s);
                    // Non-finite numbers travel as strings.
                    if (const double* d = std::get_if<double>(&parsed); d && !std::isfinite(*d))
                        row.emplace_back(*d);
                    else
                        row.emplace_back(s);
                }
            }
            if (row.size() != doc.table.columns.size()) throw IoError("JSON: row width differs from the header");
            doc.table.rows.push_back(std::move(row));
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("JSON: malformed result document: ") + e.what());
    }
    return doc;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed for '" + path + "'");
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace qlag
