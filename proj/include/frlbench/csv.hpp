#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "frlbench/errors.hpp"

namespace frlbench::csv {

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes;
// embedded newlines are not supported.
inline std::vector<std::string> split_record(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

// Shortest text that parses back to the identical double.
inline std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

struct ReadOptions {
    // When set, blank cells take this value instead of raising MissingValueError.
    std::optional<double> blank_value;
};

// Numeric columns selected by name from a CSV file, in the requested order.
struct NumericColumns {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    std::size_t rows = 0;

    const std::vector<double>& at(std::string_view name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return columns[i];
        throw SchemaError(std::string(name));
    }
};

inline std::vector<std::string> read_header(std::istream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) throw EmptyFileError(path);
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
        line.erase(0, 3);
    auto header = split_record(line);
    for (auto& h : header) h = std::string(trim(h));
    return header;
}

inline std::vector<std::string> read_header(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_header(in, path);
}

inline NumericColumns read_columns(const std::string& path, std::span<const std::string> wanted,
                                   const ReadOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    const auto header = read_header(in, path);

    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i) index.emplace(header[i], i);
    std::vector<std::size_t> pos;
    for (const auto& w : wanted) {
        auto it = index.find(w);
        if (it == index.end()) throw SchemaError(w);
        pos.push_back(it->second);
    }

    NumericColumns out;
    out.names.assign(wanted.begin(), wanted.end());
    out.columns.resize(wanted.size());
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto fields = split_record(line);
        for (std::size_t k = 0; k < pos.size(); ++k) {
            const std::string_view cell = pos[k] < fields.size() ? std::string_view(fields[pos[k]]) : "";
            if (trim(cell).empty()) {
                if (!opts.blank_value) throw MissingValueError(row, wanted[k]);
                out.columns[k].push_back(*opts.blank_value);
                continue;
            }
            const auto v = parse_number(cell);
            if (!v) throw ParseError(row, wanted[k], std::string(cell));
            out.columns[k].push_back(*v);
        }
    }
    if (row == 0) throw EmptyFileError(path);
    out.rows = row;
    return out;
}

}  // namespace frlbench::csv
