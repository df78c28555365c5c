// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mmloc/error.hpp"

#include <charconv>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace mmloc::csv {

/// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ConfigError("not a number: '" + std::string(s) + "'");
    return v;
}

inline long long parse_int(std::string_view s) {
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ConfigError("not an integer: '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return fields;
}

/// Plain comma-separated writer; no quoting (fields never contain commas).
class Writer {
public:
    Writer(const std::string& path, std::string_view header) : path_(path), out_(path, std::ios::binary) {
        if (!out_)
            throw IoError("cannot write " + path);
        out_ << header << '\n';
    }

    template <typename... Fields>
    void row(const Fields&... fields) {
        bool first = true;
        ((out_ << (first ? "" : ",") << text(fields), first = false), ...);
        out_ << '\n';
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << (i ? "," : "") << format_double(values[i]);
        out_ << '\n';
    }

    void close() {
        out_.close();
        if (!out_)
            throw IoError("failed writing " + path_);
    }

private:
    static std::string text(double v) { return format_double(v); }
    static std::string text(const std::string& s) { return s; }
    static std::string text(std::string_view s) { return std::string(s); }
    static std::string text(const char* s) { return s; }
    template <typename Int>
        requires std::is_integral_v<Int>
    static std::string text(Int v) { return std::to_string(v); }

    std::string path_;
    std::ofstream out_;
};

/// Reads a file with a header line. The header must match `expected` when given.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline Table read(const std::string& path, std::string_view expected_header = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    Table t;
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError(path + ": empty file");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (!expected_header.empty() && line != expected_header)
        throw ConfigError(path + ": expected header '" + std::string(expected_header) + "'");
    for (auto f : split(line))
        t.header.emplace_back(f);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        auto fields = split(line);
        if (fields.size() != t.header.size())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                              " fields");
        t.rows.emplace_back(fields.begin(), fields.end());
    }
    return t;
}

} // namespace mmloc::csv
