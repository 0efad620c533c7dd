// Copyright 2026 The nlom Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// RFC 4180 output: CRLF record separators, quoted fields when needed, and
// shortest round-trip decimal formatting for doubles.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

namespace nlom::io {

/// Shortest decimal string that parses back to the same double.
/// Non-finite values are written as NaN, Infinity, -Infinity.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    if (r.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, r.ptr);
}

inline std::string quote_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

using CsvField = std::variant<double, std::int64_t, std::string>;

class CsvWriter {
  public:
    CsvWriter(std::ostream& os, std::vector<std::string> header) : os_(os), columns_(header.size()) {
        if (header.empty()) throw std::invalid_argument("CsvWriter: header must not be empty");
        std::vector<CsvField> h(header.begin(), header.end());
        write(h);
    }

    void row(const std::vector<CsvField>& fields) {
        if (fields.size() != columns_) throw std::invalid_argument("CsvWriter: row width differs from header");
        write(fields);
    }

    void row(const std::vector<double>& values) {
        std::vector<CsvField> f(values.begin(), values.end());
        row(f);
    }

  private:
    void write(const std::vector<CsvField>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) os_ << ',';
            std::visit(
                [this](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) {
                        os_ << format_double(v);
                    } else if constexpr (std::is_same_v<T, std::int64_t>) {
                        os_ << v;
                    } else {
                        os_ << quote_field(v);
                    }
                },
                fields[i]);
        }
        os_ << "\r\n";
    }

    std::ostream& os_;
    std::size_t columns_;
};

}  // namespace nlom::io
