#pragma once

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "cct/error.hpp"

namespace cct::csv {

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    for (auto& f : out) {
        auto b = f.find_first_not_of(" \t");
        auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return out;
}

inline double parse_number(const std::string& field, std::size_t line_no) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(field, &used);
    } catch (const std::exception&) {
        throw Error("line " + std::to_string(line_no) + ": cannot parse '" + field + "' as a number");
    }
    if (used != field.size())
        throw Error("line " + std::to_string(line_no) + ": trailing characters in '" + field + "'");
    if (!std::isfinite(v))
        throw Error("line " + std::to_string(line_no) + ": non-finite value '" + field + "'");
    return v;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return in;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    return out;
}

}  // namespace cct::csv
