// Internal helpers for line-delimited JSON files.
#pragma once

#include <fstream>
#include <functional>
#include <string>

#include "json.hpp"

#include "dialemo/error.hpp"

namespace dialemo::detail {

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "' for reading");
    return in;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    return out;
}

// Calls fn(line_number, parsed) for every non-blank line. Parse failures and
// DataErrors thrown by fn are rewrapped with the file/line context.
inline void for_each_jsonl(const std::string& path,
                           const std::function<void(std::size_t, const nlohmann::json&)>& fn) {
    auto in = open_input(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ", line " + std::to_string(lineno) + ": malformed record: " + e.what());
        }
        try {
            fn(lineno, j);
        } catch (const DataError& e) {
            throw DataError(path + ", line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (in.bad()) throw DataError("i/o failure while reading '" + path + "'");
}

inline std::string require_string(const nlohmann::json& j, const std::string& key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw DataError("missing or non-string field '" + key + "'");
    return it->get<std::string>();
}

inline std::string optional_string(const nlohmann::json& j, const std::string& key) {
    auto it = j.find(key);
    if (it == j.end()) return {};
    if (!it->is_string()) throw DataError("non-string field '" + key + "'");
    return it->get<std::string>();
}

} // namespace dialemo::detail
