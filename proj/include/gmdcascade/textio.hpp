#pragma once

// Shared helpers for the whitespace-separated columnar text files.
// Lines starting with '#' carry "key value" metadata; an optional first
// non-comment line of non-numeric tokens is the column header.

#include <map>
#include <string>
#include <vector>

namespace gmdcascade::textio {

struct Table {
    std::map<std::string, std::string> meta;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] double meta_number(const std::string& key) const;
    [[nodiscard]] double meta_number(const std::string& key, double fallback) const;
};

[[nodiscard]] Table parse_table(const std::string& text, const std::string& origin);
[[nodiscard]] Table read_table(const std::string& path);

/// Shortest round-trip decimal representation.
[[nodiscard]] std::string fmt(double value);

[[nodiscard]] std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);
void ensure_directory(const std::string& dir);

}  // namespace gmdcascade::textio
