#include "gmdcascade/textio.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gmdcascade::textio {

namespace {

bool parse_double(const std::string& token, double& out) {
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

}  // namespace

double Table::meta_number(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end()) throw std::runtime_error("missing metadata '" + key + "'");
    double v = 0.0;
    if (!parse_double(it->second, v)) throw std::runtime_error("metadata '" + key + "' is not a number");
    return v;
}

double Table::meta_number(const std::string& key, double fallback) const {
    return meta.contains(key) ? meta_number(key) : fallback;
}

Table parse_table(const std::string& text, const std::string& origin) {
    Table t;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool seen_data = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        if (line[first] == '#') {
            std::istringstream ms(line.substr(first + 1));
            std::string key, value;
            if (ms >> key) {
                std::getline(ms >> std::ws, value);
                t.meta[key] = value;
            }
            continue;
        }
        std::istringstream ls(line);
        std::vector<std::string> tokens;
        for (std::string tok; ls >> tok;) tokens.push_back(tok);
        std::vector<double> row;
        row.reserve(tokens.size());
        bool numeric = true;
        for (const auto& tok : tokens) {
            double v = 0.0;
            if (!parse_double(tok, v)) {
                numeric = false;
                break;
            }
            row.push_back(v);
        }
        if (!numeric) {
            if (seen_data || !t.header.empty()) {
                throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": non-numeric value in data row");
            }
            t.header = tokens;
            continue;
        }
        seen_data = true;
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table read_table(const std::string& path) { return parse_table(read_file(path), path); }

std::string fmt(double value) {
    if (value == 0.0) return "0";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buf, ptr);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << contents;
    if (!out) throw std::runtime_error("write failed: " + path);
}

void ensure_directory(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create directory " + dir + ": " + ec.message());
}

}  // namespace gmdcascade::textio
