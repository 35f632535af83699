#pragma once

// Minimal CSV writing and reading. Numbers are written in shortest round-trip
// form so reruns are byte-identical.

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rlnn::bench {

inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

class CsvWriter {
public:
    using Cell = std::variant<double, long, std::string>;

    CsvWriter(const std::string& path, std::vector<std::string> header) : out_(path), width_(header.size()) {
        if (!out_) throw std::runtime_error("cannot open " + path);
        write_row(header);
    }

    void row(const std::vector<Cell>& cells) {
        if (cells.size() != width_) throw std::logic_error("CsvWriter: row width mismatch");
        std::vector<std::string> text;
        text.reserve(cells.size());
        for (const auto& c : cells) {
            if (const auto* d = std::get_if<double>(&c)) text.push_back(format_number(*d));
            else if (const auto* l = std::get_if<long>(&c)) text.push_back(std::to_string(*l));
            else text.push_back(std::get<std::string>(c));
        }
        write_row(text);
    }

private:
    void write_row(const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
        out_ << '\n';
    }

    std::ofstream out_;
    std::size_t width_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name) return k;
        throw std::invalid_argument("csv: no column " + std::string(name));
    }

    std::vector<double> numbers(std::string_view name) const {
        const auto k = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(std::stod(r[k]));
        return out;
    }

    std::vector<std::string> strings(std::string_view name) const {
        const auto k = column(name);
        std::vector<std::string> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[k]);
        return out;
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    CsvTable t;
    std::string line;
    if (std::getline(in, line)) t.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != t.header.size()) throw std::runtime_error(path + ": ragged row");
        t.rows.push_back(std::move(cells));
    }
    return t;
}

}  // namespace rlnn::bench
