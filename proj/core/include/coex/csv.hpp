#pragma once

#include <string>
#include <vector>

namespace coex {

// 17 significant digits, enough to round-trip an IEEE double exactly.
std::string format_double(double x);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Comma-separated, one header row, no quoting (cells must not contain commas
// or newlines; the writer throws if one does).
void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

}  // namespace coex
