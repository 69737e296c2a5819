#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace espm {

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const;  // -1 when absent
};

// Numeric CSV with a mandatory header row. Parse failures report the
// 1-based row number.
CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace espm
