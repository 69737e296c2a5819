#include "espm/csv.hpp"

#include <fstream>
#include <sstream>

namespace espm {

int CsvTable::column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open '" + path + "'");
    CsvTable t;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (row == 1) {
            t.header = cells;
            continue;
        }
        std::vector<double> vals;
        vals.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                size_t pos = 0;
                double v = std::stod(c, &pos);
                if (pos != c.size() && c.find_first_not_of(" \t", pos) != std::string::npos)
                    throw std::invalid_argument("trailing");
                vals.push_back(v);
            } catch (const std::exception&) {
                throw CsvError("'" + path + "': malformed value '" + c + "' at row " +
                               std::to_string(row));
            }
        }
        if (vals.size() != t.header.size())
            throw CsvError("'" + path + "': wrong column count at row " + std::to_string(row));
        t.rows.push_back(std::move(vals));
    }
    if (t.header.empty()) throw CsvError("'" + path + "': missing header row");
    return t;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw CsvError("cannot write '" + path + "'");
    out.precision(12);
    for (size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? ',' : '\n');
    for (const auto& r : rows) {
        for (size_t i = 0; i < r.size(); ++i) out << r[i] << (i + 1 < r.size() ? ',' : '\n');
    }
}

}  // namespace espm
