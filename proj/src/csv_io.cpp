#include "cdbound/csv_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cdbound {

std::pair<std::vector<double>, std::vector<double>> read_two_column_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV file: " + path);
    std::vector<double> a, b;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        for (auto& ch : line)
            if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
        std::istringstream row(line);
        double x, y;
        if (!(row >> x >> y)) {
            if (a.empty()) continue;  // header line
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected two numeric columns");
        }
        a.push_back(x);
        b.push_back(y);
    }
    if (a.empty()) throw std::runtime_error(path + ": no numeric rows found");
    return {std::move(a), std::move(b)};
}

std::string format_double(double v) {
    char buf[64];
    // %.17g always round-trips but is noisy; try shorter forms first.
    for (int prec = 12; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        double back;
        std::sscanf(buf, "%lf", &back);
        if (back == v || (back != back && v != v)) break;
    }
    return buf;
}

}  // namespace cdbound
