#include <cstdio>
#include <fstream>
#include <sstream>

#include "mgthmm/harness.hpp"

namespace mgthmm {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::string format_row(const CsvRow& r) {
    std::string s;
    s += num(r.eps) + ',' + r.method + ',' + std::to_string(r.k) + ',' + std::to_string(r.L) + ',' +
         std::to_string(r.P) + ',' + std::to_string(r.m) + ',' + num(r.dt) + ',' + num(r.T) + ',' + num(r.error_l2) +
         ',' + std::to_string(r.micro_calls) + ',' + std::to_string(r.f_evals) + ',' + std::to_string(r.g_evals) +
         ',' + num(r.wall_ms);
    return s;
}

void write_csv(std::ostream& os, const std::vector<CsvRow>& rows) {
    os << kCsvHeader << '\n';
    for (const auto& r : rows) os << format_row(r) << '\n';
}

void write_csv(const std::filesystem::path& path, const std::vector<CsvRow>& rows) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write_csv(out, rows);
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw ConfigError(path.string() + ": header does not match schema");
    std::vector<CsvRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto c = split(line);
        if (c.size() != 13) throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected 13 columns");
        try {
            CsvRow r;
            r.eps = std::stod(c[0]);
            r.method = c[1];
            r.k = std::stoi(c[2]);
            r.L = std::stoi(c[3]);
            r.P = std::stoi(c[4]);
            r.m = std::stoi(c[5]);
            r.dt = std::stod(c[6]);
            r.T = std::stod(c[7]);
            r.error_l2 = std::stod(c[8]);
            r.micro_calls = std::stoull(c[9]);
            r.f_evals = std::stoull(c[10]);
            r.g_evals = std::stoull(c[11]);
            r.wall_ms = std::stod(c[12]);
            rows.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": malformed value");
        }
    }
    return rows;
}

}  // namespace mgthmm
