#include "common/csv.hpp"

#include <cstdio>
#include <sstream>

#include "common/error.hpp"

namespace pmdflow::csv {

std::string format(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Writer::Writer(const std::filesystem::path& path, const std::string& provenance)
    : path_(path), out_(path, std::ios::trunc) {
    if (!out_) fail(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    if (!provenance.empty()) out_ << "# " << provenance << '\n';
}

void Writer::header(const std::vector<std::string>& columns) { text_row(columns); }

void Writer::row(std::span<const double> values) {
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (k) out_ << ',';
        out_ << format(values[k]);
    }
    out_ << '\n';
}

void Writer::text_row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) out_ << ',';
        out_ << cells[k];
    }
    out_ << '\n';
}

void Writer::close() {
    out_.flush();
    if (!out_) fail(ErrorCode::Io, "write failed for '" + path_.string() + "'");
    out_.close();
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
        std::size_t b = cell.find_first_not_of(' ');
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b));
    }
    return out;
}

}  // namespace

int Table::column(const std::string& name) const {
    for (std::size_t k = 0; k < columns.size(); ++k)
        if (columns[k] == name) return static_cast<int>(k);
    fail(ErrorCode::Io, "csv column '" + name + "' not found");
}

std::vector<double> Table::numeric_column(const std::string& name) const {
    const int c = column(name);
    std::vector<double> out;
    out.reserve(cells.size());
    for (const auto& r : cells) out.push_back(std::stod(r.at(static_cast<std::size_t>(c))));
    return out;
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open '" + path.string() + "'");
    Table t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            t.comments.push_back(line.size() > 2 ? line.substr(2) : std::string());
            continue;
        }
        if (!have_header) {
            t.columns = split(line);
            have_header = true;
        } else {
            t.cells.push_back(split(line));
        }
    }
    if (!have_header) fail(ErrorCode::Io, "'" + path.string() + "' has no header row");
    return t;
}

}  // namespace pmdflow::csv
