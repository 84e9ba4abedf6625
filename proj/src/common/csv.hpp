#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace pmdflow::csv {

/// Shortest round-trip text for a double ("%.17g").
std::string format(double v);

class Writer {
public:
    /// Opens `path`; a non-empty `provenance` becomes the leading `# ...` line.
    Writer(const std::filesystem::path& path, const std::string& provenance);

    void header(const std::vector<std::string>& columns);
    void row(std::span<const double> values);
    void row(std::initializer_list<double> values) { row(std::span<const double>(values.begin(), values.size())); }
    /// Row of preformatted cells.
    void text_row(const std::vector<std::string>& cells);
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

struct Table {
    std::vector<std::string> comments;  // without the leading '#'
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> cells;

    int column(const std::string& name) const;  // throws Io when missing
    std::vector<double> numeric_column(const std::string& name) const;
};

Table read(const std::filesystem::path& path);

}  // namespace pmdflow::csv
