#pragma once

#include <string>
#include <vector>

namespace skorolab {

/// Locale-independent shortest round-trip formatting (bit-stable output).
std::string format_double(double x);

/// Tabular results accumulated in memory, written with "\n" line endings so
/// file digests are reproducible across platforms and thread counts.
class CsvTable {
  public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::vector<std::string> cells);
    std::vector<std::string>& header() { return header_; }
    std::size_t n_rows() const { return rows_.size(); }
    const std::vector<std::string>& row(std::size_t i) const { return rows_[i]; }

    std::string to_string() const;
    void write(const std::string& path) const;

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

std::string cell(double x);
std::string cell(int x);
std::string cell(std::size_t x);
std::string cell(bool x);
std::string cell(const char* x);
std::string cell(const std::string& x);

}  // namespace skorolab
