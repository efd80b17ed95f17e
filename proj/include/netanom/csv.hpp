#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace netanom::csv {

// Splits one CSV line into fields. Double-quoted fields may contain commas
// and doubled quotes; no multi-line fields.
std::vector<std::string> split_line(const std::string& line);

std::string join_line(const std::vector<std::string>& fields);

// field quoted only when it contains a comma, quote, or leading/trailing space
std::string escape_field(const std::string& field);

// Reads all rows of a CSV file. Skips blank lines; strips trailing '\r'.
std::vector<std::vector<std::string>> read_file(const std::string& path);

void write_file(const std::string& path, const std::vector<std::vector<std::string>>& rows);

}  // namespace netanom::csv
