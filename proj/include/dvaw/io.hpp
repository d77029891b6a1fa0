#pragma once

#include <string>
#include <vector>

namespace dvaw {

// Shortest round-trip decimal form (17 significant digits).
std::string format_double(double v);

// Parse a finite double; throws std::invalid_argument on junk.
double parse_double(const std::string& s);
long parse_long(const std::string& s);

// Write via temp file + rename so readers never observe a partial file.
void atomic_write(const std::string& path, const std::string& content);

// Whole file as a string; throws std::runtime_error if unreadable.
std::string read_file(const std::string& path);
bool file_exists(const std::string& path);

// Minimal CSV: comma-separated, newline-terminated rows, no quoting (none of
// the formats here need it). Returns rows of cells; skips a trailing blank.
std::vector<std::vector<std::string>> parse_csv(const std::string& content);

}  // namespace dvaw
