#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace suscept {

/// Writes through `body` into a temporary sibling, then renames over `path`.
/// Missing parent directories are created.
/// Throws Error{IoFailure} when the file cannot be written.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& body, bool binary = false);

std::string read_file(const std::filesystem::path& path, bool binary = false);

/// Lines of a text file without trailing '\r' or '\n'.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Minimal CSV splitting: comma-separated, optional double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_escape(const std::string& field);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace suscept
