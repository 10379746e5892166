#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>

namespace suscept::cli {

/// Runs one subcommand. Returns 0 on success, 1 on a domain error and 2 on
/// a usage error; diagnostics go to `err`.
int run_command(std::span<const std::string> args, std::ostream& out, std::ostream& err);

/// Aligned table view of a CSV report. Numeric cells are shown with four
/// decimals, integers as is.
void print_report(const std::filesystem::path& path, std::ostream& out);

}  // namespace suscept::cli
