#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mortfrac {

enum ExitCode : int { kExitOk = 0, kExitFormat = 2, kExitEstimation = 3, kExitSimulation = 4 };

/// Entry point of the command-line tool. Human-readable output goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

/// Reads any table written by the tool back in; throws FormatError on ragged rows.
CsvTable parse_csv_table(std::istream& in);
CsvTable read_csv_table(const std::string& path);

}  // namespace mortfrac
