#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dmcc/experiment.hpp"
#include "dmcc/network.hpp"

namespace dmcc::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a file parses but does not follow the expected columns.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws SchemaError when absent.
  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::size_t col) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);
std::string format_csv(const CsvTable& table);

std::string read_text_file(const std::filesystem::path& path);
/// Creates parent directories as needed; throws IoError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Fixed six-decimal rendering used for every MSD column.
std::string format_db(double value);

/// Two sections: `node,x,y` rows, then an `l,k` edge list. Node ids are
/// 1-based.
std::string format_topology_csv(const network::NetworkTopology& topology);
network::NetworkTopology parse_topology_csv(std::string_view text);

/// `iteration,<algo>_msd_db,...`
CsvTable curves_table(const experiment::RunResult& result);
/// `node,<algo>_msd_db,...`
CsvTable steady_state_table(const experiment::RunResult& result);
/// `<param>...,algo,msd_db`
CsvTable sweep_table(const experiment::SweepResult& result);

}  // namespace dmcc::io
