#include "dmcc/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

namespace dmcc::io {

namespace {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& text) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw SchemaError(fmt::format("'{}' is not a number", text));
  return value;
}

std::size_t parse_index(const std::string& text) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw SchemaError(fmt::format("'{}' is not a node index", text));
  }
  return value;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw SchemaError(fmt::format("missing column '{}' (have: {})", name, fmt::join(header, ",")));
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  return parse_double(rows.at(row).at(col));
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  bool first = true;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    start = end + 1;
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (first) {
      table.header = std::move(fields);
      first = false;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw SchemaError(fmt::format("row with {} fields under a {}-column header", fields.size(), table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_text_file(path)); }

std::string format_csv(const CsvTable& table) {
  std::string out = fmt::format("{}\n", fmt::join(table.header, ","));
  for (const auto& row : table.rows) out += fmt::format("{}\n", fmt::join(row, ","));
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(fmt::format("cannot create directory '{}': {}", path.parent_path().string(), ec.message()));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

std::string format_db(double value) { return fmt::format("{:.6f}", value); }

std::string format_topology_csv(const network::NetworkTopology& topology) {
  std::string out = "node,x,y\n";
  for (std::size_t k = 0; k < topology.size(); ++k) {
    out += fmt::format("{},{:.17g},{:.17g}\n", k + 1, topology.positions()[k].x, topology.positions()[k].y);
  }
  out += "l,k\n";
  for (auto [l, k] : topology.edges()) out += fmt::format("{},{}\n", l + 1, k + 1);
  return out;
}

network::NetworkTopology parse_topology_csv(std::string_view text) {
  const std::size_t split = text.find("\nl,k");
  if (text.substr(0, 8) != "node,x,y" || split == std::string_view::npos) {
    throw SchemaError("topology CSV must hold a 'node,x,y' section followed by an 'l,k' section");
  }
  const CsvTable nodes = parse_csv(text.substr(0, split + 1));
  const CsvTable edges = parse_csv(text.substr(split + 1));

  std::vector<network::Point> positions(nodes.rows.size());
  for (std::size_t r = 0; r < nodes.rows.size(); ++r) {
    const std::size_t id = parse_index(nodes.rows[r][0]);
    if (id != r + 1) throw SchemaError(fmt::format("node ids must run 1..N in order; row {} has id {}", r + 1, id));
    positions[r] = {nodes.number(r, 1), nodes.number(r, 2)};
  }
  std::vector<std::pair<std::size_t, std::size_t>> edge_list;
  for (const auto& row : edges.rows) {
    const std::size_t l = parse_index(row[0]);
    const std::size_t k = parse_index(row[1]);
    if (l == 0 || k == 0 || l > positions.size() || k > positions.size()) {
      throw SchemaError(fmt::format("edge ({}, {}) references an unknown node", l, k));
    }
    edge_list.emplace_back(l - 1, k - 1);
  }
  return network::NetworkTopology(std::move(positions), std::numeric_limits<double>::quiet_NaN(), edge_list);
}

CsvTable curves_table(const experiment::RunResult& result) {
  CsvTable table;
  table.header.push_back("iteration");
  for (const auto& a : result.algorithms) table.header.push_back(a.name + "_msd_db");
  const std::size_t iterations = result.algorithms.empty() ? 0 : result.algorithms.front().msd_db.size();
  for (std::size_t i = 0; i < iterations; ++i) {
    std::vector<std::string> row{std::to_string(i + 1)};
    for (const auto& a : result.algorithms) row.push_back(format_db(a.msd_db[i]));
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable steady_state_table(const experiment::RunResult& result) {
  CsvTable table;
  table.header.push_back("node");
  for (const auto& a : result.algorithms) table.header.push_back(a.name + "_msd_db");
  const std::size_t nodes = result.algorithms.empty() ? 0 : result.algorithms.front().node_steady_db.size();
  for (std::size_t k = 0; k < nodes; ++k) {
    std::vector<std::string> row{std::to_string(k + 1)};
    for (const auto& a : result.algorithms) row.push_back(format_db(a.node_steady_db[k]));
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable sweep_table(const experiment::SweepResult& result) {
  CsvTable table;
  table.header = result.parameters;
  table.header.push_back("algo");
  table.header.push_back("msd_db");
  for (const auto& r : result.rows) {
    std::vector<std::string> row;
    for (double v : r.values) row.push_back(fmt::format("{:g}", v));
    row.push_back(r.algorithm);
    row.push_back(format_db(r.msd_db));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace dmcc::io
