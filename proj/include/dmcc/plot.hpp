#pragma once

#include <filesystem>
#include <string>

#include "dmcc/csv.hpp"
#include "dmcc/network.hpp"

namespace dmcc::plot {

enum class PlotKind {
  curves,        // iteration,<name>_msd_db,...   one polyline per column
  steady_state,  // node,<name>_msd_db,...        grouped markers per node
  sweep,         // <params>...,algo,msd_db       one line per algorithm
};

struct PlotSpec {
  PlotKind kind = PlotKind::curves;
  std::string title;
};

/// Renders a table that follows the schema of `spec.kind`. Throws
/// io::SchemaError naming the offending columns, or when there are no rows.
std::string render_svg(const io::CsvTable& table, const PlotSpec& spec);

/// Node positions and links.
std::string render_topology_svg(const network::NetworkTopology& topology);

/// Reads `csv`, renders it and writes `svg`. Nothing is written when the CSV
/// does not match the schema.
void emit_plot(const std::filesystem::path& csv, const std::filesystem::path& svg, const PlotSpec& spec);

}  // namespace dmcc::plot
