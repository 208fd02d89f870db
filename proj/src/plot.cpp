#include "dmcc/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace dmcc::plot {

namespace {

constexpr double kWidth = 820.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 200.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 60.0;

constexpr std::array<std::string_view, 10> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                                     "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

constexpr std::string_view kMsdSuffix = "_msd_db";

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double nice_step(double span, int target) {
  const double raw = span / target;
  const double magnitude = std::pow(10.0, std::floor(std::log10(raw)));
  for (double f : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= f * magnitude) return f * magnitude;
  }
  return 10.0 * magnitude;
}

struct Axes {
  double x_min, x_max, y_min, y_max;

  double px(double x) const {
    return kLeft + (x - x_min) / (x_max - x_min) * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    return kHeight - kBottom - (y - y_min) / (y_max - y_min) * (kHeight - kTop - kBottom);
  }
};

Axes fit_axes(const std::vector<Series>& series, bool pad_x) {
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max == x_min) {
    x_min -= 0.5;
    x_max += 0.5;
  } else if (pad_x) {
    const double pad = (x_max - x_min) * 0.05;
    x_min -= pad;
    x_max += pad;
  }
  if (y_max == y_min) {
    y_min -= 1.0;
    y_max += 1.0;
  }
  const double step = nice_step(y_max - y_min, 6);
  return {x_min, x_max, std::floor(y_min / step) * step, std::ceil(y_max / step) * step};
}

std::string header(std::string_view title) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{1:.0f}\" viewBox=\"0 0 {0:.0f} {1:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text class=\"title\" x=\"{2:.2f}\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">{3}</text>\n",
      kWidth, kHeight, (kLeft + kWidth - kRight) / 2.0, escape(title));
}

std::string y_axis(const Axes& axes, std::string_view label) {
  std::string out;
  const double step = nice_step(axes.y_max - axes.y_min, 6);
  for (double y = axes.y_min; y <= axes.y_max + step * 1e-9; y += step) {
    out += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#e0e0e0\"/>\n"
        "<text x=\"{3:.2f}\" y=\"{4:.2f}\" text-anchor=\"end\">{5:g}</text>\n",
        kLeft, axes.py(y), kWidth - kRight, kLeft - 6.0, axes.py(y) + 4.0, std::round(y * 1e6) / 1e6);
  }
  out += fmt::format(
      "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n"
      "<line x1=\"{0:.2f}\" y1=\"{2:.2f}\" x2=\"{3:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n"
      "<text class=\"y-label\" x=\"20\" y=\"{4:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {4:.2f})\">{5}</text>\n",
      kLeft, kTop, kHeight - kBottom, kWidth - kRight, (kTop + kHeight - kBottom) / 2.0, escape(label));
  return out;
}

std::string x_label(std::string_view label) {
  return fmt::format("<text class=\"x-label\" x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n",
                     (kLeft + kWidth - kRight) / 2.0, kHeight - 15.0, escape(label));
}

std::string numeric_x_ticks(const Axes& axes) {
  std::string out;
  const double step = nice_step(axes.x_max - axes.x_min, 8);
  for (double x = std::ceil(axes.x_min / step) * step; x <= axes.x_max + step * 1e-9; x += step) {
    out += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n"
        "<text x=\"{0:.2f}\" y=\"{3:.2f}\" text-anchor=\"middle\">{4:g}</text>\n",
        axes.px(x), kHeight - kBottom, kHeight - kBottom + 5.0, kHeight - kBottom + 18.0, std::round(x * 1e6) / 1e6);
  }
  return out;
}

std::string legend(const std::vector<Series>& series, bool markers) {
  std::string out = "<g class=\"legend\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 10.0 + 20.0 * static_cast<double>(i);
    const double x = kWidth - kRight + 15.0;
    const auto color = kPalette[i % kPalette.size()];
    if (markers) {
      out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"{}\"/>\n", x + 12.0, y, color);
    } else {
      out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                         x, y, x + 24.0, color);
    }
    out += fmt::format("<text class=\"legend-entry\" x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", x + 30.0, y + 4.0,
                       escape(series[i].name));
  }
  return out + "</g>\n";
}

std::string polyline(const Series& s, const Axes& axes, std::string_view color) {
  std::string points;
  for (auto [x, y] : s.points) {
    if (!points.empty()) points += ' ';
    points += fmt::format("{:.2f},{:.2f}", axes.px(x), axes.py(y));
  }
  return fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, points);
}

std::vector<Series> msd_columns(const io::CsvTable& table, std::string_view first_column) {
  if (table.header.empty() || table.header.front() != first_column) {
    throw io::SchemaError(fmt::format("expected first column '{}', found '{}'", first_column,
                                      table.header.empty() ? "" : table.header.front()));
  }
  if (table.header.size() < 2) throw io::SchemaError("no '<name>_msd_db' columns");
  std::vector<Series> series;
  for (std::size_t c = 1; c < table.header.size(); ++c) {
    const auto& name = table.header[c];
    if (name.size() <= kMsdSuffix.size() || name.compare(name.size() - kMsdSuffix.size(), kMsdSuffix.size(), kMsdSuffix) != 0) {
      throw io::SchemaError(fmt::format("column '{}' does not end in '{}'", name, kMsdSuffix));
    }
    series.push_back({name.substr(0, name.size() - kMsdSuffix.size()), {}});
  }
  if (table.rows.empty()) throw io::SchemaError("table has a header but no data rows");
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const double x = table.number(r, 0);
    for (std::size_t c = 1; c < table.header.size(); ++c) series[c - 1].points.emplace_back(x, table.number(r, c));
  }
  return series;
}

std::string render_curves(const io::CsvTable& table, const PlotSpec& spec) {
  const auto series = msd_columns(table, "iteration");
  const Axes axes = fit_axes(series, false);
  std::string out = header(spec.title.empty() ? "Network MSD" : spec.title);
  out += y_axis(axes, "MSD (dB)") + numeric_x_ticks(axes) + x_label("iteration");
  for (std::size_t i = 0; i < series.size(); ++i) out += polyline(series[i], axes, kPalette[i % kPalette.size()]);
  return out + legend(series, false) + "</svg>\n";
}

std::string render_steady_state(const io::CsvTable& table, const PlotSpec& spec) {
  auto series = msd_columns(table, "node");
  const std::size_t categories = table.rows.size();
  Axes axes = fit_axes(series, true);
  axes.x_min = 0.5;
  axes.x_max = static_cast<double>(categories) + 0.5;
  std::string out = header(spec.title.empty() ? "Steady-state MSD per node" : spec.title);
  out += y_axis(axes, "MSD (dB)") + x_label("node");
  for (std::size_t r = 0; r < categories; ++r) {
    out += fmt::format("<text class=\"x-category\" x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n",
                       axes.px(static_cast<double>(r + 1)), kHeight - kBottom + 18.0, escape(table.rows[r][0]));
  }
  const double spread = 0.5 / static_cast<double>(series.size() + 1);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double offset = (static_cast<double>(i) - (static_cast<double>(series.size()) - 1.0) / 2.0) * spread;
    out += fmt::format("<g class=\"series\" fill=\"{}\">\n", kPalette[i % kPalette.size()]);
    for (std::size_t r = 0; r < categories; ++r) {
      out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3.5\"/>\n",
                         axes.px(static_cast<double>(r + 1) + offset), axes.py(series[i].points[r].second));
    }
    out += "</g>\n";
  }
  return out + legend(series, true) + "</svg>\n";
}

std::string render_sweep(const io::CsvTable& table, const PlotSpec& spec) {
  const std::size_t cols = table.header.size();
  if (cols < 3 || table.header[cols - 2] != "algo" || table.header[cols - 1] != "msd_db") {
    throw io::SchemaError(fmt::format("sweep table must end in 'algo,msd_db' (have: {})", fmt::join(table.header, ",")));
  }
  if (table.rows.empty()) throw io::SchemaError("table has a header but no data rows");
  const std::size_t params = cols - 2;
  std::map<std::string, std::size_t> index;
  std::vector<Series> series;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::string name = table.rows[r][params];
    for (std::size_t p = 1; p < params; ++p) name += fmt::format(" {}={}", table.header[p], table.rows[r][p]);
    auto [it, inserted] = index.emplace(name, series.size());
    if (inserted) series.push_back({name, {}});
    series[it->second].points.emplace_back(table.number(r, 0), table.number(r, cols - 1));
  }
  const Axes axes = fit_axes(series, true);
  std::string out = header(spec.title.empty() ? "Steady-state MSD sweep" : spec.title);
  out += y_axis(axes, "steady-state MSD (dB)") + numeric_x_ticks(axes) + x_label(table.header.front());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto color = kPalette[i % kPalette.size()];
    out += polyline(series[i], axes, color);
    for (auto [x, y] : series[i].points) {
      out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", axes.px(x), axes.py(y), color);
    }
  }
  return out + legend(series, false) + "</svg>\n";
}

}  // namespace

std::string render_svg(const io::CsvTable& table, const PlotSpec& spec) {
  switch (spec.kind) {
    case PlotKind::curves: return render_curves(table, spec);
    case PlotKind::steady_state: return render_steady_state(table, spec);
    case PlotKind::sweep: return render_sweep(table, spec);
  }
  return {};
}

std::string render_topology_svg(const network::NetworkTopology& topology) {
  double extent = 0.0;
  for (const auto& p : topology.positions()) extent = std::max({extent, p.x, p.y});
  if (extent <= 0.0) extent = 1.0;
  const double size = 500.0, margin = 30.0;
  auto sx = [&](double v) { return margin + v / extent * (size - 2.0 * margin); };
  auto sy = [&](double v) { return size - margin - v / extent * (size - 2.0 * margin); };

  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{0:.0f}\" viewBox=\"0 0 {0:.0f} {0:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"10\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      size);
  const auto& pos = topology.positions();
  for (auto [l, k] : topology.edges()) {
    out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#888\"/>\n", sx(pos[l].x),
                       sy(pos[l].y), sx(pos[k].x), sy(pos[k].y));
  }
  for (std::size_t k = 0; k < topology.size(); ++k) {
    out += fmt::format(
        "<circle cx=\"{0:.2f}\" cy=\"{1:.2f}\" r=\"9\" fill=\"#1f77b4\"/>\n"
        "<text x=\"{0:.2f}\" y=\"{2:.2f}\" fill=\"white\" text-anchor=\"middle\">{3}</text>\n",
        sx(pos[k].x), sy(pos[k].y), sy(pos[k].y) + 3.5, k + 1);
  }
  return out + "</svg>\n";
}

void emit_plot(const std::filesystem::path& csv, const std::filesystem::path& svg, const PlotSpec& spec) {
  const std::string rendered = render_svg(io::read_csv(csv), spec);
  io::write_text_file(svg, rendered);
}

}  // namespace dmcc::plot
