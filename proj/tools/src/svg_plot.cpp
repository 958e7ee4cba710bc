#include "mgeo_cli/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "mgeo/csv.hpp"
#include "mgeo/errors.hpp"

namespace mgeo::cli {

namespace {
const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}
}  // namespace

void plot_csv_columns(const std::string& csv_path, const std::vector<std::string>& columns,
                      const std::string& title, const std::string& svg_path) {
  const csv::Table t = csv::read_file(csv_path);
  const double W = 960, H = 480, ml = 60, mr = 20, mt = 40, mb = 30;

  std::vector<std::vector<double>> series;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& name : columns) {
    const int c = t.column(name);
    if (c < 0) throw Error(ErrorCode::IngestError, "csv lacks column '" + name + "'");
    std::vector<double> col;
    for (const auto& row : t.rows) {
      if (static_cast<std::size_t>(c) >= row.size() || row[static_cast<std::size_t>(c)].empty()) {
        col.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      const double v = std::stod(row[static_cast<std::size_t>(c)]);
      col.push_back(v);
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    series.push_back(std::move(col));
  }
  if (!(hi > lo)) {
    hi = lo + 1;
    lo -= 1;
  }

  std::ofstream out(svg_path);
  if (!out) throw Error(ErrorCode::IngestError, "cannot write " + svg_path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  out << "<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << ml << "' y='24' font-family='sans-serif' font-size='16'>" << title
      << "</text>\n";
  // Axes.
  out << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
      << "' stroke='#444'/>\n";
  out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
      << "' stroke='#444'/>\n";
  out << "<text x='4' y='" << mt + 10 << "' font-family='sans-serif' font-size='11'>" << fmt(hi)
      << "</text>\n";
  out << "<text x='4' y='" << H - mb << "' font-family='sans-serif' font-size='11'>" << fmt(lo)
      << "</text>\n";

  const std::size_t n = t.rows.size();
  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill='none' stroke='" << kPalette[s % 6] << "' stroke-width='1' points='";
    bool first = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = series[s][i];
      if (!std::isfinite(v)) continue;
      const double x = ml + (W - ml - mr) * (n > 1 ? static_cast<double>(i) / (n - 1) : 0.5);
      const double y = H - mb - (H - mt - mb) * (v - lo) / (hi - lo);
      if (!first) out << ' ';
      out << fmt(x) << ',' << fmt(y);
      first = false;
    }
    out << "'/>\n";
    out << "<text x='" << W - mr - 120 << "' y='" << mt + 16 * static_cast<double>(s)
        << "' font-family='sans-serif' font-size='12' fill='" << kPalette[s % 6] << "'>"
        << columns[s] << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace mgeo::cli
