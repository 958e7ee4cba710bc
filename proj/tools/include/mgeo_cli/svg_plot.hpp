#pragma once

#include <string>
#include <vector>

namespace mgeo::cli {

/// Renders numeric columns of an emitted CSV as an SVG line chart. The plot
/// is a pure function of the CSV contents, so regenerating it from the same
/// file yields identical bytes.
void plot_csv_columns(const std::string& csv_path, const std::vector<std::string>& columns,
                      const std::string& title, const std::string& svg_path);

}  // namespace mgeo::cli
