#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hprobe::cli {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool markers = false;
};

struct PlotSpec {
  std::string title, x_label, y_label;
  std::vector<PlotSeries> series;
  bool log_x = false, log_y = false;
  double width = 640, height = 420;
};

std::string render_svg(const PlotSpec& spec);
void write_svg(const std::filesystem::path& path, const PlotSpec& spec);

}  // namespace hprobe::cli
