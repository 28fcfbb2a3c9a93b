#pragma once

#include <string>
#include <vector>

#include "sasreg/image.hpp"
#include "sasreg/png_io.hpp"

namespace sasreg::fig {

/// Odd half in magenta (red + blue), even half in green; where both agree
/// the pixel is gray/white. Each half-image column is drawn `column_scale`
/// pixels wide.
RgbImage overlay(const Image& odd_half, const Image& even_half, int column_scale = 2);

struct BoxStats {
  double min = 0.0;  // lower whisker (lowest value within 1.5 IQR of Q1)
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;  // upper whisker
  std::vector<double> outliers;
};

/// Quartiles by linear interpolation between order statistics.
BoxStats box_stats(std::vector<double> values);

struct BoxSeries {
  std::string name;
  std::vector<double> values;
};

/// One box per series on a shared vertical axis, left to right in input
/// order. Gridlines mark tenths of the plotted range.
RgbImage box_plot(const std::vector<BoxSeries>& series, int width = 480, int height = 320);

}  // namespace sasreg::fig
