#pragma once

#include <string>
#include <vector>

#include "outlierlab/linalg.hpp"

namespace olab::svg {

struct Series {
  std::string label;
  std::string color;
  double radius = 1.5;   // marker radius in pixels
  std::vector<cdouble> points;
};

struct Circle {
  cdouble center;
  double radius = 1.0;   // data units
  std::string color;
  bool dashed = false;
};

/// Scatter plot in the complex plane with equal axis scaling.
struct ScatterPlot {
  std::string title;
  std::string config_hash;
  std::vector<Series> series;
  std::vector<Circle> circles;
  int size = 640;

  /// Throws ConfigError when there is nothing to draw.
  std::string render() const;
  void write(const std::string& path) const;
};

}  // namespace olab::svg
