#pragma once

#include <span>
#include <string>
#include <vector>

#include "mergesim/types.hpp"

namespace mergesim {

/// Minimal hand-rolled SVG line chart; output is deterministic (no timestamps,
/// fixed number formatting).
class LinePlot {
 public:
  LinePlot(std::string title, std::string x_label, std::string y_label);

  void add_series(const std::string& name, std::span<const Vec2> pts,
                  const std::string& color, bool dashed = false);
  /// Shaded vertical band (e.g. a merge zone).
  void add_band(double x0, double x1, const std::string& color);
  void write(const std::string& path) const;
  std::string render() const;

 private:
  struct Series {
    std::string name;
    std::vector<Vec2> pts;
    std::string color;
    bool dashed;
  };
  struct Band {
    double x0, x1;
    std::string color;
  };

  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
  std::vector<Band> bands_;
};

}  // namespace mergesim
