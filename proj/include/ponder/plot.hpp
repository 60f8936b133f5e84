#pragma once

#include <string>
#include <vector>

#include "ponder/config.hpp"

namespace ponder {

struct CurveSeries {
  std::string label;
  bool is_act = false;
  std::vector<MetricsRecord> points;
};

// Accuracy-vs-step line chart (plus a ponder panel when any series comes
// from an ACT run). Output bytes depend only on the input series.
std::string render_curves_svg(const std::vector<CurveSeries>& series);

}  // namespace ponder
