#include "ponder/plot.hpp"

#include <algorithm>
#include <cmath>

#include "ponder/errors.hpp"
#include "ponder/harness.hpp"

namespace ponder {

namespace {

constexpr int kWidth = 880;
constexpr int kPanelHeight = 420;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 160;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 55;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string num(double v) { return format_double(v); }

struct Panel {
  double x0, y0, w, h;     // plot area in pixels
  double xmax, ymin, ymax; // data ranges (x starts at 0)

  double px(double x) const { return x0 + (xmax > 0 ? x / xmax : 0.0) * w; }
  double py(double y) const { return y0 + h - (y - ymin) / (ymax - ymin) * h; }
};

void draw_axes(std::string& svg, const Panel& p, const std::string& x_label,
               const std::string& y_label, int y_ticks) {
  svg += "<rect x=\"" + num(p.x0) + "\" y=\"" + num(p.y0) + "\" width=\"" + num(p.w) +
         "\" height=\"" + num(p.h) + "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double x = p.xmax * i / 5.0;
    svg += "<line x1=\"" + num(p.px(x)) + "\" y1=\"" + num(p.y0 + p.h) + "\" x2=\"" +
           num(p.px(x)) + "\" y2=\"" + num(p.y0 + p.h + 5) + "\" stroke=\"#333\"/>\n";
    svg += "<text x=\"" + num(p.px(x)) + "\" y=\"" + num(p.y0 + p.h + 20) +
           "\" text-anchor=\"middle\" font-size=\"12\">" + num(x) + "</text>\n";
  }
  for (int i = 0; i <= y_ticks; ++i) {
    const double y = p.ymin + (p.ymax - p.ymin) * i / y_ticks;
    svg += "<line x1=\"" + num(p.x0 - 5) + "\" y1=\"" + num(p.py(y)) + "\" x2=\"" + num(p.x0) +
           "\" y2=\"" + num(p.py(y)) + "\" stroke=\"#333\"/>\n";
    svg += "<text x=\"" + num(p.x0 - 9) + "\" y=\"" + num(p.py(y) + 4) +
           "\" text-anchor=\"end\" font-size=\"12\">" + num(y) + "</text>\n";
  }
  svg += "<text x=\"" + num(p.x0 + p.w / 2) + "\" y=\"" + num(p.y0 + p.h + 40) +
         "\" text-anchor=\"middle\" font-size=\"13\">" + x_label + "</text>\n";
  svg += "<text x=\"" + num(p.x0 - 50) + "\" y=\"" + num(p.y0 + p.h / 2) +
         "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 " +
         num(p.x0 - 50) + " " + num(p.y0 + p.h / 2) + ")\">" + y_label + "</text>\n";
}

void draw_series(std::string& svg, const Panel& p, const std::vector<CurveSeries>& series,
                 double (*pick)(const MetricsRecord&)) {
  for (size_t s = 0; s < series.size(); ++s) {
    if (series[s].points.empty()) continue;
    std::string pts;
    for (const MetricsRecord& rec : series[s].points) {
      pts += num(p.px(static_cast<double>(rec.step))) + "," + num(p.py(pick(rec))) + " ";
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(kPalette[s % kPaletteSize]) +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
  }
}

}  // namespace

std::string render_curves_svg(const std::vector<CurveSeries>& series) {
  if (series.empty()) throw UsageError("plot: no series");

  bool any_act = false;
  double max_step = 0, max_ponder = 1;
  for (const CurveSeries& s : series) {
    any_act = any_act || s.is_act;
    for (const MetricsRecord& rec : s.points) {
      max_step = std::max(max_step, static_cast<double>(rec.step));
      max_ponder = std::max(max_ponder, rec.mean_ponder);
    }
  }
  if (max_step <= 0) max_step = 1;

  const int panels = any_act ? 2 : 1;
  const int height = kMarginTop + panels * kPanelHeight + (panels - 1) * 30 + kMarginBottom;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
         "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  Panel acc{kMarginLeft,
            kMarginTop,
            static_cast<double>(kWidth - kMarginLeft - kMarginRight),
            static_cast<double>(kPanelHeight - 60),
            max_step,
            0.0,
            1.0};
  draw_axes(svg, acc, "training step", "eval accuracy", 4);

  // Solved threshold marker.
  svg += "<line x1=\"" + num(acc.px(0)) + "\" y1=\"" + num(acc.py(0.98)) + "\" x2=\"" +
         num(acc.px(max_step)) + "\" y2=\"" + num(acc.py(0.98)) +
         "\" stroke=\"#999\" stroke-dasharray=\"5,4\"/>\n";
  svg += "<text x=\"" + num(acc.px(max_step) - 4) + "\" y=\"" + num(acc.py(0.98) - 5) +
         "\" text-anchor=\"end\" font-size=\"11\" fill=\"#666\">98%</text>\n";

  draw_series(svg, acc, series, [](const MetricsRecord& r) { return r.eval_accuracy; });

  if (any_act) {
    Panel ponder{kMarginLeft,
                 static_cast<double>(kMarginTop + kPanelHeight + 30),
                 static_cast<double>(kWidth - kMarginLeft - kMarginRight),
                 static_cast<double>(kPanelHeight - 60),
                 max_step,
                 0.0,
                 max_ponder * 1.05};
    draw_axes(svg, ponder, "training step", "mean ponder", 4);
    draw_series(svg, ponder, series, [](const MetricsRecord& r) { return r.mean_ponder; });
  }

  // Legend.
  const double lx = kWidth - kMarginRight + 14;
  for (size_t s = 0; s < series.size(); ++s) {
    const double ly = kMarginTop + 10 + 20 * static_cast<double>(s);
    svg += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 22) +
           "\" y2=\"" + num(ly) + "\" stroke=\"" + std::string(kPalette[s % kPaletteSize]) +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(lx + 27) + "\" y=\"" + num(ly + 4) + "\" font-size=\"12\">" +
           series[s].label + "</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

}  // namespace ponder
