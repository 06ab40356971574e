#pragma once

#include <string>
#include <utility>
#include <vector>

namespace corridor {

/// Minimal SVG 1.1 line/scatter plot: axes, ticks, point glyphs, polylines.
class SvgPlot {
  public:
    enum class Glyph { Dot, Cross };

    SvgPlot(std::string title, std::string x_label, std::string y_label);

    void set_x_range(double lo, double hi, double tick_step);
    void set_y_range(double lo, double hi, double tick_step);

    void add_points(const std::vector<std::pair<double, double>> &points, Glyph glyph, const std::string &color,
                    const std::string &legend);
    void add_polyline(const std::vector<std::pair<double, double>> &points, const std::string &color,
                      const std::string &legend, bool dashed = false);

    std::string render() const;
    void write(const std::string &path) const;

  private:
    struct Series {
        std::vector<std::pair<double, double>> points;
        bool line = false;
        bool dashed = false;
        Glyph glyph = Glyph::Dot;
        std::string color;
        std::string legend;
    };

    double px(double x) const;
    double py(double y) const;

    std::string title_, x_label_, y_label_;
    double x_lo_ = 0.0, x_hi_ = 1.0, x_tick_ = 0.1;
    double y_lo_ = 0.0, y_hi_ = 1.0, y_tick_ = 0.1;
    std::vector<Series> series_;
};

} // namespace corridor
