#include "corridor/svg.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "corridor/csv.hpp"

namespace corridor {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

std::string num(double x) { return format_double(x, 6); }

std::string escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c;
        }
    }
    return out;
}

void check_range(double lo, double hi, double step) {
    if (!(hi > lo) || !(step > 0.0)) throw std::invalid_argument("plot range must be increasing with a positive tick step");
}

} // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgPlot::set_x_range(double lo, double hi, double tick_step) {
    check_range(lo, hi, tick_step);
    x_lo_ = lo;
    x_hi_ = hi;
    x_tick_ = tick_step;
}

void SvgPlot::set_y_range(double lo, double hi, double tick_step) {
    check_range(lo, hi, tick_step);
    y_lo_ = lo;
    y_hi_ = hi;
    y_tick_ = tick_step;
}

void SvgPlot::add_points(const std::vector<std::pair<double, double>> &points, Glyph glyph, const std::string &color,
                         const std::string &legend) {
    series_.push_back({points, false, false, glyph, color, legend});
}

void SvgPlot::add_polyline(const std::vector<std::pair<double, double>> &points, const std::string &color,
                           const std::string &legend, bool dashed) {
    series_.push_back({points, true, dashed, Glyph::Dot, color, legend});
}

double SvgPlot::px(double x) const { return kLeft + (x - x_lo_) / (x_hi_ - x_lo_) * (kWidth - kLeft - kRight); }
double SvgPlot::py(double y) const { return kHeight - kBottom - (y - y_lo_) / (y_hi_ - y_lo_) * (kHeight - kTop - kBottom); }

std::string SvgPlot::render() const {
    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(kWidth) << "\" height=\""
      << num(kHeight) << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title_)
      << "</text>\n";

    const double x0 = px(x_lo_), x1 = px(x_hi_), y0 = py(y_lo_), y1 = py(y_hi_);
    o << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\"" << num(x1 - x0) << "\" height=\""
      << num(y0 - y1) << "\" fill=\"none\" stroke=\"black\"/>\n";

    const auto ticks = [](double lo, double hi, double step) {
        std::vector<double> t;
        const long first = static_cast<long>(std::ceil(lo / step - 1e-9));
        for (long k = first; k * step <= hi + 1e-9 * step; ++k) t.push_back(k * step);
        return t;
    };
    for (double t : ticks(x_lo_, x_hi_, x_tick_)) {
        o << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(px(t)) << "\" y2=\""
          << num(y0 + 5) << "\" stroke=\"black\"/>\n"
          << "<text x=\"" << num(px(t)) << "\" y=\"" << num(y0 + 19) << "\" text-anchor=\"middle\">" << num(t)
          << "</text>\n";
    }
    for (double t : ticks(y_lo_, y_hi_, y_tick_)) {
        o << "<line x1=\"" << num(x0 - 5) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(x0) << "\" y2=\""
          << num(py(t)) << "\" stroke=\"black\"/>\n"
          << "<text x=\"" << num(x0 - 8) << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">" << num(t)
          << "</text>\n";
    }
    o << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(kHeight - 15) << "\" text-anchor=\"middle\">"
      << escape(x_label_) << "</text>\n"
      << "<text x=\"18\" y=\"" << num((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << num((y0 + y1) / 2) << ")\">" << escape(y_label_) << "</text>\n";

    double legend_y = kTop + 10;
    for (const Series &s : series_) {
        if (s.line) {
            o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
            if (s.dashed) o << " stroke-dasharray=\"6 4\"";
            o << " points=\"";
            for (std::size_t i = 0; i < s.points.size(); ++i)
                o << (i ? " " : "") << num(px(s.points[i].first)) << ',' << num(py(s.points[i].second));
            o << "\"/>\n";
        } else {
            for (const auto &[x, y] : s.points) {
                if (s.glyph == Glyph::Dot) {
                    o << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"4\" fill=\"" << s.color
                      << "\"/>\n";
                } else {
                    const double cx = px(x), cy = py(y);
                    o << "<path d=\"M" << num(cx - 4) << ' ' << num(cy - 4) << " L" << num(cx + 4) << ' '
                      << num(cy + 4) << " M" << num(cx - 4) << ' ' << num(cy + 4) << " L" << num(cx + 4) << ' '
                      << num(cy - 4) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
                }
            }
        }
        if (!s.legend.empty()) {
            const double lx = x1 + 15;
            if (s.line)
                o << "<line x1=\"" << num(lx) << "\" y1=\"" << num(legend_y) << "\" x2=\"" << num(lx + 20) << "\" y2=\""
                  << num(legend_y) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
            else
                o << "<circle cx=\"" << num(lx + 10) << "\" cy=\"" << num(legend_y) << "\" r=\"4\" fill=\"" << s.color
                  << "\"/>\n";
            o << "<text x=\"" << num(lx + 26) << "\" y=\"" << num(legend_y + 4) << "\">" << escape(s.legend)
              << "</text>\n";
            legend_y += 18;
        }
    }
    o << "</svg>\n";
    return o.str();
}

void SvgPlot::write(const std::string &path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << render();
}

} // namespace corridor
