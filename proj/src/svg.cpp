#include "outlierlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "outlierlab/errors.hpp"

namespace olab::svg {

namespace {

constexpr double kMargin = 48.0;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string ScatterPlot::render() const {
  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
  double lo_y = lo_x, hi_y = -lo_x;
  std::size_t count = 0;
  auto extend = [&](double x, double y) {
    lo_x = std::min(lo_x, x);
    hi_x = std::max(hi_x, x);
    lo_y = std::min(lo_y, y);
    hi_y = std::max(hi_y, y);
  };
  for (const auto& s : series) {
    for (cdouble z : s.points) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) continue;
      extend(z.real(), z.imag());
      ++count;
    }
  }
  if (count == 0) throw ConfigError("plot: no points to draw");
  for (const auto& c : circles) {
    extend(c.center.real() - c.radius, c.center.imag() - c.radius);
    extend(c.center.real() + c.radius, c.center.imag() + c.radius);
  }
  // Square data window so circles stay round.
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-12}) * 1.08;
  const double cx = 0.5 * (lo_x + hi_x);
  const double cy = 0.5 * (lo_y + hi_y);
  const double plot = size - 2.0 * kMargin;
  const double scale = plot / span;
  auto px = [&](double x) { return kMargin + (x - (cx - span / 2)) * scale; };
  auto py = [&](double y) { return kMargin + ((cy + span / 2) - y) * scale; };

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
     << "\" viewBox=\"0 0 " << size << " " << size << "\">\n";
  os << "<!-- config_hash=" << escape(config_hash) << " -->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << plot << "\" height=\"" << plot
     << "\" fill=\"none\" stroke=\"#888\"/>\n";
  if (cx - span / 2 < 0.0 && 0.0 < cx + span / 2) {
    os << "<line x1=\"" << px(0.0) << "\" y1=\"" << kMargin << "\" x2=\"" << px(0.0) << "\" y2=\""
       << kMargin + plot << "\" stroke=\"#ddd\"/>\n";
  }
  if (cy - span / 2 < 0.0 && 0.0 < cy + span / 2) {
    os << "<line x1=\"" << kMargin << "\" y1=\"" << py(0.0) << "\" x2=\"" << kMargin + plot << "\" y2=\""
       << py(0.0) << "\" stroke=\"#ddd\"/>\n";
  }
  for (const auto& c : circles) {
    os << "<circle cx=\"" << px(c.center.real()) << "\" cy=\"" << py(c.center.imag()) << "\" r=\""
       << c.radius * scale << "\" fill=\"none\" stroke=\"" << escape(c.color) << "\""
       << (c.dashed ? " stroke-dasharray=\"4 3\"" : "") << "/>\n";
  }
  for (const auto& s : series) {
    os << "<g fill=\"" << escape(s.color) << "\">\n";
    for (cdouble z : s.points) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) continue;
      os << "<circle cx=\"" << px(z.real()) << "\" cy=\"" << py(z.imag()) << "\" r=\"" << s.radius << "\"/>\n";
    }
    os << "</g>\n";
  }
  double ly = kMargin + 14.0;
  for (const auto& s : series) {
    if (s.label.empty()) continue;
    os << "<circle cx=\"" << kMargin + 10 << "\" cy=\"" << ly - 4 << "\" r=\"4\" fill=\"" << escape(s.color)
       << "\"/><text x=\"" << kMargin + 20 << "\" y=\"" << ly << "\" font-size=\"12\" font-family=\"sans-serif\">"
       << escape(s.label) << "</text>\n";
    ly += 16.0;
  }
  os << "<text x=\"" << size / 2 << "\" y=\"" << kMargin / 2 + 6
     << "\" font-size=\"14\" font-family=\"sans-serif\" text-anchor=\"middle\">" << escape(title) << "</text>\n";
  os << "<text x=\"" << kMargin << "\" y=\"" << size - kMargin / 3 << "\" font-size=\"11\" font-family=\"sans-serif\">"
     << "re [" << cx - span / 2 << ", " << cx + span / 2 << "]  im [" << cy - span / 2 << ", " << cy + span / 2
     << "]</text>\n";
  os << "</svg>\n";
  return os.str();
}

void ScatterPlot::write(const std::string& path) const {
  const std::string text = render();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

}  // namespace olab::svg
