#include "amod/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "amod/errors.hpp"

namespace amod {

void write_svg_line_chart(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series, double x_scale) {
  const int width = 860, height = 480;
  const int ml = 70, mr = 160, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmax = 1.0, ymin = 0.0, ymax = 1.0;
  bool any = false;
  for (const PlotSeries& s : series) {
    if (s.values.empty()) continue;
    xmax = std::max(xmax, (s.values.size() - 1) * x_scale);
    for (double v : s.values) {
      if (!any) {
        ymin = ymax = v;
        any = true;
      }
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (!any) {
    ymin = 0.0;
    ymax = 1.0;
  }
  if (ymax == ymin) ymax = ymin + 1.0;
  ymin = std::min(ymin, 0.0);

  auto px = [&](double x) { return ml + pw * (xmax > 0 ? x / xmax : 0.0); };
  auto py = [&](double y) { return mt + ph * (1.0 - (y - ymin) / (ymax - ymin)); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
     << "' height='" << height << "' font-family='sans-serif' font-size='12'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<text x='" << width / 2 << "' y='20' text-anchor='middle' font-size='15'>"
     << title << "</text>\n";

  // axes and ticks
  os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='"
     << mt + ph << "' stroke='black'/>\n";
  os << "<line x1='" << ml << "' y1='" << mt + ph << "' x2='" << ml + pw
     << "' y2='" << mt + ph << "' stroke='black'/>\n";
  for (int i = 0; i <= 5; ++i) {
    double xv = xmax * i / 5.0, yv = ymin + (ymax - ymin) * i / 5.0;
    os << "<line x1='" << px(xv) << "' y1='" << mt + ph << "' x2='" << px(xv)
       << "' y2='" << mt + ph + 4 << "' stroke='black'/>\n";
    os << "<text x='" << px(xv) << "' y='" << mt + ph + 18
       << "' text-anchor='middle'>" << std::round(xv * 100) / 100 << "</text>\n";
    os << "<line x1='" << ml - 4 << "' y1='" << py(yv) << "' x2='" << ml
       << "' y2='" << py(yv) << "' stroke='black'/>\n";
    os << "<text x='" << ml - 8 << "' y='" << py(yv) + 4
       << "' text-anchor='end'>" << std::round(yv * 100) / 100 << "</text>\n";
  }
  os << "<text x='" << ml + pw / 2 << "' y='" << height - 10
     << "' text-anchor='middle'>" << x_label << "</text>\n";
  os << "<text x='16' y='" << mt + ph / 2
     << "' text-anchor='middle' transform='rotate(-90 16 " << mt + ph / 2 << ")'>"
     << y_label << "</text>\n";

  int ci = 0;
  for (const PlotSeries& s : series) {
    const char* color = colors[ci % 6];
    os << "<polyline fill='none' stroke='" << color << "' stroke-width='1.4' points='";
    for (size_t i = 0; i < s.values.size(); ++i)
      os << px(i * x_scale) << "," << py(s.values[i]) << " ";
    os << "'/>\n";
    os << "<line x1='" << ml + pw + 10 << "' y1='" << mt + 14 + 18 * ci << "' x2='"
       << ml + pw + 34 << "' y2='" << mt + 14 + 18 * ci << "' stroke='" << color
       << "' stroke-width='2'/>\n";
    os << "<text x='" << ml + pw + 40 << "' y='" << mt + 18 + 18 * ci << "'>"
       << s.name << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << os.str();
}

}  // namespace amod
