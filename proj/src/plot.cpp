#include <algorithm>
#include <cmath>
#include <locale>
#include <sstream>

#include "source_scope/format.hpp"
#include "source_scope/output.hpp"

namespace sscope {

namespace {

std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '&') o += "&amp;";
    else if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else o += c;
  }
  return o;
}

std::string tick_label(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(3);
  os << v;
  return os.str();
}

}  // namespace

std::string render_svg(const PlotSpec& p) {
  const double W = 640, Hh = 420, l = 80, r = 190, t = 40, b = 60;
  auto tx = [&](double v) { return p.logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return p.logy ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!p.logx || x > 0) && (!p.logy || y > 0);
  };
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : p.series)
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (usable(s.x[i], s.y[i])) {
        x0 = std::min(x0, tx(s.x[i]));
        x1 = std::max(x1, tx(s.x[i]));
        y0 = std::min(y0, ty(s.y[i]));
        y1 = std::max(y1, ty(s.y[i]));
      }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  const double padx = 0.05 * (x1 - x0), pady = 0.08 * (y1 - y0);
  x0 -= padx, x1 += padx, y0 -= pady, y1 += pady;
  auto px = [&](double v) { return l + (tx(v) - x0) / (x1 - x0) * (W - l - r); };
  auto py = [&](double v) { return Hh - b - (ty(v) - y0) / (y1 - y0) * (Hh - t - b); };
  auto f2 = [](double v) { return fmt_fixed(v, 2); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh << "\" viewBox=\"0 0 " << W
    << ' ' << Hh << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << f2(W / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(p.title)
    << "</text>\n";
  o << "<rect x=\"" << l << "\" y=\"" << t << "\" width=\"" << (W - l - r) << "\" height=\"" << (Hh - t - b)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    const double vx = p.logx ? std::pow(10.0, fx) : fx, vy = p.logy ? std::pow(10.0, fy) : fy;
    const double sx = l + (W - l - r) * i / 4.0, sy = Hh - b - (Hh - t - b) * i / 4.0;
    o << "<line x1=\"" << f2(sx) << "\" y1=\"" << (Hh - b) << "\" x2=\"" << f2(sx) << "\" y2=\"" << (Hh - b + 5)
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << f2(sx) << "\" y=\"" << (Hh - b + 18) << "\" text-anchor=\"middle\">" << tick_label(vx)
      << "</text>\n";
    o << "<line x1=\"" << (l - 5) << "\" y1=\"" << f2(sy) << "\" x2=\"" << l << "\" y2=\"" << f2(sy)
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << (l - 8) << "\" y=\"" << f2(sy + 4) << "\" text-anchor=\"end\">" << tick_label(vy)
      << "</text>\n";
  }
  o << "<text x=\"" << f2(l + (W - l - r) / 2) << "\" y=\"" << (Hh - 15) << "\" text-anchor=\"middle\">"
    << xml_escape(p.xlabel) << "</text>\n";
  o << "<text x=\"18\" y=\"" << f2(t + (Hh - t - b) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << f2(t + (Hh - t - b) / 2) << ")\">" << xml_escape(p.ylabel) << "</text>\n";

  int legend = 0;
  for (const auto& s : p.series) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (usable(s.x[i], s.y[i])) pts.emplace_back(px(s.x[i]), py(s.y[i]));
    if (s.line && pts.size() > 1) {
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) o << (i ? " " : "") << f2(pts[i].first) << ',' << f2(pts[i].second);
      o << "\"/>\n";
    }
    auto mark = [&](double x, double y) {
      if (s.marker == "plus") {
        o << "<path d=\"M" << f2(x - 5) << ' ' << f2(y) << "H" << f2(x + 5) << "M" << f2(x) << ' ' << f2(y - 5) << "V"
          << f2(y + 5) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
      } else if (s.marker == "star") {
        o << "<path d=\"M" << f2(x - 4) << ' ' << f2(y - 4) << "L" << f2(x + 4) << ' ' << f2(y + 4) << "M"
          << f2(x - 4) << ' ' << f2(y + 4) << "L" << f2(x + 4) << ' ' << f2(y - 4) << "M" << f2(x) << ' '
          << f2(y - 5) << "V" << f2(y + 5) << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"/>\n";
      } else {
        o << "<circle cx=\"" << f2(x) << "\" cy=\"" << f2(y) << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
      }
    };
    for (const auto& [x, y] : pts) mark(x, y);
    const double ly = t + 12 + 18 * legend++;
    const double lx = W - r + 12;
    mark(lx + 6, ly - 4);
    o << "<text x=\"" << f2(lx + 16) << "\" y=\"" << f2(ly) << "\">" << xml_escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace sscope
