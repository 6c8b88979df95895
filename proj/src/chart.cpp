#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "mhke/bench.hpp"

namespace mhke {
namespace {

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

/// Round the axis maximum up to 1, 2 or 5 times a power of ten.
double nice_ceiling(double v) {
  if (v <= 0) return 1.0;
  const double p = std::pow(10.0, std::floor(std::log10(v)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * p >= v) return m * p;
  return 10.0 * p;
}

std::string level_legend(int k) {
  switch (k) {
    case 0:
      return "w/o Distr.";
    case 1:
      return "w/ 2 Distr.";
    default:
      return "w/ 4 Distr.";
  }
}

}  // namespace

std::string render_bench_svg(const BenchResult& r, std::string_view title) {
  std::set<int> ns, ks;
  double top = 0.0;
  for (const auto& c : r.cells) {
    ns.insert(c.n);
    ks.insert(c.k);
    top = std::max(top, c.mean_seconds + c.std_seconds);
  }
  const double ymax = nice_ceiling(top);
  constexpr double kWidth = 720, kHeight = 420, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  const std::array<const char*, 3> colors{"#4c72b0", "#dd8452", "#55a868"};

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{3}</text>\n",
      kWidth, kHeight, kLeft + plot_w / 2, escape_xml(title));

  for (int t = 0; t <= 5; ++t) {
    const double v = ymax * t / 5.0;
    const double y = kTop + plot_h - plot_h * t / 5.0;
    svg += fmt::format("<line x1=\"{}\" y1=\"{:.1f}\" x2=\"{}\" y2=\"{:.1f}\" stroke=\"#dddddd\"/>\n", kLeft, y,
                       kLeft + plot_w, y);
    svg += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:g}</text>\n", kLeft - 6, y + 4, v);
  }
  svg += fmt::format(
      "<text x=\"18\" y=\"{0:.1f}\" transform=\"rotate(-90 18 {0:.1f})\" text-anchor=\"middle\">Time (s)</text>\n",
      kTop + plot_h / 2);

  const double group_w = ns.empty() ? plot_w : plot_w / static_cast<double>(ns.size());
  const double bar_w = group_w * 0.7 / std::max<size_t>(1, ks.size());
  size_t g = 0;
  for (int n : ns) {
    const double gx = kLeft + group_w * static_cast<double>(g) + group_w * 0.15;
    size_t b = 0;
    for (int k : ks) {
      const BenchCell* c = r.find(n, k);
      if (c) {
        const double h = plot_h * c->mean_seconds / ymax;
        const double x = gx + bar_w * static_cast<double>(b);
        const double y = kTop + plot_h - h;
        svg += fmt::format(
            "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"><title>n={} {}: "
            "{:.4f} s</title></rect>\n",
            x, y, bar_w - 2, h, colors[static_cast<size_t>(k) % colors.size()], n, level_legend(k), c->mean_seconds);
        if (c->std_seconds > 0) {
          const double cx = x + (bar_w - 2) / 2;
          const double y1 = kTop + plot_h - plot_h * (c->mean_seconds + c->std_seconds) / ymax;
          const double y2 = kTop + plot_h - plot_h * std::max(0.0, c->mean_seconds - c->std_seconds) / ymax;
          svg += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"black\"/>\n",
                             cx, y1, y2);
        }
      }
      ++b;
    }
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">n = {}</text>\n", gx + group_w * 0.35,
                       kTop + plot_h + 20, n);
    ++g;
  }
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kLeft, kTop,
                     kTop + plot_h);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", kLeft, kTop + plot_h,
                     kLeft + plot_w);

  size_t row = 0;
  for (int k : ks) {
    const double y = kTop + 10 + 20.0 * static_cast<double>(row++);
    svg += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"12\" height=\"12\" fill=\"{}\"/>\n",
                       kLeft + plot_w + 20, y, colors[static_cast<size_t>(k) % colors.size()]);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", kLeft + plot_w + 38, y + 10,
                       escape_xml(level_legend(k)));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace mhke
