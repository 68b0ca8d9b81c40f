#include "kcq/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace kcq::cli {

namespace {

constexpr double kWidth = 640.0, kHeight = 400.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;

struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

Frame frame_for(const std::vector<double>& xs, const std::vector<std::vector<double>>& ys) {
  Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double x : xs) {
    f.x0 = std::min(f.x0, x);
    f.x1 = std::max(f.x1, x);
  }
  for (const auto& series : ys) {
    for (double y : series) {
      f.y0 = std::min(f.y0, y);
      f.y1 = std::max(f.y1, y);
    }
  }
  if (!(f.x1 > f.x0)) f.x1 = f.x0 + 1.0;
  if (!(f.y1 > f.y0)) f.y1 = f.y0 + 1.0;
  const double pad = 0.05 * (f.y1 - f.y0);
  f.y0 -= pad;
  f.y1 += pad;
  return f;
}

std::string polyline(const Frame& f, const std::vector<double>& x, const std::vector<double>& y, const char* colour,
                     const char* dash) {
  std::string out = "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.5\"";
  if (dash) out += " stroke-dasharray=\"" + std::string(dash) + "\"";
  out += " points=\"";
  for (std::size_t i = 0; i < x.size(); ++i) out += num(f.px(x[i])) + "," + num(f.py(y[i])) + " ";
  return out + "\"/>\n";
}

std::string band(const Frame& f, const std::vector<double>& x, const std::vector<double>& lo,
                 const std::vector<double>& hi, const char* colour, double opacity) {
  std::string out = "<polygon stroke=\"none\" fill=\"" + std::string(colour) + "\" fill-opacity=\"" + num(opacity) +
                    "\" points=\"";
  for (std::size_t i = 0; i < x.size(); ++i) out += num(f.px(x[i])) + "," + num(f.py(hi[i])) + " ";
  for (std::size_t i = x.size(); i-- > 0;) out += num(f.px(x[i])) + "," + num(f.py(lo[i])) + " ";
  return out + "\"/>\n";
}

std::string axes(const Frame& f, const std::string& title, const std::string& xlabel, const std::string& ylabel) {
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
                    "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + title + "</text>\n";
  out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(kWidth - kLeft - kRight) +
         "\" height=\"" + num(kHeight - kTop - kBottom) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = f.x0 + (f.x1 - f.x0) * t / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * t / 4.0;
    out += "<text x=\"" + num(f.px(xv)) + "\" y=\"" + num(kHeight - kBottom + 16) + "\" text-anchor=\"middle\">" +
           label(xv) + "</text>\n";
    out += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(f.py(yv) + 4) + "\" text-anchor=\"end\">" + label(yv) +
           "</text>\n";
  }
  out += "<text x=\"" + num(kWidth / 2) + "\" y=\"" + num(kHeight - 10) + "\" text-anchor=\"middle\">" + xlabel + "</text>\n";
  out += "<text x=\"16\" y=\"" + num(kHeight / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num(kHeight / 2) + ")\">" + ylabel + "</text>\n";
  return out;
}

std::string legend(const std::vector<std::pair<std::string, const char*>>& items) {
  std::string out;
  double y = kTop + 14;
  for (const auto& [name, colour] : items) {
    out += "<rect x=\"" + num(kWidth - kRight - 150) + "\" y=\"" + num(y - 9) + "\" width=\"12\" height=\"10\" fill=\"" +
           colour + "\"/>\n<text x=\"" + num(kWidth - kRight - 132) + "\" y=\"" + num(y) + "\">" + name + "</text>\n";
    y += 16;
  }
  return out;
}

}  // namespace

std::string band_plot_svg(const CsvTable& ts, const std::string& title) {
  const auto t = ts.column_values("time");
  const auto km = ts.column_values("kcq_mean"), ks = ts.column_values("kcq_sd");
  const auto nm = ts.column_values("nmc_mean"), ns = ts.column_values("nmc_sd");
  std::vector<double> klo(t.size()), khi(t.size()), nlo(t.size()), nhi(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    klo[i] = km[i] - 3.0 * ks[i];
    khi[i] = km[i] + 3.0 * ks[i];
    nlo[i] = nm[i] - 3.0 * ns[i];
    nhi[i] = nm[i] + 3.0 * ns[i];
  }
  const Frame f = frame_for(t, {klo, khi, nlo, nhi});
  std::string out = axes(f, title, "time (s)", "response");
  out += band(f, t, nlo, nhi, "#999999", 0.35);
  out += band(f, t, klo, khi, "#d62728", 0.45);
  out += polyline(f, t, nm, "#333333", "5,3");
  out += polyline(f, t, km, "#d62728", nullptr);
  out += legend({{"KCQ mean +/- 3 SD", "#d62728"}, {"N-MC mean +/- 3 SD", "#999999"}});
  return out + "</svg>\n";
}

std::string pdf_plot_svg(const CsvTable& pdf, const std::string& title) {
  const auto g = pdf.column_values("grid");
  const auto d = pdf.column_values("density");
  const auto n = pdf.column_values("nonconditional_density");
  Frame f = frame_for(g, {d, n});
  f.y0 = 0.0;
  std::string out = axes(f, title, "response", "density");
  out += polyline(f, g, n, "#555555", "5,3");
  out += polyline(f, g, d, "#d62728", nullptr);
  out += legend({{"KCQ-PDF", "#d62728"}, {"N-MC PDF", "#555555"}});
  return out + "</svg>\n";
}

}  // namespace kcq::cli
