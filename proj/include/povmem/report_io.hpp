#pragma once

// CSV and SVG writers for the experiment drivers. CSV (RFC 4180, CRLF-free,
// fixed %.12g formatting) is the contract; the SVG plots are conveniences.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "povmem/errors.hpp"

namespace povmem::report {

inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);  // no "-0"
  return buf;
}

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : path_(path), os_(path, std::ios::binary) {
    if (!os_) throw IoError("cannot open " + path.string() + " for writing");
  }

  CsvWriter& row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      os_ << csv_escape(cells[i]);
    }
    os_ << '\n';
    if (!os_) throw IoError("write failed: " + path_.string());
    return *this;
  }

 private:
  std::filesystem::path path_;
  std::ofstream os_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

namespace detail {

inline std::string svg_header(int w, int h) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
     << " " << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return os.str();
}

// Blue (0) -> white (0.5) -> red (1).
inline std::string diverging(double t) {
  t = std::clamp(t, 0.0, 1.0);
  int r, g, b;
  if (t < 0.5) {
    const double s = t / 0.5;
    r = static_cast<int>(std::lround(59 + s * (255 - 59)));
    g = static_cast<int>(std::lround(76 + s * (255 - 76)));
    b = static_cast<int>(std::lround(192 + s * (255 - 192)));
  } else {
    const double s = (t - 0.5) / 0.5;
    r = static_cast<int>(std::lround(255 - s * (255 - 180)));
    g = static_cast<int>(std::lround(255 - s * (255 - 4)));
    b = static_cast<int>(std::lround(255 - s * (255 - 38)));
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace detail

// Markers for measured points plus an optional fitted curve.
inline void line_plot_svg(const std::filesystem::path& path, const std::string& title, const std::vector<double>& x,
                          const std::vector<double>& y, const std::vector<double>& fit_x = {},
                          const std::vector<double>& fit_y = {}) {
  const int W = 480, H = 320, L = 60, R = 20, T = 36, B = 44;
  double xmin = x.empty() ? 0 : *std::min_element(x.begin(), x.end());
  double xmax = x.empty() ? 1 : *std::max_element(x.begin(), x.end());
  double ymax = 0.0;
  for (double v : y) ymax = std::max(ymax, v);
  for (double v : fit_y) ymax = std::max(ymax, v);
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > 0.0)) ymax = 1.0;
  auto px = [&](double v) { return L + (v - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double v) { return H - B - v / (1.1 * ymax) * (H - T - B); };

  std::ostringstream os;
  os << detail::svg_header(W, H);
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">alpha (rad)</text>\n";
  os << "<text x=\"14\" y=\"" << H / 2 << "\" transform=\"rotate(-90 14 " << H / 2
     << ")\" text-anchor=\"middle\">intensity (a.u.)</text>\n";
  if (!fit_x.empty()) {
    os << "<polyline fill=\"none\" stroke=\"#b40426\" points=\"";
    for (std::size_t i = 0; i < fit_x.size(); ++i) os << num(px(fit_x[i])) << "," << num(py(fit_y[i])) << " ";
    os << "\"/>\n";
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    os << "<circle cx=\"" << num(px(x[i])) << "\" cy=\"" << num(py(y[i])) << "\" r=\"3\" fill=\"#3b4cc0\"/>\n";
  }
  os << "</svg>\n";
  write_text(path, os.str());
}

// Bars for a 4x4 matrix (one panel for real, one for imaginary parts).
inline void matrix_bars_svg(const std::filesystem::path& path, const std::string& title,
                            const std::vector<double>& re, const std::vector<double>& im,
                            const std::vector<std::string>& labels) {
  const int W = 640, H = 300, panel = 300, T = 40, base = 220, scale = 160;
  std::ostringstream os;
  os << detail::svg_header(W, H);
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  for (int p = 0; p < 2; ++p) {
    const auto& vals = p == 0 ? re : im;
    const int x0 = 20 + p * (panel + 20);
    os << "<text x=\"" << x0 + panel / 2 << "\" y=\"" << T << "\" text-anchor=\"middle\">" << (p == 0 ? "Re" : "Im")
       << "</text>\n";
    os << "<line x1=\"" << x0 << "\" y1=\"" << base << "\" x2=\"" << x0 + panel << "\" y2=\"" << base
       << "\" stroke=\"black\"/>\n";
    for (std::size_t k = 0; k < vals.size(); ++k) {
      const double v = vals[k];
      const double h = std::abs(v) * scale;
      const double x = x0 + 4 + static_cast<double>(k) * (panel - 8) / static_cast<double>(vals.size());
      const double y = v >= 0 ? base - h : base;
      os << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"12\" height=\"" << num(h) << "\" fill=\""
         << (v >= 0 ? "#b40426" : "#3b4cc0") << "\"/>\n";
    }
    for (std::size_t r = 0; r < labels.size(); ++r) {
      os << "<text x=\"" << x0 + 4 + static_cast<int>(r) * (panel - 8) / static_cast<int>(labels.size())
         << "\" y=\"" << base + 30 + 0 << "\" font-size=\"9\">" << labels[r] << "</text>\n";
    }
  }
  os << "</svg>\n";
  write_text(path, os.str());
}

inline void heatmap_svg(const std::filesystem::path& path, const std::string& title,
                        const std::vector<std::vector<double>>& values, const std::vector<int>& row_labels,
                        const std::vector<int>& col_labels, double vmin, double vmax) {
  const int cell = 36, L = 50, T = 50;
  const int rows = static_cast<int>(values.size());
  const int cols = rows ? static_cast<int>(values.front().size()) : 0;
  const int W = L + cols * cell + 20, H = T + rows * cell + 40;
  std::ostringstream os;
  os << detail::svg_header(W, H);
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n";
  for (int r = 0; r < rows; ++r) {
    os << "<text x=\"" << L - 6 << "\" y=\"" << T + r * cell + cell / 2 + 4 << "\" text-anchor=\"end\">"
       << row_labels[static_cast<std::size_t>(r)] << "</text>\n";
    for (int c = 0; c < cols; ++c) {
      const double v = values[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      const double t = vmax > vmin ? (v - vmin) / (vmax - vmin) : 1.0;
      os << "<rect x=\"" << L + c * cell << "\" y=\"" << T + r * cell << "\" width=\"" << cell << "\" height=\"" << cell
         << "\" fill=\"" << detail::diverging(t) << "\"/>\n";
      char buf[16];
      std::snprintf(buf, sizeof buf, "%.2f", v);
      os << "<text x=\"" << L + c * cell + cell / 2 << "\" y=\"" << T + r * cell + cell / 2 + 4
         << "\" text-anchor=\"middle\" font-size=\"9\">" << buf << "</text>\n";
    }
  }
  for (int c = 0; c < cols; ++c) {
    os << "<text x=\"" << L + c * cell + cell / 2 << "\" y=\"" << T + rows * cell + 16 << "\" text-anchor=\"middle\">"
       << col_labels[static_cast<std::size_t>(c)] << "</text>\n";
  }
  os << "</svg>\n";
  write_text(path, os.str());
}

}  // namespace povmem::report
