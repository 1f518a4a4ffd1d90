#include "topolab/report.hpp"

#include "topolab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace topolab {

namespace {

constexpr double kWidth = 640.0;
constexpr double kPanelHeight = 360.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;

  void widen() {
    if (hi <= lo) {
      const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
      lo -= pad;
      hi += pad;
    }
  }
};

Range range_of(const std::vector<double>& v) {
  Range r{*std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())};
  r.widen();
  return r;
}

class Panel {
 public:
  Panel(std::string& out, int index, Range x, Range y) : out_(out), x_(x), y_(y), top_(index * kPanelHeight) {}

  double px(double x) const { return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
  double py(double y) const {
    return top_ + kPanelHeight - kBottom - (y - y_.lo) / (y_.hi - y_.lo) * (kPanelHeight - kTop - kBottom);
  }

  void frame(const std::string& title, const std::string& xlabel, const std::string& ylabel, bool log_x, bool log_y) {
    const double x0 = kLeft;
    const double x1 = kWidth - kRight;
    const double y0 = top_ + kPanelHeight - kBottom;
    const double y1 = top_ + kTop;
    out_ += "<rect x=\"" + num(x0) + "\" y=\"" + num(y1) + "\" width=\"" + num(x1 - x0) + "\" height=\"" +
            num(y0 - y1) + "\" fill=\"none\" stroke=\"#000\"/>\n";
    out_ += "<text x=\"" + num(kWidth / 2) + "\" y=\"" + num(top_ + 24) + "\" text-anchor=\"middle\">" + title +
            "</text>\n";
    out_ += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(y0 + 38) + "\" text-anchor=\"middle\">" + xlabel +
            "</text>\n";
    out_ += "<text x=\"16\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
            num((y0 + y1) / 2) + ")\">" + ylabel + "</text>\n";
    for (int k = 0; k <= 4; ++k) {
      const double xv = x_.lo + (x_.hi - x_.lo) * k / 4.0;
      const double yv = y_.lo + (y_.hi - y_.lo) * k / 4.0;
      out_ += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(y0 + 16) + "\" text-anchor=\"middle\" font-size=\"11\">" +
              label(log_x ? std::pow(10.0, xv) : xv) + "</text>\n";
      out_ += "<text x=\"" + num(x0 - 6) + "\" y=\"" + num(py(yv) + 4) + "\" text-anchor=\"end\" font-size=\"11\">" +
              label(log_y ? std::pow(10.0, yv) : yv) + "</text>\n";
    }
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const char* colour, bool dashed = false) {
    if (pts.empty()) return;
    out_ += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\"";
    if (dashed) out_ += " stroke-dasharray=\"6 4\"";
    out_ += " points=\"";
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k) out_ += ' ';
      out_ += num(px(pts[k].first)) + "," + num(py(pts[k].second));
    }
    out_ += "\"/>\n";
  }

  void dot(double x, double y, const char* colour) {
    out_ += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"2.5\" fill=\"" + colour + "\"/>\n";
  }

  void legend(int row, const std::string& text, const char* colour) {
    const double x = kWidth - kRight - 110;
    const double y = top_ + kTop + 14 + 14 * row;
    out_ += "<line x1=\"" + num(x) + "\" y1=\"" + num(y - 4) + "\" x2=\"" + num(x + 18) + "\" y2=\"" + num(y - 4) +
            "\" stroke=\"" + colour + "\"/>\n";
    out_ += "<text x=\"" + num(x + 24) + "\" y=\"" + num(y) + "\" font-size=\"11\">" + text + "</text>\n";
  }

 private:
  std::string& out_;
  Range x_;
  Range y_;
  double top_;
};

}  // namespace

std::string render_report(const std::vector<TrialRow>& trials, const std::vector<AggregateRow>& aggregate) {
  if (trials.empty()) throw ValidationError("report: empty trial set");
  if (aggregate.empty()) throw ValidationError("report: empty aggregate");

  std::map<std::size_t, std::vector<std::pair<double, double>>> by_n;
  double t_end = 0.0;
  for (const auto& row : aggregate) {
    by_n[row.n].emplace_back(row.t, row.mean_d_n);
    t_end = std::max(t_end, row.t);
  }

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(3 * kPanelHeight) +
         "\" font-family=\"sans-serif\" font-size=\"13\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";

  {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& row : aggregate) {
      xs.push_back(row.t);
      ys.push_back(row.mean_d_n);
    }
    Range yr = range_of(ys);
    yr.lo = std::min(yr.lo, 0.0);
    yr.widen();
    Panel p(svg, 0, range_of(xs), yr);
    p.frame("mean D_N(t)", "t", "D_N", false, false);
    int k = 0;
    for (const auto& [n, pts] : by_n) {
      const char* colour = kPalette[k % 10];
      p.polyline(pts, colour);
      p.legend(k, "N = " + std::to_string(n), colour);
      ++k;
    }
  }

  {
    std::vector<std::pair<double, double>> means;
    std::vector<std::pair<double, double>> bounds;
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& row : aggregate) {
      if (row.t != t_end || row.n < 2) continue;
      const double x = std::log10(static_cast<double>(row.n - 1));
      xs.push_back(x);
      const double b = std::log10(row.bound);
      bounds.emplace_back(x, b);
      ys.push_back(b);
      if (row.mean_d_n > 0.0) {
        means.emplace_back(x, std::log10(row.mean_d_n));
        ys.push_back(std::log10(row.mean_d_n));
      }
    }
    Panel p(svg, 1, range_of(xs), range_of(ys));
    p.frame("mean D_N(T) against N-1", "N-1", "D_N(T)", true, true);
    p.polyline(bounds, "#d62728", true);
    p.polyline(means, "#1f77b4");
    for (const auto& [x, y] : means) p.dot(x, y, "#1f77b4");
    p.legend(0, "mean D_N(T)", "#1f77b4");
    p.legend(1, "bound", "#d62728");
  }

  {
    std::vector<std::pair<double, double>> pts;
    std::vector<double> xs{0.0};
    std::vector<double> ys{0.0};
    for (const auto& row : trials) {
      if (row.t != t_end || !std::isfinite(row.tv)) continue;
      pts.emplace_back(row.d_n, row.tv);
      xs.push_back(row.d_n);
      ys.push_back(row.tv);
    }
    Panel p(svg, 2, range_of(xs), range_of(ys));
    p.frame("TV estimate against D_N at t = T", "D_N", "TV", false, false);
    for (const auto& [x, y] : pts) p.dot(x, y, "#2ca02c");
  }

  svg += "</svg>\n";
  return svg;
}

void render_report_files(const std::filesystem::path& input_dir, const std::filesystem::path& output) {
  std::ifstream trials_in(input_dir / "trials.csv");
  if (!trials_in) throw ValidationError("report: missing trials.csv in " + input_dir.string());
  std::ifstream aggregate_in(input_dir / "aggregate.csv");
  if (!aggregate_in) throw ValidationError("report: missing aggregate.csv in " + input_dir.string());
  const auto trials = read_trials_csv(trials_in);
  const auto aggregate = read_aggregate_csv(aggregate_in);
  write_file_atomic(output, render_report(trials, aggregate));
}

}  // namespace topolab
