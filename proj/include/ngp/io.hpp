#pragma once

// CSV, JSON and SVG output of runs and sweeps.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ngp/driver.hpp"

namespace ngp::io {

/// %.17g, which round-trips every double.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_steps_csv(std::ostream& os, const std::vector<StepResult>& steps, bool timing) {
  if (steps.empty()) throw InvalidArgument("no step results to write");
  os << "step,time,rel_l2_error,nlml,trace_cov,wall_ms\n";
  for (const auto& s : steps) {
    os << s.step << ',' << fmt(s.time) << ',' << (s.rel_l2_error ? fmt(*s.rel_l2_error) : "") << ','
       << fmt(s.nlml) << ',' << fmt(s.trace_cov) << ',' << fmt(timing ? s.wall_ms : 0.0) << '\n';
  }
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& rep) {
  if (rep.points.empty()) throw InvalidArgument("empty convergence report");
  os << "sweep_value,rel_l2_error\n";
  for (const auto& p : rep.points) os << fmt(p.value) << ',' << (p.rel_l2_error ? fmt(*p.rel_l2_error) : "") << '\n';
  os << "# fitted_slope=" << (rep.fit ? fmt(rep.fit->slope) : std::string("nan")) << '\n';
}

inline nlohmann::ordered_json state_json(const GaussianState& s, int dim) {
  nlohmann::ordered_json j;
  j["step"] = s.step_index;
  j["time"] = s.time;
  j["fields"] = nlohmann::ordered_json::array();
  for (const auto& f : s.fields) j["fields"].push_back({{"name", f.name}, {"offset", f.offset}, {"count", f.count}});
  j["locations"] = nlohmann::ordered_json::array();
  for (const auto& x : s.locations) {
    if (dim == 1) {
      j["locations"].push_back(x[0]);
    } else {
      j["locations"].push_back({x[0], x[1]});
    }
  }
  j["mean"] = std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size());
  j["cov"] = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < s.cov.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(s.cov.cols()));
    for (Eigen::Index c = 0; c < s.cov.cols(); ++c) row[static_cast<std::size_t>(c)] = s.cov(r, c);
    j["cov"].push_back(row);
  }
  return j;
}

inline void write_state_json(std::ostream& os, const GaussianState& s, int dim) { os << state_json(s, dim).dump(1) << '\n'; }

inline void write_sweep_json(std::ostream& os, const ConvergenceReport& rep) {
  nlohmann::ordered_json j;
  j["kind"] = rep.kind == SweepKind::dt ? "dt" : "n";
  j["points"] = nlohmann::ordered_json::array();
  for (const auto& p : rep.points) {
    nlohmann::ordered_json e{{"sweep_value", p.value}, {"effective_dt", p.effective_dt}, {"n_steps", p.n_steps}};
    e["rel_l2_error"] = p.rel_l2_error ? nlohmann::ordered_json(*p.rel_l2_error) : nlohmann::ordered_json();
    if (!p.failure.empty()) e["failure"] = p.failure;
    j["points"].push_back(e);
  }
  if (rep.fit) {
    j["fitted_slope"] = rep.fit->slope;
    j["fit_points"] = rep.fit->used;
  } else {
    j["fitted_slope"] = nullptr;
  }
  os << j.dump(1) << '\n';
}

// ---------------------------------------------------------------- svg

struct Series {
  std::vector<double> x, y;
  std::string color;
  bool dashed = false;
};

struct Band {
  std::vector<double> x, lo, hi;
};

/// Minimal static line chart.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel, bool log_y = false)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)), log_y_(log_y) {}

  void add(Series s) { series_.push_back(std::move(s)); }
  void band(Band b) { bands_.push_back(std::move(b)); }

  void write(std::ostream& os) const {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    auto extend = [&](const std::vector<double>& xs, const std::vector<double>& ys) {
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double y = ty(ys[i]);
        if (!std::isfinite(y)) continue;
        x0 = std::min(x0, xs[i]);
        x1 = std::max(x1, xs[i]);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    };
    for (const auto& s : series_) extend(s.x, s.y);
    for (const auto& b : bands_) {
      extend(b.x, b.lo);
      extend(b.x, b.hi);
    }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) y1 = y0 + 1.0;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); };
    auto py = [&](double y) { return kHeight - kBottom - (ty(y) - y0) / (y1 - y0) * (kHeight - kTop - kBottom); };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title_ << "</text>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 8 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << xlabel_ << "</text>\n";
    os << "<text x=\"14\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 14 " << kHeight / 2
       << ")\" text-anchor=\"middle\" font-size=\"12\">" << ylabel_ << "</text>\n";
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight << "\" height=\""
       << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double xv = x0 + (x1 - x0) * k / 4.0;
      const double yv = y0 + (y1 - y0) * k / 4.0;
      os << "<text x=\"" << px(xv) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
         << tick(xv) << "</text>\n";
      const double ypix = kHeight - kBottom - (yv - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
      os << "<text x=\"" << kLeft - 4 << "\" y=\"" << ypix + 3 << "\" text-anchor=\"end\" font-size=\"10\">"
         << (log_y_ ? "1e" + tick(yv) : tick(yv)) << "</text>\n";
    }
    for (const auto& b : bands_) {
      os << "<polygon fill=\"orange\" fill-opacity=\"0.35\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < b.x.size(); ++i) os << px(b.x[i]) << ',' << py(b.hi[i]) << ' ';
      for (std::size_t i = b.x.size(); i-- > 0;) os << px(b.x[i]) << ',' << py(b.lo[i]) << ' ';
      os << "\"/>\n";
    }
    for (const auto& s : series_) {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
         << (s.dashed ? " stroke-dasharray=\"6 3\"" : "") << " points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(ty(s.y[i]))) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
      os << "\"/>\n";
    }
    os << "</svg>\n";
  }

 private:
  static constexpr int kWidth = 640, kHeight = 400, kLeft = 60, kRight = 20, kTop = 30, kBottom = 45;

  double ty(double y) const { return log_y_ ? (y > 0.0 ? std::log10(y) : std::nan("")) : y; }
  static std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
  }

  std::string title_, xlabel_, ylabel_;
  bool log_y_;
  std::vector<Series> series_;
  std::vector<Band> bands_;
};

inline void write_error_svg(std::ostream& os, const std::vector<StepResult>& steps) {
  SvgPlot plot("relative L2 error", "t", "error", true);
  Series s{{}, {}, "red", false};
  for (const auto& r : steps) {
    if (!r.rel_l2_error) continue;
    s.x.push_back(r.time);
    s.y.push_back(*r.rel_l2_error);
  }
  plot.add(std::move(s));
  plot.write(os);
}

/// Mean ± 2 standard deviations of a 1-D state field at its locations, with
/// the reference solution.
inline void write_band_svg(std::ostream& os, const ProblemSpec& p, const GaussianState& s, const std::string& field) {
  const auto& f = s.field(field);
  std::vector<std::size_t> order(f.count);
  for (std::size_t i = 0; i < f.count; ++i) order[i] = f.offset + i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.locations[a][0] < s.locations[b][0]; });
  Band band;
  Series mean{{}, {}, "red", true};
  for (auto i : order) {
    const double m = s.mean[static_cast<Eigen::Index>(i)];
    const double sd = std::sqrt(std::max(0.0, s.cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i))));
    band.x.push_back(s.locations[i][0]);
    band.lo.push_back(m - 2.0 * sd);
    band.hi.push_back(m + 2.0 * sd);
    mean.x.push_back(s.locations[i][0]);
    mean.y.push_back(m);
  }
  Series truth{{}, {}, "blue", false};
  for (int k = 0; k <= 200; ++k) {
    const double x = p.domain.lo[0] + (p.domain.hi[0] - p.domain.lo[0]) * k / 200.0;
    truth.x.push_back(x);
    truth.y.push_back(reference_solution(p, s.time, {x, 0.0}, field));
  }
  std::ostringstream title;
  title << to_string(p.name) << ' ' << field << " at t = " << s.time;
  SvgPlot plot(title.str(), "x", field);
  plot.band(std::move(band));
  plot.add(std::move(truth));
  plot.add(std::move(mean));
  plot.write(os);
}

inline void write_convergence_svg(std::ostream& os, const ConvergenceReport& rep) {
  SvgPlot plot("final-time error", rep.kind == SweepKind::dt ? "log10 dt" : "log10 N", "error", true);
  Series s{{}, {}, "red", false};
  for (const auto& p : rep.points) {
    if (!p.rel_l2_error) continue;
    s.x.push_back(std::log10(rep.kind == SweepKind::dt ? p.effective_dt : p.value));
    s.y.push_back(*p.rel_l2_error);
  }
  plot.add(std::move(s));
  plot.write(os);
}

}  // namespace ngp::io
