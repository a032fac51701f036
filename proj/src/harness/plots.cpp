#include "confplan/harness/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace confplan::harness {

namespace {

std::string f2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s(buf);
  return s == "-0.00" ? "0.00" : s;
}

std::string label_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-9) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

class Svg {
 public:
  Svg(double w, double h) : w_(w), h_(h) {}

  void raw(const std::string& s) { body_ << s << '\n'; }
  void text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 12) {
    body_ << "<text x=\"" << f2(x) << "\" y=\"" << f2(y) << "\" font-size=\"" << size
          << "\" text-anchor=\"" << anchor << "\">" << escape(s) << "</text>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& style) {
    body_ << "<line x1=\"" << f2(x1) << "\" y1=\"" << f2(y1) << "\" x2=\"" << f2(x2) << "\" y2=\""
          << f2(y2) << "\" " << style << "/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& style) {
    body_ << "<polyline fill=\"none\" " << style << " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      body_ << (i ? " " : "") << f2(pts[i].first) << ',' << f2(pts[i].second);
    }
    body_ << "\"/>\n";
  }
  void circle(double cx, double cy, double r, const std::string& style) {
    body_ << "<circle cx=\"" << f2(cx) << "\" cy=\"" << f2(cy) << "\" r=\"" << f2(r) << "\" "
          << style << "/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& style) {
    body_ << "<rect x=\"" << f2(x) << "\" y=\"" << f2(y) << "\" width=\"" << f2(w)
          << "\" height=\"" << f2(h) << "\" " << style << "/>\n";
  }

  std::string str() const {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f2(w_) << "\" height=\"" << f2(h_)
        << "\" viewBox=\"0 0 " << f2(w_) << ' ' << f2(h_) << "\" font-family=\"sans-serif\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body_.str() << "</svg>\n";
    return out.str();
  }

 private:
  double w_;
  double h_;
  std::ostringstream body_;
};

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
  bool steps = false;
  int color = -1;  // palette slot; -1 uses the series index
  bool legend = true;
};

// Axes box with five ticks per axis and a legend in the top-right corner.
std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series, Range xr, Range yr) {
  const double W = 720;
  const double H = 440;
  const double L = 70;
  const double R = 20;
  const double T = 40;
  const double B = 55;
  xr.pad();
  yr.pad();
  auto sx = [&](double x) { return L + (x - xr.lo) / (xr.hi - xr.lo) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (y - yr.lo) / (yr.hi - yr.lo) * (H - T - B); };

  Svg svg(W, H);
  svg.text(W / 2, 24, title, "middle", 15);
  svg.rect(L, T, W - L - R, H - T - B, "fill=\"none\" stroke=\"#333\"");
  for (int k = 0; k <= 4; ++k) {
    const double xv = xr.lo + (xr.hi - xr.lo) * k / 4.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * k / 4.0;
    svg.line(sx(xv), H - B, sx(xv), H - B + 5, "stroke=\"#333\"");
    svg.text(sx(xv), H - B + 18, label_num(xv));
    svg.line(L - 5, sy(yv), L, sy(yv), "stroke=\"#333\"");
    svg.line(L, sy(yv), W - R, sy(yv), "stroke=\"#eee\"");
    svg.text(L - 8, sy(yv) + 4, label_num(yv), "end");
  }
  svg.text((L + W - R) / 2, H - 14, xlabel);
  svg.raw("<text x=\"16\" y=\"" + f2((T + H - B) / 2) + "\" font-size=\"12\" text-anchor=\"middle\" "
          "transform=\"rotate(-90 16 " + f2((T + H - B) / 2) + ")\">" + escape(ylabel) + "</text>");

  std::size_t n_legend = 0;
  for (const Series& se : series) n_legend += se.legend ? 1 : 0;
  if (n_legend > 0) {
    svg.rect(W - R - 158, T + 4, 150, 18.0 * static_cast<double>(n_legend) + 6,
             "fill=\"white\" fill-opacity=\"0.85\" stroke=\"#ccc\"");
  }
  std::size_t slot = 0;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const Series& se = series[s];
    const std::size_t c = se.color >= 0 ? static_cast<std::size_t>(se.color) : s;
    const std::string color = kPalette[c % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < se.x.size(); ++i) {
      if (se.steps && i > 0) pts.emplace_back(sx(se.x[i]), sy(se.y[i - 1]));
      pts.emplace_back(sx(se.x[i]), sy(se.y[i]));
    }
    std::string style = "stroke=\"" + color + "\" stroke-width=\"2\"";
    if (se.dashed) style += " stroke-dasharray=\"6,4\"";
    svg.polyline(pts, style);
    if (!se.legend) continue;
    const double ly = T + 20 + 18.0 * static_cast<double>(slot++);
    svg.line(W - R - 150, ly - 4, W - R - 125, ly - 4, style);
    svg.text(W - R - 120, ly, se.name, "start");
  }
  return svg.str();
}

std::string trajectory_frames(const CsvTable& d) {
  d.require({"frame", "t", "kind", "x", "y", "radius"});
  std::set<int> frames;
  Range xr;
  Range yr;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    frames.insert(static_cast<int>(d.number(i, "frame")));
    const double r = d.number(i, "radius");
    xr.add(d.number(i, "x") - r);
    xr.add(d.number(i, "x") + r);
    yr.add(d.number(i, "y") - r);
    yr.add(d.number(i, "y") + r);
  }
  xr.pad();
  yr.pad();
  const double panel = 320;
  const double margin = 20;
  const double scale = (panel - 2 * margin) / std::max(xr.hi - xr.lo, yr.hi - yr.lo);
  const double W = std::max<double>(1, static_cast<double>(frames.size())) * panel;
  const double panel_h = (yr.hi - yr.lo) * scale + 2 * margin;
  Svg svg(W, panel_h + 50);
  int col = 0;
  for (int f : frames) {
    const double ox = col * panel;
    auto px = [&](double x) { return ox + margin + (x - xr.lo) * scale; };
    auto py = [&](double y) { return 40 + panel_h - margin - (y - yr.lo) * scale; };
    svg.rect(px(xr.lo), py(yr.hi), (xr.hi - xr.lo) * scale, (yr.hi - yr.lo) * scale,
             "fill=\"none\" stroke=\"#999\"");
    std::map<std::string, std::vector<std::pair<double, double>>> lines;
    double t = 0.0;
    for (std::size_t i = 0; i < d.rows(); ++i) {
      if (static_cast<int>(d.number(i, "frame")) != f) continue;
      t = d.number(i, "t");
      const std::string& kind = d.cell(i, "kind");
      const double x = d.number(i, "x");
      const double y = d.number(i, "y");
      const double r = d.number(i, "radius");
      if (kind == "blocked") {
        svg.rect(px(x - r), py(y + r), 2 * r * scale, 2 * r * scale, "fill=\"#bbb\"");
      } else if (kind == "predicted") {
        svg.circle(px(x), py(y), r * scale, "fill=\"#f4a6a6\" fill-opacity=\"0.45\" stroke=\"#d62728\"");
        svg.circle(px(x), py(y), 2.5, "fill=\"#d62728\"");
      } else if (kind == "truth") {
        svg.circle(px(x), py(y), std::max(r * scale, 2.0), "fill=\"#444\" fill-opacity=\"0.6\"");
      } else if (kind == "robot") {
        svg.circle(px(x), py(y), std::max(r * scale, 4.0), "fill=\"#1f77b4\"");
      } else {
        lines[kind].emplace_back(px(x), py(y));
      }
    }
    for (const auto& [kind, pts] : lines) {
      std::string style = kind == "trail" ? "stroke=\"#1f77b4\" stroke-width=\"2\""
                                          : "stroke=\"#2ca02c\" stroke-width=\"1.5\" stroke-dasharray=\"4,3\"";
      svg.polyline(pts, style);
    }
    svg.text(ox + panel / 2, 28, "t = " + label_num(t), "middle", 14);
    ++col;
  }
  return svg.str();
}

std::string confidence_evolution(const CsvTable& d) {
  d.require({"mode", "t", "avg_path_confidence"});
  std::map<std::string, Series> by_mode;
  std::vector<std::string> order;
  Range xr;
  Range yr;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const std::string& m = d.cell(i, "mode");
    if (!by_mode.count(m)) {
      order.push_back(m);
      by_mode[m].name = m;
    }
    by_mode[m].x.push_back(d.number(i, "t"));
    by_mode[m].y.push_back(d.number(i, "avg_path_confidence"));
    xr.add(d.number(i, "t"));
    yr.add(d.number(i, "avg_path_confidence"));
  }
  std::vector<Series> series;
  for (const auto& m : order) series.push_back(by_mode[m]);
  return line_chart("Average path confidence per replanning cycle", "time", "average confidence",
                    series, xr, yr);
}

std::string coverage_plot(const CsvTable& d) {
  d.require({"curve", "t", "coverage"});
  std::map<std::string, Series> curves;
  std::vector<std::string> order;
  Range xr;
  Range yr;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const std::string& c = d.cell(i, "curve");
    if (!curves.count(c)) {
      order.push_back(c);
      curves[c].name = c;
    }
    curves[c].x.push_back(d.number(i, "t"));
    curves[c].y.push_back(d.number(i, "coverage"));
    xr.add(d.number(i, "t"));
    yr.add(d.number(i, "coverage"));
  }
  std::vector<Series> series;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::string& c = order[k];
    Series curve = curves[c];
    curve.color = static_cast<int>(k);
    series.push_back(curve);
    // Curves named c=<level> get their nominal level as a dashed line in the same color.
    if (c.rfind("c=", 0) == 0 && !curve.x.empty()) {
      const double level = std::stod(c.substr(2));
      series.push_back({"nominal " + c.substr(2), {curve.x.front(), curve.x.back()},
                        {level, level}, true, false, static_cast<int>(k), false});
      yr.add(level);
    }
  }
  yr.add(1.0);
  return line_chart("Empirical coverage per horizon step", "horizon step", "coverage", series, xr, yr);
}

std::string lambda_trace(const CsvTable& d) {
  d.require({"t", "lambda", "e_t"});
  Series lam{"lambda", {}, {}, false, true};
  Series rate{"running mean of e_t", {}, {}, true, false};
  Range xr;
  Range yr;
  double sum = 0.0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const double t = d.number(i, "t");
    lam.x.push_back(t);
    lam.y.push_back(d.number(i, "lambda"));
    sum += d.number(i, "e_t");
    rate.x.push_back(t);
    rate.y.push_back(sum / static_cast<double>(i + 1));
    xr.add(t);
    yr.add(lam.y.back());
    yr.add(rate.y.back());
  }
  yr.add(0.0);
  return line_chart("ACP scale and miscoverage", "feedback step", "value", {lam, rate}, xr, yr);
}

std::string heatmap(const CsvTable& d) {
  d.require({"confidence", "t", "threshold"});
  std::vector<double> levels;
  Range tr;
  Range vr;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const double c = d.number(i, "confidence");
    if (std::find(levels.begin(), levels.end(), c) == levels.end()) levels.push_back(c);
    tr.add(d.number(i, "t"));
    vr.add(d.number(i, "threshold"));
  }
  tr.pad();
  vr.pad();
  const int n_t = static_cast<int>(std::lround(tr.hi - tr.lo)) + 1;
  const double L = 80;
  const double T = 40;
  const double cw = std::max(6.0, 600.0 / n_t);
  const double ch = 28;
  const double W = L + cw * n_t + 30;
  const double H = T + ch * static_cast<double>(levels.size()) + 80;
  Svg svg(W, H);
  svg.text(W / 2, 24, "Conformal thresholds by confidence level and step", "middle", 15);
  auto color = [&](double v) {
    const double u = (v - vr.lo) / (vr.hi - vr.lo);
    const int g = static_cast<int>(std::lround(255.0 * (1.0 - u)));
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#ff%02x%02x", g, g);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const double c = d.number(i, "confidence");
    const auto row = static_cast<double>(std::find(levels.begin(), levels.end(), c) - levels.begin());
    const double t = d.number(i, "t") - tr.lo;
    svg.rect(L + t * cw, T + row * ch, cw, ch,
             "fill=\"" + color(d.number(i, "threshold")) + "\" stroke=\"white\" stroke-width=\"0.5\"");
  }
  for (std::size_t r = 0; r < levels.size(); ++r) {
    svg.text(L - 8, T + static_cast<double>(r) * ch + ch / 2 + 4, "c=" + label_num(levels[r]), "end");
  }
  const double by = T + ch * static_cast<double>(levels.size());
  for (int k = 0; k <= 4; ++k) {
    const double tv = tr.lo + (tr.hi - tr.lo) * k / 4.0;
    svg.text(L + (tv - tr.lo + 0.5) * cw, by + 16, label_num(tv));
  }
  svg.text(L + cw * n_t / 2, by + 34, "horizon step");
  svg.text(L, by + 60, "threshold range " + label_num(vr.lo) + " (white) to " + label_num(vr.hi) +
                           " (red)", "start");
  return svg.str();
}

}  // namespace

std::string to_string(PlotKind k) {
  switch (k) {
    case PlotKind::trajectory_frames: return "trajectory_frames";
    case PlotKind::confidence_evolution: return "confidence_evolution";
    case PlotKind::coverage_curve: return "coverage_curve";
    case PlotKind::lambda_trace: return "lambda_trace";
    case PlotKind::quantile_table_heatmap: return "quantile_table_heatmap";
  }
  return "unknown";
}

PlotKind plot_kind_from_string(const std::string& name) {
  for (PlotKind k : {PlotKind::trajectory_frames, PlotKind::confidence_evolution,
                     PlotKind::coverage_curve, PlotKind::lambda_trace,
                     PlotKind::quantile_table_heatmap}) {
    if (to_string(k) == name) return k;
  }
  throw PlotError("unknown plot kind '" + name + "'");
}

std::string default_data_file(PlotKind k) {
  switch (k) {
    case PlotKind::trajectory_frames: return "frames.csv";
    case PlotKind::confidence_evolution: return "confidence_evolution.csv";
    case PlotKind::coverage_curve: return "coverage_curve.csv";
    case PlotKind::lambda_trace: return "acp_trace_trial0.csv";
    case PlotKind::quantile_table_heatmap: return "quantile_table.csv";
  }
  return "";
}

CsvTable CsvTable::read(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw PlotError("cannot open " + file.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse(s.str(), file.string());
}

CsvTable CsvTable::parse(const std::string& text, const std::string& source) {
  CsvTable t;
  t.source_ = source;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ls(l);
    while (std::getline(ls, cell, ',')) out.push_back(cell);
    if (!l.empty() && l.back() == ',') out.emplace_back();
    return out;
  };
  if (!std::getline(in, line)) throw PlotError(source + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split(line);
  for (std::size_t i = 0; i < header.size(); ++i) t.index_[header[i]] = i;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != header.size()) {
      throw PlotError(source + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(header.size()) + " fields, got " + std::to_string(row.size()));
    }
    t.rows_.push_back(std::move(row));
  }
  return t;
}

void CsvTable::require(const std::vector<std::string>& columns) const {
  std::string missing;
  for (const auto& c : columns) {
    if (!has(c)) missing += (missing.empty() ? "" : ", ") + c;
  }
  if (!missing.empty()) throw PlotError(source_ + ": missing column(s): " + missing);
}

const std::string& CsvTable::cell(std::size_t row, const std::string& column) const {
  auto it = index_.find(column);
  if (it == index_.end()) throw PlotError(source_ + ": missing column(s): " + column);
  return rows_[row][it->second];
}

double CsvTable::number(std::size_t row, const std::string& column) const {
  const std::string& s = cell(row, column);
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw PlotError(source_ + ": row " + std::to_string(row + 2) + ", column " + column +
                    ": '" + s + "' is not a number");
  }
}

std::string render_plot(PlotKind kind, const CsvTable& data) {
  switch (kind) {
    case PlotKind::trajectory_frames: return trajectory_frames(data);
    case PlotKind::confidence_evolution: return confidence_evolution(data);
    case PlotKind::coverage_curve: return coverage_plot(data);
    case PlotKind::lambda_trace: return lambda_trace(data);
    case PlotKind::quantile_table_heatmap: return heatmap(data);
  }
  throw PlotError("unknown plot kind");
}

void emit_plot(const PlotSpec& spec) {
  const std::string svg = render_plot(spec.kind, CsvTable::read(spec.data_path));
  std::ofstream out(spec.output_path, std::ios::binary);
  if (!out) throw PlotError("cannot write " + spec.output_path.string());
  out << svg;
}

}  // namespace confplan::harness
