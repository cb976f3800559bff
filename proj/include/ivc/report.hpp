#pragma once

// CSV and SVG artifacts. Output is a pure function of the inputs: fixed
// number formatting, no timestamps, no locale dependence.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ivc/neural/evaluate.hpp"
#include "ivc/neural/partition.hpp"

namespace ivc::report {

/// Shortest round-trippable-enough decimal ("%.12g").
[[nodiscard]] inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Plain comma-separated table; cells never contain commas or quotes.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError("csv has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline void write_csv(std::ostream& os, const CsvTable& t) {
  auto line = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

[[nodiscard]] inline CsvTable parse_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size()) throw ValidationError("csv row has " + std::to_string(cells.size()) + " cells, header has " + std::to_string(t.header.size()));
      t.rows.push_back(std::move(cells));
    }
  }
  if (first) throw ValidationError("csv is empty (no header row)");
  return t;
}

[[nodiscard]] inline CsvTable read_csv(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot open " + p.string());
  return parse_csv(in);
}

[[nodiscard]] inline double cell_double(const CsvTable& t, std::size_t row, std::size_t col) {
  const std::string& s = t.rows.at(row).at(col);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ValidationError("csv cell '" + s + "' is not a number");
  return v;
}

/// Columns: x, y, class_id, prob_mass (one row per grid point, row-major).
[[nodiscard]] inline CsvTable partition_table(const nn::PartitionMap& map) {
  CsvTable t{{"x", "y", "class_id", "prob_mass"}, {}};
  t.rows.reserve(map.class_id.size());
  for (std::size_t i = 0; i < map.class_id.size(); ++i) {
    const auto c = map.class_id[i];
    t.rows.push_back({num(map.x(i)), num(map.y(i)), std::to_string(c), num(map.prob_mass[c])});
  }
  return t;
}

/// Rebuilds a partition map from its CSV (square grid, row-major order).
[[nodiscard]] inline nn::PartitionMap partition_from_table(const CsvTable& t) {
  const std::size_t n = t.rows.size();
  auto res = static_cast<std::size_t>(std::llround(std::sqrt(double(n))));
  if (n == 0 || res * res != n) throw ValidationError("partition csv does not describe a square grid");
  const auto cx = t.column("x"), cc = t.column("class_id"), cp = t.column("prob_mass");
  nn::PartitionMap m;
  m.grid = {cell_double(t, 0, cx), cell_double(t, n - 1, cx), res};
  m.class_id.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = cell_double(t, i, cc);
    if (c < 0.0 || c != std::floor(c)) throw ValidationError("partition class_id must be a non-negative integer");
    const auto id = static_cast<std::uint32_t>(c);
    m.class_id[i] = id;
    if (id >= m.prob_mass.size()) {
      m.prob_mass.resize(id + 1, 0.0);
      m.codes.resize(id + 1);
    }
    m.prob_mass[id] = cell_double(t, i, cp);
  }
  return m;
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

/// Fixed qualitative palette, cycled with alternating lightness.
[[nodiscard]] inline std::string class_color(std::uint32_t id) {
  static constexpr const char* kBase[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
                                          "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#1f77b4", "#2ca02c"};
  static constexpr const char* kLight[] = {"#a0cbe8", "#ffbe7d", "#ff9d9a", "#b6dcd8", "#8cd17d", "#f1ce63",
                                           "#d4a6c8", "#fabfd2", "#d7b5a6", "#d9d4d1", "#aec7e8", "#98df8a"};
  constexpr std::uint32_t k = 12;
  return (id / k) % 2 == 0 ? kBase[id % k] : kLight[id % k];
}

/// Partition as merged rectangles: horizontal runs of equal class per row,
/// then runs with identical extent and class stacked across rows.
[[nodiscard]] inline std::string partition_svg(const nn::PartitionMap& map, int pixels = 500) {
  const std::size_t r = map.grid.resolution;
  const double cell = double(pixels) / double(r);
  struct Run {
    std::size_t x0, x1, y0, y1;
    std::uint32_t cls;
  };
  std::vector<Run> done, open;
  for (std::size_t iy = 0; iy < r; ++iy) {
    std::vector<Run> row;
    for (std::size_t ix = 0; ix < r;) {
      const auto c = map.class_id[iy * r + ix];
      std::size_t end = ix + 1;
      while (end < r && map.class_id[iy * r + end] == c) ++end;
      row.push_back({ix, end, iy, iy + 1, c});
      ix = end;
    }
    std::vector<Run> next;
    std::size_t k = 0;
    for (auto& run : row) {
      while (k < open.size() && open[k].x0 < run.x0) done.push_back(open[k++]);
      if (k < open.size() && open[k].x0 == run.x0 && open[k].x1 == run.x1 && open[k].cls == run.cls) {
        open[k].y1 = iy + 1;
        next.push_back(open[k++]);
      } else {
        next.push_back(run);
      }
    }
    while (k < open.size()) done.push_back(open[k++]);
    open = std::move(next);
  }
  done.insert(done.end(), open.begin(), open.end());
  std::sort(done.begin(), done.end(), [](const Run& a, const Run& b) { return std::tie(a.y0, a.x0) < std::tie(b.y0, b.x0); });

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << pixels << "\" height=\"" << pixels << "\" viewBox=\"0 0 "
     << pixels << ' ' << pixels << "\" shape-rendering=\"crispEdges\">\n";
  os << "<title>quantization partition of [" << num(map.grid.lo) << ", " << num(map.grid.hi) << "]^2, "
     << map.num_classes() << " codes</title>\n";
  for (const auto& run : done) {
    // Row iy=0 holds the smallest y, drawn at the bottom.
    const double x = double(run.x0) * cell, w = double(run.x1 - run.x0) * cell;
    const double y = double(pixels) - double(run.y1) * cell, h = double(run.y1 - run.y0) * cell;
    os << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
       << "\" fill=\"" << class_color(run.cls) << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// One plotted curve: points in (distortion, rate) plus an optional AURD label.
struct Series {
  std::string name;
  std::vector<nn::RDPoint> points;
  std::optional<nn::MeanSe> aurd;
};

struct PlotOptions {
  std::string title = "rate-invariance sweep";
  std::string x_label = "invariant distortion (readout risk)";
  std::string y_label = "rate [bits]";
  int width = 640;
  int height = 440;
};

namespace detail {

inline double nice_step(double span) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

inline std::string escape_xml(const std::string& s) {
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

}  // namespace detail

/// Line plot of rate against distortion, one polyline per series, with axes,
/// ticks and a legend carrying the AURD annotations. No series gives axes only.
[[nodiscard]] inline std::string ri_curve_svg(const std::vector<Series>& series, const PlotOptions& opt = {}) {
  double x_max = 0.0, y_max = 0.0;
  for (const auto& s : series)
    for (const auto& p : s.points) {
      if (std::isfinite(p.distortion)) x_max = std::max(x_max, p.distortion);
      if (std::isfinite(p.rate)) y_max = std::max(y_max, p.rate);
    }
  const double xs = detail::nice_step(x_max > 0.0 ? x_max : 1.0), ys = detail::nice_step(y_max > 0.0 ? y_max : 1.0);
  x_max = xs * std::ceil((x_max > 0.0 ? x_max : 1.0) / xs);
  y_max = ys * std::ceil((y_max > 0.0 ? y_max : 1.0) / ys);

  const double left = 64, right = 16, top = 32, bottom = 48;
  const double pw = opt.width - left - right, ph = opt.height - top - bottom;
  auto px = [&](double x) { return left + pw * x / x_max; };
  auto py = [&](double y) { return top + ph * (1.0 - y / y_max); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
     << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(left + pw / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << detail::escape_xml(opt.title) << "</text>\n";
  os << "<g stroke=\"black\" stroke-width=\"1\">\n";
  os << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(left + pw) << "\" y2=\"" << num(top + ph) << "\"/>\n";
  os << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\"" << num(top + ph) << "\"/>\n";
  os << "</g>\n";
  for (double x = 0.0; x <= x_max + 1e-9 * x_max; x += xs) {
    os << "<line x1=\"" << num(px(x)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(px(x)) << "\" y2=\""
       << num(top + ph + 4) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << num(px(x)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">" << num(x) << "</text>\n";
  }
  for (double y = 0.0; y <= y_max + 1e-9 * y_max; y += ys) {
    os << "<line x1=\"" << num(left - 4) << "\" y1=\"" << num(py(y)) << "\" x2=\"" << num(left) << "\" y2=\""
       << num(py(y)) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << num(y) << "</text>\n";
  }
  os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(opt.height - 10) << "\" text-anchor=\"middle\">"
     << detail::escape_xml(opt.x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << detail::escape_xml(opt.y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    auto pts = series[k].points;
    std::sort(pts.begin(), pts.end(), [](const nn::RDPoint& a, const nn::RDPoint& b) { return a.distortion < b.distortion; });
    const std::string color = class_color(static_cast<std::uint32_t>(k));
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) os << (i ? " " : "") << num(px(pts[i].distortion)) << ',' << num(py(pts[i].rate));
    os << "\"/>\n";
    for (const auto& p : pts)
      os << "<circle cx=\"" << num(px(p.distortion)) << "\" cy=\"" << num(py(p.rate)) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    std::string label = series[k].name;
    if (series[k].aurd) label += "  AURD " + num(series[k].aurd->mean) + " ± " + num(series[k].aurd->se);
    const double ly = top + 16 + 18 * double(k);
    os << "<rect x=\"" << num(left + pw - 230) << "\" y=\"" << num(ly - 10) << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>";
    os << "<text x=\"" << num(left + pw - 212) << "\" y=\"" << num(ly) << "\">" << detail::escape_xml(label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Sweep tables and report rendering
// ---------------------------------------------------------------------------

/// Per-objective series from a sweep table (columns objective, lambda, seed,
/// rate_bits, distortion): rate and distortion averaged over seeds at each
/// lambda; AURD computed per seed then summarized.
[[nodiscard]] inline std::vector<Series> series_from_sweep(const CsvTable& t) {
  const auto co = t.column("objective"), cl = t.column("lambda"), cs = t.column("seed");
  const auto cr = t.column("rate_bits"), cd = t.column("distortion");
  std::map<std::string, std::map<double, std::vector<nn::RDPoint>>> by_lambda;
  std::map<std::string, std::map<std::string, std::vector<nn::RDPoint>>> by_seed;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const nn::RDPoint p{cell_double(t, i, cd), cell_double(t, i, cr)};
    by_lambda[t.rows[i][co]][cell_double(t, i, cl)].push_back(p);
    by_seed[t.rows[i][co]][t.rows[i][cs]].push_back(p);
  }
  std::vector<Series> out;
  for (const auto& [name, lambdas] : by_lambda) {
    Series s{name, {}, {}};
    for (const auto& [lambda, pts] : lambdas) {
      nn::RDPoint mean{};
      for (const auto& p : pts) {
        mean.distortion += p.distortion / double(pts.size());
        mean.rate += p.rate / double(pts.size());
      }
      s.points.push_back(mean);
    }
    std::vector<double> areas;
    for (const auto& [seed, pts] : by_seed[name]) areas.push_back(nn::aurd(pts));
    s.aurd = nn::mean_se(areas);
    out.push_back(std::move(s));
  }
  return out;
}

/// Renders every SVG a run directory supports from its CSVs: sweep.csv ->
/// ri_curves.svg, partition*.csv -> matching .svg. Returns the written paths.
/// Throws ValidationError when the directory holds no metrics.
inline std::vector<std::filesystem::path> render_report(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ValidationError("run directory " + dir.string() + " does not exist");
  std::vector<fs::path> written;
  auto emit = [&written](const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
    if (!out) throw ValidationError("cannot write " + p.string());
    written.push_back(p);
  };
  const fs::path sweep = dir / "sweep.csv";
  std::vector<fs::path> partitions;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("partition", 0) == 0 && e.path().extension() == ".csv") partitions.push_back(e.path());
  }
  std::sort(partitions.begin(), partitions.end());
  if (!fs::exists(sweep) && partitions.empty()) throw ValidationError("no metrics (sweep.csv or partition*.csv) in " + dir.string());
  if (fs::exists(sweep)) emit(dir / "ri_curves.svg", ri_curve_svg(series_from_sweep(read_csv(sweep))));
  for (const auto& p : partitions) {
    auto svg = p;
    svg.replace_extension(".svg");
    emit(svg, partition_svg(partition_from_table(read_csv(p))));
  }
  return written;
}

}  // namespace ivc::report
