#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "gaegd/bench.hpp"
#include "gaegd/error.hpp"
#include "gaegd/numfmt.hpp"

namespace gaegd::bench {

namespace {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> pts;
};

constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c",
                                                "#9467bd", "#ff7f0e", "#17becf"};
constexpr double kW = 640, kH = 420, kPad = 50;

std::string coord(double v) { return format_double(std::round(v * 100) / 100); }

std::string file_label(const std::string& label, std::size_t i) {
  std::string out = label.empty() ? "run" : label;
  for (char& ch : out) {
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
  }
  return std::to_string(i) + "_" + out;
}

Series extract(const LabeledTrajectory& run, PlotKind kind) {
  Series s{run.label, {}};
  const Trajectory& t = run.trajectory;
  if (kind == PlotKind::Trajectory2d) {
    for (const auto& st : t.steps) {
      if (st.x_snapshot) s.pts.emplace_back((*st.x_snapshot)[0], (*st.x_snapshot)[1]);
    }
    if (t.terminal.x.size() == 2) s.pts.emplace_back(t.terminal.x[0], t.terminal.x[1]);
    return s;
  }
  for (const auto& st : t.steps) {
    const double k = static_cast<double>(st.k);
    switch (kind) {
      case PlotKind::LossCurve: s.pts.emplace_back(k, st.f); break;
      case PlotKind::RCurve: s.pts.emplace_back(k, st.r); break;
      case PlotKind::EtaCurve: s.pts.emplace_back(k, st.eta_eff); break;
      case PlotKind::Trajectory2d: break;
    }
  }
  if (kind == PlotKind::LossCurve) s.pts.emplace_back(t.terminal.k, t.terminal.f);
  if (kind == PlotKind::RCurve) s.pts.emplace_back(t.terminal.k, t.terminal.r);
  return s;
}

std::string header(PlotKind kind) {
  switch (kind) {
    case PlotKind::LossCurve: return "k,f";
    case PlotKind::RCurve: return "k,r";
    case PlotKind::EtaCurve: return "k,eta_eff";
    case PlotKind::Trajectory2d: return "x0,x1";
  }
  return "";
}

struct Frame {
  double x0, x1, y0, y1;
  bool logy;

  double px(double x) const { return kPad + (x - x0) / (x1 - x0) * (kW - 2 * kPad); }
  double py(double y) const {
    const double v = logy ? std::log10(y) : y;
    return kH - kPad - (v - y0) / (y1 - y0) * (kH - 2 * kPad);
  }
};

Frame frame_for(const std::vector<Series>& all, bool logy) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : all) {
    for (auto [x, y] : s.pts) {
      if (!std::isfinite(x) || !std::isfinite(y) || (logy && y <= 0)) continue;
      const double v = logy ? std::log10(y) : y;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, v);
      y1 = std::max(y1, v);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  return {x0, x1, y0, y1, logy};
}

void polyline(std::ostream& out, const Series& s, const Frame& fr, const char* color) {
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
  for (auto [x, y] : s.pts) {
    if (!std::isfinite(x) || !std::isfinite(y) || (fr.logy && y <= 0)) continue;
    out << coord(fr.px(x)) << ',' << coord(fr.py(y)) << ' ';
  }
  out << "\"/>\n";
}

// Marching squares over a regular grid of log10(1 + f).
void contours(std::ostream& out, const Objective& obj, const Frame& fr) {
  constexpr int n = 120;
  std::vector<double> z((n + 1) * (n + 1));
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const Vector p{fr.x0 + (fr.x1 - fr.x0) * i / n, fr.y0 + (fr.y1 - fr.y0) * j / n};
      z[i * (n + 1) + j] = std::log10(1.0 + obj.value(p) - obj.f_star());
    }
  }
  const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
  const int levels = 12;
  out << "<g stroke=\"#bbbbbb\" stroke-width=\"0.7\">\n";
  for (int l = 1; l <= levels; ++l) {
    const double level = *lo + (*hi - *lo) * l / (levels + 1);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double c[4] = {z[i * (n + 1) + j], z[(i + 1) * (n + 1) + j],
                             z[(i + 1) * (n + 1) + j + 1], z[i * (n + 1) + j + 1]};
        const double cx[4] = {0, 1, 1, 0}, cy[4] = {0, 0, 1, 1};
        std::vector<std::pair<double, double>> hits;
        for (int e = 0; e < 4; ++e) {
          const int a = e, b = (e + 1) % 4;
          if ((c[a] < level) == (c[b] < level)) continue;
          const double t = (level - c[a]) / (c[b] - c[a]);
          hits.emplace_back(i + cx[a] + t * (cx[b] - cx[a]), j + cy[a] + t * (cy[b] - cy[a]));
        }
        for (std::size_t h = 0; h + 1 < hits.size(); h += 2) {
          auto map = [&](std::pair<double, double> g) {
            return std::pair{fr.px(fr.x0 + (fr.x1 - fr.x0) * g.first / n),
                             fr.py(fr.y0 + (fr.y1 - fr.y0) * g.second / n)};
          };
          const auto p = map(hits[h]), q = map(hits[h + 1]);
          out << "<line x1=\"" << coord(p.first) << "\" y1=\"" << coord(p.second)
              << "\" x2=\"" << coord(q.first) << "\" y2=\"" << coord(q.second)
              << "\"/>\n";
        }
      }
    }
  }
  out << "</g>\n";
}

void write_svg(const std::filesystem::path& path, const std::vector<Series>& all, PlotKind kind,
               const Objective* contour) {
  const bool logy = kind == PlotKind::LossCurve || kind == PlotKind::RCurve;
  Frame fr = frame_for(all, logy);
  if (kind == PlotKind::Trajectory2d) {
    const double mx = 0.05 * (fr.x1 - fr.x0), my = 0.05 * (fr.y1 - fr.y0);
    fr = {fr.x0 - mx, fr.x1 + mx, fr.y0 - my, fr.y1 + my, false};
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (kind == PlotKind::Trajectory2d && contour) contours(out, *contour, fr);
  out << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << kW - 2 * kPad
      << "\" height=\"" << kH - 2 * kPad << "\" fill=\"none\" stroke=\"black\"/>\n";
  auto lbl = [](double v, bool) { return format_double(std::round(v * 1000) / 1000); };
  out << "<text x=\"" << kPad << "\" y=\"" << kH - kPad + 15 << "\">" << lbl(fr.x0, false)
      << "</text>\n<text x=\"" << kW - kPad << "\" y=\"" << kH - kPad + 15
      << "\" text-anchor=\"end\">" << lbl(fr.x1, false) << "</text>\n";
  out << "<text x=\"" << kPad - 4 << "\" y=\"" << kH - kPad << "\" text-anchor=\"end\">"
      << (logy ? "1e" : "") << lbl(fr.y0, true) << "</text>\n<text x=\"" << kPad - 4
      << "\" y=\"" << kPad + 8 << "\" text-anchor=\"end\">" << (logy ? "1e" : "")
      << lbl(fr.y1, true) << "</text>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"" << kPad - 20 << "\" text-anchor=\"middle\">"
      << to_string(kind) << "</text>\n";
  for (std::size_t i = 0; i < all.size(); ++i) {
    const char* color = kColors[i % kColors.size()];
    polyline(out, all[i], fr, color);
    out << "<text x=\"" << kW - kPad - 4 << "\" y=\"" << kPad + 14 + 14 * i
        << "\" text-anchor=\"end\" fill=\"" << color << "\">" << all[i].label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace

PlotKind parse_plot_kind(std::string_view name) {
  if (name == "loss-curve") return PlotKind::LossCurve;
  if (name == "r-curve") return PlotKind::RCurve;
  if (name == "eta-curve") return PlotKind::EtaCurve;
  if (name == "trajectory-2d") return PlotKind::Trajectory2d;
  throw ConfigError("unknown plot kind '" + std::string(name) +
                    "' (expected loss-curve, r-curve, eta-curve or trajectory-2d)");
}

std::string to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::LossCurve: return "loss-curve";
    case PlotKind::RCurve: return "r-curve";
    case PlotKind::EtaCurve: return "eta-curve";
    case PlotKind::Trajectory2d: return "trajectory-2d";
  }
  return "?";
}

PlotOutput emit_plot_data(const std::vector<LabeledTrajectory>& runs, PlotKind kind,
                          const std::filesystem::path& out_dir, bool svg,
                          const Objective* contour) {
  PlotOutput out;
  if (runs.empty()) {
    out.warnings.push_back("no trajectories given; nothing written");
    return out;
  }
  if (kind == PlotKind::Trajectory2d) {
    for (const auto& r : runs) {
      const std::size_t d = r.trajectory.terminal.x.size();
      if (d != 2) {
        throw ConfigError("trajectory-2d needs two-dimensional iterates, got dimension " +
                          std::to_string(d) + " for '" + r.label + "'");
      }
    }
  }
  std::filesystem::create_directories(out_dir);
  std::vector<Series> all;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    Series s = extract(runs[i], kind);
    const auto path = out_dir / (to_string(kind) + "_" + file_label(runs[i].label, i) + ".csv");
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << header(kind) << '\n';
    for (auto [x, y] : s.pts) {
      if (kind == PlotKind::Trajectory2d) {
        f << format_double(x) << ',' << format_double(y) << '\n';
      } else {
        f << static_cast<std::size_t>(x) << ',' << format_double(y) << '\n';
      }
    }
    out.files.push_back(path);
    all.push_back(std::move(s));
  }
  if (svg) {
    const auto path = out_dir / (to_string(kind) + ".svg");
    try {
      write_svg(path, all, kind, contour);
      out.files.push_back(path);
    } catch (const std::exception& e) {
      out.warnings.push_back(std::string("svg skipped: ") + e.what());
    }
  }
  return out;
}

}  // namespace gaegd::bench
