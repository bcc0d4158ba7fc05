#include "lasil/evalmetrics.hpp"

#include "lasil/error.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <limits>

namespace lasil {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

nlohmann::json histogram_json(const Histogram& h) { return {{"bin_width", h.bin_width}, {"counts", h.counts}}; }

/// Blue (lo) through white to red (hi).
std::string colour(double v, double lo, double hi) {
  double u = hi > lo ? (v - lo) / (hi - lo) : 0.5;
  u = std::clamp(u, 0.0, 1.0);
  int r, g, b;
  if (u < 0.5) {
    const double s = u / 0.5;
    r = static_cast<int>(49 + s * (255 - 49));
    g = static_cast<int>(54 + s * (255 - 54));
    b = static_cast<int>(149 + s * (255 - 149));
  } else {
    const double s = (u - 0.5) / 0.5;
    r = static_cast<int>(255 - s * (255 - 165));
    g = static_cast<int>(255 - s * 255);
    b = static_cast<int>(255 - s * (255 - 38));
  }
  return fmt::format("#{:02x}{:02x}{:02x}", r, g, b);
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& r) {
  return {
      {"position_rmse", r.position_rmse},
      {"velocity_rmse", r.velocity_rmse},
      {"min_ade", r.min_ade},
      {"offroad_rate", r.offroad_rate},
      {"road_density_rmse", r.road_density_rmse},
      {"road_speed_rmse", r.road_speed_rmse},
      {"road_speed_coverage", r.road_speed_coverage},
      {"rollouts", r.rollouts},
      {"speed_histogram", {{"sim", histogram_json(r.sim_distributions.speed)},
                           {"real", histogram_json(r.real_distributions.speed)}}},
      {"leader_distance_histogram", {{"sim", histogram_json(r.sim_distributions.leader_distance)},
                                     {"real", histogram_json(r.real_distributions.leader_distance)}}},
  };
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << report_to_json(report).dump(2) << '\n';
}

void write_histogram_csv(const Histogram& sim, const Histogram& real, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "bin_lo,bin_hi,sim,real\n";
  const std::size_t n = std::max(sim.counts.size(), real.counts.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double s = i < sim.counts.size() ? sim.counts[i] : 0.0;
    const double r = i < real.counts.size() ? real.counts[i] : 0.0;
    out << fmt::format("{:.10g},{:.10g},{:.10g},{:.10g}\n", i * sim.bin_width, (i + 1) * sim.bin_width, s, r);
  }
}

void write_runtime_csv(const RuntimeProfile& profile, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "agents,median_seconds\n";
  for (const auto& r : profile.rows) out << fmt::format("{},{:.6g}\n", r.agents, r.median_seconds);
  out << fmt::format("# slope {:.6g} intercept {:.6g} r2 {:.6f}\n", profile.slope, profile.intercept,
                     profile.r_squared);
}

void write_road_svg(const RoadNetwork& net, std::span<const double> values, double lo, double hi,
                    const std::string& title, const std::filesystem::path& path) {
  if (values.size() != net.size()) throw ConfigError("write_road_svg: one value per road required");
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  for (const auto& road : net.roads())
    for (const auto& lane : road.lanes)
      for (const auto& p : lane.centerline) {
        x0 = std::min(x0, p.x());
        x1 = std::max(x1, p.x());
        y0 = std::min(y0, p.y());
        y1 = std::max(y1, p.y());
      }
  const double margin = 20.0;
  const double w = 800.0;
  const double scale = (w - 2 * margin) / std::max({x1 - x0, y1 - y0, 1.0});
  const double h = (y1 - y0) * scale + 2 * margin + 40.0;
  auto sx = [&](double x) { return margin + (x - x0) * scale; };
  auto sy = [&](double y) { return margin + 30.0 + (y1 - y) * scale; };

  auto out = open_out(path);
  out << fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\">\n", w, h);
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#202020\"/>\n";
  out << fmt::format("<text x=\"{}\" y=\"20\" fill=\"white\" font-family=\"sans-serif\" font-size=\"14\">{} "
                     "[{:.3g}, {:.3g}]</text>\n",
                     margin, title, lo, hi);
  for (std::size_t r = 0; r < net.size(); ++r) {
    for (const auto& lane : net.road(static_cast<RoadIndex>(r)).lanes) {
      out << "<polyline fill=\"none\" stroke-width=\"5\" stroke-linecap=\"round\" stroke=\"" << colour(values[r], lo, hi)
          << "\" points=\"";
      for (const auto& p : lane.centerline) out << fmt::format("{:.2f},{:.2f} ", sx(p.x()), sy(p.y()));
      out << fmt::format("\"><title>{} {:.4g}</title></polyline>\n", net.road(static_cast<RoadIndex>(r)).id, values[r]);
    }
  }
  out << "</svg>\n";
}

}  // namespace lasil
