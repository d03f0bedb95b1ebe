#include "robq/arc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "robq/error.hpp"
#include "robq/format.hpp"

namespace robq {

ARCurve build_arc(std::span<const ScoredOutcome> outcomes) {
  if (outcomes.empty()) throw InvalidInput("build_arc: no outcomes");
  for (const auto& o : outcomes) {
    if (std::isnan(o.score)) throw InvalidInput("build_arc: NaN score for " + o.instance_id);
  }

  std::vector<std::size_t> order(outcomes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (outcomes[a].score != outcomes[b].score) return outcomes[a].score < outcomes[b].score;
    return outcomes[a].instance_id < outcomes[b].instance_id;
  });

  const std::size_t n = outcomes.size();
  // correct_suffix[k] = correct among order[k..n).
  std::vector<std::size_t> correct_suffix(n + 1, 0);
  for (std::size_t k = n; k-- > 0;) {
    correct_suffix[k] = correct_suffix[k + 1] + (outcomes[order[k]].correct ? 1 : 0);
  }

  ARCurve curve;
  curve.n = n;
  curve.points.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t retained = n - k;
    curve.points.push_back({static_cast<double>(k) / static_cast<double>(n),
                            static_cast<double>(correct_suffix[k]) / static_cast<double>(retained),
                            correct_suffix[k], retained});
  }
  return curve;
}

double arc_value_at(const ARCurve& curve, double fraction) {
  if (curve.points.empty()) throw InvalidInput("arc_value_at: empty curve");
  // Grid fractions are computed in floating point; absorb rounding so a grid
  // point that equals k/n lands on point k.
  constexpr double kSlack = 1e-12;
  const auto it = std::lower_bound(
      curve.points.begin(), curve.points.end(), fraction - kSlack,
      [](const ArcPoint& p, double f) { return p.rejection_fraction < f; });
  if (it == curve.points.end()) return curve.points.back().accuracy;
  return it->accuracy;
}

ARCurve average_arcs(std::span<const ARCurve> curves, std::size_t grid_size) {
  if (curves.empty()) throw InvalidInput("average_arcs: no curves");
  if (grid_size < 2) throw InvalidInput("average_arcs: grid_size must be >= 2");
  std::size_t max_n = 0;
  for (const auto& c : curves) {
    if (c.points.empty() || c.n == 0) throw InvalidInput("average_arcs: empty curve");
    max_n = std::max(max_n, c.n);
  }
  const double end = 1.0 - 1.0 / static_cast<double>(max_n);

  ARCurve avg;
  avg.n = max_n;
  avg.points.reserve(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double f = end * static_cast<double>(i) / static_cast<double>(grid_size - 1);
    double sum = 0.0;
    for (const auto& c : curves) sum += arc_value_at(c, f);
    avg.points.push_back({f, sum / static_cast<double>(curves.size())});
  }
  // A single-sample curve yields a degenerate grid; keep fractions strictly
  // increasing by collapsing duplicates.
  avg.points.erase(std::unique(avg.points.begin(), avg.points.end(),
                               [](const ArcPoint& a, const ArcPoint& b) {
                                 return a.rejection_fraction == b.rejection_fraction;
                               }),
                   avg.points.end());
  return avg;
}

void write_arc_csv(std::ostream& out, const ARCurve& curve) {
  out << "rejection_fraction,accuracy\n";
  for (const auto& p : curve.points) {
    out << format_double(p.rejection_fraction) << ',' << format_double(p.accuracy) << '\n';
  }
}

std::string render_arc_svg(std::span<const SvgSeries> series, const std::string& title) {
  constexpr double kWidth = 640, kHeight = 420, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
  constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double y_min = 1.0;
  for (const auto& s : series) {
    for (const auto& p : s.curve->points) y_min = std::min(y_min, p.accuracy);
  }
  y_min = std::floor(y_min * 10.0) / 10.0;
  if (y_min >= 1.0) y_min = 0.9;
  auto sx = [&](double f) { return kLeft + f * plot_w; };
  auto sy = [&](double a) { return kTop + (1.0 - (a - y_min) / (1.0 - y_min)) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\">" << title << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\""
      << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double f = i / 5.0;
    const double a = y_min + (1.0 - y_min) * i / 5.0;
    svg << "<text x=\"" << sx(f) << "\" y=\"" << kHeight - kBottom + 18
        << "\" text-anchor=\"middle\">" << format_fixed(f, 1) << "</text>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(a) + 4 << "\" text-anchor=\"end\">"
        << format_fixed(a, 2) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">rejection fraction</text>\n";
  svg << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 16 "
      << kTop + plot_h / 2 << ")\" text-anchor=\"middle\">accuracy</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : series[i].curve->points) {
      svg << format_fixed(sx(p.rejection_fraction), 2) << ',' << format_fixed(sy(p.accuracy), 2)
          << ' ';
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << kLeft + 10 << "\" y=\"" << kTop + 16 + 16 * static_cast<double>(i)
        << "\" fill=\"" << color << "\">" << series[i].label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace robq
