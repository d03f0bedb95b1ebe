#pragma once

// Accuracy Rejection Curves: order instances by a score (lowest first),
// reject them one at a time, and track accuracy on what remains.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace robq {

struct ScoredOutcome {
  std::string instance_id;
  double score;  // ascending = rejected first
  bool correct;
};

struct ArcPoint {
  double rejection_fraction;
  double accuracy;
  // Exact counts behind `accuracy` on the retained instances; zero for
  // averaged curves.
  std::size_t correct = 0;
  std::size_t retained = 0;
};

struct ARCurve {
  std::vector<ArcPoint> points;
  std::size_t n = 0;
};

inline constexpr std::size_t kDefaultArcGridSize = 101;

// Point k (k = 0..n-1) rejects the k lowest-scored instances. Ties in score
// are ordered by instance_id. Throws InvalidInput on empty input or NaN scores.
ARCurve build_arc(std::span<const ScoredOutcome> outcomes);

// Value of `curve` at fraction f as a left-continuous step function: the
// accuracy at the first point whose rejection fraction is >= f, clamped to
// the last point.
double arc_value_at(const ARCurve& curve, double fraction);

// Mean of the curves on grid_size equispaced fractions in [0, 1 - 1/max n].
// Throws InvalidInput for no curves, an empty curve, or grid_size < 2.
ARCurve average_arcs(std::span<const ARCurve> curves, std::size_t grid_size = kDefaultArcGridSize);

// `rejection_fraction,accuracy` header, one row per point, shortest
// round-trip decimal representation.
void write_arc_csv(std::ostream& out, const ARCurve& curve);

struct SvgSeries {
  std::string label;
  const ARCurve* curve;
};

// Minimal standalone line plot of one or more curves.
std::string render_arc_svg(std::span<const SvgSeries> series, const std::string& title);

}  // namespace robq
