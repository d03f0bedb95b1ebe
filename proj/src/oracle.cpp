#include "robq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "robq/error.hpp"

namespace robq::oracle {

FiniteJointModel::FiniteJointModel(std::size_t class_count, std::size_t feature_count,
                                   std::vector<double> mass)
    : classes_(class_count), features_(feature_count), mass_(std::move(mass)) {
  if (classes_ < 2 || features_ < 1) {
    throw InvalidInput("finite joint model needs K >= 2 and M >= 1");
  }
  if (mass_.size() != classes_ * features_) {
    throw InvalidInput("joint mass has " + std::to_string(mass_.size()) + " entries, expected " +
                       std::to_string(classes_ * features_));
  }
  double total = 0.0;
  for (double v : mass_) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidInput("joint mass must be finite and >= 0");
    total += v;
  }
  if (std::abs(total - 1.0) > kJointSumTolerance) {
    throw InvalidInput("joint mass sums to " + std::to_string(total) + ", expected 1");
  }
  for (std::size_t x = 0; x < features_; ++x) {
    bool positive = false;
    for (std::size_t y = 0; y < classes_; ++y) positive = positive || (*this)(y, x) > 0.0;
    if (!positive) throw InvalidInput("column " + std::to_string(x) + " has no positive mass");
  }
}

std::vector<double> FiniteJointModel::column(std::size_t x) const {
  if (x >= features_) throw InvalidInput("feature index out of range");
  std::vector<double> col(classes_);
  for (std::size_t y = 0; y < classes_; ++y) col[y] = (*this)(y, x);
  return col;
}

ClassDistribution FiniteJointModel::conditional(std::size_t x) const {
  auto col = column(x);
  double total = 0.0;
  for (double v : col) total += v;
  for (double& v : col) v /= total;
  return ClassDistribution(std::move(col));
}

double WitnessConstruction::expected_likelihood_ratio() const {
  return lambda_minus * pi1 + lambda_plus * pi2 + (1.0 - pi1 - pi2);
}

double dstar_finite(const FiniteJointModel& p, const FiniteJointModel& q) {
  if (p.class_count() != q.class_count() || p.feature_count() != q.feature_count()) {
    throw InvalidInput("dstar_finite: models have different shapes");
  }
  const auto pm = p.mass();
  const auto qm = q.mass();
  double hi = 0.0;
  double lo = kInfinity;
  for (std::size_t i = 0; i < pm.size(); ++i) {
    if (pm[i] == 0.0) {
      if (qm[i] > 0.0) return kInfinity;
      continue;
    }
    const double l = qm[i] / pm[i];
    hi = std::max(hi, l);
    lo = std::min(lo, l);
  }
  if (lo == 0.0) return kInfinity;
  return hi / lo;
}

Witness build_witness(const FiniteJointModel& p, std::size_t x) {
  const auto col = p.column(x);
  const auto [top, runner_up] = top_two(col);
  if (col[runner_up] == 0.0) {
    throw NoWitness("runner-up class has zero mass at column " + std::to_string(x));
  }

  WitnessConstruction w{};
  w.top = top;
  w.runner_up = runner_up;
  w.ratio = col[top] / col[runner_up];
  for (std::size_t xi = 0; xi < p.feature_count(); ++xi) {
    w.pi1 += p(top, xi);
    w.pi2 += p(runner_up, xi);
  }
  const double denom = w.pi1 + w.ratio * w.pi2;
  w.lambda_minus = (w.pi1 + w.pi2) / denom;
  w.lambda_plus = (w.ratio * w.pi1 + w.ratio * w.pi2) / denom;

  std::vector<double> q(p.mass().begin(), p.mass().end());
  for (std::size_t xi = 0; xi < p.feature_count(); ++xi) {
    q[top * p.feature_count() + xi] *= w.lambda_minus;
    q[runner_up * p.feature_count() + xi] *= w.lambda_plus;
  }
  return Witness{w, FiniteJointModel(p.class_count(), p.feature_count(), std::move(q))};
}

namespace {

constexpr double kTieSlack = 1e-12;

bool flipped_column(std::span<const double> col, ClassIndex top) {
  const double threshold = col[top] * (1.0 - kTieSlack);
  for (std::size_t y = 0; y < col.size(); ++y) {
    if (y != top && col[y] > 0.0 && col[y] >= threshold) return true;
  }
  return false;
}

// Candidate perturbation as log L over the support cells of P.
class FlipSearch {
 public:
  FlipSearch(const FiniteJointModel& p, std::size_t x, ClassIndex top)
      : p_(p), x_(x), top_(top) {
    for (std::size_t i = 0; i < p.mass().size(); ++i) {
      if (p.mass()[i] > 0.0) support_.push_back(i);
    }
  }

  std::size_t size() const { return support_.size(); }
  std::size_t cell(std::size_t s) const { return support_[s]; }

  // log(max L / min L); callers exponentiate only the final answer.
  static double spread(std::span<const double> log_l) {
    const auto [lo, hi] = std::minmax_element(log_l.begin(), log_l.end());
    return *hi - *lo;
  }

  bool flips(std::span<const double> log_l) const {
    std::vector<double> col(p_.class_count(), 0.0);
    for (std::size_t s = 0; s < support_.size(); ++s) {
      const std::size_t i = support_[s];
      if (i % p_.feature_count() == x_) {
        col[i / p_.feature_count()] = std::exp(log_l[s]) * p_.mass()[i];
      }
    }
    return flipped_column(col, top_);
  }

  // Ray that reweights only `top` (down) and `target` (up), everywhere, with
  // total odds change `strength`.
  std::vector<double> ray(ClassIndex target, double strength) const {
    std::vector<double> log_l(support_.size(), 0.0);
    const double half = 0.5 * std::log(strength);
    for (std::size_t s = 0; s < support_.size(); ++s) {
      const std::size_t y = support_[s] / p_.feature_count();
      if (y == top_) log_l[s] = -half;
      if (y == target) log_l[s] = half;
    }
    return log_l;
  }

  // Replace column x's conditional by a Dirichlet draw centered on it.
  std::vector<double> dirichlet_column(Rng& rng, double concentration) const {
    std::vector<double> log_l(support_.size(), 0.0);
    std::vector<double> draw(support_.size(), 0.0);
    double total = 0.0;
    double base = 0.0;
    for (std::size_t s = 0; s < support_.size(); ++s) {
      const std::size_t i = support_[s];
      if (i % p_.feature_count() != x_) continue;
      std::gamma_distribution<double> gamma(concentration * p_.mass()[i] + 1e-3, 1.0);
      draw[s] = gamma(rng);
      total += draw[s];
      base += p_.mass()[i];
    }
    for (std::size_t s = 0; s < support_.size(); ++s) {
      const std::size_t i = support_[s];
      if (i % p_.feature_count() != x_) continue;
      const double q = std::max(draw[s] / total * base, 1e-300);
      log_l[s] = std::log(q / p_.mass()[i]);
    }
    return log_l;
  }

  std::vector<double> uniform_noise(Rng& rng, double scale) const {
    std::vector<double> log_l(support_.size());
    for (double& v : log_l) v = scale * (2.0 * uniform01(rng) - 1.0);
    return log_l;
  }

 private:
  const FiniteJointModel& p_;
  std::size_t x_;
  ClassIndex top_;
  std::vector<std::size_t> support_;
};

}  // namespace

bool prediction_flipped(const FiniteJointModel& q, std::size_t x, ClassIndex top) {
  const auto col = q.column(x);
  return flipped_column(col, top);
}

std::optional<FlipSearchResult> min_flipping_dissimilarity(const FiniteJointModel& p, std::size_t x,
                                                           std::size_t search_budget,
                                                           std::uint64_t seed) {
  if (search_budget == 0) throw InvalidInput("search budget must be >= 1");
  const auto col = p.column(x);
  const auto [top, runner_up] = top_two(col);
  if (col[runner_up] == 0.0) return std::nullopt;

  FlipSearch search(p, x, top);
  Rng rng(seed);
  FlipSearchResult result{kInfinity, 0, 0};
  std::vector<double> best;
  double best_spread = kInfinity;

  auto consider = [&](std::vector<double> log_l) {
    ++result.candidates_evaluated;
    if (!search.flips(log_l)) return;
    ++result.flipping_candidates;
    const double s = FlipSearch::spread(log_l);
    if (s < best_spread) {
      best_spread = s;
      best = std::move(log_l);
    }
  };
  auto budget_left = [&] { return result.candidates_evaluated < search_budget; };

  // Classes with positive mass at x that could overtake the top class.
  std::vector<ClassIndex> targets;
  for (ClassIndex y = 0; y < col.size(); ++y) {
    if (y != top && col[y] > 0.0) targets.push_back(y);
  }
  const double r_star = col[top] / col[runner_up];

  consider(std::vector<double>(search.size(), 0.0));
  const std::size_t explore = std::max<std::size_t>(1, search_budget * 3 / 5);
  std::size_t round = 0;
  while (budget_left() && result.candidates_evaluated < explore) {
    switch (round++ % 4) {
      case 0: {
        const ClassIndex target = targets[uniform_index(rng, targets.size())];
        const double needed = col[top] / col[target];
        consider(search.ray(target, needed * (0.5 + 1.5 * uniform01(rng))));
        break;
      }
      case 1:
        consider(search.dirichlet_column(rng, 1.0 + 50.0 * uniform01(rng)));
        break;
      case 2:
        consider(search.uniform_noise(rng, std::log(r_star) * 2.0 * uniform01(rng) + 1e-3));
        break;
      default: {
        // Random ray with independent noise on the remaining cells.
        const ClassIndex target = targets[uniform_index(rng, targets.size())];
        auto log_l = search.ray(target, (col[top] / col[target]) * (1.0 + uniform01(rng)));
        const auto noise = search.uniform_noise(rng, 0.5 * uniform01(rng));
        for (std::size_t s = 0; s < log_l.size(); ++s) log_l[s] += noise[s];
        consider(std::move(log_l));
        break;
      }
    }
  }
  // The closed-form direction is always in the candidate set.
  if (budget_left()) consider(search.ray(runner_up, r_star));

  // Coordinate descent: pull each log L toward the middle of the current
  // range while the prediction stays flipped.
  double step = 0.5;
  while (budget_left() && !best.empty() && step > 1e-12) {
    bool improved = false;
    for (std::size_t s = 0; s < best.size() && budget_left(); ++s) {
      const auto [lo, hi] = std::minmax_element(best.begin(), best.end());
      const double mid = 0.5 * (*lo + *hi);
      auto trial = best;
      trial[s] += step * (mid - trial[s]);
      if (trial[s] == best[s]) continue;
      const double before = best_spread;
      consider(std::move(trial));
      improved = improved || best_spread < before;
    }
    if (!improved) step *= 0.5;
  }

  result.dissimilarity = std::exp(best_spread);
  return result;
}

FiniteJointModel random_joint_model(std::size_t class_count, std::size_t feature_count, Rng& rng) {
  std::vector<double> mass(class_count * feature_count);
  double total = 0.0;
  for (double& v : mass) {
    v = 1e-3 + uniform01(rng);
    total += v;
  }
  for (double& v : mass) v /= total;
  return FiniteJointModel(class_count, feature_count, std::move(mass));
}

VerificationReport verify_closed_form(const VerificationOptions& options) {
  VerificationReport report;
  Rng rng(options.seed);
  for (std::size_t trial = 0; trial < options.trials; ++trial) {
    const auto p = random_joint_model(options.class_count, options.feature_count, rng);
    for (std::size_t x = 0; x < p.feature_count(); ++x) {
      ColumnCheck c{};
      c.trial = trial;
      c.column = x;
      c.r_star = robustness_from_joint(p.column(x)).r_star;

      const auto witness = build_witness(p, x);
      c.witness_dissimilarity = dstar_finite(p, witness.perturbed);
      const auto q_cond = witness.perturbed.conditional(x);
      c.witness_tie_gap = std::abs(q_cond[witness.construction.top] -
                                   q_cond[witness.construction.runner_up]);
      c.expected_likelihood_ratio = witness.construction.expected_likelihood_ratio();

      const auto search = min_flipping_dissimilarity(
          p, x, options.search_budget, derive_seed(options.seed, trial * 1000 + x));
      if (search) c.searched_minimum = search->dissimilarity;

      c.passed = std::abs(c.witness_dissimilarity - c.r_star) <= options.tolerance &&
                 c.witness_tie_gap <= options.tolerance &&
                 std::abs(c.expected_likelihood_ratio - 1.0) <= 1e-12 && c.searched_minimum &&
                 *c.searched_minimum >= c.r_star * (1.0 - options.tolerance) &&
                 *c.searched_minimum <= c.r_star + options.tolerance;
      if (!c.passed) ++report.failures;
      report.checks.push_back(c);
    }
  }
  return report;
}

std::string format_report(const VerificationReport& report, const VerificationOptions& options) {
  std::ostringstream out;
  out << std::setprecision(12);
  out << "oracle verify: seed=" << options.seed << " trials=" << options.trials
      << " classes=" << options.class_count << " features=" << options.feature_count
      << " budget=" << options.search_budget << "\n";
  double worst_witness = 0.0;
  double worst_gap = 0.0;
  double worst_search = 0.0;
  for (const auto& c : report.checks) {
    worst_witness = std::max(worst_witness, std::abs(c.witness_dissimilarity - c.r_star));
    worst_gap = std::max(worst_gap, c.witness_tie_gap);
    if (c.searched_minimum) {
      worst_search = std::max(worst_search, std::abs(*c.searched_minimum - c.r_star) / c.r_star);
    }
    if (!c.passed) {
      out << "  FAIL trial=" << c.trial << " column=" << c.column << " r_star=" << c.r_star
          << " witness=" << c.witness_dissimilarity << " search="
          << (c.searched_minimum ? *c.searched_minimum : kInfinity) << "\n";
    }
  }
  out << "columns checked: " << report.checks.size() << ", failures: " << report.failures << "\n";
  out << "max |d*(P,Q_witness) - r_star|: " << worst_witness << "\n";
  out << "max witness tie gap: " << worst_gap << "\n";
  out << "max relative gap search vs r_star: " << worst_search << "\n";
  out << (report.passed() ? "PASS" : "FAIL") << "\n";
  return out.str();
}

}  // namespace robq::oracle
