#include "robq/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <thread>

#include "robq/error.hpp"
#include "robq/random.hpp"

namespace robq {

class FittedModel::Impl {
 public:
  Impl(std::string id, std::size_t classes, std::size_t features)
      : id(std::move(id)), class_count(classes), feature_count(features) {}
  virtual ~Impl() = default;

  virtual std::vector<double> predict(std::span<const double> x) const = 0;
  virtual nlohmann::json to_json() const = 0;

  std::string id;
  std::size_t class_count;
  std::size_t feature_count;  // columns the learner was trained on
  std::vector<std::size_t> columns;  // subset of the input row; empty = all
  std::size_t input_width = 0;
};

namespace {

using json = nlohmann::json;

// ----- Gaussian naive Bayes -------------------------------------------------

class GaussianNb final : public FittedModel::Impl {
 public:
  using Impl::Impl;

  std::vector<double> log_prior;  // -inf for classes absent from training
  std::vector<double> mean;       // K x d
  std::vector<double> variance;   // K x d, floor included

  static std::shared_ptr<GaussianNb> fit(const ClassifierSpec& spec, const GaussianNbParams& params,
                                         const Matrix& x, std::span<const ClassIndex> y,
                                         std::size_t classes) {
    const std::size_t d = x.cols();
    auto m = std::make_shared<GaussianNb>(spec.id, classes, d);
    std::vector<std::size_t> count(classes, 0);
    m->mean.assign(classes * d, 0.0);
    m->variance.assign(classes * d, 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      ++count[y[i]];
      for (std::size_t j = 0; j < d; ++j) m->mean[y[i] * d + j] += x(i, j);
    }
    for (std::size_t c = 0; c < classes; ++c) {
      for (std::size_t j = 0; j < d && count[c] > 0; ++j) m->mean[c * d + j] /= static_cast<double>(count[c]);
    }
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double dev = x(i, j) - m->mean[y[i] * d + j];
        m->variance[y[i] * d + j] += dev * dev;
      }
    }
    m->log_prior.resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      for (std::size_t j = 0; j < d; ++j) {
        auto& v = m->variance[c * d + j];
        v = (count[c] > 0 ? v / static_cast<double>(count[c]) : 1.0) + params.variance_floor;
      }
      m->log_prior[c] = count[c] == 0 ? -kInfinity
                                      : std::log(static_cast<double>(count[c]) /
                                                 static_cast<double>(x.rows()));
    }
    return m;
  }

  std::vector<double> predict(std::span<const double> x) const override {
    const std::size_t d = feature_count;
    std::vector<double> log_post(class_count);
    double best = -kInfinity;
    for (std::size_t c = 0; c < class_count; ++c) {
      double lp = log_prior[c];
      for (std::size_t j = 0; j < d && std::isfinite(lp); ++j) {
        const double v = variance[c * d + j];
        const double dev = x[j] - mean[c * d + j];
        lp += -0.5 * std::log(2.0 * M_PI * v) - dev * dev / (2.0 * v);
      }
      log_post[c] = lp;
      best = std::max(best, lp);
    }
    double total = 0.0;
    for (double& v : log_post) {
      v = std::isfinite(v) ? std::exp(v - best) : 0.0;
      total += v;
    }
    for (double& v : log_post) v /= total;
    return log_post;
  }

  json to_json() const override {
    return {{"log_prior", encode(log_prior)}, {"mean", mean}, {"variance", variance}};
  }

  static json encode(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(std::isinf(x) ? json("-inf") : json(x));
    return out;
  }
  static std::vector<double> decode(const json& j) {
    std::vector<double> out;
    for (const auto& x : j) out.push_back(x.is_string() ? -kInfinity : x.get<double>());
    return out;
  }
};

// ----- k nearest neighbours -------------------------------------------------

class Knn final : public FittedModel::Impl {
 public:
  using Impl::Impl;

  Matrix train;
  std::vector<ClassIndex> labels;
  std::size_t k = 1;
  double alpha = 1.0;

  std::vector<double> predict(std::span<const double> x) const override {
    std::vector<std::pair<double, std::size_t>> dist(train.rows());
    for (std::size_t i = 0; i < train.rows(); ++i) {
      double s = 0.0;
      const auto r = train.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) s += (r[j] - x[j]) * (r[j] - x[j]);
      dist[i] = {s, i};
    }
    const std::size_t kk = std::min(k, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
    std::vector<double> votes(class_count, alpha);
    for (std::size_t i = 0; i < kk; ++i) votes[labels[dist[i].second]] += 1.0;
    const double total = static_cast<double>(kk) + alpha * static_cast<double>(class_count);
    for (double& v : votes) v /= total;
    return votes;
  }

  json to_json() const override {
    return {{"k", k}, {"laplace_alpha", alpha}, {"rows", train.rows()},
            {"train", std::vector<double>(train.data().begin(), train.data().end())},
            {"labels", labels}};
  }
};

// ----- random forest --------------------------------------------------------

struct TreeNode {
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t left = 0;   // 0 marks a leaf (the root is never a child)
  std::size_t right = 0;
  std::vector<double> probs;  // leaves only
};

struct Tree {
  std::vector<TreeNode> nodes;

  std::span<const double> leaf(std::span<const double> x) const {
    std::size_t n = 0;
    while (nodes[n].left != 0) n = x[nodes[n].feature] <= nodes[n].threshold ? nodes[n].left : nodes[n].right;
    return nodes[n].probs;
  }
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const ClassIndex> y, std::size_t classes,
              const ForestParams& params, std::size_t mtry, std::uint64_t seed)
      : x_(x), y_(y), classes_(classes), params_(params), mtry_(mtry), rng_(seed) {}

  Tree build() {
    std::vector<std::size_t> sample(x_.rows());
    if (params_.bootstrap) {
      for (auto& s : sample) s = uniform_index(rng_, x_.rows());
    } else {
      std::iota(sample.begin(), sample.end(), 0);
    }
    tree_.nodes.clear();
    tree_.nodes.emplace_back();
    grow(0, sample, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    std::size_t feature;
    double threshold;
    double impurity;  // weighted child Gini, lower is better
  };

  std::vector<std::size_t> class_counts(std::span<const std::size_t> s) const {
    std::vector<std::size_t> c(classes_, 0);
    for (std::size_t i : s) ++c[y_[i]];
    return c;
  }

  static double gini_sum(const std::vector<std::size_t>& counts, std::size_t n) {
    // n * Gini(counts) = n - sum(c^2) / n
    double sq = 0.0;
    for (std::size_t c : counts) sq += static_cast<double>(c) * static_cast<double>(c);
    return static_cast<double>(n) - sq / static_cast<double>(n);
  }

  std::optional<Split> best_split_on(std::size_t f, std::vector<std::size_t>& s) const {
    std::sort(s.begin(), s.end(), [&](std::size_t a, std::size_t b) { return x_(a, f) < x_(b, f); });
    std::vector<std::size_t> left(classes_, 0);
    auto right = class_counts(s);
    std::optional<Split> best;
    const std::size_t n = s.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      ++left[y_[s[i]]];
      --right[y_[s[i]]];
      const double a = x_(s[i], f);
      const double b = x_(s[i + 1], f);
      const std::size_t nl = i + 1;
      if (a == b || nl < params_.min_leaf || n - nl < params_.min_leaf) continue;
      const double impurity = gini_sum(left, nl) + gini_sum(right, n - nl);
      if (!best || impurity < best->impurity) {
        const double mid = a + (b - a) / 2.0;
        best = Split{f, (mid >= a && mid < b) ? mid : a, impurity};
      }
    }
    return best;
  }

  void make_leaf(std::size_t node, std::span<const std::size_t> s) {
    const auto counts = class_counts(s);
    auto& probs = tree_.nodes[node].probs;
    probs.resize(classes_);
    const double total = static_cast<double>(s.size()) + params_.laplace_alpha * static_cast<double>(classes_);
    for (std::size_t c = 0; c < classes_; ++c) {
      probs[c] = (static_cast<double>(counts[c]) + params_.laplace_alpha) / total;
    }
  }

  void grow(std::size_t node, std::vector<std::size_t>& s, std::size_t depth) {
    const auto counts = class_counts(s);
    const bool pure = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) <= 1;
    if (pure || s.size() < 2 * params_.min_leaf || (params_.max_depth != 0 && depth >= params_.max_depth)) {
      make_leaf(node, s);
      return;
    }

    // Draw features in random order; the first mtry are always tried, later
    // ones only until some feature admits a split.
    std::vector<std::size_t> features(x_.cols());
    std::iota(features.begin(), features.end(), 0);
    shuffle(std::span<std::size_t>(features), rng_);
    std::optional<Split> best;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (i >= mtry_ && best) break;
      const auto cand = best_split_on(features[i], s);
      if (cand && (!best || cand->impurity < best->impurity)) best = cand;
    }
    if (!best) {
      make_leaf(node, s);
      return;
    }

    std::vector<std::size_t> left, right;
    for (std::size_t i : s) (x_(i, best->feature) <= best->threshold ? left : right).push_back(i);
    s.clear();
    s.shrink_to_fit();

    const std::size_t l = tree_.nodes.size();
    tree_.nodes.emplace_back();
    const std::size_t r = tree_.nodes.size();
    tree_.nodes.emplace_back();
    tree_.nodes[node].feature = best->feature;
    tree_.nodes[node].threshold = best->threshold;
    tree_.nodes[node].left = l;
    tree_.nodes[node].right = r;
    grow(l, left, depth + 1);
    grow(r, right, depth + 1);
  }

  const Matrix& x_;
  std::span<const ClassIndex> y_;
  std::size_t classes_;
  const ForestParams& params_;
  std::size_t mtry_;
  Rng rng_;
  Tree tree_;
};

class Forest final : public FittedModel::Impl {
 public:
  using Impl::Impl;

  std::vector<Tree> trees;

  static std::shared_ptr<Forest> fit(const ClassifierSpec& spec, const ForestParams& params,
                                     const Matrix& x, std::span<const ClassIndex> y,
                                     std::size_t classes) {
    auto m = std::make_shared<Forest>(spec.id, classes, x.cols());
    const std::size_t mtry =
        params.max_features != 0
            ? std::min(params.max_features, x.cols())
            : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(x.cols())))));
    m->trees.resize(params.tree_count);

    // Per-tree seeds make the result independent of the thread layout.
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 8);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, params.tree_count); ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < params.tree_count; t += workers) {
          m->trees[t] = TreeBuilder(x, y, classes, params, mtry, derive_seed(spec.seed, t)).build();
        }
      });
    }
    for (auto& th : pool) th.join();
    return m;
  }

  std::vector<double> predict(std::span<const double> x) const override {
    std::vector<double> out(class_count, 0.0);
    for (const auto& t : trees) {
      const auto p = t.leaf(x);
      for (std::size_t c = 0; c < class_count; ++c) out[c] += p[c];
    }
    for (double& v : out) v /= static_cast<double>(trees.size());
    return out;
  }

  json to_json() const override {
    json jt = json::array();
    for (const auto& t : trees) {
      json nodes = json::array();
      for (const auto& n : t.nodes) {
        if (n.left == 0) {
          nodes.push_back({{"probs", n.probs}});
        } else {
          nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left},
                           {"right", n.right}});
        }
      }
      jt.push_back(std::move(nodes));
    }
    return {{"trees", std::move(jt)}};
  }
};

void check_features(const Matrix& x) {
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw InvalidInput("features must be finite");
  }
}

}  // namespace

// ----- ClassifierSpec -------------------------------------------------------

std::string ClassifierSpec::kind() const {
  switch (params.index()) {
    case 0:
      return "gaussian_nb";
    case 1:
      return "knn";
    default:
      return "random_forest";
  }
}

void ClassifierSpec::validate() const {
  if (const auto* nb = std::get_if<GaussianNbParams>(&params)) {
    if (!(nb->variance_floor >= 0.0)) throw InvalidInput("variance_floor must be >= 0");
  } else if (const auto* knn = std::get_if<KnnParams>(&params)) {
    if (knn->k < 1) throw InvalidInput("knn k must be >= 1");
    if (!(knn->laplace_alpha >= 0.0)) throw InvalidInput("laplace_alpha must be >= 0");
  } else if (const auto* rf = std::get_if<ForestParams>(&params)) {
    if (rf->tree_count < 1) throw InvalidInput("tree_count must be >= 1");
    if (rf->min_leaf < 1) throw InvalidInput("min_leaf must be >= 1");
    if (!(rf->laplace_alpha >= 0.0)) throw InvalidInput("laplace_alpha must be >= 0");
  }
}

nlohmann::json spec_to_json(const ClassifierSpec& spec) {
  json j = {{"kind", spec.kind()}, {"id", spec.id}, {"seed", spec.seed}};
  if (!spec.feature_columns.empty()) j["feature_columns"] = spec.feature_columns;
  if (const auto* nb = std::get_if<GaussianNbParams>(&spec.params)) {
    j["variance_floor"] = nb->variance_floor;
  } else if (const auto* knn = std::get_if<KnnParams>(&spec.params)) {
    j["k"] = knn->k;
    j["laplace_alpha"] = knn->laplace_alpha;
  } else if (const auto* rf = std::get_if<ForestParams>(&spec.params)) {
    j["tree_count"] = rf->tree_count;
    j["max_depth"] = rf->max_depth;
    j["min_leaf"] = rf->min_leaf;
    j["max_features"] = rf->max_features;
    j["bootstrap"] = rf->bootstrap;
    j["laplace_alpha"] = rf->laplace_alpha;
  }
  return j;
}

ClassifierSpec spec_from_json(const nlohmann::json& j) {
  try {
    ClassifierSpec spec;
    const auto kind = j.at("kind").get<std::string>();
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.id = j.value("id", kind);
    spec.feature_columns = j.value("feature_columns", std::vector<std::size_t>{});
    auto check_keys = [&](std::initializer_list<const char*> allowed) {
      for (const auto& [key, _] : j.items()) {
        if (key == "kind" || key == "id" || key == "seed" || key == "feature_columns") continue;
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
          throw ValidationError("unknown " + kind + " hyperparameter '" + key + "'");
        }
      }
    };
    if (kind == "gaussian_nb") {
      check_keys({"variance_floor"});
      GaussianNbParams p;
      p.variance_floor = j.value("variance_floor", p.variance_floor);
      spec.params = p;
    } else if (kind == "knn") {
      check_keys({"k", "laplace_alpha"});
      KnnParams p;
      p.k = j.value("k", p.k);
      p.laplace_alpha = j.value("laplace_alpha", p.laplace_alpha);
      spec.params = p;
    } else if (kind == "random_forest") {
      check_keys({"tree_count", "max_depth", "min_leaf", "max_features", "bootstrap", "laplace_alpha"});
      ForestParams p;
      p.tree_count = j.value("tree_count", p.tree_count);
      p.max_depth = j.value("max_depth", p.max_depth);
      p.min_leaf = j.value("min_leaf", p.min_leaf);
      p.max_features = j.value("max_features", p.max_features);
      p.bootstrap = j.value("bootstrap", p.bootstrap);
      p.laplace_alpha = j.value("laplace_alpha", p.laplace_alpha);
      spec.params = p;
    } else {
      throw ValidationError("unknown classifier kind '" + kind + "'");
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed classifier spec: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ValidationError(std::string("malformed classifier spec: ") + e.what());
  }
}

// ----- FittedModel ----------------------------------------------------------

const std::string& FittedModel::id() const noexcept { return impl_->id; }
std::size_t FittedModel::class_count() const noexcept { return impl_->class_count; }
std::size_t FittedModel::feature_count() const noexcept { return impl_->input_width; }

ClassDistribution FittedModel::predict_one(std::span<const double> features) const {
  if (features.size() != impl_->input_width) {
    throw InvalidInput("model '" + impl_->id + "' expects " + std::to_string(impl_->input_width) +
                       " features, got " + std::to_string(features.size()));
  }
  if (impl_->columns.empty()) return ClassDistribution(impl_->predict(features));
  std::vector<double> sub;
  sub.reserve(impl_->columns.size());
  for (std::size_t c : impl_->columns) sub.push_back(features[c]);
  return ClassDistribution(impl_->predict(sub));
}

nlohmann::json FittedModel::to_json() const {
  json j = impl_->to_json();
  j["format_version"] = kModelFormatVersion;
  j["id"] = impl_->id;
  j["class_count"] = impl_->class_count;
  j["feature_count"] = impl_->feature_count;
  j["input_width"] = impl_->input_width;
  j["feature_columns"] = impl_->columns;
  if (dynamic_cast<const GaussianNb*>(impl_.get())) j["kind"] = "gaussian_nb";
  if (dynamic_cast<const Knn*>(impl_.get())) j["kind"] = "knn";
  if (dynamic_cast<const Forest*>(impl_.get())) j["kind"] = "random_forest";
  return j;
}

FittedModel FittedModel::from_json(const nlohmann::json& j) {
  try {
    if (!j.contains("format_version") || j.at("format_version") != kModelFormatVersion) {
      throw ValidationError("unsupported model format_version");
    }
    const auto id = j.at("id").get<std::string>();
    const auto k = j.at("class_count").get<std::size_t>();
    const auto d = j.at("feature_count").get<std::size_t>();
    const auto kind = j.at("kind").get<std::string>();
    auto finish = [&](std::shared_ptr<FittedModel::Impl> m) {
      m->input_width = j.at("input_width").get<std::size_t>();
      m->columns = j.at("feature_columns").get<std::vector<std::size_t>>();
      return FittedModel(std::move(m));
    };
    if (kind == "gaussian_nb") {
      auto m = std::make_shared<GaussianNb>(id, k, d);
      m->log_prior = GaussianNb::decode(j.at("log_prior"));
      m->mean = j.at("mean").get<std::vector<double>>();
      m->variance = j.at("variance").get<std::vector<double>>();
      return finish(std::move(m));
    }
    if (kind == "knn") {
      auto m = std::make_shared<Knn>(id, k, d);
      m->k = j.at("k").get<std::size_t>();
      m->alpha = j.at("laplace_alpha").get<double>();
      m->train = Matrix(j.at("rows").get<std::size_t>(), d, j.at("train").get<std::vector<double>>());
      m->labels = j.at("labels").get<std::vector<ClassIndex>>();
      return finish(std::move(m));
    }
    if (kind == "random_forest") {
      auto m = std::make_shared<Forest>(id, k, d);
      for (const auto& jt : j.at("trees")) {
        Tree t;
        for (const auto& jn : jt) {
          TreeNode n;
          if (jn.contains("probs")) {
            n.probs = jn.at("probs").get<std::vector<double>>();
          } else {
            n.feature = jn.at("feature").get<std::size_t>();
            n.threshold = jn.at("threshold").get<double>();
            n.left = jn.at("left").get<std::size_t>();
            n.right = jn.at("right").get<std::size_t>();
          }
          t.nodes.push_back(std::move(n));
        }
        m->trees.push_back(std::move(t));
      }
      return finish(std::move(m));
    }
    throw ValidationError("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

// ----- fit / predict --------------------------------------------------------

FittedModel fit(const ClassifierSpec& spec, const Matrix& features, std::span<const ClassIndex> labels,
                std::size_t class_count) {
  spec.validate();
  if (features.rows() != labels.size()) throw InvalidInput("features and labels differ in length");
  if (features.rows() == 0 || features.cols() == 0) throw InvalidInput("empty training data");
  check_features(features);
  std::vector<bool> present(class_count, false);
  for (ClassIndex y : labels) {
    if (y >= class_count) throw InvalidInput("label exceeds class count");
    present[y] = true;
  }
  if (std::count(present.begin(), present.end(), true) < 2) {
    throw InvalidInput("training labels contain a single class");
  }

  ClassifierSpec named = spec;
  if (named.id.empty()) named.id = spec.kind();
  Matrix sub;
  const Matrix* x = &features;
  if (!spec.feature_columns.empty()) {
    for (std::size_t c : spec.feature_columns) {
      if (c >= features.cols()) throw InvalidInput("feature column " + std::to_string(c) + " out of range");
    }
    sub = Matrix(features.rows(), spec.feature_columns.size());
    for (std::size_t i = 0; i < features.rows(); ++i) {
      for (std::size_t j = 0; j < spec.feature_columns.size(); ++j) sub(i, j) = features(i, spec.feature_columns[j]);
    }
    x = &sub;
  }

  std::shared_ptr<FittedModel::Impl> impl;
  if (const auto* nb = std::get_if<GaussianNbParams>(&spec.params)) {
    impl = GaussianNb::fit(named, *nb, *x, labels, class_count);
  } else if (const auto* knn = std::get_if<KnnParams>(&spec.params)) {
    auto m = std::make_shared<Knn>(named.id, class_count, x->cols());
    m->train = *x;
    m->labels.assign(labels.begin(), labels.end());
    m->k = knn->k;
    m->alpha = knn->laplace_alpha;
    impl = std::move(m);
  } else {
    impl = Forest::fit(named, std::get<ForestParams>(spec.params), *x, labels, class_count);
  }
  impl->columns = spec.feature_columns;
  impl->input_width = features.cols();
  return FittedModel(std::move(impl));
}

std::vector<ClassDistribution> predict_distributions(const FittedModel& model, const Matrix& features) {
  std::vector<ClassDistribution> out;
  if (features.rows() == 0) return out;
  check_features(features);
  out.reserve(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) out.push_back(model.predict_one(features.row(i)));
  return out;
}

PredictionTable predict_proba(const FittedModel& model, const Matrix& features,
                              std::span<const std::string> ids, std::span<const ClassIndex> labels) {
  if (ids.size() != features.rows() || labels.size() != features.rows()) {
    throw InvalidInput("ids, labels and features differ in length");
  }
  auto dists = predict_distributions(model, features);
  std::vector<PredictionRow> rows;
  rows.reserve(dists.size());
  for (std::size_t i = 0; i < dists.size(); ++i) rows.push_back({ids[i], labels[i], std::move(dists[i])});
  return PredictionTable(model.id(), model.class_count(), std::move(rows));
}

PredictionTable predict_proba(const FittedModel& model, const Dataset& data) {
  const auto ids = data.instance_ids();
  return predict_proba(model, data.features, ids, data.labels);
}

std::vector<std::size_t> stratified_folds(std::span<const ClassIndex> labels, std::size_t folds,
                                          std::uint64_t seed) {
  if (folds < 2) throw InvalidInput("cross-validation needs at least 2 folds");
  ClassIndex max_label = 0;
  for (ClassIndex y : labels) max_label = std::max(max_label, y);
  std::vector<std::vector<std::size_t>> by_class(labels.empty() ? 0 : max_label + 1);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  Rng rng(seed);
  std::vector<std::size_t> fold_of(labels.size());
  std::size_t next = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < folds) {
      throw StratificationError("class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                                " instances, fewer than " + std::to_string(folds) + " folds");
    }
    shuffle(std::span<std::size_t>(members), rng);
    for (std::size_t i : members) fold_of[i] = next++ % folds;
  }
  return fold_of;
}

GridSearchResult grid_search_cv(std::span<const ClassifierSpec> specs, const Matrix& features,
                                std::span<const ClassIndex> labels, std::size_t class_count,
                                std::size_t folds, std::uint64_t seed) {
  if (specs.empty()) throw InvalidInput("grid search needs at least one spec");
  if (features.rows() != labels.size()) throw InvalidInput("features and labels differ in length");
  const auto fold_of = stratified_folds(labels, folds, seed);

  GridSearchResult result{0, specs[0], {}};
  for (const auto& spec : specs) {
    double sum = 0.0;
    for (std::size_t f = 0; f < folds; ++f) {
      std::vector<std::size_t> train, held;
      for (std::size_t i = 0; i < labels.size(); ++i) (fold_of[i] == f ? held : train).push_back(i);
      std::vector<ClassIndex> train_y, held_y;
      for (std::size_t i : train) train_y.push_back(labels[i]);
      for (std::size_t i : held) held_y.push_back(labels[i]);
      const auto model = fit(spec, features.select_rows(train), train_y, class_count);
      const auto dists = predict_distributions(model, features.select_rows(held));
      std::size_t correct = 0;
      for (std::size_t i = 0; i < dists.size(); ++i) correct += predicted_class(dists[i]) == held_y[i] ? 1 : 0;
      sum += static_cast<double>(correct) / static_cast<double>(held.size());
    }
    result.mean_accuracy.push_back(sum / static_cast<double>(folds));
  }
  for (std::size_t i = 1; i < specs.size(); ++i) {
    if (result.mean_accuracy[i] > result.mean_accuracy[result.best_index]) result.best_index = i;
  }
  result.best = specs[result.best_index];
  return result;
}

}  // namespace robq
