#include "surgskill/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "surgskill/error.hpp"

namespace surgskill {

double max_interior_speed(const std::vector<const KinematicProfile*>& profiles) {
  double vmax = 0.0;
  for (const auto* p : profiles)
    for (std::size_t k = p->begin(); k < p->end(); ++k) vmax = std::max(vmax, p->v[k]);
  return vmax;
}

double max_interior_speed(const GroupSet& groups) {
  std::vector<const KinematicProfile*> all;
  for (const auto& g : groups)
    for (const auto& s : g.subjects)
      for (const auto& p : s) all.push_back(&p);
  return max_interior_speed(all);
}

namespace {

void check_binning(const Binning& b) {
  if (b.speed_bins < 1 || b.kappa_bins < 1 || !(b.kappa_min > 0) || !(b.kappa_max > b.kappa_min) ||
      !(b.alpha > 0))
    throw AnalysisError(ErrorKind::BinningMismatch, "invalid binning configuration");
}

std::vector<const KinematicProfile*> pointers(const ProfileSet& s) {
  std::vector<const KinematicProfile*> out;
  for (const auto& p : s) out.push_back(&p);
  return out;
}

Binning resolve(Binning b, double data_vmax) {
  if (!(b.v_max > 0)) b.v_max = data_vmax > 0 ? data_vmax : 1.0;
  return b;
}

}  // namespace

Eigen::MatrixXd histogram_counts(const std::vector<const KinematicProfile*>& profiles, const Binning& b) {
  check_binning(b);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(b.speed_bins, b.kappa_bins + 1);
  const double lkmin = std::log(b.kappa_min), lspan = std::log(b.kappa_max) - lkmin;
  for (const auto* p : profiles) {
    for (std::size_t k = p->begin(); k < p->end(); ++k) {
      int i = static_cast<int>(std::floor(p->v[k] / b.v_max * b.speed_bins));
      i = std::clamp(i, 0, b.speed_bins - 1);
      int j = 0;
      if (p->kappa[k] >= b.kappa_min) {
        j = 1 + static_cast<int>(std::floor((std::log(p->kappa[k]) - lkmin) / lspan * b.kappa_bins));
        j = std::clamp(j, 1, b.kappa_bins);
      }
      c(i, j) += 1.0;
    }
  }
  return c;
}

SpeedCurvatureHistogram histogram_from_counts(const Eigen::MatrixXd& counts, const Binning& b) {
  check_binning(b);
  const double total = counts.sum();
  if (!(total > 0)) throw AnalysisError(ErrorKind::EmptyInput, "histogram has no samples");
  SpeedCurvatureHistogram h;
  h.n_samples = static_cast<std::size_t>(total);
  h.speed_edges.resize(static_cast<std::size_t>(b.speed_bins) + 1);
  for (int i = 0; i <= b.speed_bins; ++i)
    h.speed_edges[static_cast<std::size_t>(i)] = b.v_max * i / b.speed_bins;
  h.kappa_edges.push_back(0.0);
  const double ratio = b.kappa_max / b.kappa_min;
  for (int j = 0; j <= b.kappa_bins; ++j)
    h.kappa_edges.push_back(j == b.kappa_bins ? b.kappa_max
                                              : b.kappa_min * std::pow(ratio, static_cast<double>(j) / b.kappa_bins));
  h.p = (counts / total).array() + b.alpha;
  h.p /= h.p.sum();
  return h;
}

SpeedCurvatureHistogram build_histogram(const std::vector<const KinematicProfile*>& profiles, const Binning& b) {
  if (profiles.empty()) throw AnalysisError(ErrorKind::EmptyInput, "no profiles");
  Binning r = resolve(b, max_interior_speed(profiles));
  return histogram_from_counts(histogram_counts(profiles, r), r);
}

SpeedCurvatureHistogram build_histogram(const ProfileSet& profiles, const Binning& b) {
  return build_histogram(pointers(profiles), b);
}

std::vector<std::pair<int, int>> dominant_states(const SpeedCurvatureHistogram& h, double mass) {
  const Eigen::Index rows = h.p.rows(), cols = h.p.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(h.p.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  // linear index i*cols + j orders by (speed, kappa)
  auto val = [&](Eigen::Index idx) { return h.p(idx / cols, idx % cols); };
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return val(a) > val(b); });
  std::vector<std::pair<int, int>> out;
  const double target = mass * (1.0 - 1e-12);
  double acc = 0.0;
  for (auto idx : order) {
    if (acc >= target) break;
    acc += val(idx);
    out.emplace_back(static_cast<int>(idx / cols), static_cast<int>(idx % cols));
  }
  (void)rows;
  return out;
}

double symmetric_kl(const Eigen::ArrayXd& p, const Eigen::ArrayXd& q) {
  if (p.size() != q.size() || p.size() == 0)
    throw AnalysisError(ErrorKind::BinningMismatch, "distributions differ in size");
  double pq = 0.0, qp = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    pq += p[i] * std::log(p[i] / q[i]);
    qp += q[i] * std::log(q[i] / p[i]);
  }
  return std::max(0.0, 0.5 * (pq + qp));
}

double symmetric_kl(const SpeedCurvatureHistogram& p, const SpeedCurvatureHistogram& q) {
  if (p.p.rows() != q.p.rows() || p.p.cols() != q.p.cols() || p.speed_edges != q.speed_edges ||
      p.kappa_edges != q.kappa_edges)
    throw AnalysisError(ErrorKind::BinningMismatch, "histograms use different binning");
  return symmetric_kl(Eigen::Map<const Eigen::ArrayXd>(p.p.data(), p.p.size()),
                      Eigen::Map<const Eigen::ArrayXd>(q.p.data(), q.p.size()));
}

namespace {

struct CountCache {
  Binning binning;
  std::vector<std::vector<Eigen::MatrixXd>> subject;  // [group][subject]
  std::vector<Eigen::MatrixXd> total;
};

CountCache make_cache(const GroupSet& groups, const Binning& b) {
  CountCache c;
  c.binning = resolve(b, max_interior_speed(groups));
  for (const auto& g : groups) {
    c.subject.emplace_back();
    Eigen::MatrixXd tot = Eigen::MatrixXd::Zero(c.binning.speed_bins, c.binning.kappa_bins + 1);
    for (const auto& s : g.subjects) {
      c.subject.back().push_back(histogram_counts(pointers(s), c.binning));
      tot += c.subject.back().back();
    }
    c.total.push_back(tot);
  }
  return c;
}

Eigen::ArrayXd normalized(const Eigen::MatrixXd& counts, double alpha) {
  const double total = counts.sum();
  if (!(total > 0)) throw AnalysisError(ErrorKind::EmptyInput, "empty leave-one-out histogram");
  Eigen::ArrayXd p = Eigen::Map<const Eigen::ArrayXd>(counts.data(), counts.size()) / total + alpha;
  return p / p.sum();
}

}  // namespace

DivergenceTable loo_permutation_table(const GroupSet& groups, const Binning& b) {
  if (groups.empty()) throw AnalysisError(ErrorKind::EmptyInput, "no groups");
  for (const auto& g : groups)
    if (g.subjects.size() < 2)
      throw AnalysisError(ErrorKind::InsufficientSubjects,
                          std::string(to_string(g.label)) + " has fewer than 2 subjects");
  const CountCache cache = make_cache(groups, b);
  const auto K = static_cast<Eigen::Index>(groups.size());

  std::vector<std::vector<Eigen::ArrayXd>> loo(groups.size());
  for (std::size_t m = 0; m < groups.size(); ++m)
    for (std::size_t i = 0; i < groups[m].subjects.size(); ++i)
      loo[m].push_back(normalized(cache.total[m] - cache.subject[m][i], cache.binning.alpha));

  DivergenceTable t;
  for (const auto& g : groups) t.groups.push_back(g.label);
  t.mean = Eigen::MatrixXd::Zero(K, K);
  t.std = Eigen::MatrixXd::Zero(K, K);
  t.pairs = Eigen::MatrixXi::Zero(K, K);
  for (Eigen::Index m = 0; m < K; ++m) {
    for (Eigen::Index n = 0; n < K; ++n) {
      std::vector<double> vals;
      const auto& lm = loo[static_cast<std::size_t>(m)];
      const auto& ln = loo[static_cast<std::size_t>(n)];
      for (std::size_t i = 0; i < lm.size(); ++i)
        for (std::size_t j = 0; j < ln.size(); ++j)
          if (i != j) vals.push_back(symmetric_kl(lm[i], ln[j]));
      if (vals.empty()) continue;
      double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      t.mean(m, n) = mean;
      t.std(m, n) = std::sqrt(var / static_cast<double>(vals.size()));
      t.pairs(m, n) = static_cast<int>(vals.size());
    }
  }
  return t;
}

namespace {

Classification classify_counts(const Eigen::MatrixXd& subject, const CountCache& cache, const GroupSet& groups,
                               std::optional<std::pair<std::size_t, std::size_t>> held_out) {
  const Eigen::ArrayXd ps = normalized(subject, cache.binning.alpha);
  Classification c;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Eigen::MatrixXd ref = cache.total[g];
    if (held_out && held_out->first == g) ref -= cache.subject[g][held_out->second];
    double d = std::numeric_limits<double>::infinity();
    if (ref.sum() > 0) d = symmetric_kl(ps, normalized(ref, cache.binning.alpha));
    c.divergences.push_back(d);
    if (d < best) {
      best = d;
      c.predicted_index = g;
      c.predicted = groups[g].label;
    }
  }
  return c;
}

}  // namespace

Classification classify_subject(const ProfileSet& subject, const GroupSet& groups, const Binning& b,
                                std::optional<std::pair<std::size_t, std::size_t>> held_out) {
  if (groups.empty() || subject.empty()) throw AnalysisError(ErrorKind::EmptyInput, "nothing to classify");
  CountCache cache;
  if (b.v_max > 0) {
    cache = make_cache(groups, b);
  } else {
    Binning r = b;
    r.v_max = std::max(max_interior_speed(groups), max_interior_speed(pointers(subject)));
    cache = make_cache(groups, r);
  }
  return classify_counts(histogram_counts(pointers(subject), cache.binning), cache, groups, held_out);
}

ConfusionMatrix loo_confusion(const GroupSet& groups, const Binning& b, bool include_singletons) {
  if (groups.empty()) throw AnalysisError(ErrorKind::EmptyInput, "no groups");
  const CountCache cache = make_cache(groups, b);
  ConfusionMatrix cm;
  for (const auto& g : groups) cm.labels.push_back(g.label);
  const auto K = static_cast<Eigen::Index>(groups.size());
  cm.counts = Eigen::MatrixXi::Zero(K, K);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    bool singleton = groups[g].subjects.size() < 2;
    if (singleton && !include_singletons) continue;
    for (std::size_t i = 0; i < groups[g].subjects.size(); ++i) {
      auto held = singleton ? std::nullopt : std::optional(std::make_pair(g, i));
      auto c = classify_counts(cache.subject[g][i], cache, groups, held);
      cm.counts(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(c.predicted_index)) += 1;
    }
  }
  return cm;
}

}  // namespace surgskill
