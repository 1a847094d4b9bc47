// Copyright 2026 The tas Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "tas/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "tas/io.hpp"

namespace tas {

namespace {

constexpr std::string_view kClusterMagic = "TCLM1";

Matrix kmeans_pp_init(const Matrix& points, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = points.rows();
  Matrix centers(k, points.cols());
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t first = pick(rng);
  std::copy(points.row(first).begin(), points.row(first).end(), centers.row(0).begin());

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), centers.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t next = 0;
    if (total <= 0.0) {
      next = pick(rng);
    } else {
      const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      double cum = 0.0;
      next = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (d2[i] > 0.0 && r < cum) {
          next = i;
          break;
        }
      }
      // Guard against rounding landing on an already chosen point.
      while (d2[next] <= 0.0 && next > 0) --next;
    }
    std::copy(points.row(next).begin(), points.row(next).end(), centers.row(c).begin());
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centers.row(c)));
  }
  return centers;
}

std::size_t nearest_center(std::span<const double> x, const Matrix& centers, double* d2_out) {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.rows(); ++c) {
    const double d2 = squared_distance(x, centers.row(c));
    if (d2 < best_d2) {
      best_d2 = d2;
      best = c;
    }
  }
  if (d2_out) *d2_out = best_d2;
  return best;
}

void update_centers(const Matrix& points, std::span<const std::size_t> assignments,
                    Matrix& centers) {
  std::vector<std::size_t> counts(centers.rows(), 0);
  std::fill(centers.data().begin(), centers.data().end(), 0.0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto c = centers.row(assignments[i]);
    const auto p = points.row(i);
    for (std::size_t d = 0; d < c.size(); ++d) c[d] += p[d];
    ++counts[assignments[i]];
  }
  for (std::size_t c = 0; c < centers.rows(); ++c)
    for (double& v : centers.row(c)) v /= static_cast<double>(counts[c]);
}

KMeansResult lloyd(const Matrix& points, std::size_t k, std::uint64_t rng_seed,
                   const KMeansOptions& options) {
  const std::size_t n = points.rows();
  std::mt19937_64 rng(rng_seed);
  KMeansResult res;
  res.centers = kmeans_pp_init(points, k, rng);
  res.assignments.assign(n, 0);
  std::vector<std::size_t> previous;
  std::vector<double> d2(n);
  std::vector<std::size_t> counts(k);

  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      res.assignments[i] = nearest_center(points.row(i), res.centers, &d2[i]);
      ++counts[res.assignments[i]];
    }
    // Re-seed empty clusters with the farthest point of a multi-member cluster.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (counts[res.assignments[i]] > 1 && (far == n || d2[i] > d2[far])) far = i;
      --counts[res.assignments[far]];
      res.assignments[far] = c;
      counts[c] = 1;
      d2[far] = 0.0;
      std::copy(points.row(far).begin(), points.row(far).end(), res.centers.row(c).begin());
    }
    const double obj = std::accumulate(d2.begin(), d2.end(), 0.0);
    res.objective_history.push_back(obj);
    update_centers(points, res.assignments, res.centers);

    if (it > 0) {
      const double prev = res.objective_history[it - 1];
      if (res.assignments == previous) break;
      if (prev <= 0.0 || (prev - obj) / prev <= options.relative_tolerance) break;
    }
    previous = res.assignments;
  }
  return res;
}

}  // namespace

double kmeans_objective(const Matrix& points, const Matrix& centers,
                        std::span<const std::size_t> assignments) {
  double obj = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i)
    obj += squared_distance(points.row(i), centers.row(assignments[i]));
  return obj;
}

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t rng_seed,
                    const KMeansOptions& options) {
  const std::size_t n = points.rows();
  if (k == 0) throw Error("kmeans: K must be >= 1");
  if (n < k)
    throw Error("kmeans: " + std::to_string(n) + " points cannot form " + std::to_string(k) +
                " clusters");
  if (options.restarts == 0) throw Error("kmeans: restarts must be >= 1");
  for (double v : points.data())
    if (!std::isfinite(v)) throw Error("kmeans: non-finite point coordinate");

  // Restart 0 uses the caller's seed; the lowest final objective wins, earliest on ties.
  KMeansResult best = lloyd(points, k, rng_seed, options);
  double best_obj = kmeans_objective(points, best.centers, best.assignments);
  for (std::size_t r = 1; r < options.restarts; ++r) {
    auto cand = lloyd(points, k, split_seed(rng_seed, r), options);
    const double obj = kmeans_objective(points, cand.centers, cand.assignments);
    if (obj < best_obj) {
      best = std::move(cand);
      best_obj = obj;
    }
  }
  return best;
}

std::vector<Gaussian> fit_gaussians(const Matrix& points,
                                    std::span<const std::size_t> assignments, std::size_t k) {
  const std::size_t dim = points.cols();
  std::vector<Gaussian> gs(k, Gaussian{std::vector<double>(dim, 0.0),
                                       std::vector<double>(dim, 0.0)});
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto& m = gs.at(assignments[i]).mean;
    const auto p = points.row(i);
    for (std::size_t d = 0; d < dim; ++d) m[d] += p[d];
    ++counts[assignments[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0)
      throw Error("fit_gaussians: cluster " + std::to_string(c) + " is empty");
    for (double& v : gs[c].mean) v /= static_cast<double>(counts[c]);
  }
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto& g = gs[assignments[i]];
    const auto p = points.row(i);
    for (std::size_t d = 0; d < dim; ++d) {
      const double c = p[d] - g.mean[d];
      g.variance[d] += c * c;
    }
  }
  for (std::size_t c = 0; c < k; ++c)
    for (double& v : gs[c].variance)
      v = std::max(v / static_cast<double>(counts[c]), kVarianceFloor);
  return gs;
}

double log_likelihood(const Gaussian& g, std::span<const double> x) {
  if (x.size() != g.mean.size()) throw Error("log_likelihood: dimension mismatch");
  constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // ln(2*pi)
  double s = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double diff = x[d] - g.mean[d];
    s += diff * diff / g.variance[d] + std::log(g.variance[d]) + kLog2Pi;
  }
  return -0.5 * s;
}

std::vector<std::size_t> likelihood_assign(const Matrix& points,
                                           const std::vector<Gaussian>& gaussians) {
  std::vector<std::size_t> out(points.rows(), 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < gaussians.size(); ++c) {
      const double ll = log_likelihood(gaussians[c], points.row(i));
      if (ll > best) {
        best = ll;
        out[i] = c;
      }
    }
  }
  return out;
}

ClusterOrder order_clusters(std::span<const std::size_t> assignments,
                            std::span<const double> timestamps, std::size_t k) {
  if (assignments.size() != timestamps.size())
    throw Error("order_clusters: assignments and timestamps differ in length");
  ClusterOrder out;
  out.time_means.assign(k, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    out.time_means.at(assignments[i]) += timestamps[i];
    ++counts[assignments[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0)
      throw Error("cluster " + std::to_string(c) +
                  " has no maximum-likelihood members; try a smaller K");
    out.time_means[c] /= static_cast<double>(counts[c]);
  }
  out.order.resize(k);
  std::iota(out.order.begin(), out.order.end(), 0);
  std::stable_sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
    return out.time_means[a] < out.time_means[b];
  });
  return out;
}

std::vector<bool> mark_background(const Matrix& points, const Matrix& centers,
                                  std::span<const std::size_t> assignments, double tau) {
  if (!(tau >= 0.0 && tau < 1.0)) throw Error("tau must lie in [0,1)");
  const std::size_t n = points.rows();
  std::vector<bool> mask(n, false);
  if (tau == 0.0) return mask;

  std::vector<std::vector<std::size_t>> members(centers.rows());
  for (std::size_t i = 0; i < n; ++i) members.at(assignments[i]).push_back(i);
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i)
    dist[i] = distance(points.row(i), centers.row(assignments[i]));

  for (auto& m : members) {
    // The epsilon keeps e.g. 0.7 * 10 from rounding up to 8.
    const double exact = tau * static_cast<double>(m.size());
    const auto count = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
    std::stable_sort(m.begin(), m.end(),
                     [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
    for (std::size_t r = 0; r < count && r < m.size(); ++r) mask[m[r]] = true;
  }
  return mask;
}

void ClusterModel::validate() const {
  if (k == 0) throw Error("cluster model: K must be >= 1");
  if (centers.rows() != k || gaussians.size() != k || time_means.size() != k ||
      order.size() != k)
    throw Error("cluster model: inconsistent K");
  std::vector<bool> seen(k, false);
  for (std::size_t c : order) {
    if (c >= k || seen[c]) throw Error("cluster model: order is not a permutation");
    seen[c] = true;
  }
  for (std::size_t i = 1; i < k; ++i)
    if (time_means[order[i]] < time_means[order[i - 1]])
      throw Error("cluster model: order is not sorted by time");
  for (const auto& g : gaussians) {
    if (g.mean.size() != dim() || g.variance.size() != dim())
      throw Error("cluster model: Gaussian dimension mismatch");
    for (double v : g.variance)
      if (!(v >= kVarianceFloor)) throw Error("cluster model: variance below floor");
  }
  if (bg_radius && bg_radius->size() != k) throw Error("cluster model: bg_radius size");
}

Matrix stack_frames(const Dataset& dataset) {
  Matrix all(dataset.total_frames(), dataset.feature_dim());
  std::size_t r = 0;
  for (const auto& s : dataset.sequences)
    for (std::size_t n = 0; n < s.num_frames(); ++n, ++r)
      std::copy(s.frames.row(n).begin(), s.frames.row(n).end(), all.row(r).begin());
  return all;
}

ClusterBuild build_cluster_model(const Dataset& embedded, std::size_t k, double tau,
                                 std::uint64_t rng_seed, const ClusterBuildOptions& options) {
  if (!(tau >= 0.0 && tau < 1.0)) throw Error("tau must lie in [0,1)");
  const Matrix points = stack_frames(embedded);
  std::vector<double> timestamps;
  timestamps.reserve(points.rows());
  for (const auto& s : embedded.sequences)
    timestamps.insert(timestamps.end(), s.timestamps.begin(), s.timestamps.end());

  ClusterBuild out;
  out.kmeans = kmeans(points, k, rng_seed, options.kmeans);
  ClusterModel& m = out.model;
  m.k = k;
  m.centers = out.kmeans.centers;
  m.gaussians = fit_gaussians(points, out.kmeans.assignments, k);

  const auto ml = likelihood_assign(points, m.gaussians);
  auto ordered = order_clusters(ml, timestamps, k);
  m.time_means = std::move(ordered.time_means);
  m.order = std::move(ordered.order);

  out.background = mark_background(points, m.centers, out.kmeans.assignments, tau);
  if (tau > 0.0) {
    std::vector<double> radius(k, 0.0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
      if (out.background[i]) continue;
      const std::size_t c = out.kmeans.assignments[i];
      radius[c] = std::max(radius[c], distance(points.row(i), m.centers.row(c)));
    }
    m.bg_radius = std::move(radius);

    if (options.refit_after_background) {
      Matrix kept;
      std::vector<std::size_t> kept_assign;
      for (std::size_t i = 0; i < points.rows(); ++i) {
        if (out.background[i]) continue;
        kept.append_row(points.row(i));
        kept_assign.push_back(out.kmeans.assignments[i]);
      }
      m.gaussians = fit_gaussians(kept, kept_assign, k);
    }
  }
  m.validate();
  return out;
}

void save_cluster_model(const ClusterModel& model, const std::filesystem::path& path) {
  model.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kClusterMagic.data(), kClusterMagic.size());
  io::write_u32(out, static_cast<std::uint32_t>(model.k));
  io::write_u32(out, static_cast<std::uint32_t>(model.dim()));
  io::write_f64s(out, model.centers.data());
  for (const auto& g : model.gaussians) io::write_f64s(out, g.mean);
  for (const auto& g : model.gaussians) io::write_f64s(out, g.variance);
  io::write_f64s(out, model.time_means);
  for (std::size_t c : model.order) io::write_u32(out, static_cast<std::uint32_t>(c));
  io::write_u32(out, model.bg_radius ? 1u : 0u);
  if (model.bg_radius) io::write_f64s(out, *model.bg_radius);
  if (!out) throw Error("failed writing " + path.string());
}

ClusterModel load_cluster_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::string what = path.string();
  io::expect_magic(in, kClusterMagic, what);
  ClusterModel m;
  m.k = io::read_u32(in, what);
  const std::size_t dim = io::read_u32(in, what);
  m.centers = Matrix(m.k, dim, io::read_f64s(in, m.k * dim, what));
  m.gaussians.resize(m.k);
  for (auto& g : m.gaussians) g.mean = io::read_f64s(in, dim, what);
  for (auto& g : m.gaussians) g.variance = io::read_f64s(in, dim, what);
  m.time_means = io::read_f64s(in, m.k, what);
  m.order.resize(m.k);
  for (auto& c : m.order) c = io::read_u32(in, what);
  if (io::read_u32(in, what) != 0) m.bg_radius = io::read_f64s(in, m.k, what);
  m.validate();
  return m;
}

}  // namespace tas
