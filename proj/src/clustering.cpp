#include "rxnelicit/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rxnelicit/binary_io.hpp"
#include "rxnelicit/error.hpp"
#include "rxnelicit/util.hpp"

namespace rxnelicit::cluster {

double squared_distance(const Vector &a, const Vector &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double inertia(std::span<const Vector> points, std::span<const Vector> centroids,
               std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    total += squared_distance(points[i], centroids[labels[i]]);
  return total;
}

namespace {

void check_dims(std::span<const Vector> points, std::size_t dim,
                const char *what) {
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i].size() != dim)
      throw DataError(std::string(what) + ": point " + std::to_string(i) +
                      " has dim " + std::to_string(points[i].size()) +
                      ", expected " + std::to_string(dim));
}

int nearest(const Vector &p, std::span<const Vector> centroids, double *dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < static_cast<int>(centroids.size()); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist)
    *dist = best_d;
  return best;
}

std::vector<Vector> plus_plus_init(std::span<const Vector> points, int k,
                                   Rng &rng) {
  const std::size_t n = points.size();
  std::vector<Vector> centroids;
  centroids.push_back(points[rng.uniform_index(n)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i)
    d2[i] = squared_distance(points[i], centroids[0]);
  // Greedy variant: draw several D^2-weighted candidates per centre and keep
  // the one that lowers the total potential most.
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
  std::vector<double> cand_d2(n), best_d2(n);
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (double d : d2)
      total += d;
    if (total <= 0.0) {
      // Every point already coincides with a centre.
      centroids.push_back(points[rng.uniform_index(n)]);
      continue;
    }
    std::size_t best = n;
    double best_potential = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
      const double target = rng.uniform01() * total;
      std::size_t pick = n - 1;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0)
          continue;
        acc += d2[i];
        pick = i;
        if (acc > target)
          break;
      }
      double potential = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cand_d2[i] = std::min(d2[i], squared_distance(points[i], points[pick]));
        potential += cand_d2[i];
      }
      if (potential < best_potential) {
        best_potential = potential;
        best = pick;
        best_d2.swap(cand_d2);
      }
    }
    centroids.push_back(points[best]);
    d2.swap(best_d2);
  }
  return centroids;
}

ClusterModel lloyd(std::span<const Vector> points, int k, Rng &rng,
                   const KMeansOptions &opts) {
  const std::size_t n = points.size();
  const std::size_t dim = points[0].size();
  ClusterModel m;
  m.k = k;
  m.centroids = plus_plus_init(points, k, rng);
  m.labels.assign(n, 0);

  std::vector<double> dist(n);
  auto assign = [&]() {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      m.labels[i] = nearest(points[i], m.centroids, &dist[i]);
      total += dist[i];
    }
    return total;
  };

  m.inertia_history.push_back(assign());
  for (int it = 0; it < opts.max_iter; ++it) {
    std::vector<std::size_t> counts(k, 0);
    for (int l : m.labels)
      ++counts[l];
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0)
        continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i)
        if (counts[m.labels[i]] > 1 && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      if (far_d <= 0.0)
        break;
      --counts[m.labels[far]];
      m.labels[far] = c;
      dist[far] = 0.0;
      counts[c] = 1;
    }

    std::vector<Vector> next(k, Vector(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      auto &acc = next[m.labels[i]];
      for (std::size_t j = 0; j < dim; ++j)
        acc[j] += points[i][j];
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        next[c] = m.centroids[c];
        continue;
      }
      for (auto &x : next[c])
        x /= static_cast<double>(counts[c]);
      shift = std::max(shift, std::sqrt(squared_distance(next[c], m.centroids[c])));
    }
    m.centroids = std::move(next);
    m.inertia_history.push_back(assign());
    m.iterations = it + 1;
    if (shift < opts.tol)
      break;
  }
  m.inertia = m.inertia_history.back();
  return m;
}

}  // namespace

ClusterModel kmeans_fit(std::span<const Vector> points, int k,
                        std::uint64_t seed, const KMeansOptions &opts) {
  if (k <= 0)
    throw DataError("k-means: k must be positive");
  if (points.size() < static_cast<std::size_t>(k))
    throw DataError("k-means: " + std::to_string(points.size()) +
                    " points is fewer than k=" + std::to_string(k));
  if (opts.max_iter <= 0 || !(opts.tol > 0.0) || opts.restarts <= 0)
    throw ConfigError("k-means: max_iter, tol and restarts must be positive");
  const std::size_t dim = points[0].size();
  if (dim == 0)
    throw DataError("k-means: points have dimension 0");
  check_dims(points, dim, "k-means");

  Rng rng(seed);
  ClusterModel best;
  for (int r = 0; r < opts.restarts; ++r) {
    auto m = lloyd(points, k, rng, opts);
    if (r == 0 || m.inertia < best.inertia)
      best = std::move(m);
  }
  best.seed = seed;
  return best;
}

std::vector<int> kmeans_assign(const ClusterModel &model,
                               std::span<const Vector> points) {
  check_dims(points, model.dim(), "k-means assign");
  std::vector<int> labels(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    labels[i] = nearest(points[i], model.centroids, nullptr);
  return labels;
}

std::vector<std::array<double, 2>> project_2d(std::span<const Vector> points,
                                              std::uint64_t seed) {
  const std::size_t n = points.size();
  if (n < 2)
    throw DataError("project_2d needs at least 2 points");
  const std::size_t dim = points[0].size();
  check_dims(points, dim, "project_2d");

  Vector mean(dim, 0.0);
  for (const auto &p : points)
    for (std::size_t j = 0; j < dim; ++j)
      mean[j] += p[j];
  for (auto &x : mean)
    x /= static_cast<double>(n);
  std::vector<Vector> centred(points.begin(), points.end());
  for (auto &p : centred)
    for (std::size_t j = 0; j < dim; ++j)
      p[j] -= mean[j];

  // y = X^T X v without forming the covariance.
  auto gram_apply = [&](const Vector &v) {
    Vector y(dim, 0.0);
    for (const auto &p : centred) {
      double s = 0.0;
      for (std::size_t j = 0; j < dim; ++j)
        s += p[j] * v[j];
      for (std::size_t j = 0; j < dim; ++j)
        y[j] += s * p[j];
    }
    return y;
  };
  auto dot = [](const Vector &a, const Vector &b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j)
      s += a[j] * b[j];
    return s;
  };

  Rng rng(seed);
  std::vector<Vector> axes;
  std::vector<double> eigen;
  for (int axis = 0; axis < 2; ++axis) {
    Vector v(dim);
    for (auto &x : v)
      x = rng.normal();
    double lambda = 0.0;
    for (int it = 0; it < 1000; ++it) {
      for (const auto &a : axes) {
        const double proj = dot(v, a);
        for (std::size_t j = 0; j < dim; ++j)
          v[j] -= proj * a[j];
      }
      const double norm = std::sqrt(dot(v, v));
      if (norm == 0.0)
        break;
      for (auto &x : v)
        x /= norm;
      Vector w = gram_apply(v);
      for (const auto &a : axes) {
        const double proj = dot(w, a);
        for (std::size_t j = 0; j < dim; ++j)
          w[j] -= proj * a[j];
      }
      lambda = std::sqrt(dot(w, w));
      if (lambda == 0.0)
        break;
      for (auto &x : w)
        x /= lambda;
      const double agreement = std::abs(dot(v, w));
      v = std::move(w);
      if (agreement > 1.0 - 1e-15)
        break;
    }
    // Fix the sign so the largest component is positive.
    std::size_t big = 0;
    for (std::size_t j = 1; j < dim; ++j)
      if (std::abs(v[j]) > std::abs(v[big]))
        big = j;
    if (v[big] < 0)
      for (auto &x : v)
        x = -x;
    axes.push_back(std::move(v));
    eigen.push_back(lambda);
  }

  std::vector<std::array<double, 2>> out(n, {0.0, 0.0});
  const double scale = eigen[0];
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < 2; ++a) {
      // A direction carrying (numerically) no variance projects to zero.
      if (eigen[a] <= 1e-12 * std::max(scale, 1e-300) || eigen[a] == 0.0)
        continue;
      out[i][a] = dot(centred[i], axes[a]);
    }
  return out;
}

namespace {
constexpr std::string_view kModelMagic = "KMNS";
constexpr std::uint32_t kModelVersion = 1;
}  // namespace

std::string serialize_model(const ClusterModel &model) {
  binio::Writer out;
  out.magic(kModelMagic);
  out.u32(kModelVersion);
  out.u32(static_cast<std::uint32_t>(model.k));
  out.u32(static_cast<std::uint32_t>(model.dim()));
  out.u8(static_cast<std::uint8_t>(model.encoding));
  out.u64(model.seed);
  for (const auto &c : model.centroids)
    for (double x : c)
      out.f32(static_cast<float>(x));
  return out.bytes();
}

ClusterModel parse_model(std::string_view bytes, const std::string &context) {
  binio::Reader in(bytes, context);
  in.expect_magic(kModelMagic);
  if (auto v = in.u32(); v != kModelVersion)
    throw DataError(context + ": unsupported version " + std::to_string(v));
  ClusterModel m;
  m.k = static_cast<int>(in.u32());
  const std::uint32_t dim = in.u32();
  const std::uint8_t tag = in.u8();
  if (tag > 3)
    throw DataError(context + ": bad encoding tag " + std::to_string(tag));
  m.encoding = static_cast<embed::EncodingMethod>(tag);
  m.seed = in.u64();
  m.centroids.assign(m.k, Vector(dim));
  for (auto &c : m.centroids)
    for (auto &x : c)
      x = in.f32();
  if (!in.at_end())
    throw DataError(context + ": trailing bytes");
  return m;
}

void save_model(const std::filesystem::path &path, const ClusterModel &model) {
  binio::write_file(path, serialize_model(model));
}

ClusterModel load_model(const std::filesystem::path &path) {
  return parse_model(binio::read_file(path), path.string());
}

}  // namespace rxnelicit::cluster
