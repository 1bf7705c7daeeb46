#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rxnelicit/embedding.hpp"

namespace rxnelicit::cluster {

using embed::Vector;

struct KMeansOptions {
  int max_iter = 300;
  double tol = 1e-4;
  // Independent k-means++ starts; the lowest-inertia fit wins.
  int restarts = 1;
};

struct ClusterModel {
  int k = 0;
  std::vector<Vector> centroids;
  embed::EncodingMethod encoding = embed::EncodingMethod::kConcat;
  std::uint64_t seed = 0;
  double inertia = 0.0;

  // Fit diagnostics; not serialized.
  std::vector<int> labels;
  std::vector<double> inertia_history;
  int iterations = 0;

  std::size_t dim() const { return centroids.empty() ? 0 : centroids[0].size(); }
};

double squared_distance(const Vector &a, const Vector &b);

// Sum of squared distances from each point to its labelled centroid.
double inertia(std::span<const Vector> points, std::span<const Vector> centroids,
               std::span<const int> labels);

// k-means++ seeding followed by Lloyd iterations until the largest
// centroid move drops below tol. An empty cluster takes the point farthest
// from its current centroid.
ClusterModel kmeans_fit(std::span<const Vector> points, int k,
                        std::uint64_t seed, const KMeansOptions &opts = {});

// Nearest centroid; ties go to the lowest index.
std::vector<int> kmeans_assign(const ClusterModel &model,
                               std::span<const Vector> points);

// Projection onto the top two principal directions of the centred points,
// found by seeded power iteration with deflation.
std::vector<std::array<double, 2>> project_2d(std::span<const Vector> points,
                                              std::uint64_t seed);

// "KMNS" container: version, k, dim, encoding tag, seed, k x dim floats.
std::string serialize_model(const ClusterModel &model);
ClusterModel parse_model(std::string_view bytes,
                         const std::string &context = "KMNS");
void save_model(const std::filesystem::path &path, const ClusterModel &model);
ClusterModel load_model(const std::filesystem::path &path);

}  // namespace rxnelicit::cluster
