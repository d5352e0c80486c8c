#pragma once

// Seeded synthetic fixtures: weighted attention grids generated from known
// mixtures, used by the demo pipeline and the recovery benchmarks.
//
// The component-count recovery setup is deliberately in the compact-blob
// regime. With weights normalized to sum to 1, the selection penalty
// lambda*k only pays for an extra component when splitting buys at least
// lambda/2 nats of weighted log-likelihood; for equal-mass components that
// requires a separation-to-width ratio of several hundred. Blobs are
// therefore near point masses on the grid (far beyond the minimum 6-sigma
// separation), which also makes weight-proportional initialization land one
// mean per blob.

#include <cmath>
#include <cstdint>
#include <vector>

#include "mca/basis.hpp"
#include "mca/detail/rng.hpp"
#include "mca/em.hpp"
#include "mca/selection.hpp"

namespace mca::synthetic {

struct BlobScene {
  MixtureParams truth;
  int height = 0;
  int width = 0;
  std::vector<double> weights;  // row-major cell weights, unnormalized
};

inline Vec2 snap_to_cell_center(Vec2 x, int height, int width) {
  const int j = std::min(width - 1, std::max(0, (int)(x.u * width)));
  const int i = std::min(height - 1, std::max(0, (int)(x.v * height)));
  return {((double)j + 0.5) / width, ((double)i + 0.5) / height};
}

// K blob centers snapped to cell centers with pairwise separation >= min_sep.
inline std::vector<Vec2> place_blob_centers(int k, int height, int width,
                                            double min_sep, detail::Rng& rng) {
  std::vector<Vec2> centers;
  for (int attempt = 0; attempt < 20000; ++attempt) {
    centers.clear();
    while ((int)centers.size() < k) {
      const Vec2 c = snap_to_cell_center({rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)},
                                         height, width);
      bool ok = true;
      for (const Vec2& prev : centers) {
        const Vec2 d = c - prev;
        if (std::sqrt(dot(d, d)) < min_sep) {
          ok = false;
          break;
        }
      }
      if (ok) centers.push_back(c);
      else break;
    }
    if ((int)centers.size() == k) return centers;
  }
  // deterministic fallback: corners for k <= 4, a lattice beyond that
  centers.clear();
  if (k <= 4) {
    const Vec2 corners[4] = {{0.15, 0.15}, {0.85, 0.15}, {0.15, 0.85}, {0.85, 0.85}};
    for (int i = 0; i < k; ++i)
      centers.push_back(snap_to_cell_center(corners[i], height, width));
  } else {
    const int side = (int)std::ceil(std::sqrt((double)k));
    for (int i = 0; i < k; ++i) {
      const double u = 0.15 + 0.7 * (double)(i % side) / (side - 1);
      const double v = 0.15 + 0.7 * (double)(i / side) / (side - 1);
      centers.push_back(snap_to_cell_center({u, v}, height, width));
    }
  }
  return centers;
}

// A weighted grid discretized from a known k-component mixture. For k >= 2
// the blobs are tight (sigma well below the cell size) and far apart; for
// k = 1 the blob width varies so the single-component fixtures look like
// ordinary attention maps.
inline BlobScene make_blob_scene(int k, std::uint64_t seed, int height = 32,
                                 int width = 32) {
  if (k < 1) throw std::invalid_argument("make_blob_scene: k must be >= 1");
  detail::Rng rng(seed);
  BlobScene scene;
  scene.height = height;
  scene.width = width;

  const double min_sep = 0.5;
  const std::vector<Vec2> centers = place_blob_centers(k, height, width, min_sep, rng);
  for (int c = 0; c < k; ++c) {
    const double sigma = k == 1 ? rng.uniform(0.02, 0.05) : 0.004;
    scene.truth.components.push_back(
        {1.0 / k, centers[(std::size_t)c], Spd2(sigma * sigma, 0.0, sigma * sigma)});
  }

  scene.weights.resize((std::size_t)height * width);
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) {
      const Vec2 center{((double)j + 0.5) / width, ((double)i + 0.5) / height};
      scene.weights[(std::size_t)i * width + j] = mixture_pdf(scene.truth, center);
    }
  return scene;
}

inline WeightedDataset to_dataset(const BlobScene& scene) {
  std::vector<GridObservation> obs;
  obs.reserve(scene.weights.size());
  for (int i = 0; i < scene.height; ++i)
    for (int j = 0; j < scene.width; ++j)
      obs.push_back({Vec2{((double)j + 0.5) / scene.width, ((double)i + 0.5) / scene.height},
                     scene.weights[(std::size_t)i * scene.width + j]});
  return WeightedDataset(std::move(obs));
}

struct RecoveryTrial {
  int true_k = 0;
  int chosen_k = 0;
  SelectionReport report;
};

// One end-to-end recovery trial: generate a scene, fit with model selection,
// report the chosen component count.
inline RecoveryTrial recovery_trial(int true_k, std::uint64_t seed,
                                    SelectionConfig cfg = {}, int height = 32,
                                    int width = 32) {
  const BlobScene scene = make_blob_scene(true_k, seed, height, width);
  cfg.base_seed = detail::derive_seed(seed, 0xfe11);
  RecoveryTrial trial;
  trial.true_k = true_k;
  trial.report = select_k(to_dataset(scene), cfg);
  trial.chosen_k = trial.report.chosen_k;
  return trial;
}

// Smooth deterministic feature maps for the demo forward pass.
inline FeatureGrid make_demo_features(std::size_t dim, int height, int width,
                                      std::uint64_t seed) {
  detail::Rng rng(seed);
  FeatureGrid grid;
  grid.dim = dim;
  const std::size_t l = (std::size_t)height * width;
  grid.features.assign(dim * l, 0.0);
  std::vector<double> a(dim), b(dim), c(dim), phase(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    a[d] = rng.uniform(-1.0, 1.0);
    b[d] = rng.uniform(-1.0, 1.0);
    c[d] = rng.uniform(0.5, 3.0);
    phase[d] = rng.uniform(0.0, 6.28);
  }
  std::size_t cell = 0;
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j, ++cell) {
      const Vec2 x{((double)j + 0.5) / width, ((double)i + 0.5) / height};
      grid.locations.push_back(x);
      for (std::size_t d = 0; d < dim; ++d)
        grid.features[d * l + cell] =
            a[d] * x.u + b[d] * x.v + std::sin(c[d] * (x.u + 2.0 * x.v) * 3.14 + phase[d]);
    }
  return grid;
}

}  // namespace mca::synthetic
