#pragma once

// Attention-map evaluation: discretize continuous densities onto grids and
// compare maps with the Jensen-Shannon divergence (base-2 logs, so the
// divergence is bounded by 1).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mca/em.hpp"

namespace mca {

// A discrete probability map over an H x W grid; mass is normalized to sum
// to 1 at construction.
struct DensityGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> mass;  // row-major

  DensityGrid(std::size_t h, std::size_t w, std::vector<double> raw)
      : height(h), width(w), mass(std::move(raw)) {
    if (height == 0 || width == 0 || mass.size() != height * width)
      throw std::invalid_argument("DensityGrid: shape mismatch");
    long double total = 0.0L;
    for (double m : mass) {
      if (!(m >= 0.0) || !std::isfinite(m))
        throw std::invalid_argument("DensityGrid: mass entries must be finite and >= 0");
      total += m;
    }
    if (!(total > 0.0L)) throw std::invalid_argument("DensityGrid: total mass is zero");
    for (double& m : mass) m = (double)(m / total);
  }

  double at(std::size_t i, std::size_t j) const { return mass[i * width + j]; }
};

// Mixture density sampled at cell centers, scaled by the cell area and
// renormalized. Cell (i, j) has center ((j+0.5)/W, (i+0.5)/H).
inline DensityGrid discretize(const MixtureParams& m, std::size_t height,
                              std::size_t width) {
  if (height == 0 || width == 0)
    throw std::invalid_argument("discretize: grid dimensions must be >= 1");
  std::vector<double> mass(height * width);
  const double area = 1.0 / ((double)height * (double)width);
  for (std::size_t i = 0; i < height; ++i)
    for (std::size_t j = 0; j < width; ++j) {
      const Vec2 center{((double)j + 0.5) / (double)width,
                        ((double)i + 0.5) / (double)height};
      mass[i * width + j] = mixture_pdf(m, center) * area;
    }
  return DensityGrid(height, width, std::move(mass));
}

// JS(p, q) = 1/2 KL(p || m) + 1/2 KL(q || m) with m = (p + q)/2, base-2
// logarithms, and 0 log 0 = 0.
inline double js_divergence(const DensityGrid& p, const DensityGrid& q) {
  if (p.height != q.height || p.width != q.width)
    throw std::invalid_argument("js_divergence: dimension mismatch");
  double kl_p = 0.0, kl_q = 0.0;
  for (std::size_t i = 0; i < p.mass.size(); ++i) {
    const double pi = p.mass[i];
    const double qi = q.mass[i];
    const double mi = 0.5 * (pi + qi);
    if (pi > 0.0) kl_p += pi * std::log2(pi / mi);
    if (qi > 0.0) kl_q += qi * std::log2(qi / mi);
  }
  return 0.5 * kl_p + 0.5 * kl_q;
}

struct ModelComparison {
  std::string name;
  double js = 0.0;
};

// Ranks candidate maps by ascending JS divergence against the reference.
inline std::vector<ModelComparison> compare_models(
    const DensityGrid& reference,
    const std::vector<std::pair<std::string, DensityGrid>>& candidates) {
  std::vector<ModelComparison> out;
  out.reserve(candidates.size());
  for (const auto& [name, grid] : candidates) {
    if (grid.height != reference.height || grid.width != reference.width)
      throw std::invalid_argument("compare_models: dimension mismatch for '" + name + "'");
    out.push_back({name, js_divergence(reference, grid)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ModelComparison& a, const ModelComparison& b) {
                     return a.js < b.js;
                   });
  return out;
}

}  // namespace mca
