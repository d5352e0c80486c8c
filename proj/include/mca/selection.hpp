#pragma once

// Component-count selection via a penalized-likelihood criterion:
// C(theta_k, k) = -2 loglik + lambda k, minimized over k.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mca/em.hpp"

namespace mca {

struct SelectionConfig {
  int k_min = 1;
  int k_max = 4;
  double lambda = 5.0;
  int restarts = 3;
  int max_iters = 10;
  std::uint64_t base_seed = 0;
  double tol = 1e-6;
};

inline double criterion(double loglik, int k, double lambda) {
  if (k < 1) throw std::invalid_argument("criterion: k must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("criterion: lambda must be > 0");
  return -2.0 * loglik + lambda * k;
}

struct SelectionEntry {
  int k = 0;
  double loglik = 0.0;
  double criterion = 0.0;  // +inf for excluded (collapsed) fits
  bool collapsed = false;
};

struct SelectionReport {
  int chosen_k = 0;
  MixtureParams chosen_params;
  std::vector<SelectionEntry> per_k;
};

// Fits every k in [k_min, k_max] with best-of-restarts EM and returns the
// criterion argmin, ties resolved to the smallest k. A k whose restarts all
// collapse is recorded with criterion = +inf and excluded.
inline SelectionReport select_k(const WeightedDataset& data, const SelectionConfig& cfg) {
  if (cfg.k_min < 1 || cfg.k_min > cfg.k_max)
    throw std::invalid_argument("select_k: need 1 <= k_min <= k_max");
  if (!(cfg.lambda > 0.0)) throw std::invalid_argument("select_k: lambda must be > 0");

  SelectionReport report;
  double best = std::numeric_limits<double>::infinity();
  for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
    SelectionEntry entry;
    entry.k = k;
    try {
      EMReport fit = run_em_restarts(data, k, cfg.restarts, cfg.max_iters,
                                     detail::derive_seed(cfg.base_seed, (std::uint64_t)k),
                                     cfg.tol);
      entry.loglik = fit.final_loglik();
      entry.criterion = criterion(entry.loglik, k, cfg.lambda);
      if (entry.criterion < best) {
        best = entry.criterion;
        report.chosen_k = k;
        report.chosen_params = std::move(fit.params);
      }
    } catch (const numerical_error&) {
      entry.loglik = -std::numeric_limits<double>::infinity();
      entry.criterion = std::numeric_limits<double>::infinity();
      entry.collapsed = true;
    } catch (const std::invalid_argument&) {
      // k exceeds the number of positive-weight observations
      entry.loglik = -std::numeric_limits<double>::infinity();
      entry.criterion = std::numeric_limits<double>::infinity();
      entry.collapsed = true;
    }
    report.per_k.push_back(entry);
  }
  if (report.chosen_k == 0)
    throw numerical_error("select_k: every candidate k was excluded");
  return report;
}

}  // namespace mca
