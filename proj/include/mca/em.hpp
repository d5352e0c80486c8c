#pragma once

// Weighted-data EM for mixtures of Gaussians: each observation's
// log-likelihood contribution is scaled by an importance weight. Includes
// seeded initialization and multi-restart orchestration.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mca/detail/rng.hpp"
#include "mca/errors.hpp"
#include "mca/gauss2d.hpp"

namespace mca {

// Covariance floor: eps*I is added after the M-step update whenever the
// smaller eigenvalue drops below eps. On unit-square data this is three
// orders of magnitude below the grid scale.
inline constexpr double cov_floor = 1e-6;

// A component whose mixing weight falls below this is treated as collapsed.
inline constexpr double pi_collapse_threshold = 1e-12;

struct GridObservation {
  Vec2 location;
  double weight = 0.0;
};

// Observations with nonnegative weights; weights are normalized to sum to 1
// at construction, so mixing coefficients estimated from them live on the
// simplex.
class WeightedDataset {
 public:
  explicit WeightedDataset(std::vector<GridObservation> obs) : obs_(std::move(obs)) {
    if (obs_.empty()) throw std::invalid_argument("WeightedDataset: no observations");
    double total = 0.0;
    for (const GridObservation& o : obs_) {
      if (!finite(o.location) || o.location.u < 0.0 || o.location.u > 1.0 ||
          o.location.v < 0.0 || o.location.v > 1.0)
        throw std::invalid_argument("WeightedDataset: locations must lie in the unit square");
      if (!(o.weight >= 0.0) || !std::isfinite(o.weight))
        throw std::invalid_argument("WeightedDataset: weights must be finite and >= 0");
      total += o.weight;
    }
    if (!(total > 0.0))
      throw std::invalid_argument("WeightedDataset: at least one weight must be positive");
    for (GridObservation& o : obs_) o.weight /= total;
  }

  const std::vector<GridObservation>& observations() const { return obs_; }
  std::size_t size() const { return obs_.size(); }

  std::size_t positive_count() const {
    std::size_t n = 0;
    for (const GridObservation& o : obs_) n += o.weight > 0.0;
    return n;
  }

 private:
  std::vector<GridObservation> obs_;
};

struct MixtureComponent {
  double pi = 0.0;
  Vec2 mean;
  Spd2 cov;
};

struct MixtureParams {
  std::vector<MixtureComponent> components;
  std::size_t size() const { return components.size(); }
};

inline void validate(const MixtureParams& m) {
  if (m.components.empty()) throw std::invalid_argument("MixtureParams: empty mixture");
  double total = 0.0;
  for (const MixtureComponent& c : m.components) {
    if (!(c.pi > 0.0) || c.pi > 1.0 + 1e-10)
      throw std::invalid_argument("MixtureParams: mixing coefficients must lie in (0, 1]");
    if (!finite(c.mean)) throw std::invalid_argument("MixtureParams: non-finite mean");
    total += c.pi;
  }
  if (std::abs(total - 1.0) > 1e-10)
    throw std::invalid_argument("MixtureParams: mixing coefficients must sum to 1");
}

namespace detail {
inline double mixture_log_pdf_scratch(const MixtureParams& m, Vec2 x,
                                      std::vector<double>& lp) {
  lp.resize(m.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m.size(); ++k) {
    lp[k] = std::log(m.components[k].pi) +
            log_pdf(Gaussian2{m.components[k].mean, m.components[k].cov}, x);
    mx = std::max(mx, lp[k]);
  }
  double s = 0.0;
  for (double t : lp) s += std::exp(t - mx);
  return mx + std::log(s);
}
}  // namespace detail

inline double mixture_log_pdf(const MixtureParams& m, Vec2 x) {
  std::vector<double> lp;
  return detail::mixture_log_pdf_scratch(m, x, lp);
}

inline double mixture_pdf(const MixtureParams& m, Vec2 x) {
  return std::exp(mixture_log_pdf(m, x));
}

// Weighted log-likelihood: sum_l w_l log sum_k pi_k N(x_l; mu_k, Sigma_k),
// log-sum-exp stabilized.
inline double weighted_loglik(const WeightedDataset& data, const MixtureParams& m) {
  long double acc = 0.0L;
  std::vector<double> lp;
  for (const GridObservation& o : data.observations())
    acc += (long double)o.weight * detail::mixture_log_pdf_scratch(m, o.location, lp);
  return (double)acc;
}

// Responsibilities gamma[l*K + k], computed in the log domain; each row sums
// to 1.
inline std::vector<double> e_step(const WeightedDataset& data, const MixtureParams& m) {
  const std::size_t l = data.size();
  const std::size_t k = m.size();
  std::vector<double> gamma(l * k);
  std::vector<double> lp(k);
  for (std::size_t i = 0; i < l; ++i) {
    const Vec2 x = data.observations()[i].location;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      lp[j] = std::log(m.components[j].pi) +
              log_pdf(Gaussian2{m.components[j].mean, m.components[j].cov}, x);
      mx = std::max(mx, lp[j]);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      gamma[i * k + j] = std::exp(lp[j] - mx);
      s += gamma[i * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) gamma[i * k + j] /= s;
  }
  return gamma;
}

inline Spd2 floor_cov(double a, double b, double c) {
  const double half_trace = 0.5 * (a + c);
  const double r = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  if (half_trace - r < cov_floor) {
    a += cov_floor;
    c += cov_floor;
  }
  return Spd2(a, b, c);
}

// M step: pi_k = sum_l w_l gamma_lk, mu_k and Sigma_k the responsibility-
// and weight-scaled moments, with the covariance floor applied. Throws
// component_collapse when some pi_k falls below the collapse threshold.
inline MixtureParams m_step(const WeightedDataset& data, const std::vector<double>& gamma) {
  const std::size_t l = data.size();
  if (l == 0 || gamma.size() % l != 0)
    throw std::invalid_argument("m_step: responsibility matrix shape mismatch");
  const std::size_t k = gamma.size() / l;

  MixtureParams out;
  out.components.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    long double pi = 0.0L, mu = 0.0L, mv = 0.0L;
    for (std::size_t i = 0; i < l; ++i) {
      const GridObservation& o = data.observations()[i];
      const long double wg = (long double)o.weight * gamma[i * k + j];
      pi += wg;
      mu += wg * o.location.u;
      mv += wg * o.location.v;
    }
    if (!(pi >= pi_collapse_threshold)) throw component_collapse((int)j, (double)pi);
    const Vec2 mean{(double)(mu / pi), (double)(mv / pi)};
    long double saa = 0.0L, sab = 0.0L, scc = 0.0L;
    for (std::size_t i = 0; i < l; ++i) {
      const GridObservation& o = data.observations()[i];
      const long double wg = (long double)o.weight * gamma[i * k + j];
      const double du = o.location.u - mean.u;
      const double dv = o.location.v - mean.v;
      saa += wg * du * du;
      sab += wg * du * dv;
      scc += wg * dv * dv;
    }
    out.components.push_back({(double)pi, mean,
                              floor_cov((double)(saa / pi), (double)(sab / pi),
                                        (double)(scc / pi))});
  }
  return out;
}

struct EMReport {
  MixtureParams params;
  std::vector<double> loglik_trace;  // initial value, then one entry per iteration
  int iterations_run = 0;
  bool converged = false;
  bool collapsed = false;
  int collapsed_component = -1;

  double final_loglik() const { return loglik_trace.back(); }
};

// Alternates E and M steps from the given initialization. Stops after
// max_iters or when the log-likelihood improvement drops below tol (pass a
// negative tol to always run the full budget). A component collapse ends the
// run and is reported with the last valid parameters.
inline EMReport run_em(const WeightedDataset& data, const MixtureParams& init,
                       int max_iters, double tol = 1e-6) {
  if (max_iters < 1) throw std::invalid_argument("run_em: max_iters must be >= 1");
  validate(init);

  EMReport report;
  report.params = init;
  report.loglik_trace.push_back(weighted_loglik(data, init));
  for (int it = 1; it <= max_iters; ++it) {
    const std::vector<double> gamma = e_step(data, report.params);
    try {
      report.params = m_step(data, gamma);
    } catch (const component_collapse& e) {
      report.collapsed = true;
      report.collapsed_component = e.component();
      return report;
    }
    report.iterations_run = it;
    const double ll = weighted_loglik(data, report.params);
    const double improvement = ll - report.loglik_trace.back();
    report.loglik_trace.push_back(ll);
    if (improvement < tol) {
      report.converged = true;
      break;
    }
  }
  return report;
}

// Seeded initialization: uniform mixing coefficients, means sampled without
// replacement with probability proportional to the observation weights, and
// each covariance set to the global weighted covariance scaled by 1/K
// (floored).
inline MixtureParams init_params(const WeightedDataset& data, int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("init_params: k must be >= 1");
  if ((std::size_t)k > data.positive_count())
    throw std::invalid_argument(
        "init_params: k exceeds the number of positive-weight observations");

  const auto& obs = data.observations();
  long double mu = 0.0L, mv = 0.0L;
  for (const GridObservation& o : obs) {
    mu += (long double)o.weight * o.location.u;
    mv += (long double)o.weight * o.location.v;
  }
  const double gu = (double)mu, gv = (double)mv;
  long double saa = 0.0L, sab = 0.0L, scc = 0.0L;
  for (const GridObservation& o : obs) {
    const double du = o.location.u - gu;
    const double dv = o.location.v - gv;
    saa += (long double)o.weight * du * du;
    sab += (long double)o.weight * du * dv;
    scc += (long double)o.weight * dv * dv;
  }
  const Spd2 cov = floor_cov((double)saa / k, (double)sab / k, (double)scc / k);

  detail::Rng rng(seed);
  std::vector<double> avail(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) avail[i] = obs[i].weight;

  MixtureParams out;
  out.components.reserve(k);
  for (int j = 0; j < k; ++j) {
    double total = 0.0;
    for (double w : avail) total += w;
    const double target = rng.uniform01() * total;
    double run = 0.0;
    std::size_t chosen = obs.size();
    for (std::size_t i = 0; i < avail.size(); ++i) {
      if (avail[i] <= 0.0) continue;
      run += avail[i];
      chosen = i;
      if (run >= target) break;
    }
    avail[chosen] = 0.0;
    out.components.push_back({1.0 / k, obs[chosen].location, cov});
  }
  return out;
}

// Best-of-restarts EM: independent seeded initializations, highest final
// weighted log-likelihood wins, ties to the lowest restart index. Collapsed
// restarts are skipped; throws if every restart collapses.
inline EMReport run_em_restarts(const WeightedDataset& data, int k, int restarts,
                                int max_iters, std::uint64_t seed, double tol = 1e-6) {
  if (restarts < 1) throw std::invalid_argument("run_em_restarts: restarts must be >= 1");
  EMReport best;
  bool have_best = false;
  for (int r = 0; r < restarts; ++r) {
    const MixtureParams init = init_params(data, k, detail::derive_seed(seed, r));
    EMReport report = run_em(data, init, max_iters, tol);
    if (report.collapsed) continue;
    if (!have_best || report.final_loglik() > best.final_loglik()) {
      best = std::move(report);
      have_best = true;
    }
  }
  if (!have_best)
    throw numerical_error("run_em_restarts: every restart collapsed (k = " +
                          std::to_string(k) + ")");
  return best;
}

}  // namespace mca
