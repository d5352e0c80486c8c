#pragma once

// The attention mechanisms: discrete softmax baseline, unimodal continuous
// attention via moment matching, and multimodal continuous attention with
// its closed-form forward and backward passes. The multimodal context is a
// mixture of per-component contexts, so the backward pass decomposes into
// per-component closed-form Jacobians.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "mca/basis.hpp"
#include "mca/em.hpp"
#include "mca/gauss2d.hpp"

namespace mca {

// Context vector c = sum_k pi_k c_k with the per-component parts retained.
struct ContextVector {
  std::vector<double> value;
  struct Part {
    double pi = 0.0;
    std::vector<double> context;
  };
  std::vector<Part> per_component;
};

// Max-subtraction stabilized softmax over a discrete score vector.
inline std::vector<double> softmax_weights(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("softmax_weights: empty scores");
  double mx = scores[0];
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("softmax_weights: non-finite score");
    mx = std::max(mx, s);
  }
  std::vector<double> p(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(scores[i] - mx);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

inline std::vector<double> discrete_context(const FeatureGrid& grid,
                                            std::span<const double> p) {
  if (p.size() != grid.size())
    throw std::invalid_argument("discrete_context: probability length mismatch");
  std::vector<double> out(grid.dim, 0.0);
  for (std::size_t d = 0; d < grid.dim; ++d) {
    double s = 0.0;
    for (std::size_t l = 0; l < grid.size(); ++l) s += grid.at(d, l) * p[l];
    out[d] = s;
  }
  return out;
}

// Unimodal attention density via moment matching: the weighted sample mean
// and covariance of the observations (covariance floored).
inline Gaussian2 moment_match(const WeightedDataset& data) {
  long double mu = 0.0L, mv = 0.0L;
  for (const GridObservation& o : data.observations()) {
    mu += (long double)o.weight * o.location.u;
    mv += (long double)o.weight * o.location.v;
  }
  const Vec2 mean{(double)mu, (double)mv};
  long double saa = 0.0L, sab = 0.0L, scc = 0.0L;
  for (const GridObservation& o : data.observations()) {
    const double du = o.location.u - mean.u;
    const double dv = o.location.v - mean.v;
    saa += (long double)o.weight * du * du;
    sab += (long double)o.weight * du * dv;
    scc += (long double)o.weight * dv * dv;
  }
  return Gaussian2{mean, floor_cov((double)saa, (double)sab, (double)scc)};
}

// c = B r with r_j = int p(x) psi_j(x) dx, the Gaussian product integral.
inline ContextVector unimodal_context(const FeatureFunction& f, const Gaussian2& g) {
  const std::size_t n = f.basis.size();
  std::vector<double> r(n);
  for (std::size_t j = 0; j < n; ++j) r[j] = product_integral(g, f.basis.components[j]);
  ContextVector out;
  out.value.resize(f.dim, 0.0);
  for (std::size_t d = 0; d < f.dim; ++d) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += f.coeff(d, j) * r[j];
    out.value[d] = s;
  }
  out.per_component.push_back({1.0, out.value});
  return out;
}

// c = sum_k pi_k c_k over the mixture components.
inline ContextVector multimodal_context(const FeatureFunction& f, const MixtureParams& m) {
  ContextVector out;
  out.value.assign(f.dim, 0.0);
  out.per_component.reserve(m.size());
  for (const MixtureComponent& comp : m.components) {
    ContextVector ck = unimodal_context(f, Gaussian2{comp.mean, comp.cov});
    for (std::size_t d = 0; d < f.dim; ++d) out.value[d] += comp.pi * ck.value[d];
    out.per_component.push_back({comp.pi, std::move(ck.value)});
  }
  return out;
}

// Per-component Jacobians of the mixture context c with respect to mu_k
// (D x 2), Sigma_k in the (a, b, c) encoding (D x 3, off-diagonal chain-rule
// factor 2 applied), and pi_k (D, equal to c_k), plus the same quantities
// contracted with an upstream vector.
struct AttentionGradients {
  struct Component {
    std::vector<double> jac_mean;  // D x 2 row-major
    std::vector<double> jac_cov;   // D x 3 row-major, (a, b, c)
    std::vector<double> jac_pi;    // D (the raw partial: c_k)
    Vec2 grad_mean;
    std::array<double, 3> grad_cov{0.0, 0.0, 0.0};
    double grad_pi = 0.0;
  };
  std::size_t dim = 0;
  std::vector<Component> components;
};

inline AttentionGradients multimodal_backward(const FeatureFunction& f,
                                              const MixtureParams& m,
                                              std::span<const double> upstream) {
  if (upstream.size() != f.dim)
    throw std::invalid_argument("multimodal_backward: upstream length mismatch");
  const std::size_t n = f.basis.size();
  const std::size_t dim = f.dim;

  AttentionGradients out;
  out.dim = dim;
  out.components.resize(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) {
    const MixtureComponent& comp = m.components[k];
    AttentionGradients::Component& g = out.components[k];
    g.jac_mean.assign(dim * 2, 0.0);
    g.jac_cov.assign(dim * 3, 0.0);
    g.jac_pi.assign(dim, 0.0);

    for (std::size_t j = 0; j < n; ++j) {
      const ProductIntegralGrad pig =
          product_integral_grad(Gaussian2{comp.mean, comp.cov}, f.basis.components[j]);
      // dr/d(a,b,c): perturbing b moves both symmetric off-diagonal entries.
      const double da = pig.dcov.a;
      const double db = 2.0 * pig.dcov.b;
      const double dc = pig.dcov.c;
      for (std::size_t d = 0; d < dim; ++d) {
        const double bdj = f.coeff(d, j);
        g.jac_pi[d] += bdj * pig.value;
        g.jac_mean[d * 2 + 0] += comp.pi * bdj * pig.dmean.u;
        g.jac_mean[d * 2 + 1] += comp.pi * bdj * pig.dmean.v;
        g.jac_cov[d * 3 + 0] += comp.pi * bdj * da;
        g.jac_cov[d * 3 + 1] += comp.pi * bdj * db;
        g.jac_cov[d * 3 + 2] += comp.pi * bdj * dc;
      }
    }

    for (std::size_t d = 0; d < dim; ++d) {
      const double up = upstream[d];
      g.grad_pi += up * g.jac_pi[d];
      g.grad_mean.u += up * g.jac_mean[d * 2 + 0];
      g.grad_mean.v += up * g.jac_mean[d * 2 + 1];
      g.grad_cov[0] += up * g.jac_cov[d * 3 + 0];
      g.grad_cov[1] += up * g.jac_cov[d * 3 + 1];
      g.grad_cov[2] += up * g.jac_cov[d * 3 + 2];
    }
  }
  return out;
}

}  // namespace mca
