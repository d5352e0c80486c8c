#include "mca/attention.hpp"

#include <catch2/catch.hpp>

#include "mca/detail/rng.hpp"
#include "oracles.hpp"

using namespace mca;

namespace {

Spd2 random_spd(detail::Rng& rng, double eig_lo, double eig_hi) {
  const double l1 = rng.uniform(eig_lo, eig_hi);
  const double l2 = rng.uniform(eig_lo, eig_hi);
  const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double ct = std::cos(t), st = std::sin(t);
  return Spd2(l1 * ct * ct + l2 * st * st, (l1 - l2) * ct * st,
              l1 * st * st + l2 * ct * ct);
}

FeatureFunction random_feature_function(detail::Rng& rng, int side, double var,
                                        std::size_t dim) {
  FeatureFunction f;
  f.basis = make_grid_basis(side, var);
  f.dim = dim;
  f.coeffs.resize(dim * f.basis.size());
  for (double& b : f.coeffs) b = rng.uniform(-1.0, 1.0);
  return f;
}

MixtureParams random_mixture(detail::Rng& rng, int k) {
  MixtureParams m;
  std::vector<double> pi(k);
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    pi[(std::size_t)i] = rng.uniform(0.2, 1.0);
    total += pi[(std::size_t)i];
  }
  for (int i = 0; i < k; ++i)
    m.components.push_back({pi[(std::size_t)i] / total,
                            Vec2{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)},
                            random_spd(rng, 5e-3, 3e-2)});
  return m;
}

// draw from the mixture: component by mixing weight, then Cholesky transform
Vec2 sample_mixture(const MixtureParams& m, detail::Rng& rng) {
  const double u = rng.uniform01();
  double run = 0.0;
  const MixtureComponent* pick = &m.components.back();
  for (const auto& c : m.components) {
    run += c.pi;
    if (u <= run) {
      pick = &c;
      break;
    }
  }
  const double l11 = std::sqrt(pick->cov.a());
  const double l21 = pick->cov.b() / l11;
  const double l22 = std::sqrt(pick->cov.c() - l21 * l21);
  const double z1 = rng.normal(), z2 = rng.normal();
  return {pick->mean.u + l11 * z1, pick->mean.v + l21 * z1 + l22 * z2};
}

}  // namespace

TEST_CASE("softmax_weights") {
  const std::vector<double> zeros(4, 0.0);
  for (double p : softmax_weights(zeros)) CHECK(p == Approx(0.25).epsilon(1e-14));

  const std::vector<double> extreme = {1000.0, 0.0};
  const std::vector<double> p = softmax_weights(extreme);
  CHECK(p[0] == Approx(1.0).epsilon(1e-12));
  CHECK(p[1] < 1e-300);

  detail::Rng rng(301);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> scores(6), shifted(6);
    for (std::size_t i = 0; i < 6; ++i) {
      scores[i] = rng.uniform(-5.0, 5.0);
      shifted[i] = scores[i] + 17.25;
    }
    const std::vector<double> a = softmax_weights(scores);
    const std::vector<double> b = softmax_weights(shifted);
    double total = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(a[i] > 0.0);
      CHECK(std::abs(a[i] - b[i]) < 1e-12);
      total += a[i];
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("discrete_context is the weighted column average") {
  detail::Rng rng(307);
  FeatureGrid grid;
  grid.dim = 3;
  const int side = 4;
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j)
      grid.locations.push_back(Vec2{(j + 0.5) / side, (i + 0.5) / side});
  grid.features.resize(grid.dim * grid.size());
  for (double& f : grid.features) f = rng.uniform(-1.0, 1.0);
  const std::size_t l = grid.size();

  std::vector<double> onehot(l, 0.0);
  onehot[5] = 1.0;
  const std::vector<double> col = discrete_context(grid, onehot);
  for (std::size_t d = 0; d < grid.dim; ++d) CHECK(col[d] == grid.at(d, 5));

  std::vector<double> uniform(l, 1.0 / (double)l);
  const std::vector<double> mean = discrete_context(grid, uniform);
  for (std::size_t d = 0; d < grid.dim; ++d) {
    double want = 0.0;
    for (std::size_t i = 0; i < l; ++i) want += grid.at(d, i) / (double)l;
    CHECK(mean[d] == Approx(want).margin(1e-14));
  }

  const std::vector<double> p = softmax_weights(std::vector<double>(l, 0.5));
  const std::vector<double> ctx = discrete_context(grid, p);
  for (std::size_t d = 0; d < grid.dim; ++d) {
    double want = 0.0;
    for (std::size_t i = 0; i < l; ++i) want += grid.at(d, i) * p[i];
    CHECK(ctx[d] == Approx(want).margin(1e-14));
  }

  CHECK_THROWS_AS(discrete_context(grid, std::vector<double>(l - 1, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("moment_match closed-form cases") {
  const WeightedDataset two({{Vec2{0, 0}, 0.5}, {Vec2{1, 1}, 0.5}});
  const Gaussian2 g = moment_match(two);
  CHECK(g.mean.u == Approx(0.5));
  CHECK(g.mean.v == Approx(0.5));
  CHECK(g.cov.a() == Approx(0.25 + 1e-6).epsilon(1e-12));
  CHECK(g.cov.b() == Approx(0.25).epsilon(1e-12));
  CHECK(g.cov.c() == Approx(0.25 + 1e-6).epsilon(1e-12));

  const WeightedDataset point({{Vec2{0.3, 0.6}, 1.0}});
  const Gaussian2 p = moment_match(point);
  CHECK(p.mean.u == 0.3);
  CHECK(p.mean.v == 0.6);
  CHECK(p.cov.a() == Approx(1e-6));
  CHECK(p.cov.b() == 0.0);
  CHECK(p.cov.c() == Approx(1e-6));
}

TEST_CASE("moment_match equals the K=1 EM fixed point") {
  detail::Rng rng(311);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<GridObservation> obs;
    const int side = 6;
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j)
        obs.push_back({Vec2{(j + 0.5) / side, (i + 0.5) / side}, rng.uniform01()});
    const WeightedDataset data(obs);
    const Gaussian2 mm = moment_match(data);
    const MixtureParams em = m_step(data, std::vector<double>(data.size(), 1.0));
    CHECK(std::abs(mm.mean.u - em.components[0].mean.u) < 1e-12);
    CHECK(std::abs(mm.mean.v - em.components[0].mean.v) < 1e-12);
    CHECK(std::abs(mm.cov.a() - em.components[0].cov.a()) < 1e-12);
    CHECK(std::abs(mm.cov.b() - em.components[0].cov.b()) < 1e-12);
    CHECK(std::abs(mm.cov.c() - em.components[0].cov.c()) < 1e-12);
  }
}

TEST_CASE("unimodal_context basics") {
  detail::Rng rng(313);
  const Gaussian2 g{Vec2{0.4, 0.5}, Spd2(0.01, 0.002, 0.02)};

  FeatureFunction zero = random_feature_function(rng, 3, 0.02, 4);
  std::fill(zero.coeffs.begin(), zero.coeffs.end(), 0.0);
  for (double v : unimodal_context(zero, g).value) CHECK(v == 0.0);

  // single-basis case: c = B column * r
  FeatureFunction single;
  single.basis.components.push_back({Vec2{0.5, 0.5}, Spd2(0.02, 0, 0.02)});
  single.dim = 2;
  single.coeffs = {1.5, -2.0};
  const double r = product_integral(g, single.basis.components[0]);
  const ContextVector ctx = unimodal_context(single, g);
  CHECK(ctx.value[0] == Approx(1.5 * r).epsilon(1e-14));
  CHECK(ctx.value[1] == Approx(-2.0 * r).epsilon(1e-14));
}

TEST_CASE("unimodal_context agrees with Monte Carlo") {
  detail::Rng rng(317);
  const FeatureFunction f = random_feature_function(rng, 4, 0.01, 3);
  const Gaussian2 g{Vec2{0.45, 0.55}, random_spd(rng, 5e-3, 2e-2)};
  MixtureParams m;
  m.components.push_back({1.0, g.mean, g.cov});

  const int samples = 1000000;
  std::vector<long double> sum(f.dim, 0.0L), sumsq(f.dim, 0.0L);
  for (int s = 0; s < samples; ++s) {
    const Vec2 x = sample_mixture(m, rng);
    const std::vector<double> v = eval_feature(f, x);
    for (std::size_t d = 0; d < f.dim; ++d) {
      sum[d] += v[d];
      sumsq[d] += (long double)v[d] * v[d];
    }
  }
  const ContextVector ctx = unimodal_context(f, g);
  for (std::size_t d = 0; d < f.dim; ++d) {
    const double mean = (double)(sum[d] / samples);
    const double var = (double)(sumsq[d] / samples) - mean * mean;
    const double se = std::sqrt(var / samples);
    CHECK(std::abs(ctx.value[d] - mean) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("multimodal_context decomposes over components") {
  detail::Rng rng(331);
  const FeatureFunction f = random_feature_function(rng, 4, 0.01, 5);

  // K = 1 equals the unimodal path bit for bit
  const Gaussian2 g{Vec2{0.3, 0.7}, random_spd(rng, 5e-3, 2e-2)};
  MixtureParams one;
  one.components.push_back({1.0, g.mean, g.cov});
  const ContextVector uni = unimodal_context(f, g);
  const ContextVector multi = multimodal_context(f, one);
  for (std::size_t d = 0; d < f.dim; ++d)
    CHECK(std::abs(multi.value[d] - uni.value[d]) < 1e-15);

  // degenerate mixing: pi = (1, 0) reproduces component 1 exactly
  MixtureParams degen;
  degen.components.push_back({1.0, g.mean, g.cov});
  degen.components.push_back({0.0, Vec2{0.9, 0.9}, random_spd(rng, 5e-3, 2e-2)});
  const ContextVector d2 = multimodal_context(f, degen);
  for (std::size_t d = 0; d < f.dim; ++d) CHECK(d2.value[d] == uni.value[d]);

  // mixture-of-contexts identity
  const MixtureParams m = random_mixture(rng, 3);
  const ContextVector ctx = multimodal_context(f, m);
  REQUIRE(ctx.per_component.size() == 3);
  for (std::size_t d = 0; d < f.dim; ++d) {
    double want = 0.0;
    for (const auto& part : ctx.per_component) want += part.pi * part.context[d];
    CHECK(std::abs(ctx.value[d] - want) < 1e-12);
  }

  // doubling B doubles c exactly
  FeatureFunction doubled = f;
  for (double& b : doubled.coeffs) b *= 2.0;
  const ContextVector cd = multimodal_context(doubled, m);
  for (std::size_t d = 0; d < f.dim; ++d) CHECK(cd.value[d] == 2.0 * ctx.value[d]);
}

TEST_CASE("multimodal_context agrees with Monte Carlo") {
  detail::Rng rng(337);
  const FeatureFunction f = random_feature_function(rng, 4, 0.01, 3);
  const MixtureParams m = random_mixture(rng, 3);
  const int samples = 1000000;
  std::vector<long double> sum(f.dim, 0.0L), sumsq(f.dim, 0.0L);
  for (int s = 0; s < samples; ++s) {
    const Vec2 x = sample_mixture(m, rng);
    const std::vector<double> v = eval_feature(f, x);
    for (std::size_t d = 0; d < f.dim; ++d) {
      sum[d] += v[d];
      sumsq[d] += (long double)v[d] * v[d];
    }
  }
  const ContextVector ctx = multimodal_context(f, m);
  for (std::size_t d = 0; d < f.dim; ++d) {
    const double mean = (double)(sum[d] / samples);
    const double var = (double)(sumsq[d] / samples) - mean * mean;
    const double se = std::sqrt(var / samples);
    CHECK(std::abs(ctx.value[d] - mean) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("multimodal_context agrees with quadrature") {
  detail::Rng rng(347);
  for (int trial = 0; trial < 2; ++trial) {
    const FeatureFunction f = random_feature_function(rng, 4, 0.01, 3);
    const MixtureParams m = random_mixture(rng, 2);
    const ContextVector ctx = multimodal_context(f, m);
    double err = 0.0, norm = 0.0;
    for (std::size_t d = 0; d < f.dim; ++d) {
      const double want = oracle::trapz2d(
          [&](double x, double y) {
            return mixture_pdf(m, {x, y}) * eval_feature(f, {x, y})[d];
          },
          -1.0, 2.0, 600);
      err += (ctx.value[d] - want) * (ctx.value[d] - want);
      norm += want * want;
    }
    CHECK(std::sqrt(err) <= 1e-4 * std::sqrt(norm));
  }
}

TEST_CASE("multimodal_backward contractions and special cases") {
  detail::Rng rng(353);
  const FeatureFunction f = random_feature_function(rng, 3, 0.02, 4);
  const MixtureParams m = random_mixture(rng, 2);
  const ContextVector ctx = multimodal_context(f, m);

  // zero upstream nulls every contracted gradient
  const AttentionGradients zero =
      multimodal_backward(f, m, std::vector<double>(f.dim, 0.0));
  for (const auto& comp : zero.components) {
    CHECK(comp.grad_pi == 0.0);
    CHECK(comp.grad_mean.u == 0.0);
    CHECK(comp.grad_mean.v == 0.0);
    for (double g : comp.grad_cov) CHECK(g == 0.0);
  }

  // the pi partial is c_k; its contraction is <upstream, c_k>
  std::vector<double> upstream(f.dim);
  for (double& u : upstream) u = rng.uniform(-1.0, 1.0);
  const AttentionGradients g = multimodal_backward(f, m, upstream);
  for (std::size_t k = 0; k < m.size(); ++k) {
    double want = 0.0;
    for (std::size_t d = 0; d < f.dim; ++d) {
      CHECK(g.components[k].jac_pi[d] ==
            Approx(ctx.per_component[k].context[d]).margin(1e-13));
      want += upstream[d] * ctx.per_component[k].context[d];
    }
    CHECK(g.components[k].grad_pi == Approx(want).margin(1e-12));
  }

  CHECK_THROWS_AS(multimodal_backward(f, m, std::vector<double>(f.dim + 1, 1.0)),
                  std::invalid_argument);
}

TEST_CASE("multimodal_backward matches finite differences") {
  detail::Rng rng(359);
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const FeatureFunction f = random_feature_function(rng, 4, 0.02, 4);
    MixtureParams m = random_mixture(rng, 1 + (int)rng.index(3));
    // keep the density curvature moderate so the finite-difference
    // truncation stays below the comparison tolerance
    for (auto& c : m.components) c.cov = random_spd(rng, 2e-2, 6e-2);
    const AttentionGradients g =
        multimodal_backward(f, m, std::vector<double>(f.dim, 0.0));

    for (std::size_t k = 0; k < m.size(); ++k) {
      // perturb one parameter of component k, recompute the full context
      auto context_at = [&](int param, double eps) {
        MixtureParams p = m;
        MixtureComponent& c = p.components[k];
        double a = c.cov.a(), b = c.cov.b(), cc = c.cov.c();
        switch (param) {
          case 0: c.mean.u += eps; break;
          case 1: c.mean.v += eps; break;
          case 2: a += eps; break;
          case 3: b += eps; break;
          case 4: cc += eps; break;
          case 5: c.pi += eps; break;
        }
        c.cov = Spd2(a, b, cc);
        return multimodal_context(f, p).value;
      };
      for (int param = 0; param < 6; ++param) {
        for (std::size_t d = 0; d < f.dim; ++d) {
          double analytic = 0.0;
          switch (param) {
            case 0: analytic = g.components[k].jac_mean[d * 2 + 0]; break;
            case 1: analytic = g.components[k].jac_mean[d * 2 + 1]; break;
            case 2: analytic = g.components[k].jac_cov[d * 3 + 0]; break;
            case 3: analytic = g.components[k].jac_cov[d * 3 + 1]; break;
            case 4: analytic = g.components[k].jac_cov[d * 3 + 2]; break;
            case 5: analytic = g.components[k].jac_pi[d]; break;
          }
          REQUIRE(oracle::fd_agrees(
              [&](double e) { return context_at(param, e)[d]; }, analytic, h, 1e-5,
              1e-9));
        }
      }
    }
  }
}
