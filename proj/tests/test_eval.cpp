#include "mca/eval.hpp"

#include <catch2/catch.hpp>

#include "mca/detail/rng.hpp"
#include "mca/io.hpp"
#include "oracles.hpp"

using namespace mca;

namespace {

DensityGrid random_grid(detail::Rng& rng, std::size_t h, std::size_t w) {
  std::vector<double> mass(h * w);
  for (double& m : mass) m = rng.uniform01();
  return DensityGrid(h, w, std::move(mass));
}

MixtureParams random_mixture(detail::Rng& rng, int k) {
  MixtureParams m;
  for (int i = 0; i < k; ++i) {
    const double s1 = rng.uniform(0.01, 0.08);
    const double s2 = rng.uniform(0.01, 0.08);
    m.components.push_back({1.0 / k, Vec2{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)},
                            Spd2(s1 * s1, 0.0, s2 * s2)});
  }
  return m;
}

}  // namespace

TEST_CASE("DensityGrid validates and normalizes") {
  DensityGrid g(2, 2, {1.0, 1.0, 1.0, 1.0});
  for (double m : g.mass) CHECK(m == 0.25);

  CHECK_THROWS_AS(DensityGrid(2, 2, {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(DensityGrid(2, 2, {1.0, -1.0, 1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(DensityGrid(2, 2, {0.0, 0.0, 0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(DensityGrid(0, 2, {}), std::invalid_argument);
}

TEST_CASE("discretize concentrates a tight component in one cell") {
  MixtureParams m;
  // centered exactly on the (20, 10) cell center of a 32x32 grid
  const Vec2 center{(10 + 0.5) / 32.0, (20 + 0.5) / 32.0};
  m.components.push_back({1.0, center, Spd2(9e-6, 0.0, 9e-6)});
  const DensityGrid g = discretize(m, 32, 32);
  CHECK(g.at(20, 10) > 0.99);
}

TEST_CASE("discretize of a centered isotropic Gaussian is rotation symmetric") {
  MixtureParams m;
  m.components.push_back({1.0, Vec2{0.5, 0.5}, Spd2(0.01, 0.0, 0.01)});
  const std::size_t n = 33;
  const DensityGrid g = discretize(m, n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      // 90-degree rotation: (i, j) -> (j, n-1-i)
      CHECK(std::abs(g.at(i, j) - g.at(j, n - 1 - i)) < 1e-12);
    }
}

TEST_CASE("discretize cell mass approximates the in-square mixture mass") {
  detail::Rng rng(401);
  for (int trial = 0; trial < 3; ++trial) {
    const MixtureParams m = random_mixture(rng, 1 + (int)rng.index(3));
    // the pre-normalization total: density at cell centers times cell area
    const std::size_t n = 64;
    long double total = 0.0L;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        total += mixture_pdf(m, {(j + 0.5) / (double)n, (i + 0.5) / (double)n});
    const double approx_mass = (double)total / (double)(n * n);
    const double true_mass = oracle::trapz2d(
        [&](double x, double y) { return mixture_pdf(m, {x, y}); }, 0.0, 1.0, 600);
    CHECK(std::abs(approx_mass - true_mass) <= 0.02 * true_mass);

    // and the discretized grid is exactly the normalized version of it
    const DensityGrid g = discretize(m, n, n);
    long double check = 0.0L;
    for (double mass : g.mass) check += mass;
    CHECK(std::abs((double)check - 1.0) < 1e-12);
  }
}

TEST_CASE("js_divergence identities") {
  detail::Rng rng(409);
  for (int trial = 0; trial < 10; ++trial) {
    const DensityGrid p = random_grid(rng, 8, 8);
    CHECK(js_divergence(p, p) == 0.0);
  }

  // disjoint supports hit the base-2 upper bound exactly
  const DensityGrid a(1, 2, {1.0, 0.0});
  const DensityGrid b(1, 2, {0.0, 1.0});
  CHECK(js_divergence(a, b) == 1.0);
  const DensityGrid c(2, 2, {0.5, 0.5, 0.0, 0.0});
  const DensityGrid d(2, 2, {0.0, 0.0, 0.25, 0.75});
  CHECK(js_divergence(c, d) == 1.0);
}

TEST_CASE("js_divergence matches direct summation on the two-cell case") {
  const DensityGrid p(1, 2, {0.5, 0.5});
  const DensityGrid q(1, 2, {1.0, 0.0});
  // direct evaluation: m = (0.75, 0.25),
  // KL(p||m) = 0.5 log2(0.5/0.75) + 0.5 log2(0.5/0.25)
  // KL(q||m) = log2(1/0.75)
  const double kl_p = 0.5 * std::log2(0.5 / 0.75) + 0.5 * std::log2(0.5 / 0.25);
  const double kl_q = std::log2(1.0 / 0.75);
  const double want = 0.5 * kl_p + 0.5 * kl_q;
  CHECK(want == Approx(0.311278124459133).epsilon(1e-12));
  CHECK(js_divergence(p, q) == Approx(want).margin(1e-12));
  CHECK(js_divergence(p, q) == Approx(0.311278124459133).margin(1e-12));
}

TEST_CASE("js_divergence is symmetric and bounded") {
  detail::Rng rng(419);
  for (int trial = 0; trial < 50; ++trial) {
    DensityGrid p = random_grid(rng, 6, 9);
    DensityGrid q = random_grid(rng, 6, 9);
    // sprinkle hard zeros on both sides
    for (int z = 0; z < 6; ++z) {
      p.mass[rng.index(p.mass.size())] = 0.0;
      q.mass[rng.index(q.mass.size())] = 0.0;
    }
    p = DensityGrid(6, 9, p.mass);
    q = DensityGrid(6, 9, q.mass);
    const double pq = js_divergence(p, q);
    const double qp = js_divergence(q, p);
    CHECK(std::abs(pq - qp) < 1e-14);
    CHECK(pq >= 0.0);
    CHECK(pq <= 1.0);
  }

  const DensityGrid p = random_grid(rng, 3, 3);
  const DensityGrid wrong = random_grid(rng, 3, 4);
  CHECK_THROWS_AS(js_divergence(p, wrong), std::invalid_argument);
}

TEST_CASE("compare_models ranks by divergence") {
  detail::Rng rng(421);
  MixtureParams tight;
  tight.components.push_back({1.0, Vec2{0.5, 0.5}, Spd2(4e-4, 0.0, 4e-4)});
  const DensityGrid reference = discretize(tight, 24, 24);

  // the same density at increasing blur levels
  std::vector<std::pair<std::string, DensityGrid>> candidates;
  for (double sigma : {0.08, 0.05, 0.16}) {
    MixtureParams blurred;
    blurred.components.push_back({1.0, Vec2{0.5, 0.5}, Spd2(sigma * sigma, 0.0, sigma * sigma)});
    candidates.emplace_back("sigma" + std::to_string(sigma), discretize(blurred, 24, 24));
  }
  candidates.emplace_back("copy", reference);

  const std::vector<ModelComparison> ranked = compare_models(reference, candidates);
  REQUIRE(ranked.size() == 4);
  CHECK(ranked[0].name == "copy");
  CHECK(ranked[0].js == 0.0);
  // independent recomputation gives the same ordering
  for (std::size_t i = 1; i < ranked.size(); ++i)
    CHECK(ranked[i - 1].js <= ranked[i].js);
  for (const auto& r : ranked) {
    for (const auto& [name, grid] : candidates)
      if (name == r.name) CHECK(r.js == js_divergence(reference, grid));
  }

  candidates.emplace_back("misfit", random_grid(rng, 7, 7));
  CHECK_THROWS_WITH(compare_models(reference, candidates),
                    Catch::Contains("misfit"));
}

TEST_CASE("a mirror-symmetric mixture renders to a mirror-symmetric image") {
  MixtureParams m;
  m.components.push_back({0.5, Vec2{0.3, 0.4}, Spd2(0.01, 0.001, 0.02)});
  m.components.push_back({0.5, Vec2{0.7, 0.4}, Spd2(0.01, -0.001, 0.02)});
  const std::size_t h = 20, w = 28;
  const DensityGrid g = discretize(m, h, w);
  const std::string pgm = io::density_to_pgm(g);
  const std::size_t header = pgm.find("255\n") + 4;
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      CHECK(pgm[header + i * w + j] == pgm[header + i * w + (w - 1 - j)]);
}

TEST_CASE("PGM rendering is well formed") {
  MixtureParams m;
  m.components.push_back({1.0, Vec2{0.5, 0.5}, Spd2(0.01, 0.0, 0.01)});
  const DensityGrid g = discretize(m, 16, 20);
  const std::string pgm = io::density_to_pgm(g);
  CHECK(pgm.substr(0, 3) == "P5\n");
  CHECK(pgm.find("20 16\n255\n") != std::string::npos);
  const std::size_t header = pgm.find("255\n") + 4;
  CHECK(pgm.size() - header == 16 * 20);
  // the brightest cell is scaled to 255
  unsigned char mx = 0;
  for (std::size_t i = header; i < pgm.size(); ++i)
    mx = std::max(mx, (unsigned char)pgm[i]);
  CHECK(mx == 255);
}
