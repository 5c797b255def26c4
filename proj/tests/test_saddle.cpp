#include "ssk/regimes.hpp"
#include "ssk/saddle.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace ssk;
using Catch::Approx;

namespace {

SpectralSample single_site(double lambda, double v) {
  SpectralSample s;
  s.lambdas = {lambda};
  s.v_projs = {v};
  s.v1_sq = v * v;
  return s;
}

}  // namespace

TEST_CASE("g at theta = 0 has its saddle at beta + 1/beta", "[saddle]") {
  const auto p = ModelParams::make(100, 0.5, 0.0);
  const auto g = GFunction::deterministic(p);
  CHECK(eval_G(g, 2.5).real() == Approx(1.25 - sc::logpot(2.5)).margin(1e-10));
  CHECK(std::abs(dG(g, 2.5, 1)) < 1e-15);
  const auto sol = solve_saddle(g);
  CHECK(sol.location == Approx(2.5).margin(1e-12));
  CHECK(sol.kappa == Approx(0.5).margin(1e-12));
  CHECK(sol.d2 == Approx(sc::m_prime(2.5)).epsilon(1e-12));
}

TEST_CASE("single-term G", "[saddle]") {
  const double beta = 0.8;
  const auto s = single_site(0.0, 1.0);
  GFunction f{GKind::G, beta, beta, &s};
  CHECK(eval_G(f, 2.0).real() == Approx(beta * 2 - std::log(2.0) + beta / 2).epsilon(1e-15));
  CHECK(eval_G(f, 2.0).imag() == 0.0);
}

TEST_CASE("Taylor step at the random saddle", "[saddle]") {
  const auto p = ModelParams::make(200, 0.5, std::pow(200.0, -0.2));
  const auto s = sample_spectral(p, 17);
  const auto f = GFunction::random(s, p);
  const auto sol = solve_saddle(f);
  for (double t : {1e-3, 3e-3, 1e-2, 3e-2}) {
    const cplx d = eval_G(f, cplx(sol.location, t), sol.location);
    const cplx want = -t * t * sol.d2 / 2;
    // next term is -i t^3 G'''/6; the t^4 term is bounded by the same scale
    CHECK(std::abs(d - want) <= std::pow(t, 3) * (std::abs(sol.d3) / 6 * 1.01 + t * 10 * sol.d2));
  }
}

TEST_CASE("relative evaluation matches the difference of absolute values", "[saddle]") {
  const auto p = ModelParams::make(50, 1.3, 0.4);
  const auto s = sample_spectral(p, 3);
  for (auto f : {GFunction::random(s, p), GFunction::shifted(s, p, 0.05), GFunction::replica_diag(s, p, 0.05)}) {
    const double x0 = f.singularity() + 0.7;
    const cplx z{x0 + 0.2, 0.3};
    CHECK(std::abs(eval_G(f, z, x0) - (eval_G(f, z) - eval_G(f, cplx(x0)))) < 1e-12);
  }
}

TEST_CASE("derivatives match finite differences for every kind", "[saddle]") {
  const auto p = ModelParams::make(40, 1.2, 0.5);
  const auto s = sample_spectral(p, 8);
  const std::vector<GFunction> fs{GFunction::deterministic(p), GFunction::random(s, p), GFunction::tilted(s, p, 0.3),
                                  GFunction::shifted(s, p, 0.1), GFunction::replica_diag(s, p, 0.1)};
  for (const auto& f : fs) {
    const double x = f.singularity() + 0.4, hh = 1e-5;
    const double fd1 = (eval_G(f, x + hh).real() - eval_G(f, x - hh).real()) / (2 * hh);
    const double fd2 = (dG(f, x + hh, 1) - dG(f, x - hh, 1)) / (2 * hh);
    const double fd3 = (dG(f, x + hh, 2) - dG(f, x - hh, 2)) / (2 * hh);
    CHECK(dG(f, x, 1) == Approx(fd1).epsilon(1e-7).margin(1e-8));
    CHECK(dG(f, x, 2) == Approx(fd2).epsilon(1e-7).margin(1e-8));
    CHECK(dG(f, x, 3) == Approx(fd3).epsilon(1e-6).margin(1e-7));
  }
}

TEST_CASE("saddle root residual and monotone derivative", "[saddle]") {
  const auto p = ModelParams::make(150, 0.9, 0.3);
  const auto s = sample_spectral(p, 21);
  const std::vector<GFunction> fs{GFunction::deterministic(p), GFunction::random(s, p), GFunction::tilted(s, p, 0.2),
                                  GFunction::shifted(s, p, 0.05), GFunction::replica_diag(s, p, 0.05)};
  for (const auto& f : fs) {
    const auto sol = solve_saddle(f);
    CHECK(std::abs(dG(f, sol.location, 1)) <= 1e-12);
    CHECK(sol.location > f.singularity());
    double prev = -1e300;
    for (int i = 1; i <= 100; ++i) {
      const double x = f.singularity() + 0.02 * i * i / 100.0 + 1e-6;
      const double d = dG(f, x, 1);
      CHECK(d > prev);
      prev = d;
    }
  }
}

TEST_CASE("tilt at u = 0 and the two-replica diagonal at t = 0", "[saddle]") {
  const auto p = ModelParams::make(80, 0.7, 0.25);
  const auto s = sample_spectral(p, 4);
  CHECK(solve_saddle(GFunction::tilted(s, p, 0.0)).location ==
        Approx(solve_saddle(GFunction::random(s, p)).location).margin(1e-12));
  const auto g = GFunction::random(s, p), d = GFunction::replica_diag(s, p, 0.0);
  for (int i = 0; i < 20; ++i) {
    const cplx z{s.lambdas[0] + 0.05 + 0.1 * i, 0.3 * (i % 5) - 0.6};
    CHECK(std::abs(eval_G(d, z) - 2.0 * eval_G(g, z)) < 1e-12);
  }
}

TEST_CASE("kappa order relation in the gaussian regime", "[saddle]") {
  const double beta = 0.5, theta = 0.09 * 0.5;
  ModelParams p = ModelParams::make(1000, beta, std::sqrt(theta / beta));
  const double kappa = solve_saddle(GFunction::deterministic(p)).kappa;
  const double ratio = std::sqrt(kappa) / ((1 - beta) + std::sqrt(theta));
  CHECK(ratio >= 0.25);
  CHECK(ratio <= 4.0);
}

TEST_CASE("random saddle tracks the deterministic one", "[saddle]") {
  // |gamma - gamma_hat| <= N^0.02 N^{-2/3 - tau/10}, pass rate >= 95%
  const int n = 300, seeds = 100;
  const auto p = ModelParams::make(n, 0.5, std::pow(double(n), -0.2));
  REQUIRE(classify(p).gaussian);
  const double gh = solve_saddle(GFunction::deterministic(p)).location;
  const double bound = std::pow(n, 0.02) * std::pow(n, -2.0 / 3.0 - 0.005);
  int pass = 0;
  for (int sd = 0; sd < seeds; ++sd) {
    const auto s = sample_spectral(p, 500 + sd);
    pass += std::abs(solve_saddle(GFunction::random(s, p)).location - gh) <= bound;
  }
  INFO("pass " << pass << "/" << seeds);
  CHECK(pass >= 95);
}

TEST_CASE("c_beta closed form", "[saddle]") {
  auto c = solve_c_beta(2.0, 0.0);
  CHECK(c.c_beta == 1.0);
  CHECK(c.B == 0.0);
  c = solve_c_beta(2.0, 2.0);
  CHECK(c.c_beta == Approx(2.0).epsilon(1e-15));
  CHECK(c.B == Approx(1.0).epsilon(1e-15));
  CHECK(2.0 / c.c_beta == Approx(c.B).epsilon(1e-15));
  c = solve_c_beta(1.5, 1.0);
  CHECK(c.c_beta == Approx(1 + std::sqrt(3.0)).epsilon(1e-14));
  for (double beta : {1.1, 2.0, 5.0})
    for (double tv : {0.0, 0.3, 4.0}) {
      const auto r = solve_c_beta(beta, tv);
      CHECK(std::abs((beta - 1) - 1 / r.c_beta - tv / (r.c_beta * r.c_beta)) <= 1e-12);
      if (tv > 0) CHECK(r.B == Approx(tv / r.c_beta).epsilon(1e-12));
    }
  CHECK_THROWS(solve_c_beta(1.0, 1.0));
}

TEST_CASE("intermediate saddle", "[saddle]") {
  // unit-test mode: scale factor 1
  CHECK(solve_intermediate_saddle({0.0}, {1.0}, 2.0, 1.0, 1.0) == Approx(1.0).epsilon(1e-14));
  CHECK_THROWS(solve_intermediate_saddle({0.0, -1.0}, {0.0, 1.0}, 2.0, 1.0, 1.0));
  CHECK_THROWS(solve_intermediate_saddle({0.0}, {1.0}, 1.0, 1.0, 1.0));

  const int n = 1000;
  const auto mus = goe_eigenvalues(n, 77, 7);
  const auto gs = synthetic_normals(n, 77);
  const auto r = intermediate_from_system(mus, gs, 2.0, 1.0);
  double acc = 0;
  for (int i = 0; i < n; ++i) acc += gs[i] * gs[i] / ((mus[i] - r.x_b) * (mus[i] - r.x_b));
  CHECK(std::abs(1.0 - std::pow(n, -4.0 / 3.0) * acc) <= 1e-10);
  CHECK(r.x_b > mus[0]);
  CHECK(r.x_a > mus[0]);
}

TEST_CASE("intermediate saddle: one-term dominance as theta -> 0", "[saddle]") {
  const int n = 1000;
  const double beta = 2, theta = 1e-4;
  const auto mus = goe_eigenvalues(n, 5, 7);
  auto gs = synthetic_normals(n, 5);
  gs[0] = 1.0;
  std::vector<double> gsq(n);
  for (int i = 0; i < n; ++i) gsq[i] = gs[i] * gs[i];
  const double xb = solve_intermediate_saddle(mus, gsq, beta, theta, std::pow(n, -4.0 / 3.0));
  const double one = std::sqrt(theta / (beta - 1)) * std::pow(n, -2.0 / 3.0);
  CHECK((xb - mus[0]) / one == Approx(1.0).epsilon(0.05));
}

TEST_CASE("intermediate x_a and x_b agree", "[saddle]") {
  // |x_a - x_b| <= N^{-5/6} for >= 90% of seeds
  const int n = 1000, seeds = 200;
  int pass = 0;
  for (int sd = 0; sd < seeds; ++sd) {
    const auto r = intermediate_from_system(goe_eigenvalues(n, sd, 7), synthetic_normals(n, sd), 2.0, 1.0);
    pass += std::abs(r.x_a - r.x_b) <= std::pow(n, -5.0 / 6.0);
  }
  INFO("pass " << pass << "/" << seeds);
  CHECK(pass >= 180);
}

// Scaled gap window N^{-0.02} <= N^{2/3}(x_b - mu_1) <= N^{0.02}; registered on its
// own because the gap is an O(1) random variable and the window is narrow.
TEST_CASE("intermediate gap window", "[.][xc-gap-window]") {
  const int n = 1000, seeds = 200;
  int pass = 0;
  for (int sd = 0; sd < seeds; ++sd) {
    const auto mus = goe_eigenvalues(n, sd, 7);
    const auto r = intermediate_from_system(mus, synthetic_normals(n, sd), 2.0, 1.0);
    const double s = std::pow(n, 2.0 / 3.0) * (r.x_b - mus[0]);
    pass += s >= std::pow(n, -0.02) && s <= std::pow(n, 0.02);
  }
  INFO("pass " << pass << "/" << seeds);
  CHECK(pass >= 190);
}
