#pragma once
// Finite-n stand-in for the Airy_1 point field: chi_i = N_big^{2/3}(mu_i - 2)
// from the top of a tridiagonal GOE, and the limit variables built on it.

#include "rng.hpp"
#include "spectral.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace ssk {

enum class CountertermKind { integral, per_term };

struct AiryFieldApprox {
  std::vector<double> chis;  // descending
  int n = 0, n_big = 0;
  std::uint64_t seed = 0;
  bool edge_safe = true;  // n <= n_big^{1/4}

  // (1/pi) int_0^{(3 pi n/2)^{2/3}} x^{-1/2} dx
  static double counterterm(int n) { return 2 / std::numbers::pi * std::cbrt(1.5 * std::numbers::pi * n); }
};

// The n <= n_big^{1/4} guide is advisory: the default (100, 2000) exceeds it.
inline AiryFieldApprox approximate_airy_field(int n, int n_big, std::uint64_t seed, std::uint32_t index = 0) {
  if (n < 1) throw std::invalid_argument("airy field: n must be positive");
  if (n_big < 1000) throw std::invalid_argument("airy field: n_big must be at least 1000");
  if (n > n_big) throw std::invalid_argument("airy field: n too large for n_big");
  AiryFieldApprox f;
  f.n = n;
  f.n_big = n_big;
  f.seed = seed;
  f.edge_safe = std::pow(double(n), 4) <= double(n_big);
  const double s = std::pow(double(n_big), 2.0 / 3.0);
  f.chis = goe_top_eigenvalues(n_big, n, seed, index);
  for (double& x : f.chis) x = s * (x - 2);
  return f;
}

inline std::vector<double> airy_normals(int n, std::uint64_t seed, std::uint32_t index = 0xB1) {
  Philox gen(seed, Stream::aux, index);
  std::normal_distribution<double> nd;
  std::vector<double> g(n);
  for (auto& x : g) x = nd(gen);
  return g;
}

namespace detail {

inline void check_airy_inputs(const AiryFieldApprox& f, const std::vector<double>& gs, double beta, double theta) {
  if (!(beta > 1)) throw std::domain_error("airy: beta must exceed 1");
  if (!(theta > 0)) throw std::domain_error("airy: theta must be positive");
  if (gs.size() < f.chis.size()) throw std::invalid_argument("airy: need one normal per particle");
  if (gs[0] == 0.0) throw std::domain_error("airy: g_1 = 0");
}

}  // namespace detail

// sum_{i<=n} g_i^2/(chi_i - chi_1 - a)^2 times theta; strictly decreasing in a > 0.
inline double airy_residual(const AiryFieldApprox& f, const std::vector<double>& gs, double beta, double theta,
                            double a) {
  double acc = 0;
  for (std::size_t i = 0; i < f.chis.size(); ++i) {
    const double d = f.chis[i] - f.chis[0] - a;
    acc += gs[i] * gs[i] / (d * d);
  }
  return theta * acc - (beta - 1);
}

inline double solve_airy_a(const AiryFieldApprox& f, const std::vector<double>& gs, double beta, double theta) {
  detail::check_airy_inputs(f, gs, beta, theta);
  // the i = 1 term alone gives the lower bracket
  double lo = std::sqrt(theta * gs[0] * gs[0] / (beta - 1));
  double hi = 2 * lo;
  while (airy_residual(f, gs, beta, theta, hi) > 0) hi *= 2;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (airy_residual(f, gs, beta, theta, mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double xi_limit(const AiryFieldApprox& f, const std::vector<double>& gs, double beta, double theta,
                       CountertermKind ct = CountertermKind::integral) {
  const double a = solve_airy_a(f, gs, beta, theta);
  double sum = 0;
  for (std::size_t i = 0; i < f.chis.size(); ++i) {
    sum += gs[i] * gs[i] / (f.chis[i] - f.chis[0] - a);
    if (ct == CountertermKind::per_term) sum += std::pow(1.5 * std::numbers::pi * double(i + 1), -2.0 / 3.0);
  }
  if (ct == CountertermKind::integral) sum += AiryFieldApprox::counterterm(f.n);
  return (beta - 1) * (f.chis[0] + a) - theta * sum;
}

inline double Xi_n(const AiryFieldApprox& f) {
  double sum = 0;
  for (std::size_t i = 1; i < f.chis.size(); ++i) sum += 1 / (f.chis[i] - f.chis[0]);
  return sum + AiryFieldApprox::counterterm(f.n);
}

// (a, sum g^2/(chi_i - chi_1 - a)^k for k = 2, 3): edge features shared with
// the finite-N intermediate system.
struct EdgeFeatures {
  double s = 0, p2 = 0, p3 = 0;
};

inline EdgeFeatures edge_features(const std::vector<double>& chis, const std::vector<double>& gs, double a) {
  EdgeFeatures e{a, 0, 0};
  for (std::size_t i = 0; i < chis.size(); ++i) {
    const double d = chis[i] - chis[0] - a;
    e.p2 += gs[i] * gs[i] / (d * d);
    e.p3 += gs[i] * gs[i] / (d * d * d);
  }
  return e;
}

}  // namespace ssk
