#pragma once
// Half-integer Bessel functions, reference distributions, Kolmogorov-Smirnov
// distances and the linear-statistic constants for f(x) = log(gamma - x).

#include "semicircle.hpp"
#include "spectral.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssk {

enum class BesselOrder { m_half, half, three_half, five_half, seven_half };

// I_nu(x) for nu in {-1/2, 1/2, 3/2, 5/2, 7/2}: I_{1/2} = sqrt(2/(pi x)) sinh x,
// I_{-1/2} = sqrt(2/(pi x)) cosh x, then the ladder I_{nu+1} = I_{nu-1} - (2 nu/x) I_nu.
// Beyond x = 700 use bessel_half_log.
inline double bessel_half_log(BesselOrder o, double x);

inline double bessel_half(BesselOrder o, double x) {
  if (x < 0) throw std::domain_error("bessel_half: negative argument");
  if (x == 0) {
    if (o == BesselOrder::m_half) return std::numeric_limits<double>::infinity();
    return 0.0;
  }
  if (x > 700) return std::exp(bessel_half_log(o, x));
  const double s = std::sqrt(0.5 * std::numbers::pi * x);
  // small x: the recursions cancel; use the series x^nu/(2^nu Gamma(nu+1)) sum (x^2/4)^k/(k!(nu+1)_k)
  auto series = [x](double nu) {
    double term = std::pow(0.5 * x, nu) / std::tgamma(nu + 1), sum = term;
    for (int k = 1; k < 60; ++k) {
      term *= 0.25 * x * x / (k * (nu + k));
      sum += term;
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
  };
  const double sh = std::sinh(x) / s, ch = std::cosh(x) / s;
  switch (o) {
    case BesselOrder::m_half: return ch;
    case BesselOrder::half: return x < 1e-3 ? series(0.5) : sh;
    case BesselOrder::three_half: return x < 0.5 ? series(1.5) : ch - sh / x;
    case BesselOrder::five_half: return x < 1.5 ? series(2.5) : sh * (1 + 3 / (x * x)) - 3 * ch / x;
    default: return x < 2.5 ? series(3.5) : ch * (1 + 15 / (x * x)) - sh * (6 / x + 15 / (x * x * x));
  }
}

// log I_nu(x) for large x: I_nu = e^x/sqrt(2 pi x) * P(1/x) up to e^{-2x}.
inline double bessel_half_log(BesselOrder o, double x) {
  if (x <= 700) return std::log(bessel_half(o, x));
  const double r = 1 / x, lead = x - 0.5 * std::log(2 * std::numbers::pi * x);
  double p = 1;
  switch (o) {
    case BesselOrder::m_half:
    case BesselOrder::half: p = 1; break;
    case BesselOrder::three_half: p = 1 - r; break;
    case BesselOrder::five_half: p = 1 + 3 * r * r - 3 * r; break;
    default: p = 1 + 15 * r * r - 6 * r - 15 * r * r * r; break;
  }
  return lead + std::log(p);
}

// Standard normal CDF; std::erfc is accurate to a few ulp.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct ReferenceDistribution {
  enum class Kind { std_normal, tw1_empirical, tanh_law, custom_cdf };
  Kind kind = Kind::std_normal;
  std::function<double(double)> cdf;
  std::string provenance;
  std::vector<double> samples;  // sorted; empirical kinds only

  static ReferenceDistribution std_normal() {
    return {Kind::std_normal, normal_cdf, "standard normal", {}};
  }
  static ReferenceDistribution normal(double mean, double var) {
    const double sd = std::sqrt(var);
    std::ostringstream os;
    os << "normal(" << mean << "," << var << ")";
    return {Kind::custom_cdf, [=](double x) { return normal_cdf((x - mean) / sd); }, os.str(), {}};
  }
  static ReferenceDistribution empirical(Kind k, std::vector<double> xs, std::string prov) {
    std::sort(xs.begin(), xs.end());
    ReferenceDistribution r{k, nullptr, std::move(prov), std::move(xs)};
    return r.rebind();
  }
  // (1 - 1/beta) tanh^2(|Z| s), s = sqrt(theta (beta - 1)): exact CDF.
  static ReferenceDistribution tanh_law(double beta, double theta) {
    const double q = 1 - 1 / beta, s = std::sqrt(theta * (beta - 1));
    std::ostringstream os;
    os << "tanh_law(beta=" << beta << ",theta=" << theta << ")";
    return {Kind::tanh_law,
            [=](double x) {
              if (x <= 0) return 0.0;
              if (x >= q) return 1.0;
              return 2 * normal_cdf(std::atanh(std::sqrt(x / q)) / s) - 1;
            },
            os.str(),
            {}};
  }

  // empirical CDFs capture the sample vector by value
  ReferenceDistribution rebind() {
    if (!samples.empty()) {
      auto xs = samples;
      cdf = [xs](double x) {
        return double(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) / double(xs.size());
      };
    }
    return *this;
  }

  double mean() const {
    double m = 0;
    for (double x : samples) m += x;
    return samples.empty() ? std::nan("") : m / samples.size();
  }
};

// sup |F_n - F| over both sides of every sample point; samples sorted.
inline double ks_distance(const std::vector<double>& sorted, const ReferenceDistribution& ref) {
  const double n = sorted.size();
  double d = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = ref.cdf(sorted[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  const double na = a.size(), nb = b.size();
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

inline std::filesystem::path cache_dir() {
  const char* env = std::getenv("SSK_LAB_CACHE");
  return env && *env ? std::filesystem::path(env) : std::filesystem::temp_directory_path() / "ssk-lab-cache";
}

// Edge statistic N^{2/3}(lambda_1(H) - 2) of one GOE draw (tridiagonal model).
inline double tw1_draw(int n_dim, std::uint64_t seed, std::uint32_t index) {
  const double l1 = goe_top_eigenvalues(n_dim, 1, seed, index)[0];
  return std::pow(double(n_dim), 2.0 / 3.0) * (l1 - 2.0);
}

// Empirical TW1 reference; cached as text: header "n_dim n_matrices seed",
// then the sorted samples one per line.
inline ReferenceDistribution tw1_reference(int n_matrices, int n_dim, std::uint64_t seed, bool use_cache = true) {
  if (n_matrices < 100) throw std::invalid_argument("tw1_reference: fewer than 100 samples refused");
  std::ostringstream prov;
  prov << "tw1_empirical(n_dim=" << n_dim << ",n_matrices=" << n_matrices << ",seed=" << seed
       << ",tridiagonal GOE model)";
  const auto path = cache_dir() / ("tw1_" + std::to_string(n_dim) + "_" + std::to_string(n_matrices) + "_" +
                                   std::to_string(seed) + ".txt");
  if (use_cache && std::filesystem::exists(path)) {
    std::ifstream in(path);
    long nd = 0, nm = 0;
    unsigned long long sd = 0;
    if (in >> nd >> nm >> sd && nd == n_dim && nm == n_matrices && sd == seed) {
      std::vector<double> xs;
      xs.reserve(nm);
      double x;
      while (in >> x) xs.push_back(x);
      if (static_cast<long>(xs.size()) == nm)
        return ReferenceDistribution::empirical(ReferenceDistribution::Kind::tw1_empirical, std::move(xs), prov.str());
    }
  }
  std::vector<double> xs(n_matrices);
  for (int k = 0; k < n_matrices; ++k) xs[k] = tw1_draw(n_dim, seed, static_cast<std::uint32_t>(k));
  auto ref = ReferenceDistribution::empirical(ReferenceDistribution::Kind::tw1_empirical, std::move(xs), prov.str());
  if (use_cache) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path);
    if (out) {
      out << n_dim << ' ' << n_matrices << ' ' << seed << '\n';
      out.precision(17);
      for (double x : ref.samples) out << x << '\n';
    }
  }
  return ref;
}

struct LinearStatConstants {
  double M_f, V_f;  // quadrature
  double e_n, v_n;  // closed forms as printed
  double tau0, tau1, tau2;
  double M_closed, V_closed;  // closed forms re-derived from the tau's
};

// Mean and variance constants of tr f(W) - N int f rho for f(x) = log(gamma - x),
// where W has off-diagonal variance 1/N, diagonal variance w2/N and
// off-diagonal fourth moment s4/N^2.
inline LinearStatConstants linear_stat_constants(double gamma_hat, double w2, double s4) {
  if (!(gamma_hat > 2)) throw std::domain_error("linear_stat_constants: gamma_hat must exceed 2");
  const double g = gamma_hat, r = std::sqrt(g * g - 4), pi = std::numbers::pi;
  LinearStatConstants c{};
  c.tau0 = std::log(g + r) - std::log(2.0);
  c.tau1 = 0.5 * r - 0.5 * g;
  c.tau2 = 0.25 * g * r - 0.25 * g * g + 0.5;
  c.e_n = 0.25 * (std::log(g - 2) - std::log(g + 2)) - 0.5 * c.tau0 + c.tau2 * (w2 - 2);
  c.v_n = std::log((g + r) * (g + r) / (4 * (g * g - 4))) + c.tau1 * c.tau1 * (w2 - 2);

  // x = 2 cos(phi) turns the arcsine weights into d(phi)
  auto f = [g](double x) { return std::log(g - x); };
  auto fp = [g](double x) { return -1 / (g - x); };
  using GL = boost::math::quadrature::gauss<double, 150>;
  const double mean_int = GL::integrate(
      [&](double phi) {
        const double x = 2 * std::cos(phi);
        return f(x) * (-1 + (w2 - 2) * (x * x - 2) + (s4 - 3) * (x * x * x * x - 4 * x * x + 1));
      },
      0.0, pi);
  c.M_f = 0.25 * (f(2) + f(-2)) + mean_int / (2 * pi);
  const double dbl = GL::integrate(
      [&](double a) {
        return GL::integrate(
            [&](double b) {
              const double x = 2 * std::cos(a), y = 2 * std::cos(b);
              const double dd = std::abs(x - y) < 1e-9 ? fp(0.5 * (x + y)) : (f(x) - f(y)) / (x - y);
              return dd * dd * (4 - x * y);
            },
            0.0, pi);
      },
      0.0, pi);
  const double lin = GL::integrate([&](double phi) { return f(2 * std::cos(phi)) * 2 * std::cos(phi); }, 0.0, pi) / (2 * pi);
  const double quad = GL::integrate([&](double phi) {
                        const double x = 2 * std::cos(phi);
                        return f(x) * (x * x - 2);
                      }, 0.0, pi) / (2 * pi);
  c.V_f = dbl / (2 * pi * pi) + (w2 - 2) * lin * lin + 2 * (s4 - 3) * quad * quad;
  // Chebyshev coefficients of log(g - 2cos): lin = tau1, quad = tau2
  // the (s4 - 3) part of the mean has no closed form here
  c.M_closed = 0.25 * (std::log(g - 2) + std::log(g + 2)) - 0.5 * c.tau0 + (w2 - 2) * c.tau2;
  c.V_closed = std::log((g + r) * (g + r) / (4 * (g * g - 4))) + (w2 - 2) * c.tau1 * c.tau1 +
               2 * (s4 - 3) * c.tau2 * c.tau2;
  return c;
}

}  // namespace ssk
