#pragma once
// The exponent family G, g, G_u, G_2, G_1 (diagonal) and their real saddles.
//
//   G(z)   = beta z - (1/N) sum log(z - l_i) - (theta/N) sum v_i^2/(l_i - z)
//   g(z)   = beta z - L(z) - theta m_sc(z)
//   G_u    = G with theta -> theta + u
//   G_2(z) = G with the field poles shifted, 1/(l_i - z + t)
//   G_1(x,x) at overlap parameter t (two replicas on the diagonal z = w)

#include "semicircle.hpp"
#include "spectral.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssk {

enum class GKind { G, g, G_u, G2, G1_diag };

struct GFunction {
  GKind kind = GKind::G;
  double beta = 1.0;
  double theta = 0.0;
  const SpectralSample* sample = nullptr;  // required except for g
  double u = 0.0;                          // G_u tilt
  double t = 0.0;                          // G2 shift, G1_diag overlap parameter

  static GFunction random(const SpectralSample& s, const ModelParams& p) {
    return {GKind::G, p.beta, p.theta, &s};
  }
  static GFunction deterministic(const ModelParams& p) { return {GKind::g, p.beta, p.theta, nullptr}; }
  static GFunction tilted(const SpectralSample& s, const ModelParams& p, double u) {
    return {GKind::G_u, p.beta, p.theta, &s, u};
  }
  static GFunction shifted(const SpectralSample& s, const ModelParams& p, double t) {
    return {GKind::G2, p.beta, p.theta, &s, 0.0, t};
  }
  static GFunction replica_diag(const SpectralSample& s, const ModelParams& p, double t) {
    return {GKind::G1_diag, p.beta, p.theta, &s, 0.0, t};
  }

  double field() const { return kind == GKind::G_u ? theta + u : theta; }

  double singularity() const {
    if (kind == GKind::g) return 2.0;
    const double l1 = sample->lambdas[0];
    if (kind == GKind::G2) return std::max(l1, l1 + t);
    if (kind == GKind::G1_diag) return l1 + std::abs(t);
    return l1;
  }
};

struct SaddleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// (1/N) sum w_i (x - l_i - shift)^{-k}
inline double inv_sum(const SpectralSample& s, double x, double shift, int k, bool weighted) {
  double acc = 0;
  for (int i = 0; i < s.n(); ++i) {
    const double d = x - s.lambdas[i] - shift;
    acc += (weighted ? s.vsq(i) : 1.0) * std::pow(d, -k);
  }
  return acc / s.n();
}

inline double m_sc_triple(double x) {
  const double m = sc::m(x), mp = sc::m_prime(x), mpp = sc::m_dprime(x), d = 1 - m * m;
  return 2 * (mp * mp + m * mpp) / (d * d) + 8 * m * m * mp * mp / (d * d * d);
}

}  // namespace detail

// Derivative of order k in {1,2,3} at real x right of the singularity.
inline double dG(const GFunction& f, double x, int k) {
  const double th = f.field();
  if (f.kind == GKind::g) {
    switch (k) {
      case 1: return f.beta + sc::m(x) - th * sc::m_prime(x);
      case 2: return sc::m_prime(x) - th * sc::m_dprime(x);
      default: return sc::m_dprime(x) - th * detail::m_sc_triple(x);
    }
  }
  const auto& s = *f.sample;
  using detail::inv_sum;
  if (f.kind == GKind::G1_diag) {
    const double t = f.t;
    switch (k) {
      case 1: return 2 * f.beta - inv_sum(s, x, t, 1, false) - inv_sum(s, x, -t, 1, false) -
                     2 * th * inv_sum(s, x, t, 2, true);
      case 2: return inv_sum(s, x, t, 2, false) + inv_sum(s, x, -t, 2, false) +
                     4 * th * inv_sum(s, x, t, 3, true);
      default: return -2 * (inv_sum(s, x, t, 3, false) + inv_sum(s, x, -t, 3, false)) -
                      12 * th * inv_sum(s, x, t, 4, true);
    }
  }
  const double sh = f.kind == GKind::G2 ? f.t : 0.0;
  switch (k) {
    case 1: return f.beta - inv_sum(s, x, 0, 1, false) - th * inv_sum(s, x, sh, 2, true);
    case 2: return inv_sum(s, x, 0, 2, false) + 2 * th * inv_sum(s, x, sh, 3, true);
    default: return -2 * inv_sum(s, x, 0, 3, false) - 6 * th * inv_sum(s, x, sh, 4, true);
  }
}

// G(z), or G(z) - G(x0) when relative_to = x0, summed term by term as
// log1p((z-x0)/(x0-l_i)) so that nothing large is subtracted.
inline cplx eval_G(const GFunction& f, cplx z, std::optional<double> relative_to = std::nullopt) {
  const double th = f.field();
  if (f.kind == GKind::g) {
    auto g = [&](cplx w) { return f.beta * w - sc::logpot_closed(w) - th * sc::m(w); };
    return relative_to ? g(z) - g(cplx(*relative_to)) : g(z);
  }
  const auto& s = *f.sample;
  const int n = s.n();
  const double scale = std::max(1.0, std::abs(s.lambdas[0]));
  auto check = [&](cplx d) {
    if (std::abs(d) < 1e-14 * scale) throw SaddleError("eval_G: pole collision");
  };
  cplx logs = 0, fld = 0;
  if (f.kind == GKind::G1_diag) {
    // log((z-l)^2 - t^2) and field 2/(z-l-t) on the diagonal z = w
    const double t = f.t;
    for (int i = 0; i < n; ++i) {
      const double l = s.lambdas[i];
      if (relative_to) {
        const double x0 = *relative_to;
        check(z - l - t);
        check(z - l + t);
        logs += sc::clog1p((z - x0) / (x0 - l - t)) + sc::clog1p((z - x0) / (x0 - l + t));
        fld += s.vsq(i) * 2.0 * (x0 - z) / ((z - l - t) * (x0 - l - t));
      } else {
        logs += std::log(z - l - t) + std::log(z - l + t);
        fld += s.vsq(i) * 2.0 / (z - l - t);
      }
    }
    const cplx lin = relative_to ? 2 * f.beta * (z - *relative_to) : 2 * f.beta * z;
    return lin - logs / double(n) + th * fld / double(n);
  }
  const double sh = f.kind == GKind::G2 ? f.t : 0.0;
  for (int i = 0; i < n; ++i) {
    const double l = s.lambdas[i];
    check(z - l);
    check(z - l - sh);
    if (relative_to) {
      const double x0 = *relative_to;
      logs += sc::clog1p((z - x0) / (x0 - l));
      // 1/(z-l-sh) - 1/(x0-l-sh)
      fld += s.vsq(i) * (x0 - z) / ((z - l - sh) * (x0 - l - sh));
    } else {
      logs += std::log(z - l);
      fld += s.vsq(i) / (z - l - sh);
    }
  }
  const cplx lin = relative_to ? f.beta * (z - *relative_to) : f.beta * z;
  return lin - logs / double(n) + th * fld / double(n);
}

struct SaddleSolution {
  double location = 0;
  double kappa = 0;  // location - singularity (gamma_hat - 2 for g)
  double d2 = 0, d3 = 0;
  double lo = 0, hi = 0;
  int iterations = 0;

  double edge_scaled(int n) const { return std::pow(double(n), 2.0 / 3.0) * kappa; }
  double micro_scaled(int n) const { return n * kappa; }
};

// Root of a strictly increasing function on (sing, inf) that tends to a
// negative value (or -inf) at sing and is positive far out.
template <class D1, class D2>
SaddleSolution solve_increasing(D1&& d1, D2&& d2, double sing, double tol_g) {
  const double scale = std::max(1.0, std::abs(sing));
  const double delta0 = 1e-10 * scale;
  double lo = sing + 1e-12 * std::abs(sing) + delta0;
  double r = 1.0;
  double hi = sing + r;
  int doublings = 0;
  while (d1(hi) <= 0) {
    if (++doublings > 60) throw SaddleError("solve_saddle: no sign change (outside regime)");
    r *= 2;
    hi = sing + r;
  }
  if (d1(lo) > 0) {
    // root squeezed below the offset; refine toward the singularity
    double l2 = sing + std::numeric_limits<double>::epsilon() * scale;
    if (d1(l2) > 0) throw SaddleError("solve_saddle: derivative positive at the singularity");
    hi = lo;
    lo = l2;
  }
  SaddleSolution out;
  int it = 0;
  while (hi - lo > 1e-14 * scale && it < 200) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (d1(mid) > 0 ? hi : lo) = mid;
    ++it;
  }
  double x = 0.5 * (lo + hi);
  out.lo = lo;
  out.hi = hi;
  for (int k = 0; k < 8; ++k) {
    const double g1 = d1(x);
    if (std::abs(g1) <= tol_g) break;
    const double g2 = d2(x);
    if (!(std::isfinite(g2) && g2 > 0)) break;
    const double nx = x - g1 / g2;
    if (!(nx > sing) || !std::isfinite(nx)) break;
    x = nx;
    ++it;
  }
  out.location = x;
  out.kappa = x - sing;
  out.iterations = it;
  return out;
}

inline SaddleSolution solve_saddle(const GFunction& f) {
  const double tol = 1e-12 * std::max(1.0, std::abs(f.beta));
  auto out = solve_increasing([&](double x) { return dG(f, x, 1); }, [&](double x) { return dG(f, x, 2); },
                              f.singularity(), tol);
  out.d2 = dG(f, out.location, 2);
  out.d3 = dG(f, out.location, 3);
  return out;
}

struct CBeta {
  double c_beta, B;
};

inline CBeta solve_c_beta(double beta, double theta_v1sq) {
  if (!(beta > 1)) throw std::domain_error("solve_c_beta: beta must exceed 1");
  if (!(theta_v1sq >= 0)) throw std::domain_error("solve_c_beta: theta v1^2 must be non-negative");
  const double c = (1 + std::sqrt(1 + 4 * (beta - 1) * theta_v1sq)) / (2 * (beta - 1));
  return {c, c * (beta - 1) - 1};
}

// Root x > mu_1 of (beta - 1) = theta * scale * sum g_i^2/(mu_i - x)^2.
// scale defaults to N^{-4/3}; pass 1 to bypass it.
inline double solve_intermediate_saddle(const std::vector<double>& mus, const std::vector<double>& gsq,
                                        double beta, double theta, double scale) {
  if (!(beta > 1)) throw std::domain_error("intermediate saddle: beta must exceed 1");
  if (gsq.empty() || gsq[0] == 0.0) throw SaddleError("intermediate saddle: g_1 = 0, no root");
  auto rhs = [&](double x) {
    double a = 0;
    for (std::size_t i = 0; i < mus.size(); ++i) a += gsq[i] / ((mus[i] - x) * (mus[i] - x));
    return theta * scale * a;
  };
  const double target = beta - 1;
  // the i = 1 term alone gives a lower bound for the gap
  double lo_gap = std::sqrt(theta * scale * gsq[0] / target);
  double lo = mus[0] + lo_gap * (1 - 1e-12);
  double hi = mus[0] + std::max(lo_gap, 1e-300) * 2;
  int k = 0;
  while (rhs(hi) > target) {
    hi = mus[0] + 2 * (hi - mus[0]);
    if (++k > 200) throw SaddleError("intermediate saddle: bracket failure");
  }
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (rhs(mid) > target ? lo : hi) = mid;
  }
  // polish on the residual
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 8; ++it) {
    double r = 0, dr = 0;
    for (std::size_t i = 0; i < mus.size(); ++i) {
      const double d = x - mus[i];
      r += gsq[i] / (d * d);
      dr += -2 * gsq[i] / (d * d * d);
    }
    const double f = theta * scale * r - target, df = theta * scale * dr;
    if (std::abs(f) <= 1e-15 * target || df == 0) break;
    const double nx = x - f / df;
    if (!(nx > mus[0])) break;
    x = nx;
  }
  return x;
}

}  // namespace ssk
