#pragma once
// Semicircle law rho(x) = sqrt(4-x^2)/(2 pi) on [-2,2] and its transforms.

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace ssk::sc {

using cplx = std::complex<double>;

// log(1 + w) without cancellation for small complex w.
inline cplx clog1p(cplx w) {
  const double x = w.real(), y = w.imag();
  return {0.5 * std::log1p(x * (2 + x) + y * y), std::atan2(y, 1 + x)};
}

inline double rho(double x) {
  return std::abs(x) >= 2.0 ? 0.0 : std::sqrt(4.0 - x * x) / (2.0 * std::numbers::pi);
}

// sqrt(z-2)*sqrt(z+2) with principal roots is analytic off [-2,2] and ~ z at
// infinity, which selects the branch with m -> 0.
inline cplx m(cplx z) { return 0.5 * (-z + std::sqrt(z - 2.0) * std::sqrt(z + 2.0)); }

inline double m(double x) {
  if (std::abs(x) <= 2.0) throw std::domain_error("semicircle: real argument inside [-2,2]");
  // rationalized: no cancellation for large |x|
  const double r = std::sqrt((std::abs(x) - 2.0) * (std::abs(x) + 2.0));
  return x > 0 ? -2.0 / (x + r) : 2.0 / (r - x);
}

template <class T>
T m_prime(T z) {
  const T mz = m(z);
  return mz * mz / (T(1) - mz * mz);
}

template <class T>
T m_dprime(T z) {
  const T mz = m(z), d = T(1) - mz * mz;
  return T(2) * mz * m_prime(z) / (d * d);
}

// L(z) = int log(z-x) rho(x) dx in closed form: with w = -1/m(z),
// L = log w + 1/(2 w^2).  Used on hot paths; logpot() is the quadrature one.
inline cplx logpot_closed(cplx z) {
  const cplx w = -1.0 / m(z);
  return std::log(w) + 0.5 / (w * w);
}

inline double logpot_closed(double x) {
  if (x < 2.0) throw std::domain_error("logpot: argument below the edge");
  if (x == 2.0) return 0.5;
  const double w = -1.0 / m(x);
  return std::log(w) + 0.5 / (w * w);
}

// Quadrature version, x >= 2. Substituting x = 2 cos(phi) removes the
// square-root endpoint; the log singularity at x = 2 is integrable.
inline double logpot(double x, double tol = 1e-10) {
  if (x < 2.0) throw std::domain_error("logpot: argument below the edge");
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [x](double phi) {
    const double s = std::sin(phi);
    const double c = std::cos(phi);
    const double d = x == 2.0 ? 4.0 * std::pow(std::sin(0.5 * phi), 2) : x - 2.0 * c;
    if (d <= 0.0) return 0.0;  // s^2 log d -> 0 at the edge
    return std::log(d) * 2.0 * s * s / std::numbers::pi;
  };
  return ts.integrate(f, 0.0, std::numbers::pi, tol);
}

// P(X > x) for X ~ rho.
inline double tail(double x) {
  if (x >= 2.0) return 0.0;
  if (x <= -2.0) return 1.0;
  const double cdf = 0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * std::numbers::pi) +
                     std::asin(0.5 * x) / std::numbers::pi;
  return 1.0 - cdf;
}

// gamma_i with int_{gamma_i}^2 rho = i/N.
inline double quantile(long i, long n) {
  if (i < 1 || i > n) throw std::domain_error("quantile index out of range");
  const double target = static_cast<double>(i) / static_cast<double>(n);
  double lo = -2.0, hi = 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (tail(mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace ssk::sc
