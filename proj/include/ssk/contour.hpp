#pragma once
// Contour-integral evaluators for the partition function, the replica
// overlap moments, and the two Laplace transforms.
//
// Everything is written relative to the saddle: the integrand along the
// contour is F(t) = exp[(N/2)(G(z(t)) - G(x0))] z'(t)/i, F(0) = 1, and
// F(-t) = conj F(t), so only t > 0 is integrated.
//
// The contour is the parabola z(t) = x0 + i t - c t^2 with
// c = bend/(x0 - lambda_N).  With bend <= 1/2 every |z - l_i| >= x0 - l_i,
// which bounds |F| by exp(-N beta c t^2 / 2) prod (1 + (1-2 bend) t^2/d_i^2)^{-1/4}
// and gives Gaussian tails even at N = 6 (a vertical line decays like
// t^{-N/2} there).  bend = 0 is the vertical line.

#include "quadrature.hpp"
#include "saddle.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace ssk {

enum class ContourKind { vertical_line, parabolic, keyhole, product_2d };

struct QuadratureSpec {
  double T = 0;         // truncation; 0 picks it from the tail bound
  double max_step = 0;  // largest panel; 0 means T/16
  double min_step = 1e-12;
  double abs_tol = 1e-13;  // relative to the peak |F(0)| = 1 times the width
  double rel_tol = 1e-11;
  ContourKind contour_kind = ContourKind::parabolic;
  double bend = 0.25;
  double shift = 0;  // vertex offset from the saddle (contour-shift checks)
};

struct LogScaledValue {
  double log_magnitude = 0;
  cplx phase = 1;
  double error_estimate = 0;  // absolute error of log_magnitude
  double value() const { return (phase * std::exp(log_magnitude)).real(); }
};

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double log_sphere_area(int n) {
  const double nd = n;
  return std::log(2.0) + 0.5 * nd * std::log(std::numbers::pi) + 0.5 * (nd - 1) * std::log(nd) -
         std::lgamma(0.5 * nd);
}

// One saddle contour with its nodes and integrand values (t > 0 only).
struct Line {
  int n = 0;
  double x0 = 0, c = 0, T = 0, tail = 0;
  NodeSet nodes;
  std::vector<cplx> z, F;

  cplx zt(double t) const { return {x0 - c * t * t, t}; }
  cplx dzi(double t) const { return {1.0, 2 * c * t}; }

  // 2 Re sum w F g, with Kronrod and Gauss weights
  template <class G>
  std::pair<double, double> integrate(G&& g) const {
    double k = 0, gs = 0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const double r = (F[j] * g(j)).real();
      k += nodes.wk[j] * r;
      gs += nodes.wg[j] * r;
    }
    return {2 * k, 2 * gs};
  }
};

namespace detail {

struct Geometry {
  int n;
  double beta, c, bend, x0;
  std::vector<double> d;  // x0 - l_i
  double field_neg = 0;   // exp factor for a negative field coefficient
};

// Bound on int_T^inf |F| dt.
inline double tail_bound(const Geometry& g, double T) {
  double logp = 0, logq = 0;
  const double a = 0.5 * g.n * g.beta * g.c;
  for (double di : g.d) {
    logp += -0.25 * std::log1p((1 - 2 * g.bend) * T * T / (di * di));
    logq += -0.25 * std::log(T * T / (di * di + T * T));
  }
  double tail;
  if (a > 0) {
    tail = std::exp(logp) * (0.5 * std::sqrt(std::numbers::pi / a) * std::erfc(std::sqrt(a) * T) +
                             g.c / a * std::exp(-a * T * T));
  } else {
    if (g.n < 3) return std::numeric_limits<double>::infinity();
    tail = std::exp(logp + logq) * T / (0.5 * g.n - 1);
  }
  return tail * std::exp(g.field_neg);
}

}  // namespace detail

// Build nodes for exp[(N/2)(f(z) - f(x0))] on the contour through x0.
// moment_bound multiplies the tail bound for integrands carrying extra
// bounded factors.  probe_pole adds resolution near lambda_1.
inline Line build_line(const GFunction& f, double x0, const QuadratureSpec& spec, double moment_bound = 1.0) {
  const auto& s = *f.sample;
  const int n = s.n();
  Line L;
  L.n = n;
  L.x0 = x0;
  const double far = x0 - s.lambdas.back();
  const double bend = spec.contour_kind == ContourKind::vertical_line ? 0.0 : spec.bend;
  L.c = bend / far;
  detail::Geometry g{n, f.beta, L.c, bend, x0, {}, 0};
  g.d.resize(n);
  double vsum = 0;
  for (int i = 0; i < n; ++i) {
    g.d[i] = x0 - s.lambdas[i];
    vsum += s.vsq(i) / g.d[i];
  }
  if (f.field() < 0) g.field_neg = -f.field() * vsum;
  const double ell = g.d[0];
  const double g2 = std::abs(dG(f, x0, 2));
  const double w0 = std::min(std::sqrt(2.0 / (n * std::max(g2, 1e-300))), far);
  double T = spec.T;
  const double target = spec.abs_tol * w0 / std::max(1.0, moment_bound);
  if (T <= 0) {
    T = 20 * w0;
    for (int k = 0; k < 200 && detail::tail_bound(g, T) > target; ++k) T *= 1.5;
  }
  L.T = T;
  L.tail = moment_bound * detail::tail_bound(g, T);
  const double max_step = spec.max_step > 0 ? spec.max_step : T / 16;
  std::vector<double> br{0.0};
  double b = std::min(0.25 * w0, 0.25 * ell);
  while (b < T) {
    while (br.back() + max_step < b) br.push_back(br.back() + max_step);
    br.push_back(b);
    b *= 2;
  }
  while (br.back() + max_step < T) br.push_back(br.back() + max_step);
  if (br.back() < T) br.push_back(T);
  const double l1 = s.lambdas[0];
  auto probe = [&](double t) {
    const cplx z = L.zt(t);
    const cplx F = std::exp(0.5 * n * eval_G(f, z, x0)) * L.dzi(t);
    const cplx r = ell / (z - l1);
    return F * (1.0 + r + r * r);
  };
  auto res = gk_adaptive(probe, br, target, spec.rel_tol, spec.min_step);
  if (!res.converged) throw QuadratureError("contour quadrature did not converge");
  L.nodes = std::move(res.nodes);
  L.z.resize(L.nodes.size());
  L.F.resize(L.nodes.size());
  for (std::size_t j = 0; j < L.nodes.size(); ++j) {
    const double t = L.nodes.t[j];
    L.z[j] = L.zt(t);
    L.F[j] = std::exp(0.5 * n * eval_G(f, L.z[j], x0)) * L.dzi(t);
  }
  return L;
}

struct PartitionResult {
  LogScaledValue log_Z;  // normalized by the sphere area
  double saddle = 0;
  double J = 0, J_err = 0;  // int F dt and its error
  Line line;
};

inline PartitionResult log_partition_detail(const SpectralSample& s, const ModelParams& p,
                                            const QuadratureSpec& spec = {}) {
  const auto f = GFunction::random(s, p);
  const auto sd = solve_saddle(f);
  const double x0 = sd.location + spec.shift;
  PartitionResult r;
  r.saddle = sd.location;
  r.line = build_line(f, x0, spec);
  auto [jk, jg] = r.line.integrate([](std::size_t) { return cplx(1.0); });
  r.J = jk;
  r.J_err = std::abs(jk - jg) + 2 * r.line.tail;
  if (!(jk > 0)) throw QuadratureError("non-positive contour integral");
  const double n = s.n(), beta = p.beta;
  const double logz = std::log(beta * std::sqrt(n) / (2 * std::numbers::pi)) +
                      0.5 * n * std::log(2 * std::numbers::pi / beta) + 0.5 * n * eval_G(f, x0).real() +
                      std::log(jk) - log_sphere_area(s.n());
  r.log_Z = {logz, 1.0, r.J_err / jk};
  return r;
}

inline LogScaledValue log_partition_exact(const SpectralSample& s, const ModelParams& p,
                                          const QuadratureSpec& spec = {}) {
  return log_partition_detail(s, p, spec).log_Z;
}

// Gaussian moments of the per-z field: x_i ~ N(a_i, c_i) in the eigenbasis,
// a_i = h v_i/(z - l_i), c_i = 1/(beta (z - l_i)).
namespace detail {

inline cplx replica_poly(int k, const SpectralSample& s, double h, double beta, const cplx* uz, const cplx* uw) {
  const int n = s.n();
  if (k == 1) {
    cplx acc = 0;
    for (int i = 0; i < n; ++i) acc += s.vsq(i) * uz[i] * uw[i];
    return h * h * acc;
  }
  if (k == 2) {
    cplx k1 = 0, var = 0;
    for (int i = 0; i < n; ++i) {
      const cplx a = h * s.v_projs[i] * uz[i], c = uz[i] / beta;
      const cplx b = h * s.v_projs[i] * uw[i], d = uw[i] / beta;
      k1 += a * b;
      var += a * a * d + c * b * b + c * d;
    }
    return k1 * k1 + var;
  }
  // k = 4: cumulants of X_i = x_i y_i summed over i
  cplx K1 = 0, K2 = 0, K3 = 0, K4 = 0;
  for (int i = 0; i < n; ++i) {
    const cplx a = h * s.v_projs[i] * uz[i], c = uz[i] / beta;
    const cplx b = h * s.v_projs[i] * uw[i], d = uw[i] / beta;
    const cplx mx[5] = {1.0, a, a * a + c, a * a * a + 3.0 * a * c, a * a * a * a + 6.0 * a * a * c + 3.0 * c * c};
    const cplx my[5] = {1.0, b, b * b + d, b * b * b + 3.0 * b * d, b * b * b * b + 6.0 * b * b * d + 3.0 * d * d};
    const cplx m1 = mx[1] * my[1], m2 = mx[2] * my[2], m3 = mx[3] * my[3], m4 = mx[4] * my[4];
    K1 += m1;
    K2 += m2 - m1 * m1;
    K3 += m3 - 3.0 * m2 * m1 + 2.0 * m1 * m1 * m1;
    K4 += m4 - 4.0 * m3 * m1 - 3.0 * m2 * m2 + 12.0 * m2 * m1 * m1 - 6.0 * m1 * m1 * m1 * m1;
  }
  return K4 + 4.0 * K3 * K1 + 3.0 * K2 * K2 + 6.0 * K2 * K1 * K1 + K1 * K1 * K1 * K1;
}

// Crude sup bounds of |E[(x.y)^k]| along the contour, used to scale tails.
inline double moment_bound(int k, const SpectralSample& s, double h, double beta, double x0) {
  double A = 0, C = 0;
  for (int i = 0; i < s.n(); ++i) {
    const double d = x0 - s.lambdas[i];
    A += h * h * s.vsq(i) / (d * d);
    C += 1.0 / (beta * beta * d * d);
  }
  const double m2 = A * A + 2 * A * std::sqrt(C) + C;
  if (k == 1) return A;
  if (k == 2) return m2;
  return 24 * m2 * m2;
}

}  // namespace detail

enum class MomentMethod { separable, tensor };

struct MomentResult {
  double value = 0, error = 0;
};

// <(s1.s2)^k>/N^k.
inline MomentResult overlap_moment_detail(const SpectralSample& s, const ModelParams& p, int k,
                                          const QuadratureSpec& spec = {},
                                          MomentMethod method = MomentMethod::separable) {
  if (k != 1 && k != 2 && k != 4) throw std::invalid_argument("overlap moment: k must be 1, 2 or 4");
  if (k == 4) method = MomentMethod::tensor;
  const auto f = GFunction::random(s, p);
  const auto sd = solve_saddle(f);
  const double x0 = sd.location + spec.shift;
  const double h = p.h, beta = p.beta;
  const int n = s.n();
  const double mb = detail::moment_bound(k, s, h, beta, x0);
  const Line L = build_line(f, x0, spec, mb);
  const std::size_t m = L.nodes.size();
  auto [jk, jg] = L.integrate([](std::size_t) { return cplx(1.0); });
  const double nk = std::pow(double(n), k);
  Eigen::MatrixXcd U(n, m);
  for (std::size_t j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) U(i, j) = 1.0 / (L.z[j] - s.lambdas[i]);
  double numk = 0, numg = 0;
  if (method == MomentMethod::separable) {
    for (int pass = 0; pass < 2; ++pass) {
      const auto& w = pass == 0 ? L.nodes.wk : L.nodes.wg;
      Eigen::VectorXcd wf(m);
      for (std::size_t j = 0; j < m; ++j) wf(j) = 2.0 * w[j] * L.F[j];
      // R_i = int F/(z-l_i), Q_i = int F/(z-l_i)^2
      const Eigen::VectorXd R = (U * wf).real();
      double num = 0;
      if (k == 1) {
        for (int i = 0; i < n; ++i) num += s.vsq(i) * R(i) * R(i);
        num *= h * h;
      } else {
        const Eigen::MatrixXd P = (U * wf.asDiagonal() * U.transpose()).real();
        double quad = 0, rest = 0;
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) quad += s.vsq(i) * s.vsq(j) * P(i, j) * P(i, j);
          rest += 2 * h * h * s.vsq(i) * P(i, i) * R(i) / beta + R(i) * R(i) / (beta * beta);
        }
        num = std::pow(h, 4) * quad + rest;
      }
      (pass == 0 ? numk : numg) = num;
    }
  } else {
    Eigen::MatrixXcd Uc = U.conjugate();
    cplx bk = 0, bg = 0;
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) {
        const cplx v = L.F[a] * L.F[b] * detail::replica_poly(k, s, h, beta, &U(0, a), &U(0, b)) +
                       L.F[a] * std::conj(L.F[b]) * detail::replica_poly(k, s, h, beta, &U(0, a), &Uc(0, b));
        bk += L.nodes.wk[a] * L.nodes.wk[b] * v;
        bg += L.nodes.wg[a] * L.nodes.wg[b] * v;
      }
    numk = 2 * bk.real();
    numg = 2 * bg.real();
  }
  MomentResult r;
  r.value = numk / (jk * jk) / nk;
  const double rg = numg / (jg * jg) / nk;
  const double jerr = std::abs(jk - jg) + 2 * L.tail / std::max(1.0, mb);
  r.error = std::abs(r.value - rg) + (2 * jerr / jk) * std::abs(r.value) + 4 * L.tail * (jk + L.tail) / (jk * jk) / nk;
  return r;
}

inline double overlap_moment_exact(const SpectralSample& s, const ModelParams& p, int k,
                                   const QuadratureSpec& spec = {}) {
  return overlap_moment_detail(s, p, k, spec).value;
}

// <v.sigma> (unnormalized).
inline MomentResult ext_overlap_exact(const SpectralSample& s, const ModelParams& p, const QuadratureSpec& spec = {}) {
  const auto f = GFunction::random(s, p);
  const double x0 = solve_saddle(f).location + spec.shift;
  double A = 0;
  for (int i = 0; i < s.n(); ++i) A += p.h * s.vsq(i) / (x0 - s.lambdas[i]);
  const Line L = build_line(f, x0, spec, std::max(1.0, A));
  auto [jk, jg] = L.integrate([](std::size_t) { return cplx(1.0); });
  auto [nk, ng] = L.integrate([&](std::size_t j) {
    cplx acc = 0;
    for (int i = 0; i < s.n(); ++i) acc += s.vsq(i) / (L.z[j] - s.lambdas[i]);
    return p.h * acc;
  });
  MomentResult r{nk / jk, 0};
  r.error = std::abs(nk / jk - ng / jg) + 2 * L.tail * (1 + std::abs(r.value)) / jk;
  return r;
}

// log <exp(lambda v.sigma)>: the field coefficient theta becomes theta + u,
// u = 2 h lambda + lambda^2/beta.
inline LogScaledValue ext_laplace_exact(const SpectralSample& s, const ModelParams& p, double lambda,
                                        const QuadratureSpec& spec = {}) {
  const double u = 2 * p.h * lambda + lambda * lambda / p.beta;
  const auto f = GFunction::random(s, p);
  const auto fu = GFunction::tilted(s, p, u);
  const double g0 = solve_saddle(f).location, gu = solve_saddle(fu).location;
  const Line L0 = build_line(f, g0, spec), Lu = build_line(fu, gu, spec);
  auto [j0, j0g] = L0.integrate([](std::size_t) { return cplx(1.0); });
  auto [ju, jug] = Lu.integrate([](std::size_t) { return cplx(1.0); });
  double shift = 0;
  for (int i = 0; i < s.n(); ++i) shift += s.vsq(i) / (g0 - s.lambdas[i]);
  // (N/2)(G_u(g_u) - G(g0)) = (N/2)(G_u(g_u) - G_u(g0)) + (u/2) sum v^2/(g0 - l)
  const double expo = 0.5 * s.n() * eval_G(fu, gu, g0).real() + 0.5 * u * shift;
  LogScaledValue r;
  r.log_magnitude = expo + std::log(ju) - std::log(j0);
  r.error_estimate = (std::abs(ju - jug) + 2 * Lu.tail) / ju + (std::abs(j0 - j0g) + 2 * L0.tail) / j0;
  return r;
}

// log <exp(t beta s1.s2)>.  Two-replica exponent (N/2) G_1(z, w):
//   (N/2) beta (z + w) - 1/2 sum log D_i + (theta/2) sum v_i^2 (z + w - 2 l_i + 2t)/D_i
// with D_i = (z - l_i)(w - l_i) - t^2, over the square of the one-replica integral.
inline LogScaledValue replica_laplace_exact(const SpectralSample& s, const ModelParams& p, double t,
                                            const QuadratureSpec& spec = {}) {
  if (t == 0.0) return {0.0, 1.0, 0.0};
  const int n = s.n();
  const double beta = p.beta, th = p.theta;
  const auto f = GFunction::random(s, p);
  const double gam = solve_saddle(f).location;
  const auto fd = GFunction::replica_diag(s, p, t);
  const double x0 = solve_saddle(fd).location + spec.shift;
  std::vector<double> d(n), q0(n);
  double e0 = 0;  // E(x0,x0) - N G(x0)
  for (int i = 0; i < n; ++i) {
    d[i] = x0 - s.lambdas[i];
    q0[i] = 2.0 / (d[i] - t);
    e0 += -0.5 * std::log1p(-t * t / (d[i] * d[i])) + th * s.vsq(i) * t / (d[i] * (d[i] - t));
  }
  e0 += n * eval_G(f, x0, gam).real();
  // nodes from the one-replica exponent through x0 with the partner frozen at x0
  const Line L = build_line(f, x0, spec);
  const Line D = build_line(f, gam, spec);
  auto [jk, jg] = D.integrate([](std::size_t) { return cplx(1.0); });
  const std::size_t m = L.nodes.size();
  std::vector<cplx> lin(m);
  Eigen::MatrixXcd Zl(n, m);
  for (std::size_t j = 0; j < m; ++j) {
    cplx acc = 0.5 * n * beta * (L.z[j] - x0);
    for (int i = 0; i < n; ++i) {
      Zl(i, j) = L.z[j] - s.lambdas[i];
      acc -= 0.5 * sc::clog1p((L.z[j] - x0) / d[i]);
    }
    lin[j] = acc;
  }
  auto pair_term = [&](std::size_t a, std::size_t b, bool conj_b) {
    cplx acc = lin[a] + (conj_b ? std::conj(lin[b]) : lin[b]);
    for (int i = 0; i < n; ++i) {
      const cplx za = Zl(i, a), wb = conj_b ? std::conj(Zl(i, b)) : Zl(i, b);
      const cplx prod = za * wb;
      const cplx D = prod - t * t;
      acc += -0.5 * (sc::clog1p(-t * t / prod) - std::log1p(-t * t / (d[i] * d[i])));
      acc += 0.5 * th * s.vsq(i) * ((za + wb + 2.0 * t) / D - q0[i]);
    }
    const cplx dz = L.dzi(L.nodes.t[a]);
    const cplx dw = conj_b ? std::conj(L.dzi(L.nodes.t[b])) : L.dzi(L.nodes.t[b]);
    return std::exp(acc) * dz * dw;
  };
  cplx bk = 0, bg = 0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      const cplx v = pair_term(a, b, false) + pair_term(a, b, true);
      bk += L.nodes.wk[a] * L.nodes.wk[b] * v;
      bg += L.nodes.wg[a] * L.nodes.wg[b] * v;
    }
  const double numk = 2 * bk.real(), numg = 2 * bg.real();
  if (!(numk > 0)) throw QuadratureError("replica Laplace: non-positive numerator");
  LogScaledValue r;
  r.log_magnitude = e0 + std::log(numk) - 2 * std::log(jk);
  r.error_estimate = std::abs(numk - numg) / numk + 2 * L.tail * 2 / numk + 2 * (std::abs(jk - jg) + 2 * D.tail) / jk;
  return r;
}

// (1/2 pi i) int exp[a z + b/z - alpha log z] dz over a keyhole around the
// negative axis: circle |z| = r plus both banks of (-inf, -r].
inline double keyhole_integral(double a, double b, double alpha, double tol = 1e-12) {
  if (!(a > 0) || !(b >= 0)) throw std::domain_error("keyhole: need a > 0, b >= 0");
  const double r = b > 0 ? std::sqrt(b / a) : 1.0 / a;
  const double pi = std::numbers::pi;
  auto circ = [&](double phi) {
    const cplx e = std::polar(1.0, phi);
    return std::exp(a * r * e.real() + b / r * e.real() + (1 - alpha) * std::log(r)) *
           std::cos((a * r - b / r) * e.imag() + (1 - alpha) * phi);
  };
  const double circle = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(circ, 0.0, pi, 15, tol) / pi;
  double rays = 0;
  const double sa = std::sin(pi * alpha);
  if (sa != 0.0) {
    boost::math::quadrature::exp_sinh<double> es;
    auto ray = [&](double x) {
      const double y = x + r;
      return std::exp(-a * y - b / y - alpha * std::log(y));
    };
    rays = sa / pi * es.integrate(ray, tol);
  }
  return circle + rays;
}

}  // namespace ssk
