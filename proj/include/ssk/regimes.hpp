#pragma once
// Regime gates and the closed-form predictions of the three scaling regimes.
//
//   gaussian      C >= (1-beta)_+ + theta/(|1-beta| + sqrt theta) >= N^{-1/3+tau}
//   intermediate  beta > 1, theta N^{1/3} = O(1)
//   microscopic   beta > 1, theta N = O(1)
//
// with theta = h^2 beta.  Where a printed coefficient disagreed with the exact
// evaluators the evaluators won; the affected fields say so.

#include "saddle.hpp"
#include "semicircle.hpp"
#include "special.hpp"
#include "spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssk {

enum class HScaling { fixed, micro, intermediate, custom_alpha };

struct RegimeConfig {
  double tau = 0.05;  // gaussian margin exponent
  double c = 0.05;    // beta >= c, beta <= 1/c, beta - 1 >= c outside the gaussian regime
  double theta_min = 0.05, theta_max = 20.0;  // window for the scaled theta
};

struct GateReport {
  RegimeTag tag = RegimeTag::outside;
  bool gaussian = false, intermediate = false, microscopic = false;
  bool overlap = false;  // more than one gate passed
  double gauss_lhs = 0, gauss_floor = 0;
  double theta_int = 0, theta_micro = 0;

  bool passes(RegimeTag r) const {
    switch (r) {
      case RegimeTag::gaussian: return gaussian;
      case RegimeTag::intermediate: return intermediate;
      case RegimeTag::microscopic: return microscopic;
      default: return false;
    }
  }

  std::string describe() const {
    std::ostringstream o;
    o << to_string(tag) << "\n"
      << "  gaussian      " << (gaussian ? "pass" : "fail") << "  lhs " << gauss_lhs << " vs floor " << gauss_floor
      << "\n"
      << "  intermediate  " << (intermediate ? "pass" : "fail") << "  theta N^(1/3) = " << theta_int << "\n"
      << "  microscopic   " << (microscopic ? "pass" : "fail") << "  theta N = " << theta_micro << "\n";
    if (overlap) o << "  note: several gates pass; tag chosen by the h-scaling hint\n";
    return o.str();
  }
};

struct RegimeError : std::runtime_error {
  GateReport report;
  RegimeError(const std::string& what, GateReport r) : std::runtime_error(what), report(std::move(r)) {}
};

inline GateReport classify(const ModelParams& p, const RegimeConfig& cfg = {},
                           std::optional<HScaling> hint = std::nullopt) {
  GateReport r;
  const double n = p.n_dim, b = p.beta, th = p.theta;
  const double big = 1.0 / cfg.c;
  r.gauss_lhs = std::max(0.0, 1 - b) + th / (std::abs(1 - b) + std::sqrt(th));
  r.gauss_floor = std::pow(n, -1.0 / 3.0 + cfg.tau);
  r.gaussian = b >= cfg.c && b <= big && th <= big && r.gauss_lhs >= r.gauss_floor && r.gauss_lhs <= big;
  r.theta_int = th * std::cbrt(n);
  r.theta_micro = th * n;
  const bool low_t = b >= 1 + cfg.c && b <= big;
  auto in_window = [&](double x) { return x >= cfg.theta_min && x <= cfg.theta_max; };
  r.intermediate = low_t && in_window(r.theta_int);
  r.microscopic = low_t && in_window(r.theta_micro);
  r.overlap = int(r.gaussian) + int(r.intermediate) + int(r.microscopic) > 1;
  if (hint == HScaling::micro && r.microscopic) r.tag = RegimeTag::microscopic;
  else if (hint == HScaling::intermediate && r.intermediate) r.tag = RegimeTag::intermediate;
  else if (r.gaussian) r.tag = RegimeTag::gaussian;
  else if (r.intermediate) r.tag = RegimeTag::intermediate;
  else if (r.microscopic) r.tag = RegimeTag::microscopic;
  return r;
}

namespace detail {

// allow_overlap: accept parameters whose tag is another regime as long as
// this regime's own gate also passes.
inline void require_gate(const ModelParams& p, RegimeTag want, const RegimeConfig& cfg, bool allow_overlap) {
  const auto hint = want == RegimeTag::microscopic    ? std::optional(HScaling::micro)
                    : want == RegimeTag::intermediate ? std::optional(HScaling::intermediate)
                                                      : std::nullopt;
  const GateReport r = classify(p, cfg, hint);
  if (r.passes(want) && (allow_overlap || (!r.overlap && r.tag == want))) return;
  throw RegimeError(std::string(r.overlap && r.passes(want) ? "parameters pass several gates; overlap not requested for the "
                                                              : "parameters are outside the ") +
                        to_string(want) + " regime (tag " + to_string(r.tag) + ")",
                    r);
}

inline double log_stirling_block(int n, double beta) {
  const double nd = n;
  return std::lgamma(0.5 * nd) + (0.5 * nd - 1) * std::log(2 / (nd * beta));
}

}  // namespace detail

// ---------------------------------------------------------------- gaussian

struct GaussianRegimePack {
  double gamma_hat = 0, kappa = 0;
  double g_hat = 0, g2_hat = 0;  // g(gamma_hat), g''(gamma_hat)
  double G_hat = 0;              // random G at gamma_hat
  double gamma = 0;              // random saddle
  double C_N = 0;
  double V_N = 0;
  double A_N = 0, B_N = 0;  // as printed; see linear_mean
  double linear_mean = 0;   // E[N(G - g)](gamma_hat) for the sampled ensemble, = -M_f
  double e_n = 0, v_n = 0, v_tilde = 0;
  double E_N = 0, V_tilde_N = 0;
  double ext_quadratic = 0, ext_linear = 0;
  double overlap_quadratic = 0, overlap_linear = 0;
  double fe_scale = 0;  // N^{1/2} kappa^{1/4} / (theta V_N^{1/2})
  int n = 0;

  double expansion() const { return 0.5 * G_hat + C_N; }
  // 2 (F - C_N) - g(gamma_hat), scaled; -> N(0,1)
  double fe_statistic(double F) const { return fe_scale * (2 * (F - C_N) - g_hat); }
  double G_statistic() const { return fe_scale * (G_hat - g_hat); }
  // G(gamma_hat) - g(gamma_hat) - E_N over sqrt(V_tilde_N)
  double modified_statistic() const { return (G_hat - g_hat - E_N) / std::sqrt(V_tilde_N); }
};

inline double isotropic_variance(double gamma, double v4_unit) {
  const double m = sc::m(gamma);
  return (gamma + std::sqrt(gamma * gamma - 4)) / std::sqrt(gamma + 2) * std::pow(m, 4) *
         (m * m + (1 - v4_unit) * (1 - m * m));
}

inline GaussianRegimePack gaussian_pack(const SpectralSample& s, const ModelParams& p, const RegimeConfig& cfg = {},
                                        bool allow_overlap = false) {
  detail::require_gate(p, RegimeTag::gaussian, cfg, allow_overlap);
  GaussianRegimePack g;
  const int n = s.n();
  const double nd = n, b = p.beta, th = p.theta, h = p.h;
  g.n = n;
  const auto fd = GFunction::deterministic(p);
  const auto sd = solve_saddle(fd);
  g.gamma_hat = sd.location;
  g.kappa = g.gamma_hat - 2;
  g.g_hat = eval_G(fd, g.gamma_hat).real();
  g.g2_hat = sd.d2;
  const auto fr = GFunction::random(s, p);
  g.G_hat = eval_G(fr, g.gamma_hat).real();
  g.gamma = solve_saddle(fr).location;

  g.C_N = detail::log_stirling_block(n, b) / nd - std::log(nd * g.g2_hat * std::numbers::pi) / (2 * nd);
  g.V_N = isotropic_variance(g.gamma_hat, s.v_norm4 / (nd * nd));
  g.A_N = 0.5 * std::log(1 - b * b) - b * b;
  g.B_N = std::sqrt(-2 * std::log(1 - b * b) - 2 * b * b);

  const double w2 = p.ensemble == Ensemble::full_goe_H ? 2.0 : 0.0;
  const auto lc = linear_stat_constants(g.gamma_hat, w2, 3.0);
  g.linear_mean = -lc.M_f;
  g.e_n = lc.e_n;
  g.v_n = lc.v_n;
  const double m = sc::m(g.gamma_hat), mp = sc::m_prime(g.gamma_hat), mpp = sc::m_dprime(g.gamma_hat);
  const double ths = th * std::sqrt(nd);
  g.v_tilde = 2 * ths * ths * (mp - m * m);
  // the printed e_n disagrees with simulation; the quadrature mean M_f is used
  g.E_N = -lc.M_f / nd;
  g.V_tilde_N = (lc.V_f + g.v_tilde) / (nd * nd);
  g.fe_scale = th > 0 ? std::sqrt(nd) * std::pow(g.kappa, 0.25) / (th * std::sqrt(g.V_N))
                      : std::numeric_limits<double>::quiet_NaN();

  g.ext_quadratic = mp / (2 * b * g.g2_hat) * (-m + 2 * th * mp * mp);
  const auto rs = resolvent_stats(s, g.gamma, 2);
  const double r1 = rs.vpow[0].real(), r2 = rs.vpow[1].real();
  g.ext_linear = -h * r1 / std::sqrt(nd);
  // 1/(2 beta^2) and h^2: both checked against the two-replica evaluator
  g.overlap_quadratic = mp * std::sqrt(g.kappa) / (2 * b * b) * (mp - 2 * th * mpp) / (mp - th * mpp);
  g.overlap_linear = std::pow(g.kappa, 0.25) * h * h * r2 / std::sqrt(nd);
  return g;
}

struct ExtCoefficients {
  double quadratic, linear;
};

inline ExtCoefficients gaussian_ext_coeffs(const SpectralSample& s, const ModelParams& p, const RegimeConfig& cfg = {}) {
  const auto g = gaussian_pack(s, p, cfg);
  return {g.ext_quadratic, g.ext_linear};
}

// ------------------------------------------------------------ intermediate

struct IntermediatePack {
  double x_a = 0, x_b = 0;
  double Y_N = 0, xi_N = 0;
  double gamma = 0;                // random saddle of G (own sample)
  double ext_linear_resolvent = 0; // N^{-1} v^T (M - gamma)^{-1} v
  double theta_int = 0;
  double fe_constant = 0;  // beta - L(2)/2
  int n = 0;
  double beta = 0;
  std::vector<double> overlap_taylor;  // Z_1..Z_k when requested

  // N^{2/3} 2 (F - (1/N)[log Gamma(N/2) + (N/2-1) log(2/(N beta))] - (beta - L(2)/2))
  double fe_statistic(double F) const {
    const double nd = n;
    return std::pow(nd, 2.0 / 3.0) * 2 * (F - detail::log_stirling_block(n, beta) / nd - fe_constant);
  }
};

// Core on an explicit (mu_i, g_i) system; mus descending.
inline IntermediatePack intermediate_from_system(const std::vector<double>& mus, const std::vector<double>& gs,
                                                 double beta, double theta_int) {
  const int n = static_cast<int>(mus.size());
  const double nd = n;
  std::vector<double> gsq(n);
  double norm = 0;
  for (int i = 0; i < n; ++i) {
    gsq[i] = gs[i] * gs[i];
    norm += gsq[i];
  }
  norm /= nd;
  IntermediatePack r;
  r.n = n;
  r.beta = beta;
  r.theta_int = theta_int;
  const double scale = std::pow(nd, -4.0 / 3.0);
  r.x_b = solve_intermediate_saddle(mus, gsq, beta, theta_int, scale);
  r.x_a = solve_intermediate_saddle(mus, gsq, beta, theta_int, scale / norm);
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += gsq[i] / (mus[i] - r.x_b);
  const double n23 = std::pow(nd, 2.0 / 3.0);
  r.Y_N = n23 * (beta - 1) * (r.x_b - 2) - theta_int / n23 * sum;
  // N int rho/(x-2) = -N
  r.xi_N = n23 * (beta - 1) * (r.x_b - 2) - theta_int / n23 * (sum + nd);
  r.fe_constant = beta - 0.5 * sc::logpot_closed(2.0);
  return r;
}

inline std::vector<double> synthetic_normals(int n, std::uint64_t seed, std::uint32_t index = 0xA1) {
  Philox gen(seed, Stream::aux, index);
  std::normal_distribution<double> nd;
  std::vector<double> g(n);
  for (auto& x : g) x = nd(gen);
  return g;
}

// use_paired_H: (mu, g) = (eigenvalues of the paired H, synthetic normals);
// otherwise (lambda_i, v_i) of the sample itself.
inline IntermediatePack intermediate_pack(const SpectralSample& s, const ModelParams& p, bool use_paired_H,
                                          const RegimeConfig& cfg = {}, bool allow_overlap = false) {
  detail::require_gate(p, RegimeTag::intermediate, cfg, allow_overlap);
  const double th = p.scaled_theta(1.0 / 3.0);
  IntermediatePack r;
  if (use_paired_H) {
    if (!s.paired_lambdas_H) throw std::invalid_argument("intermediate_pack: sample has no paired H");
    r = intermediate_from_system(*s.paired_lambdas_H, synthetic_normals(s.n(), s.seed), p.beta, th);
  } else {
    r = intermediate_from_system(s.lambdas, s.v_projs, p.beta, th);
  }
  r.gamma = solve_saddle(GFunction::random(s, p)).location;
  r.ext_linear_resolvent = resolvent_stats(s, r.gamma, 1).m_v.real();
  return r;
}

// log <exp[beta N^{-2/3} t s1.s2]> = sum_j Z_j t^j.
//   X_j = 2^{j-1}/j N^{-2j/3} sum (l_i - gamma)^{-j}
//   Y_j = N^{-2j/3} [s^j] (-1/2) log(R(s)/R(0)),  R(s) = sum_k r_k (2s)^k,
//         r_k = sum v_i^2 (l_i - gamma)^{-(k+3)}
//   Z_1 = beta N^{1/3} + X_1 + Y_1
// In particular Y_1 = -(1/3) N^{-2/3} m_v'''/m_v''.
inline std::vector<double> intermediate_overlap_taylor(const SpectralSample& s, const ModelParams& p, int k,
                                                       const RegimeConfig& cfg = {}, bool allow_overlap = false) {
  if (k < 1 || k > 6) throw std::invalid_argument("overlap Taylor: need 1 <= k <= 6");
  detail::require_gate(p, RegimeTag::intermediate, cfg, allow_overlap);
  const int n = s.n();
  const double nd = n;
  const double gam = solve_saddle(GFunction::random(s, p)).location;
  std::array<double, 7> tr{}, r{};
  for (int i = 0; i < n; ++i) {
    const double inv = 1.0 / (s.lambdas[i] - gam);
    double pw = inv;
    for (int j = 1; j <= k; ++j, pw *= inv) tr[j] += pw;
    double pv = s.vsq(i) * inv * inv * inv;
    for (int j = 0; j <= k; ++j, pv *= inv) r[j] += pv;
  }
  const double mv2 = 2 * r[0] / nd;
  if (std::abs(mv2) < 1e-8) throw std::domain_error("overlap Taylor: m_v'' below 1e-8 (degenerate sample)");
  // q(s) = R(s)/R(0) = 1 + sum_{j>=1} q_j s^j; log q by the usual recurrence
  std::array<double, 7> q{}, lq{};
  q[0] = 1;
  for (int j = 1; j <= k; ++j) q[j] = r[j] * std::pow(2.0, j) / r[0];
  for (int j = 1; j <= k; ++j) {
    double acc = j * q[j];
    for (int i = 1; i < j; ++i) acc -= i * lq[i] * q[j - i];
    lq[j] = acc / j;
  }
  std::vector<double> z(k);
  for (int j = 1; j <= k; ++j) {
    const double nj = std::pow(nd, -2.0 * j / 3.0);
    const double X = std::pow(2.0, j - 1) / j * nj * tr[j];
    const double Y = -0.5 * lq[j] * nj;
    z[j - 1] = X + Y;
  }
  z[0] += p.beta * std::cbrt(nd);
  return z;
}

// ------------------------------------------------------------- microscopic

struct MicroPack {
  double c_beta = 0, B = 0;
  double gamma = 0, m_tilde = 0;  // m~ at gamma
  double a = 0, b = 0, a_hat = 0, lam = 0;
  double free_energy_prediction = 0;
  double C_N = 0;  // constant of the TW1 statistic
  double overlap_mean = 0, overlap_variance = 0, overlap_fourth = 0;
  double p_plus = 0.5, p_minus = 0.5;
  double Xi_N = 0;
  int n = 0;
  double beta = 0;

  // N^{2/3} 2/(beta - 1) (F - C_N) -> TW1
  double fe_statistic(double F) const { return std::pow(double(n), 2.0 / 3.0) * 2 / (beta - 1) * (F - C_N); }
  // ratio forms, equal to the closed forms up to rounding
  double overlap_mean_bessel() const {
    const double i1 = bessel_half(BesselOrder::half, lam), im = bessel_half(BesselOrder::m_half, lam);
    return lam * i1 * i1 / (c_beta * beta * std::sqrt(b / a) * im * im);
  }
  double overlap_second_bessel() const {
    const double im = bessel_half(BesselOrder::m_half, lam);
    return lam * lam * im * im * a / (c_beta * c_beta * beta * beta * b * im * im);
  }
};

inline double m_tilde(const SpectralSample& s, double z) {
  double acc = 0;
  for (int i = 1; i < s.n(); ++i) acc += 1.0 / (s.lambdas[i] - z);
  return acc / s.n();
}

inline double micro_Xi(const SpectralSample& s) {
  return std::cbrt(double(s.n())) * (m_tilde(s, s.lambdas[0]) + 1);
}

inline MicroPack micro_pack(const SpectralSample& s, const ModelParams& p, const RegimeConfig& cfg = {},
                            bool allow_overlap = false) {
  if (!(p.beta > 1)) throw std::domain_error("micro_pack: beta must exceed 1");
  detail::require_gate(p, RegimeTag::microscopic, cfg, allow_overlap);
  MicroPack r;
  const int n = s.n();
  const double nd = n, beta = p.beta, th = p.scaled_theta(1.0), v1 = s.v1_sq;
  r.n = n;
  r.beta = beta;
  const auto cb = solve_c_beta(beta, th * v1);
  r.c_beta = cb.c_beta;
  r.B = cb.B;
  r.gamma = s.lambdas[0] + r.c_beta / nd;
  r.m_tilde = m_tilde(s, r.gamma);
  const double bm = beta + r.m_tilde;
  r.a = r.c_beta * bm / 2;
  r.b = v1 * th / (2 * r.c_beta);
  r.a_hat = r.c_beta * (beta - 1) / 2;
  r.lam = 2 * std::sqrt(r.a * r.b);
  const double t2 = std::pow(std::tanh(std::sqrt(v1 * th * bm)), 2);
  r.overlap_mean = bm / beta * t2;
  r.overlap_variance = std::pow(bm / beta, 2) * (1 - t2 * t2);
  r.overlap_fourth = std::pow(bm / beta, 4);
  const double tp = std::pow(std::tanh(std::sqrt(v1 * th * (beta - 1))), 2);
  r.p_plus = 0.5 + 0.5 * tp;
  r.p_minus = 0.5 - 0.5 * tp;
  r.Xi_N = micro_Xi(s);

  // log|S^{N-1}(sqrt N)| inline to stay independent of the contour header
  const double log_area = std::log(2.0) + 0.5 * nd * std::log(std::numbers::pi) + 0.5 * (nd - 1) * std::log(nd) -
                          std::lgamma(0.5 * nd);
  const double consts =
      ((1 - nd / 2) * std::log(beta) + nd / 2 * std::log(2 * std::numbers::pi) + 0.5 * std::log(nd) - log_area) / nd;
  r.C_N = beta - 0.5 * sc::logpot_closed(2.0) + consts;
  const auto f = GFunction::random(s, p);
  const double Gg = eval_G(f, r.gamma).real();
  // standard I_{-1/2}; log form so that large lam does not overflow
  const double log_i = r.lam > 700 ? bessel_half_log(BesselOrder::m_half, r.lam)
                                   : std::log(bessel_half(BesselOrder::m_half, r.lam));
  const double log_b = r.b > 0 ? 0.25 * std::log(r.b / r.a) + log_i
                               : -0.5 * std::log(std::numbers::pi * r.a);  // b -> 0 limit of (b/a)^{1/4} I
  r.free_energy_prediction =
      0.5 * Gg + consts + (std::log(r.c_beta / nd) + log_b - r.a - r.b) / nd;
  return r;
}

struct ConditionalConstants {
  double a, b, Z;
};

// Constants of the conditional statement given the limit z of v_1.
inline ConditionalConstants micro_conditional_constants(double z, double beta, double theta) {
  const double Z = std::sqrt(z * z * theta * (beta - 1));
  const double t = std::tanh(Z), c = std::cosh(Z);
  return {(beta - 1) / beta * t * t, t * (std::sinh(Z) * c + Z) / (beta * c * c), Z};
}

// Steepest-descent curve of the micro contour: eta solving
//   eta (B + 1 - B/((1+E)^2 + eta^2)) = arg((1+E) + i eta),  E < 0.
inline double micro_eta_at_minus_one(double B) {
  const double pi = std::numbers::pi;
  return (pi / 2 + std::sqrt(pi * pi / 4 + 4 * B * (B + 1))) / (2 * (B + 1));
}

inline double micro_contour_eta(double E, double B) {
  if (!(E < 0)) throw std::domain_error("micro_contour_eta: E must be negative");
  if (!(B >= 0)) throw std::domain_error("micro_contour_eta: B must be non-negative");
  if (E == -1.0) return micro_eta_at_minus_one(B);
  const double a = 1 + E;
  auto phi = [&](double eta) { return eta * (B + 1 - B / (a * a + eta * eta)) - std::atan2(eta, a); };
  double lo, hi;
  if (E > -1) {
    // phi < 0 near 0 and phi(eta(-1)) > 0 on this branch
    lo = 0;
    hi = micro_eta_at_minus_one(B);
    while (phi(hi) <= 0) hi *= 2;
  } else {
    // below eta_*^2 = B/(B+1) - a^2 the left side is negative
    lo = std::sqrt(std::max(0.0, B / (B + 1) - a * a));
    hi = std::max(2 * lo, 1.0);
    while (phi(hi) <= 0) hi *= 2;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// ----------------------------------------------------------- reconciliation

// A symbolic constant against the seed average of (exact - fluctuating part).
struct Reconciliation {
  std::string name;
  double symbolic = 0, numeric = 0, stderr_ = 0;
  int n = 0;
  double tolerance = 0;
  bool consistent = false;

  std::string describe() const {
    std::ostringstream o;
    o << name << ": symbolic " << symbolic << ", numeric " << numeric << " +- " << stderr_ << " (n=" << n
      << "), " << (consistent ? "consistent" : "MISMATCH") << " at tolerance " << tolerance;
    return o.str();
  }
};

inline Reconciliation reconcile(std::string name, double symbolic, const std::vector<double>& residuals,
                                double tolerance) {
  Reconciliation r;
  r.name = std::move(name);
  r.symbolic = symbolic;
  r.n = static_cast<int>(residuals.size());
  r.tolerance = tolerance;
  if (r.n == 0) return r;
  double mean = 0;
  for (double x : residuals) mean += x;
  mean /= r.n;
  double var = 0;
  for (double x : residuals) var += (x - mean) * (x - mean);
  r.numeric = mean;
  r.stderr_ = r.n > 1 ? std::sqrt(var / (r.n - 1) / r.n) : 0.0;
  r.consistent = std::abs(r.numeric - r.symbolic) <= tolerance + 3 * r.stderr_;
  return r;
}

}  // namespace ssk
