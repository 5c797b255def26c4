#pragma once
// Disorder ensembles and their spectral data.
//
// M is the zero-diagonal GOE, M_ij = -(g_ij + g_ji)/sqrt(2N); H = M + diag
// with variance 2/N.  Only eigenvalues and the scalars v_i = v.u_i are kept.

#include "rng.hpp"
#include "tridiag.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssk {

enum class FieldMode { fixed_unit_direction, uniform_on_sphere };
enum class Ensemble { zero_diag_M, full_goe_H, coupled_pair };
enum class RegimeTag { gaussian, intermediate, microscopic, outside };

inline const char* to_string(RegimeTag r) {
  switch (r) {
    case RegimeTag::gaussian: return "gaussian";
    case RegimeTag::intermediate: return "intermediate";
    case RegimeTag::microscopic: return "microscopic";
    default: return "outside";
  }
}

struct ModelParams {
  int n_dim = 2;
  double beta = 1.0;
  double h = 0.0;
  double theta = 0.0;  // h^2 beta
  FieldMode field_mode = FieldMode::fixed_unit_direction;
  Ensemble ensemble = Ensemble::zero_diag_M;

  static ModelParams make(int n, double beta, double h,
                          FieldMode fm = FieldMode::fixed_unit_direction,
                          Ensemble ens = Ensemble::zero_diag_M) {
    if (n < 1) throw std::invalid_argument("n_dim must be positive");
    if (!(beta > 0)) throw std::invalid_argument("beta must be positive");
    if (!(h >= 0)) throw std::invalid_argument("h must be non-negative");
    return {n, beta, h, h * h * beta, fm, ens};
  }

  // theta_scaled = h^2 beta N^alpha; alpha = 1 (micro), 1/3 (intermediate).
  static ModelParams from_scaled_theta(int n, double beta, double theta_scaled, double alpha,
                                       FieldMode fm = FieldMode::fixed_unit_direction,
                                       Ensemble ens = Ensemble::zero_diag_M) {
    if (!(theta_scaled >= 0)) throw std::invalid_argument("theta must be non-negative");
    return make(n, beta, std::sqrt(theta_scaled * std::pow(double(n), -alpha) / beta), fm, ens);
  }

  double scaled_theta(double alpha) const { return theta * std::pow(double(n_dim), alpha); }
};

struct SpectralSample {
  std::vector<double> lambdas;  // descending
  std::vector<double> v_projs;
  std::uint64_t seed = 0;
  std::optional<std::vector<double>> paired_lambdas_H, paired_vprojs_H;
  double v1_sq = 0.0;
  double v_norm4 = 0.0;  // ||v||_4^4 in the original basis
  bool exact_ties = false;

  int n() const { return static_cast<int>(lambdas.size()); }
  double vsq(int i) const { return v_projs[i] * v_projs[i]; }
};

struct Decomposition {
  std::vector<double> lambdas, v_projs;
};

// Rotate v onto e_1 with a Householder reflector, tridiagonalize (which keeps
// e_1 fixed) and run QL carrying only row 0 of the eigenvectors.
inline Decomposition decompose(Eigen::MatrixXd a, const Eigen::VectorXd& v) {
  const Eigen::Index n = a.rows();
  const double vn = v.norm();
  Decomposition out;
  if (n == 1) {
    out.lambdas = {a(0, 0)};
    out.v_projs = {vn};
    return out;
  }
  Eigen::VectorXd u = v;
  u(0) += std::copysign(vn, v(0) == 0.0 ? 1.0 : v(0));
  const double uu = u.squaredNorm();
  if (uu > 0) {
    const double tau = 2.0 / uu;
    Eigen::VectorXd p = tau * (a.selfadjointView<Eigen::Lower>() * u);
    const Eigen::VectorXd q = p - (0.5 * tau * u.dot(p)) * u;
    a.noalias() -= u * q.transpose() + q * u.transpose();
  }
  Eigen::Tridiagonalization<Eigen::MatrixXd> tri;
  tri.compute(a);  // Q = diag(1, Q')
  const Eigen::VectorXd diag = tri.diagonal();  // strided views, copy first
  const Eigen::VectorXd sub = tri.subDiagonal();
  std::vector<double> d(diag.data(), diag.data() + n);
  std::vector<double> e(sub.data(), sub.data() + n - 1);
  auto res = tridiag_ql(std::move(d), std::move(e), true);
  out.lambdas = std::move(res.values);
  out.v_projs.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.v_projs[i] = vn * res.first_row[i];
  return out;
}

inline Eigen::MatrixXd sample_zero_diag(int n, std::uint64_t seed) {
  Philox gen(seed, Stream::matrix);
  std::normal_distribution<double> nd;
  const double s = 1.0 / std::sqrt(2.0 * n);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double gij = nd(gen), gji = nd(gen);
      m(i, j) = m(j, i) = -(gij + gji) * s;
    }
  return m;
}

inline Eigen::VectorXd sample_diag(int n, std::uint64_t seed) {
  Philox gen(seed, Stream::diagonal);
  std::normal_distribution<double> nd;
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d(i) = std::sqrt(2.0 / n) * nd(gen);
  return d;
}

inline Eigen::VectorXd field_vector(const ModelParams& p, std::uint64_t seed) {
  const int n = p.n_dim;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  if (p.field_mode == FieldMode::uniform_on_sphere) {
    Philox gen(seed, Stream::field);
    std::normal_distribution<double> nd;
    for (int i = 0; i < n; ++i) v(i) = nd(gen);
    v *= std::sqrt(double(n)) / v.norm();
  }
  return v;
}

inline SpectralSample sample_spectral(const ModelParams& p, std::uint64_t seed) {
  if (p.n_dim < 2) throw std::invalid_argument("sample_spectral: N must be at least 2");
  const int n = p.n_dim;
  Eigen::MatrixXd m = sample_zero_diag(n, seed);
  const Eigen::VectorXd v = field_vector(p, seed);
  SpectralSample s;
  s.seed = seed;
  s.v_norm4 = v.array().pow(4).sum();
  auto finish = [&](Decomposition&& d) {
    s.lambdas = std::move(d.lambdas);
    s.v_projs = std::move(d.v_projs);
  };
  try {
    if (p.ensemble == Ensemble::zero_diag_M) {
      finish(decompose(std::move(m), v));
    } else {
      Eigen::MatrixXd hm = m;
      hm.diagonal() += sample_diag(n, seed);
      if (p.ensemble == Ensemble::full_goe_H) {
        finish(decompose(std::move(hm), v));
      } else {
        auto dh = decompose(std::move(hm), v);
        s.paired_lambdas_H = std::move(dh.lambdas);
        s.paired_vprojs_H = std::move(dh.v_projs);
        finish(decompose(std::move(m), v));
      }
    }
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string(e.what()) + " (N=" + std::to_string(n) +
                             ", seed=" + std::to_string(seed) + ")");
  }
  s.v1_sq = s.v_projs[0] * s.v_projs[0];
  for (int i = 0; i + 1 < n; ++i)
    if (s.lambdas[i] == s.lambdas[i + 1]) s.exact_ties = true;
  return s;
}

// Dumitriu-Edelman tridiagonal model of the GOE normalized like H:
// diagonal N(0, 2/N), sub-diagonal chi_{N-1}, ..., chi_1 over sqrt(N).
inline void goe_tridiagonal(int n, std::uint64_t seed, std::uint32_t index,
                            std::vector<double>& d, std::vector<double>& e) {
  Philox gen(seed, Stream::aux, index);
  std::normal_distribution<double> nd;
  const double s = 1.0 / std::sqrt(double(n));
  d.resize(n);
  e.resize(n - 1);
  for (int i = 0; i < n; ++i) d[i] = std::sqrt(2.0) * s * nd(gen);
  for (int k = 0; k < n - 1; ++k) {
    std::chi_squared_distribution<double> cs(n - 1 - k);
    e[k] = s * std::sqrt(cs(gen));
  }
}

inline std::vector<double> goe_eigenvalues(int n, std::uint64_t seed, std::uint32_t index = 0) {
  std::vector<double> d, e;
  goe_tridiagonal(n, seed, index, d, e);
  return tridiag_ql(std::move(d), std::move(e), false).values;
}

inline std::vector<double> goe_top_eigenvalues(int n, int k, std::uint64_t seed, std::uint32_t index = 0) {
  std::vector<double> d, e;
  goe_tridiagonal(n, seed, index, d, e);
  return tridiag_top(d, e, k);
}

using cplx = std::complex<double>;

struct ResolventStats {
  cplx m, m_v, m_tilde, m_v_tilde;
  std::vector<cplx> vpow;   // vpow[k-1] = v^T (M-z)^{-k} v
  std::vector<cplx> trpow;  // trpow[k-1] = tr (M-z)^{-k}
};

inline ResolventStats resolvent_stats(const SpectralSample& s, cplx z, int k_max = 1) {
  const int n = s.n();
  double scale = 1.0;
  for (double l : s.lambdas) scale = std::max(scale, std::abs(l));
  ResolventStats r;
  r.vpow.assign(k_max, 0.0);
  r.trpow.assign(k_max, 0.0);
  cplx first_m, first_v;
  for (int i = 0; i < n; ++i) {
    const cplx d = s.lambdas[i] - z;
    if (std::abs(d) < 1e-12 * scale) throw std::domain_error("resolvent_stats: z collides with an eigenvalue");
    const cplx inv = 1.0 / d;
    cplx pw = inv;
    for (int k = 0; k < k_max; ++k) {
      r.trpow[k] += pw;
      r.vpow[k] += s.vsq(i) * pw;
      pw *= inv;
    }
    if (i == 0) {
      first_m = inv;
      first_v = s.vsq(0) * inv;
    }
  }
  const double inv_n = 1.0 / n;
  r.m = r.trpow.empty() ? cplx{} : r.trpow[0] * inv_n;
  r.m_v = r.vpow.empty() ? cplx{} : r.vpow[0] * inv_n;
  if (k_max < 1) {
    for (int i = 0; i < n; ++i) {
      const cplx inv = 1.0 / (s.lambdas[i] - z);
      r.m += inv * inv_n;
      r.m_v += s.vsq(i) * inv * inv_n;
    }
  }
  r.m_tilde = r.m - first_m * inv_n;
  r.m_v_tilde = r.m_v - first_v * inv_n;
  return r;
}

}  // namespace ssk
