#pragma once
// Empirical checks of the random-matrix inputs: rigidity, delocalization,
// edge gap and the isotropic law.  Reporting only; samples are never filtered.

#include "semicircle.hpp"
#include "spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ssk {

struct DiagnosticsReport {
  bool applicable = true;  // false below N = 10
  bool rigidity = true;
  double rigidity_margin = 0;  // max |lambda_j - gamma_j| / envelope
  bool delocalization = true;
  double max_vsq = 0;
  double scaled_gap = 0;  // N^{2/3}(lambda_1 - lambda_2)
  std::vector<double> gap_thresholds{0.01, 0.1, 1.0};
  std::vector<bool> gap_above;  // scaled_gap > s for each threshold
  std::vector<double> iso_probe, iso_error, iso_bound;
  bool isotropic = true;
  bool ties = false;
};

inline DiagnosticsReport rmt_diagnostics(const SpectralSample& s, double eps) {
  DiagnosticsReport r;
  const int n = s.n();
  const double nd = n;
  r.ties = s.exact_ties;
  for (int i = 0; i < n; ++i) r.max_vsq = std::max(r.max_vsq, s.vsq(i));
  r.delocalization = r.max_vsq <= std::pow(nd, eps);
  if (n < 10) {
    r.applicable = false;
    r.rigidity_margin = 0;
    return r;
  }
  const double ne = std::pow(nd, eps);
  for (int j = 1; j <= n; ++j) {
    const double env = ne * std::pow(nd, -2.0 / 3.0) * std::pow(double(std::min(j, n + 1 - j)), -1.0 / 3.0);
    r.rigidity_margin = std::max(r.rigidity_margin, std::abs(s.lambdas[j - 1] - sc::quantile(j, n)) / env);
  }
  r.rigidity = r.rigidity_margin <= 1.0;
  r.scaled_gap = std::pow(nd, 2.0 / 3.0) * (s.lambdas[0] - s.lambdas[1]);
  for (double t : r.gap_thresholds) r.gap_above.push_back(r.scaled_gap > t);
  // probes z = 2 + kappa to the right of lambda_1; bound N^eps N^{-1/2} kappa^{-1/4}
  for (double kappa : {0.1, 0.5, 1.0}) {
    const double z = 2.0 + kappa;
    if (z <= s.lambdas[0] + 1e-3) continue;
    const double err = std::abs(resolvent_stats(s, z, 1).m_v.real() - sc::m(z));
    const double bound = ne / (std::sqrt(nd) * std::pow(kappa, 0.25));
    r.iso_probe.push_back(z);
    r.iso_error.push_back(err);
    r.iso_bound.push_back(bound);
    if (err > bound) r.isotropic = false;
  }
  return r;
}

}  // namespace ssk
