#pragma once
// Symmetric tridiagonal eigenvalues by implicit-shift QL, optionally carrying
// the first row of the eigenvector matrix.  That row is all the model needs:
// once the field direction has been rotated onto e_1, v_i = |v| * Q(0,i).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ssk {

struct TridiagResult {
  std::vector<double> values;     // descending
  std::vector<double> first_row;  // Q(0,i) matching values; empty if not requested
};

// d: diagonal (n), e: sub-diagonal (n-1).  Both consumed.
inline TridiagResult tridiag_ql(std::vector<double> d, std::vector<double> e, bool want_first_row) {
  const int n = static_cast<int>(d.size());
  e.resize(n, 0.0);
  e[n - 1] = 0.0;
  std::vector<double> z;
  if (want_first_row) {
    z.assign(n, 0.0);
    z[0] = 1.0;
  }
  constexpr int max_iter = 60;
  for (int l = 0; l < n; ++l) {
    int iter = 0, m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        if (iter++ == max_iter) throw std::runtime_error("tridiag_ql: no convergence");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          e[i + 1] = (r = std::hypot(f, g));
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          d[i + 1] = g + (p = s * r);
          g = c * r - b;
          if (want_first_row) {
            f = z[i + 1];
            z[i + 1] = s * z[i] + c * f;
            z[i] = c * z[i] - s * f;
          }
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return d[a] > d[b]; });
  TridiagResult out;
  out.values.resize(n);
  for (int k = 0; k < n; ++k) out.values[k] = d[idx[k]];
  if (want_first_row) {
    out.first_row.resize(n);
    for (int k = 0; k < n; ++k) out.first_row[k] = z[idx[k]];
  }
  return out;
}

// Number of eigenvalues strictly greater than x (Sturm count).
inline int count_above(const std::vector<double>& d, const std::vector<double>& e2, double x) {
  int below = 0;
  double q = d[0] - x;
  if (q < 0) ++below;
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (q == 0.0) q = 1e-300;
    q = d[i] - x - e2[i - 1] / q;
    if (q < 0) ++below;
  }
  return static_cast<int>(d.size()) - below;
}

// Top k eigenvalues (descending) by bisection.
inline std::vector<double> tridiag_top(const std::vector<double>& d, const std::vector<double>& e, int k) {
  const int n = static_cast<int>(d.size());
  k = std::min(k, n);
  std::vector<double> e2(e.size());
  double lo = d[0], hi = d[0];
  for (int i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i < n - 1 ? std::abs(e[i]) : 0.0);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }
  for (std::size_t i = 0; i < e.size(); ++i) e2[i] = e[i] * e[i];
  std::vector<double> out(k);
  double upper = hi;
  for (int j = 0; j < k; ++j) {
    // j-th largest: count_above(x) <= j for x >= lambda_{j+1}
    double a = lo, b = upper;
    while (b - a > 1e-14 * std::max(1.0, std::abs(b))) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      (count_above(d, e2, mid) > j ? a : b) = mid;
    }
    out[j] = 0.5 * (a + b);
    upper = b;
  }
  return out;
}

}  // namespace ssk
