#pragma once
// Adaptive Gauss-Kronrod (7,15) on a real parameter interval for complex
// integrands.  The accepted panels are returned as a node set so that
// tensor-product integrals can reuse the same nodes in each direction.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <queue>
#include <vector>

namespace ssk {

using cplx = std::complex<double>;

namespace gk {
inline constexpr std::array<double, 8> xk{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> wk{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes 1,3,5,7.
inline constexpr std::array<double, 4> wg{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
}  // namespace gk

// Kronrod nodes with both weight sets; wg is zero on non-Gauss nodes.
struct NodeSet {
  std::vector<double> t, wk, wg;
  std::size_t size() const { return t.size(); }
};

struct GkResult {
  cplx value{};
  double error = 0;
  NodeSet nodes;
  int panels = 0;
  bool converged = true;
};

struct Panel {
  double a, b;
  cplx k, g;
  double err;
  bool operator<(const Panel& o) const { return err < o.err; }
};

template <class F>
Panel gk_panel(F&& f, double a, double b) {
  const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
  cplx k = gk::wk[7] * f(c), g = gk::wg[3] * f(c);
  for (int j = 0; j < 7; ++j) {
    const cplx s = f(c - hw * gk::xk[j]) + f(c + hw * gk::xk[j]);
    k += gk::wk[j] * s;
    if (j % 2 == 1) g += gk::wg[j / 2] * s;
  }
  k *= hw;
  g *= hw;
  return {a, b, k, g, std::abs(k - g)};
}

// Integrate f over the panels given by sorted breakpoints; split the worst
// panel until the summed |K-G| falls below max(abs_tol, rel_tol |I|).
template <class F>
GkResult gk_adaptive(F&& f, const std::vector<double>& breaks, double abs_tol, double rel_tol,
                     double min_width = 1e-12, int max_panels = 4000) {
  std::priority_queue<Panel> q;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) q.push(gk_panel(f, breaks[i], breaks[i + 1]));
  auto totals = [&](cplx& v, double& e) {
    auto copy = q;
    v = 0;
    e = 0;
    while (!copy.empty()) {
      v += copy.top().k;
      e += copy.top().err;
      copy.pop();
    }
  };
  GkResult out;
  cplx v;
  double e;
  totals(v, e);
  while (e > std::max(abs_tol, rel_tol * std::abs(v))) {
    if (static_cast<int>(q.size()) >= max_panels) {
      out.converged = false;
      break;
    }
    Panel p = q.top();
    if (p.b - p.a < min_width) {
      out.converged = false;
      break;
    }
    q.pop();
    const double mid = 0.5 * (p.a + p.b);
    Panel l = gk_panel(f, p.a, mid), r = gk_panel(f, mid, p.b);
    v += l.k + r.k - p.k;
    e += l.err + r.err - p.err;
    q.push(l);
    q.push(r);
  }
  std::vector<Panel> ps;
  while (!q.empty()) {
    ps.push_back(q.top());
    q.pop();
  }
  std::sort(ps.begin(), ps.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
  out.value = 0;
  out.error = 0;
  for (const auto& p : ps) {
    out.value += p.k;
    out.error += p.err;
    const double c = 0.5 * (p.a + p.b), hw = 0.5 * (p.b - p.a);
    for (int j = 0; j < 15; ++j) {
      const int jj = j < 8 ? j : 14 - j;
      const double x = j < 8 ? -gk::xk[jj] : gk::xk[jj];
      out.nodes.t.push_back(c + hw * x);
      out.nodes.wk.push_back(hw * gk::wk[jj]);
      out.nodes.wg.push_back(jj % 2 == 1 ? hw * gk::wg[jj / 2] : (jj == 7 ? hw * gk::wg[3] : 0.0));
    }
  }
  out.panels = static_cast<int>(ps.size());
  return out;
}

template <class F>
GkResult gk_adaptive(F&& f, double a, double b, double abs_tol, double rel_tol, int n0 = 8) {
  std::vector<double> br(n0 + 1);
  for (int i = 0; i <= n0; ++i) br[i] = a + (b - a) * i / n0;
  br[n0] = b;
  return gk_adaptive(f, br, abs_tol, rel_tol);
}

}  // namespace ssk
