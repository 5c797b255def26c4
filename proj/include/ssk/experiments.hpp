#pragma once
// Monte Carlo over disorder, the uniform-sphere oracle, and record files.
//
// Records file: "ssk-lab v1 <statistic> <params json>" then one flat JSON
// object per line.  Appends add a fresh header; load() accepts repeats.

#include "contour.hpp"
#include "diagnostics.hpp"
#include "regimes.hpp"
#include "rng.hpp"
#include "special.hpp"
#include "spectral.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#ifndef SSK_GIT_DESCRIBE
#define SSK_GIT_DESCRIBE "unknown"
#endif

namespace ssk {

enum class Statistic {
  free_energy_gaussian,
  free_energy_intermediate,
  free_energy_micro,
  ext_overlap_laplace,
  replica_overlap_mean,
  replica_overlap_var,
  parisi_weights,
  quenched_ext_overlap,
};

inline constexpr std::array<std::pair<Statistic, const char*>, 8> statistic_names{{
    {Statistic::free_energy_gaussian, "free_energy_gaussian"},
    {Statistic::free_energy_intermediate, "free_energy_intermediate"},
    {Statistic::free_energy_micro, "free_energy_micro"},
    {Statistic::ext_overlap_laplace, "ext_overlap_laplace"},
    {Statistic::replica_overlap_mean, "replica_overlap_mean"},
    {Statistic::replica_overlap_var, "replica_overlap_var"},
    {Statistic::parisi_weights, "parisi_weights"},
    {Statistic::quenched_ext_overlap, "quenched_ext_overlap"},
}};

inline const char* to_string(Statistic s) {
  for (auto& [k, v] : statistic_names)
    if (k == s) return v;
  return "?";
}

inline std::optional<Statistic> parse_statistic(const std::string& name) {
  for (auto& [k, v] : statistic_names)
    if (name == v) return k;
  return std::nullopt;
}

inline RegimeTag regime_of(Statistic s) {
  switch (s) {
    case Statistic::free_energy_gaussian:
    case Statistic::ext_overlap_laplace:
    case Statistic::quenched_ext_overlap: return RegimeTag::gaussian;
    case Statistic::free_energy_intermediate: return RegimeTag::intermediate;
    default: return RegimeTag::microscopic;
  }
}

enum class ReferenceKind { none, std_normal, tw1, tanh_law };

struct ExperimentConfig {
  ModelParams params;
  Statistic statistic = Statistic::free_energy_gaussian;
  int n_replicates = 1;
  std::uint64_t seed_base = 0;
  ReferenceKind reference = ReferenceKind::none;
  int tw1_matrices = 4000, tw1_dim = 400;  // empirical TW1 reference
  QuadratureSpec quadrature;
  RegimeConfig regime;
  std::string output_path;  // empty: no file
  int threads = 0;          // 0: hardware concurrency
};

// Failed replicates keep value = NaN and a reason.
struct ExperimentRecord {
  std::uint64_t seed = 0;
  bool ok = true;
  std::string reason;
  double value = std::nan("");
  double saddle = std::nan("");
  double aux1 = std::nan(""), aux2 = std::nan("");
  bool rigidity = true, delocalization = true;
  double scaled_gap = std::nan("");
  double millis = 0;
};

struct ExperimentSummary {
  int n = 0, n_failed = 0;
  double mean = std::nan(""), var = std::nan(""), ks = std::nan("");
  std::string reference;
};

struct ExperimentResult {
  std::vector<ExperimentRecord> records;
  double ks = std::nan("");
  ExperimentSummary summary;
};

struct ExperimentError : std::runtime_error {
  ExperimentSummary summary;
  ExperimentError(const std::string& what, ExperimentSummary s) : std::runtime_error(what), summary(std::move(s)) {}
};

// ----------------------------------------------------------------- JSON

inline nlohmann::json to_json(const ModelParams& p) {
  return {{"n_dim", p.n_dim},
          {"beta", p.beta},
          {"h", p.h},
          {"theta", p.theta},
          {"field_mode", p.field_mode == FieldMode::fixed_unit_direction ? "fixed_unit_direction" : "uniform_on_sphere"},
          {"ensemble", p.ensemble == Ensemble::zero_diag_M  ? "zero_diag_M"
                       : p.ensemble == Ensemble::full_goe_H ? "full_goe_H"
                                                            : "coupled_pair"}};
}

namespace detail {

// NaN has no JSON spelling; null stands for it.
inline nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }
inline double num(const nlohmann::json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

}  // namespace detail

inline nlohmann::json to_json(const ExperimentRecord& r) {
  using detail::num;
  return {{"seed", r.seed},     {"ok", r.ok},         {"reason", r.reason},
          {"value", num(r.value)}, {"saddle", num(r.saddle)}, {"aux1", num(r.aux1)},
          {"aux2", num(r.aux2)},  {"rigidity", r.rigidity}, {"delocalization", r.delocalization},
          {"scaled_gap", num(r.scaled_gap)}, {"millis", r.millis}};
}

inline ExperimentRecord record_from_json(const nlohmann::json& j) {
  using detail::num;
  ExperimentRecord r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.ok = j.at("ok").get<bool>();
  r.reason = j.at("reason").get<std::string>();
  r.value = num(j.at("value"));
  r.saddle = num(j.at("saddle"));
  r.aux1 = num(j.at("aux1"));
  r.aux2 = num(j.at("aux2"));
  r.rigidity = j.at("rigidity").get<bool>();
  r.delocalization = j.at("delocalization").get<bool>();
  r.scaled_gap = num(j.at("scaled_gap"));
  r.millis = j.at("millis").get<double>();
  return r;
}

inline void persist(const std::vector<ExperimentRecord>& records, const std::string& path, Statistic stat,
                    const ModelParams& p, bool append = false) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write records to " + path);
  out << "ssk-lab v1 " << to_string(stat) << ' ' << to_json(p).dump() << '\n';
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  if (!out) throw std::runtime_error("write failed for " + path);
}

struct LoadedRecords {
  std::vector<ExperimentRecord> records;
  std::string statistic;
  nlohmann::json params;
  int skipped = 0;
};

inline LoadedRecords load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  LoadedRecords out;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("ssk-lab ", 0) == 0) {
      std::istringstream hs(line);
      std::string magic, version, stat;
      hs >> magic >> version >> stat;
      if (version != "v1") throw std::runtime_error("records file version mismatch: " + version);
      std::string rest;
      std::getline(hs, rest);
      out.statistic = stat;
      try {
        out.params = nlohmann::json::parse(rest);
      } catch (const nlohmann::json::exception&) {
        out.params = nullptr;
      }
      have_header = true;
      continue;
    }
    if (!have_header) throw std::runtime_error("records file has no header: " + path);
    try {
      out.records.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception&) {
      ++out.skipped;
    }
  }
  if (!have_header) throw std::runtime_error("records file has no header: " + path);
  return out;
}

inline nlohmann::json summary_json(const ExperimentSummary& s, Statistic stat, const ModelParams& p) {
  using detail::num;
  return {{"n", s.n},
          {"n_failed", s.n_failed},
          {"mean", num(s.mean)},
          {"var", num(s.var)},
          {"ks", num(s.ks)},
          {"reference", s.reference},
          {"statistic", to_string(stat)},
          {"params", to_json(p)},
          {"git_describe", SSK_GIT_DESCRIBE}};
}

// -------------------------------------------------------------- statistics

// Neumaier summation: the total does not depend on how values were produced.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0, comp_ = 0;
};

inline ExperimentSummary summarize(const std::vector<ExperimentRecord>& recs) {
  ExperimentSummary s;
  CompensatedSum sum;
  std::vector<double> vals;
  for (const auto& r : recs) {
    if (!r.ok || !std::isfinite(r.value)) {
      ++s.n_failed;
      continue;
    }
    vals.push_back(r.value);
    sum.add(r.value);
  }
  s.n = static_cast<int>(vals.size());
  if (s.n == 0) return s;
  s.mean = sum.value() / s.n;
  CompensatedSum sq;
  for (double x : vals) sq.add((x - s.mean) * (x - s.mean));
  s.var = s.n > 1 ? sq.value() / (s.n - 1) : 0.0;
  return s;
}

inline std::vector<double> ok_values(const std::vector<ExperimentRecord>& recs) {
  std::vector<double> v;
  for (const auto& r : recs)
    if (r.ok && std::isfinite(r.value)) v.push_back(r.value);
  return v;
}

inline ReferenceDistribution make_reference(const ExperimentConfig& c) {
  switch (c.reference) {
    case ReferenceKind::std_normal: return ReferenceDistribution::std_normal();
    case ReferenceKind::tw1: return tw1_reference(c.tw1_matrices, c.tw1_dim, c.seed_base ^ 0x7731ull);
    case ReferenceKind::tanh_law: return ReferenceDistribution::tanh_law(c.params.beta, c.params.scaled_theta(1.0));
    default: return {};
  }
}

// One replicate.  value is the normalized statistic; aux1/aux2 carry the
// comparison quantity where there is one.
inline ExperimentRecord run_replicate(const ExperimentConfig& c, std::uint64_t seed) {
  ExperimentRecord r;
  r.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  const auto& p = c.params;
  const double nd = p.n_dim;
  try {
    const auto s = sample_spectral(p, seed);
    const auto d = rmt_diagnostics(s, 0.1);
    r.rigidity = d.rigidity;
    r.delocalization = d.delocalization;
    r.scaled_gap = d.scaled_gap;
    auto F_exact = [&] { return log_partition_exact(s, p, c.quadrature).log_magnitude / nd; };
    switch (c.statistic) {
      case Statistic::free_energy_gaussian: {
        const auto g = gaussian_pack(s, p, c.regime);
        const double F = F_exact();
        r.value = g.fe_statistic(F);
        r.saddle = g.gamma;
        r.aux1 = g.G_statistic();
        r.aux2 = F - g.expansion();
        break;
      }
      case Statistic::free_energy_intermediate: {
        const auto ip = intermediate_pack(s, p, false, c.regime);
        // Y_N - xi_N = theta N^{1/3} is deterministic; centre on xi
        r.value = ip.fe_statistic(F_exact()) - ip.theta_int * std::cbrt(nd);
        r.saddle = ip.gamma;
        r.aux1 = ip.xi_N;
        r.aux2 = ip.Y_N;
        break;
      }
      case Statistic::free_energy_micro: {
        const auto mp = micro_pack(s, p, c.regime);
        const double F = F_exact();
        r.value = mp.fe_statistic(F);
        r.saddle = mp.gamma;
        r.aux1 = std::pow(nd, 2.0 / 3.0) * (s.lambdas[0] - 2);
        r.aux2 = nd * (F - mp.free_energy_prediction);
        break;
      }
      case Statistic::ext_overlap_laplace: {
        // curvature of log<exp(lambda N^{-1/2} v.sigma)> at lambda = 0 over 2
        const auto g = gaussian_pack(s, p, c.regime);
        const double dl = 0.25, sc = 1 / std::sqrt(nd);
        const double lp = ext_laplace_exact(s, p, dl * sc, c.quadrature).log_magnitude;
        const double lm = ext_laplace_exact(s, p, -dl * sc, c.quadrature).log_magnitude;
        r.value = (lp + lm) / (2 * dl * dl);
        r.saddle = g.gamma;
        r.aux1 = g.ext_quadratic;
        r.aux2 = (lp - lm) / (2 * dl);
        break;
      }
      case Statistic::quenched_ext_overlap: {
        const auto g = gaussian_pack(s, p, c.regime);
        r.value = ext_overlap_exact(s, p, c.quadrature).value / std::sqrt(nd);
        r.saddle = g.gamma;
        r.aux1 = g.ext_linear;
        break;
      }
      case Statistic::replica_overlap_mean: {
        const auto mp = micro_pack(s, p, c.regime);
        r.value = mp.overlap_mean;
        r.saddle = mp.gamma;
        r.aux1 = mp.overlap_mean_bessel();
        break;
      }
      case Statistic::replica_overlap_var: {
        const auto mp = micro_pack(s, p, c.regime);
        r.value = mp.overlap_variance;
        r.saddle = mp.gamma;
        r.aux1 = mp.overlap_fourth;
        break;
      }
      case Statistic::parisi_weights: {
        const auto mp = micro_pack(s, p, c.regime);
        r.value = mp.p_plus;
        r.saddle = mp.gamma;
        // moment estimate: <R> = q (p+ - p-) with q = (beta + m~)/beta
        r.aux1 = 0.5 + 0.5 * mp.overlap_mean * p.beta / (p.beta + mp.m_tilde);
        r.aux2 = mp.p_minus;
        break;
      }
    }
    if (!std::isfinite(r.value)) {
      r.ok = false;
      r.reason = "non-finite value";
    }
  } catch (const RegimeError& e) {
    r.ok = false;
    r.reason = std::string("gate: ") + e.what();
  } catch (const SaddleError& e) {
    r.ok = false;
    r.reason = std::string("solver: ") + e.what();
  } catch (const QuadratureError& e) {
    r.ok = false;
    r.reason = std::string("quadrature: ") + e.what();
  } catch (const std::exception& e) {
    r.ok = false;
    r.reason = std::string("error: ") + e.what();
  }
  if (!r.ok) r.value = std::nan("");
  r.millis = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, std::max(n, 1));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr first;
  std::mutex mu;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lk(mu);
          if (!first) first = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  if (c.n_replicates < 1) throw std::invalid_argument("experiment: n_replicates must be at least 1");
  const auto gate = classify(c.params, c.regime,
                             regime_of(c.statistic) == RegimeTag::microscopic    ? std::optional(HScaling::micro)
                             : regime_of(c.statistic) == RegimeTag::intermediate ? std::optional(HScaling::intermediate)
                                                                                 : std::nullopt);
  if (!gate.passes(regime_of(c.statistic)))
    throw RegimeError(std::string("statistic ") + to_string(c.statistic) + " needs the " +
                          to_string(regime_of(c.statistic)) + " regime",
                      gate);
  if (!c.output_path.empty()) {
    std::ofstream probe(c.output_path, std::ios::trunc);
    if (!probe) throw std::runtime_error("output path unwritable: " + c.output_path);
  }
  ExperimentResult res;
  res.records.resize(c.n_replicates);
  parallel_for(c.n_replicates, c.threads,
               [&](int i) { res.records[i] = run_replicate(c, replicate_seed(c.seed_base, i)); });
  res.summary = summarize(res.records);
  if (c.reference != ReferenceKind::none && res.summary.n > 0) {
    auto vals = ok_values(res.records);
    std::sort(vals.begin(), vals.end());
    const auto ref = make_reference(c);
    res.ks = ks_distance(vals, ref);
    res.summary.ks = res.ks;
    res.summary.reference = ref.provenance;
  }
  if (!c.output_path.empty()) {
    persist(res.records, c.output_path, c.statistic, c.params);
    std::ofstream sj(c.output_path + ".summary.json");
    sj << summary_json(res.summary, c.statistic, c.params).dump(2) << '\n';
  }
  if (res.summary.n_failed * 5 > c.n_replicates) {
    std::string first_reason;
    for (const auto& r : res.records)
      if (!r.ok) {
        first_reason = r.reason;
        break;
      }
    throw ExperimentError(std::to_string(res.summary.n_failed) + " of " + std::to_string(c.n_replicates) +
                              " replicates failed (first: " + first_reason + ")",
                          res.summary);
  }
  return res;
}

// ------------------------------------------------------------ sphere oracle

struct OracleResult {
  double log_Z = 0, log_Z_err = 0;
  std::array<double, 3> overlap{}, overlap_err{};  // <(s1.s2)^k>/N^k, k = 1, 2, 4
  double ext_overlap = 0, ext_overlap_err = 0;     // <v.sigma>
  double ess = 0;
  bool certified = true;
  std::string note;

  double moment(int k) const { return overlap[k == 1 ? 0 : k == 2 ? 1 : 2]; }
  double moment_err(int k) const { return overlap_err[k == 1 ? 0 : k == 2 ? 1 : 2]; }
};

// Uniform draws on the radius-sqrt(N) sphere, weights e^{beta H}, worked in the
// eigenbasis.  <(s1.s2)^2> comes from a one-replica U-statistic.  <s1.s2> is a
// U-statistic over antithetic units (w(s) - w(-s)) s, which vanish identically
// at h = 0; over plain draws it degenerates there and the jackknife error
// collapses.  k = 4 pairs draw 2j with 2j+1.  Jackknife over blocks.
inline OracleResult sphere_oracle(const SpectralSample& s, const ModelParams& p, long n_draws, std::uint64_t seed,
                                  int threads = 0) {
  const int n = s.n();
  if (n > 24) throw std::invalid_argument("sphere_oracle: N > 24 refused (cost gate)");
  const double beta = p.beta, h = p.h, nd = n;
  // log-weight shift: an upper bound of beta H on the sphere
  double vnorm = 0;
  for (int i = 0; i < n; ++i) vnorm += s.vsq(i);
  vnorm = std::sqrt(vnorm);
  const double shift = 0.5 * beta * s.lambdas[0] * nd + h * beta * vnorm * std::sqrt(nd);
  const double spread = 0.5 * beta * (s.lambdas[0] - s.lambdas[n - 1]) * nd + 2 * h * beta * vnorm * std::sqrt(nd);
  if (spread > 600) throw std::domain_error("sphere_oracle: weight range overflows (beta lambda_1 N/2 too large)");
  constexpr int blocks = 64;
  n_draws -= n_draws % (2 * blocks);
  if (n_draws <= 0) throw std::invalid_argument("sphere_oracle: too few draws");
  const long per = n_draws / blocks;

  struct Acc {
    double w = 0, w2 = 0, wv = 0, w2v2 = 0;
    Eigen::MatrixXd wss;  // sum w sigma sigma^T
    double d = 0, d2 = 0, u2 = 0;    // antithetic units for k = 1
    Eigen::VectorXd us;
    double p4 = 0, pw = 0;  // pair sums for k = 4
  };
  std::vector<Acc> acc(blocks);
  parallel_for(blocks, threads, [&](int b) {
    Philox gen(seed, Stream::aux, 0x5000u + static_cast<std::uint32_t>(b));
    std::normal_distribution<double> nrm;
    Acc a;
    a.wss = Eigen::MatrixXd::Zero(n, n);
    a.us = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd x(n), y(n);
    auto draw = [&](Eigen::VectorXd& z) {
      for (int i = 0; i < n; ++i) z(i) = nrm(gen);
      z *= std::sqrt(nd) / z.norm();
      double e = 0, lin = 0;
      for (int i = 0; i < n; ++i) {
        e += s.lambdas[i] * z(i) * z(i);
        lin += s.v_projs[i] * z(i);
      }
      return std::tuple{std::exp(0.5 * beta * e + h * beta * lin - shift),
                        std::exp(0.5 * beta * e - h * beta * lin - shift), lin};
    };
    for (long j = 0; j < per / 2; ++j) {
      const auto [wx, mx, lx] = draw(x);
      const auto [wy, my, ly] = draw(y);
      for (auto [w, wm, l, z] : {std::tuple{wx, mx, lx, &x}, std::tuple{wy, my, ly, &y}}) {
        a.w += w;
        a.w2 += w * w;
        a.wv += w * l;
        a.wss.selfadjointView<Eigen::Lower>().rankUpdate(*z, w);
        a.d += w + wm;
        a.d2 += (w + wm) * (w + wm);
        a.u2 += (w - wm) * (w - wm) * nd;
        a.us += (w - wm) * *z;
      }
      const double q = x.dot(y) / nd;
      a.pw += wx * wy;
      a.p4 += wx * wy * std::pow(q, 4);
    }
    a.wss = a.wss.selfadjointView<Eigen::Lower>();
    acc[b] = std::move(a);
  });

  Acc tot;
  tot.wss = Eigen::MatrixXd::Zero(n, n);
  tot.us = Eigen::VectorXd::Zero(n);
  for (const auto& a : acc) {
    tot.w += a.w;
    tot.w2 += a.w2;
    tot.wv += a.wv;
    tot.wss += a.wss;
    tot.d += a.d;
    tot.d2 += a.d2;
    tot.u2 += a.u2;
    tot.us += a.us;
    tot.p4 += a.p4;
    tot.pw += a.pw;
  }
  // all estimators as functions of a sum
  auto estimate = [&](const Acc& a, double draws) {
    std::array<double, 6> e{};
    e[0] = std::log(a.w / draws) + shift;
    const double den = a.w * a.w - a.w2;
    e[1] = (a.us.squaredNorm() - a.u2) / (a.d * a.d - a.d2) / nd;
    e[2] = (a.wss.squaredNorm() - a.w2 * nd * nd) / den / (nd * nd);
    e[3] = a.p4 / a.pw;
    e[4] = a.wv / a.w;
    return e;
  };
  const auto full = estimate(tot, double(n_draws));
  std::array<double, 6> jm{}, jv{};
  std::vector<std::array<double, 6>> loo(blocks);
  for (int b = 0; b < blocks; ++b) {
    Acc r;
    r.w = tot.w - acc[b].w;
    r.w2 = tot.w2 - acc[b].w2;
    r.wv = tot.wv - acc[b].wv;
    r.wss = tot.wss - acc[b].wss;
    r.d = tot.d - acc[b].d;
    r.d2 = tot.d2 - acc[b].d2;
    r.u2 = tot.u2 - acc[b].u2;
    r.us = tot.us - acc[b].us;
    r.p4 = tot.p4 - acc[b].p4;
    r.pw = tot.pw - acc[b].pw;
    loo[b] = estimate(r, double(n_draws - per));
    for (int k = 0; k < 5; ++k) jm[k] += loo[b][k] / blocks;
  }
  for (int b = 0; b < blocks; ++b)
    for (int k = 0; k < 5; ++k) jv[k] += (loo[b][k] - jm[k]) * (loo[b][k] - jm[k]);
  auto se = [&](int k) { return std::sqrt((blocks - 1.0) / blocks * jv[k]); };
  OracleResult o;
  o.log_Z = full[0];
  o.log_Z_err = se(0);
  o.overlap = {full[1], full[2], full[3]};
  o.overlap_err = {se(1), se(2), se(3)};
  o.ext_overlap = full[4];
  o.ext_overlap_err = se(4);
  o.ess = tot.w * tot.w / tot.w2;
  if (o.ess < 100) {
    o.certified = false;
    o.note = "effective sample size below 100; not certified";
  }
  return o;
}

}  // namespace ssk
