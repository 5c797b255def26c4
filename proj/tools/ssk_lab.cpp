// ssk-lab: sampling, exact evaluation, regime predictions and experiments
// for the 2-spin spherical SK model.
//
// Precedence is fixed: flags > --config file > defaults.  Every run echoes
// its resolved configuration as "key=value" lines, readable by --config.

#include "ssk/ssk.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

namespace {

using namespace ssk;

struct Options {
  int n = 100;
  double beta = 0.5;
  double h = 0.0;
  double theta = 1.0;
  std::string h_scaling = "fixed";
  double alpha = 1.0;
  std::uint64_t seed = 1;
  int replicates = 100;
  long draws = 1000000;
  std::string statistic = "free_energy_gaussian";
  std::string out;
  int threads = 0;
  std::string ensemble = "zero_diag_M";
  std::string field = "fixed_unit_direction";
  std::string reference = "auto";
  int airy_n = 100, n_big = 2000;
  std::string records;
};

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ModelParams resolve(const Options& o) {
  const FieldMode fm = o.field == "uniform_on_sphere" ? FieldMode::uniform_on_sphere : FieldMode::fixed_unit_direction;
  const Ensemble en = o.ensemble == "full_goe_H"     ? Ensemble::full_goe_H
                      : o.ensemble == "coupled_pair" ? Ensemble::coupled_pair
                                                     : Ensemble::zero_diag_M;
  if (o.h_scaling == "fixed") return ModelParams::make(o.n, o.beta, o.h, fm, en);
  const double alpha = o.h_scaling == "micro" ? 1.0 : o.h_scaling == "intermediate" ? 1.0 / 3.0 : o.alpha;
  return ModelParams::from_scaled_theta(o.n, o.beta, o.theta, alpha, fm, en);
}

std::optional<HScaling> hint(const Options& o) {
  if (o.h_scaling == "micro") return HScaling::micro;
  if (o.h_scaling == "intermediate") return HScaling::intermediate;
  return std::nullopt;
}

void echo(const std::string& cmd, const Options& o, const ModelParams& p) {
  std::cout << std::setprecision(17) << "# ssk-lab " << cmd << " (" << SSK_GIT_DESCRIBE << ")\n"
            << "n=" << o.n << "\nbeta=" << o.beta << "\nh=" << p.h << "\ntheta=" << o.theta
            << "\nh-scaling=" << o.h_scaling << "\nalpha=" << o.alpha << "\nseed=" << o.seed
            << "\nreplicates=" << o.replicates << "\ndraws=" << o.draws << "\nstatistic=" << o.statistic
            << "\nthreads=" << o.threads << "\nensemble=" << o.ensemble << "\nfield=" << o.field
            << "\nreference=" << o.reference << "\nairy-n=" << o.airy_n << "\nn-big=" << o.n_big << "\n";
  if (!o.out.empty()) std::cout << "out=" << o.out << "\n";
  if (!o.records.empty()) std::cout << "records=" << o.records << "\n";
  std::cout << "# ---\n" << std::setprecision(10);
}

int cmd_sample(const Options& o) {
  const auto p = resolve(o);
  echo("sample", o, p);
  const auto s = sample_spectral(p, o.seed);
  const auto d = rmt_diagnostics(s, 0.1);
  std::cout << "lambda_1 " << s.lambdas[0] << "\nlambda_2 " << s.lambdas[1] << "\nlambda_N " << s.lambdas.back()
            << "\nv1^2 " << s.v1_sq << "\nscaled_gap " << d.scaled_gap << "\nrigidity " << (d.rigidity ? "pass" : "fail")
            << " (margin " << d.rigidity_margin << ")\ndelocalization " << (d.delocalization ? "pass" : "fail")
            << " (max v_i^2 " << d.max_vsq << ")\nisotropic " << (d.isotropic ? "pass" : "fail") << "\nties "
            << (d.ties ? "yes" : "no") << "\n";
  return 0;
}

int cmd_free_energy(const Options& o) {
  const auto p = resolve(o);
  echo("free-energy", o, p);
  const auto s = sample_spectral(p, o.seed);
  const auto r = log_partition_detail(s, p);
  const double F = r.log_Z.log_magnitude / p.n_dim;
  std::cout << "F_exact " << F << " (+- " << r.log_Z.error_estimate / p.n_dim << ")\nsaddle " << r.saddle << "\n";
  const auto gate = classify(p, {}, hint(o));
  std::cout << "regime " << to_string(gate.tag) << "\n";
  switch (gate.tag) {
    case RegimeTag::gaussian: {
      const auto g = gaussian_pack(s, p);
      std::cout << "expansion " << g.expansion() << "\n  G(gamma_hat)/2 " << 0.5 * g.G_hat << "\n  C_N " << g.C_N
                << "\nresidual " << F - g.expansion() << "\nstatistic " << g.fe_statistic(F) << "\n";
      break;
    }
    case RegimeTag::intermediate: {
      const auto ip = intermediate_pack(s, p, false);
      std::cout << "Y_N " << ip.Y_N << "\nxi_N " << ip.xi_N << "\nstatistic " << ip.fe_statistic(F)
                << "\nstatistic - Y_N " << ip.fe_statistic(F) - ip.Y_N << "\n";
      break;
    }
    case RegimeTag::microscopic: {
      const auto mp = micro_pack(s, p);
      std::cout << "prediction " << mp.free_energy_prediction << "\n  C_N " << mp.C_N << "\n  edge term "
                << 0.5 * (p.beta - 1) * (s.lambdas[0] - 2) << "\nresidual " << F - mp.free_energy_prediction
                << "\nstatistic " << mp.fe_statistic(F) << "\n";
      break;
    }
    default: std::cout << "no regime prediction\n";
  }
  return 0;
}

int cmd_overlap(const Options& o) {
  const auto p = resolve(o);
  echo("overlap", o, p);
  const auto s = sample_spectral(p, o.seed);
  for (int k : {1, 2, 4}) {
    const auto m = overlap_moment_detail(s, p, k);
    std::cout << "moment_" << k << " " << m.value << " (+- " << m.error << ")\n";
  }
  const auto gate = classify(p, {}, hint(o));
  std::cout << "regime " << to_string(gate.tag) << "\n";
  if (gate.tag == RegimeTag::gaussian) {
    const auto g = gaussian_pack(s, p);
    std::cout << "overlap_linear " << g.overlap_linear << "\noverlap_quadratic " << g.overlap_quadratic
              << "\next_linear " << g.ext_linear << "\next_quadratic " << g.ext_quadratic << "\n";
  } else if (gate.tag == RegimeTag::microscopic) {
    const auto mp = micro_pack(s, p);
    std::cout << "overlap_mean " << mp.overlap_mean << "\noverlap_variance " << mp.overlap_variance
              << "\noverlap_fourth " << mp.overlap_fourth << "\np_plus " << mp.p_plus << "\np_minus " << mp.p_minus
              << "\n";
  } else if (gate.tag == RegimeTag::intermediate) {
    const auto z = intermediate_overlap_taylor(s, p, 4);
    for (std::size_t j = 0; j < z.size(); ++j) std::cout << "Z_" << j + 1 << " " << z[j] << "\n";
  }
  return 0;
}

int cmd_regime(const Options& o) {
  const auto p = resolve(o);
  echo("regime", o, p);
  std::cout << classify(p, {}, hint(o)).describe();
  return 0;
}

ReferenceKind reference_for(const Options& o, Statistic st) {
  if (o.reference == "none") return ReferenceKind::none;
  if (o.reference == "std_normal") return ReferenceKind::std_normal;
  if (o.reference == "tw1") return ReferenceKind::tw1;
  if (o.reference == "tanh_law") return ReferenceKind::tanh_law;
  switch (st) {
    case Statistic::free_energy_gaussian: return ReferenceKind::std_normal;
    case Statistic::free_energy_micro: return ReferenceKind::tw1;
    case Statistic::replica_overlap_mean: return ReferenceKind::tanh_law;
    default: return ReferenceKind::none;
  }
}

int cmd_experiment(const Options& o) {
  const auto p = resolve(o);
  echo("experiment", o, p);
  const auto st = parse_statistic(o.statistic);
  if (!st) throw CLI::ValidationError("--statistic", "unknown statistic " + o.statistic);
  ExperimentConfig c;
  c.params = p;
  c.statistic = *st;
  c.n_replicates = o.replicates;
  c.seed_base = o.seed;
  c.reference = reference_for(o, *st);
  c.output_path = o.out;
  c.threads = o.threads;
  try {
    const auto res = run_experiment(c);
    std::cout << summary_json(res.summary, c.statistic, p).dump(2) << "\n";
  } catch (const ExperimentError& e) {
    std::cout << summary_json(e.summary, c.statistic, p).dump(2) << "\n";
    throw Failure(e.what());
  }
  return 0;
}

int cmd_airy(const Options& o) {
  const auto p = resolve(o);
  echo("airy", o, p);
  const double th = o.theta;
  std::ostringstream csv;
  csv << std::setprecision(17) << "xi,Xi\n";
  bool warned = false;
  for (long k = 0; k < o.draws; ++k) {
    const auto f = approximate_airy_field(o.airy_n, o.n_big, replicate_seed(o.seed, k));
    if (!f.edge_safe && !warned) {
      std::cerr << "advisory: n > n_big^(1/4); truncation error is documented, not bounded\n";
      warned = true;
    }
    const auto g = airy_normals(o.airy_n, replicate_seed(o.seed, k));
    csv << xi_limit(f, g, o.beta, th) << "," << Xi_n(f) << "\n";
  }
  if (o.out.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream(o.out) << csv.str();
    std::cout << "wrote " << o.draws << " draws to " << o.out << "\n";
  }
  return 0;
}

int cmd_oracle_check(const Options& o) {
  const auto p = resolve(o);
  echo("oracle-check", o, p);
  const auto s = sample_spectral(p, o.seed);
  const auto z = log_partition_exact(s, p);
  const auto orc = sphere_oracle(s, p, o.draws, o.seed, o.threads);
  const double diff = std::abs(z.log_magnitude - orc.log_Z);
  const double tol = 2 * (orc.log_Z_err + z.error_estimate);
  const bool pass = orc.certified && diff <= tol;
  std::cout << (pass ? "PASS" : "FAIL") << " log_Z contour=" << z.log_magnitude << " oracle=" << orc.log_Z
            << " |diff|=" << diff << " tol=" << tol << " (2*(stderr " << orc.log_Z_err << " + quad "
            << z.error_estimate << ")) ess=" << orc.ess << "\n";
  if (!orc.certified) std::cout << orc.note << "\n";
  return pass ? 0 : 2;
}

int cmd_report(const Options& o) {
  if (o.records.empty()) throw CLI::ValidationError("--records", "report needs --records");
  const auto rec = load(o.records);
  auto vals = ok_values(rec.records);
  std::sort(vals.begin(), vals.end());
  const auto sm = summarize(rec.records);
  std::cout << "# ssk-lab report (" << SSK_GIT_DESCRIBE << ")\nrecords=" << o.records << "\n# ---\n"
            << "statistic " << rec.statistic << "\nrecords " << rec.records.size() << "\nskipped_rows " << rec.skipped
            << "\nfailed " << sm.n_failed << "\nmean " << sm.mean << "\nvar " << sm.var << "\n";
  if (!vals.empty()) {
    auto q = [&](double u) { return vals[std::min(vals.size() - 1, std::size_t(u * vals.size()))]; };
    std::cout << "quantiles 5% " << q(0.05) << " 50% " << q(0.5) << " 95% " << q(0.95) << "\n";
  }
  std::optional<ReferenceDistribution> ref;
  if (o.reference == "std_normal" || (o.reference == "auto" && rec.statistic == "free_energy_gaussian"))
    ref = ReferenceDistribution::std_normal();
  else if (o.reference == "tw1" || (o.reference == "auto" && rec.statistic == "free_energy_micro"))
    ref = tw1_reference(4000, 400, 0x7731ull);
  if (ref && !vals.empty()) std::cout << "ks " << ks_distance(vals, *ref) << " vs " << ref->provenance << "\n";
  if (!o.out.empty()) {
    std::ofstream csv(o.out);
    csv << std::setprecision(17) << "x,empirical_cdf" << (ref ? ",reference_cdf" : "") << "\n";
    for (std::size_t i = 0; i < vals.size(); ++i) {
      csv << vals[i] << "," << double(i + 1) / vals.size();
      if (ref) csv << "," << ref->cdf(vals[i]);
      csv << "\n";
    }
    std::cout << "plot data " << o.out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ssk-lab: exact evaluators, regime predictions and Monte Carlo for the spherical SK model", "ssk_lab"};
  app.set_help_flag("--help", "print this help and exit");
  app.set_config("--config", "", "flat key=value file; flags given on the command line win");
  app.require_subcommand(1);
  Options o;
  app.add_option("--n", o.n, "dimension N")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--beta", o.beta, "inverse temperature")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--h", o.h, "field strength (h-scaling fixed)")->capture_default_str()->check(CLI::NonNegativeNumber);
  app.add_option("--theta", o.theta, "scaled h^2 beta N^alpha (micro, intermediate, custom-alpha)")
      ->capture_default_str();
  app.add_option("--h-scaling", o.h_scaling, "how h is given")
      ->capture_default_str()
      ->check(CLI::IsMember({"fixed", "micro", "intermediate", "custom-alpha"}));
  app.add_option("--alpha", o.alpha, "exponent for custom-alpha")->capture_default_str();
  app.add_option("--seed", o.seed, "disorder seed or seed base")->capture_default_str();
  app.add_option("--replicates", o.replicates, "experiment replicates")->capture_default_str();
  app.add_option("--draws", o.draws, "oracle draws / airy samples")->capture_default_str();
  app.add_option("--statistic", o.statistic, "experiment statistic")
      ->capture_default_str()
      ->check(CLI::IsMember({"free_energy_gaussian", "free_energy_intermediate", "free_energy_micro",
                             "ext_overlap_laplace", "replica_overlap_mean", "replica_overlap_var", "parisi_weights",
                             "quenched_ext_overlap"}));
  app.add_option("--out", o.out, "output file (records, CSV)");
  app.add_option("--threads", o.threads, "worker cap, 0 = all cores")->capture_default_str();
  app.add_option("--ensemble", o.ensemble, "disorder ensemble")
      ->capture_default_str()
      ->check(CLI::IsMember({"zero_diag_M", "full_goe_H", "coupled_pair"}));
  app.add_option("--field", o.field, "field direction")
      ->capture_default_str()
      ->check(CLI::IsMember({"fixed_unit_direction", "uniform_on_sphere"}));
  app.add_option("--reference", o.reference, "KS reference")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "none", "std_normal", "tw1", "tanh_law"}));
  app.add_option("--airy-n", o.airy_n, "Airy truncation n")->capture_default_str();
  app.add_option("--n-big", o.n_big, "GOE size behind the Airy field")->capture_default_str();
  app.add_option("--records", o.records, "records file for report");
  app.footer("Environment: SSK_LAB_CACHE sets the TW1 reference cache directory.\n"
             "Exit codes: 0 success, 1 usage, 2 numeric failure.");

  std::map<std::string, int (*)(const Options&)> cmds{
      {"sample", cmd_sample},     {"free-energy", cmd_free_energy}, {"overlap", cmd_overlap},
      {"regime", cmd_regime},     {"experiment", cmd_experiment},   {"airy", cmd_airy},
      {"oracle-check", cmd_oracle_check}, {"report", cmd_report}};
  const std::map<std::string, std::string> about{
      {"sample", "spectral summary and diagnostics"},
      {"free-energy", "exact and regime-predicted free energy"},
      {"overlap", "exact overlap moments and regime formulas"},
      {"regime", "active regime and gate margins"},
      {"experiment", "Monte Carlo over disorder"},
      {"airy", "draw xi and Xi from the Airy approximation"},
      {"oracle-check", "small-N contour vs sphere oracle"},
      {"report", "aggregate a records file"}};
  for (auto& [name, fn] : cmds) app.add_subcommand(name, about.at(name))->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return cmds.at(name)(o);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const RegimeError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n" << e.report.describe();
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 2;
  }
}
