#include "ssk/experiments.hpp"

#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

using namespace ssk;
using Catch::Approx;

namespace {

std::string tmp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / (std::string("ssk-test-") + name)).string();
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("single replicate smoke", "[experiments]") {
  ExperimentConfig c;
  c.params = ModelParams::make(100, 0.5, std::pow(100.0, -0.2));
  c.statistic = Statistic::free_energy_gaussian;
  c.n_replicates = 1;
  c.seed_base = 7;
  const auto r = run_experiment(c);
  REQUIRE(r.records.size() == 1);
  REQUIRE(r.records[0].ok);
  CHECK(r.summary.n == 1);
  CHECK(r.summary.mean == r.records[0].value);
  CHECK(r.summary.var == 0.0);
  CHECK(r.records[0].seed == replicate_seed(7, 0));
  c.n_replicates = 0;
  CHECK_THROWS(run_experiment(c));
}

TEST_CASE("statistic must match the regime", "[experiments]") {
  ExperimentConfig c;
  c.params = ModelParams::make(100, 0.5, std::pow(100.0, -0.2));
  c.statistic = Statistic::free_energy_micro;
  CHECK_THROWS_AS(run_experiment(c), RegimeError);
  c.statistic = Statistic::free_energy_gaussian;
  c.output_path = "/nonexistent-dir/out.jsonl";
  CHECK_THROWS(run_experiment(c));
}

TEST_CASE("statistic names round trip", "[experiments]") {
  for (auto [k, name] : statistic_names) {
    CHECK(parse_statistic(name) == k);
    CHECK(std::string(to_string(k)) == name);
  }
  CHECK_FALSE(parse_statistic("free_energy"));
}

TEST_CASE("persist and load", "[experiments]") {
  const auto p = ModelParams::make(50, 0.7, 0.1);
  std::vector<ExperimentRecord> recs(1000);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    auto& r = recs[i];
    r.seed = gen();
    r.value = nd(gen) * std::pow(10.0, double(int(i % 40) - 20));
    r.saddle = 2 + std::abs(nd(gen));
    r.aux1 = nd(gen);
    r.aux2 = i % 7 ? nd(gen) : std::nan("");
    r.rigidity = i % 3;
    r.delocalization = i % 5;
    r.scaled_gap = std::abs(nd(gen));
    r.millis = 0.1 * i;
    if (i % 97 == 0) {
      r.ok = false;
      r.reason = "solver: \"quoted\" reason";
      r.value = std::nan("");
    }
  }
  const auto path = tmp_path("records.jsonl");
  persist(recs, path, Statistic::free_energy_gaussian, p);
  auto back = load(path);
  REQUIRE(back.records.size() == recs.size());
  CHECK(back.statistic == "free_energy_gaussian");
  CHECK(back.params.at("n_dim") == 50);
  CHECK(back.skipped == 0);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto &a = recs[i], &b = back.records[i];
    CHECK(a.seed == b.seed);
    CHECK(a.ok == b.ok);
    CHECK(a.reason == b.reason);
    CHECK((same_bits(a.value, b.value) || (std::isnan(a.value) && std::isnan(b.value))));
    CHECK(same_bits(a.saddle, b.saddle));
    CHECK(same_bits(a.aux1, b.aux1));
    CHECK((same_bits(a.aux2, b.aux2) || (std::isnan(a.aux2) && std::isnan(b.aux2))));
    CHECK(a.rigidity == b.rigidity);
    CHECK(a.delocalization == b.delocalization);
    CHECK(same_bits(a.scaled_gap, b.scaled_gap));
    CHECK(same_bits(a.millis, b.millis));
  }

  // append
  persist(std::vector(recs.begin(), recs.begin() + 10), path, Statistic::free_energy_gaussian, p, true);
  CHECK(load(path).records.size() == 1010);

  // corrupt a middle row
  std::vector<std::string> lines;
  {
    std::ifstream in(path);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
  }
  lines[500] = lines[500].substr(0, lines[500].size() / 2);
  {
    std::ofstream out(path, std::ios::trunc);
    for (auto& l : lines) out << l << '\n';
  }
  back = load(path);
  CHECK(back.skipped == 1);
  CHECK(back.records.size() == 1009);

  {
    std::ofstream out(path, std::ios::trunc);
    out << "ssk-lab v2 free_energy_gaussian {}\n";
  }
  CHECK_THROWS(load(path));
  {
    std::ofstream out(path, std::ios::trunc);
    out << "{\"seed\": 1}\n";
  }
  CHECK_THROWS(load(path));
  std::filesystem::remove(path);
}

TEST_CASE("experiment writes records and a summary", "[experiments]") {
  ExperimentConfig c;
  c.params = ModelParams::make(60, 0.5, std::pow(60.0, -0.2));
  c.statistic = Statistic::quenched_ext_overlap;
  c.n_replicates = 8;
  c.output_path = tmp_path("exp.jsonl");
  const auto r = run_experiment(c);
  const auto back = load(c.output_path);
  REQUIRE(back.records.size() == 8);
  for (int i = 0; i < 8; ++i) CHECK(same_bits(back.records[i].value, r.records[i].value));
  std::ifstream sj(c.output_path + ".summary.json");
  const auto j = nlohmann::json::parse(sj);
  CHECK(j.at("n") == 8);
  CHECK(j.contains("git_describe"));
  CHECK(j.contains("ks"));
  std::filesystem::remove(c.output_path);
  std::filesystem::remove(c.output_path + ".summary.json");
}

TEST_CASE("summary is identical on any thread count", "[experiments]") {
  ExperimentConfig c;
  c.params = ModelParams::make(80, 0.5, std::pow(80.0, -0.2));
  c.statistic = Statistic::free_energy_gaussian;
  c.n_replicates = 24;
  c.seed_base = 99;
  c.reference = ReferenceKind::std_normal;
  c.threads = 1;
  const auto a = run_experiment(c);
  c.threads = 4;
  const auto b = run_experiment(c);
  CHECK(same_bits(a.summary.mean, b.summary.mean));
  CHECK(same_bits(a.summary.var, b.summary.var));
  CHECK(same_bits(a.ks, b.ks));
  for (int i = 0; i < c.n_replicates; ++i) CHECK(same_bits(a.records[i].value, b.records[i].value));
}

TEST_CASE("sphere oracle at beta -> 0", "[experiments]") {
  const auto p = ModelParams::make(8, 1e-12, 0.0);
  const auto s = sample_spectral(p, 2);
  const auto o = sphere_oracle(s, p, 256000, 1, 1);
  CHECK(std::abs(o.log_Z) < 1e-9);
  CHECK(std::abs(o.moment(1)) <= 3 * o.moment_err(1));
  // uniform measure: E q^2 = 1/N
  CHECK(std::abs(o.moment(2) - 1.0 / 8) <= 3 * o.moment_err(2));
  CHECK(o.ess == Approx(256000).epsilon(1e-6));
}

TEST_CASE("sphere oracle: Cauchy-Schwarz, jackknife scaling, guards", "[experiments]") {
  const auto p = ModelParams::make(6, 0.8, 0.3);
  const auto s = sample_spectral(p, 4);
  const auto a = sphere_oracle(s, p, 256000, 10, 1);
  const auto b = sphere_oracle(s, p, 1024000, 11, 1);
  for (const auto* o : {&a, &b}) {
    CHECK(o->moment(2) >= o->moment(1) * o->moment(1) - 2 * (o->moment_err(2) + 2 * std::abs(o->moment(1)) * o->moment_err(1)));
    CHECK(o->moment(4) >= o->moment(2) * o->moment(2) - 2 * (o->moment_err(4) + 2 * o->moment(2) * o->moment_err(2)));
  }
  // stderr ratio across a 4x draw increase is 1/2 within a factor 2
  for (int k : {1, 2}) {
    const double r = b.moment_err(k) / a.moment_err(k);
    CHECK(r >= 0.25);
    CHECK(r <= 1.0);
  }
  const double rz = b.log_Z_err / a.log_Z_err;
  CHECK(rz >= 0.25);
  CHECK(rz <= 1.0);

  CHECK_THROWS(sphere_oracle(sample_spectral(ModelParams::make(25, 0.5, 0), 1), ModelParams::make(25, 0.5, 0), 1000, 1));
  // low temperature: weights overflow or effective sample size collapses
  const auto pc = ModelParams::make(12, 40.0, 0.0);
  const auto sc_ = sample_spectral(pc, 1);
  bool refused = false;
  try {
    refused = !sphere_oracle(sc_, pc, 12800, 1, 1).certified;
  } catch (const std::domain_error&) {
    refused = true;
  }
  CHECK(refused);
}

TEST_CASE("Parisi weight mean against the Gaussian-integral oracle", "[experiments]") {
  const double beta = 2, theta = 1;
  ExperimentConfig c;
  c.params = ModelParams::from_scaled_theta(200, beta, theta, 1.0);
  c.statistic = Statistic::parisi_weights;
  c.n_replicates = 400;
  c.seed_base = 555;
  const auto r = run_experiment(c);
  // E[1/2 + 1/2 tanh^2(sqrt(Z^2 theta (beta - 1)))]
  const double want = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double z) {
        return (0.5 + 0.5 * std::pow(std::tanh(std::abs(z) * std::sqrt(theta * (beta - 1))), 2)) *
               std::exp(-z * z / 2) / std::sqrt(2 * std::numbers::pi);
      },
      -12.0, 12.0, 15, 1e-14);
  INFO("mean p+ " << r.summary.mean << " oracle " << want);
  CHECK(std::abs(r.summary.mean - want) <= 0.03);
  CHECK(r.summary.n_failed == 0);
}
