#include <catch_amalgamated.hpp>

#include <bit>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "chtumor/config.hpp"
#include "chtumor/io.hpp"
#include "test_support.hpp"

using namespace chtumor;
using chtumor::test::random_field;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("chtumor_test_config_io_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

RunConfig random_config(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RunConfig c;
  c.params = {0.1 + 3 * u(rng), 0.1 + 3 * u(rng), 0.5 + u(rng), 0.05 + u(rng), 0.01 + 0.98 * u(rng)};
  c.h_star = u(rng);
  c.phi_star = -1.0 - 2 * u(rng);
  const int dim = 1 + static_cast<int>(rng() % 3);
  c.cells.assign(dim, 0);
  c.lengths.assign(dim, 0.0);
  for (int a = 0; a < dim; ++a) {
    c.cells[a] = 2 + static_cast<int>(rng() % 30);
    c.lengths[a] = 0.1 + 5 * u(rng);
  }
  c.scheme.dt = 1e-4 + 1e-2 * u(rng);
  if (rng() % 2) c.scheme.stabilization = 3 * u(rng);
  c.scheme.linear_tol = 1e-12 + 1e-6 * u(rng);
  c.scheme.max_steps = 1 + rng() % 100000;
  c.scheme.monitor_stride = 1 + rng() % 50;
  c.scheme.solver = rng() % 2 ? LinearSolver::cg : LinearSolver::spectral;
  c.scheme.envelope_tol = u(rng) * 1e-2;
  c.scheme.divergence_threshold = 1e3 + 1e7 * u(rng);
  c.t_end = 10 * u(rng);
  switch (rng() % 3) {
    case 0: c.initial = ConstantInitial{-3 + 6 * u(rng), u(rng)}; break;
    case 1: c.initial = TanhInitial{0.01 + u(rng), static_cast<int>(rng() % dim), u(rng), u(rng)}; break;
    default: c.initial = RandomInitial{u(rng) - 0.5, u(rng), u(rng), u(rng), rng()}; break;
  }
  switch (rng() % 3) {
    case 0: c.potential.kind = PotentialKind::quartic; break;
    case 1: c.potential.kind = PotentialKind::piecewise_demo; break;
    default:
      c.potential.kind = PotentialKind::custom;
      c.potential.beta = {1.0 + u(rng), u(rng), 0.1 + u(rng)};
      c.potential.lambda = u(rng);
  }
  c.out_dir = "out_" + std::to_string(rng() % 1000);
  if (rng() % 2) c.radius = 1 + 100 * u(rng);
  c.snapshot_stride = rng() % 5;
  return c;
}

}  // namespace

TEST_CASE("number formatting", "[io]") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-20) == "-2.4999999999999999e-20");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::bit_cast<double>(rng() & 0xbfefffffffffffffULL);
    double back;
    REQUIRE(parse_double(format_double(v), back));
    CHECK(std::bit_cast<std::uint64_t>(back) == std::bit_cast<std::uint64_t>(v));
  }
  double x;
  CHECK_FALSE(parse_double("1.5x", x));
  CHECK_FALSE(parse_double("", x));
  CHECK(parse_double("+2", x));
  CHECK(x == 2.0);
}

TEST_CASE("config defaults and parsing", "[config]") {
  const auto c = parse_run_config(std::string(
      "# reference parameters\n[params]\nP = 1\nA = 1\nB = 1\nC = 0.5\nsigma_s = 0.5\n\n"
      "[h]\nh_star = 0.5   # comment\nphi_star = -2\n[grid]\ncells = 32, 16\nlengths = 2,1\n"
      "[scheme]\ndt = 1e-3\nstabilization = auto\n[initial]\nkind = random\nseed = 9\n"));
  CHECK(c.params == Params{1.0, 1.0, 1.0, 0.5, 0.5});
  CHECK(c.cells == std::vector<int>{32, 16});
  CHECK(c.grid().spacing(0) == 2.0 / 32);
  CHECK_FALSE(c.scheme.stabilization);
  REQUIRE(std::holds_alternative<RandomInitial>(c.initial));
  CHECK(std::get<RandomInitial>(c.initial).seed == 9);
  CHECK(parse_run_config(std::string("")) == RunConfig{});
}

TEST_CASE("config errors", "[config]") {
  auto bad = [](const std::string& text, const std::string& fragment) {
    try {
      (void)parse_run_config(text);
      FAIL("expected a ConfigError for: " << text);
    } catch (const ConfigError& e) {
      INFO(e.what());
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  bad("[params]\nPP = 1\n", "line 2");
  bad("[params]\nP = 1\nP = 2\n", "duplicate");
  bad("[nonsense]\n", "unknown section");
  bad("P = 1\n", "outside");
  bad("[params]\nP\n", "line 2");
  bad("[params]\nP = one\n", "[params] P");
  bad("[params]\nsigma_s = 1.5\n", "sigma_s");
  bad("[grid]\ncells = 4,4\nlengths = 1\n", "same number");
  bad("[potential]\nlambda = 2\n", "polynomial");
  bad("[initial]\nkind = constant\nseed = 3\n", "seed");
  bad("[scheme]\ndt = 10\n", "dt*C*h_star");
  bad("[h]\nphi_star = -0.5\n", "phi_star");
  bad("[initial]\nkind = tanh\naxis = 1\n", "axis");
}

TEST_CASE("config round trip", "[config][property]") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 300; ++i) {
    const RunConfig c = random_config(rng);
    const std::string text = serialize(c);
    INFO(text);
    const RunConfig back = parse_run_config(text);
    CHECK(back == c);
    CHECK(serialize(back) == text);
  }
  SweepConfig s;
  s.base = random_config(rng);
  s.axes = {{"A", 0.1, 2.0, 5}, {"sigma_s", 0.1, 0.9, 3}};
  s.action = SweepAction::ode_trajectory;
  CHECK(parse_sweep_config(serialize(s)) == s);
}

TEST_CASE("sweep config validation", "[config]") {
  CHECK_THROWS_AS(parse_sweep_config(std::string("[sweep]\naxis1 = A,0,1,3\n")), ConfigError);
  CHECK_THROWS_AS(parse_sweep_config(std::string("[sweep]\naxis1 = A,0.1,1,1\n")), ConfigError);
  CHECK_THROWS_AS(parse_sweep_config(std::string("[sweep]\naxis1 = Q,0.1,1,3\n")), ConfigError);
  CHECK_THROWS_AS(parse_sweep_config(std::string("[sweep]\naction = pde_run\n")), ConfigError);
  CHECK_THROWS_AS(parse_sweep_config(std::string("[sweep]\naxis1 = sigma_s,0.1,1,3\n")), ConfigError);
  const auto s = parse_sweep_config(std::string("[sweep]\naxis1 = h_star, 0, 1, 11\n"));
  REQUIRE(s.axes.size() == 1);
  CHECK(s.axes[0].value(10) == 1.0);
  CHECK(s.axes[0].value(5) == 0.5);
}

TEST_CASE("environment overrides", "[config]") {
  ::setenv("CHTUMOR_PARAMS_A", "0.75", 1);
  ::setenv("CHTUMOR_INITIAL_KIND", "random", 1);
  std::istringstream is("[params]\nA = 2\n");
  const auto c = parse_run_config(is);
  CHECK(c.params.A == 0.75);
  CHECK(std::holds_alternative<RandomInitial>(c.initial));
  // the string overload ignores the environment
  CHECK(parse_run_config(std::string("[params]\nA = 2\n")).params.A == 2.0);
  ::setenv("CHTUMOR_PARAMS_A", "x", 1);
  std::istringstream again("");
  try {
    (void)parse_run_config(again);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("environment") != std::string::npos);
  }
  ::unsetenv("CHTUMOR_PARAMS_A");
  ::unsetenv("CHTUMOR_INITIAL_KIND");
}

TEST_CASE("snapshot round trip", "[io]") {
  const auto dir = scratch("snap");
  for (const auto& g : {GridSpec::line(17, 0.3), GridSpec::square(5, 2.0),
                        GridSpec::make(std::array<int, 3>{2, 3, 4}, std::array<double, 3>{0.1, 1.0, 7.0})}) {
    Field f = random_field(g, 3, -1e3, 1e3);
    f[0] = 1e-300;
    f[1] = -0.0;
    write_snapshot(dir / "f.snap", f, "phi", 0.1 + 0.2);
    const Snapshot s = read_snapshot(dir / "f.snap");
    CHECK(s.name == "phi");
    CHECK(s.t == 0.1 + 0.2);
    CHECK(s.field.grid() == g);
    for (std::size_t i = 0; i < f.size(); ++i)
      CHECK(std::bit_cast<std::uint64_t>(s.field[i]) == std::bit_cast<std::uint64_t>(f[i]));
  }
  {
    std::ofstream bad(dir / "bad.snap");
    bad << "CHTUMOR-SNAPSHOT 1\nfield phi\ndim 1\ncells 3\nlengths 1\ntime 0\n1\n2\n";
  }
  CHECK_THROWS_AS(read_snapshot(dir / "bad.snap"), ConfigError);
  CHECK_THROWS_AS(read_snapshot(dir / "missing.snap"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("series csv", "[io]") {
  const auto dir = scratch("csv");
  MonitorRow a;
  a.t = 0.1;
  a.energy = 1.0 / 3.0;
  a.env_upper = std::nan("");
  a.violations = 4;
  write_series_csv(dir / "s.csv", std::vector<MonitorRow>{a});
  std::ifstream is(dir / "s.csv");
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  CHECK(header ==
        "t,energy,x_magnitude,mass,sigma_min,sigma_max,grad_mu_sq,lap_phi_sq,env_lower,env_upper,"
        "violations");
  CHECK(row == "0.10000000000000001,0.33333333333333331,0,0,0,0,0,0,0,nan,4");
  std::filesystem::remove_all(dir);
}
