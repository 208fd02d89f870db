#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dmcc/config.hpp"
#include "dmcc/csv.hpp"
#include "dmcc/experiment.hpp"

using namespace dmcc;
using namespace dmcc::experiment;

namespace {

diffusion::AlgorithmConfig algo(std::string name, diffusion::Criterion c, diffusion::Mode mode, double eta) {
  diffusion::AlgorithmConfig a;
  a.name = std::move(name);
  a.mode = mode;
  a.params.criterion = c;
  a.params.eta = eta;
  if (mode != diffusion::Mode::noncoop) {
    (mode == diffusion::Mode::cta ? a.beta : a.delta) = network::CombinationRule::metropolis;
  }
  return a;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.topology = {6, 1.0, 0.6, std::nullopt, std::nullopt};
  c.model.m = 3;
  c.run = {120, 8, 77, 40};
  c.algorithms = {algo("mcc", diffusion::Criterion::mcc, diffusion::Mode::atc, 0.06),
                  algo("lms", diffusion::Criterion::lms, diffusion::Mode::cta, 0.03),
                  algo("lmp", diffusion::Criterion::lmp, diffusion::Mode::atc, 0.03)};
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("network MSD") {
  const Vector w_o = Vector::Ones(2);
  const std::vector<Vector> w{(Vector(2) << 1.1, 1.1).finished(), (Vector(2) << 0.9, 1.1).finished()};
  const auto v = network_msd(w, w_o);
  CHECK(v.linear == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(v.db == doctest::Approx(-16.9897).epsilon(1e-5));
  const std::vector<Vector> exact{w_o, w_o};
  CHECK(network_msd(exact, w_o).db == doctest::Approx(-300.0));
  CHECK(msd_to_db(0.0) == doctest::Approx(-300.0));
}

TEST_CASE("steady-state MSD averages the tail in the linear domain") {
  const std::vector<double> traj{1.0, 1.0, 0.01, 0.014};
  CHECK(steady_state_msd(traj, 2) == doctest::Approx(-19.2082).epsilon(1e-5));
  CHECK(steady_state_msd(traj, 4) == doctest::Approx(10.0 * std::log10(2.024 / 4.0)));
  CHECK_THROWS(steady_state_msd(traj, 5));
}

TEST_CASE("Monte Carlo runs are reproducible and paired") {
  const auto config = small_config();
  RunOptions opts;
  opts.keep_per_run = true;
  const auto a = run_monte_carlo(config, opts);
  opts.threads = 1;
  const auto b = run_monte_carlo(config, opts);
  for (std::size_t i = 0; i < a.algorithms.size(); ++i) {
    CHECK(a.algorithms[i].msd_linear == b.algorithms[i].msd_linear);
    CHECK(a.algorithms[i].node_steady_db == b.algorithms[i].node_steady_db);
  }

  SUBCASE("algorithm order does not matter") {
    auto swapped = config;
    std::swap(swapped.algorithms[0], swapped.algorithms[2]);
    const auto c = run_monte_carlo(swapped, opts);
    for (const auto& r : a.algorithms) CHECK(c.find(r.name).msd_linear == r.msd_linear);
  }
  SUBCASE("dropping an algorithm leaves the rest untouched") {
    auto fewer = config;
    fewer.algorithms.erase(fewer.algorithms.begin() + 1);
    const auto c = run_monte_carlo(fewer, opts);
    CHECK(c.find("mcc").msd_linear == a.find("mcc").msd_linear);
    CHECK(c.find("lmp").msd_linear == a.find("lmp").msd_linear);
  }
  SUBCASE("more runs extend the same sequence") {
    auto more = config;
    more.run.monte_carlo_runs = 12;
    const auto c = run_monte_carlo(more, opts);
    for (std::size_t r = 0; r < 8; ++r) CHECK(c.find("mcc").per_run_msd[r] == a.find("mcc").per_run_msd[r]);
  }
  SUBCASE("ensemble is the linear mean of the runs") {
    const auto& r = a.find("lms");
    REQUIRE(r.per_run_msd.size() == 8);
    for (std::size_t i = 0; i < config.run.iterations; ++i) {
      double s = 0.0;
      for (const auto& run : r.per_run_msd) s += run[i];
      CHECK(r.msd_linear[i] == doctest::Approx(s / 8.0).epsilon(1e-12));
      CHECK(r.msd_db[i] == doctest::Approx(10.0 * std::log10(r.msd_linear[i])).epsilon(1e-12));
    }
  }
  SUBCASE("a different master seed changes the data") {
    auto other = config;
    other.run.seed = 78;
    CHECK(run_monte_carlo(other, opts).find("mcc").msd_linear != a.find("mcc").msd_linear);
  }
}

TEST_CASE("noiseless data drive every criterion to the true weights") {
  auto config = small_config();
  config.noise.kind = signal::NoiseKind::gaussian;
  config.noise.gaussian_variance = 0.0;
  config.run.iterations = 1500;
  config.run.monte_carlo_runs = 2;
  for (auto& a : config.algorithms) a.params.eta = 0.05;
  // p < 2 keeps a step-size floor (eta |e|^(p-2) grows as e -> 0).
  config.algorithms[2].params.p = 2.0;
  auto mee = algo("mee", diffusion::Criterion::mee, diffusion::Mode::atc, 0.1);
  mee.params.window = 6;
  config.algorithms.push_back(mee);
  const auto r = run_monte_carlo(config);
  for (const auto& a : r.algorithms) {
    CAPTURE(a.name);
    CHECK(a.steady_db < -60.0);
    CHECK(a.diverged_runs == 0);
  }
}

TEST_CASE("diverging runs are flagged and pinned to the sentinel") {
  auto config = small_config();
  config.algorithms = {algo("wild", diffusion::Criterion::lms, diffusion::Mode::atc, 5.0),
                       algo("calm", diffusion::Criterion::mcc, diffusion::Mode::atc, 0.06)};
  const auto r = run_monte_carlo(config);
  const auto& wild = r.find("wild");
  CHECK(wild.diverged_runs == config.run.monte_carlo_runs);
  for (const auto& at : wild.diverged_at) CHECK(at.has_value());
  CHECK(wild.msd_db.back() == doctest::Approx(kDivergedMsdDb));
  CHECK(r.find("calm").diverged_runs == 0);
  CHECK(std::isfinite(r.find("calm").steady_db));
}

TEST_CASE("parameter sweep") {
  auto config = small_config();
  config.run.iterations = 60;
  config.run.steady_window = 20;
  config.run.monte_carlo_runs = 3;

  const auto none = parameter_sweep(config, {});
  CHECK(none.parameters.empty());
  REQUIRE(none.rows.size() == 3);
  const auto base = run_monte_carlo(config);
  for (const auto& row : none.rows) CHECK(row.msd_db == base.find(row.algorithm).steady_db);

  const auto grid = parameter_sweep(config, {{"sigma", {0.5, 2.0}}, {"c", {0.1, 0.4}}});
  CHECK(grid.parameters == std::vector<std::string>{"sigma", "c"});
  REQUIRE(grid.rows.size() == 12);
  CHECK(grid.rows[0].values == std::vector<double>{0.5, 0.1});
  CHECK(grid.rows[3].values == std::vector<double>{0.5, 0.4});
  CHECK(grid.rows[6].values == std::vector<double>{2.0, 0.1});
  const auto point = run_monte_carlo(apply_parameter(apply_parameter(config, "sigma", 2.0), "c", 0.4));
  CHECK(grid.rows[9].msd_db == point.find(grid.rows[9].algorithm).steady_db);

  CHECK_THROWS_AS(parameter_sweep(config, {{"gamma", {1.0}}}), UnknownParameterError);
  CHECK_THROWS_AS(apply_parameter(config, "L", 2.5), std::invalid_argument);
  CHECK(apply_parameter(config, "alpha", 1.6).noise.stable.alpha() == 1.6);
  CHECK(apply_parameter(config, "eta", 0.2).algorithms[1].params.eta == 0.2);
}

TEST_CASE("regressor variances expand") {
  ModelSpec spec;
  CHECK(node_regressor_variances(spec, 3) == std::vector<double>{1.0, 1.0, 1.0});
  spec.regressor_variance = {0.5, 1.0};
  CHECK_THROWS(node_regressor_variances(spec, 3));
}

TEST_CASE("config documents") {
  const auto c = config::load_config(std::filesystem::path(DMCC_CONFIG_DIR) / "default.json");
  CHECK(c.topology.n == 20);
  CHECK(c.model.m == 10);
  CHECK(c.algorithms.size() == 8);
  CHECK(c.algorithms[0].params.criterion == diffusion::Criterion::mcc);
  CHECK(c.noise.stable.alpha() == 1.2);

  const auto echo = config::to_json(c);
  CHECK(config::to_json(config::parse_config(echo.dump())) == echo);

  CHECK_THROWS_AS(config::parse_config(R"({"topology": {"n": 5, "radious": 0.3}})"), config::ConfigError);
  CHECK_THROWS_AS(config::parse_config(R"({"noise": {"kind": "laplace"}})"), config::ConfigError);
  CHECK_THROWS_AS(config::parse_config(R"({"run": {"iterations": -4}})"), config::ConfigError);
  CHECK_THROWS_AS(config::parse_config("{not json"), config::ConfigError);
  CHECK_THROWS_AS(config::load_config("/nonexistent/dmcc.json"), std::exception);

  for (const auto& entry : std::filesystem::directory_iterator(DMCC_CONFIG_DIR)) {
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(config::load_config(entry.path()).validate());
  }
}

TEST_CASE("csv formatting") {
  CHECK(io::format_db(-16.98970004) == "-16.989700");
  CHECK(io::format_db(100.0) == "100.000000");

  const auto t = io::parse_csv("a,b\n1,2.5\n3,4\n");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  CHECK(t.number(0, t.column("b")) == 2.5);
  CHECK_THROWS_AS(t.column("z"), io::SchemaError);
  CHECK(io::format_csv(t) == "a,b\n1,2.5\n3,4\n");

  auto config = small_config();
  config.run.iterations = 30;
  config.run.steady_window = 10;
  config.run.monte_carlo_runs = 2;
  const auto r = run_monte_carlo(config);
  const auto curves = io::curves_table(r);
  CHECK(curves.header == std::vector<std::string>{"iteration", "mcc_msd_db", "lms_msd_db", "lmp_msd_db"});
  CHECK(curves.rows.size() == 30);
  CHECK(curves.rows.front().front() == "1");
  CHECK(curves.number(4, 2) == doctest::Approx(r.find("lms").msd_db[4]).epsilon(1e-6));
  const auto steady = io::steady_state_table(r);
  CHECK(steady.header.front() == "node");
  CHECK(steady.rows.size() == 6);
  CHECK(steady.rows.back().front() == "6");
}

TEST_CASE("topology csv round trip") {
  const auto t = build_topology(small_config());
  const auto text = io::format_topology_csv(t);
  const auto back = io::parse_topology_csv(text);
  REQUIRE(back.size() == t.size());
  CHECK(back.edges() == t.edges());
  for (std::size_t k = 0; k < t.size(); ++k) {
    CHECK(back.positions()[k].x == doctest::Approx(t.positions()[k].x).epsilon(1e-9));
  }

  auto imported = small_config();
  const auto path = std::filesystem::temp_directory_path() / "dmcc_topology_roundtrip.csv";
  io::write_text_file(path, text);
  imported.topology.file = path.string();
  CHECK(build_topology(imported).edges() == t.edges());
  CHECK(slurp(path) == text);
  std::filesystem::remove(path);
}
