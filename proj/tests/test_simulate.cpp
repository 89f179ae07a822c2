#include <doctest.h>

#include <cmath>

#include <mic/errors.hpp>
#include <mic/moments.hpp>
#include <mic/simulate.hpp>
#include <mic/state.hpp>

#include "support/stats.hpp"

using namespace mic;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig config;
  config.n_users = 12;
  config.n_cascades = 3;
  config.edge_prob = 0.15;
  config.max_weight = 0.6;
  config.max_baseline = 0.25;
  config.tau = 1.5;
  config.mixing = {MixingKind::boltzmann, 4.0};
  config.max_spectral_radius = 0.8;
  return config;
}

}  // namespace

TEST_CASE("scenario generation is deterministic in the seed") {
  const auto config = small_config();
  const Scenario a = generate_scenario(config, 7);
  const Scenario b = generate_scenario(config, 7);
  const Scenario c = generate_scenario(config, 8);

  CHECK(a.graph.weights() == b.graph.weights());
  CHECK(a.params.baselines == b.params.baselines);
  CHECK(a.graph.weights() != c.graph.weights());

  CHECK(a.params.sigma.isIdentity(0.0));
  CHECK((a.params.baselines.array() <= config.max_baseline).all());
  CHECK((a.graph.weights().array() <= config.max_weight).all());
  CHECK(a.graph.weights().diagonal().isZero(0.0));
}

TEST_CASE("scenario generation enforces the stability bound or gives up") {
  auto config = small_config();
  config.edge_prob = 0.2;  // marginal: many draws land past the bound
  config.max_spectral_radius = 0.9;

  // Unconstrained generation takes the first draw; find a seed whose first
  // draw violates the bound, then check the constrained path fixes it.
  auto unconstrained = config;
  unconstrained.max_spectral_radius = 0.0;
  std::uint64_t seed = 0;
  double first_rho_tau = 0.0;
  for (; seed < 50; ++seed) {
    const Scenario first = generate_scenario(unconstrained, seed);
    first_rho_tau = spectral_radius(first.graph.weights()) * config.tau;
    if (first_rho_tau > 0.9) break;
  }
  REQUIRE(first_rho_tau > 0.9);

  const Scenario s = generate_scenario(config, seed);
  CHECK(spectral_radius(s.graph.weights()) * config.tau <= 0.9);

  config.edge_prob = 0.5;  // dense graphs always carry heavy cycles
  config.max_spectral_radius = 1e-6;
  config.max_redraws = 8;
  CHECK_THROWS_AS((void)generate_scenario(config, 3), NumericalError);
}

TEST_CASE("simulation is deterministic in the seed and respects the window") {
  const Scenario s = generate_scenario(small_config(), 19);
  Rng r1(100), r2(100), r3(101);
  const EventLog a = simulate(s.params, s.graph, 40.0, r1);
  const EventLog b = simulate(s.params, s.graph, 40.0, r2);
  const EventLog c = simulate(s.params, s.graph, 40.0, r3);

  REQUIRE(a.size() > 50);
  CHECK(a.events() == b.events());
  CHECK(a.events() != c.events());
  CHECK(a.horizon() == 40.0);
  CHECK_NOTHROW(a.check_ids(12, 3));
  for (std::size_t i = 1; i < a.size(); ++i) {
    CHECK(a.events()[i - 1].time <= a.events()[i].time);
  }
  for (const Event& e : a.events()) {
    CHECK(e.time > 0.0);
    CHECK(e.time <= 40.0);
  }
}

TEST_CASE("with no edges the process is Poisson with the baseline rate") {
  const int n_u = 6;
  const int n_c = 2;
  ModelParams params;
  params.baselines = Eigen::MatrixXd::Constant(n_u, n_c, 0.15);
  params.baselines.col(1).setConstant(0.05);
  params.sigma = Eigen::MatrixXd::Identity(n_c, n_c);
  params.kernel.tau = 2.0;
  params.mixing = {MixingKind::linear, 0.0};
  const UserGraph graph{Eigen::MatrixXd::Zero(n_u, n_u)};

  Rng rng(42);
  const double horizon = 2000.0;
  const EventLog log = simulate(params, graph, horizon, rng);

  // Superposed process is Poisson(total rate); inter-event gaps are then
  // exponential. KS against that law.
  const double rate = params.baselines.sum();
  std::vector<double> gaps;
  double prev = 0.0;
  for (const Event& e : log.events()) {
    gaps.push_back((e.time - prev) * rate);
    prev = e.time;
  }
  const auto ks = mic::test::ks_test(gaps, mic::test::exponential_cdf);
  CHECK(ks.p_value > 0.01);

  // Per-user counts against their Poisson expectations.
  std::vector<double> observed(n_u, 0.0);
  for (const Event& e : log.events()) observed[static_cast<std::size_t>(e.user)] += 1.0;
  std::vector<double> expected(n_u, 0.2 * horizon);
  const double stat = mic::test::chi_squared_statistic(observed, expected);
  CHECK(mic::test::chi_squared_sf(stat, n_u) > 0.01);
}

TEST_CASE("cascade marks follow the mixing density") {
  // One isolated user: contextual intensities stay at the baselines, so the
  // mark distribution is constant in time and exactly computable.
  ModelParams params;
  params.baselines = Eigen::MatrixXd(1, 3);
  params.baselines << 0.5, 0.3, 0.2;
  params.sigma = Eigen::MatrixXd::Identity(3, 3);
  params.kernel.tau = 1.0;
  params.mixing = {MixingKind::boltzmann, 3.0};
  const UserGraph graph{Eigen::MatrixXd::Zero(1, 1)};

  Rng rng(7);
  const EventLog log = simulate(params, graph, 6000.0, rng);
  REQUIRE(log.size() > 4000);

  const auto state = IntensityState::zero(1, 3);
  const Eigen::VectorXd f = mixing_density(params, state, 0);
  Eigen::VectorXd observed = Eigen::VectorXd::Zero(3);
  for (const Event& e : log.events()) observed(e.cascade) += 1.0;
  observed /= static_cast<double>(log.size());

  CHECK(0.5 * (observed - f).cwiseAbs().sum() <= 0.02);  // total variation
}

TEST_CASE("warm-start context drives the window intensity") {
  // 0 -> 1 edge only; user 1 is then an inhomogeneous Poisson process whose
  // rate adds the decayed context kick, so the window count has a closed form.
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 2);
  w(0, 1) = 3.0;
  const UserGraph graph(w);
  ModelParams params;
  params.baselines = Eigen::MatrixXd::Zero(2, 1);
  params.baselines(1, 0) = 0.4;
  params.sigma = Eigen::MatrixXd::Identity(1, 1);
  params.kernel.tau = 2.0;
  params.mixing = {MixingKind::linear, 0.0};

  SimulateOptions options;
  options.t_begin = 10.0;
  options.t_end = 14.0;
  options.context = {{0, 0, 9.5}};

  const double expected =
      0.4 * 4.0 + 3.0 * params.kernel.integral(10.0 - 9.5, 14.0 - 9.5);

  const int reps = 400;
  double total = 0.0;
  double total_sq = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng = Rng::split(2024, static_cast<std::uint64_t>(rep));
    const EventLog log = simulate(params, graph, options, rng);
    for (const Event& e : log.events()) {
      CHECK(e.time > options.t_begin);
      CHECK(e.time <= options.t_end);
    }
    const double n = static_cast<double>(log.size());
    total += n;
    total_sq += n * n;
  }
  const double mean = total / reps;
  const double var = (total_sq - reps * mean * mean) / (reps - 1);
  const double se = std::sqrt(var / reps);
  CHECK(std::abs(mean - expected) <= 3.0 * se);

  SUBCASE("context after the window start is rejected") {
    options.context = {{0, 0, 11.0}};
    Rng rng(1);
    CHECK_THROWS_AS((void)simulate(params, graph, options, rng),
                    std::invalid_argument);
  }
}

TEST_CASE("empirical intensity counts events per bin over the bin width") {
  EventLog log({{0, 0, 0.5}, {0, 0, 1.5}, {1, 1, 1.5}, {1, 0, 4.0}}, 4.0);
  const Eigen::MatrixXd rates = empirical_intensity(log, 2, 4);
  CHECK(rates.rows() == 4);
  CHECK(rates.cols() == 2);
  CHECK(rates(0, 0) == doctest::Approx(1.0));
  CHECK(rates(1, 0) == doctest::Approx(1.0));
  CHECK(rates(1, 1) == doctest::Approx(1.0));
  CHECK(rates(3, 1) == doctest::Approx(1.0));  // event at the horizon
  CHECK(rates.sum() == doctest::Approx(4.0));

  const Eigen::MatrixXd only_c1 = empirical_intensity(log, 2, 4, 1);
  CHECK(only_c1.sum() == doctest::Approx(1.0));
  CHECK(only_c1(1, 1) == doctest::Approx(1.0));

  CHECK_THROWS_AS((void)empirical_intensity(log, 2, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)empirical_intensity(log, 1, 4), std::invalid_argument);
}

TEST_CASE("supercritical regimes trip the event budget guard") {
  Eigen::MatrixXd w(1, 1);
  w << 2.0;  // self-loop branching ratio = 2 * tau = 4: explosive
  const UserGraph graph(w);
  ModelParams params;
  params.baselines = Eigen::MatrixXd::Constant(1, 1, 0.5);
  params.sigma = Eigen::MatrixXd::Identity(1, 1);
  params.kernel.tau = 2.0;
  params.mixing = {MixingKind::linear, 0.0};

  SimulateOptions options;
  options.t_end = 1e6;
  options.max_events = 20'000;
  Rng rng(5);
  CHECK_THROWS_AS((void)simulate(params, graph, options, rng), NumericalError);
}
