// Microbenchmarks for the hot paths: state recursion, likelihood and gradient
// passes, simulation, and one outer fit iteration. Sizes are chosen so a full
// run stays under a minute on one core.

#include <benchmark/benchmark.h>

#include <mic/inference.hpp>
#include <mic/likelihood.hpp>
#include <mic/simulate.hpp>
#include <mic/state.hpp>

namespace {

using namespace mic;

struct Workload {
  Scenario scenario;
  EventLog log;
};

Workload make_workload(int n_users, double horizon) {
  ScenarioConfig config;
  config.n_users = n_users;
  config.n_cascades = 3;
  config.edge_prob = 0.02;
  config.tau = 3.0;
  config.mixing = {MixingKind::boltzmann, 33.37};
  config.max_spectral_radius = 0.9;
  config.sigma = Eigen::MatrixXd::Identity(3, 3);
  config.sigma.row(1) << 0.71, 0.29, 0.0;

  Scenario scenario = generate_scenario(config, 7);
  Rng rng(7001);
  EventLog log = simulate(scenario.params, scenario.graph, horizon, rng);
  return {std::move(scenario), std::move(log)};
}

const Workload& workload() {
  static const Workload w = make_workload(30, 200.0);
  return w;
}

void BM_state_replay(benchmark::State& state) {
  const Workload& w = workload();
  const ModelParams& params = w.scenario.params;
  for (auto _ : state) {
    auto intensity =
        IntensityState::zero(params.n_users(), params.n_cascades());
    for (const Event& e : w.log.events()) {
      advance(intensity, e.time, params.kernel);
      apply_event(intensity, e, w.scenario.graph);
    }
    benchmark::DoNotOptimize(intensity);
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(w.log.size()));
}
BENCHMARK(BM_state_replay);

void BM_log_likelihood(benchmark::State& state) {
  const Workload& w = workload();
  for (auto _ : state) {
    auto breakdown =
        log_likelihood(w.scenario.params, w.scenario.graph, w.log);
    benchmark::DoNotOptimize(breakdown.total);
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(w.log.size()));
}
BENCHMARK(BM_log_likelihood);

void BM_log_likelihood_gradients(benchmark::State& state) {
  const Workload& w = workload();
  for (auto _ : state) {
    auto gradients =
        log_likelihood_gradients(w.scenario.params, w.scenario.graph, w.log);
    benchmark::DoNotOptimize(gradients);
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(w.log.size()));
}
BENCHMARK(BM_log_likelihood_gradients);

void BM_simulate(benchmark::State& state) {
  const Workload& w = workload();
  std::uint64_t seed = 100;
  for (auto _ : state) {
    Rng rng(seed++);
    EventLog log = simulate(w.scenario.params, w.scenario.graph, 50.0, rng);
    benchmark::DoNotOptimize(log);
  }
}
BENCHMARK(BM_simulate);

void BM_fit_outer_iteration(benchmark::State& state) {
  const Workload& w = workload();
  FitConfig config;
  config.variant = ModelVariant::mic;
  config.beta = 33.37;
  config.tau = 3.0;
  config.max_outer_iters = 1;
  config.threads = 1;
  for (auto _ : state) {
    FitResult result = fit(w.log, w.scenario.graph, config);
    benchmark::DoNotOptimize(result.trajectory.back());
  }
}
BENCHMARK(BM_fit_outer_iteration);

}  // namespace

BENCHMARK_MAIN();
