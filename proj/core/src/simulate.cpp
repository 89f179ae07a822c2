#include "mic/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mic/errors.hpp"
#include "mic/moments.hpp"
#include "mic/state.hpp"

namespace mic {

namespace {

Scenario draw_scenario(const ScenarioConfig& config, Rng& rng) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(config.n_users, config.n_users);
  for (int v = 0; v < config.n_users; ++v) {
    for (int u = 0; u < config.n_users; ++u) {
      if (u == v) continue;
      if (rng.uniform() < config.edge_prob) {
        w(v, u) = rng.uniform(0.0, config.max_weight);
      }
    }
  }
  Scenario scenario{UserGraph(std::move(w)), {}};
  scenario.params.baselines = Eigen::MatrixXd(config.n_users, config.n_cascades);
  for (int u = 0; u < config.n_users; ++u) {
    for (int c = 0; c < config.n_cascades; ++c) {
      scenario.params.baselines(u, c) = rng.uniform(0.0, config.max_baseline);
    }
  }
  scenario.params.sigma =
      config.sigma.size() > 0
          ? config.sigma
          : Eigen::MatrixXd::Identity(config.n_cascades, config.n_cascades);
  scenario.params.kernel.tau = config.tau;
  scenario.params.mixing = config.mixing;
  return scenario;
}

}  // namespace

Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  if (config.n_users < 1 || config.n_cascades < 1) {
    throw std::invalid_argument("generate_scenario: need users and cascades");
  }
  if (!(config.edge_prob >= 0.0 && config.edge_prob <= 1.0)) {
    throw std::invalid_argument("generate_scenario: edge_prob outside [0, 1]");
  }
  for (int attempt = 0; attempt < std::max(config.max_redraws, 1); ++attempt) {
    Rng rng = Rng::split(seed, static_cast<std::uint64_t>(attempt));
    Scenario scenario = draw_scenario(config, rng);
    scenario.params.validate(scenario.graph);
    if (config.max_spectral_radius > 0.0) {
      const double rho = spectral_radius(scenario.graph.weights());
      if (rho * config.tau > config.max_spectral_radius) continue;
    }
    return scenario;
  }
  std::ostringstream msg;
  msg << "generate_scenario: no draw with spectral_radius * tau <= "
      << config.max_spectral_radius << " in " << config.max_redraws
      << " attempts; lower edge_prob or max_weight";
  throw NumericalError(msg.str());
}

EventLog simulate(const ModelParams& params, const UserGraph& graph,
                  const SimulateOptions& options, Rng& rng) {
  params.validate(graph);
  if (!(options.t_end >= options.t_begin)) {
    throw std::invalid_argument("simulate: t_end must be >= t_begin");
  }
  const int n_u = graph.n_users();
  const int n_c = params.n_cascades();

  auto state = IntensityState::zero(n_u, n_c);
  for (const Event& e : options.context) {
    if (e.time > options.t_begin) {
      throw std::invalid_argument("simulate: context events must not follow t_begin");
    }
  }
  apply_events(state, options.context, graph, params.kernel, options.t_begin);

  std::vector<Event> events;
  Eigen::VectorXd lambda(n_u);
  double t = options.t_begin;
  while (true) {
    // Dominating rate: the current total intensity. Between events the
    // exponential kernel only decays, so this bounds the future until the
    // next accepted event.
    double bound = 0.0;
    for (int u = 0; u < n_u; ++u) bound += global_intensity(params, state, u);
    if (bound <= 0.0) break;  // silent network, nothing will ever fire

    t += rng.exponential(bound);
    if (t > options.t_end) break;
    advance(state, t, params.kernel);

    double total = 0.0;
    for (int u = 0; u < n_u; ++u) {
      lambda(u) = global_intensity(params, state, u);
      total += lambda(u);
    }
    if (total > bound * (1.0 + 1e-9)) {
      throw NumericalError("simulate: thinning bound violated");
    }

    // One uniform decides both acceptance and, on acceptance, the user:
    // conditioned on x < total, x is uniform on (0, total).
    const double x = rng.uniform() * bound;
    if (x >= total) continue;  // thinned
    int user = n_u - 1;
    double cum = 0.0;
    for (int u = 0; u < n_u; ++u) {
      cum += lambda(u);
      if (x < cum) {
        user = u;
        break;
      }
    }

    const Eigen::VectorXd f = mixing_density(params, state, user);
    const double y = rng.uniform();
    int cascade = n_c - 1;
    double fcum = 0.0;
    for (int c = 0; c < n_c; ++c) {
      fcum += f(c);
      if (y < fcum) {
        cascade = c;
        break;
      }
    }

    const Event e{user, cascade, t};
    apply_event(state, e, graph);
    events.push_back(e);
    if (events.size() > options.max_events) {
      throw NumericalError("simulate: event budget exceeded; "
                           "the regime is likely supercritical");
    }
  }
  return EventLog(std::move(events), options.t_end);
}

EventLog simulate(const ModelParams& params, const UserGraph& graph,
                  double horizon, Rng& rng) {
  SimulateOptions options;
  options.t_end = horizon;
  return simulate(params, graph, options, rng);
}

Eigen::MatrixXd empirical_intensity(const EventLog& log, int n_users, int n_bins,
                                    int cascade) {
  if (n_bins < 1 || n_users < 1) {
    throw std::invalid_argument("empirical_intensity: need bins and users");
  }
  if (!(log.horizon() > 0.0)) {
    throw std::invalid_argument("empirical_intensity: empty observation window");
  }
  log.check_ids(n_users, std::numeric_limits<int>::max());
  const double width = log.horizon() / n_bins;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_bins, n_users);
  for (const Event& e : log.events()) {
    if (cascade >= 0 && e.cascade != cascade) continue;
    int bin = static_cast<int>(e.time / width);
    bin = std::min(bin, n_bins - 1);  // events at exactly the horizon
    out(bin, e.user) += 1.0;
  }
  return out / width;
}

}  // namespace mic
