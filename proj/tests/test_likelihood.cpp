#include <doctest.h>

#include <cmath>
#include <limits>

#include <mic/likelihood.hpp>
#include <mic/simulate.hpp>
#include <mic/state.hpp>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace mic;

namespace {

// Literal transcription of the likelihood definition: sum of log marked
// intensities at the events (strict past) minus the quadrature of the total
// intensity, integrated piecewise between event times.
double oracle_log_likelihood(const ModelParams& params, const UserGraph& graph,
                             const EventLog& log) {
  double value = 0.0;
  for (const Event& e : log.events()) {
    value += std::log(mic::test::brute_force_marked_intensity(
        params, graph, log.events(), e.time, e.user, e.cascade));
  }

  const auto total_intensity = [&](double t) {
    std::vector<Event> past;
    for (const Event& e : log.events()) {
      if (e.time <= t) past.push_back(e);
    }
    const Eigen::MatrixXd exc = mic::test::brute_force_excitation(
        past, graph, params.kernel, params.n_cascades(), t);
    return params.baselines.sum() + exc.sum();
  };

  std::vector<double> knots = {0.0, log.horizon()};
  for (const Event& e : log.events()) knots.push_back(e.time);
  std::sort(knots.begin(), knots.end());
  for (std::size_t k = 1; k < knots.size(); ++k) {
    value -= mic::test::integrate(total_intensity, knots[k - 1], knots[k], 1e-11);
  }
  return value;
}

using mic::test::make_toy;
using mic::test::Toy;

EventLog simulated_log(const Toy& toy, double horizon, std::uint64_t seed) {
  Rng rng(seed);
  return simulate(toy.params, toy.graph, horizon, rng);
}

}  // namespace

TEST_CASE("poisson special case has an exact closed form") {
  // No edges, identity sigma, linear mixing: every (user, cascade) pair is an
  // independent Poisson stream with rate baselines(u, c).
  ModelParams params;
  params.baselines = Eigen::MatrixXd(2, 2);
  params.baselines << 0.3, 0.1, 0.2, 0.4;
  params.sigma = Eigen::MatrixXd::Identity(2, 2);
  params.kernel.tau = 1.0;
  params.mixing = {MixingKind::linear, 0.0};
  const UserGraph graph{Eigen::MatrixXd::Zero(2, 2)};

  const EventLog log({{0, 0, 1.0}, {0, 1, 2.5}, {1, 1, 4.0}}, 10.0);
  const auto breakdown = log_likelihood(params, graph, log);

  const double expected = std::log(0.3) + std::log(0.1) + std::log(0.4) -
                          10.0 * params.baselines.sum();
  CHECK(breakdown.total == doctest::Approx(expected).epsilon(1e-14));
  CHECK(breakdown.impossible_events.empty());
}

TEST_CASE("likelihood matches the brute-force oracle") {
  for (auto kind : {MixingKind::linear, MixingKind::boltzmann}) {
    const Toy toy = make_toy(5, 3, kind, 2.5, 301, 0.5, 1.2);
    const EventLog log = simulated_log(toy, 18.0, 302);
    REQUIRE(log.size() > 20);

    const auto breakdown = log_likelihood(toy.params, toy.graph, log);
    const double oracle = oracle_log_likelihood(toy.params, toy.graph, log);
    CHECK(breakdown.total ==
          doctest::Approx(oracle).epsilon(1e-8));

    // Internal consistency of the decomposition.
    CHECK(breakdown.total == doctest::Approx(breakdown.event_terms +
                                             breakdown.partition_terms -
                                             breakdown.compensator)
                                 .epsilon(1e-12));
    CHECK(breakdown.per_user.sum() == doctest::Approx(breakdown.total).epsilon(1e-12));
    CHECK(breakdown.impossible_events.empty());
  }
}

TEST_CASE("compensator closed form equals quadrature, windows included") {
  const Toy toy = make_toy(4, 2, MixingKind::linear, 0.0, 311, 0.6, 2.0);
  const EventLog full = simulated_log(toy, 12.0, 312);
  REQUIRE(full.size() > 10);

  // Split at an off-event time; the tail window sees the head as context.
  const double t_split = 7.3;
  std::vector<Event> head, tail;
  for (const Event& e : full.events()) {
    (e.time <= t_split ? head : tail).push_back(e);
  }
  const EventLog tail_log(tail, 12.0);
  const LikelihoodWindow window{t_split, 12.0, head};
  const Eigen::VectorXd comp = compensator(toy.params, toy.graph, tail_log, window);

  for (int u = 0; u < 4; ++u) {
    const auto intensity_u = [&](double t) {
      std::vector<Event> past;
      for (const Event& e : full.events()) {
        if (e.time <= t) past.push_back(e);
      }
      const Eigen::MatrixXd exc = mic::test::brute_force_excitation(
          past, toy.graph, toy.params.kernel, 2, t);
      return toy.params.baselines.row(u).sum() + exc.row(u).sum();
    };
    std::vector<double> knots = {t_split, 12.0};
    for (const Event& e : full.events()) {
      if (e.time > t_split && e.time < 12.0) knots.push_back(e.time);
    }
    std::sort(knots.begin(), knots.end());
    double by_quadrature = 0.0;
    for (std::size_t k = 1; k < knots.size(); ++k) {
      by_quadrature +=
          mic::test::integrate(intensity_u, knots[k - 1], knots[k], 1e-11);
    }
    CHECK(comp(u) == doctest::Approx(by_quadrature).epsilon(1e-9));
  }
}

TEST_CASE("windowed likelihoods factorise over a split") {
  for (auto kind : {MixingKind::linear, MixingKind::boltzmann}) {
    const Toy toy = make_toy(5, 3, kind, 1.8, 321, 0.5, 1.5);
    const EventLog full = simulated_log(toy, 16.0, 322);
    REQUIRE(full.size() > 20);

    // Split strictly between two event times so no tie straddles the cut.
    const std::size_t mid = full.size() / 2;
    REQUIRE(full.events()[mid - 1].time < full.events()[mid].time);
    const double t_split =
        0.5 * (full.events()[mid - 1].time + full.events()[mid].time);

    std::vector<Event> head(full.events().begin(), full.events().begin() + mid);
    std::vector<Event> tail(full.events().begin() + mid, full.events().end());

    const auto whole = log_likelihood(toy.params, toy.graph, full);
    const auto first = log_likelihood(toy.params, toy.graph,
                                      EventLog(head, t_split),
                                      {0.0, t_split, {}});
    const auto second = log_likelihood(toy.params, toy.graph,
                                       EventLog(tail, 16.0),
                                       {t_split, 16.0, head});
    CHECK(whole.total ==
          doctest::Approx(first.total + second.total).epsilon(1e-10));
  }
}

TEST_CASE("per-user slices are insulated from simultaneous events") {
  const Toy toy = make_toy(4, 2, MixingKind::boltzmann, 2.0, 331, 0.8);
  // Two users fire at the same instant at the horizon: neither sees the
  // other's jump (strict past), and no mass remains afterwards.
  const EventLog with_tie({{0, 0, 2.0}, {1, 1, 5.0}, {2, 0, 5.0}}, 5.0);
  const EventLog without_tie({{0, 0, 2.0}, {1, 1, 5.0}}, 5.0);

  const auto a = log_likelihood(toy.params, toy.graph, with_tie);
  const auto b = log_likelihood(toy.params, toy.graph, without_tie);
  CHECK(a.per_user(1) == b.per_user(1));
  CHECK(partial_log_likelihood(toy.params, toy.graph, with_tie, 1) ==
        a.per_user(1));

  double sum = 0.0;
  for (int u = 0; u < 4; ++u) {
    sum += partial_log_likelihood(toy.params, toy.graph, with_tie, u);
  }
  CHECK(sum == doctest::Approx(a.total).epsilon(1e-12));
  CHECK_THROWS_AS((void)partial_log_likelihood(toy.params, toy.graph, with_tie, 9),
                  std::invalid_argument);
}

TEST_CASE("events with zero density are reported and sink the total") {
  ModelParams params;
  params.baselines = Eigen::MatrixXd::Zero(2, 2);
  params.baselines(0, 0) = 0.5;  // user 1 has no baseline and no influencers
  params.sigma = Eigen::MatrixXd::Identity(2, 2);
  params.kernel.tau = 1.0;
  params.mixing = {MixingKind::linear, 0.0};
  const UserGraph graph{Eigen::MatrixXd::Zero(2, 2)};

  const EventLog log({{0, 0, 1.0}, {1, 0, 2.0}}, 5.0);
  const auto breakdown = log_likelihood(params, graph, log);
  REQUIRE(breakdown.impossible_events.size() == 1);
  CHECK(breakdown.impossible_events[0] == 1);
  CHECK(breakdown.total == -std::numeric_limits<double>::infinity());
  CHECK(breakdown.per_user(1) == -std::numeric_limits<double>::infinity());
  CHECK(std::isfinite(breakdown.per_user(0)));

  // Linear mixing also fails when the observed cascade has zero weight.
  ModelParams blocked = params;
  blocked.baselines = Eigen::MatrixXd(2, 2);
  blocked.baselines << 0.5, 0.0, 0.1, 0.1;
  const EventLog log2({{0, 1, 1.0}}, 5.0);
  const auto b2 = log_likelihood(blocked, graph, log2);
  REQUIRE(b2.impossible_events.size() == 1);
  CHECK(b2.total == -std::numeric_limits<double>::infinity());
}

TEST_CASE("gradients agree with central finite differences") {
  for (auto kind : {MixingKind::linear, MixingKind::boltzmann}) {
    CAPTURE(static_cast<int>(kind));
    const Toy toy = make_toy(4, 3, kind, 1.3, 341, 0.7, 1.4);
    const EventLog log = simulated_log(toy, 10.0, 342);
    REQUIRE(log.size() > 10);

    const auto grads = log_likelihood_gradients(toy.params, toy.graph, log);
    CHECK(grads.total ==
          doctest::Approx(log_likelihood(toy.params, toy.graph, log).total)
              .epsilon(1e-10));

    const double h = 1e-6;
    const auto value_at = [&](const ModelParams& p) {
      return log_likelihood(p, toy.graph, log).total;
    };

    for (int u = 0; u < 4; ++u) {
      for (int c = 0; c < 3; ++c) {
        ModelParams up = toy.params, down = toy.params;
        up.baselines(u, c) += h;
        down.baselines(u, c) -= h;
        const double fd = (value_at(up) - value_at(down)) / (2.0 * h);
        CHECK(grads.baselines(u, c) ==
              doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      }
    }

    for (int v = 0; v < 4; ++v) {
      for (int u = 0; u < 4; ++u) {
        if (toy.graph.weight(v, u) == 0.0) {
          CHECK(grads.weights(v, u) == 0.0);
          continue;
        }
        Eigen::MatrixXd w_up = toy.graph.weights();
        Eigen::MatrixXd w_down = toy.graph.weights();
        w_up(v, u) += h;
        w_down(v, u) -= h;
        const double fd = (log_likelihood(toy.params, UserGraph(w_up), log).total -
                           log_likelihood(toy.params, UserGraph(w_down), log).total) /
                          (2.0 * h);
        CHECK(grads.weights(v, u) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      }
    }

    // Sigma: finite differences along simplex-feasible directions
    // (e_{s,c} - e_{s,c'}) keep the rows stochastic.
    for (int s = 0; s < 3; ++s) {
      for (int c = 0; c < 3; ++c) {
        const int c2 = (c + 1) % 3;
        ModelParams up = toy.params, down = toy.params;
        up.sigma(s, c) += h;
        up.sigma(s, c2) -= h;
        down.sigma(s, c) -= h;
        down.sigma(s, c2) += h;
        const double fd = (value_at(up) - value_at(down)) / (2.0 * h);
        const double directional = grads.sigma(s, c) - grads.sigma(s, c2);
        CHECK(directional == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("sigma hessian matches second differences and curves the right way") {
  for (auto kind : {MixingKind::linear, MixingKind::boltzmann}) {
    CAPTURE(static_cast<int>(kind));
    const Toy toy = make_toy(4, 3, kind, 1.1, 351, 0.7, 1.4);
    const EventLog log = simulated_log(toy, 10.0, 352);
    const Eigen::MatrixXd hessian = sigma_hessian(toy.params, toy.graph, log);
    REQUIRE(hessian.rows() == 9);
    CHECK((hessian - hessian.transpose()).cwiseAbs().maxCoeff() < 1e-10);

    const auto value_at = [&](const ModelParams& p) {
      return -log_likelihood(p, toy.graph, log).total;  // -L: what the Hessian describes
    };

    // Second difference along feasible directions d = e_{s,c} - e_{s,c'}
    // versus d^T H d. h trades truncation against cancellation in the
    // second difference; 1e-3 with a 1% tolerance sits in the sweet spot.
    const double h = 1e-3;
    const double f0 = value_at(toy.params);
    for (int s = 0; s < 3; ++s) {
      for (int c = 0; c < 2; ++c) {
        Eigen::MatrixXd dir = Eigen::MatrixXd::Zero(3, 3);
        dir(s, c) = 1.0;
        dir(s, c + 1) = -1.0;
        ModelParams up = toy.params, down = toy.params;
        up.sigma += h * dir;
        down.sigma -= h * dir;
        const double second = (value_at(up) - 2.0 * f0 + value_at(down)) / (h * h);

        // flat(s, c) = s * n_c + c; repack from Eigen's column-major storage.
        Eigen::VectorXd d_flat(9);
        for (int a = 0; a < 3; ++a) {
          for (int b = 0; b < 3; ++b) d_flat(a * 3 + b) = dir(a, b);
        }
        const double quadratic = d_flat.dot(hessian * d_flat);
        CHECK(quadratic == doctest::Approx(second).epsilon(1e-2).scale(1.0));
        // The negative log-likelihood is convex along feasible directions.
        CHECK(quadratic >= -1e-10);
      }
    }

    if (kind == MixingKind::boltzmann) {
      // Fully positive semidefinite, not just along the simplex.
      const Eigen::VectorXd eigenvalues =
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hessian).eigenvalues();
      CHECK(eigenvalues.minCoeff() >= -1e-8 * std::max(1.0, eigenvalues.maxCoeff()));
    }
  }
}

TEST_CASE("log-likelihood is concave in baselines and weights") {
  for (auto kind : {MixingKind::linear, MixingKind::boltzmann}) {
    const Toy toy = make_toy(4, 2, kind, 2.2, 361, 0.7, 1.3);
    const EventLog log = simulated_log(toy, 10.0, 362);
    Rng rng(363);

    for (int trial = 0; trial < 5; ++trial) {
      ModelParams a = toy.params, b = toy.params;
      Eigen::MatrixXd wa = toy.graph.weights(), wb = toy.graph.weights();
      for (int u = 0; u < 4; ++u) {
        for (int c = 0; c < 2; ++c) {
          a.baselines(u, c) = rng.uniform(0.01, 0.5);
          b.baselines(u, c) = rng.uniform(0.01, 0.5);
        }
        for (int v = 0; v < 4; ++v) {
          if (toy.graph.weight(v, u) > 0.0) {
            wa(v, u) = rng.uniform(0.01, 0.8);
            wb(v, u) = rng.uniform(0.01, 0.8);
          }
        }
      }
      ModelParams mid = toy.params;
      mid.baselines = 0.5 * (a.baselines + b.baselines);
      const UserGraph gm{0.5 * (wa + wb)};

      const double la = log_likelihood(a, UserGraph(wa), log).total;
      const double lb = log_likelihood(b, UserGraph(wb), log).total;
      const double lm = log_likelihood(mid, gm, log).total;
      CHECK(lm >= 0.5 * (la + lb) - 1e-9 * std::abs(lm));
    }
  }
}
