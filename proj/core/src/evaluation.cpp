#include "mic/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <vector>

#include "mic/errors.hpp"
#include "mic/likelihood.hpp"
#include "mic/rng.hpp"
#include "mic/simulate.hpp"
#include "mic/state.hpp"

namespace mic {
namespace {

std::vector<Event> context_tail(const EventLog& train, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("context fraction must lie in [0, 1]");
  }
  const auto& events = train.events();
  const auto keep = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(events.size())));
  return {events.end() - static_cast<std::ptrdiff_t>(keep), events.end()};
}

LikelihoodBreakdown test_breakdown(const ModelParams& params,
                                   const UserGraph& graph, const EventLog& train,
                                   const EventLog& test,
                                   double context_fraction) {
  if (!test.empty() && test.events().front().time < train.horizon()) {
    throw std::invalid_argument("test events must not precede the train horizon");
  }
  LikelihoodWindow window;
  window.t_begin = train.horizon();
  window.t_end = test.horizon();
  window.context = context_tail(train, context_fraction);
  return log_likelihood(params, graph, test, window);
}

/// Event counts per (bin, cascade) over [t0, t1], divided by the bin width.
Eigen::MatrixXd bin_cascade_rates(const std::vector<Event>& events, double t0,
                                  double t1, int n_bins, int n_cascades) {
  Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(n_bins, n_cascades);
  const double width = (t1 - t0) / n_bins;
  for (const Event& e : events) {
    if (e.time < t0 || e.time > t1) continue;
    int bin = static_cast<int>((e.time - t0) / width);
    bin = std::min(bin, n_bins - 1);  // events exactly at t1 land in the last bin
    rates(bin, e.cascade) += 1.0;
  }
  return rates / width;
}

Eigen::VectorXd sorted_counts(const std::vector<Event>& events, RankBy by,
                              int n_entities) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_entities);
  for (const Event& e : events) {
    const int id = by == RankBy::user ? e.user : e.cascade;
    if (id < 0 || id >= n_entities) {
      throw std::invalid_argument("event id out of range for ranked activity");
    }
    counts[id] += 1.0;
  }
  std::sort(counts.data(), counts.data() + counts.size(), std::greater<>());
  return counts;
}

void run_indexed(int n_jobs, int threads, const std::function<void(int)>& job) {
  int hardware = static_cast<int>(std::thread::hardware_concurrency());
  if (hardware <= 0) hardware = 1;
  const int n_threads = std::max(1, std::min(threads > 0 ? threads : hardware, n_jobs));
  if (n_threads == 1) {
    for (int i = 0; i < n_jobs; ++i) job(i);
    return;
  }
  std::mutex mutex;
  std::exception_ptr failure;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < n_jobs; i += n_threads) {
        try {
          job(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& worker : pool) worker.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

TrainTestSplit split_train_test(const EventLog& log, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("train fraction must lie strictly inside (0, 1)");
  }
  if (log.size() < 2) {
    throw DataError("need at least two events to form a train/test split");
  }
  const auto& events = log.events();
  auto n_train = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(events.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, events.size() - 1);
  // Simultaneous events act as one tie group; keep whole groups in train so
  // the boundary time separates the two halves strictly.
  while (n_train < events.size() &&
         events[n_train].time == events[n_train - 1].time) {
    ++n_train;
  }
  if (n_train == events.size()) {
    throw DataError("train/test boundary falls inside a tie group reaching the final event");
  }
  TrainTestSplit split;
  split.boundary = events[n_train - 1].time;
  split.train = EventLog(
      {events.begin(), events.begin() + static_cast<std::ptrdiff_t>(n_train)},
      split.boundary);
  split.test = EventLog(
      {events.begin() + static_cast<std::ptrdiff_t>(n_train), events.end()},
      log.horizon());
  return split;
}

double test_log_likelihood(const ModelParams& params, const UserGraph& graph,
                           const EventLog& train, const EventLog& test,
                           double context_fraction) {
  return test_breakdown(params, graph, train, test, context_fraction).total;
}

double quantile_log_likelihood(const ModelParams& params, const UserGraph& graph,
                               const EventLog& train, const EventLog& test,
                               double top_fraction) {
  if (!(top_fraction > 0.0 && top_fraction <= 1.0)) {
    throw std::invalid_argument("top fraction must lie in (0, 1]");
  }
  const int n_users = params.n_users();
  std::vector<double> activity(static_cast<std::size_t>(n_users), 0.0);
  for (const Event& e : train.events()) {
    if (e.user >= 0 && e.user < n_users) activity[static_cast<std::size_t>(e.user)] += 1.0;
  }
  std::vector<int> order(static_cast<std::size_t>(n_users));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ca = activity[static_cast<std::size_t>(a)];
    const double cb = activity[static_cast<std::size_t>(b)];
    return ca != cb ? ca > cb : a < b;
  });
  const int keep = static_cast<int>(
      std::ceil(top_fraction * static_cast<double>(n_users)));

  const LikelihoodBreakdown breakdown =
      test_breakdown(params, graph, train, test, 1.0);
  double total = 0.0;
  for (int rank = 0; rank < keep; ++rank) {
    total += breakdown.per_user[order[static_cast<std::size_t>(rank)]];
  }
  return total;
}

double inverse_l1(const Eigen::VectorXd& real_series,
                  const Eigen::VectorXd& sim_series) {
  if (real_series.size() != sim_series.size()) {
    throw std::invalid_argument("inverse l1 distance needs equal-length series");
  }
  if (real_series.size() == 0) {
    throw std::invalid_argument("inverse l1 distance needs nonempty series");
  }
  return 1.0 / (1.0 + (real_series - sim_series).cwiseAbs().mean());
}

std::optional<double> pearson(const Eigen::VectorXd& real_series,
                              const Eigen::VectorXd& sim_series) {
  if (real_series.size() != sim_series.size()) {
    throw std::invalid_argument("correlation needs equal-length series");
  }
  const Eigen::Index n = real_series.size();
  if (n < 2) return std::nullopt;
  const Eigen::VectorXd x = real_series.array() - real_series.mean();
  const Eigen::VectorXd y = sim_series.array() - sim_series.mean();
  const double sx = x.norm();
  const double sy = y.norm();
  if (sx == 0.0 || sy == 0.0) return std::nullopt;
  return x.dot(y) / (sx * sy);
}

RankedActivity ranked_activity(const EventLog& real,
                               const std::vector<EventLog>& sims, RankBy by,
                               int n_entities) {
  if (sims.empty()) throw std::invalid_argument("ranked activity needs at least one replication");
  if (n_entities <= 0) throw std::invalid_argument("ranked activity needs a positive entity count");
  RankedActivity out;
  out.real = sorted_counts(real.events(), by, n_entities);
  Eigen::MatrixXd per_rank(n_entities, static_cast<Eigen::Index>(sims.size()));
  for (std::size_t k = 0; k < sims.size(); ++k) {
    per_rank.col(static_cast<Eigen::Index>(k)) =
        sorted_counts(sims[k].events(), by, n_entities);
  }
  out.sim_mean = per_rank.rowwise().mean();
  const Eigen::MatrixXd centered = per_rank.colwise() - out.sim_mean;
  out.sim_std = (centered.array().square().rowwise().mean()).sqrt();
  return out;
}

std::vector<double> rescaled_interevent_times(const ModelParams& params,
                                              const UserGraph& graph,
                                              const EventLog& log) {
  return rescaled_interevent_times(params, graph, log, 0.0, log.horizon(), {});
}

std::vector<double> rescaled_interevent_times(const ModelParams& params,
                                              const UserGraph& graph,
                                              const EventLog& log,
                                              double t_begin, double t_end,
                                              const std::vector<Event>& context) {
  params.validate(graph);
  log.check_ids(params.n_users(), params.n_cascades());
  if (!(t_end >= t_begin)) throw std::invalid_argument("window must have nonnegative length");

  IntensityState state = IntensityState::zero(params.n_users(), params.n_cascades());
  std::vector<Event> warm = context;
  std::sort(warm.begin(), warm.end(), event_less);
  if (!warm.empty() && warm.back().time > t_begin) {
    throw std::invalid_argument("context events must not follow the window start");
  }
  apply_events(state, warm, graph, params.kernel, t_begin);

  const double base_rate = params.baselines.sum();
  std::vector<double> increments;
  const auto& events = log.events();
  double previous = t_begin;
  for (std::size_t i = 0; i < events.size();) {
    const double t = events[i].time;
    if (t < t_begin || t > t_end) {
      throw std::invalid_argument("events must lie inside the rescaling window");
    }
    std::size_t j = i;
    while (j < events.size() && events[j].time == t) ++j;
    if (t > previous) {
      const double gap = t - previous;
      // All excitation entries decay at the shared rate 1/tau, so the window
      // integral of the total intensity has a two-term closed form.
      const double excitation_mass =
          state.excitation.sum() * params.kernel.integral(0.0, gap);
      increments.push_back(gap * base_rate + excitation_mass);
      advance(state, t, params.kernel);
      previous = t;
    }
    for (std::size_t k = i; k < j; ++k) apply_event(state, events[k], graph);
    i = j;
  }
  return increments;
}

MetricReport evaluate(const ModelParams& params, const UserGraph& graph,
                      const EventLog& log, const EvaluateOptions& options) {
  params.validate(graph);
  log.check_ids(params.n_users(), params.n_cascades());
  if (options.n_bins <= 0) throw std::invalid_argument("need a positive bin count");
  if (options.replications <= 0) throw std::invalid_argument("need at least one replication");

  const TrainTestSplit split = split_train_test(log, options.train_fraction);
  const int n_cascades = params.n_cascades();

  MetricReport report;
  report.test_loglik = test_log_likelihood(params, graph, split.train, split.test);
  report.context_fractions = options.context_fractions;
  for (const double fraction : options.context_fractions) {
    report.loglik_vs_train_fraction.push_back(
        test_log_likelihood(params, graph, split.train, split.test, fraction));
  }
  for (const double q : options.quantiles) {
    report.quantile_loglik[q] =
        quantile_log_likelihood(params, graph, split.train, split.test, q);
  }

  // Warm-started replications of the test window under the fitted model.
  std::vector<EventLog> replications(static_cast<std::size_t>(options.replications));
  run_indexed(options.replications, options.threads, [&](int r) {
    SimulateOptions sim;
    sim.t_begin = split.boundary;
    sim.t_end = log.horizon();
    sim.context = split.train.events();
    Rng rng = Rng::split(options.seed, static_cast<std::uint64_t>(r));
    replications[static_cast<std::size_t>(r)] = simulate(params, graph, sim, rng);
  });

  const Eigen::MatrixXd real_rates =
      bin_cascade_rates(split.test.events(), split.boundary, log.horizon(),
                        options.n_bins, n_cascades);
  Eigen::MatrixXd sim_rates = Eigen::MatrixXd::Zero(options.n_bins, n_cascades);
  for (const EventLog& rep : replications) {
    sim_rates += bin_cascade_rates(rep.events(), split.boundary, log.horizon(),
                                   options.n_bins, n_cascades);
  }
  sim_rates /= static_cast<double>(options.replications);

  for (int c = 0; c < n_cascades; ++c) {
    report.inverse_l1_per_cascade.push_back(
        inverse_l1(real_rates.col(c), sim_rates.col(c)));
    report.pearson_per_cascade.push_back(
        pearson(real_rates.col(c), sim_rates.col(c)));
  }
  report.inverse_l1_overall =
      inverse_l1(real_rates.rowwise().sum(), sim_rates.rowwise().sum());

  report.ranked_users =
      ranked_activity(split.test, replications, RankBy::user, params.n_users());
  report.ranked_cascades =
      ranked_activity(split.test, replications, RankBy::cascade, n_cascades);
  return report;
}

}  // namespace mic
