// Command-line surface for the mic library: synthetic scenarios, fitting,
// model selection, evaluation, closed-form moments, layout export and the
// variant-comparison sweep. Every artifact gets a sidecar manifest so a run
// can be reproduced from its outputs alone.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <mic/errors.hpp>
#include <mic/evaluation.hpp>
#include <mic/inference.hpp>
#include <mic/io.hpp>
#include <mic/layout.hpp>
#include <mic/likelihood.hpp>
#include <mic/moments.hpp>
#include <mic/simulate.hpp>

namespace {

using namespace mic;

// Stream id for event paths, far away from the scenario generator's
// redraw-attempt streams.
constexpr std::uint64_t kPathStream = 0x9e3779b9ULL;

struct ManifestScribe {
  std::string command;
  std::vector<std::string> arguments;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;

  void note_input(const std::string& path) {
    inputs[path] = io::file_digest(path);
  }

  /// Writes `<artifact>.manifest.json` next to a just-written artifact.
  void emit(const std::string& artifact) const {
    io::Manifest manifest;
    manifest.command = command;
    manifest.arguments = arguments;
    manifest.seed = seed;
    manifest.inputs = inputs;
    manifest.outputs[artifact] = io::file_digest(artifact);
    manifest.version = io::library_version();
    io::write_manifest(artifact + ".manifest.json", manifest);
  }
};

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.push_back(lo + (hi - lo) * static_cast<double>(i) / (n - 1));
  }
  return out;
}

Eigen::MatrixXd read_matrix_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("sigma")) doc = doc.at("sigma");
  if (!doc.is_array() || doc.empty()) {
    throw DataError(path + ": expected an array of rows (or a document with "
                           "a \"sigma\" field)");
  }
  const std::size_t n_cols = doc.at(0).size();
  Eigen::MatrixXd m(doc.size(), n_cols);
  for (std::size_t r = 0; r < doc.size(); ++r) {
    if (doc.at(r).size() != n_cols) {
      throw DataError(path + ": rows have unequal lengths");
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          doc.at(r).at(c).get<double>();
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  ScenarioConfig scenario;
  double horizon = 500.0;
  std::string sigma = "identity";
  std::string mixing = "boltzmann";
  std::uint64_t seed = 1;
  std::string out_events = "events.csv";
  std::string out_params = "params.json";
  std::string out_graph = "graph.csv";
};

int run_simulate(SimulateArgs& args, ManifestScribe scribe) {
  args.scenario.mixing.kind = mixing_kind_from_string(args.mixing);
  if (args.sigma != "identity") {
    scribe.note_input(args.sigma);
    args.scenario.sigma = read_matrix_json(args.sigma);
  }
  const Scenario scenario = generate_scenario(args.scenario, args.seed);
  Rng rng = Rng::split(args.seed, kPathStream);
  const EventLog log =
      simulate(scenario.params, scenario.graph, args.horizon, rng);

  io::write_event_log(args.out_events, log);
  scribe.emit(args.out_events);
  io::write_params(args.out_params, scenario.params, scenario.graph);
  scribe.emit(args.out_params);
  io::write_graph(args.out_graph, scenario.graph);
  scribe.emit(args.out_graph);

  std::cout << "simulated " << log.size() << " events over horizon "
            << args.horizon << " -> " << args.out_events << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  std::string events;
  std::string graph;
  double horizon = -1.0;
  std::string variant = "mic";
  FitConfig config;
  std::string out = "fitted.json";
};

int run_fit(FitArgs& args, ManifestScribe scribe) {
  scribe.note_input(args.events);
  scribe.note_input(args.graph);
  args.config.variant = model_variant_from_string(args.variant);
  const EventLog log = io::read_event_log(args.events, args.horizon);
  const UserGraph graph = io::read_graph(args.graph);

  const FitResult result = fit(log, graph, args.config);
  io::write_params(args.out, result.params, result.graph, result.trajectory);
  scribe.emit(args.out);

  std::cout << "fit " << args.variant << ": " << log.size() << " events, "
            << result.iterations << " iterations, "
            << (result.converged ? "converged" : "iteration cap") << ", "
            << "train log-likelihood " << result.log_likelihood() << " -> "
            << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// crossval

struct CrossvalArgs {
  std::string events;
  std::string graph;
  double horizon = -1.0;
  std::string variant = "mic";
  FitConfig config;
  std::vector<double> betas{1.0};
  std::vector<double> taus{1.0};
  double train_fraction = 0.8;
  std::string out = "crossval.json";
};

int run_crossval(CrossvalArgs& args, ManifestScribe scribe) {
  scribe.note_input(args.events);
  scribe.note_input(args.graph);
  args.config.variant = model_variant_from_string(args.variant);
  const EventLog log = io::read_event_log(args.events, args.horizon);
  const UserGraph graph = io::read_graph(args.graph);

  const CrossValidationResult result = cross_validate(
      log, graph, args.config, args.betas, args.taus, args.train_fraction);
  io::write_cross_validation(args.out, result);
  scribe.emit(args.out);

  std::cout << "crossval: best beta " << result.best_beta << ", best tau "
            << result.best_tau << " over " << result.table.size()
            << " cells -> " << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string events;
  std::string params;
  double horizon = -1.0;
  EvaluateOptions options;
  std::string out = "metrics.json";
};

int run_eval(EvalArgs& args, ManifestScribe scribe) {
  scribe.note_input(args.events);
  scribe.note_input(args.params);
  const EventLog log = io::read_event_log(args.events, args.horizon);
  const io::ParamsDocument doc = io::read_params(args.params);

  const MetricReport report =
      evaluate(doc.params, doc.graph, log, args.options);
  io::write_metrics(args.out, report);
  scribe.emit(args.out);

  std::cout << "eval: test log-likelihood " << report.test_loglik << " -> "
            << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// moments

struct MomentsArgs {
  std::string params;
  double horizon = 10.0;
  int bins = 40;
  std::string out = "moments.json";
};

int run_moments(MomentsArgs& args, ManifestScribe scribe) {
  scribe.note_input(args.params);
  const io::ParamsDocument doc = io::read_params(args.params);
  const MomentCurves curves = moment_curves(
      doc.params, doc.graph, linspace(0.0, args.horizon, args.bins + 1));
  io::write_moment_curves(args.out, curves);
  scribe.emit(args.out);

  std::cout << "moments: " << curves.times.size() << " grid points, "
            << (curves.stable ? "stable" : "unstable") << " -> " << args.out
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// viz-export

struct VizArgs {
  std::string params;
  std::string events;
  double horizon = -1.0;
  LayoutOptions options;
  std::string out = "layout.json";
};

int run_viz(VizArgs& args, ManifestScribe scribe) {
  scribe.note_input(args.params);
  scribe.note_input(args.events);
  const io::ParamsDocument doc = io::read_params(args.params);
  const EventLog log = io::read_event_log(args.events, args.horizon);

  const LayoutDocument layout_doc =
      layout(doc.params, doc.graph, log, args.options);
  io::write_layout(args.out, layout_doc);
  scribe.emit(args.out);

  std::cout << "viz-export: " << layout_doc.cascade_nodes.size()
            << " cascades, " << layout_doc.user_nodes.size() << " users -> "
            << args.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  int users = 15;
  double horizon = 120.0;
  double edge_prob = 0.02;
  double tau = 3.0;
  double max_spectral_radius = 0.9;
  std::vector<double> betas{0.01, 1.0, 33.0};
  std::vector<double> sigma21s{0.0, 0.5, 1.0};
  int replications = 10;
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
  int threads = 1;
  FitConfig fit_config;
  std::string out_dir = "sweep";
};

struct SweepJob {
  std::size_t cell = 0;
  int replication = 0;
  std::uint64_t seed = 0;
  double beta = 0.0;
  double sigma21 = 0.0;
};

struct SweepSample {
  bool ok = false;
  std::string error;
  double ll_ic = 0.0;
  double ll_cc = 0.0;
  double ll_mic = 0.0;
};

SweepSample run_sweep_job(const SweepArgs& args, const SweepJob& job) {
  SweepSample sample;
  try {
    ScenarioConfig config;
    config.n_users = args.users;
    config.n_cascades = 3;
    config.edge_prob = args.edge_prob;
    config.tau = args.tau;
    config.max_spectral_radius = args.max_spectral_radius;
    config.mixing = {MixingKind::boltzmann, job.beta};
    config.sigma = Eigen::MatrixXd::Identity(3, 3);
    config.sigma.row(1) << job.sigma21, 1.0 - job.sigma21, 0.0;

    const Scenario scenario = generate_scenario(config, job.seed);
    Rng rng = Rng::split(job.seed, kPathStream);
    const EventLog log =
        simulate(scenario.params, scenario.graph, args.horizon, rng);
    const TrainTestSplit split = split_train_test(log, args.train_fraction);

    FitConfig fit_config = args.fit_config;
    fit_config.beta = job.beta;
    fit_config.tau = args.tau;
    fit_config.n_cascades = 3;
    fit_config.threads = 1;  // parallelism lives at the job level

    const auto held_out = [&](ModelVariant variant) {
      fit_config.variant = variant;
      const FitResult result = fit(split.train, scenario.graph, fit_config);
      return test_log_likelihood(result.params, result.graph, split.train,
                                 split.test);
    };
    sample.ll_ic = held_out(ModelVariant::ic);
    sample.ll_cc = held_out(ModelVariant::cc);
    sample.ll_mic = held_out(ModelVariant::mic);
    sample.ok = true;
  } catch (const std::exception& e) {
    sample.error = e.what();
  }
  return sample;
}

int run_sweep(SweepArgs& args, ManifestScribe scribe) {
  std::filesystem::create_directories(args.out_dir);
  const std::size_t n_cells = args.betas.size() * args.sigma21s.size();

  std::vector<SweepJob> jobs;
  for (std::size_t b = 0; b < args.betas.size(); ++b) {
    for (std::size_t s = 0; s < args.sigma21s.size(); ++s) {
      for (int r = 0; r < args.replications; ++r) {
        SweepJob job;
        job.cell = b * args.sigma21s.size() + s;
        job.replication = r;
        job.seed = args.seed + 1000003ULL * jobs.size();
        job.beta = args.betas[b];
        job.sigma21 = args.sigma21s[s];
        jobs.push_back(job);
      }
    }
  }

  std::vector<SweepSample> samples(jobs.size());
  std::vector<int> cell_pending(n_cells, args.replications);
  std::mutex mutex;
  std::atomic<std::size_t> next{0};

  // Writes the cell document as soon as its last replication lands, so an
  // interrupted sweep keeps every finished cell on disk.
  const auto cell_path = [&](std::size_t cell) {
    return (std::filesystem::path(args.out_dir) /
            ("cell_" + std::to_string(cell) + ".json"))
        .string();
  };
  const auto write_cell = [&](std::size_t cell) {
    nlohmann::json doc;
    doc["schema"] = "mic.sweep-cell/1";
    doc["beta"] = args.betas[cell / args.sigma21s.size()];
    doc["sigma21"] = args.sigma21s[cell % args.sigma21s.size()];
    doc["replications"] = nlohmann::json::array();
    for (const SweepJob& job : jobs) {
      if (job.cell != cell) continue;
      const SweepSample& sample = samples[static_cast<std::size_t>(
          &job - jobs.data())];
      nlohmann::json row;
      row["replication"] = job.replication;
      row["seed"] = job.seed;
      row["ok"] = sample.ok;
      if (sample.ok) {
        row["test_ll_ic"] = sample.ll_ic;
        row["test_ll_cc"] = sample.ll_cc;
        row["test_ll_mic"] = sample.ll_mic;
      } else {
        row["error"] = sample.error;
      }
      doc["replications"].push_back(row);
    }
    io::atomic_write(cell_path(cell), doc.dump(2) + "\n");
  };

  const auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      SweepSample sample = run_sweep_job(args, jobs[i]);
      std::lock_guard<std::mutex> lock(mutex);
      samples[i] = std::move(sample);
      if (--cell_pending[jobs[i].cell] == 0) write_cell(jobs[i].cell);
    }
  };

  int n_threads = args.threads;
  if (n_threads <= 0) {
    n_threads = static_cast<int>(std::thread::hardware_concurrency());
    if (n_threads == 0) n_threads = 1;
  }
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& thread : pool) thread.join();
  }

  // Aggregate table: per-cell mean held-out log-likelihood ratios. A variant
  // can score a test event at zero density (ratio +-inf), so means are taken
  // over the finite ratios and the discarded count is reported; the raw
  // per-replication log-likelihoods stay available in the cell files.
  nlohmann::json table = nlohmann::json::array();
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    double ratio_ic = 0.0;
    double ratio_cc = 0.0;
    int n_ok = 0;
    int n_finite_ic = 0;
    int n_finite_cc = 0;
    for (const SweepJob& job : jobs) {
      if (job.cell != cell) continue;
      const SweepSample& sample =
          samples[static_cast<std::size_t>(&job - jobs.data())];
      if (!sample.ok) continue;
      ++n_ok;
      if (std::isfinite(sample.ll_ic / sample.ll_mic)) {
        ratio_ic += sample.ll_ic / sample.ll_mic;
        ++n_finite_ic;
      }
      if (std::isfinite(sample.ll_cc / sample.ll_mic)) {
        ratio_cc += sample.ll_cc / sample.ll_mic;
        ++n_finite_cc;
      }
    }
    nlohmann::json row;
    row["beta"] = args.betas[cell / args.sigma21s.size()];
    row["sigma21"] = args.sigma21s[cell % args.sigma21s.size()];
    row["replications"] = n_ok;
    row["finite_ic"] = n_finite_ic;
    row["finite_cc"] = n_finite_cc;
    if (n_finite_ic > 0) row["ratio_ic_over_mic"] = ratio_ic / n_finite_ic;
    if (n_finite_cc > 0) row["ratio_cc_over_mic"] = ratio_cc / n_finite_cc;
    table.push_back(row);
  }
  nlohmann::json doc;
  doc["schema"] = "mic.sweep/1";
  doc["train_fraction"] = args.train_fraction;
  doc["users"] = args.users;
  doc["horizon"] = args.horizon;
  doc["table"] = table;
  const std::string table_path =
      (std::filesystem::path(args.out_dir) / "table.json").string();
  io::atomic_write(table_path, doc.dump(2) + "\n");
  scribe.emit(table_path);

  std::cout << "sweep: " << n_cells << " cells x " << args.replications
            << " replications -> " << table_path << "\n";
  for (const auto& row : table) {
    std::cout << "  beta " << row.at("beta").get<double>() << " sigma21 "
              << row.at("sigma21").get<double>() << ":";
    for (const auto& [label, key] :
         {std::pair<const char*, const char*>{"L_IC/L_MIC",
                                              "ratio_ic_over_mic"},
          {"L_CC/L_MIC", "ratio_cc_over_mic"}}) {
      std::cout << " " << label << " ";
      if (row.contains(key)) {
        std::cout << row.at(key).get<double>();
      } else {
        std::cout << "n/a";
      }
    }
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mic: marked multivariate Hawkes processes with interacting "
               "cascades (simulate / fit / evaluate / export)"};
  app.require_subcommand(1);

  ManifestScribe scribe;
  for (int i = 1; i < argc; ++i) scribe.arguments.emplace_back(argv[i]);

  SimulateArgs sim;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "Draw a random scenario and event log");
  sim_cmd->add_option("--users", sim.scenario.n_users, "Number of users")
      ->capture_default_str();
  sim_cmd->add_option("--cascades", sim.scenario.n_cascades,
                      "Number of cascades")
      ->capture_default_str();
  sim_cmd->add_option("-T,--horizon", sim.horizon, "Simulation horizon (s)")
      ->capture_default_str();
  sim_cmd->add_option("--tau", sim.scenario.tau, "Kernel decay time (s)")
      ->capture_default_str();
  sim_cmd->add_option("--beta", sim.scenario.mixing.beta,
                      "Inverse mixing temperature")
      ->capture_default_str();
  sim_cmd->add_option("--mixing", sim.mixing, "Mixing rule: linear|boltzmann")
      ->capture_default_str();
  sim_cmd
      ->add_option("--sigma", sim.sigma,
                   "Interaction matrix: 'identity' or a JSON file")
      ->capture_default_str();
  sim_cmd->add_option("--edge-prob", sim.scenario.edge_prob,
                      "Directed edge probability")
      ->capture_default_str();
  sim_cmd->add_option("--max-weight", sim.scenario.max_weight,
                      "Upper bound of the uniform edge weights")
      ->capture_default_str();
  sim_cmd->add_option("--max-baseline", sim.scenario.max_baseline,
                      "Upper bound of the uniform baseline rates")
      ->capture_default_str();
  sim_cmd->add_option("--max-spectral-radius", sim.scenario.max_spectral_radius,
                      "Redraw until spectral_radius(W) * tau <= bound (0: off)")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Scenario seed; the event path uses "
                                          "an independent child stream")
      ->capture_default_str();
  sim_cmd->add_option("--out-events", sim.out_events, "Event log output path")
      ->capture_default_str();
  sim_cmd->add_option("--out-params", sim.out_params,
                      "Generating parameters output path")
      ->capture_default_str();
  sim_cmd->add_option("--out-graph", sim.out_graph,
                      "Influence graph output path (CSV edge list)")
      ->capture_default_str();

  FitArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand(
      "fit", "Maximum-likelihood fit of a model variant on an event log");
  fit_cmd->add_option("--events", fit_args.events, "Event log (CSV)")
      ->required();
  fit_cmd->add_option("--graph", fit_args.graph, "Influence graph (CSV edge "
                                                 "list; weights give support)")
      ->required();
  fit_cmd->add_option("-T,--horizon", fit_args.horizon,
                      "Horizon override when the log has no horizon comment")
      ->capture_default_str();
  fit_cmd->add_option("--variant", fit_args.variant,
                      "Model variant: ic|lin_mic|cc|mic")
      ->capture_default_str();
  fit_cmd->add_option("--beta", fit_args.config.beta,
                      "Inverse mixing temperature (fixed)")
      ->capture_default_str();
  fit_cmd->add_option("--tau", fit_args.config.tau, "Kernel decay time (s)")
      ->capture_default_str();
  fit_cmd->add_option("--cascades", fit_args.config.n_cascades,
                      "Cascade count (0: infer from the log)")
      ->capture_default_str();
  fit_cmd->add_option("--epsilon", fit_args.config.epsilon,
                      "Relative outer-loop improvement tolerance")
      ->capture_default_str();
  fit_cmd->add_option("--max-outer", fit_args.config.max_outer_iters,
                      "Outer iteration cap")
      ->capture_default_str();
  fit_cmd->add_option("--threads", fit_args.config.threads,
                      "Worker threads (0: hardware)")
      ->capture_default_str();
  fit_cmd->add_option("--out", fit_args.out, "Fitted parameters output path")
      ->capture_default_str();

  CrossvalArgs cv;
  CLI::App* cv_cmd = app.add_subcommand(
      "crossval", "Grid search (beta, tau) on a train/test split");
  cv_cmd->add_option("--events", cv.events, "Event log (CSV)")->required();
  cv_cmd->add_option("--graph", cv.graph, "Influence graph (CSV)")->required();
  cv_cmd->add_option("-T,--horizon", cv.horizon, "Horizon override")
      ->capture_default_str();
  cv_cmd->add_option("--variant", cv.variant, "Model variant: ic|lin_mic|cc|mic")
      ->capture_default_str();
  cv_cmd->add_option("--betas", cv.betas, "Beta grid")
      ->delimiter(',')
      ->capture_default_str();
  cv_cmd->add_option("--taus", cv.taus, "Tau grid (s)")
      ->delimiter(',')
      ->capture_default_str();
  cv_cmd->add_option("--train-fraction", cv.train_fraction,
                     "Training fraction of events")
      ->capture_default_str();
  cv_cmd->add_option("--epsilon", cv.config.epsilon,
                     "Relative outer-loop improvement tolerance")
      ->capture_default_str();
  cv_cmd->add_option("--max-outer", cv.config.max_outer_iters,
                     "Outer iteration cap")
      ->capture_default_str();
  cv_cmd->add_option("--threads", cv.config.threads,
                     "Worker threads (0: hardware)")
      ->capture_default_str();
  cv_cmd->add_option("--out", cv.out, "Cross-validation table output path")
      ->capture_default_str();

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "Goodness-of-fit report for fitted parameters on a log");
  eval_cmd->add_option("--events", eval_args.events, "Event log (CSV)")
      ->required();
  eval_cmd->add_option("--params", eval_args.params,
                       "Fitted parameters (JSON)")
      ->required();
  eval_cmd->add_option("-T,--horizon", eval_args.horizon, "Horizon override")
      ->capture_default_str();
  eval_cmd->add_option("--train-fraction", eval_args.options.train_fraction,
                       "Training fraction of events")
      ->capture_default_str();
  eval_cmd->add_option("--bins", eval_args.options.n_bins,
                       "Activity-series bin count")
      ->capture_default_str();
  eval_cmd->add_option("--replications", eval_args.options.replications,
                       "Simulated replications for activity metrics")
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval_args.options.seed, "Replication seed")
      ->capture_default_str();
  eval_cmd->add_option("--threads", eval_args.options.threads,
                       "Worker threads (0: hardware)")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_args.out, "Metric report output path")
      ->capture_default_str();

  MomentsArgs moments_args;
  CLI::App* moments_cmd = app.add_subcommand(
      "moments", "Closed-form expected intensity and count curves");
  moments_cmd->add_option("--params", moments_args.params, "Parameters (JSON)")
      ->required();
  moments_cmd->add_option("-T,--horizon", moments_args.horizon,
                          "Curve horizon (s)")
      ->capture_default_str();
  moments_cmd->add_option("--bins", moments_args.bins,
                          "Grid bins (bins + 1 evaluation points)")
      ->capture_default_str();
  moments_cmd->add_option("--out", moments_args.out, "Curves output path")
      ->capture_default_str();

  VizArgs viz;
  CLI::App* viz_cmd = app.add_subcommand(
      "viz-export", "Bi-layer layout document for external rendering");
  viz_cmd->add_option("--params", viz.params, "Fitted parameters (JSON)")
      ->required();
  viz_cmd->add_option("--events", viz.events, "Event log the fit used (CSV)")
      ->required();
  viz_cmd->add_option("-T,--horizon", viz.horizon, "Horizon override")
      ->capture_default_str();
  viz_cmd->add_option("--edge-percentile", viz.options.edge_percentile,
                      "Keep intra-layer edges at or above this weight "
                      "percentile")
      ->capture_default_str();
  viz_cmd->add_option("--iterations", viz.options.iterations,
                      "Spring-embedder iterations")
      ->capture_default_str();
  viz_cmd->add_option("--layer-offset", viz.options.layer_offset,
                      "Vertical distance between the two layers")
      ->capture_default_str();
  viz_cmd->add_option("--seed", viz.options.seed, "Embedding seed")
      ->capture_default_str();
  viz_cmd->add_option("--out", viz.out, "Layout output path")
      ->capture_default_str();

  SweepArgs sweep;
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "Variant comparison over a (beta, sigma21) grid of synthetic "
               "scenarios");
  sweep_cmd->add_option("--users", sweep.users, "Users per scenario")
      ->capture_default_str();
  sweep_cmd->add_option("-T,--horizon", sweep.horizon, "Scenario horizon (s)")
      ->capture_default_str();
  sweep_cmd->add_option("--edge-prob", sweep.edge_prob,
                        "Directed edge probability")
      ->capture_default_str();
  sweep_cmd->add_option("--tau", sweep.tau, "Kernel decay time (s)")
      ->capture_default_str();
  sweep_cmd
      ->add_option("--max-spectral-radius", sweep.max_spectral_radius,
                   "Scenario stability bound (0: off)")
      ->capture_default_str();
  sweep_cmd->add_option("--betas", sweep.betas, "Inverse temperature grid")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--sigma21s", sweep.sigma21s,
                        "Interaction strength grid for sigma(2,1)")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--replications", sweep.replications,
                        "Replications per cell")
      ->capture_default_str();
  sweep_cmd->add_option("--train-fraction", sweep.train_fraction,
                        "Training fraction of events")
      ->capture_default_str();
  sweep_cmd->add_option("--seed", sweep.seed, "Base seed")
      ->capture_default_str();
  sweep_cmd->add_option("--threads", sweep.threads,
                        "Parallel jobs (0: hardware)")
      ->capture_default_str();
  sweep_cmd->add_option("--epsilon", sweep.fit_config.epsilon,
                        "Relative outer-loop improvement tolerance")
      ->capture_default_str();
  sweep_cmd->add_option("--max-outer", sweep.fit_config.max_outer_iters,
                        "Outer iteration cap")
      ->capture_default_str();
  sweep_cmd->add_option("--out-dir", sweep.out_dir,
                        "Directory for cell files and the ratio table")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim_cmd) {
      scribe.command = "simulate";
      scribe.seed = sim.seed;
      return run_simulate(sim, scribe);
    }
    if (*fit_cmd) {
      scribe.command = "fit";
      return run_fit(fit_args, scribe);
    }
    if (*cv_cmd) {
      scribe.command = "crossval";
      return run_crossval(cv, scribe);
    }
    if (*eval_cmd) {
      scribe.command = "eval";
      scribe.seed = eval_args.options.seed;
      return run_eval(eval_args, scribe);
    }
    if (*moments_cmd) {
      scribe.command = "moments";
      return run_moments(moments_args, scribe);
    }
    if (*viz_cmd) {
      scribe.command = "viz-export";
      scribe.seed = viz.options.seed;
      return run_viz(viz, scribe);
    }
    if (*sweep_cmd) {
      scribe.command = "sweep";
      scribe.seed = sweep.seed;
      return run_sweep(sweep, scribe);
    }
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
