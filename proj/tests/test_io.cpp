#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <mic/errors.hpp>
#include <mic/io.hpp>
#include <mic/layout.hpp>
#include <mic/simulate.hpp>

#include "support/fixtures.hpp"

using namespace mic;
using mic::test::make_toy;

namespace {

// Unique scratch directory per test case, removed on scope exit.
struct TempDir {
  std::filesystem::path dir;

  TempDir() {
    static std::atomic<int> counter{0};
    dir = std::filesystem::temp_directory_path() /
          ("mic_io_test_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
  }

  [[nodiscard]] std::string path(const std::string& name) const {
    return (dir / name).string();
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json parse_file(const std::string& path) {
  return nlohmann::json::parse(slurp(path));
}

}  // namespace

TEST_CASE("event logs round-trip exactly and carry their horizon") {
  TempDir tmp;
  // Times chosen so a shortest decimal rendering needs all 17 digits.
  const std::vector<Event> events = {{0, 0, 0.1},
                                     {1, 2, 1.0 / 3.0},
                                     {0, 1, std::nextafter(1.0 / 3.0, 1.0)},
                                     {2, 0, 3.141592653589793}};
  const EventLog log(events, 9.8765432101234567);

  const std::string path = tmp.path("events.csv");
  io::write_event_log(path, log);

  const std::string text = slurp(path);
  CHECK(text.rfind("# horizon ", 0) == 0);
  CHECK(text.find("user,cascade,timestamp") != std::string::npos);

  const EventLog back = io::read_event_log(path);
  CHECK(back.horizon() == log.horizon());
  REQUIRE(back.size() == log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    CHECK(back.events()[i].user == log.events()[i].user);
    CHECK(back.events()[i].cascade == log.events()[i].cascade);
    CHECK(back.events()[i].time == log.events()[i].time);  // bitwise
  }
}

TEST_CASE("event log reading honours overrides and rejects junk") {
  TempDir tmp;
  const std::string path = tmp.path("events.csv");

  SUBCASE("no horizon comment: argument wins, else the last event time") {
    io::atomic_write(path,
                     "user,cascade,timestamp\n# a remark\n0,0,1.5\n1,0,4.0\n");
    CHECK(io::read_event_log(path, 50.0).horizon() == 50.0);
    CHECK(io::read_event_log(path).horizon() == 4.0);
  }
  SUBCASE("header only is an empty log") {
    io::atomic_write(path, "user,cascade,timestamp\n");
    const EventLog log = io::read_event_log(path, 5.0);
    CHECK(log.size() == 0);
    CHECK(log.horizon() == 5.0);
  }
  SUBCASE("missing header") {
    io::atomic_write(path, "0,0,1.5\n");
    CHECK_THROWS_AS((void)io::read_event_log(path), DataError);
  }
  SUBCASE("malformed rows name the line") {
    io::atomic_write(path, "user,cascade,timestamp\n0,0,1.5\n0,zero,2.5\n");
    CHECK_THROWS_WITH_AS((void)io::read_event_log(path),
                         doctest::Contains(":3:"), DataError);

    io::atomic_write(path, "user,cascade,timestamp\n0,0\n");
    CHECK_THROWS_AS((void)io::read_event_log(path), DataError);
  }
  SUBCASE("invalid times are data errors, not aborts") {
    io::atomic_write(path, "user,cascade,timestamp\n0,0,-1.0\n");
    CHECK_THROWS_AS((void)io::read_event_log(path), DataError);

    io::atomic_write(path, "# horizon 2.0\nuser,cascade,timestamp\n0,0,3.0\n");
    CHECK_THROWS_AS((void)io::read_event_log(path), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS((void)io::read_event_log(tmp.path("absent.csv")), DataError);
  }
}

TEST_CASE("graphs round-trip with defaulted and explicit weights") {
  TempDir tmp;
  const std::string path = tmp.path("graph.csv");

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
  w(0, 1) = 0.1;
  w(2, 3) = 1.0 / 3.0;
  w(3, 0) = 0.875;
  io::write_graph(path, UserGraph(w));
  const UserGraph back = io::read_graph(path, 4);
  CHECK((back.weights() - w).cwiseAbs().maxCoeff() == 0.0);

  SUBCASE("two-column rows mean adjacency with unit weight") {
    io::atomic_write(path, "src,dst\n0,1\n2,0\n");
    const UserGraph g = io::read_graph(path, 3);
    CHECK(g.weights()(0, 1) == 1.0);
    CHECK(g.weights()(2, 0) == 1.0);
    CHECK(g.weights().sum() == 2.0);
  }
  SUBCASE("node count is inferred when not declared") {
    io::atomic_write(path, "src,dst,weight\n0,5,0.5\n");
    CHECK(io::read_graph(path).n_users() == 6);
  }
  SUBCASE("duplicate edges are rejected with the line number") {
    io::atomic_write(path, "src,dst,weight\n0,1,0.5\n0,1,0.25\n");
    CHECK_THROWS_WITH_AS((void)io::read_graph(path, 2),
                         doctest::Contains(":3:"), DataError);
  }
  SUBCASE("ids outside a declared count are rejected") {
    io::atomic_write(path, "src,dst,weight\n0,7,0.5\n");
    CHECK_THROWS_AS((void)io::read_graph(path, 4), DataError);
  }
  SUBCASE("negative weights are rejected") {
    io::atomic_write(path, "src,dst,weight\n0,1,-0.5\n");
    CHECK_THROWS_AS((void)io::read_graph(path, 2), DataError);
  }
}

TEST_CASE("parameter documents round-trip bit-for-bit") {
  TempDir tmp;
  const auto toy = make_toy(4, 3, MixingKind::boltzmann, 7.53, 901);
  const std::vector<double> trajectory = {-12.5, -11.03125,
                                          -10.999999999999998};

  const std::string path = tmp.path("params.json");
  io::write_params(path, toy.params, toy.graph, trajectory);

  const io::ParamsDocument doc = io::read_params(path);
  CHECK((doc.params.baselines - toy.params.baselines).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((doc.params.sigma - toy.params.sigma).cwiseAbs().maxCoeff() == 0.0);
  CHECK(doc.params.kernel.tau == toy.params.kernel.tau);
  CHECK(doc.params.mixing.kind == toy.params.mixing.kind);
  CHECK(doc.params.mixing.beta == toy.params.mixing.beta);
  CHECK((doc.graph.weights() - toy.graph.weights()).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(doc.trajectory == trajectory);

  // Rewriting the parsed document reproduces the original bytes.
  const std::string copy = tmp.path("params_copy.json");
  io::write_params(copy, doc.params, doc.graph, doc.trajectory);
  CHECK(slurp(copy) == slurp(path));
  CHECK(io::file_digest(copy) == io::file_digest(path));

  SUBCASE("documents with an inconsistent shape are rejected") {
    nlohmann::json broken = parse_file(path);
    broken["sigma"] = {{1.0, 0.0}, {0.0, 1.0}};  // 2 cascades vs 3 in baselines
    io::atomic_write(path, broken.dump(2) + "\n");
    CHECK_THROWS_AS((void)io::read_params(path), DataError);
  }
}

TEST_CASE("result documents carry their schema and nullable fields") {
  TempDir tmp;

  SUBCASE("metrics") {
    MetricReport report;
    report.test_loglik = -123.5;
    report.context_fractions = {0.0, 0.5, 1.0};
    report.loglik_vs_train_fraction = {-200.0, -150.0};
    report.inverse_l1_per_cascade = {0.25, 0.5};
    report.inverse_l1_overall = 0.375;
    report.pearson_per_cascade = {0.9, std::nullopt};
    report.ranked_users.real = Eigen::VectorXd::LinSpaced(3, 3.0, 1.0);
    report.ranked_users.sim_mean = Eigen::VectorXd::Constant(3, 2.0);
    report.ranked_users.sim_std = Eigen::VectorXd::Constant(3, 0.5);
    report.ranked_cascades = report.ranked_users;
    report.quantile_loglik = {{0.25, -50.0}, {0.75, -20.0}};

    const std::string path = tmp.path("metrics.json");
    io::write_metrics(path, report);
    const nlohmann::json doc = parse_file(path);
    CHECK(doc.at("schema") == "mic.metrics/1");
    CHECK(doc.at("test_loglik") == -123.5);
    REQUIRE(doc.at("pearson_per_cascade").size() == 2);
    CHECK(doc.at("pearson_per_cascade")[0] == 0.9);
    CHECK(doc.at("pearson_per_cascade")[1].is_null());
    REQUIRE(doc.at("quantile_loglik").size() == 2);
    CHECK(doc.at("quantile_loglik")[0].at("fraction") == 0.25);
    CHECK(doc.at("quantile_loglik")[0].at("value") == -50.0);
    CHECK(doc.at("ranked_users").at("real").size() == 3);
  }

  SUBCASE("moment curves") {
    const auto toy = make_toy(4, 2, MixingKind::linear, 0.0, 903);
    const MomentCurves curves =
        moment_curves(toy.params, toy.graph, {0.0, 1.0, 2.5});
    const std::string path = tmp.path("moments.json");
    io::write_moment_curves(path, curves);
    const nlohmann::json doc = parse_file(path);
    CHECK(doc.at("schema") == "mic.moments/1");
    CHECK(doc.at("times").size() == 3);
    CHECK(doc.at("expected_intensity").size() == 4);
    CHECK(doc.at("expected_intensity")[0].size() == 3);
    CHECK(doc.at("per_cascade_intensity").size() == 3);
    CHECK(doc.at("stable") == curves.stable);
  }

  SUBCASE("cross validation keeps failed cells visible") {
    CrossValidationResult result;
    result.best_beta = 2.0;
    result.best_tau = 1.5;
    result.table = {{2.0, 1.5, -80.0, true, ""},
                    {2.0, -1.0, std::nan(""), false, "tau out of range"}};
    const std::string path = tmp.path("crossval.json");
    io::write_cross_validation(path, result);
    const nlohmann::json doc = parse_file(path);
    CHECK(doc.at("schema") == "mic.crossval/1");
    CHECK(doc.at("best_beta") == 2.0);
    REQUIRE(doc.at("table").size() == 2);
    CHECK(doc.at("table")[0].at("test_log_likelihood") == -80.0);
    CHECK(doc.at("table")[1].at("test_log_likelihood").is_null());
    CHECK(doc.at("table")[1].at("error") == "tau out of range");
  }

  SUBCASE("layout") {
    const auto toy = make_toy(5, 3, MixingKind::boltzmann, 4.0, 905);
    Rng rng(906);
    const EventLog log = simulate(toy.params, toy.graph, 30.0, rng);
    const LayoutDocument layout_doc = layout(toy.params, toy.graph, log);
    const std::string path = tmp.path("layout.json");
    io::write_layout(path, layout_doc);
    const nlohmann::json doc = parse_file(path);
    CHECK(doc.at("schema") == "mic.layout/1");
    CHECK(doc.at("cascade_nodes").size() == 3);
    CHECK(doc.at("user_nodes").size() == 5);
    CHECK(doc.at("user_nodes")[0].at("mixture").size() == 3);
    CHECK(doc.at("layer_offset") == 1.0);
  }
}

TEST_CASE("manifests are deterministic and wall-clock free") {
  TempDir tmp;
  io::Manifest manifest;
  manifest.command = "fit";
  manifest.arguments = {"--tau", "3", "--beta", "33.37"};
  manifest.seed = 42;
  manifest.inputs = {{"events.csv", "cbf29ce484222325"}};
  manifest.outputs = {{"params.json", "af63dc4c8601ec8c"}};
  manifest.version = io::library_version();

  const std::string a = tmp.path("manifest_a.json");
  const std::string b = tmp.path("manifest_b.json");
  io::write_manifest(a, manifest);
  io::write_manifest(b, manifest);
  CHECK(slurp(a) == slurp(b));

  const nlohmann::json doc = parse_file(a);
  CHECK(doc.at("schema") == "mic.manifest/1");
  CHECK(doc.at("seed") == 42);
  CHECK(doc.at("version") == io::library_version());
  // Fixed key set: nothing time-dependent may sneak in.
  std::vector<std::string> keys;
  for (const auto& item : doc.items()) keys.push_back(item.key());
  CHECK(keys == std::vector<std::string>{"arguments", "command", "inputs",
                                         "outputs", "schema", "seed",
                                         "version"});
}

TEST_CASE("digests match the reference vectors") {
  TempDir tmp;
  const std::string path = tmp.path("blob");
  io::atomic_write(path, "");
  CHECK(io::file_digest(path) == "cbf29ce484222325");
  io::atomic_write(path, "a");
  CHECK(io::file_digest(path) == "af63dc4c8601ec8c");
  CHECK_THROWS_AS((void)io::file_digest(tmp.path("absent")), DataError);
}

TEST_CASE("atomic writes replace files and leave no temporaries") {
  TempDir tmp;
  const std::string path = tmp.path("out.txt");
  io::atomic_write(path, "first\n");
  io::atomic_write(path, "second\n");
  CHECK(slurp(path) == "second\n");

  int n_entries = 0;
  for (const auto& entry : std::filesystem::directory_iterator(tmp.dir)) {
    (void)entry;
    ++n_entries;
  }
  CHECK(n_entries == 1);
}

TEST_CASE("library version is the project version") {
  CHECK(io::library_version() != "0.0.0");
}
