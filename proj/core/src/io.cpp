#include "mic/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>
#include <system_error>

#include <json.hpp>

#include "mic/errors.hpp"

namespace mic::io {
namespace {

using nlohmann::json;

constexpr std::string_view kEventHeader = "user,cascade,timestamp";
constexpr std::string_view kGraphHeader3 = "src,dst,weight";
constexpr std::string_view kGraphHeader2 = "src,dst";
constexpr std::string_view kHorizonPrefix = "# horizon ";

/// Shortest-possible decimal that parses back to the same double.
std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

[[noreturn]] void row_error(const std::string& path, int line,
                            const std::string& what) {
  throw DataError(path + ":" + std::to_string(line) + ": " + what);
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

int parse_id(std::string_view field, const std::string& path, int line,
             const char* what) {
  int value = 0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    row_error(path, line, std::string("malformed ") + what + " '" +
                              std::string(field) + "'");
  }
  if (value < 0) {
    row_error(path, line, std::string(what) + " must be non-negative");
  }
  return value;
}

double parse_real(std::string_view field, const std::string& path, int line,
                  const char* what) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    row_error(path, line, std::string("malformed ") + what + " '" +
                              std::string(field) + "'");
  }
  return value;
}

std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows, const std::string& path,
                                 const char* what) {
  if (!rows.is_array()) {
    throw DataError(path + ": " + what + " must be an array of rows");
  }
  const auto n_rows = static_cast<Eigen::Index>(rows.size());
  Eigen::Index n_cols = 0;
  if (n_rows > 0) n_cols = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd m(n_rows, n_cols);
  for (Eigen::Index r = 0; r < n_rows; ++r) {
    const json& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != n_cols) {
      throw DataError(path + ": " + what + " rows have unequal lengths");
    }
    for (Eigen::Index c = 0; c < n_cols; ++c) {
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json parse_document(const std::string& path, const char* schema) {
  std::ifstream in = open_for_read(path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("schema", "") != schema) {
    throw DataError(path + ": expected a document with schema '" +
                    std::string(schema) + "'");
  }
  return doc;
}

void write_document(const std::string& path, const json& doc) {
  atomic_write(path, doc.dump(2) + "\n");
}

}  // namespace

EventLog read_event_log(const std::string& path, double horizon) {
  std::ifstream in = open_for_read(path);
  std::vector<Event> events;
  std::string raw;
  int line = 0;
  bool header_seen = false;
  double file_horizon = -1.0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = strip_cr(raw);
    if (text.empty()) continue;
    if (text[0] == '#') {
      if (text.rfind(kHorizonPrefix, 0) == 0) {
        file_horizon = parse_real(
            std::string_view(text).substr(kHorizonPrefix.size()), path, line,
            "horizon");
      }
      continue;
    }
    if (!header_seen) {
      if (text != kEventHeader) {
        row_error(path, line,
                  "expected header '" + std::string(kEventHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto fields = split_fields(text);
    if (fields.size() != 3) {
      row_error(path, line, "expected 3 fields, got " +
                                std::to_string(fields.size()));
    }
    Event e;
    e.user = parse_id(fields[0], path, line, "user id");
    e.cascade = parse_id(fields[1], path, line, "cascade id");
    e.time = parse_real(fields[2], path, line, "timestamp");
    if (!std::isfinite(e.time) || e.time < 0.0) {
      row_error(path, line, "timestamps must be finite and non-negative");
    }
    events.push_back(e);
  }
  if (!header_seen) throw DataError(path + ": missing header line");
  if (file_horizon >= 0.0) {
    horizon = file_horizon;
  } else if (horizon < 0.0) {
    horizon = 0.0;
    for (const auto& e : events) horizon = std::max(horizon, e.time);
  }
  try {
    return EventLog(std::move(events), horizon);
  } catch (const std::invalid_argument& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_event_log(const std::string& path, const EventLog& log) {
  std::string out;
  out += std::string(kHorizonPrefix) + format_double(log.horizon()) + "\n";
  out += std::string(kEventHeader) + "\n";
  for (const auto& e : log.events()) {
    out += std::to_string(e.user) + "," + std::to_string(e.cascade) + "," +
           format_double(e.time) + "\n";
  }
  atomic_write(path, out);
}

UserGraph read_graph(const std::string& path, int n_users) {
  std::ifstream in = open_for_read(path);
  std::string raw;
  int line = 0;
  bool header_seen = false;
  struct Edge {
    int src, dst, line;
    double weight;
  };
  std::vector<Edge> edges;
  int max_id = -1;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = strip_cr(raw);
    if (text.empty() || text[0] == '#') continue;
    if (!header_seen) {
      if (text != kGraphHeader3 && text != kGraphHeader2) {
        row_error(path, line,
                  "expected header '" + std::string(kGraphHeader3) + "' or '" +
                      std::string(kGraphHeader2) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto fields = split_fields(text);
    if (fields.size() != 2 && fields.size() != 3) {
      row_error(path, line, "expected 2 or 3 fields, got " +
                                std::to_string(fields.size()));
    }
    Edge e{};
    e.src = parse_id(fields[0], path, line, "source id");
    e.dst = parse_id(fields[1], path, line, "destination id");
    e.weight =
        fields.size() == 3 ? parse_real(fields[2], path, line, "weight") : 1.0;
    e.line = line;
    if (!std::isfinite(e.weight) || e.weight < 0.0) {
      row_error(path, line, "weights must be finite and non-negative");
    }
    max_id = std::max({max_id, e.src, e.dst});
    edges.push_back(e);
  }
  if (!header_seen) throw DataError(path + ": missing header line");
  if (n_users == 0) n_users = max_id + 1;
  if (max_id >= n_users) {
    throw DataError(path + ": node id " + std::to_string(max_id) +
                    " outside the declared count " + std::to_string(n_users));
  }
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(n_users, n_users);
  for (const auto& e : edges) {
    if (weights(e.src, e.dst) != 0.0) {
      row_error(path, e.line, "duplicate edge " + std::to_string(e.src) +
                                  " -> " + std::to_string(e.dst));
    }
    weights(e.src, e.dst) = e.weight;
  }
  return UserGraph(std::move(weights));
}

void write_graph(const std::string& path, const UserGraph& graph) {
  std::string out{kGraphHeader3};
  out += "\n";
  const Eigen::MatrixXd& w = graph.weights();
  for (Eigen::Index src = 0; src < w.rows(); ++src) {
    for (Eigen::Index dst = 0; dst < w.cols(); ++dst) {
      if (w(src, dst) != 0.0) {
        out += std::to_string(src) + "," + std::to_string(dst) + "," +
               format_double(w(src, dst)) + "\n";
      }
    }
  }
  atomic_write(path, out);
}

void write_params(const std::string& path, const ModelParams& params,
                  const UserGraph& graph,
                  const std::vector<double>& trajectory) {
  json doc;
  doc["schema"] = "mic.params/1";
  doc["n_users"] = params.n_users();
  doc["n_cascades"] = params.n_cascades();
  doc["kernel"] = {{"tau", params.kernel.tau}};
  doc["mixing"] = {{"kind", to_string(params.mixing.kind)},
                   {"beta", params.mixing.beta}};
  doc["baselines"] = matrix_to_json(params.baselines);
  doc["sigma"] = matrix_to_json(params.sigma);
  json triplets = json::array();
  const Eigen::MatrixXd& w = graph.weights();
  for (Eigen::Index src = 0; src < w.rows(); ++src) {
    for (Eigen::Index dst = 0; dst < w.cols(); ++dst) {
      if (w(src, dst) != 0.0) {
        triplets.push_back(json::array(
            {static_cast<int>(src), static_cast<int>(dst), w(src, dst)}));
      }
    }
  }
  doc["weights"] = std::move(triplets);
  if (!trajectory.empty()) doc["trajectory"] = trajectory;
  write_document(path, doc);
}

ParamsDocument read_params(const std::string& path) {
  const json doc = parse_document(path, "mic.params/1");
  ParamsDocument out;
  try {
    const int n_users = doc.at("n_users").get<int>();
    out.params.baselines = matrix_from_json(doc.at("baselines"), path, "baselines");
    out.params.sigma = matrix_from_json(doc.at("sigma"), path, "sigma");
    out.params.kernel.tau = doc.at("kernel").at("tau").get<double>();
    out.params.mixing.kind =
        mixing_kind_from_string(doc.at("mixing").at("kind").get<std::string>());
    out.params.mixing.beta = doc.at("mixing").at("beta").get<double>();
    Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(n_users, n_users);
    for (const json& t : doc.at("weights")) {
      const int src = t.at(0).get<int>();
      const int dst = t.at(1).get<int>();
      if (src < 0 || src >= n_users || dst < 0 || dst >= n_users) {
        throw DataError(path + ": weight triplet references a user outside 0.." +
                        std::to_string(n_users - 1));
      }
      weights(src, dst) = t.at(2).get<double>();
    }
    out.graph = UserGraph(std::move(weights));
    if (doc.contains("trajectory")) {
      out.trajectory = doc.at("trajectory").get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  try {
    out.params.validate(out.graph);
  } catch (const std::invalid_argument& e) {
    throw DataError(path + ": " + e.what());
  }
  if (out.params.n_cascades() !=
      static_cast<int>(doc.at("n_cascades").get<int>())) {
    throw DataError(path + ": n_cascades disagrees with the baseline matrix");
  }
  return out;
}

void write_metrics(const std::string& path, const MetricReport& report) {
  json doc;
  doc["schema"] = "mic.metrics/1";
  doc["test_loglik"] = report.test_loglik;
  doc["context_fractions"] = report.context_fractions;
  doc["loglik_vs_train_fraction"] = report.loglik_vs_train_fraction;
  doc["inverse_l1_per_cascade"] = report.inverse_l1_per_cascade;
  doc["inverse_l1_overall"] = report.inverse_l1_overall;
  json pearson = json::array();
  for (const auto& r : report.pearson_per_cascade) {
    if (r.has_value()) {
      pearson.push_back(*r);
    } else {
      pearson.push_back(nullptr);
    }
  }
  doc["pearson_per_cascade"] = std::move(pearson);
  const auto ranked = [](const RankedActivity& r) {
    return json{{"real", vector_to_json(r.real)},
                {"sim_mean", vector_to_json(r.sim_mean)},
                {"sim_std", vector_to_json(r.sim_std)}};
  };
  doc["ranked_users"] = ranked(report.ranked_users);
  doc["ranked_cascades"] = ranked(report.ranked_cascades);
  json quantiles = json::array();
  for (const auto& [fraction, value] : report.quantile_loglik) {
    quantiles.push_back({{"fraction", fraction}, {"value", value}});
  }
  doc["quantile_loglik"] = std::move(quantiles);
  write_document(path, doc);
}

void write_moment_curves(const std::string& path, const MomentCurves& curves) {
  json doc;
  doc["schema"] = "mic.moments/1";
  doc["times"] = curves.times;
  doc["expected_intensity"] = matrix_to_json(curves.expected_intensity);
  doc["expected_counts"] = matrix_to_json(curves.expected_counts);
  json per_cascade = json::array();
  for (const auto& m : curves.per_cascade_intensity) {
    per_cascade.push_back(matrix_to_json(m));
  }
  doc["per_cascade_intensity"] = std::move(per_cascade);
  doc["stationary_intensity"] = vector_to_json(curves.stationary_intensity);
  doc["stable"] = curves.stable;
  write_document(path, doc);
}

void write_layout(const std::string& path, const LayoutDocument& layout) {
  json doc;
  doc["schema"] = "mic.layout/1";
  doc["layer_offset"] = layout.layer_offset;
  json cascades = json::array();
  for (const auto& n : layout.cascade_nodes) {
    cascades.push_back(
        {{"id", n.id}, {"x", n.x}, {"y", n.y}, {"size", n.size}});
  }
  doc["cascade_nodes"] = std::move(cascades);
  json users = json::array();
  for (const auto& n : layout.user_nodes) {
    users.push_back({{"id", n.id},
                     {"x", n.x},
                     {"y", n.y},
                     {"size", n.size},
                     {"mixture", vector_to_json(n.mixture)}});
  }
  doc["user_nodes"] = std::move(users);
  const auto edges = [](const std::vector<LayoutEdge>& list) {
    json out = json::array();
    for (const auto& e : list) {
      out.push_back({{"from", e.from}, {"to", e.to}, {"weight", e.weight}});
    }
    return out;
  };
  doc["cascade_edges"] = edges(layout.cascade_edges);
  doc["user_edges"] = edges(layout.user_edges);
  json cross = json::array();
  for (const auto& e : layout.cross_edges) {
    cross.push_back(
        {{"cascade", e.cascade}, {"user", e.user}, {"weight", e.weight}});
  }
  doc["cross_edges"] = std::move(cross);
  write_document(path, doc);
}

void write_cross_validation(const std::string& path,
                            const CrossValidationResult& result) {
  json doc;
  doc["schema"] = "mic.crossval/1";
  doc["best_beta"] = result.best_beta;
  doc["best_tau"] = result.best_tau;
  json table = json::array();
  for (const auto& cell : result.table) {
    json row{{"beta", cell.beta}, {"tau", cell.tau}, {"ok", cell.ok}};
    if (cell.ok) {
      row["test_log_likelihood"] = cell.test_log_likelihood;
    } else {
      row["test_log_likelihood"] = nullptr;
      row["error"] = cell.error;
    }
    table.push_back(std::move(row));
  }
  doc["table"] = std::move(table);
  write_document(path, doc);
}

void write_manifest(const std::string& path, const Manifest& manifest) {
  json doc;
  doc["schema"] = "mic.manifest/1";
  doc["command"] = manifest.command;
  doc["arguments"] = manifest.arguments;
  doc["seed"] = manifest.seed;
  doc["inputs"] = manifest.inputs;
  doc["outputs"] = manifest.outputs;
  doc["version"] = manifest.version;
  write_document(path, doc);
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::uint64_t hash = 14695981039346656037ULL;
  char buffer[4096];
  while (in.read(buffer, sizeof buffer) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 1099511628211ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(hash));
  return hex;
}

void atomic_write(const std::string& path, const std::string& contents) {
  const std::filesystem::path target(path);
  const std::filesystem::path temp =
      target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + temp.string());
    out << contents;
    out.flush();
    if (!out) throw DataError("failed writing " + temp.string());
  }
  std::error_code ec;
  std::filesystem::rename(temp, target, ec);
  if (ec) {
    throw DataError("cannot move " + temp.string() + " over " + path + ": " +
                    ec.message());
  }
}

std::string library_version() {
#ifdef MIC_VERSION
  return MIC_VERSION;
#else
  return "0.0.0";
#endif
}

}  // namespace mic::io
