#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mic/evaluation.hpp"
#include "mic/inference.hpp"
#include "mic/layout.hpp"
#include "mic/moments.hpp"
#include "mic/types.hpp"

/// File formats. Event logs and graphs are comma-separated text with one
/// header line; everything else is a JSON document carrying a versioned
/// "schema" field. All reals round-trip exactly. Writes go through a
/// write-temp-then-rename so readers never observe partial artifacts.
namespace mic::io {

/// Parses `user,cascade,timestamp` rows (header required, `#` lines skipped).
/// A `# horizon <value>` comment line, when present, fixes the horizon;
/// otherwise `horizon` is used, and if that is negative the last event time.
/// Malformed rows raise DataError with the path and line number.
[[nodiscard]] EventLog read_event_log(const std::string& path,
                                      double horizon = -1.0);
void write_event_log(const std::string& path, const EventLog& log);

/// Parses a `src,dst[,weight]` edge list (header required). A missing weight
/// column means adjacency only and is recorded as weight 1. `n_users` == 0
/// infers the node count from the largest id; ids at or past a declared count,
/// negative weights and duplicate edges raise DataError.
[[nodiscard]] UserGraph read_graph(const std::string& path, int n_users = 0);
void write_graph(const std::string& path, const UserGraph& graph);

/// Full parameter document: model parameters plus the influence weights (the
/// model itself does not own the graph).
struct ParamsDocument {
  ModelParams params;
  UserGraph graph;
  std::vector<double> trajectory;  ///< optional fit trajectory, may be empty
};

void write_params(const std::string& path, const ModelParams& params,
                  const UserGraph& graph,
                  const std::vector<double>& trajectory = {});
[[nodiscard]] ParamsDocument read_params(const std::string& path);

void write_metrics(const std::string& path, const MetricReport& report);
void write_moment_curves(const std::string& path, const MomentCurves& curves);
void write_layout(const std::string& path, const LayoutDocument& doc);
void write_cross_validation(const std::string& path,
                            const CrossValidationResult& result);

/// Provenance record written next to every CLI artifact. Contains no
/// wall-clock data so reruns produce identical bytes.
struct Manifest {
  std::string command;
  std::vector<std::string> arguments;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;   ///< path -> content digest
  std::map<std::string, std::string> outputs;  ///< path -> content digest
  std::string version;
};

void write_manifest(const std::string& path, const Manifest& manifest);

/// FNV-1a 64-bit digest of the file's bytes, as 16 lowercase hex digits.
[[nodiscard]] std::string file_digest(const std::string& path);

/// Writes contents to a sibling temp file and renames it over `path`.
void atomic_write(const std::string& path, const std::string& contents);

[[nodiscard]] std::string library_version();

}  // namespace mic::io
