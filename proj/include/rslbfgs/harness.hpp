#pragma once

#include "rslbfgs/dataset_io.hpp"
#include "rslbfgs/optimizer.hpp"
#include "rslbfgs/verification.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rslbfgs {

/// One algorithm entry in an experiment: a runner name ("rsvlbfgs", "rsvrg",
/// or "vrpca") plus its configuration.  The RNG seed inside the config is
/// ignored; run_experiment derives per-algorithm seeds from the master seed.
struct AlgorithmSpec {
  std::string name;
  OptimizerConfig config;
};

/// Complete, replayable description of one experiment.  The same struct backs
/// the CLI flags, the plain-text spec file, and the manifest written next to
/// the results; every field maps to a `key=value` line.
struct ExperimentSpec {
  std::string kind = "karcher";  // "karcher" | "eig"

  // generator parameters (the subset matching `kind` is used)
  Index n = 20;        // SPD matrix order
  Index count = 50;    // number of SPD matrices
  double cond = 100;   // SPD condition number
  Index d = 100;       // data vector dimension
  Index nsamples = 10000;  // number of data vectors (key: N)
  double gap = 0.05;       // eigengap

  std::uint64_t seed = 20260819;  // master seed

  // run control
  Index epochs = 20;
  double error_stop = 1e-14;
  bool measure_every_iterate = false;
  bool check_vr_exactness = false;
  Index max_pair_snapshots = 64;

  std::string dataset;  // dataset file; empty means "<output-dir>/dataset.bin"
  std::uint64_t dataset_fingerprint = 0;  // expected content hash; 0 = unpinned
  std::string output_dir = "out";

  std::vector<AlgorithmSpec> algorithms;

  std::string dataset_path() const;
  AlgorithmSpec* find_algorithm(std::string_view name);
  const AlgorithmSpec* find_algorithm(std::string_view name) const;

  /// Structural checks (kind, generator parameters, algorithm names).
  /// Throws std::invalid_argument.
  void validate() const;
};

ExperimentSpec preset_spec(const std::string& name);
std::vector<std::string> preset_names();

/// Default config for one algorithm under the given problem kind.
OptimizerConfig default_algorithm_config(const std::string& kind,
                                         const std::string& algo);

/// Applies one `key=value` setting.  Returns false when the key is unknown;
/// throws std::invalid_argument on an unparsable value.  Settings are order
/// sensitive: `kind` resets the algorithm list to that kind's defaults and
/// `algorithms` rebuilds it, so both belong before per-algorithm keys.
bool apply_key(ExperimentSpec& spec, const std::string& key,
               const std::string& value);

/// Reads a plain-text spec file (one key=value per line, `#` comments) and
/// applies every line in order.  Unknown keys throw std::invalid_argument.
void apply_spec_file(ExperimentSpec& spec, const std::string& path);

/// Writes the spec as a replayable manifest; `notes` become trailing comment
/// lines.
void write_manifest(std::ostream& out, const ExperimentSpec& spec,
                    const std::vector<std::string>& notes = {});

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t algorithm_seed(std::uint64_t master, std::string_view algo);

/// Generates the dataset described by the spec, writes it to
/// spec.dataset_path(), and returns its content fingerprint.
std::uint64_t generate_dataset(const ExperimentSpec& spec);

struct AlgorithmResult {
  std::string name;
  RunTrace trace;
};

struct ResultBundle {
  ExperimentSpec spec;  // with the actual dataset fingerprint filled in
  double oracle_value = 0;  // objective at the oracle (karcher) / top eigenvalue (eig)
  std::vector<AlgorithmResult> results;
  bool all_ok = true;  // every algorithm finished with RunStatus::Ok
  std::string dir;     // bundle directory (== spec.output_dir)
};

/// Runs the experiment end to end: ensures the dataset exists and matches the
/// pinned fingerprint, computes the oracle once, runs every algorithm, and
/// writes the bundle (manifest.txt, one CSV + info file per algorithm, a
/// correction-pair snapshot file, and a small gradient-check report).
/// Algorithm divergence is recorded in the bundle, not thrown.
ResultBundle run_experiment(const ExperimentSpec& spec);

/// Full diagnostic suite against a dataset file: gradient finite-difference
/// checks, triangle comparison on the problem's manifold, curvature-pair
/// bounds and the two-loop-vs-dense oracle on pairs harvested from a short
/// run, a smoothness/convexity probe near the oracle, and the contraction
/// rate report.
DiagnosticReport diagnose_dataset(const std::string& dataset_path);

/// Same suite against a result bundle, reusing the bundle's harvested pair
/// snapshots and reporting per-algorithm pair rejection counts.
DiagnosticReport diagnose_bundle(const std::string& bundle_dir);

/// Writes `merged.csv` (passes + one error column per algorithm, union of the
/// pass grids, `nan` where a trace has no row) and `plot.gp` (gnuplot script
/// for the log-error decay figure) into the bundle directory.  Throws
/// std::invalid_argument if any trace is empty.
void export_bundle(const std::string& bundle_dir);

}  // namespace rslbfgs
