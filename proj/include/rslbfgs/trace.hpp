#pragma once

#include "rslbfgs/manifold.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rslbfgs {

/// How a run terminated.
enum class RunStatus {
  Ok,                // reached the epoch budget or the error-stop threshold
  Diverged,          // objective became non-finite or blew past its start
  InfeasibleIterate  // an iterate left the manifold beyond tolerance
};

const char* run_status_name(RunStatus status);

/// One measurement row.  `passes` counts full-data sweeps: 1 for each anchor
/// gradient plus minibatch/N for each inner iteration, so a standard epoch
/// costs ~2; measurement itself is not billed.  `error` is the
/// problem-specific distance-to-optimum, NaN when no reference optimum was
/// supplied.  `epoch` and `seconds` are in-memory extras, not serialized.
struct TraceRecord {
  Index epoch = 0;
  double passes = 0.0;
  double seconds = 0.0;
  double objective = 0.0;
  double error = std::numeric_limits<double>::quiet_NaN();
};

/// Per-epoch counters for diagnosing the correction-pair machinery.
struct EpochStats {
  Index epoch = 0;
  Index pairs_accepted = 0;
  Index pairs_rejected = 0;   // failed the curvature filter
  double dir_norm_min = std::numeric_limits<double>::quiet_NaN();
  double dir_norm_max = std::numeric_limits<double>::quiet_NaN();
  double dir_norm_sum = 0.0;
  Index dir_count = 0;
  // Largest relative gap between the stored displacement z and the exact
  // between-events displacement log(u_prev, u).  Zero when they coincide.
  double z_gap_max = 0.0;
  // Largest deviation of the variance-reduced gradient from the exact full
  // gradient under full-batch settings (populated only when requested).
  double vr_dev_max = std::numeric_limits<double>::quiet_NaN();
};

/// Raw copy of the L-BFGS memory right after a pair event, all vectors
/// expressed at `base`.  Used by the diagnostics suite.
struct PairSnapshot {
  Index counter = 0;  // global inner-iteration counter at capture time
  Matrix base;
  std::vector<std::pair<Matrix, Matrix>> pairs;  // (z_k, y_k), oldest first
};

/// Full result of one optimizer run.
struct RunTrace {
  std::string name;
  RunStatus status = RunStatus::Ok;
  std::string message;  // detail for abnormal termination, empty otherwise
  std::string config_summary;  // one-line echo of the configuration and seed
  std::vector<TraceRecord> records;
  std::vector<EpochStats> epoch_stats;
  std::vector<PairSnapshot> snapshots;
  Matrix final_point;
  double seconds = 0.0;
  std::uint64_t grad_evals = 0;  // component-gradient evaluations
};

/// Writes records as CSV with a `passes,objective,error` header.  Doubles are
/// printed with %.17g so a read-back is value-exact.
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& records);

/// Parses the output of write_trace_csv.  Rows come back with epoch set to
/// the row index and seconds zeroed (neither is serialized).  Throws
/// std::runtime_error on a malformed header or row.
std::vector<TraceRecord> read_trace_csv(std::istream& in);

/// Human-readable run summary (configuration, status, totals, pair
/// statistics) — the sidecar next to the CSV.
void write_run_info(std::ostream& out, const RunTrace& trace);

/// Passes needed to first reach `error <= threshold`, if the run ever did.
std::optional<double> passes_to_threshold(const std::vector<TraceRecord>& records,
                                          double threshold);

}  // namespace rslbfgs
