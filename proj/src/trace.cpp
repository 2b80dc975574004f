#include "rslbfgs/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rslbfgs {

namespace {

constexpr const char* kCsvHeader = "passes,objective,error";

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

const char* run_status_name(RunStatus status) {
  switch (status) {
    case RunStatus::Ok:
      return "ok";
    case RunStatus::Diverged:
      return "diverged";
    case RunStatus::InfeasibleIterate:
      return "infeasible-iterate";
  }
  return "unknown";
}

void write_trace_csv(std::ostream& out,
                     const std::vector<TraceRecord>& records) {
  out << kCsvHeader << "\n";
  for (const TraceRecord& r : records) {
    out << fmt17(r.passes) << ',' << fmt17(r.objective) << ','
        << fmt17(r.error) << "\n";
  }
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::runtime_error("read_trace_csv: missing or unexpected header");
  }
  std::vector<TraceRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::istringstream row(line);
    std::string field;
    double cols[3];
    for (int i = 0; i < 3; ++i) {
      if (!std::getline(row, field, ',')) {
        throw std::runtime_error("read_trace_csv: short row: " + line);
      }
      // strtod instead of stod: stod throws on subnormal values (underflow
      // sets ERANGE), but the writer legitimately emits them near zero
      const char* begin = field.c_str();
      char* end = nullptr;
      cols[i] = std::strtod(begin, &end);
      if (end == begin || *end != '\0') {
        throw std::runtime_error("read_trace_csv: bad number '" + field + "'");
      }
    }
    if (std::getline(row, field, ',')) {
      throw std::runtime_error("read_trace_csv: extra fields: " + line);
    }
    TraceRecord r;
    r.epoch = Index(records.size());
    r.passes = cols[0];
    r.objective = cols[1];
    r.error = cols[2];
    records.push_back(r);
  }
  return records;
}

void write_run_info(std::ostream& out, const RunTrace& trace) {
  out << "run: " << trace.name << "\n";
  if (!trace.config_summary.empty()) {
    out << "config: " << trace.config_summary << "\n";
  }
  out << "status: " << run_status_name(trace.status) << "\n";
  if (!trace.message.empty()) {
    out << "message: " << trace.message << "\n";
  }
  out << "measurements: " << trace.records.size() << "\n";
  if (!trace.records.empty()) {
    const TraceRecord& last = trace.records.back();
    out << "final epoch: " << last.epoch << "\n";
    out << "final passes: " << fmt17(last.passes) << "\n";
    out << "final objective: " << fmt17(last.objective) << "\n";
    out << "final error: " << fmt17(last.error) << "\n";
  }
  Index accepted = 0;
  Index rejected = 0;
  double z_gap_max = 0.0;
  double vr_dev_max = std::numeric_limits<double>::quiet_NaN();
  for (const EpochStats& s : trace.epoch_stats) {
    accepted += s.pairs_accepted;
    rejected += s.pairs_rejected;
    z_gap_max = std::max(z_gap_max, s.z_gap_max);
    if (std::isfinite(s.vr_dev_max) &&
        !(vr_dev_max >= s.vr_dev_max)) {  // NaN-aware max
      vr_dev_max = s.vr_dev_max;
    }
  }
  out << "pairs accepted: " << accepted << "\n";
  out << "pairs rejected: " << rejected << "\n";
  out << "max stored-z gap: " << fmt17(z_gap_max) << "\n";
  if (std::isfinite(vr_dev_max)) {
    out << "max vr deviation: " << fmt17(vr_dev_max) << "\n";
  }
  out << "pair snapshots: " << trace.snapshots.size() << "\n";
  out << "component-gradient evaluations: " << trace.grad_evals << "\n";
  out << "wall seconds: " << fmt17(trace.seconds) << "\n";
  if (!trace.epoch_stats.empty()) {
    out << "per-epoch: epoch accepted rejected dir_min dir_mean dir_max\n";
    char buf[160];
    for (const EpochStats& s : trace.epoch_stats) {
      const double mean = s.dir_count > 0 ? s.dir_norm_sum / double(s.dir_count)
                                          : std::numeric_limits<double>::quiet_NaN();
      std::snprintf(buf, sizeof(buf), "  %ld %ld %ld %.6g %.6g %.6g\n",
                    long(s.epoch), long(s.pairs_accepted), long(s.pairs_rejected),
                    s.dir_norm_min, mean, s.dir_norm_max);
      out << buf;
    }
  }
}

std::optional<double> passes_to_threshold(
    const std::vector<TraceRecord>& records, double threshold) {
  for (const TraceRecord& r : records) {
    if (std::isfinite(r.error) && r.error <= threshold) {
      return r.passes;
    }
  }
  return std::nullopt;
}

}  // namespace rslbfgs
