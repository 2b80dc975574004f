// Python bindings for the main operations: dataset generation, experiment
// runs, diagnostics, exports, and the two ground-truth solvers.
#include "rslbfgs/harness.hpp"
#include "rslbfgs/karcher.hpp"
#include "rslbfgs/rayleigh.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdio>

namespace py = pybind11;
using namespace rslbfgs;

namespace {

std::string hex16(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Settings dicts are applied in insertion order, mirroring spec files, so
// `kind` / `algorithms` belong before per-algorithm keys.
ExperimentSpec spec_from_dict(const py::dict& settings) {
  ExperimentSpec spec;
  for (const auto& item : settings) {
    const std::string key = py::str(item.first);
    std::string value;
    if (py::isinstance<py::bool_>(item.second)) {
      value = item.second.cast<bool>() ? "1" : "0";
    } else {
      value = py::str(item.second);
    }
    if (!apply_key(spec, key, value)) {
      throw std::invalid_argument("unknown key '" + key + "'");
    }
  }
  return spec;
}

py::dict trace_to_dict(const RunTrace& trace) {
  py::dict out;
  out["status"] = std::string(run_status_name(trace.status));
  out["message"] = trace.message;
  std::vector<double> passes, objective, error;
  for (const auto& r : trace.records) {
    passes.push_back(r.passes);
    objective.push_back(r.objective);
    error.push_back(r.error);
  }
  out["passes"] = passes;
  out["objective"] = objective;
  out["error"] = error;
  out["grad_evals"] = trace.grad_evals;
  return out;
}

py::dict report_to_dict(const DiagnosticReport& report) {
  py::dict out;
  out["context"] = report.context;
  out["all_pass"] = report.all_pass();
  py::list rows;
  for (const auto& c : report.checks) {
    py::dict row;
    row["check"] = c.check;
    row["name"] = c.name;
    row["measured"] = c.measured;
    row["bound"] = c.bound;
    row["pass"] = c.pass;
    rows.append(row);
  }
  out["rows"] = rows;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Riemannian stochastic variance-reduced optimization: experiment "
      "harness and ground-truth solvers";

  m.def("preset_names", &preset_names, "Built-in experiment preset names.");

  m.def(
      "preset",
      [](const std::string& name) {
        const ExperimentSpec spec = preset_spec(name);
        std::ostringstream os;
        write_manifest(os, spec);
        return os.str();
      },
      py::arg("name"),
      "The named preset rendered as spec-file text.");

  m.def(
      "generate",
      [](const py::dict& settings) {
        const ExperimentSpec spec = spec_from_dict(settings);
        return py::make_tuple(spec.dataset_path(), hex16(generate_dataset(spec)));
      },
      py::arg("settings"),
      "Generates the dataset described by the settings dict; returns "
      "(path, fingerprint).");

  m.def(
      "run",
      [](const py::dict& settings) {
        const ResultBundle bundle = run_experiment(spec_from_dict(settings));
        py::dict out;
        out["dir"] = bundle.dir;
        out["all_ok"] = bundle.all_ok;
        out["oracle_value"] = bundle.oracle_value;
        out["dataset_fingerprint"] = hex16(bundle.spec.dataset_fingerprint);
        py::dict algos;
        for (const auto& r : bundle.results) {
          algos[py::str(r.name)] = trace_to_dict(r.trace);
        }
        out["algorithms"] = algos;
        return out;
      },
      py::arg("settings"),
      "Runs the experiment described by the settings dict and writes a "
      "result bundle; returns a summary dict with per-algorithm traces.");

  m.def(
      "diagnose_dataset",
      [](const std::string& path) { return report_to_dict(diagnose_dataset(path)); },
      py::arg("path"), "Runs the verification suite against a dataset file.");

  m.def(
      "diagnose_bundle",
      [](const std::string& dir) { return report_to_dict(diagnose_bundle(dir)); },
      py::arg("dir"), "Runs the verification suite against a result bundle.");

  m.def("export_bundle", &export_bundle, py::arg("dir"),
        "Writes merged.csv and plot.gp into the bundle directory.");

  m.def(
      "karcher_mean",
      [](const std::vector<Matrix>& matrices, double tol) {
        KarcherData data;
        data.matrices = matrices;
        return Matrix(karcher_oracle(data, tol).value);
      },
      py::arg("matrices"), py::arg("tol") = 1e-12,
      "Riemannian (geometric) mean of symmetric positive definite matrices "
      "under the affine-invariant metric.");

  m.def(
      "top_eigenpair",
      [](const Matrix& d_matrix) {
        EigData data;
        data.d_matrix = d_matrix;
        const EigOracle oracle = top_eig_oracle(data);
        return py::make_tuple(oracle.value, Vector(oracle.vector));
      },
      py::arg("d_matrix"),
      "Leading eigenvalue and eigenvector of (1/N) D D^T for a d-by-N data "
      "matrix D.");

  m.attr("__version__") = "0.1.0";
}
