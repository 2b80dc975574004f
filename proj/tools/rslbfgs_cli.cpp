// Command-line front end: dataset generation, experiment runs, diagnostics,
// and plot-ready exports.  All experiment parameters are plain `key=value`
// settings shared between flags and spec files; flags override the file.
#include "rslbfgs/harness.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace rslbfgs;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitDiagnostics = 3;

void print_usage(std::ostream& out) {
  out << "usage: rslbfgs <command> [options]\n"
         "\n"
         "commands:\n"
         "  generate   write the dataset described by the spec and print its\n"
         "             content fingerprint\n"
         "  run        run every configured algorithm and write a result\n"
         "             bundle (manifest, one trace CSV per algorithm)\n"
         "  diagnose   run the verification suite on a dataset or bundle\n"
         "  export     write merged.csv and plot.gp for a bundle\n"
         "  presets    list built-in presets\n"
         "\n"
         "spec options (generate, run):\n"
         "  --preset NAME     start from a built-in preset (applied first)\n"
         "  --spec FILE       apply a key=value spec file (applied second)\n"
         "  --KEY VALUE       set one spec key (applied last, in order);\n"
         "                    --KEY=VALUE works too\n"
         "\n"
         "common keys: kind, n, count, cond, d, N, gap, seed, epochs,\n"
         "  error-stop, dataset, dataset-fingerprint, output-dir, algorithms,\n"
         "  measure-every-iterate, check-vr-exactness, max-pair-snapshots,\n"
         "  and per-algorithm settings <algo>-eta1, <algo>-eta2, <algo>-R,\n"
         "  <algo>-M, <algo>-mb, <algo>-inner, <algo>-option\n"
         "\n"
         "diagnose options:\n"
         "  --dataset PATH | --bundle DIR\n"
         "\n"
         "export options:\n"
         "  --bundle DIR\n"
         "\n"
         "exit codes: 0 success, 1 usage error, 2 numerical failure,\n"
         "            3 failing diagnostics\n";
}

struct KeyValue {
  std::string key;
  std::string value;
};

// Splits argv into (key, value) pairs; both `--key value` and `--key=value`
// are accepted.  Returns false (after printing a message) on malformed input.
bool collect_flags(const std::vector<std::string>& args,
                   std::vector<KeyValue>& out) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.size() < 3 || a.rfind("--", 0) != 0) {
      std::cerr << "error: expected --key value, got '" << a << "'\n";
      return false;
    }
    const auto eq = a.find('=');
    if (eq != std::string::npos) {
      out.push_back({a.substr(2, eq - 2), a.substr(eq + 1)});
      continue;
    }
    if (i + 1 >= args.size()) {
      std::cerr << "error: flag '" << a << "' is missing a value\n";
      return false;
    }
    out.push_back({a.substr(2), args[++i]});
  }
  return true;
}

// Builds the experiment spec in documented order: preset, then spec file,
// then the remaining flags in command-line order.
ExperimentSpec build_spec(const std::vector<KeyValue>& flags) {
  ExperimentSpec spec;
  spec.algorithms = {{ "rsvlbfgs", default_algorithm_config("karcher", "rsvlbfgs") },
                     { "rsvrg", default_algorithm_config("karcher", "rsvrg") }};
  for (const auto& kv : flags) {
    if (kv.key == "preset") spec = preset_spec(kv.value);
  }
  for (const auto& kv : flags) {
    if (kv.key == "spec") apply_spec_file(spec, kv.value);
  }
  for (const auto& kv : flags) {
    if (kv.key == "preset" || kv.key == "spec") continue;
    if (!apply_key(spec, kv.key, kv.value)) {
      throw std::invalid_argument("unknown key '" + kv.key + "'");
    }
  }
  return spec;
}

int cmd_generate(const std::vector<KeyValue>& flags) {
  ExperimentSpec spec = build_spec(flags);
  const std::uint64_t fp = generate_dataset(spec);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
  std::cout << "dataset: " << spec.dataset_path() << "\n";
  std::cout << "fingerprint: " << buf << "\n";
  return kExitOk;
}

int cmd_run(const std::vector<KeyValue>& flags) {
  ExperimentSpec spec = build_spec(flags);
  const ResultBundle bundle = run_experiment(spec);
  for (const auto& r : bundle.results) {
    std::cout << r.name << ": " << run_status_name(r.trace.status);
    if (!r.trace.records.empty()) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.3g", r.trace.records.back().error);
      std::cout << "  passes=" << r.trace.records.back().passes
                << "  error=" << buf;
    }
    if (!r.trace.message.empty()) std::cout << "  (" << r.trace.message << ")";
    std::cout << "\n";
  }
  std::cout << "bundle: " << bundle.dir << "\n";
  if (bundle.results.empty()) {
    std::cerr << "error: no algorithm ran (see manifest notes)\n";
    return kExitNumerical;
  }
  return bundle.all_ok ? kExitOk : kExitNumerical;
}

int cmd_diagnose(const std::vector<KeyValue>& flags) {
  std::string dataset;
  std::string bundle;
  for (const auto& kv : flags) {
    if (kv.key == "dataset") {
      dataset = kv.value;
    } else if (kv.key == "bundle") {
      bundle = kv.value;
    } else {
      throw std::invalid_argument("diagnose does not accept key '" + kv.key + "'");
    }
  }
  if ((dataset.empty()) == (bundle.empty())) {
    throw std::invalid_argument("diagnose needs exactly one of --dataset or --bundle");
  }

  DiagnosticReport report;
  fs::path txt_path;
  fs::path csv_path;
  if (!dataset.empty()) {
    report = diagnose_dataset(dataset);
    txt_path = dataset + ".diagnostics.txt";
    csv_path = dataset + ".diagnostics.csv";
  } else {
    report = diagnose_bundle(bundle);
    txt_path = fs::path(bundle) / "diagnose.txt";
    csv_path = fs::path(bundle) / "diagnose.csv";
  }
  {
    std::ofstream out(txt_path);
    write_diagnostics_text(out, report);
    std::ofstream csv(csv_path);
    write_diagnostics_csv(csv, report);
  }
  write_diagnostics_text(std::cout, report);
  std::cout << "report: " << txt_path.string() << "\n";
  return report.all_pass() ? kExitOk : kExitDiagnostics;
}

int cmd_export(const std::vector<KeyValue>& flags) {
  std::string bundle;
  for (const auto& kv : flags) {
    if (kv.key == "bundle") {
      bundle = kv.value;
    } else {
      throw std::invalid_argument("export does not accept key '" + kv.key + "'");
    }
  }
  if (bundle.empty()) throw std::invalid_argument("export needs --bundle DIR");
  export_bundle(bundle);
  std::cout << "wrote " << (fs::path(bundle) / "merged.csv").string() << "\n";
  std::cout << "wrote " << (fs::path(bundle) / "plot.gp").string() << "\n";
  return kExitOk;
}

int cmd_presets() {
  for (const auto& name : preset_names()) std::cout << name << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  for (const auto& a : args) {
    if (a == "-h" || a == "--help" || a == "help") {
      print_usage(std::cout);
      return kExitOk;
    }
  }
  if (args.empty()) {
    print_usage(std::cerr);
    return kExitUsage;
  }
  const std::string command = args.front();
  std::vector<KeyValue> flags;
  if (!collect_flags({args.begin() + 1, args.end()}, flags)) return kExitUsage;

  try {
    if (command == "generate") return cmd_generate(flags);
    if (command == "run") return cmd_run(flags);
    if (command == "diagnose") return cmd_diagnose(flags);
    if (command == "export") return cmd_export(flags);
    if (command == "presets") return cmd_presets();
    std::cerr << "error: unknown command '" << command << "'\n\n";
    print_usage(std::cerr);
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
