#include "rslbfgs/harness.hpp"

#include "rslbfgs/karcher.hpp"
#include "rslbfgs/rayleigh.hpp"
#include "rslbfgs/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace rslbfgs {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* want) {
  throw std::invalid_argument("bad value for " + key + ": '" + value +
                              "' (expected " + want + ")");
}

double parse_f64(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    bad_value(key, value, "a number");
  }
  if (pos != value.size()) bad_value(key, value, "a number");
  return v;
}

Index parse_index(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &pos);
  } catch (const std::exception&) {
    bad_value(key, value, "an integer");
  }
  if (pos != value.size()) bad_value(key, value, "an integer");
  return static_cast<Index>(v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    bad_value(key, value, "an unsigned integer");
  }
  if (pos != value.size()) bad_value(key, value, "an unsigned integer");
  return v;
}

std::uint64_t parse_hex64(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &pos, 16);
  } catch (const std::exception&) {
    bad_value(key, value, "a hex fingerprint");
  }
  if (pos != value.size()) bad_value(key, value, "a hex fingerprint");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  bad_value(key, value, "0/1/true/false");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> names = {"rsvlbfgs", "rsvrg", "vrpca"};
  return names;
}

bool is_known_algorithm(std::string_view name) {
  const auto& names = known_algorithms();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::vector<AlgorithmSpec> default_algorithms(const std::string& kind) {
  std::vector<AlgorithmSpec> algos;
  std::vector<std::string> names = {"rsvlbfgs", "rsvrg"};
  if (kind == "eig") names.push_back("vrpca");
  for (const auto& n : names) {
    algos.push_back({n, default_algorithm_config(kind, n)});
  }
  return algos;
}

// Pulls the measured value of one report row, if present (newest wins).
std::optional<double> find_measured(const DiagnosticReport& rep,
                                    std::string_view check,
                                    std::string_view name) {
  std::optional<double> out;
  for (const auto& c : rep.checks) {
    if (c.check == check && c.name == name) out = c.measured;
  }
  return out;
}

}  // namespace

std::string ExperimentSpec::dataset_path() const {
  if (!dataset.empty()) return dataset;
  return (fs::path(output_dir) / "dataset.bin").string();
}

AlgorithmSpec* ExperimentSpec::find_algorithm(std::string_view name) {
  for (auto& a : algorithms) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const AlgorithmSpec* ExperimentSpec::find_algorithm(std::string_view name) const {
  return const_cast<ExperimentSpec*>(this)->find_algorithm(name);
}

void ExperimentSpec::validate() const {
  if (kind != "karcher" && kind != "eig") {
    throw std::invalid_argument("kind must be karcher or eig, got '" + kind + "'");
  }
  if (kind == "karcher") {
    if (n < 2) throw std::invalid_argument("n must be >= 2");
    if (count < 1) throw std::invalid_argument("count must be >= 1");
    if (!(cond >= 1.0) || !std::isfinite(cond)) {
      throw std::invalid_argument("cond must be a finite number >= 1");
    }
  } else {
    if (d < 2) throw std::invalid_argument("d must be >= 2");
    if (nsamples < d) throw std::invalid_argument("N must be >= d");
    if (!(gap > 0.0) || !(gap < 1.0)) {
      throw std::invalid_argument("gap must lie in (0, 1)");
    }
  }
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (max_pair_snapshots < 0) {
    throw std::invalid_argument("max-pair-snapshots must be >= 0");
  }
  if (algorithms.empty()) {
    throw std::invalid_argument("algorithm list is empty");
  }
  for (std::size_t i = 0; i < algorithms.size(); ++i) {
    const auto& a = algorithms[i];
    if (!is_known_algorithm(a.name)) {
      throw std::invalid_argument("unknown algorithm '" + a.name + "'");
    }
    if (a.name == "vrpca" && kind != "eig") {
      throw std::invalid_argument("vrpca only applies to the eig problem");
    }
    for (std::size_t j = i + 1; j < algorithms.size(); ++j) {
      if (algorithms[j].name == a.name) {
        throw std::invalid_argument("algorithm '" + a.name + "' listed twice");
      }
    }
  }
}

OptimizerConfig default_algorithm_config(const std::string& kind,
                                         const std::string& algo) {
  OptimizerConfig cfg;
  if (kind == "karcher") {
    cfg.minibatch = 10;
    cfg.pair_interval = 1;
    cfg.memory_depth = 2;
    cfg.option = CorrectionOption::TransportedStep;
    cfg.eta1 = algo == "rsvlbfgs" ? 0.05 : 0.2;
    cfg.eta2 = 1.0;
  } else {
    cfg.minibatch = 100;
    cfg.pair_interval = 10;
    cfg.memory_depth = 10;
    cfg.option = CorrectionOption::TransportedVrGradient;
    cfg.eta1 = algo == "rsvlbfgs" ? 0.001 : 0.05;
    cfg.eta2 = 0.1;
  }
  return cfg;
}

ExperimentSpec preset_spec(const std::string& name) {
  ExperimentSpec s;
  s.output_dir = name;
  auto karcher = [&](Index n, Index count, double cond, Index mb, Index epochs) {
    s.kind = "karcher";
    s.n = n;
    s.count = count;
    s.cond = cond;
    s.epochs = epochs;
    s.algorithms = default_algorithms(s.kind);
    for (auto& a : s.algorithms) a.config.minibatch = mb;
  };
  auto eig = [&](Index d, Index nsamples, double gap, Index pair_interval,
                 Index epochs) {
    s.kind = "eig";
    s.d = d;
    s.nsamples = nsamples;
    s.gap = gap;
    s.epochs = epochs;
    s.algorithms = default_algorithms(s.kind);
    auto* lbfgs = s.find_algorithm("rsvlbfgs");
    lbfgs->config.pair_interval = pair_interval;
  };
  if (name == "karcher-desk") {
    karcher(20, 50, 1e2, 10, 20);
  } else if (name == "karcher-full-c10") {
    karcher(100, 1000, 10.0, 50, 30);
  } else if (name == "karcher-full-c100") {
    karcher(100, 100, 1e2, 5, 30);
  } else if (name == "karcher-full-c1000") {
    karcher(100, 1000, 1e3, 50, 30);
  } else if (name == "eig-desk") {
    eig(100, 10000, 0.05, 10, 30);
  } else if (name == "eig-full-g005") {
    eig(1000, 100000, 0.005, 5, 50);
  } else if (name == "eig-full-g01") {
    eig(1000, 100000, 0.01, 10, 50);
  } else if (name == "eig-full-g05") {
    eig(1000, 100000, 0.05, 10, 50);
  } else if (name == "eig-full-g1") {
    eig(1000, 100000, 0.1, 10, 50);
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return s;
}

std::vector<std::string> preset_names() {
  return {"karcher-desk",       "karcher-full-c10", "karcher-full-c100",
          "karcher-full-c1000", "eig-desk",          "eig-full-g005",
          "eig-full-g01",      "eig-full-g05",     "eig-full-g1"};
}

bool apply_key(ExperimentSpec& spec, const std::string& key,
               const std::string& value) {
  if (key == "preset") {
    spec = preset_spec(value);
    return true;
  }
  if (key == "kind") {
    if (value != "karcher" && value != "eig") {
      bad_value(key, value, "karcher or eig");
    }
    if (value != spec.kind) {
      spec.kind = value;
      spec.algorithms = default_algorithms(spec.kind);
    }
    return true;
  }
  if (key == "n") { spec.n = parse_index(key, value); return true; }
  if (key == "count") { spec.count = parse_index(key, value); return true; }
  if (key == "cond") { spec.cond = parse_f64(key, value); return true; }
  if (key == "d") { spec.d = parse_index(key, value); return true; }
  if (key == "N") { spec.nsamples = parse_index(key, value); return true; }
  if (key == "gap") { spec.gap = parse_f64(key, value); return true; }
  if (key == "seed") { spec.seed = parse_u64(key, value); return true; }
  if (key == "epochs") { spec.epochs = parse_index(key, value); return true; }
  if (key == "error-stop") { spec.error_stop = parse_f64(key, value); return true; }
  if (key == "measure-every-iterate") {
    spec.measure_every_iterate = parse_bool(key, value);
    return true;
  }
  if (key == "check-vr-exactness") {
    spec.check_vr_exactness = parse_bool(key, value);
    return true;
  }
  if (key == "max-pair-snapshots") {
    spec.max_pair_snapshots = parse_index(key, value);
    return true;
  }
  if (key == "dataset") { spec.dataset = value; return true; }
  if (key == "dataset-fingerprint") {
    spec.dataset_fingerprint = parse_hex64(key, value);
    return true;
  }
  if (key == "output-dir") { spec.output_dir = value; return true; }
  if (key == "algorithms") {
    std::vector<AlgorithmSpec> algos;
    for (const auto& name : split_list(value)) {
      if (!is_known_algorithm(name)) bad_value(key, value, "known algorithm names");
      algos.push_back({name, default_algorithm_config(spec.kind, name)});
    }
    if (algos.empty()) bad_value(key, value, "a nonempty algorithm list");
    spec.algorithms = std::move(algos);
    return true;
  }
  // per-algorithm keys: "<algo>-<field>"
  const auto dash = key.find('-');
  if (dash != std::string::npos && is_known_algorithm(key.substr(0, dash))) {
    auto* algo = spec.find_algorithm(key.substr(0, dash));
    if (algo == nullptr) {
      throw std::invalid_argument("key '" + key + "' refers to an algorithm not in "
                                  "the current list; set algorithms= first");
    }
    const std::string field = key.substr(dash + 1);
    OptimizerConfig& c = algo->config;
    if (field == "eta1") { c.eta1 = parse_f64(key, value); return true; }
    if (field == "eta2") { c.eta2 = parse_f64(key, value); return true; }
    if (field == "R") { c.pair_interval = parse_index(key, value); return true; }
    if (field == "M") { c.memory_depth = parse_index(key, value); return true; }
    if (field == "mb") { c.minibatch = parse_index(key, value); return true; }
    if (field == "inner") { c.inner_iters = parse_index(key, value); return true; }
    if (field == "option") {
      const Index v = parse_index(key, value);
      if (v != 1 && v != 2) bad_value(key, value, "1 or 2");
      c.option = v == 1 ? CorrectionOption::TransportedStep
                        : CorrectionOption::TransportedVrGradient;
      return true;
    }
    return false;
  }
  return false;
}

void apply_spec_file(ExperimentSpec& spec, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open spec file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected key=value, got '" + t + "'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!apply_key(spec, key, value)) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
    }
  }
}

void write_manifest(std::ostream& out, const ExperimentSpec& spec,
                    const std::vector<std::string>& notes) {
  out << "# experiment manifest; replay with: rslbfgs run --spec <this file>\n";
  out << "kind=" << spec.kind << "\n";
  if (spec.kind == "karcher") {
    out << "n=" << spec.n << "\n";
    out << "count=" << spec.count << "\n";
    out << "cond=" << fmt17(spec.cond) << "\n";
  } else {
    out << "d=" << spec.d << "\n";
    out << "N=" << spec.nsamples << "\n";
    out << "gap=" << fmt17(spec.gap) << "\n";
  }
  out << "seed=" << spec.seed << "\n";
  out << "epochs=" << spec.epochs << "\n";
  out << "error-stop=" << fmt17(spec.error_stop) << "\n";
  out << "measure-every-iterate=" << (spec.measure_every_iterate ? 1 : 0) << "\n";
  out << "check-vr-exactness=" << (spec.check_vr_exactness ? 1 : 0) << "\n";
  out << "max-pair-snapshots=" << spec.max_pair_snapshots << "\n";
  out << "dataset=" << spec.dataset_path() << "\n";
  if (spec.dataset_fingerprint != 0) {
    out << "dataset-fingerprint=" << fmt_hex64(spec.dataset_fingerprint) << "\n";
  }
  out << "output-dir=" << spec.output_dir << "\n";
  std::string names;
  for (const auto& a : spec.algorithms) {
    if (!names.empty()) names += ',';
    names += a.name;
  }
  out << "algorithms=" << names << "\n";
  for (const auto& a : spec.algorithms) {
    const auto& c = a.config;
    out << a.name << "-eta1=" << fmt17(c.eta1) << "\n";
    out << a.name << "-eta2=" << fmt17(c.eta2) << "\n";
    out << a.name << "-R=" << c.pair_interval << "\n";
    out << a.name << "-M=" << c.memory_depth << "\n";
    out << a.name << "-mb=" << c.minibatch << "\n";
    out << a.name << "-inner=" << c.inner_iters << "\n";
    out << a.name << "-option="
        << (c.option == CorrectionOption::TransportedStep ? 1 : 2) << "\n";
  }
  for (const auto& note : notes) out << "# " << note << "\n";
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t algorithm_seed(std::uint64_t master, std::string_view algo) {
  return splitmix64(master ^ fnv1a64(algo));
}

std::uint64_t generate_dataset(const ExperimentSpec& spec) {
  spec.validate();
  const std::string path = spec.dataset_path();
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  if (spec.kind == "karcher") {
    write_spd_dataset(path, gen_spd_data(spec.n, spec.count, spec.cond, spec.seed));
  } else {
    write_eig_dataset(path, gen_eig_data(spec.d, spec.nsamples, spec.gap, spec.seed));
  }
  return file_fingerprint(path);
}

namespace {

Point shared_initial_sphere_point(Index d, std::uint64_t master) {
  std::mt19937_64 rng(splitmix64(master ^ fnv1a64("init")));
  return SphereManifold(d).random_point(rng);
}

std::string describe_run(const RunTrace& trace) {
  std::ostringstream os;
  os << "run " << trace.name << ": status=" << run_status_name(trace.status);
  Index accepted = 0;
  Index rejected = 0;
  for (const auto& s : trace.epoch_stats) {
    accepted += s.pairs_accepted;
    rejected += s.pairs_rejected;
  }
  os << " epochs=" << (trace.records.empty() ? 0 : trace.records.back().epoch)
     << " passes=" << fmt17(trace.records.empty() ? 0.0 : trace.records.back().passes)
     << " final-error="
     << fmt17(trace.records.empty() ? kNaN : trace.records.back().error)
     << " pairs-accepted=" << accepted << " pairs-rejected=" << rejected
     << " grad-evals=" << trace.grad_evals;
  if (!trace.message.empty()) os << " message=" << trace.message;
  return os.str();
}

}  // namespace

ResultBundle run_experiment(const ExperimentSpec& spec_in) {
  ExperimentSpec spec = spec_in;
  spec.validate();
  fs::create_directories(spec.output_dir);

  const std::string dpath = spec.dataset_path();
  if (!fs::exists(dpath)) generate_dataset(spec);
  const std::uint64_t fp = file_fingerprint(dpath);
  if (spec.dataset_fingerprint != 0 && spec.dataset_fingerprint != fp) {
    throw std::invalid_argument("dataset fingerprint mismatch for " + dpath +
                                ": expected " + fmt_hex64(spec.dataset_fingerprint) +
                                ", found " + fmt_hex64(fp));
  }
  spec.dataset_fingerprint = fp;

  ResultBundle bundle;
  bundle.spec = spec;
  bundle.dir = spec.output_dir;
  std::vector<std::string> notes;

  // Load data, build the problem, and pin the ground truth.
  std::unique_ptr<FiniteSumProblem> problem;
  const EigData* eig_data = nullptr;
  Point x0;
  MeasureFn error_fn;
  bool oracle_ok = true;
  if (spec.kind == "karcher") {
    auto data = read_spd_dataset(dpath);
    auto* kp = new KarcherProblem(std::move(data));
    problem.reset(kp);
    x0 = spd_arithmetic_mean(kp->data());
    try {
      Point wstar = karcher_oracle(kp->data());
      bundle.oracle_value = problem->value(wstar);
      error_fn = [wstar](const Point& w) { return karcher_error(w, wstar); };
      notes.push_back("oracle objective = " + fmt17(bundle.oracle_value));
      notes.push_back("oracle self-error = " + fmt17(karcher_error(wstar, wstar)));
    } catch (const std::runtime_error& e) {
      oracle_ok = false;
      notes.push_back(std::string("oracle failure: ") + e.what());
    }
  } else {
    auto data = read_eig_dataset(dpath);
    auto* rp = new RayleighProblem(std::move(data));
    problem.reset(rp);
    eig_data = &rp->data();
    x0 = shared_initial_sphere_point(spec.d, spec.seed);
    try {
      const EigOracle oracle = top_eig_oracle(rp->data());
      bundle.oracle_value = oracle.value;
      const double estar = oracle.value;
      error_fn = [eig_data, estar](const Point& z) {
        return eig_error(z, *eig_data, estar);
      };
      notes.push_back("oracle eigenvalue = " + fmt17(estar));
    } catch (const std::runtime_error& e) {
      oracle_ok = false;
      notes.push_back(std::string("oracle failure: ") + e.what());
    }
  }

  if (!oracle_ok) {
    bundle.all_ok = false;
    std::ofstream mout(fs::path(spec.output_dir) / "manifest.txt");
    write_manifest(mout, spec, notes);
    return bundle;
  }

  std::vector<PairSnapshot> snapshots;
  for (const auto& algo : spec.algorithms) {
    OptimizerConfig cfg = algo.config;
    cfg.epochs = spec.epochs;
    cfg.seed = algorithm_seed(spec.seed, algo.name);
    cfg.validate(problem->size());

    RunControls ctl;
    ctl.error_stop = spec.error_stop;
    ctl.measure_every_iterate = spec.measure_every_iterate;
    ctl.check_vr_exactness = spec.check_vr_exactness;
    if (algo.name == "rsvlbfgs") ctl.max_pair_snapshots = spec.max_pair_snapshots;

    RunTrace trace;
    if (algo.name == "rsvlbfgs") {
      trace = run_rsv_lbfgs(*problem, x0, cfg, ctl, error_fn);
    } else if (algo.name == "rsvrg") {
      trace = run_rsvrg(*problem, x0, cfg, ctl, error_fn);
    } else {
      trace = run_vr_pca(*eig_data, x0, cfg, ctl, error_fn);
    }

    {
      std::ofstream csv(fs::path(spec.output_dir) / (algo.name + ".csv"));
      write_trace_csv(csv, trace.records);
      std::ofstream info(fs::path(spec.output_dir) / (algo.name + ".info.txt"));
      write_run_info(info, trace);
    }
    notes.push_back(describe_run(trace));
    if (algo.name == "rsvlbfgs") snapshots = trace.snapshots;
    bundle.all_ok = bundle.all_ok && trace.status == RunStatus::Ok;
    bundle.results.push_back({algo.name, std::move(trace)});
  }

  if (!snapshots.empty()) {
    const auto& base = snapshots.front().base;
    write_pair_snapshots((fs::path(spec.output_dir) / "pairs.bin").string(),
                         snapshots, base.rows(), base.cols(), spec.seed);
  }

  {
    std::ofstream mout(fs::path(spec.output_dir) / "manifest.txt");
    write_manifest(mout, spec, notes);
  }

  // Cheap gradient sanity report alongside the traces.
  {
    DiagnosticReport rep = fd_gradient_check(
        *problem, x0, 10, splitmix64(spec.seed ^ fnv1a64("fd")));
    rep.context = "bundle " + spec.output_dir;
    std::ofstream txt(fs::path(spec.output_dir) / "diagnostics.txt");
    write_diagnostics_text(txt, rep);
    std::ofstream csv(fs::path(spec.output_dir) / "diagnostics.csv");
    write_diagnostics_csv(csv, rep);
  }

  return bundle;
}

namespace {

struct DiagnoseInput {
  std::string kind;  // "karcher" | "eig"
  std::unique_ptr<FiniteSumProblem> problem;
  Point x0;
  std::optional<Point> oracle_point;
  std::uint64_t seed = 0;
  double eta2 = 0;  // for the rate report
  Index epochs = 20;
};

DiagnoseInput load_diagnose_input(const std::string& dataset_path) {
  const DatasetHeader header = peek_header(dataset_path);
  DiagnoseInput in;
  in.seed = header.seed;
  if (header.kind == DatasetKind::SpdSet) {
    in.kind = "karcher";
    auto* kp = new KarcherProblem(read_spd_dataset(dataset_path));
    in.problem.reset(kp);
    in.x0 = spd_arithmetic_mean(kp->data());
    in.oracle_point = karcher_oracle(kp->data());
    in.eta2 = default_algorithm_config("karcher", "rsvlbfgs").eta2;
  } else if (header.kind == DatasetKind::EigMatrix) {
    in.kind = "eig";
    auto* rp = new RayleighProblem(read_eig_dataset(dataset_path));
    in.problem.reset(rp);
    in.x0 = shared_initial_sphere_point(rp->data().dim(), header.seed);
    const EigOracle oracle = top_eig_oracle(rp->data());
    Point z;
    z.value = oracle.vector;
    in.oracle_point = z;
    in.eta2 = default_algorithm_config("eig", "rsvlbfgs").eta2;
  } else {
    throw std::invalid_argument(
        "diagnose needs a matrix-set or data-matrix dataset; got a "
        "pair-snapshot file");
  }
  return in;
}

std::vector<PairSnapshot> harvest_snapshots(const DiagnoseInput& in) {
  OptimizerConfig cfg = default_algorithm_config(in.kind, "rsvlbfgs");
  cfg.epochs = 3;
  cfg.seed = algorithm_seed(in.seed, "diagnose");
  // The harvest must produce pairs even on tiny datasets where the kind's
  // default config would not: shrink the minibatch to fit and force a pair
  // event every iteration.
  cfg.minibatch = std::min(cfg.minibatch, in.problem->size());
  cfg.pair_interval = 1;
  cfg.validate(in.problem->size());
  RunControls ctl;
  ctl.max_pair_snapshots = 6;
  RunTrace trace = run_rsv_lbfgs(*in.problem, in.x0, cfg, ctl, {});
  return trace.snapshots;
}

// Shared body of diagnose_dataset / diagnose_bundle.  `snapshots` may come
// from the bundle on disk or from a fresh harvest run.
DiagnosticReport diagnose_impl(const DiagnoseInput& in,
                               const std::vector<PairSnapshot>& snapshots,
                               Index memory_depth) {
  DiagnosticReport report;

  report.append(fd_gradient_check(*in.problem, in.x0, 30,
                                  splitmix64(in.seed ^ fnv1a64("fd"))));
  const Manifold& m = in.problem->manifold();
  const double c_delta = in.kind == "karcher" ? -0.5 : 0.0;
  const double radius = in.kind == "karcher" ? 1.0 : 0.75;
  report.append(triangle_check(m, c_delta, 200, radius,
                               splitmix64(in.seed ^ fnv1a64("triangle"))));

  ConvergenceConstants consts = smoothness_convexity_probe(
      *in.problem, 60, splitmix64(in.seed ^ fnv1a64("probe")), in.oracle_point,
      0.5);
  report.add("probe", "L_hat", consts.L, kNaN, true);
  report.add("probe", "S_hat", consts.S, kNaN, true);
  report.add("probe", "kappa_hat", consts.kappa, kNaN, true);

  if (snapshots.empty()) {
    report.add("lemma1", "snapshots_available", 0.0, kNaN, true);
  }
  double gamma_lo = kNaN;
  double big_gamma_hi = kNaN;
  const std::size_t n_snap = std::min<std::size_t>(snapshots.size(), 4);
  for (std::size_t k = 0; k < n_snap; ++k) {
    DiagnosticReport lem = lemma1_check(m, snapshots[k], memory_depth);
    if (auto g = find_measured(lem, "lemma1", "gamma_hat")) {
      gamma_lo = std::isnan(gamma_lo) ? *g : std::min(gamma_lo, *g);
    }
    if (auto g = find_measured(lem, "lemma1", "Gamma_hat")) {
      big_gamma_hi = std::isnan(big_gamma_hi) ? *g : std::max(big_gamma_hi, *g);
    }
    report.append(lem);
  }

  if (!snapshots.empty()) {
    const PairSnapshot& snap = snapshots.back();
    LbfgsMemory memory(m, memory_depth);
    for (const auto& [z, y] : snap.pairs) {
      memory.push(Tangent{z, snap.base}, Tangent{y, snap.base});
    }
    std::mt19937_64 rng(splitmix64(in.seed ^ fnv1a64("two_loop")));
    Point base;
    base.value = snap.base;
    report.append(two_loop_vs_dense(memory, m.random_tangent(base, rng)));
  }

  consts.gamma_lo = gamma_lo;
  consts.Gamma_hi = big_gamma_hi;
  const RateReport rate = prop1_rate_report(consts, in.eta2, in.epochs);
  report.add("rate", "p", rate.p, kNaN, true);
  report.add("rate", "q_prime", rate.q_prime, kNaN, true);
  report.add("rate", "beta", rate.beta, kNaN, true);
  report.add("rate", "applicable", rate.applicable ? 1.0 : 0.0, kNaN, true);

  return report;
}

}  // namespace

DiagnosticReport diagnose_dataset(const std::string& dataset_path) {
  if (!fs::exists(dataset_path)) {
    throw std::invalid_argument("no such dataset: " + dataset_path);
  }
  DiagnoseInput in = load_diagnose_input(dataset_path);
  const Index depth = default_algorithm_config(in.kind, "rsvlbfgs").memory_depth;
  DiagnosticReport report = diagnose_impl(in, harvest_snapshots(in), depth);
  report.context = "dataset " + dataset_path + " (fingerprint " +
                   fmt_hex64(file_fingerprint(dataset_path)) + ")";
  return report;
}

DiagnosticReport diagnose_bundle(const std::string& bundle_dir) {
  const fs::path dir(bundle_dir);
  const std::string manifest = (dir / "manifest.txt").string();
  if (!fs::exists(manifest)) {
    throw std::invalid_argument("no manifest.txt under " + bundle_dir);
  }
  ExperimentSpec spec;
  apply_spec_file(spec, manifest);
  spec.validate();

  DiagnoseInput in = load_diagnose_input(spec.dataset_path());
  in.epochs = spec.epochs;
  Index depth = default_algorithm_config(in.kind, "rsvlbfgs").memory_depth;
  if (const auto* lbfgs = spec.find_algorithm("rsvlbfgs")) {
    in.eta2 = lbfgs->config.eta2;
    depth = lbfgs->config.memory_depth;
  }

  std::vector<PairSnapshot> snapshots;
  const fs::path pairs = dir / "pairs.bin";
  if (fs::exists(pairs)) snapshots = read_pair_snapshots(pairs.string());
  if (snapshots.empty()) snapshots = harvest_snapshots(in);

  DiagnosticReport report = diagnose_impl(in, snapshots, depth);

  // Pair acceptance bookkeeping recorded by the run; rejections are expected
  // under the curvature safeguard and are reported, not failed.
  std::ifstream min(manifest);
  std::string line;
  while (std::getline(min, line)) {
    const std::string t = trim(line);
    const std::string prefix = "# run ";
    if (t.rfind(prefix, 0) != 0) continue;
    const auto colon = t.find(':');
    if (colon == std::string::npos) continue;
    const std::string name = t.substr(prefix.size(), colon - prefix.size());
    std::istringstream tokens(t.substr(colon + 1));
    std::string tok;
    while (tokens >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string k = tok.substr(0, eq);
      if (k == "pairs-accepted" || k == "pairs-rejected") {
        try {
          report.add("bundle", name + "_" + k, std::stod(tok.substr(eq + 1)),
                     kNaN, true);
        } catch (const std::exception&) {
          // malformed note; skip
        }
      }
    }
  }

  report.context = "bundle " + bundle_dir;
  return report;
}

void export_bundle(const std::string& bundle_dir) {
  const fs::path dir(bundle_dir);
  const std::string manifest = (dir / "manifest.txt").string();
  if (!fs::exists(manifest)) {
    throw std::invalid_argument("no manifest.txt under " + bundle_dir);
  }
  ExperimentSpec spec;
  apply_spec_file(spec, manifest);

  std::vector<std::string> names;
  std::vector<std::map<double, double>> series;  // passes -> error
  std::vector<double> grid;
  for (const auto& algo : spec.algorithms) {
    const fs::path csv = dir / (algo.name + ".csv");
    std::ifstream in(csv);
    if (!in) throw std::invalid_argument("missing trace: " + csv.string());
    const auto records = read_trace_csv(in);
    if (records.empty()) {
      throw std::invalid_argument("empty trace: " + csv.string());
    }
    std::map<double, double> s;
    for (const auto& r : records) {
      s[r.passes] = r.error;
      grid.push_back(r.passes);
    }
    names.push_back(algo.name);
    series.push_back(std::move(s));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  {
    std::ofstream out(dir / "merged.csv");
    out << "passes";
    for (const auto& n : names) out << ',' << n;
    out << "\n";
    for (double p : grid) {
      out << fmt17(p);
      for (const auto& s : series) {
        const auto it = s.find(p);
        out << ',' << (it == s.end() ? std::string("nan") : fmt17(it->second));
      }
      out << "\n";
    }
  }
  {
    std::ofstream out(dir / "plot.gp");
    out << "# gnuplot script for the error decay figure\n";
    out << "set datafile separator ','\n";
    out << "set datafile missing 'nan'\n";
    out << "set logscale y\n";
    out << "set format y '1e%T'\n";
    out << "set xlabel 'passes over full dataset'\n";
    out << "set ylabel 'error'\n";
    out << "set grid\n";
    out << "set key top right\n";
    out << "set terminal pngcairo size 900,600\n";
    out << "set output 'error_decay.png'\n";
    out << "plot ";
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (k != 0) out << ", \\\n     ";
      out << "'merged.csv' using 1:" << (k + 2)
          << " with linespoints pointsize 0.5 title columnheader(" << (k + 2)
          << ")";
    }
    out << "\n";
  }
}

}  // namespace rslbfgs
