#include "rslbfgs/dataset_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <utility>

namespace rslbfgs {

static_assert(std::endian::native == std::endian::little,
              "dataset container assumes a little-endian host");
static_assert(sizeof(double) == 8, "payload format requires 64-bit doubles");

namespace {

constexpr char kMagic[4] = {'R', 'S', 'L', 'B'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void get_bytes(std::istream& in, void* p, std::size_t n, const char* what) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw std::runtime_error(std::string("dataset file truncated while reading ") + what);
  }
}

template <typename T>
void put_pod(std::ostream& out, T v) {
  put_bytes(out, &v, sizeof(T));
}

template <typename T>
T get_pod(std::istream& in, const char* what) {
  T v{};
  get_bytes(in, &v, sizeof(T), what);
  return v;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  // Eigen default storage is column-major, so the raw buffer is already in
  // file order.
  put_bytes(out, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

Matrix get_matrix(std::istream& in, Index rows, Index cols, const char* what) {
  Matrix m(rows, cols);
  get_bytes(in, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()), what);
  return m;
}

void put_header(std::ostream& out, const DatasetHeader& h) {
  put_bytes(out, kMagic, sizeof(kMagic));
  put_pod(out, kVersion);
  put_pod(out, static_cast<std::uint8_t>(h.kind));
  put_pod(out, static_cast<std::uint8_t>(h.dims.size()));
  for (std::uint64_t d : h.dims) put_pod(out, d);
}

DatasetHeader get_header(std::istream& in) {
  char magic[4];
  get_bytes(in, magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a dataset container (bad magic)");
  }
  const auto version = get_pod<std::uint32_t>(in, "version");
  if (version != kVersion) {
    throw std::runtime_error("unsupported dataset container version " + std::to_string(version));
  }
  DatasetHeader h;
  const auto kind = get_pod<std::uint8_t>(in, "kind");
  if (kind > 2) {
    throw std::runtime_error("unknown dataset kind " + std::to_string(int(kind)));
  }
  h.kind = static_cast<DatasetKind>(kind);
  const auto ndims = get_pod<std::uint8_t>(in, "ndims");
  h.dims.resize(ndims);
  for (auto& d : h.dims) d = get_pod<std::uint64_t>(in, "dims");
  return h;
}

void put_trailer(std::ostream& out, std::uint64_t seed, double param) {
  put_pod(out, seed);
  put_pod(out, param);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

void expect_kind(const DatasetHeader& h, DatasetKind want, const char* what) {
  if (h.kind != want) {
    throw std::runtime_error(std::string("dataset is not a ") + what + " container");
  }
}

Index checked_index(std::uint64_t v, const char* what) {
  if (v == 0 || v > (1ull << 31)) {
    throw std::runtime_error(std::string("implausible dimension for ") + what + ": " +
                             std::to_string(v));
  }
  return static_cast<Index>(v);
}

}  // namespace

void write_spd_dataset(const std::string& path, const KarcherData& data) {
  if (data.matrices.empty()) {
    throw std::invalid_argument("refusing to write an empty matrix set");
  }
  const Index n = data.matrices.front().rows();
  auto out = open_out(path);
  DatasetHeader h;
  h.kind = DatasetKind::SpdSet;
  h.dims = {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(data.matrices.size())};
  put_header(out, h);
  for (const Matrix& m : data.matrices) {
    if (m.rows() != n || m.cols() != n) {
      throw std::invalid_argument("matrix set entries must share one square shape");
    }
    put_matrix(out, m);
  }
  put_trailer(out, data.seed, data.cond);
  if (!out) throw std::runtime_error("write failed: " + path);
}

KarcherData read_spd_dataset(const std::string& path) {
  auto in = open_in(path);
  const DatasetHeader h = get_header(in);
  expect_kind(h, DatasetKind::SpdSet, "matrix-set");
  if (h.dims.size() != 2) throw std::runtime_error("matrix-set container needs 2 dims");
  const Index n = checked_index(h.dims[0], "matrix order");
  const Index count = checked_index(h.dims[1], "matrix count");
  KarcherData data;
  data.matrices.reserve(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) {
    data.matrices.push_back(get_matrix(in, n, n, "matrix payload"));
  }
  data.seed = get_pod<std::uint64_t>(in, "seed");
  data.cond = get_pod<double>(in, "generator parameter");
  return data;
}

void write_eig_dataset(const std::string& path, const EigData& data) {
  if (data.d_matrix.size() == 0) {
    throw std::invalid_argument("refusing to write an empty data matrix");
  }
  auto out = open_out(path);
  DatasetHeader h;
  h.kind = DatasetKind::EigMatrix;
  h.dims = {static_cast<std::uint64_t>(data.d_matrix.rows()),
            static_cast<std::uint64_t>(data.d_matrix.cols())};
  put_header(out, h);
  put_matrix(out, data.d_matrix);
  put_trailer(out, data.seed, data.gap);
  if (!out) throw std::runtime_error("write failed: " + path);
}

EigData read_eig_dataset(const std::string& path) {
  auto in = open_in(path);
  const DatasetHeader h = get_header(in);
  expect_kind(h, DatasetKind::EigMatrix, "data-matrix");
  if (h.dims.size() != 2) throw std::runtime_error("data-matrix container needs 2 dims");
  const Index d = checked_index(h.dims[0], "row count");
  const Index n = checked_index(h.dims[1], "column count");
  EigData data;
  data.d_matrix = get_matrix(in, d, n, "matrix payload");
  data.seed = get_pod<std::uint64_t>(in, "seed");
  data.gap = get_pod<double>(in, "generator parameter");
  return data;
}

void write_pair_snapshots(const std::string& path,
                          const std::vector<PairSnapshot>& snapshots,
                          Index rows, Index cols, std::uint64_t seed) {
  auto out = open_out(path);
  DatasetHeader h;
  h.kind = DatasetKind::PairSnapshots;
  h.dims = {static_cast<std::uint64_t>(rows), static_cast<std::uint64_t>(cols),
            static_cast<std::uint64_t>(snapshots.size())};
  put_header(out, h);
  for (const PairSnapshot& s : snapshots) {
    if (s.base.rows() != rows || s.base.cols() != cols) {
      throw std::invalid_argument("snapshot base has inconsistent shape");
    }
    put_pod(out, static_cast<double>(s.counter));
    put_pod(out, static_cast<double>(s.pairs.size()));
    put_matrix(out, s.base);
    for (const auto& [z, y] : s.pairs) {
      if (z.rows() != rows || z.cols() != cols || y.rows() != rows || y.cols() != cols) {
        throw std::invalid_argument("snapshot pair has inconsistent shape");
      }
      put_matrix(out, z);
      put_matrix(out, y);
    }
  }
  put_trailer(out, seed, 0.0);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<PairSnapshot> read_pair_snapshots(const std::string& path) {
  auto in = open_in(path);
  const DatasetHeader h = get_header(in);
  expect_kind(h, DatasetKind::PairSnapshots, "pair-snapshot");
  if (h.dims.size() != 3) throw std::runtime_error("pair-snapshot container needs 3 dims");
  const Index rows = checked_index(h.dims[0], "rows");
  const Index cols = checked_index(h.dims[1], "cols");
  const auto count = h.dims[2];
  if (count > (1ull << 24)) {
    throw std::runtime_error("implausible snapshot count " + std::to_string(count));
  }
  std::vector<PairSnapshot> snapshots;
  snapshots.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t k = 0; k < count; ++k) {
    PairSnapshot s;
    const double counter = get_pod<double>(in, "snapshot counter");
    const double npairs = get_pod<double>(in, "snapshot pair count");
    if (!(counter >= 0) || counter != static_cast<double>(static_cast<Index>(counter))) {
      throw std::runtime_error("snapshot counter is not a nonnegative integer");
    }
    if (!(npairs >= 0) || npairs > (1 << 20) ||
        npairs != static_cast<double>(static_cast<Index>(npairs))) {
      throw std::runtime_error("snapshot pair count is not a small nonnegative integer");
    }
    s.counter = static_cast<Index>(counter);
    s.base = get_matrix(in, rows, cols, "snapshot base");
    const auto m = static_cast<Index>(npairs);
    s.pairs.reserve(static_cast<std::size_t>(m));
    for (Index j = 0; j < m; ++j) {
      Matrix z = get_matrix(in, rows, cols, "snapshot pair z");
      Matrix y = get_matrix(in, rows, cols, "snapshot pair y");
      s.pairs.emplace_back(std::move(z), std::move(y));
    }
    snapshots.push_back(std::move(s));
  }
  (void)get_pod<std::uint64_t>(in, "seed");
  (void)get_pod<double>(in, "generator parameter");
  return snapshots;
}

DatasetHeader peek_header(const std::string& path) {
  auto in = open_in(path);
  DatasetHeader h = get_header(in);
  // The trailer sits at a fixed offset from the end; grab it without walking
  // the payload.
  in.seekg(-static_cast<std::streamoff>(sizeof(std::uint64_t) + sizeof(double)), std::ios::end);
  if (!in) throw std::runtime_error("dataset file too short for trailer: " + path);
  h.seed = get_pod<std::uint64_t>(in, "seed");
  h.param = get_pod<double>(in, "generator parameter");
  return h;
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t basis) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t hash = basis;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= p[i];
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::uint64_t fnv1a64(std::string_view text) { return fnv1a64(text.data(), text.size()); }

std::uint64_t file_fingerprint(const std::string& path) {
  auto in = open_in(path);
  char buf[1 << 16];
  std::uint64_t hash = 0xcbf29ce484222325ull;
  while (in) {
    in.read(buf, sizeof(buf));
    const auto got = static_cast<std::size_t>(in.gcount());
    if (got == 0) break;
    hash = fnv1a64(buf, got, hash);
  }
  if (in.bad()) throw std::runtime_error("read failed: " + path);
  return hash;
}

void write_header_dump(std::ostream& out, const std::string& path) {
  const DatasetHeader h = peek_header(path);
  const std::uint64_t fp = file_fingerprint(path);
  const char* kind_name = "?";
  switch (h.kind) {
    case DatasetKind::SpdSet: kind_name = "spd-set"; break;
    case DatasetKind::EigMatrix: kind_name = "data-matrix"; break;
    case DatasetKind::PairSnapshots: kind_name = "pair-snapshots"; break;
  }
  out << "file: " << path << "\n";
  out << "kind: " << kind_name << " (" << int(static_cast<std::uint8_t>(h.kind)) << ")\n";
  out << "dims:";
  for (auto d : h.dims) out << ' ' << d;
  out << "\n";
  out << "seed: " << h.seed << "\n";
  char param[32];
  std::snprintf(param, sizeof(param), "%.17g", h.param);
  out << "generator parameter: " << param << "\n";
  char fpbuf[32];
  std::snprintf(fpbuf, sizeof(fpbuf), "%016llx", static_cast<unsigned long long>(fp));
  out << "fingerprint: " << fpbuf << "\n";
}

}  // namespace rslbfgs
