#pragma once

#include "rslbfgs/karcher.hpp"
#include "rslbfgs/rayleigh.hpp"
#include "rslbfgs/trace.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rslbfgs {

/// Flat binary container for replayable inputs:
///   magic "RSLB" | version u32 | kind u8 | ndims u8 | dims u64[ndims]
///   | payload f64[...] | seed u64 | param f64
/// Everything little-endian; payload matrices are column-major.  The layout is
/// fixed so a file's bytes (and hence its fingerprint) are a pure function of
/// the content.
enum class DatasetKind : std::uint8_t {
  SpdSet = 0,         // dims = {n, count}; payload: count n-by-n matrices
  EigMatrix = 1,      // dims = {d, N};     payload: one d-by-N matrix
  PairSnapshots = 2,  // dims = {rows, cols, count}; payload per snapshot:
                      //   counter, pair count, base, then z/y alternating
};

struct DatasetHeader {
  DatasetKind kind = DatasetKind::SpdSet;
  std::vector<std::uint64_t> dims;
  std::uint64_t seed = 0;
  double param = 0.0;  // cond for SpdSet, gap for EigMatrix, 0 otherwise
};

void write_spd_dataset(const std::string& path, const KarcherData& data);
KarcherData read_spd_dataset(const std::string& path);

void write_eig_dataset(const std::string& path, const EigData& data);
EigData read_eig_dataset(const std::string& path);

void write_pair_snapshots(const std::string& path,
                          const std::vector<PairSnapshot>& snapshots,
                          Index rows, Index cols, std::uint64_t seed);
std::vector<PairSnapshot> read_pair_snapshots(const std::string& path);

/// Header fields without loading the payload.  Throws std::runtime_error on a
/// malformed file.
DatasetHeader peek_header(const std::string& path);

/// FNV-1a 64-bit over arbitrary bytes / over a whole file.
std::uint64_t fnv1a64(const void* data, std::size_t size,
                      std::uint64_t basis = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t file_fingerprint(const std::string& path);

/// Human-readable header + fingerprint line for a container file.
void write_header_dump(std::ostream& out, const std::string& path);

}  // namespace rslbfgs
