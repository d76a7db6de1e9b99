#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace vpmpcc {

/// Derive an independent stream seed from a master seed. splitmix64 mixing.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

/// Latin hypercube sample of `count` points in the unit cube of dimension `dim`.
std::vector<std::vector<double>> latin_hypercube(int count, int dim, std::uint64_t seed);

/// Halton sequence point `index` (0-based) in `dim` dimensions, with a
/// per-dimension Cranley-Patterson rotation derived from `seed`.
std::vector<double> halton_point(int index, int dim, std::uint64_t seed);

}  // namespace vpmpcc
