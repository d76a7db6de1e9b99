#include "vpmpcc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vpmpcc {

std::vector<std::vector<double>> latin_hypercube(int count, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> points(static_cast<size_t>(count),
                                          std::vector<double>(static_cast<size_t>(dim)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> perm(static_cast<size_t>(count));
  for (int j = 0; j < dim; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < count; ++i) {
      double u = unit(rng);
      points[static_cast<size_t>(i)][static_cast<size_t>(j)] =
          (static_cast<double>(perm[static_cast<size_t>(i)]) + u) / static_cast<double>(count);
    }
  }
  return points;
}

namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                           31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

double radical_inverse(int base, int index) {
  double inv = 1.0 / base;
  double factor = inv;
  double result = 0.0;
  while (index > 0) {
    result += factor * (index % base);
    index /= base;
    factor *= inv;
  }
  return result;
}

}  // namespace

std::vector<double> halton_point(int index, int dim, std::uint64_t seed) {
  std::vector<double> p(static_cast<size_t>(dim));
  for (int j = 0; j < dim; ++j) {
    // Cranley-Patterson rotation keeps the low-discrepancy structure while
    // making the sequence seed-dependent.
    double shift = static_cast<double>(derive_seed(seed, static_cast<std::uint64_t>(j)) >> 11) *
                   (1.0 / 9007199254740992.0);
    double v = radical_inverse(kPrimes[j % 20], index + 1) + shift;
    p[static_cast<size_t>(j)] = v - std::floor(v);
  }
  return p;
}

}  // namespace vpmpcc
