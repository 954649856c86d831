#pragma once

// Seedable samplers. Every sampler is a pure function of (dataset, params,
// seed) and returns a SampleIndex with provenance.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "repsample/dataset.hpp"

namespace repsample {

SampleIndex sample_simple_random(const TabularDataset& ds, std::size_t size, std::uint64_t seed);

// A stratifying feature. Continuous features need bin edges e0 < e1 < ... ;
// bin b covers [e_b, e_{b+1}), values below e0 fall in the first bin and
// values at or above the last edge fall in the last bin.
struct StrataKey {
  std::string feature;
  std::vector<double> edges;
};

// Age in three bins [0,33), [33,66), [66,99] crossed with sex and race:
// at most 3 x 2 x 9 = 54 cells.
std::vector<StrataKey> default_strata_keys(std::string age = "AGEP", std::string sex = "SEX",
                                           std::string race = "RAC1P");

struct StrataCell {
  std::vector<std::int32_t> key;  // bin or category code per stratifying key
  std::string label;              // e.g. "AGEP[33,66)|SEX=2|RAC1P=1"
  std::vector<std::size_t> rows;  // ascending
};

struct StrataPartition {
  std::vector<StrataKey> keys;
  std::vector<StrataCell> cells;  // nonempty cells ordered by key
  std::size_t n_rows = 0;
};

StrataPartition build_strata(const TabularDataset& ds, std::span<const StrataKey> keys);

/// Hamilton (largest-remainder) apportionment of `size` over cells with the
/// given counts, never exceeding a cell's count. Ties in the remainder go to
/// the earlier cell. Uses exact integer arithmetic.
std::vector<std::size_t> allocate_largest_remainder(std::span<const std::size_t> counts, std::size_t size);

/// Proportional stratified random sampling (the "miniature" sample).
SampleIndex sample_stratified(const TabularDataset& ds, const StrataPartition& partition, std::size_t size,
                              std::uint64_t seed);

struct DensityWeights {
  std::size_t k = 5;
  double temperature = 1.0;
  std::vector<double> distances;  // mean distance to the k nearest other rows
  std::vector<double> weights;    // proportional to distances^temperature, sum 1
  bool uniform_fallback = false;  // every distance was zero
};

/// Brute-force k-nearest-neighbour distances in the encoded feature space.
/// `threads` splits the query rows; the result does not depend on it.
DensityWeights compute_density_weights(const FeatureMatrix& fm, std::size_t k = 5, double temperature = 1.0,
                                       unsigned threads = 1);

/// Weighted sampling without replacement: the distribution of `size`
/// sequential draws, each proportional to the remaining weights. Drawn with
/// exponential keys log(u)/w, which realises exactly that distribution.
SampleIndex sample_density(const TabularDataset& ds, const DensityWeights& weights, std::size_t size,
                           std::uint64_t seed);

}  // namespace repsample
