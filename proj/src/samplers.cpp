#include "repsample/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "repsample/error.hpp"
#include "repsample/random.hpp"

namespace repsample {
namespace {

void check_size(const TabularDataset& ds, std::size_t size) {
  if (size > ds.n_rows()) {
    throw ConfigError("sample size " + std::to_string(size) + " exceeds population size " +
                      std::to_string(ds.n_rows()));
  }
}

// First `take` entries of `pool` become a uniform random draw.
void partial_shuffle(std::vector<std::size_t>& pool, std::size_t take, Rng& rng) {
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
}

std::string format_edge(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

SampleIndex sample_simple_random(const TabularDataset& ds, std::size_t size, std::uint64_t seed) {
  check_size(ds, size);
  Rng rng(seed);
  std::vector<std::size_t> pool(ds.n_rows());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  partial_shuffle(pool, size, rng);
  pool.resize(size);
  return {ds.id(), std::move(pool), {"srs", seed, {{"size", size}}}};
}

std::vector<StrataKey> default_strata_keys(std::string age, std::string sex, std::string race) {
  return {{std::move(age), {0.0, 33.0, 66.0, 99.0}}, {std::move(sex), {}}, {std::move(race), {}}};
}

StrataPartition build_strata(const TabularDataset& ds, std::span<const StrataKey> keys) {
  const Schema& schema = ds.schema();
  std::vector<std::size_t> feature(keys.size());
  for (std::size_t k = 0; k < keys.size(); ++k) {
    feature[k] = schema.index_of(keys[k].feature);
    const FeatureSpec& f = schema[feature[k]];
    if (f.kind == FeatureKind::continuous) {
      if (keys[k].edges.size() < 2) {
        throw ConfigError("continuous stratifying feature '" + f.name + "' needs at least two bin edges");
      }
      if (!std::is_sorted(keys[k].edges.begin(), keys[k].edges.end()) ||
          std::adjacent_find(keys[k].edges.begin(), keys[k].edges.end()) != keys[k].edges.end()) {
        throw ConfigError("bin edges for '" + f.name + "' must be strictly increasing");
      }
    }
  }

  std::map<std::vector<std::int32_t>, std::vector<std::size_t>> cells;
  std::vector<std::int32_t> key(keys.size());
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    for (std::size_t k = 0; k < keys.size(); ++k) {
      const std::size_t j = feature[k];
      if (schema[j].is_categorical()) {
        key[k] = ds.column(j).codes[i];
      } else {
        const auto& edges = keys[k].edges;
        const double v = ds.column(j).real[i];
        const auto nbins = static_cast<std::int32_t>(edges.size() - 1);
        const auto pos = static_cast<std::int32_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin()) - 1;
        key[k] = std::clamp(pos, 0, nbins - 1);
      }
    }
    cells[key].push_back(i);
  }

  StrataPartition part;
  part.keys.assign(keys.begin(), keys.end());
  part.n_rows = ds.n_rows();
  for (auto& [k, rows] : cells) {
    StrataCell cell;
    cell.key = k;
    for (std::size_t q = 0; q < keys.size(); ++q) {
      const FeatureSpec& f = schema[feature[q]];
      if (q) cell.label += '|';
      if (f.is_categorical()) {
        cell.label += f.name + "=" + f.categories[static_cast<std::size_t>(k[q])];
      } else {
        const auto b = static_cast<std::size_t>(k[q]);
        cell.label += f.name + "[" + format_edge(keys[q].edges[b]) + "," + format_edge(keys[q].edges[b + 1]) + ")";
      }
    }
    cell.rows = std::move(rows);
    part.cells.push_back(std::move(cell));
  }
  return part;
}

std::vector<std::size_t> allocate_largest_remainder(std::span<const std::size_t> counts, std::size_t size) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (size > total) {
    throw ConfigError("cannot allocate " + std::to_string(size) + " draws over " + std::to_string(total) + " rows");
  }
  std::vector<std::size_t> alloc(counts.size(), 0);
  if (total == 0 || size == 0) return alloc;

  // quota_c = counts[c] * size / total, split into floor and remainder
  // numerator (over `total`).
  std::vector<std::size_t> remainder(counts.size());
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const unsigned __int128 num = static_cast<unsigned __int128>(counts[c]) * size;
    alloc[c] = static_cast<std::size_t>(num / total);
    remainder[c] = static_cast<std::size_t>(num % total);
    assigned += alloc[c];
  }
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  // Extra units go by remainder order, skipping full cells; loops again if
  // capacity ran out in the first pass.
  while (assigned < size) {
    bool progressed = false;
    for (std::size_t c : order) {
      if (assigned == size) break;
      if (alloc[c] < counts[c]) {
        ++alloc[c];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return alloc;
}

SampleIndex sample_stratified(const TabularDataset& ds, const StrataPartition& partition, std::size_t size,
                              std::uint64_t seed) {
  check_size(ds, size);
  if (partition.n_rows != ds.n_rows()) throw ConfigError("strata partition was built for another dataset");
  std::vector<std::size_t> counts;
  counts.reserve(partition.cells.size());
  for (const StrataCell& c : partition.cells) counts.push_back(c.rows.size());
  const std::vector<std::size_t> alloc = allocate_largest_remainder(counts, size);

  Rng rng(seed);
  std::vector<std::size_t> out;
  out.reserve(size);
  for (std::size_t c = 0; c < partition.cells.size(); ++c) {
    std::vector<std::size_t> pool = partition.cells[c].rows;
    partial_shuffle(pool, alloc[c], rng);
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(alloc[c]));
  }

  nlohmann::json keys = nlohmann::json::array();
  for (const StrataKey& k : partition.keys) {
    nlohmann::json e = {{"feature", k.feature}};
    if (!k.edges.empty()) e["edges"] = k.edges;
    keys.push_back(std::move(e));
  }
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t c = 0; c < partition.cells.size(); ++c) {
    cells.push_back({{"cell", partition.cells[c].label}, {"population", counts[c]}, {"allocated", alloc[c]}});
  }
  return {ds.id(), std::move(out),
          {"stratified", seed, {{"size", size}, {"strata_keys", keys}, {"n_cells", partition.cells.size()},
                                {"cells", cells}}}};
}

SampleIndex sample_density(const TabularDataset& ds, const DensityWeights& weights, std::size_t size,
                           std::uint64_t seed) {
  check_size(ds, size);
  const std::size_t n = ds.n_rows();
  if (weights.weights.size() != n) throw ConfigError("density weights do not match the dataset");
  nlohmann::json params = {{"size", size}, {"k", weights.k}, {"temperature", weights.temperature},
                           {"uniform_fallback", weights.uniform_fallback}};
  if (size == n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return {ds.id(), std::move(all), {"density", seed, std::move(params)}};
  }
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights.weights[i] > 0.0) candidates.push_back(i);
  }
  if (size > candidates.size()) {
    throw ConfigError("sample size " + std::to_string(size) + " exceeds the " + std::to_string(candidates.size()) +
                      " rows with positive density weight");
  }
  Rng rng(seed);
  std::vector<double> key(n, -std::numeric_limits<double>::infinity());
  for (std::size_t i : candidates) key[i] = std::log(uniform01_open_low(rng)) / weights.weights[i];
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(size), candidates.end(),
                    [&](std::size_t a, std::size_t b) { return key[a] > key[b] || (key[a] == key[b] && a < b); });
  candidates.resize(size);
  return {ds.id(), std::move(candidates), {"density", seed, std::move(params)}};
}

}  // namespace repsample
