#include "repsample/fairness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "repsample/csv.hpp"
#include "repsample/error.hpp"
#include "repsample/random.hpp"
#include "repsample/reflection.hpp"

namespace repsample {

bool GroupSelector::contains(const std::string& label) const {
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

void PredictionTriple::validate() const {
  if (y_hat.size() != y.size() || y.size() != a.size()) {
    throw ConfigError("prediction triple has vectors of different length");
  }
  if (y.size() < 2) throw ConfigError("prediction triple needs at least two observations");
}

std::vector<std::size_t> PredictionTriple::members(const GroupSelector& g) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (g.contains(a[i])) out.push_back(i);
  }
  return out;
}

namespace {

std::vector<double> gather(const std::vector<double>& v, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

std::vector<std::size_t> nonempty_members(const PredictionTriple& pt, const GroupSelector& g) {
  auto m = pt.members(g);
  if (m.empty()) throw ConfigError("protected group '" + g.name + "' has no observations");
  return m;
}

void require_binary(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (x != 0.0 && x != 1.0) throw ConfigError(std::string(what) + " must be 0/1 for a classification disparity");
  }
}

double positive_rate(const std::vector<double>& v, const std::vector<std::size_t>& idx) {
  double s = 0.0;
  for (std::size_t i : idx) s += v[i];
  return s / static_cast<double>(idx.size());
}

}  // namespace

double rdd(const PredictionTriple& pt, const GroupSelector& group0, const GroupSelector& group1) {
  pt.validate();
  const auto m0 = nonempty_members(pt, group0);
  const auto m1 = nonempty_members(pt, group1);
  return ks_statistic(gather(pt.y_hat, m0), gather(pt.y_hat, m1));
}

double rdd_pooled(const PredictionTriple& pt, std::span<const GroupSelector> groups) {
  pt.validate();
  if (groups.empty()) throw ConfigError("pooled RDD needs at least one group");
  double best = 0.0;
  for (const GroupSelector& g : groups) {
    best = std::max(best, ks_statistic(gather(pt.y_hat, nonempty_members(pt, g)), pt.y_hat));
  }
  return best;
}

FairDummies make_fair_dummies(const PredictionTriple& pt, std::size_t n_bins, std::uint64_t seed) {
  pt.validate();
  const std::size_t n = pt.y.size();
  if (n_bins < 2) throw ConfigError("fair dummies need at least two Y bins");
  if (n_bins > n) throw ConfigError("more Y bins than observations");

  FairDummies fd;
  fd.n_bins_requested = n_bins;
  fd.seed = seed;
  std::vector<double> sorted = pt.y;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t b = 1; b < n_bins; ++b) {
    const double e = sorted[b * n / n_bins - 1];
    // Tied quantiles and an edge at the maximum would leave empty bins.
    if (e >= sorted.back()) continue;
    if (!fd.bin_edges.empty() && e <= fd.bin_edges.back()) continue;
    fd.bin_edges.push_back(e);
  }
  fd.n_bins = fd.bin_edges.size() + 1;

  fd.bin_of.resize(n);
  std::vector<std::vector<std::size_t>> members(fd.n_bins);
  for (std::size_t i = 0; i < n; ++i) {
    const auto b = std::lower_bound(fd.bin_edges.begin(), fd.bin_edges.end(), pt.y[i]) - fd.bin_edges.begin();
    fd.bin_of[i] = static_cast<std::int32_t>(b);
    members[static_cast<std::size_t>(b)].push_back(i);
  }

  fd.a_tilde = pt.a;
  Rng rng(seed);
  for (const auto& rows : members) {
    // Fisher-Yates over the bin's labels.
    std::vector<std::string> labels;
    labels.reserve(rows.size());
    for (std::size_t i : rows) labels.push_back(pt.a[i]);
    for (std::size_t i = labels.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
      std::swap(labels[i - 1], labels[std::min(j, i - 1)]);
    }
    for (std::size_t q = 0; q < rows.size(); ++q) fd.a_tilde[rows[q]] = std::move(labels[q]);
  }
  return fd;
}

ReodAggregation parse_reod_aggregation(const std::string& text) {
  if (text == "max") return ReodAggregation::max;
  if (text == "weighted") return ReodAggregation::weighted;
  throw ConfigError("unknown REOD aggregation '" + text + "' (expected max or weighted)");
}

std::string_view to_string(ReodAggregation agg) {
  return agg == ReodAggregation::max ? "max" : "weighted";
}

ReodResult reod(const PredictionTriple& pt, const FairDummies& fd, const GroupSelector& group0,
                const GroupSelector& group1, ReodAggregation agg) {
  pt.validate();
  if (fd.a_tilde.size() != pt.a.size() || fd.bin_of.size() != pt.a.size()) {
    throw ConfigError("fair dummies were built for different predictions");
  }
  nonempty_members(pt, group0);
  nonempty_members(pt, group1);

  ReodResult r;
  std::size_t cells = 0;
  std::size_t used = 0;
  double weighted_sum = 0.0;
  double weight_total = 0.0;
  for (std::size_t b = 0; b < fd.n_bins; ++b) {
    for (const GroupSelector* g : {&group0, &group1}) {
      ++cells;
      std::vector<double> observed;
      std::vector<double> fair;
      for (std::size_t i = 0; i < pt.a.size(); ++i) {
        if (static_cast<std::size_t>(fd.bin_of[i]) != b) continue;
        if (g->contains(pt.a[i])) observed.push_back(pt.y_hat[i]);
        if (g->contains(fd.a_tilde[i])) fair.push_back(pt.y_hat[i]);
      }
      if (observed.empty() || fair.empty()) continue;
      ++used;
      const double ks = ks_statistic(observed, fair);
      r.value = std::max(r.value, ks);
      weighted_sum += ks * static_cast<double>(observed.size());
      weight_total += static_cast<double>(observed.size());
    }
  }
  if (agg == ReodAggregation::weighted) r.value = weight_total > 0.0 ? weighted_sum / weight_total : 0.0;
  r.coverage = static_cast<double>(used) / static_cast<double>(cells);
  return r;
}

ReodResult reod(const PredictionTriple& pt, const GroupSelector& group0, const GroupSelector& group1,
                std::size_t n_bins, std::size_t resamples, std::uint64_t seed, ReodAggregation agg) {
  if (resamples == 0) throw ConfigError("REOD needs at least one fair-dummy resample");
  ReodResult avg;
  avg.value = 0.0;
  avg.coverage = 0.0;
  avg.resamples = resamples;
  for (std::size_t s = 0; s < resamples; ++s) {
    const FairDummies fd = make_fair_dummies(pt, n_bins, derive_seed(seed, {"fair_dummies", std::uint64_t{s}}));
    const ReodResult one = reod(pt, fd, group0, group1, agg);
    avg.value += one.value;
    avg.coverage += one.coverage;
  }
  avg.value /= static_cast<double>(resamples);
  avg.coverage /= static_cast<double>(resamples);
  return avg;
}

double cdd(const PredictionTriple& pt, const GroupSelector& group0, const GroupSelector& group1) {
  pt.validate();
  require_binary(pt.y_hat, "predictions");
  return std::fabs(positive_rate(pt.y_hat, nonempty_members(pt, group0)) -
                   positive_rate(pt.y_hat, nonempty_members(pt, group1)));
}

double ceod(const PredictionTriple& pt, const GroupSelector& group0, const GroupSelector& group1) {
  pt.validate();
  require_binary(pt.y_hat, "predictions");
  require_binary(pt.y, "targets");
  auto tpr = [&](const GroupSelector& g) {
    std::vector<std::size_t> positives;
    for (std::size_t i : nonempty_members(pt, g)) {
      if (pt.y[i] == 1.0) positives.push_back(i);
    }
    if (positives.empty()) throw ConfigError("protected group '" + g.name + "' has no positive cases (Y = 1)");
    return positive_rate(pt.y_hat, positives);
  };
  return std::fabs(tpr(group0) - tpr(group1));
}

PredictionTriple read_predictions_csv(const std::string& path) {
  std::vector<std::size_t> lines;
  const auto records = parse_csv_records(read_text_file(path), lines);
  if (records.empty()) throw DataError("predictions file '" + path + "' is empty");
  const auto& header = records.front();
  auto column = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("predictions file lacks a '" + std::string(name) + "' column");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cy_hat = column("y_hat");
  const std::size_t cy = column("y");
  const std::size_t ca = column("a");
  auto number = [&](const std::string& s, std::size_t row) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
      throw DataError("predictions row " + std::to_string(row) + ": '" + s + "' is not a finite number");
    }
    return v;
  };
  PredictionTriple pt;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      throw DataError("predictions row " + std::to_string(r) + " has " + std::to_string(rec.size()) +
                      " fields, expected " + std::to_string(header.size()));
    }
    pt.y_hat.push_back(number(rec[cy_hat], r));
    pt.y.push_back(number(rec[cy], r));
    pt.a.push_back(rec[ca]);
  }
  return pt;
}

GroupSelector parse_group_selector(const nlohmann::json& j) {
  if (j.is_string()) return GroupSelector::single(j.get<std::string>());
  if (j.is_array()) {
    GroupSelector g;
    for (const auto& e : j) {
      if (!e.is_string()) throw ConfigError("group labels must be strings");
      g.labels.push_back(e.get<std::string>());
    }
    if (g.labels.empty()) throw ConfigError("a protected group needs at least one label");
    for (std::size_t i = 0; i < g.labels.size(); ++i) g.name += (i ? "+" : "") + g.labels[i];
    return g;
  }
  if (j.is_object()) {
    GroupSelector g = parse_group_selector(j.at("labels"));
    if (j.contains("name")) g.name = j.at("name").get<std::string>();
    return g;
  }
  throw ConfigError("a protected group is a label, a list of labels, or {name, labels}");
}

}  // namespace repsample
