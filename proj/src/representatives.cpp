#include "repsample/representatives.hpp"

#include <algorithm>
#include <map>

#include "repsample/error.hpp"

namespace repsample {
namespace {

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

std::int32_t mode_of(std::span<const std::int32_t> codes, std::span<const std::size_t> rows, std::size_t n_categories) {
  std::vector<std::size_t> counts(n_categories, 0);
  for (std::size_t r : rows) ++counts[static_cast<std::size_t>(codes[r])];
  return static_cast<std::int32_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

}  // namespace

std::vector<GroupRepresentative> compute_representatives(const TabularDataset& ds,
                                                         std::span<const std::string> group_by,
                                                         const FeatureMatrix& fm, CenterMode mode) {
  if (ds.n_rows() == 0) throw ConfigError("representatives of an empty dataset");
  if (fm.rows() != ds.n_rows()) throw ConfigError("feature matrix does not match the dataset");
  const Schema& schema = ds.schema();
  std::vector<std::size_t> keys;
  for (const std::string& name : group_by) {
    const std::size_t j = schema.index_of(name);
    if (!schema[j].is_categorical()) {
      throw ConfigError("group-by feature '" + name + "' must be categorical (bin continuous features first)");
    }
    keys.push_back(j);
  }

  std::map<std::vector<std::int32_t>, std::vector<std::size_t>> groups;
  std::vector<std::int32_t> key(keys.size());
  for (std::size_t i = 0; i < ds.n_rows(); ++i) {
    for (std::size_t q = 0; q < keys.size(); ++q) key[q] = ds.column(keys[q]).codes[i];
    groups[key].push_back(i);
  }

  const Eigen::Index p = fm.values.cols();
  std::vector<GroupRepresentative> out;
  for (const auto& [k, rows] : groups) {
    GroupRepresentative rep;
    rep.size = rows.size();
    for (std::size_t q = 0; q < keys.size(); ++q) {
      rep.group_key.push_back(schema[keys[q]].categories[static_cast<std::size_t>(k[q])]);
    }

    // Human-readable center on the original scale.
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const FeatureSpec& f = schema[j];
      if (!f.is_model_input()) continue;
      if (f.is_categorical()) {
        const auto m = mode_of(ds.codes(j), rows, f.categories.size());
        rep.center.emplace_back(f.name, f.categories[static_cast<std::size_t>(m)]);
      } else {
        std::vector<double> v;
        v.reserve(rows.size());
        for (std::size_t r : rows) v.push_back(ds.column(j).real[r]);
        double c = 0.0;
        if (mode == CenterMode::median) {
          c = median_of(std::move(v));
        } else {
          for (double x : v) c += x;
          c /= static_cast<double>(v.size());
        }
        rep.center.emplace_back(f.name, c);
      }
    }

    // Center in the encoded space.
    Eigen::VectorXd center = Eigen::VectorXd::Zero(p);
    for (std::size_t r : rows) center += fm.values.row(static_cast<Eigen::Index>(r)).transpose();
    center /= static_cast<double>(rows.size());
    if (mode == CenterMode::median) {
      for (const auto& [name, span] : fm.encoding_map) {
        const FeatureSpec& f = schema[schema.index_of(name)];
        const auto c0 = static_cast<Eigen::Index>(span.first);
        if (!f.is_categorical()) {
          std::vector<double> v;
          for (std::size_t r : rows) v.push_back(fm.values(static_cast<Eigen::Index>(r), c0));
          center[c0] = median_of(std::move(v));
        } else {
          const auto m = mode_of(ds.codes(schema.index_of(name)), rows, f.categories.size());
          if (f.kind == FeatureKind::binary) {
            center[c0] = m == 1 ? 1.0 : 0.0;
          } else {
            for (std::size_t c = 0; c < span.count; ++c) center[c0 + static_cast<Eigen::Index>(c)] = 0.0;
            center[c0 + m] = 1.0;
          }
        }
      }
    }

    double best = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (std::size_t r : rows) {
      const double d2 = (fm.values.row(static_cast<Eigen::Index>(r)).transpose() - center).squaredNorm();
      total += d2;
      if (d2 < best) {
        best = d2;
        rep.medoid_index = r;
      }
    }
    rep.dispersion = total / static_cast<double>(rows.size());
    out.push_back(std::move(rep));
  }
  return out;
}

nlohmann::json to_json(const GroupRepresentative& rep) {
  nlohmann::json center = nlohmann::json::object();
  for (const auto& [name, value] : rep.center) center[name] = value;
  return {{"group", rep.group_key}, {"size", rep.size},       {"center", center},
          {"medoid_index", rep.medoid_index}, {"dispersion", rep.dispersion}};
}

}  // namespace repsample
