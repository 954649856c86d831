// Acceptance run: one PASS/FAIL/SKIP line per criterion. Exit status is
// nonzero when any criterion fails. `--only 4,5` runs a subset.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "repsample/coverage.hpp"
#include "repsample/dpp.hpp"
#include "repsample/experiment.hpp"
#include "repsample/modeling.hpp"
#include "repsample/reflection.hpp"
#include "repsample/samplers.hpp"
#include "repsample/stats.hpp"
#include "repsample/synthetic.hpp"

using namespace repsample;
namespace fs = std::filesystem;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict = Verdict::fail;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n01(rng);
  return m;
}

TabularDataset index_rows(std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = double(i);
  return TabularDataset(Schema({{"x", FeatureKind::continuous, {}, FeatureRole::input}}), {{x, {}}}, "rows");
}

Outcome criterion1() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<std::size_t> size(1, 6);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    std::vector<double> a(size(rng)), b(size(rng));
    // Half the pairs live on a small integer grid so that atoms coincide.
    const bool grid = t % 2 == 0;
    for (double& x : a) x = grid ? double(int(rng() % 7) - 3) : u(rng);
    for (double& x : b) x = grid ? double(int(rng() % 7) - 3) : u(rng);
    worst = std::max(worst, std::fabs(wasserstein1(a, b) - oracle::transport_lp(a, b)));
  }
  return {worst <= 1e-9 ? Verdict::pass : Verdict::fail, "max |W1 - LP| = " + fmt(worst, 3) + " over 500 pairs"};
}

Outcome criterion2() {
  std::mt19937_64 rng(2002);
  std::ostringstream detail;
  bool ok = true;
  for (int inst = 0; inst < 5; ++inst) {
    const std::size_t k = 1 + std::size_t(inst % 3);
    const std::size_t n = 4 + std::size_t(rng() % 5);  // 4..8
    const std::size_t p = std::max<std::size_t>(k, 2 + std::size_t(rng() % 7));  // 2..8, >= k
    const Eigen::MatrixXd items = gaussian(rng, Eigen::Index(n), Eigen::Index(p));
    const DppKernel kernel = build_dpp_kernel(items);
    const TabularDataset ds = index_rows(n);
    const auto sets = oracle::subsets(n, k);
    const auto probs = oracle::kdpp_probabilities(items * items.transpose(), sets);
    std::vector<double> freq(sets.size(), 0.0);
    const int draws = 50000;
    for (int s = 0; s < draws; ++s) {
      std::vector<std::size_t> idx = sample_kdpp(ds, kernel, k, derive_seed(2002, {std::uint64_t(inst), std::uint64_t(s)})).indices;
      std::sort(idx.begin(), idx.end());
      freq[std::size_t(std::lower_bound(sets.begin(), sets.end(), idx) - sets.begin())] += 1.0;
    }
    const double p_value = oracle::chi_square_p(freq, probs, draws);
    ok = ok && p_value > 0.001;
    detail << (inst ? "; " : "") << "n=" << n << " p=" << p << " k=" << k << " chi2 p=" << fmt(p_value, 3);
  }
  return {ok ? Verdict::pass : Verdict::fail, detail.str()};
}

Outcome criterion3() {
  std::mt19937_64 rng(3003);
  bool bounds = true;
  bool max_iff_uniform = true;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t k = 2 + std::size_t(rng() % 11);
    std::vector<double> counts(k);
    if (t % 10 == 0) {
      std::fill(counts.begin(), counts.end(), double(1 + rng() % 50));
    } else {
      for (double& c : counts) c = double(rng() % 20);
      if (std::all_of(counts.begin(), counts.end(), [](double c) { return c == 0; })) counts[0] = 1;
    }
    double total = 0.0;
    for (double c : counts) total += c;
    std::vector<double> shares(k);
    for (std::size_t i = 0; i < k; ++i) shares[i] = counts[i] / total;
    const bool uniform = std::all_of(counts.begin(), counts.end(), [&](double c) { return c == counts[0]; });
    const double c = combinatorial_diversity(shares);
    const double lnk = std::log(double(k));
    bounds = bounds && c >= 0.0 && c <= lnk + 1e-12;
    const bool at_max = std::fabs(c - lnk) <= 1e-12;
    max_iff_uniform = max_iff_uniform && at_max == uniform;
  }

  double primal_dual = 0.0;
  double rotation = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = 2 + Eigen::Index(rng() % 7);
    const Eigen::MatrixXd d = gaussian(rng, n, n);
    const double lp = geometric_diversity(d, DiversityBasis::primal).log_volume;
    const double ld = geometric_diversity(d, DiversityBasis::dual).log_volume;
    // |G_p / G_d - 1| from the log volumes.
    primal_dual = std::max(primal_dual, std::fabs(std::expm1(lp - ld)));

    const Eigen::Index rows = 1 + Eigen::Index(rng() % 12);
    const Eigen::Index p = 1 + Eigen::Index(rng() % 8);
    const Eigen::MatrixXd x = gaussian(rng, rows, p);
    const Eigen::MatrixXd q = gaussian(rng, p, p).householderQr().householderQ();
    const GeometricDiversity g0 = geometric_diversity(x);
    const GeometricDiversity g1 = geometric_diversity(Eigen::MatrixXd(x * q));
    if (std::isfinite(g0.log_volume) && g0.log_volume > -20) {
      rotation = std::max(rotation, std::fabs(std::expm1(g1.log_volume - g0.log_volume)));
    }
  }
  const bool ok = bounds && max_iff_uniform && primal_dual <= 1e-8 && rotation <= 1e-6;
  return {ok ? Verdict::pass : Verdict::fail,
          std::string("entropy bounds ") + (bounds ? "hold" : "violated") + ", max iff uniform " +
              (max_iff_uniform ? "holds" : "violated") + ", primal/dual rel " + fmt(primal_dual, 3) + ", rotation rel " +
              fmt(rotation, 3)};
}

Outcome criterion4() {
  SyntheticPopulationSpec spec = census_like_spec(20000);
  spec.states.clear();
  int c_order = 0;
  int emd_order = 0;
  double c_sum[3] = {0, 0, 0};
  double emd_sum[3] = {0, 0, 0};
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const TabularDataset ds = generate_synthetic_population(spec, std::uint64_t(s))[0];
    const FeatureMatrix fm = encode_matrix(ds, true);
    const std::uint64_t root = derive_seed(4004, {std::uint64_t(s)});
    const SampleIndex mini = sample_stratified(ds, build_strata(ds, default_strata_keys()), 4000, derive_seed(root, {"stratified"}));
    const SampleIndex dens = sample_density(ds, compute_density_weights(fm), 4000, derive_seed(root, {"density"}));
    const SampleIndex dpp = sample_kdpp_batched(ds, fm, 4000, derive_seed(root, {"kdpp"}));
    const std::size_t race = ds.schema().index_of("RAC1P");
    const auto pop = EmpiricalDistribution1D::of_feature(ds, race);
    double c[3];
    double emd[3];
    const SampleIndex* samples[3] = {&mini, &dens, &dpp};
    for (int i = 0; i < 3; ++i) {
      c[i] = combinatorial_diversity(ds, samples[i]->indices, "RAC1P");
      emd[i] = wasserstein1(EmpiricalDistribution1D::of_feature(extract(ds, *samples[i]), race), pop);
      c_sum[i] += c[i] / seeds;
      emd_sum[i] += emd[i] / seeds;
    }
    c_order += c[0] < c[1] && c[1] < c[2];
    emd_order += emd[0] < emd[2] && emd[2] < emd[1];
  }
  const bool ok = c_order >= 18 && emd_order >= 18;
  return {ok ? Verdict::pass : Verdict::fail,
          "C order in " + std::to_string(c_order) + "/20 (mean " + fmt(c_sum[0]) + " < " + fmt(c_sum[1]) + " < " +
              fmt(c_sum[2]) + "), EMD order in " + std::to_string(emd_order) + "/20 (mean " + fmt(emd_sum[0]) + " < " +
              fmt(emd_sum[2]) + " < " + fmt(emd_sum[1]) + ")"};
}

Outcome criterion5() {
  std::vector<double> mse_mini, mse_dens, rdd_mini, rdd_dens;
  for (int s = 0; s < 10; ++s) {
    ExperimentConfig cfg = parse_experiment_config(
        {{"seed", s},
         {"samplers", {"stratified", "density"}},
         {"protected_feature", "RAC1P"},
         {"reod_resamples", 1},
         {"data", {{"synthetic", "census_like"}, {"n", 20000}, {"seed", 100 + s}}}});
    cfg.data.synthetic->states.clear();
    const auto data = load_experiment_data(cfg);
    const CvResult r = run_cv_experiment(data[0], cfg);
    for (const FoldResult& f : r.folds) {
      mse_mini.push_back(f.conditions[1].metrics.at("mse"));
      mse_dens.push_back(f.conditions[2].metrics.at("mse"));
      rdd_mini.push_back(f.conditions[1].metrics.at("rdd"));
      rdd_dens.push_back(f.conditions[2].metrics.at("rdd"));
    }
  }
  const TTestResult t_mse = paired_t_test(mse_dens, mse_mini);
  const TTestResult t_rdd = paired_t_test(rdd_mini, rdd_dens);
  const std::vector<double> adj = bh_adjust(std::vector<double>{t_mse.p_value, t_rdd.p_value});
  const bool ok = t_mse.mean_diff > 0 && t_rdd.mean_diff > 0 && adj[0] < 0.05 && adj[1] < 0.05;
  return {ok ? Verdict::pass : Verdict::fail,
          "MSE miniature " + fmt(mean(mse_mini)) + " < density " + fmt(mean(mse_dens)) + " (p_adj " + fmt(adj[0], 3) +
              "); RDD density " + fmt(mean(rdd_dens)) + " < miniature " + fmt(mean(rdd_mini)) + " (p_adj " +
              fmt(adj[1], 3) + "); 50 folds"};
}

Outcome criterion6() {
  int pass = 0;
  double similar_sum = 0.0;
  double shifted_sum = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const ExperimentConfig cfg = parse_experiment_config(
        {{"seed", s}, {"samplers", {"stratified", "density"}}, {"data", {{"synthetic", "census_like"}, {"n", 10000}, {"seed", 500 + s}}}});
    const auto data = load_experiment_data(cfg);
    const std::vector<TabularDataset> others(data.begin() + 1, data.end());
    const OodResult r = run_ood_experiment(data[0], others, cfg);
    double similar = 0.0;
    double shifted = 0.0;
    int n_similar = 0;
    int n_shifted = 0;
    for (const StateResult& st : r.states) {
      if (st.state.rfind("similar", 0) == 0) {
        similar += st.mean_improvement_pct;
        ++n_similar;
      } else if (st.state.rfind("shifted", 0) == 0) {
        shifted += st.mean_improvement_pct;
        ++n_shifted;
      }
    }
    if (n_similar != 2 || n_shifted != 4) return {Verdict::fail, "unexpected state universe"};
    similar /= n_similar;
    shifted /= n_shifted;
    similar_sum += similar / seeds;
    shifted_sum += shifted / seeds;
    pass += similar < 0.0 && shifted > 0.0;
  }
  return {pass >= 16 ? Verdict::pass : Verdict::fail,
          std::to_string(pass) + "/20 seeds with shifted > 0 > similar (mean improvement: shifted " + fmt(shifted_sum) +
              "%, similar " + fmt(similar_sum) + "%)"};
}

Outcome criterion7() {
  const std::vector<double> bh = bh_adjust(std::vector<double>{0.005, 0.01, 0.03, 0.04});
  const bool bh_ok = bh == std::vector<double>{0.02, 0.02, 0.04, 0.04};
  const TTestResult t = paired_t_test(std::vector<double>{0.5, 1.5, 1.0, 2.0, 0.0}, std::vector<double>{0, 0, 0, 0, 0});
  const bool t_ok = std::fabs(t.t - 2.83) <= 0.01;

  std::mt19937_64 rng(7007);
  double ols = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Index p = 1 + Eigen::Index(rng() % 8);
    const Eigen::Index n = p + 2 + Eigen::Index(rng() % 100);
    const Eigen::MatrixXd x = gaussian(rng, n, p);
    const Eigen::VectorXd y = gaussian(rng, n, 1);
    ols = std::max(ols, (fit_ols(x, y).coefficients - oracle::normal_equation_ols(x, y)).cwiseAbs().maxCoeff());
  }
  double grad = 0.0;
  std::uniform_real_distribution<double> u01;
  for (int i = 0; i < 50; ++i) {
    const Eigen::Index p = 1 + Eigen::Index(rng() % 5);
    const Eigen::MatrixXd x = gaussian(rng, 60, p);
    Eigen::VectorXd y(60);
    for (Eigen::Index r = 0; r < 60; ++r) y[r] = u01(rng) < 0.4 ? 1.0 : 0.0;
    const Eigen::VectorXd beta = gaussian(rng, p + 1, 1);
    const Eigen::VectorXd g = logistic_gradient(x, y, beta);
    const Eigen::VectorXd fd = oracle::central_difference(x, y, beta);
    grad = std::max(grad, (g - fd).norm() / std::max(fd.norm(), 1e-300));
  }
  const bool ok = bh_ok && t_ok && ols <= 1e-8 && grad <= 1e-5;
  return {ok ? Verdict::pass : Verdict::fail,
          std::string("BH example ") + (bh_ok ? "exact" : "mismatch") + ", paired t = " + fmt(t.t, 4) +
              ", OLS max dev " + fmt(ols, 3) + ", logistic gradient rel dev " + fmt(grad, 3)};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(REPSAMPLE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion8() {
  const fs::path dir = fs::temp_directory_path() / ("repsample_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const nlohmann::json cfg = {{"seed", 8},
                              {"samplers", {"stratified", "density", "kdpp"}},
                              {"protected_feature", "RAC1P"},
                              {"reod_resamples", 3},
                              {"data", {{"synthetic", "census_like"}, {"n", 4000}, {"seed", 8}}}};
  std::ofstream(dir / "exp.json") << cfg.dump(2);
  const int a = run_cli("experiment cv --config " + (dir / "exp.json").string() + " --out " + (dir / "a").string());
  const int b = run_cli("experiment cv --config " + (dir / "exp.json").string() + " --out " + (dir / "b").string() +
                        " --threads 2");
  Outcome o;
  if (a != 0 || b != 0) {
    o = {Verdict::fail, "experiment cv exited with " + std::to_string(a) + " and " + std::to_string(b)};
  } else {
    const std::string first = slurp(dir / "a" / "summary.json");
    const std::string second = slurp(dir / "b" / "summary.json");
    const bool same = !first.empty() && first == second;
    o = {same ? Verdict::pass : Verdict::fail,
         std::string("summary.json ") + (same ? "byte-identical" : "differs") + " across two runs (" +
             std::to_string(first.size()) + " bytes; second run on 2 threads)"};
  }
  fs::remove_all(dir);
  return o;
}

// Real ACS data: a directory holding CA.csv (preprocessed income data), from
// REPSAMPLE_ACS_DIR or ./data/acs.
Outcome criterion9() {
  fs::path dir;
  if (const char* env = std::getenv("REPSAMPLE_ACS_DIR")) dir = env;
  else dir = fs::path("data") / "acs";
  if (!fs::exists(dir / "CA.csv")) {
    return {Verdict::skip, "no ACS data (set REPSAMPLE_ACS_DIR to a directory with CA.csv)"};
  }
  ExperimentConfig cfg = parse_experiment_config({{"seed", 0},
                                                  {"samplers", {"stratified", "density", "kdpp"}},
                                                  {"protected_feature", "RAC1P"},
                                                  {"diversity_features", {"RAC1P"}},
                                                  {"reflection_features", {"RAC1P", "WKHP"}}});
  cfg.data.synthetic.reset();
  cfg.data.train_csv = dir / "CA.csv";
  cfg.data.data_config = income_data_config();
  const auto data = load_experiment_data(cfg);
  const CvResult r = run_cv_experiment(data[0], cfg);
  auto value = [&](const std::string& metric, const std::string& feature, const std::string& sample) {
    for (const MetricReport& m : r.summary) {
      if (m.metric == metric && m.feature == feature && m.sample == sample) return m.value;
    }
    return std::nan("");
  };
  const double full = value("mse", "", "full");
  const bool mse_ok = std::fabs(full - 0.7912) <= 0.02;
  // Each chain lists samples from lowest to highest value.
  struct Chain {
    const char* table;
    const char* metric;
    const char* feature;
    std::vector<std::string> order;
  };
  const std::vector<Chain> chains = {
      {"3", "mse", "", {"full", "stratified", "kdpp", "density"}},
      {"3", "rdd", "", {"density", "kdpp", "full", "stratified"}},
      {"3", "reod", "", {"density", "kdpp", "full", "stratified"}},
      {"4", "combinatorial_diversity", "RAC1P", {"stratified", "density", "kdpp"}},
      {"4", "geometric_diversity_log", "", {"stratified", "density", "kdpp"}},
      {"5", "wasserstein1", "RAC1P", {"stratified", "kdpp", "density"}},
      {"5", "wasserstein1", "WKHP", {"stratified", "kdpp", "density"}},
  };
  std::string broken;
  for (const Chain& c : chains) {
    for (std::size_t i = 0; i + 1 < c.order.size(); ++i) {
      if (!(value(c.metric, c.feature, c.order[i]) < value(c.metric, c.feature, c.order[i + 1]))) {
        broken += std::string(broken.empty() ? "" : ", ") + "Table " + c.table + " " + c.metric +
                  (*c.feature ? std::string(" ") + c.feature : std::string()) + " " + c.order[i] + " < " + c.order[i + 1];
      }
    }
  }
  return {mse_ok && broken.empty() ? Verdict::pass : Verdict::fail,
          "full MSE " + fmt(full) + " (target 0.7912 +- 0.02); " +
              (broken.empty() ? std::string("all Table 3/4/5 orderings hold") : "orderings broken: " + broken)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"W1 equals the transport LP", criterion1},
      {"k-DPP subset law is exact", criterion2},
      {"diversity identities", criterion3},
      {"Table 4/5 orderings on the synthetic population", criterion4},
      {"Table 3 in-distribution pattern", criterion5},
      {"OOD pattern over the 6-state universe", criterion6},
      {"statistics oracles", criterion7},
      {"experiment cv is deterministic", criterion8},
      {"ACS California reproduction", criterion9},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = int(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Verdict::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIP";
    failures += o.verdict == Verdict::fail;
    std::cout << "criterion " << id << " " << tag << ": " << criteria[i].first << " - " << o.detail << " ["
              << fmt(secs, 3) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
