// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Pass criterion numbers as arguments to
// run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include "graphon/evaluation.hpp"
#include "graphon/json_io.hpp"
#include "graphon/krylov.hpp"
#include "graphon/moment_poly.hpp"
#include "graphon/nonbacktracking.hpp"
#include "graphon/pipeline.hpp"
#include "graphon/rng.hpp"
#include "graphon/star_counts.hpp"
#include "oracles.hpp"

using namespace graphon;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string join(const std::vector<double>& v, const char* f = "%.3f") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(f, v[i]);
  return s;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

StepGraphon two_block(double a, double b) {
  Eigen::MatrixXd w(2, 2);
  w << a, b, b, a;
  return StepGraphon({0.5, 0.5}, w);
}

PipelineConfig sbm_config(std::size_t n, std::uint64_t seed, const StepGraphon& model) {
  PipelineConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  cfg.model = model;
  cfg.threads = 1;
  return cfg;
}

constexpr std::uint64_t kSeeds[5] = {101, 202, 303, 404, 505};

// ---- 1: iterative spectrum against dense eigensolves ----

Outcome nb_vs_dense() {
  std::mt19937_64 rng(20240601);
  int graphs = 0, bad_b = 0, bad_ib = 0;
  double worst_b = 0.0, worst_ib = 0.0;
  while (graphs < 200) {
    const std::size_t n = 8 + rng() % 23;
    const double p = (2.5 + 3.0 * std::uniform_real_distribution<double>(0, 1)(rng)) / static_cast<double>(n);
    const SparseGraph g = oracle::random_graph(rng, n, p);
    if (g.num_edges() < n) continue;  // need cycles for a nontrivial spectrum
    ++graphs;
    const OrientedEdgeSpace space(g);
    const auto dense = oracle::dense_eigenvalues(oracle::dense_nonbacktracking(g));

    KrylovOptions opt;
    opt.seed = static_cast<std::uint64_t>(graphs);
    const std::size_t want = 6;
    opt.wanted = [&](auto) { return want; };
    const KrylovResult kb = krylov_schur(NonBacktrackingOperator(space), opt);
    double err = 0.0;
    for (std::size_t i = 0; i < kb.values.size(); ++i) {
      err = std::max(err, oracle::nearest(kb.values[i], dense));
      err = std::max(err, std::abs(std::abs(kb.values[i]) - std::abs(dense[i])));
    }
    worst_b = std::max(worst_b, err);
    bad_b += err > 1e-8;

    // Companion operator: its eigenvalues other than +-1 belong to B.
    const KrylovResult kc = krylov_schur(IharaBassOperator(g), opt);
    double err_c = 0.0;
    for (const auto& v : kc.values)
      if (std::abs(v - 1.0) > 1e-6 && std::abs(v + 1.0) > 1e-6) err_c = std::max(err_c, oracle::nearest(v, dense));
    const auto companion = oracle::dense_eigenvalues(ihara_bass_matrix(g));
    for (std::size_t i = 0; i < std::min<std::size_t>(want, companion.size()); ++i)
      if (std::abs(companion[i] - 1.0) > 1e-6 && std::abs(companion[i] + 1.0) > 1e-6)
        err_c = std::max(err_c, oracle::nearest(companion[i], dense));
    worst_ib = std::max(worst_ib, err_c);
    bad_ib += err_c > 1e-8;
  }
  return {bad_b == 0 && bad_ib == 0,
          "200 graphs, worst |B| err " + fmt("%.2e", worst_b) + ", worst companion err " + fmt("%.2e", worst_ib)};
}

// ---- 2 and 7: spectrum of the full sampled graph ----

struct FullSpectrum {
  NbSpectrum spec;
  LatentAssignment latents;
};

std::map<std::uint64_t, FullSpectrum>& full_spectra() {
  static std::map<std::uint64_t, FullSpectrum> cache;
  return cache;
}

const FullSpectrum& full_spectrum(std::uint64_t seed) {
  auto& cache = full_spectra();
  auto it = cache.find(seed);
  if (it != cache.end()) return it->second;
  SampledGraph s = sample_graph(two_block(7, 1), 50000, derive_seed(seed, "generate"));
  const OrientedEdgeSpace space(s.graph);
  SpectrumOptions opt;
  opt.seed = derive_seed(seed, "spectrum");
  FullSpectrum fs{top_spectrum(space, s.graph, opt), std::move(s.latents)};
  return cache.emplace(seed, std::move(fs)).first->second;
}

Outcome spectral_separation() {
  int good = 0;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    const NbSpectrum& s = full_spectrum(seed).spec;
    const bool ok = s.K == 2 && std::abs(s.lambdas[0] - 4.0) <= 0.3 && std::abs(s.lambdas[1] - 3.0) <= 0.3;
    good += ok;
    detail += " K=" + std::to_string(s.K) + ":(" + join(s.lambdas) + ")";
  }
  return {good >= 4, std::to_string(good) + "/5 seeds;" + detail};
}

Outcome diagnostics() {
  const SpectralGraphon truth = spectral_decompose(two_block(7, 1));
  int good = 0;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    const FullSpectrum& f = full_spectrum(seed);
    if (f.spec.K < 2) {
      detail += " K=" + std::to_string(f.spec.K);
      continue;
    }
    const Diagnostics d = diagnostics_C(f.spec.vertex_aggregates, f.latents, truth);
    const double diag2 = d.diagonal[1];
    const double rel = std::abs(d.contraction[1] - diag2) / std::abs(diag2);
    const double off = std::abs(d.C(0, 1)) / std::abs(d.C(0, 0));
    good += rel <= 0.3 && off <= 0.2;
    detail += " (" + fmt("%.3f", rel) + "," + fmt("%.3f", off) + ")";
  }
  return {good >= 4, std::to_string(good) + "/5 seeds; (contraction rel err, |C12|/|C11|):" + detail};
}

// ---- 3: star counts against exhaustive enumeration ----

Outcome star_oracle() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0, worst_table = 0.0;
  int checks = 0;
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 3 + rng() % 10;
    const SparseGraph g = oracle::random_graph(rng, n, 0.25 + 0.5 * (u(rng) + 1.0) / 2.0);
    Eigen::MatrixXd b(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = u(rng) + 1.2;
    std::map<MultiIndex, double> brute;
    const MultiIndexGrid grid(2, 4);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const MultiIndex a = grid.at(i);
      if (order(a) > 4) continue;
      const double fast = count_star(g, a, b);
      const double slow = oracle::star_count(g, leaf_labels(a), b);
      brute[a] = slow;
      const double rel = std::abs(fast - slow) / std::max(std::abs(slow), 1e-300);
      if (slow != 0.0 || fast != 0.0) worst = std::max(worst, rel);
      ++checks;
    }
    // The table computes every entry in one pass by a different route.
    const MomentTable t = moment_table(g, b, {3.0, 2.0}, 0.3, 2);
    if (!t.valid) continue;
    const MultiIndexGrid g2(2, 2);
    for (std::size_t i = 0; i < g2.size(); ++i) {
      const MultiIndex a = g2.at(i);
      const double expect = normalize_star(brute.at(a), a, n, 0.3, {3.0, 2.0}, t.pair_diagonal);
      if (expect != 0.0) worst_table = std::max(worst_table, std::abs(t.entries[i] - expect) / std::abs(expect));
    }
  }
  return {worst <= 1e-12 && worst_table <= 1e-12,
          std::to_string(checks) + " counts, worst rel err " + fmt("%.2e", worst) + ", table " + fmt("%.2e", worst_table)};
}

// ---- 4: normalized moments from the pipeline ----

Outcome moment_consistency() {
  int good = 0;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    const PipelineConfig cfg = sbm_config(50000, seed, two_block(7, 1));
    RunState s = prepare(cfg);
    for (Stage st : {Stage::Generate, Stage::Spectrum, Stage::Moments}) run_stage(st, cfg, s);
    if (s.K() < 2 || !s.table || !s.table->valid || s.table->N < 3) {
      detail += " [K=" + std::to_string(s.K()) + " eps=" + fmt("%.3f", s.epsilon) + "]";
      continue;
    }
    const double p1 = s.table->at({0, 1}), p2 = s.table->at({0, 2}), p3 = s.table->at({0, 3});
    good += std::abs(p1) <= 0.15 && std::abs(p2 - 1.0) <= 0.25 && std::abs(p3) <= 0.3;
    detail += " (" + join({p1, p2, p3}) + ")";
  }
  return {good >= 4, std::to_string(good) + "/5 seeds; P01 P02 P03:" + detail};
}

// ---- 5: density fit recovery ----

double bump(double t) { return std::abs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0; }

template <typename F>
double composite(F f, double a, double b, int pieces) {
  using boost::math::quadrature::gauss;
  const double h = (b - a) / pieces;
  double s = 0.0;
  for (int i = 0; i < pieces; ++i) s += gauss<double, 20>::integrate(f, a + i * h, a + (i + 1) * h);
  return s;
}

double legendre_scaled(unsigned i, double kappa, double x) {
  return boost::math::legendre_p(static_cast<int>(i), x / kappa) * std::sqrt((2.0 * i + 1.0) / (2.0 * kappa));
}

Outcome density_fit() {
  // Orthonormality on [-1, 1] and a wide box.
  double ortho = 0.0;
  for (double kappa : {1.0, 7.0}) {
    const unsigned N = 20;
    const LegendreBasis b = legendre_basis(N, kappa);
    for (unsigned i = 0; i <= N; ++i)
      for (unsigned j = 0; j <= i; ++j) {
        const double ip = boost::math::quadrature::gauss<double, 30>::integrate(
            [&](double x) {
              std::vector<double> v(N + 1);
              scaled_legendre_values(N, kappa, x, v);
              return v[i] * v[j];
            },
            -kappa, kappa);
        ortho = std::max(ortho, std::abs(ip - (i == j ? 1.0 : 0.0)));
      }
  }

  // Planted polynomial density, K = 1 and K = 2.
  const double kappa = 1.6;
  const unsigned Np = 6;
  const double r0 = 1.0 / std::sqrt(2.0 * kappa);
  const auto p1 = [&](double x) { return r0 * legendre_scaled(0, kappa, x) + 0.2 * legendre_scaled(2, kappa, x) - 0.1 * legendre_scaled(3, kappa, x); };
  std::vector<double> m1(Np + 1);
  for (unsigned j = 0; j <= Np; ++j) m1[j] = composite([&](double x) { return std::pow(x, j) * p1(x); }, -kappa, kappa, 8);
  const DensityFit f1 = fit_density(m1, legendre_basis(Np, kappa), 1);
  const double planted1 = std::max({std::abs(f1.rho[0] - r0), std::abs(f1.rho[2] - 0.2), std::abs(f1.rho[3] + 0.1),
                                    std::abs(f1.rho[1]), std::abs(f1.rho[4])});
  // Product density p1(x) p1(y): moments factor.
  const MultiIndexGrid grid(2, Np);
  std::vector<double> m2(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) m2[i] = m1[grid.at(i)[0]] * m1[grid.at(i)[1]];
  const DensityFit f2 = fit_density(m2, legendre_basis(Np, kappa), 2);
  double planted2 = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    planted2 = std::max(planted2, std::abs(f2.rho[i] - f1.rho[grid.at(i)[0]] * f1.rho[grid.at(i)[1]]));

  // Mollified two-atom measure.
  const double delta = 0.2, box = 1.5;
  const double bump_mass = composite(bump, -1.0, 1.0, 64) * delta;
  const auto truth = [&](double x) { return 0.5 * (bump((x - 1.0) / delta) + bump((x + 1.0) / delta)) / bump_mass; };
  std::vector<double> errs;
  for (unsigned N : {8u, 12u, 16u, 20u}) {
    std::vector<double> P(N + 1);
    for (unsigned j = 0; j <= N; ++j) P[j] = j % 2 ? 0.0 : 1.0;
    DensityFit fit = fit_density(mollify_moments(P, 1, N, mollifier_moments(delta, N)), legendre_basis(N, box), 1, delta);
    const double norm = l1_norm_plus(fit, 128);
    errs.push_back(composite(
        [&](double x) { return std::abs(eval_density_plus(fit, std::vector<double>{x}) / norm - truth(x)); }, -box, box,
        240));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < errs.size(); ++i) monotone = monotone && errs[i] < errs[i - 1];
  const bool ok = ortho <= 1e-10 && planted1 <= 1e-9 && planted2 <= 1e-9 && monotone;
  return {ok, "orthonormality err " + fmt("%.1e", ortho) + ", planted err " + fmt("%.1e", std::max(planted1, planted2)) +
                  ", two-atom L1 err over N=8,12,16,20: " + join(errs, "%.4f")};
}

// ---- 6: end-to-end trend ----

Outcome end_to_end() {
  std::vector<double> medians;
  std::string detail;
  for (std::size_t n : {5000u, 20000u, 80000u}) {
    std::vector<double> d;
    std::vector<double> ks;
    for (std::uint64_t seed : kSeeds) {
      PipelineConfig cfg = sbm_config(n, seed, two_block(7, 1));
      cfg.N_override = 4;
      const RunState s = run_pipeline(cfg);
      d.push_back(s.alignment->delta2_upper);
      ks.push_back(static_cast<double>(s.K()));
    }
    medians.push_back(median(d));
    detail += " n=" + std::to_string(n) + ": median " + fmt("%.3f", medians.back()) + " K=(" + join(ks, "%.0f") + ")";
  }
  const bool decreasing = medians[1] < medians[0] && medians[2] < medians[1];
  return {decreasing && medians[2] <= 1.5, detail.substr(1)};
}

// ---- 8: scaled mode ----

Outcome scaled_mode() {
  const StepGraphon model = two_block(6, 2);
  int k1 = 0, k4 = 0;
  std::vector<double> d2, d8;
  std::string ks;
  for (std::uint64_t seed : kSeeds) {
    const PipelineConfig cfg = sbm_config(50000, seed, model);
    std::map<double, RunState> runs;
    for (double h : {1.0, 2.0, 4.0, 8.0}) runs.emplace(h, run_scaled_single(cfg, h));
    k1 += runs.at(1.0).K() == 1;
    k4 += runs.at(4.0).K() == 2;
    d2.push_back(runs.at(2.0).alignment->delta2_upper);
    d8.push_back(runs.at(8.0).alignment->delta2_upper);
    ks += " (" + std::to_string(runs.at(1.0).K()) + "," + std::to_string(runs.at(2.0).K()) + "," +
          std::to_string(runs.at(4.0).K()) + "," + std::to_string(runs.at(8.0).K()) + ")";
  }
  const double m2 = median(d2), m8 = median(d8);
  return {k1 >= 4 && k4 >= 4 && m8 <= m2,
          "K=1 at h=1 on " + std::to_string(k1) + "/5, K=2 at h=4 on " + std::to_string(k4) + "/5, median delta2 h=2 " +
              fmt("%.3f", m2) + " h=8 " + fmt("%.3f", m8) + "; K at h=1,2,4,8:" + ks};
}

// ---- 9: runtime scaling ----

Outcome complexity() {
  const auto timed = [](std::size_t n) {
    PipelineConfig cfg = sbm_config(n, 7, two_block(7, 1));
    cfg.N_override = 4;
    cfg.deterministic = true;
    const auto t0 = Clock::now();
    const RunState s = run_pipeline(cfg);
    const std::chrono::duration<double> dt = Clock::now() - t0;
    return std::make_pair(dt.count(), s.K());
  };
  const auto [small, k_small] = timed(25000);
  const auto [large, k_large] = timed(100000);
  const double ratio = large / small;
  return {ratio <= 6.0, "n=2.5e4 " + fmt("%.2f", small) + " s (K=" + std::to_string(k_small) + "), n=1e5 " +
                            fmt("%.2f", large) + " s (K=" + std::to_string(k_large) + "), ratio " + fmt("%.2f", ratio)};
}

// ---- 10: determinism ----

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "graphon_acceptance_determinism";
  fs::remove_all(root);
  std::vector<fs::path> dirs;
  for (unsigned threads : {1u, 1u, 4u}) {
    PipelineConfig cfg = sbm_config(20000, 99, two_block(7, 1));
    cfg.threads = threads;
    cfg.out_dir = root / ("run" + std::to_string(dirs.size()));
    run_pipeline(cfg);
    dirs.push_back(cfg.out_dir);
  }
  int files = 0, diffs = 0;
  std::string which;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    const std::string name = entry.path().filename().string();
    for (std::size_t r = 1; r < dirs.size(); ++r) {
      bool same = false;
      if (name == "manifest.json" || name == "metrics.json")
        same = strip_timing(read_json_file(dirs[0] / name)).dump() == strip_timing(read_json_file(dirs[r] / name)).dump();
      else
        same = slurp(dirs[0] / name) == slurp(dirs[r] / name);
      if (!same) {
        ++diffs;
        which += " " + name;
      }
    }
    ++files;
  }
  return {diffs == 0 && files >= 13, std::to_string(files) + " dumps x 2 reruns (one with 4 threads), " +
                                         std::to_string(diffs) + " differences" + which};
}

struct Criterion {
  int id;
  std::string name;
  double budget_sec;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "non-backtracking spectrum vs dense oracle", 60, nb_vs_dense},
      {2, "spectral separation on the two-block SBM", 300, spectral_separation},
      {3, "star counts vs exhaustive enumeration", 60, star_oracle},
      {4, "moment consistency", 300, moment_consistency},
      {5, "density-fit recovery", 60, density_fit},
      {6, "end-to-end consistency trend", 1200, end_to_end},
      {7, "diagnostics C", 300, diagnostics},
      {8, "scaled mode", 900, scaled_mode},
      {9, "runtime scaling", 900, complexity},
      {10, "determinism", 300, determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const std::chrono::duration<double> dt = Clock::now() - t0;
    const bool in_time = dt.count() < c.budget_sec;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s  [%d] %s: %s (%.1f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(),
                dt.count(), in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
