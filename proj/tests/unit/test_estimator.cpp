#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "graphon/error.hpp"
#include "graphon/estimator.hpp"
#include "graphon/json_io.hpp"

using namespace graphon;
namespace fs = std::filesystem;

namespace {

DensityFit flat_fit(std::size_t K, double kappa) {
  const MultiIndexGrid grid(K, 2);
  std::vector<double> M(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double m = 1.0;
    for (unsigned a : grid.at(i)) m *= a % 2 ? 0.0 : std::pow(kappa, a) / (a + 1.0);
    M[i] = m;
  }
  DensityFit fit = fit_density(M, legendre_basis(2, kappa), K);
  l1_norm_plus(fit, 64);
  return fit;
}

// Mollified atom at c, K = 1.
DensityFit atom_fit(double c, double delta, unsigned N, double kappa) {
  std::vector<double> P(N + 1);
  for (unsigned j = 0; j <= N; ++j) P[j] = std::pow(c, j);
  DensityFit fit = fit_density(mollify_moments(P, 1, N, mollifier_moments(delta, N)), legendre_basis(N, kappa), 1, delta);
  l1_norm_plus(fit, 128);
  return fit;
}

// Kolmogorov-Smirnov statistic against U[-k, k].
double ks_uniform(std::vector<double> x, double k) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = (x[i] + k) / (2 * k);
    d = std::max({d, (i + 1) / n - F, F - i / n});
  }
  return d;
}

fs::path temp_dir() {
  const fs::path d = fs::temp_directory_path() / "graphon_unit_estimator";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("piece convention") {
  GraphonEstimate e = assemble(RowMatrix::Ones(4, 1), {1.0});
  CHECK(e.piece(0.0) == 0);
  CHECK(e.piece(0.25) == 0);
  CHECK(e.piece(0.2500001) == 1);
  CHECK(e.piece(1.0) == 3);
}

TEST_CASE("constant feature rows") {
  const GraphonEstimate e = assemble(RowMatrix::Constant(10, 1, 1.5), {4.0});
  CHECK(e(0.1, 0.9) == doctest::Approx(9.0));
  CHECK(e(0.5, 0.5) == doctest::Approx(9.0));
}

TEST_CASE("estimate is symmetric and matches its formula") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RowMatrix Z = RowMatrix::Random(37, 3);
  const GraphonEstimate e = assemble(Z, {4.0, -2.0, 1.5});
  for (int r = 0; r < 1000; ++r) {
    const double x = u(rng), y = u(rng);
    CHECK(e(x, y) - e(y, x) == 0.0);
    const auto px = static_cast<Eigen::Index>(std::max(1.0, std::ceil(x * 37)) - 1);
    const auto py = static_cast<Eigen::Index>(std::max(1.0, std::ceil(y * 37)) - 1);
    const double direct = 4.0 * Z(px, 0) * Z(py, 0) - 2.0 * Z(px, 1) * Z(py, 1) + 1.5 * Z(px, 2) * Z(py, 2);
    CHECK(std::abs(e(x, y) - direct) <= 1e-15 * std::max(1.0, std::abs(direct)) * 4);
  }
}

TEST_CASE("flat fit samples are uniform") {
  const double kappa = 2.0;
  const DensityFit fit = flat_fit(2, kappa);
  const std::size_t m = 2000;
  // 1% critical value of the one-sample KS statistic.
  const double crit = 1.628 / std::sqrt(static_cast<double>(m));
  int pass = 0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    const RowMatrix Z = sample_density(fit, m, static_cast<std::uint64_t>(s));
    bool ok = true;
    for (Eigen::Index k = 0; k < 2; ++k) {
      std::vector<double> col;
      for (Eigen::Index i = 0; i < Z.rows(); ++i) col.push_back(Z(i, k));
      ok = ok && ks_uniform(col, kappa) < crit;
    }
    pass += ok;
  }
  // Two axes at 1% each: expect about 98 of 100.
  CHECK(pass >= 95);
}

TEST_CASE("narrow atom samples centre on the atom") {
  const double c = 0.6;
  const DensityFit fit = atom_fit(c, 0.5, 24, 1.5);
  SampleReport rep;
  const RowMatrix Z = sample_density(fit, 20000, 3, &rep);
  CHECK_FALSE(rep.used_grid);
  const double mean = Z.mean();
  const double var = (Z.array() - mean).square().sum() / static_cast<double>(Z.rows() - 1);
  CHECK(std::abs(mean - c) <= 3.0 * std::sqrt(var / static_cast<double>(Z.rows())));
}

TEST_CASE("rejection and grid sampling agree on coarse histograms") {
  const DensityFit fit = atom_fit(0.4, 0.5, 10, 1.5);
  const std::size_t m = 40000;
  const RowMatrix a = sample_density(fit, m, 11);
  const RowMatrix b = sample_density_grid(fit, m, 12, 128);
  const int bins = 12;
  std::vector<double> ha(bins, 0.0), hb(bins, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto bin = [&](double x) { return std::clamp(static_cast<int>((x + 1.5) / 3.0 * bins), 0, bins - 1); };
    ha[bin(a(static_cast<Eigen::Index>(i), 0))] += 1;
    hb[bin(b(static_cast<Eigen::Index>(i), 0))] += 1;
  }
  // Two-sample chi-square with equal sizes.
  double chi2 = 0.0;
  int dof = -1;
  for (int i = 0; i < bins; ++i)
    if (ha[i] + hb[i] > 0) {
      chi2 += std::pow(ha[i] - hb[i], 2) / (ha[i] + hb[i]);
      ++dof;
    }
  // 1% critical value of chi-square with 11 degrees of freedom is 24.7.
  CHECK(dof <= 11);
  CHECK(chi2 < 24.7);
}

TEST_CASE("sampling is reproducible and empty requests are fine") {
  const DensityFit fit = flat_fit(1, 1.0);
  CHECK(sample_density(fit, 500, 9) == sample_density(fit, 500, 9));
  CHECK(sample_density(fit, 500, 9) != sample_density(fit, 500, 10));
  CHECK(sample_density(fit, 0, 9).rows() == 0);
}

TEST_CASE("envelope violations are reported") {
  DensityFit fit = flat_fit(1, 1.0);
  fit.max_bound *= 0.5;
  CHECK_THROWS_AS(sample_density(fit, 100, 1), UnusableFit);
}

TEST_CASE("estimate files") {
  GraphonEstimate e = assemble(RowMatrix::Random(20, 2), {3.0, -1.0});
  e.kappa = 2.5;
  e.seed = 77;
  e.config_hash = "abc";
  const fs::path d = temp_dir();
  write_estimate(e, d / "e.json");
  const GraphonEstimate back = read_estimate(d / "e.json");
  CHECK(back.Z == e.Z);
  CHECK(back.lambdas == e.lambdas);
  CHECK(back.seed == 77);
  CHECK(back.config_hash == "abc");

  nlohmann::json j = estimate_to_json(e);
  j["m"] = 21;
  write_json_file(j, d / "bad_m.json");
  CHECK_THROWS_AS(read_estimate(d / "bad_m.json"), ParseError);
  j = estimate_to_json(e);
  j["version"] = 99;
  CHECK_THROWS_AS(estimate_from_json(j), UnsupportedVersion);

  const GraphonEstimate c = constant_estimate(4.2);
  CHECK(c.degenerate);
  CHECK(c(0.3, 0.9) == doctest::Approx(4.2));
}

TEST_CASE("fraction of negative cells") {
  RowMatrix Z(2, 1);
  Z << 1.0, -1.0;
  CHECK(fraction_negative(assemble(Z, {1.0}), 4) == doctest::Approx(0.5));
  CHECK(fraction_negative(constant_estimate(1.0), 4) == 0.0);
}
