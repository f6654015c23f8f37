#include "graphon/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <fstream>
#include <iomanip>

#include "graphon/error.hpp"
#include "graphon/json_io.hpp"
#include "graphon/parallel.hpp"
#include "graphon/rng.hpp"

namespace graphon {

using nlohmann::json;

std::size_t GraphonEstimate::piece(double x) const {
  if (!(x > 0.0)) return 0;
  const double c = std::ceil(x * static_cast<double>(m));
  return std::min(static_cast<std::size_t>(c), m) - 1;
}

double GraphonEstimate::operator()(double x, double y) const {
  const auto px = static_cast<Eigen::Index>(piece(x));
  const auto py = static_cast<Eigen::Index>(piece(y));
  double sum = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    sum += lambdas[i] * (Z(px, k) * Z(py, k));
  }
  return sum;
}

namespace {

constexpr std::size_t kSampleChunk = 1024;
constexpr std::size_t kMaxProposals = 100'000'000;

}  // namespace

RowMatrix sample_density_grid(const DensityFit& fit, std::size_t m, std::uint64_t seed,
                              std::size_t resolution) {
  const PlusIntegral grid = integrate_plus(fit, resolution);
  if (!(grid.total > 0.0)) throw UnusableFit("fitted density has no positive mass on the grid");
  std::vector<double> cdf(grid.cell_mass.size());
  std::partial_sum(grid.cell_mass.begin(), grid.cell_mass.end(), cdf.begin());
  const double h = 2.0 * fit.kappa / static_cast<double>(resolution);
  RowMatrix Z(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(fit.K));
  for_each_chunk(m, kSampleChunk, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t s = begin; s < end; ++s) {
      Engine rng = make_engine(seed, "sample-grid", s);
      const double u = uniform01(rng) * cdf.back();
      auto cell = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      cell = std::min(cell, cdf.size() - 1);
      for (std::size_t i = fit.K; i-- > 0;) {
        const double lo = -fit.kappa + h * static_cast<double>(cell % resolution);
        cell /= resolution;
        Z(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) = lo + h * uniform01(rng);
      }
    }
  });
  return Z;
}

RowMatrix sample_density(const DensityFit& fit, std::size_t m, std::uint64_t seed,
                         SampleReport* report) {
  if (!(fit.l1_norm_plus > 0.0)) throw UnusableFit("fitted density has no positive mass");
  const double volume = std::pow(2.0 * fit.kappa, static_cast<double>(fit.K));
  const double acceptance = fit.l1_norm_plus / (volume * fit.max_bound);
  if (report) {
    report->acceptance_rate = acceptance;
    report->used_grid = acceptance < 1e-3;
  }
  if (acceptance < 1e-3)
    return sample_density_grid(fit, m, seed, fit.grid_resolution ? fit.grid_resolution : 128);

  RowMatrix Z(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(fit.K));
  const double envelope = fit.max_bound;
  for_each_chunk(m, kSampleChunk, [&](std::size_t begin, std::size_t end, std::size_t) {
    std::vector<double> x(fit.K);
    for (std::size_t s = begin; s < end; ++s) {
      Engine rng = make_engine(seed, "sample", s);
      for (std::size_t tries = 0;; ++tries) {
        if (tries == kMaxProposals) throw UnusableFit("rejection sampler made no progress");
        for (auto& xi : x) xi = fit.kappa * (2.0 * uniform01(rng) - 1.0);
        const double v = eval_density(fit, x);
        if (v > envelope * (1.0 + 1e-9))
          throw UnusableFit("density value " + std::to_string(v) + " exceeds its envelope " +
                            std::to_string(envelope));
        if (uniform01(rng) * envelope < v) break;
      }
      for (std::size_t i = 0; i < fit.K; ++i)
        Z(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) = x[i];
    }
  });
  return Z;
}

GraphonEstimate assemble(RowMatrix Z, std::vector<double> lambdas) {
  if (Z.rows() < 1) throw InvalidArgument("an estimate needs at least one piece");
  if (static_cast<std::size_t>(Z.cols()) != lambdas.size())
    throw InvalidArgument("Z has " + std::to_string(Z.cols()) + " columns for " +
                          std::to_string(lambdas.size()) + " eigenvalues");
  GraphonEstimate est;
  est.m = static_cast<std::size_t>(Z.rows());
  est.Z = std::move(Z);
  est.lambdas = std::move(lambdas);
  return est;
}

GraphonEstimate constant_estimate(double value) {
  GraphonEstimate est = assemble(RowMatrix::Ones(1, 1), {value});
  est.degenerate = true;
  return est;
}

double fraction_negative(const GraphonEstimate& est, std::size_t g) {
  std::size_t negative = 0;
  for (std::size_t a = 0; a < g; ++a)
    for (std::size_t b = 0; b < g; ++b) {
      const double x = (a + 0.5) / static_cast<double>(g);
      const double y = (b + 0.5) / static_cast<double>(g);
      if (est(x, y) < 0.0) ++negative;
    }
  return static_cast<double>(negative) / static_cast<double>(g * g);
}

json estimate_to_json(const GraphonEstimate& est) {
  std::vector<double> z(est.Z.data(), est.Z.data() + est.Z.size());
  return json{{"version", GraphonEstimate::kVersion},
              {"K", est.K()},
              {"m", est.m},
              {"kappa", est.kappa},
              {"lambdas", est.lambdas},
              {"Z", z},
              {"seed", est.seed},
              {"config_hash", est.config_hash},
              {"degenerate", est.degenerate}};
}

GraphonEstimate estimate_from_json(const json& j) {
  if (!j.contains("version")) throw ParseError("estimate", "missing version field");
  if (!j.at("version").is_number_integer() || j.at("version").get<int>() != GraphonEstimate::kVersion)
    throw UnsupportedVersion("estimate file version " + j.at("version").dump() +
                             " is not supported (expected " +
                             std::to_string(GraphonEstimate::kVersion) + ")");
  GraphonEstimate est;
  std::vector<double> z;
  std::size_t K = 0;
  try {
    K = j.at("K").get<std::size_t>();
    est.m = j.at("m").get<std::size_t>();
    est.kappa = j.at("kappa").get<double>();
    est.lambdas = j.at("lambdas").get<std::vector<double>>();
    z = j.at("Z").get<std::vector<double>>();
    est.seed = j.value("seed", std::uint64_t{0});
    est.config_hash = j.value("config_hash", std::string{});
    est.degenerate = j.value("degenerate", false);
  } catch (const json::exception& e) {
    throw ParseError("estimate", e.what());
  }
  if (est.lambdas.size() != K) throw ParseError("estimate.lambdas", "expected K entries");
  if (est.m < 1) throw ParseError("estimate.m", "must be at least 1");
  if (z.size() != est.m * K)
    throw ParseError("estimate.Z", "holds " + std::to_string(z.size()) + " values but m * K = " +
                                       std::to_string(est.m * K));
  est.Z = Eigen::Map<const RowMatrix>(z.data(), static_cast<Eigen::Index>(est.m),
                                      static_cast<Eigen::Index>(K));
  return est;
}

void write_estimate(const GraphonEstimate& est, const std::filesystem::path& path) {
  write_json_file(estimate_to_json(est), path);
}

GraphonEstimate read_estimate(const std::filesystem::path& path) {
  try {
    return estimate_from_json(read_json_file(path));
  } catch (const ParseError& e) {
    if (e.where().rfind(path.string(), 0) == 0) throw;
    throw ParseError(path.string() + ": " + e.where(), e.detail());
  }
}

void write_estimate_grid_csv(const GraphonEstimate& est, std::size_t g,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17);
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t b = 0; b < g; ++b) {
      if (b) out << ',';
      out << est((a + 0.5) / static_cast<double>(g), (b + 0.5) / static_cast<double>(g));
    }
    out << '\n';
  }
}

}  // namespace graphon
