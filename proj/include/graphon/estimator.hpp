#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "graphon/moment_poly.hpp"
#include "json.hpp"

namespace graphon {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Step-function estimate Q(x, y) = sum_i lambda_i Z(p(x), i) Z(p(y), i) with
/// m pieces; p(x) = ceil(x m) counted from 1, and x = 0 falls in piece 1.
struct GraphonEstimate {
  static constexpr int kVersion = 1;

  std::vector<double> lambdas;
  std::size_t m = 0;
  double kappa = 0.0;
  RowMatrix Z;
  std::uint64_t seed = 0;
  std::string config_hash;
  /// Constant fallback used when no informative eigenvalue survived.
  bool degenerate = false;

  std::size_t K() const { return lambdas.size(); }
  /// Zero-based piece index of x.
  std::size_t piece(double x) const;
  double operator()(double x, double y) const;
};

struct SampleReport {
  bool used_grid = false;
  /// Expected acceptance of the uniform-proposal rejection sampler.
  double acceptance_rate = 0.0;
};

/// m i.i.d. draws from h_N^+ / ||h_N^+||_1. Rejection sampling with a
/// uniform proposal on the box and envelope fit.max_bound; when the expected
/// acceptance is below 1e-3, inverse-CDF sampling over grid cell masses
/// instead (uniform within the chosen cell). Sample i draws from its own
/// stream, so the output does not depend on the thread count.
RowMatrix sample_density(const DensityFit& fit, std::size_t m, std::uint64_t seed,
                         SampleReport* report = nullptr);

/// Grid-CDF sampler on its own, at the given resolution.
RowMatrix sample_density_grid(const DensityFit& fit, std::size_t m, std::uint64_t seed,
                              std::size_t resolution);

GraphonEstimate assemble(RowMatrix Z, std::vector<double> lambdas);

/// Q = value everywhere, stored as K = 1, m = 1, Z = 1.
GraphonEstimate constant_estimate(double value);

/// Fraction of the g x g midpoint grid where the estimate is negative.
double fraction_negative(const GraphonEstimate& est, std::size_t g);

nlohmann::json estimate_to_json(const GraphonEstimate& est);
GraphonEstimate estimate_from_json(const nlohmann::json& j);
void write_estimate(const GraphonEstimate& est, const std::filesystem::path& path);
GraphonEstimate read_estimate(const std::filesystem::path& path);

/// CSV of the estimate on a g x g midpoint grid, one row per x.
void write_estimate_grid_csv(const GraphonEstimate& est, std::size_t g,
                             const std::filesystem::path& path);

}  // namespace graphon
