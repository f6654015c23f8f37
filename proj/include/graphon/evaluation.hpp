#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "graphon/estimator.hpp"
#include "graphon/graph.hpp"
#include "graphon/graphon_model.hpp"

namespace graphon {

using Kernel = std::function<double(double, double)>;

struct GridDistance {
  double value = 0.0;
  /// Same quantity on the 2g grid.
  double refined = 0.0;
  std::size_t grid = 0;
  bool resolution_warning = false;
};

/// Midpoint-rule L2 norm of a - b on a g x g grid of [0,1]^2. Warns when the
/// 2g grid moves the value by 1e-3 relative or more.
GridDistance l2_distance_grid(const Kernel& a, const Kernel& b, std::size_t g);

enum class AlignmentMethod { CanonicalSort, ExactPermutation };
std::string to_string(AlignmentMethod method);

struct AlignmentReport {
  double delta2_upper = 0.0;
  std::vector<int> sign_pattern;
  /// Feature priority used by the best lexicographic sort.
  std::vector<std::size_t> key_order;
  AlignmentMethod method = AlignmentMethod::CanonicalSort;
  std::size_t grid = 0;
};

/// Upper bound on delta_2(estimate, truth). Both sides are rearranged by
/// sorting their pieces lexicographically on the feature vectors (estimate:
/// rows of Z, each of measure 1/m; truth: f_1..f_K at the g cell midpoints),
/// ties by index, and compared on the g x g grid. The minimum is taken over
/// all 2^K sign flips of the estimated features and, for K <= 4, every
/// priority order of the sort keys. The truth kernel uses all its eigenpairs.
AlignmentReport delta2_upper(const GraphonEstimate& estimate, const SpectralGraphon& truth,
                             std::size_t g);

/// Exact minimum over cell permutations pi of ||a - b o (pi x pi)||_2 for
/// kernels on p equal cells, p <= 9.
double delta2_exact_cells(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Kernel values at the midpoints of g equal cells.
Eigen::MatrixXd cell_kernel(const Kernel& k, std::size_t g);

struct Diagnostics {
  /// C(i, j) = n^{-1/2} sum_v B_i(v) f_j(X_v), K x L.
  Eigen::MatrixXd C;
  /// sum_l mu_l C(i, l)^2 per i.
  std::vector<double> contraction;
  /// mu_i C(i, i)^2 per i (0 when i >= L).
  std::vector<double> diagonal;
};

/// Throws DiagnosticsUnavailable when the latents are missing or do not
/// cover every vertex.
Diagnostics diagnostics_C(const Eigen::MatrixXd& aggregates, const LatentAssignment& latents,
                          const SpectralGraphon& truth);

}  // namespace graphon
