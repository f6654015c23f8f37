#include "graphon/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "graphon/error.hpp"

namespace graphon {

namespace {

double grid_l2(const Kernel& a, const Kernel& b, std::size_t g) {
  double sum = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    const double x = (i + 0.5) / static_cast<double>(g);
    double row = 0.0;
    for (std::size_t j = 0; j < g; ++j) {
      const double y = (j + 0.5) / static_cast<double>(g);
      const double d = a(x, y) - b(x, y);
      row += d * d;
    }
    sum += row;
  }
  return std::sqrt(sum) / static_cast<double>(g);
}

}  // namespace

GridDistance l2_distance_grid(const Kernel& a, const Kernel& b, std::size_t g) {
  if (g == 0) throw InvalidArgument("grid size must be positive");
  GridDistance out;
  out.grid = g;
  out.value = grid_l2(a, b, g);
  out.refined = grid_l2(a, b, 2 * g);
  out.resolution_warning =
      std::abs(out.refined - out.value) >= 1e-3 * std::max(out.refined, 1e-12);
  return out;
}

std::string to_string(AlignmentMethod method) {
  return method == AlignmentMethod::CanonicalSort ? "canonical-sort" : "exact-permutation";
}

Eigen::MatrixXd cell_kernel(const Kernel& k, std::size_t g) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(g));
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = 0; j < g; ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          k((i + 0.5) / static_cast<double>(g), (j + 0.5) / static_cast<double>(g));
  return out;
}

namespace {

// Indices 0..rows-1 sorted lexicographically on the signed features in the
// given priority order, ties by index.
std::vector<std::size_t> canonical_order(const RowMatrix& features, const std::vector<int>& signs,
                                         const std::vector<std::size_t>& priority) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(features.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    for (std::size_t k : priority) {
      const auto kk = static_cast<Eigen::Index>(k);
      const double fa = signs[k] * features(static_cast<Eigen::Index>(a), kk);
      const double fb = signs[k] * features(static_cast<Eigen::Index>(b), kk);
      if (fa != fb) return fa < fb;
    }
    return a < b;
  });
  return idx;
}

}  // namespace

AlignmentReport delta2_upper(const GraphonEstimate& estimate, const SpectralGraphon& truth,
                             std::size_t g) {
  const std::size_t K = estimate.K();
  if (K == 0 || estimate.m == 0) throw InvalidArgument("estimate is empty");
  if (truth.rank() < K)
    throw InvalidArgument("estimate has K = " + std::to_string(K) + " but truth only " +
                          std::to_string(truth.rank()) + " eigenpairs");
  if (g == 0) throw InvalidArgument("grid size must be positive");

  RowMatrix truth_features(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(K));
  for (std::size_t c = 0; c < g; ++c)
    for (std::size_t k = 0; k < K; ++k)
      truth_features(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) =
          truth.eigenfunctions[k]((c + 0.5) / static_cast<double>(g));
  const Eigen::MatrixXd truth_grid = cell_kernel([&](double x, double y) { return truth(x, y); }, g);

  // Row of the estimate sampled by each grid cell after rearrangement.
  std::vector<std::size_t> quantile(g);
  for (std::size_t c = 0; c < g; ++c)
    quantile[c] = std::min(estimate.m - 1,
                           static_cast<std::size_t>((c + 0.5) / static_cast<double>(g) *
                                                    static_cast<double>(estimate.m)));

  std::vector<std::vector<std::size_t>> priorities;
  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), 0);
  if (K <= 4) {
    do priorities.push_back(order);
    while (std::next_permutation(order.begin(), order.end()));
  } else {
    priorities.push_back(order);
  }

  AlignmentReport best;
  best.delta2_upper = std::numeric_limits<double>::infinity();
  best.grid = g;
  best.method = AlignmentMethod::CanonicalSort;
  Eigen::MatrixXd est_rows(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(K));
  for (std::size_t mask = 0; mask < (std::size_t{1} << K); ++mask) {
    std::vector<int> signs(K);
    for (std::size_t k = 0; k < K; ++k) signs[k] = (mask >> k) & 1U ? -1 : 1;
    for (const auto& priority : priorities) {
      const auto est_order = canonical_order(estimate.Z, signs, priority);
      const auto truth_order = canonical_order(truth_features, std::vector<int>(K, 1), priority);
      for (std::size_t c = 0; c < g; ++c)
        est_rows.row(static_cast<Eigen::Index>(c)) =
            estimate.Z.row(static_cast<Eigen::Index>(est_order[quantile[c]]));
      double sum = 0.0;
      for (std::size_t a = 0; a < g; ++a)
        for (std::size_t b = 0; b < g; ++b) {
          double qhat = 0.0;
          for (std::size_t k = 0; k < K; ++k)
            qhat += estimate.lambdas[k] * est_rows(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)) *
                    est_rows(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k));
          const double d = qhat - truth_grid(static_cast<Eigen::Index>(truth_order[a]),
                                             static_cast<Eigen::Index>(truth_order[b]));
          sum += d * d;
        }
      const double dist = std::sqrt(sum) / static_cast<double>(g);
      if (dist < best.delta2_upper) {
        best.delta2_upper = dist;
        best.sign_pattern = signs;
        best.key_order = priority;
      }
    }
  }
  return best;
}

double delta2_exact_cells(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const auto p = a.rows();
  if (a.cols() != p || b.rows() != p || b.cols() != p)
    throw InvalidArgument("exact alignment needs two p x p kernels of the same size");
  if (p > 9)
    throw InvalidArgument("exact alignment enumerates p! permutations; use delta2_upper for p > 9");
  std::vector<Eigen::Index> pi(static_cast<std::size_t>(p));
  std::iota(pi.begin(), pi.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) {
        const double d = a(i, j) - b(pi[static_cast<std::size_t>(i)], pi[static_cast<std::size_t>(j)]);
        sum += d * d;
      }
    best = std::min(best, sum);
  } while (std::next_permutation(pi.begin(), pi.end()));
  return std::sqrt(best) / static_cast<double>(p);
}

Diagnostics diagnostics_C(const Eigen::MatrixXd& aggregates, const LatentAssignment& latents,
                          const SpectralGraphon& truth) {
  const auto n = aggregates.rows();
  if (latents.latents.empty())
    throw DiagnosticsUnavailable("diagnostics need the simulated latents");
  if (static_cast<Eigen::Index>(latents.latents.size()) != n)
    throw DiagnosticsUnavailable("latents cover " + std::to_string(latents.latents.size()) +
                                 " vertices, aggregates " + std::to_string(n));
  const auto K = aggregates.cols();
  const auto L = static_cast<Eigen::Index>(truth.rank());
  Eigen::MatrixXd F(n, L);
  for (Eigen::Index v = 0; v < n; ++v)
    for (Eigen::Index j = 0; j < L; ++j)
      F(v, j) = truth.eigenfunctions[static_cast<std::size_t>(j)](latents.latents[static_cast<std::size_t>(v)]);
  Diagnostics d;
  d.C = aggregates.transpose() * F / std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < K; ++i) {
    double sum = 0.0;
    for (Eigen::Index l = 0; l < L; ++l) sum += truth.eigenvalues[static_cast<std::size_t>(l)] * d.C(i, l) * d.C(i, l);
    d.contraction.push_back(sum);
    d.diagonal.push_back(i < L ? truth.eigenvalues[static_cast<std::size_t>(i)] * d.C(i, i) * d.C(i, i) : 0.0);
  }
  return d;
}

}  // namespace graphon
