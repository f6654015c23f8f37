#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "graph.hpp"
#include "json.hpp"

namespace graphon {

/// Exponent vector alpha of length K.
using MultiIndex = std::vector<unsigned>;

unsigned order(const MultiIndex& alpha);

/// Nondecreasing leaf labels: label i appears alpha[i] times.
std::vector<unsigned> leaf_labels(const MultiIndex& alpha);

/// Dense grid {0..N}^K stored row-major, first coordinate slowest.
class MultiIndexGrid {
 public:
  MultiIndexGrid(std::size_t K, unsigned N);
  std::size_t size() const { return size_; }
  std::size_t dims() const { return K_; }
  unsigned cap() const { return N_; }
  std::size_t index(const MultiIndex& alpha) const;
  MultiIndex at(std::size_t idx) const;
  /// Offset between neighbors along coordinate i.
  std::size_t stride(std::size_t i) const { return strides_[i]; }

 private:
  std::size_t K_;
  unsigned N_;
  std::size_t size_ = 1;
  std::vector<std::size_t> strides_;
};

/// sum over ordered adjacent pairs of B(i) B(j), i.e. twice the edge sum.
double count_pair(const SparseGraph& g2, const Eigen::Ref<const Eigen::VectorXd>& b);

/// A_kk / (epsilon lambda_k).
double normalize_pair(double a_kk, double epsilon, double lambda_k);

/// Injective weighted star count: sum over centers w and ordered tuples of
/// pairwise distinct neighbors (i_1..i_|alpha|) of prod_l B_{I_l}(i_l).
/// Uses per-center power sums combined over set partitions of the leaves.
/// `aggregates` has one column per k.
double count_star(const SparseGraph& g2, const MultiIndex& alpha,
                  const Eigen::MatrixXd& aggregates);

/// A_alpha n^{|alpha|/2 - 1} / (epsilon^{|alpha|} prod_i (sqrt(P_ii) lambda_i)^{alpha_i}).
/// Caller checks validity (all P_ii > 0) first.
double normalize_star(double a_alpha, const MultiIndex& alpha, std::size_t n, double epsilon,
                      const std::vector<double>& lambdas, const std::vector<double>& p_diag);

struct MomentTable {
  std::size_t K = 0;
  unsigned N = 0;
  std::size_t n = 0;
  double epsilon = 0.0;
  std::vector<double> lambdas;
  std::vector<double> pair_diagonal;
  /// P_alpha over MultiIndexGrid(K, N).
  std::vector<double> entries;
  bool valid = false;

  double at(const MultiIndex& alpha) const;
};

struct MomentTableOptions {
  /// Upper bound on (N + 1)^K.
  std::size_t max_entries = 1u << 20;
  std::size_t chunk_size = 4096;
};

/// All P_alpha for 0 <= alpha <= (N..N) in one pass over centers. Per center
/// the injective sums for every alpha come from the truncated product
/// prod_{j ~ w} (1 + sum_i t_i B_i(j)): A_alpha(w) = alpha! [t^alpha].
/// Throws MemoryGuard when the grid exceeds options.max_entries.
MomentTable moment_table(const SparseGraph& g2, const Eigen::MatrixXd& aggregates,
                         const std::vector<double>& lambdas, double epsilon, unsigned N,
                         const MomentTableOptions& options = {});

void to_json(nlohmann::json& j, const MomentTable& t);
MomentTable moment_table_from_json(const nlohmann::json& j);

}  // namespace graphon
