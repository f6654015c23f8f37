#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "graphon/graph.hpp"
#include "graphon/krylov.hpp"

namespace graphon {

/// Oriented edges of a simple graph. Undirected edge i (u < v) yields
/// 2i = (u -> v) and 2i + 1 = (v -> u), so the reversal is e ^ 1.
class OrientedEdgeSpace {
 public:
  explicit OrientedEdgeSpace(const SparseGraph& g);

  std::size_t size() const { return tail_.size(); }
  std::size_t num_vertices() const { return out_offsets_.size() - 1; }
  Vertex tail(std::size_t e) const { return tail_[e]; }
  Vertex head(std::size_t e) const { return head_[e]; }
  static std::size_t inverse(std::size_t e) { return e ^ 1U; }
  /// Oriented edges leaving v. Their reversals are the edges entering v.
  std::span<const std::size_t> out_edges(Vertex v) const {
    return {out_.data() + out_offsets_[v], out_.data() + out_offsets_[v + 1]};
  }

 private:
  std::vector<Vertex> tail_;
  std::vector<Vertex> head_;
  std::vector<std::size_t> out_offsets_;
  std::vector<std::size_t> out_;
};

/// B_{ef} = 1(e_2 = f_1) 1(f != e^{-1}), applied without forming B:
/// (Bx)(e) = s(e_2) - x(e^{-1}) with s(v) the sum of x over edges leaving v.
class NonBacktrackingOperator : public LinearOperator {
 public:
  explicit NonBacktrackingOperator(const OrientedEdgeSpace& space) : space_(space) {}
  std::size_t size() const override { return space_.size(); }
  void apply(std::span<const double> x, std::span<double> y) const override;

 private:
  const OrientedEdgeSpace& space_;
  mutable std::vector<double> out_sum_;
};

/// Companion operator [[A, I - D], [I, 0]] on R^{2n}. Its eigenvalues other
/// than +-1 are those of B.
class IharaBassOperator : public LinearOperator {
 public:
  explicit IharaBassOperator(const SparseGraph& g) : graph_(g) {}
  std::size_t size() const override { return 2 * graph_.num_vertices(); }
  void apply(std::span<const double> x, std::span<double> y) const override;

 private:
  const SparseGraph& graph_;
};

/// Explicit sparse B, for cross-checks on small graphs.
Eigen::SparseMatrix<double> nonbacktracking_matrix(const OrientedEdgeSpace& space);
/// Explicit companion matrix, for cross-checks on small graphs.
Eigen::MatrixXd ihara_bass_matrix(const SparseGraph& g);

/// Lifts a companion eigenvector's leading block y (length n) to the
/// corresponding eigenvector of B: xi(u -> v) = (lambda y(v) - y(u)) / (lambda^2 - 1).
Eigen::VectorXd lift_companion_vector(const OrientedEdgeSpace& space,
                                      const Eigen::VectorXd& y, double lambda);

/// Slack e_1(n) = 1 / sqrt(log n).
double default_e1(std::size_t n);

/// An eigenvalue counts as real when |Im| <= max(1e-8, 1e-3 |lambda|).
bool is_real_eigenvalue(std::complex<double> lambda);

/// Number of real eigenvalues among the leading run with
/// |lambda| > sqrt(lambda_1) + e1, capped at k_cap. `sorted` is ordered by
/// decreasing magnitude.
std::size_t count_informative(std::span<const std::complex<double>> sorted, double e1,
                              std::size_t k_cap);

struct SpectrumOptions {
  std::optional<double> e1_override;
  double tol = 1e-10;
  std::size_t max_restarts = 3000;
  std::uint64_t seed = 0;
  std::size_t k_cap = 8;
  /// Extra Ritz values that must settle past the wanted ones. The wanted
  /// count already tracks every Ritz value above the cutoff, so 0 suffices
  /// in practice and is several times faster on large graphs.
  std::size_t guard = 0;
  /// Solve on the 2n-dimensional companion operator and lift the vectors.
  bool use_ihara_bass = false;
};

struct NbSpectrum {
  std::size_t K = 0;
  /// Real parts of the accepted eigenvalues, decreasing in magnitude.
  std::vector<double> lambdas;
  /// Unit-norm eigenvectors over oriented edges, one column per k.
  Eigen::MatrixXd eigenvectors;
  /// B_k(v), one column per k.
  Eigen::MatrixXd vertex_aggregates;
  double e1 = 0.0;
  double cutoff = 0.0;
  /// ||B xi_k - lambda_k xi_k||_2, recomputed explicitly.
  std::vector<double> residuals;
  /// Every eigenvalue estimate the solver converged, for dumps.
  std::vector<std::complex<double>> computed_values;
  bool near_multiplicity = false;
  std::size_t matvecs = 0;
  std::size_t restarts = 0;
};

/// Leading eigenpairs of B and the informative count K. Throws
/// DegenerateSpectrum when lambda_1 <= 0 and ConvergenceError when the
/// solver stalls.
NbSpectrum top_spectrum(const OrientedEdgeSpace& space, const SparseGraph& g,
                        const SpectrumOptions& opt);

/// B_k(v) = sum of xi_k(e) over oriented edges with head v.
Eigen::MatrixXd vertex_aggregates(const Eigen::MatrixXd& eigenvectors,
                                  const OrientedEdgeSpace& space);

/// Little-endian float64, n x K row-major.
void write_aggregates(const Eigen::MatrixXd& aggregates, const std::filesystem::path& path);
Eigen::MatrixXd read_aggregates(const std::filesystem::path& path, std::size_t n, std::size_t K);

}  // namespace graphon
