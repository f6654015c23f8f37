#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "graphon/error.hpp"

namespace graphon {

/// Real square operator applied matrix-free.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual std::size_t size() const = 0;
  virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
};

/// Ritz values sorted by decreasing magnitude (ties: larger real part, then
/// larger imaginary part first). Returns how many leading values are wanted.
using WantedCount = std::function<std::size_t(std::span<const std::complex<double>>)>;

struct KrylovOptions {
  std::size_t krylov_dim = 30;
  /// Floor on the wanted count.
  std::size_t min_wanted = 1;
  /// Relative residual tolerance for wanted Ritz pairs.
  double tol = 1e-10;
  /// Number of Ritz values past the wanted ones that must also settle, to a
  /// looser tolerance, before the wanted set is trusted.
  std::size_t guard = 1;
  double guard_tol = 1e-4;
  std::size_t max_restarts = 2000;
  std::uint64_t seed = 0;
  WantedCount wanted;
};

struct KrylovResult {
  /// Wanted eigenvalue estimates, sorted by decreasing magnitude.
  std::vector<std::complex<double>> values;
  /// Columns: unit-norm real parts of the corresponding Ritz vectors. For
  /// real eigenvalues these are the eigenvectors.
  Eigen::MatrixXd vectors;
  std::vector<double> residual_estimates;
  /// Every Ritz value of the final projected matrix, sorted.
  std::vector<std::complex<double>> ritz_values;
  std::size_t restarts = 0;
  std::size_t matvecs = 0;
  bool converged = false;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, KrylovResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const KrylovResult& partial() const noexcept { return partial_; }

 private:
  KrylovResult partial_;
};

/// Krylov-Schur restarted Arnoldi for the largest-magnitude eigenvalues of a
/// real nonsymmetric operator. Complex conjugate pairs are kept together in
/// real Schur form. Deterministic given options.seed. Throws
/// ConvergenceError after max_restarts.
KrylovResult krylov_schur(const LinearOperator& op, const KrylovOptions& opt);

/// Sorting rule used for Ritz values and dense spectra alike.
void sort_by_magnitude(std::vector<std::complex<double>>& values);

}  // namespace graphon
