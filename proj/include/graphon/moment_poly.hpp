#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "graphon/star_counts.hpp"
#include "json.hpp"

namespace graphon {

/// Moments E[N^j], j = 0..N, of the density proportional to
/// exp(-1 / (delta^2 - x^2)) on (-delta, delta).
struct MollifierMoments {
  double delta = 0.0;
  std::vector<double> moments;
};

/// Moments at delta = 1 come from adaptive Gauss-Kronrod quadrature and are
/// scaled by delta^j. Throws Error when a nonzero moment underflows.
MollifierMoments mollifier_moments(double delta, unsigned N);

/// Applies a lower-triangular (N+1) x (N+1) matrix along every axis of a
/// tensor on MultiIndexGrid(K, N).
std::vector<double> apply_along_axes(const std::vector<double>& tensor, std::size_t K, unsigned N,
                                     const Eigen::MatrixXd& lower);

/// M_alpha = sum_{beta <= alpha} P_beta prod_i C(alpha_i, beta_i) E[N^{alpha_i - beta_i}].
std::vector<double> mollify_moments(const std::vector<double>& P, std::size_t K, unsigned N,
                                    const MollifierMoments& mm);
std::vector<double> mollify_moments(const MomentTable& table, const MollifierMoments& mm);

/// Orthonormal Legendre polynomials on [-1, 1] in monomial form, plus the
/// rescaled family on [-kappa, kappa]: scaled(i, j) = coeffs(i, j) / kappa^{j + 1/2}.
struct LegendreBasis {
  unsigned N = 0;
  double kappa = 1.0;
  Eigen::MatrixXd coeffs;
  Eigen::MatrixXd scaled_coeffs;
};

LegendreBasis legendre_basis(unsigned N, double kappa);

/// Values of the rescaled orthonormal polynomials 0..N at x, by recurrence.
void scaled_legendre_values(unsigned N, double kappa, double x, std::span<double> out);

struct DensityFit {
  std::size_t K = 0;
  unsigned N = 0;
  double kappa = 1.0;
  double delta = 0.0;
  /// Coefficients on MultiIndexGrid(K, N).
  std::vector<double> rho;
  double l1_norm_plus = 0.0;
  double max_bound = 0.0;
  std::size_t grid_resolution = 0;
  bool accuracy_warning = false;
};

/// rho_alpha = sum_{beta <= alpha} prod_i scaled(alpha_i, beta_i) M_beta, and
/// the sup bound sum |rho_alpha| prod_i sqrt((2 alpha_i + 1) / (2 kappa)).
/// The L1 norm is left at 0; see l1_norm_plus.
DensityFit fit_density(const std::vector<double>& M, const LegendreBasis& basis, std::size_t K,
                       double delta = 0.0);

/// h_N(x); 0 outside [-kappa, kappa]^K.
double eval_density(const DensityFit& fit, std::span<const double> x);
double eval_density_plus(const DensityFit& fit, std::span<const double> x);

/// Integral of max(h_N, 0) over each cell of a resolution^K tensor grid on
/// the box. Cells whose sample points disagree in sign are bisected.
struct PlusIntegral {
  std::size_t resolution = 0;
  std::vector<double> cell_mass;
  double total = 0.0;
};
PlusIntegral integrate_plus(const DensityFit& fit, std::size_t resolution);

/// ||h_N^+||_1 at `resolution` and twice that. Stores the finer value and
/// the resolution in the fit and sets accuracy_warning when the two differ
/// by 1e-4 relative or more. Throws UnusableFit when the norm is not positive.
double l1_norm_plus(DensityFit& fit, std::size_t resolution = 128);

void to_json(nlohmann::json& j, const DensityFit& fit);
DensityFit density_fit_from_json(const nlohmann::json& j);

}  // namespace graphon
