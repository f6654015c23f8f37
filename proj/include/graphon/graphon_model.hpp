#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

namespace graphon {

/// Real-valued step function on [0,1]. Piece i covers
/// [breakpoints[i], breakpoints[i+1]); the last piece is closed at 1.
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> breakpoints, std::vector<double> values);

  double operator()(double x) const;
  std::size_t piece(double x) const;

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> breakpoints_{0.0, 1.0};
  std::vector<double> values_{0.0};
};

/// L2[0,1] inner product of two step functions (exact).
double inner_product(const StepFunction& a, const StepFunction& b);

/// Piecewise-constant graphon: [0,1] is cut into blocks of the given
/// Lebesgue measures and the kernel is values(a, b) on block a x block b.
/// Edge probabilities are values / n.
class StepGraphon {
 public:
  StepGraphon(std::vector<double> block_measures, Eigen::MatrixXd values);

  /// Throws InvalidArgument unless the invariants hold.
  void validate() const;

  std::size_t blocks() const { return measures_.size(); }
  const std::vector<double>& block_measures() const { return measures_; }
  const Eigen::MatrixXd& values() const { return values_; }
  /// Upper bound M on the kernel, i.e. its largest entry.
  double bound() const;
  std::vector<double> breakpoints() const;
  std::size_t block_of(double x) const;
  double operator()(double x, double y) const;

 private:
  std::vector<double> measures_;
  Eigen::MatrixXd values_;
};

/// Eigen-expansion sum_i mu_i f_i(x) f_i(y), eigenvalues sorted by
/// decreasing magnitude.
struct SpectralGraphon {
  std::vector<double> eigenvalues;
  std::vector<StepFunction> eigenfunctions;
  double degree_constant = 0.0;

  std::size_t rank() const { return eigenvalues.size(); }
  double operator()(double x, double y) const;
};

SpectralGraphon spectral_decompose(const StepGraphon& g);

struct AssumptionReport {
  double M = 0.0;
  double q = 0.0;
  bool constant_degree = false;
  std::vector<double> row_degrees;
  std::size_t r0 = 0;
  bool top_simple = true;
  std::vector<double> eigenvalues;
};

/// Boundedness, constant expected degree and the Kesten-Stigum count r0.
/// `tol` bounds the row-sum spread; `simplicity_tol` is the relative gap
/// below which two of the top r0 eigenvalues count as repeated.
AssumptionReport check_assumptions(const StepGraphon& g, double tol = 1e-9,
                                   double simplicity_tol = 1e-6);

/// Keeps the top K eigenpairs. Throws AmbiguousTruncation when
/// |mu_K| == |mu_{K+1}| up to `tie_tol` (relative).
SpectralGraphon rank_truncate(const SpectralGraphon& s, std::size_t K,
                              double tie_tol = 1e-12);

StepGraphon scale(const StepGraphon& g, double h);

/// Throws InvalidArgument when x or y is outside [0,1].
double evaluate(const StepGraphon& g, double x, double y);
double evaluate(const SpectralGraphon& g, double x, double y);

void to_json(nlohmann::json& j, const StepGraphon& g);
StepGraphon step_graphon_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const SpectralGraphon& s);
SpectralGraphon spectral_graphon_from_json(const nlohmann::json& j);

}  // namespace graphon
