#include "graphon/graphon_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "graphon/error.hpp"

namespace graphon {

using nlohmann::json;

StepFunction::StepFunction(std::vector<double> breakpoints,
                           std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.size() != values_.size() + 1 || values_.empty())
    throw InvalidArgument("step function needs one more breakpoint than values");
  if (breakpoints_.front() != 0.0 || std::abs(breakpoints_.back() - 1.0) > 1e-12)
    throw InvalidArgument("step function breakpoints must span [0,1]");
  for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i)
    if (!(breakpoints_[i] < breakpoints_[i + 1]))
      throw InvalidArgument("step function breakpoints must increase strictly");
  breakpoints_.back() = 1.0;
}

std::size_t StepFunction::piece(double x) const {
  auto it = std::upper_bound(breakpoints_.begin() + 1, breakpoints_.end() - 1, x);
  return static_cast<std::size_t>(it - (breakpoints_.begin() + 1));
}

double StepFunction::operator()(double x) const { return values_[piece(x)]; }

double inner_product(const StepFunction& a, const StepFunction& b) {
  // Merge both partitions.
  std::vector<double> cuts = a.breakpoints();
  cuts.insert(cuts.end(), b.breakpoints().begin(), b.breakpoints().end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    sum += (cuts[i + 1] - cuts[i]) * a(mid) * b(mid);
  }
  return sum;
}

StepGraphon::StepGraphon(std::vector<double> block_measures, Eigen::MatrixXd values)
    : measures_(std::move(block_measures)), values_(std::move(values)) {
  validate();
}

void StepGraphon::validate() const {
  const auto k = measures_.size();
  if (k == 0) throw InvalidArgument("graphon needs at least one block");
  if (values_.rows() != static_cast<Eigen::Index>(k) || values_.cols() != values_.rows())
    throw InvalidArgument("graphon values must be a k x k matrix matching the blocks");
  double total = 0.0;
  for (double w : measures_) {
    if (!(w > 0.0)) throw InvalidArgument("block measures must be strictly positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw InvalidArgument("block measures must sum to 1");
  for (Eigen::Index a = 0; a < values_.rows(); ++a)
    for (Eigen::Index b = 0; b < values_.cols(); ++b) {
      if (!std::isfinite(values_(a, b)) || values_(a, b) < 0.0)
        throw InvalidArgument("graphon values must be finite and nonnegative");
      if (values_(a, b) != values_(b, a))
        throw InvalidArgument("graphon values must be symmetric");
    }
}

double StepGraphon::bound() const { return values_.maxCoeff(); }

std::vector<double> StepGraphon::breakpoints() const {
  std::vector<double> cuts(measures_.size() + 1, 0.0);
  std::partial_sum(measures_.begin(), measures_.end(), cuts.begin() + 1);
  cuts.back() = 1.0;
  return cuts;
}

std::size_t StepGraphon::block_of(double x) const {
  double acc = 0.0;
  for (std::size_t b = 0; b + 1 < measures_.size(); ++b) {
    acc += measures_[b];
    if (x < acc) return b;
  }
  return measures_.size() - 1;
}

double StepGraphon::operator()(double x, double y) const {
  return values_(static_cast<Eigen::Index>(block_of(x)),
                 static_cast<Eigen::Index>(block_of(y)));
}

double SpectralGraphon::operator()(double x, double y) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i)
    sum += eigenvalues[i] * eigenfunctions[i](x) * eigenfunctions[i](y);
  return sum;
}

SpectralGraphon spectral_decompose(const StepGraphon& g) {
  g.validate();
  const auto k = static_cast<Eigen::Index>(g.blocks());
  Eigen::VectorXd root(k);
  for (Eigen::Index b = 0; b < k; ++b) root(b) = std::sqrt(g.block_measures()[b]);
  const Eigen::MatrixXd sym = root.asDiagonal() * g.values() * root.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw Error("dense eigensolver failed");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  const auto& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (std::abs(ev(a)) != std::abs(ev(b))) return std::abs(ev(a)) > std::abs(ev(b));
    return ev(a) > ev(b);
  });

  SpectralGraphon out;
  const auto cuts = g.breakpoints();
  for (Eigen::Index idx : order) {
    Eigen::VectorXd f = solver.eigenvectors().col(idx).cwiseQuotient(root);
    // Orientation: nonnegative mean, else first nonzero block positive.
    double mean = 0.0;
    for (Eigen::Index b = 0; b < k; ++b) mean += g.block_measures()[b] * f(b);
    double sign = 1.0;
    if (std::abs(mean) > 1e-12) {
      sign = mean > 0 ? 1.0 : -1.0;
    } else {
      for (Eigen::Index b = 0; b < k; ++b)
        if (std::abs(f(b)) > 1e-12) {
          sign = f(b) > 0 ? 1.0 : -1.0;
          break;
        }
    }
    f *= sign;
    out.eigenvalues.push_back(ev(idx));
    out.eigenfunctions.emplace_back(cuts, std::vector<double>(f.data(), f.data() + k));
  }
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(g.block_measures().data(), k);
  out.degree_constant = (g.values() * w).mean();
  return out;
}

AssumptionReport check_assumptions(const StepGraphon& g, double tol,
                                   double simplicity_tol) {
  AssumptionReport rep;
  rep.M = g.bound();
  const auto k = static_cast<Eigen::Index>(g.blocks());
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(g.block_measures().data(), k);
  const Eigen::VectorXd rows = g.values() * w;
  rep.row_degrees.assign(rows.data(), rows.data() + k);
  rep.q = rows.mean();
  rep.constant_degree = rows.maxCoeff() - rows.minCoeff() <= tol;

  const auto spec = spectral_decompose(g);
  rep.eigenvalues = spec.eigenvalues;
  const double mu1 = spec.eigenvalues.front();
  if (mu1 > 0.0) {
    // Strict inequality with a rounding allowance, so that an exact boundary
    // case like |mu_2| == sqrt(mu_1) is not counted.
    const double threshold = std::sqrt(mu1) * (1.0 + 1e-12) + 1e-12;
    for (double mu : spec.eigenvalues) {
      if (std::abs(mu) > threshold)
        ++rep.r0;
      else
        break;
    }
  }
  // Each of the top r0 eigenvalues must be separated from its successor.
  for (std::size_t i = 0; i < rep.r0 && i + 1 < spec.eigenvalues.size(); ++i) {
    const double a = spec.eigenvalues[i];
    const double b = spec.eigenvalues[i + 1];
    if (std::abs(a - b) <= simplicity_tol * std::abs(a)) rep.top_simple = false;
  }
  return rep;
}

SpectralGraphon rank_truncate(const SpectralGraphon& s, std::size_t K, double tie_tol) {
  if (K > s.rank())
    throw InvalidArgument("truncation rank " + std::to_string(K) + " exceeds " +
                          std::to_string(s.rank()) + " stored eigenpairs");
  if (K > 0 && K < s.rank()) {
    const double a = std::abs(s.eigenvalues[K - 1]);
    const double b = std::abs(s.eigenvalues[K]);
    if (std::abs(a - b) <= tie_tol * std::max(a, 1e-300))
      throw AmbiguousTruncation("|mu_K| equals |mu_{K+1}| at K = " + std::to_string(K));
  }
  SpectralGraphon out;
  out.eigenvalues.assign(s.eigenvalues.begin(), s.eigenvalues.begin() + static_cast<std::ptrdiff_t>(K));
  out.eigenfunctions.assign(s.eigenfunctions.begin(),
                            s.eigenfunctions.begin() + static_cast<std::ptrdiff_t>(K));
  out.degree_constant = s.degree_constant;
  return out;
}

StepGraphon scale(const StepGraphon& g, double h) {
  if (!(h > 0.0)) throw InvalidArgument("scale factor must be positive");
  return StepGraphon(g.block_measures(), g.values() * h);
}

namespace {
void check_unit(double x, double y) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0))
    throw InvalidArgument("graphon coordinates must lie in [0,1]");
}
}  // namespace

double evaluate(const StepGraphon& g, double x, double y) {
  check_unit(x, y);
  return g(x, y);
}

double evaluate(const SpectralGraphon& g, double x, double y) {
  check_unit(x, y);
  return g(x, y);
}

void to_json(json& j, const StepGraphon& g) {
  json rows = json::array();
  for (Eigen::Index a = 0; a < g.values().rows(); ++a) {
    json row = json::array();
    for (Eigen::Index b = 0; b < g.values().cols(); ++b) row.push_back(g.values()(a, b));
    rows.push_back(row);
  }
  j = json{{"block_measures", g.block_measures()}, {"values", rows}};
}

StepGraphon step_graphon_from_json(const json& j) {
  if (!j.contains("block_measures") || !j.contains("values"))
    throw ParseError("graphon", "expected fields block_measures and values");
  auto measures = j.at("block_measures").get<std::vector<double>>();
  const auto& rows = j.at("values");
  const auto k = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd values(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(a)].size()) != k)
      throw ParseError("graphon.values[" + std::to_string(a) + "]", "row length mismatch");
    for (Eigen::Index b = 0; b < k; ++b)
      values(a, b) = rows[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)].get<double>();
  }
  return StepGraphon(std::move(measures), std::move(values));
}

void to_json(json& j, const SpectralGraphon& s) {
  json fns = json::array();
  for (const auto& f : s.eigenfunctions)
    fns.push_back(json{{"breakpoints", f.breakpoints()}, {"values", f.values()}});
  j = json{{"eigenvalues", s.eigenvalues},
           {"eigenfunctions", fns},
           {"degree_constant", s.degree_constant}};
}

SpectralGraphon spectral_graphon_from_json(const json& j) {
  SpectralGraphon s;
  s.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  for (const auto& f : j.at("eigenfunctions"))
    s.eigenfunctions.emplace_back(f.at("breakpoints").get<std::vector<double>>(),
                                  f.at("values").get<std::vector<double>>());
  s.degree_constant = j.value("degree_constant", 0.0);
  if (s.eigenfunctions.size() != s.eigenvalues.size())
    throw ParseError("spectral graphon", "eigenvalue and eigenfunction counts differ");
  return s;
}

}  // namespace graphon
