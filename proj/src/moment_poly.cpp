#include "graphon/moment_poly.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "graphon/error.hpp"
#include "graphon/parallel.hpp"

namespace graphon {

using nlohmann::json;

namespace {

double bump(double t) {
  const double s = 1.0 - t * t;
  return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
}

// E[N_1^j] for even j up to `count`, computed once.
const std::vector<double>& unit_moments(unsigned count) {
  static std::vector<double> cache;
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  using boost::math::quadrature::gauss_kronrod;
  if (cache.size() <= count) {
    const double mass = 2.0 * gauss_kronrod<double, 61>::integrate(bump, 0.0, 1.0, 20, 1e-15);
    for (unsigned j = static_cast<unsigned>(cache.size()); j <= count; ++j) {
      if (j % 2 == 1) {
        cache.push_back(0.0);
        continue;
      }
      auto f = [j](double t) { return std::pow(t, j) * bump(t); };
      cache.push_back(2.0 * gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 20, 1e-15) / mass);
    }
  }
  return cache;
}

double binomial(unsigned a, unsigned b) {
  double r = 1.0;
  for (unsigned i = 1; i <= b; ++i) r = r * (a - b + i) / i;
  return r;
}

}  // namespace

MollifierMoments mollifier_moments(double delta, unsigned N) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("mollifier width must be positive");
  const auto& unit = unit_moments(N);
  MollifierMoments mm;
  mm.delta = delta;
  mm.moments.resize(N + 1);
  for (unsigned j = 0; j <= N; ++j) {
    mm.moments[j] = std::pow(delta, j) * unit[j];
    if (unit[j] != 0.0 && !std::isnormal(mm.moments[j]))
      throw Error("mollifier moment " + std::to_string(j) + " underflows at delta = " +
                  std::to_string(delta));
  }
  return mm;
}

std::vector<double> apply_along_axes(const std::vector<double>& tensor, std::size_t K, unsigned N,
                                     const Eigen::MatrixXd& lower) {
  const MultiIndexGrid grid(K, N);
  if (tensor.size() != grid.size()) throw InvalidArgument("tensor does not match the grid");
  std::vector<double> cur = tensor;
  std::vector<double> next(cur.size());
  const std::size_t side = N + 1;
  for (std::size_t axis = 0; axis < K; ++axis) {
    const std::size_t stride = grid.stride(axis);
    const std::size_t block = stride * side;
    for (std::size_t outer = 0; outer < cur.size(); outer += block)
      for (std::size_t inner = 0; inner < stride; ++inner) {
        const std::size_t base = outer + inner;
        for (std::size_t a = 0; a < side; ++a) {
          double sum = 0.0;
          for (std::size_t b = 0; b <= a; ++b)
            sum += lower(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * cur[base + b * stride];
          next[base + a * stride] = sum;
        }
      }
    std::swap(cur, next);
  }
  return cur;
}

std::vector<double> mollify_moments(const std::vector<double>& P, std::size_t K, unsigned N,
                                    const MollifierMoments& mm) {
  if (mm.moments.size() < N + 1u) throw InvalidArgument("too few mollifier moments");
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(N + 1, N + 1);
  for (unsigned a = 0; a <= N; ++a)
    for (unsigned b = 0; b <= a; ++b) T(a, b) = binomial(a, b) * mm.moments[a - b];
  return apply_along_axes(P, K, N, T);
}

std::vector<double> mollify_moments(const MomentTable& table, const MollifierMoments& mm) {
  if (!table.valid) throw InvalidArgument("cannot mollify an invalid moment table");
  return mollify_moments(table.entries, table.K, table.N, mm);
}

LegendreBasis legendre_basis(unsigned N, double kappa) {
  if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
  LegendreBasis basis;
  basis.N = N;
  basis.kappa = kappa;
  // Monomial coefficients of the classical P_i, then unit-norm rescaling.
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(N + 1, N + 1);
  P(0, 0) = 1.0;
  if (N >= 1) P(1, 1) = 1.0;
  for (unsigned i = 1; i < N; ++i)
    for (unsigned j = 0; j <= i + 1; ++j) {
      double v = 0.0;
      if (j >= 1) v += (2.0 * i + 1.0) * P(i, j - 1);
      if (j <= i - 1) v -= i * P(i - 1, j);
      P(i + 1, j) = v / (i + 1.0);
    }
  basis.coeffs = P;
  for (unsigned i = 0; i <= N; ++i) basis.coeffs.row(i) *= std::sqrt((2.0 * i + 1.0) / 2.0);
  basis.scaled_coeffs = basis.coeffs;
  for (unsigned j = 0; j <= N; ++j) basis.scaled_coeffs.col(j) /= std::pow(kappa, j + 0.5);
  return basis;
}

void scaled_legendre_values(unsigned N, double kappa, double x, std::span<double> out) {
  const double t = x / kappa;
  double prev = 1.0;
  double cur = t;
  const double root = 1.0 / std::sqrt(kappa);
  out[0] = std::sqrt(0.5) * root;
  if (N >= 1) out[1] = std::sqrt(1.5) * t * root;
  for (unsigned i = 1; i < N; ++i) {
    const double nxt = ((2.0 * i + 1.0) * t * cur - i * prev) / (i + 1.0);
    prev = cur;
    cur = nxt;
    out[i + 1] = std::sqrt((2.0 * i + 3.0) / 2.0) * cur * root;
  }
}

DensityFit fit_density(const std::vector<double>& M, const LegendreBasis& basis, std::size_t K,
                       double delta) {
  DensityFit fit;
  fit.K = K;
  fit.N = basis.N;
  fit.kappa = basis.kappa;
  fit.delta = delta;
  fit.rho = apply_along_axes(M, K, basis.N, basis.scaled_coeffs);
  const MultiIndexGrid grid(K, basis.N);
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    double sup = std::abs(fit.rho[idx]);
    for (unsigned a : grid.at(idx)) sup *= std::sqrt((2.0 * a + 1.0) / (2.0 * fit.kappa));
    fit.max_bound += sup;
  }
  return fit;
}

namespace {

// Contracts rho with per-axis basis values; values is K rows of N+1.
double contract(const DensityFit& fit, const std::vector<double>& values) {
  const std::size_t side = fit.N + 1;
  std::vector<double> cur = fit.rho;
  std::size_t len = cur.size();
  for (std::size_t axis = fit.K; axis-- > 0;) {
    const double* b = values.data() + axis * side;
    const std::size_t outer = len / side;
    for (std::size_t o = 0; o < outer; ++o) {
      double sum = 0.0;
      for (std::size_t a = 0; a < side; ++a) sum += cur[o * side + a] * b[a];
      cur[o] = sum;
    }
    len = outer;
  }
  return cur[0];
}

}  // namespace

double eval_density(const DensityFit& fit, std::span<const double> x) {
  if (x.size() != fit.K) throw InvalidArgument("point dimension differs from the fit");
  for (double xi : x)
    if (!(std::abs(xi) <= fit.kappa)) return 0.0;
  const std::size_t side = fit.N + 1;
  std::vector<double> values(fit.K * side);
  for (std::size_t i = 0; i < fit.K; ++i)
    scaled_legendre_values(fit.N, fit.kappa, x[i], {values.data() + i * side, side});
  return contract(fit, values);
}

double eval_density_plus(const DensityFit& fit, std::span<const double> x) {
  return std::max(eval_density(fit, x), 0.0);
}

namespace {

class CellIntegrator {
 public:
  explicit CellIntegrator(const DensityFit& fit)
      : fit_(fit), max_depth_(fit.K == 1 ? 24 : fit.K == 2 ? 5 : 2) {
    if (fit.N <= 12)
      load_rule<7>();
    else if (fit.N <= 18)
      load_rule<10>();
    else
      load_rule<15>();
  }

  double integrate(const std::vector<double>& lo, double h, unsigned depth) const {
    const std::size_t K = fit_.K;
    const std::size_t q = nodes_.size();
    std::vector<std::size_t> digit(K, 0);
    std::vector<double> x(K);
    double sum = 0.0;
    bool pos = false;
    bool neg = false;
    for (;;) {
      double w = 1.0;
      for (std::size_t i = 0; i < K; ++i) {
        x[i] = lo[i] + h * nodes_[digit[i]];
        w *= weights_[digit[i]];
      }
      const double v = eval_density(fit_, x);
      pos = pos || v > 0.0;
      neg = neg || v < 0.0;
      sum += w * std::max(v, 0.0);
      std::size_t i = 0;
      while (i < K && ++digit[i] == q) digit[i++] = 0;
      if (i == K) break;
    }
    // Corners catch sign changes near the cell boundary.
    for (std::size_t c = 0; c < (std::size_t{1} << K) && !(pos && neg); ++c) {
      for (std::size_t i = 0; i < K; ++i) x[i] = std::min(lo[i] + ((c >> i) & 1U) * h, fit_.kappa);
      const double v = eval_density(fit_, x);
      pos = pos || v > 0.0;
      neg = neg || v < 0.0;
    }
    if (!neg) return sum * std::pow(h, static_cast<double>(K));
    if (!pos) return 0.0;
    if (depth >= max_depth_) return sum * std::pow(h, static_cast<double>(K));
    double total = 0.0;
    std::vector<double> sub(K);
    for (std::size_t c = 0; c < (std::size_t{1} << K); ++c) {
      for (std::size_t i = 0; i < K; ++i) sub[i] = lo[i] + ((c >> i) & 1U) * 0.5 * h;
      total += integrate(sub, 0.5 * h, depth + 1);
    }
    return total;
  }

 private:
  // Maps a symmetric Gauss-Legendre rule on [-1, 1] to [0, 1].
  template <unsigned Points>
  void load_rule() {
    using Rule = boost::math::quadrature::gauss<double, Points>;
    const auto& abscissa = Rule::abscissa();
    const auto& weights = Rule::weights();
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      nodes_.push_back(0.5 * (1.0 + abscissa[i]));
      weights_.push_back(0.5 * weights[i]);
      if (abscissa[i] != 0.0) {
        nodes_.push_back(0.5 * (1.0 - abscissa[i]));
        weights_.push_back(0.5 * weights[i]);
      }
    }
  }

  const DensityFit& fit_;
  unsigned max_depth_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

}  // namespace

PlusIntegral integrate_plus(const DensityFit& fit, std::size_t resolution) {
  if (resolution < 32) throw InvalidArgument("grid resolution must be at least 32 per axis");
  PlusIntegral out;
  out.resolution = resolution;
  std::size_t cells = 1;
  for (std::size_t i = 0; i < fit.K; ++i) cells *= resolution;
  out.cell_mass.assign(cells, 0.0);
  const double h = 2.0 * fit.kappa / static_cast<double>(resolution);
  const CellIntegrator integrator(fit);
  for_each_chunk(cells, 256, [&](std::size_t begin, std::size_t end, std::size_t) {
    std::vector<double> lo(fit.K);
    for (std::size_t c = begin; c < end; ++c) {
      // Cell index is row-major with the first axis slowest.
      std::size_t rest = c;
      for (std::size_t i = fit.K; i-- > 0;) {
        lo[i] = -fit.kappa + h * static_cast<double>(rest % resolution);
        rest /= resolution;
      }
      out.cell_mass[c] = integrator.integrate(lo, h, 0);
    }
  });
  for (double m : out.cell_mass) out.total += m;
  return out;
}

double l1_norm_plus(DensityFit& fit, std::size_t resolution) {
  const double coarse = integrate_plus(fit, resolution).total;
  const double fine = integrate_plus(fit, 2 * resolution).total;
  if (!(fine > 0.0)) throw UnusableFit("fitted density has no positive mass");
  fit.l1_norm_plus = fine;
  fit.grid_resolution = resolution;
  fit.accuracy_warning = std::abs(fine - coarse) >= 1e-4 * fine;
  return fine;
}

void to_json(json& j, const DensityFit& fit) {
  j = json{{"K", fit.K},
           {"N", fit.N},
           {"kappa", fit.kappa},
           {"delta", fit.delta},
           {"rho", fit.rho},
           {"l1_norm_plus", fit.l1_norm_plus},
           {"max_bound", fit.max_bound},
           {"grid_resolution", fit.grid_resolution},
           {"accuracy_warning", fit.accuracy_warning}};
}

DensityFit density_fit_from_json(const json& j) {
  DensityFit fit;
  try {
    fit.K = j.at("K").get<std::size_t>();
    fit.N = j.at("N").get<unsigned>();
    fit.kappa = j.at("kappa").get<double>();
    fit.delta = j.at("delta").get<double>();
    fit.rho = j.at("rho").get<std::vector<double>>();
    fit.l1_norm_plus = j.at("l1_norm_plus").get<double>();
    fit.max_bound = j.at("max_bound").get<double>();
    fit.grid_resolution = j.value("grid_resolution", std::size_t{0});
    fit.accuracy_warning = j.value("accuracy_warning", false);
  } catch (const json::exception& e) {
    throw ParseError("density fit", e.what());
  }
  if (fit.rho.size() != MultiIndexGrid(fit.K, fit.N).size())
    throw ParseError("density fit.rho", "coefficient count does not match K and N");
  return fit;
}

}  // namespace graphon
