#include "graphon/nonbacktracking.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include "graphon/error.hpp"

namespace graphon {

OrientedEdgeSpace::OrientedEdgeSpace(const SparseGraph& g) {
  const std::size_t n = g.num_vertices();
  const std::size_t m = g.num_edges();
  tail_.resize(2 * m);
  head_.resize(2 * m);
  out_offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto [u, v] = g.edges()[i];
    tail_[2 * i] = u;
    head_[2 * i] = v;
    tail_[2 * i + 1] = v;
    head_[2 * i + 1] = u;
    ++out_offsets_[u + 1];
    ++out_offsets_[v + 1];
  }
  for (std::size_t v = 0; v < n; ++v) out_offsets_[v + 1] += out_offsets_[v];
  out_.resize(2 * m);
  std::vector<std::size_t> fill(out_offsets_.begin(), out_offsets_.end() - 1);
  for (std::size_t e = 0; e < 2 * m; ++e) out_[fill[tail_[e]]++] = e;
}

void NonBacktrackingOperator::apply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = space_.num_vertices();
  out_sum_.assign(n, 0.0);
  for (std::size_t e = 0; e < space_.size(); ++e) out_sum_[space_.tail(e)] += x[e];
  for (std::size_t e = 0; e < space_.size(); ++e)
    y[e] = out_sum_[space_.head(e)] - x[OrientedEdgeSpace::inverse(e)];
}

void IharaBassOperator::apply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = graph_.num_vertices();
  for (std::size_t v = 0; v < n; ++v) {
    double acc = 0.0;
    for (Vertex w : graph_.neighbors(static_cast<Vertex>(v))) acc += x[w];
    const double d = static_cast<double>(graph_.degree(static_cast<Vertex>(v)));
    y[v] = acc + (1.0 - d) * x[n + v];
  }
  for (std::size_t v = 0; v < n; ++v) y[n + v] = x[v];
}

Eigen::SparseMatrix<double> nonbacktracking_matrix(const OrientedEdgeSpace& space) {
  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t e = 0; e < space.size(); ++e)
    for (std::size_t f : space.out_edges(space.head(e)))
      if (f != OrientedEdgeSpace::inverse(e))
        entries.emplace_back(static_cast<int>(e), static_cast<int>(f), 1.0);
  const auto dim = static_cast<Eigen::Index>(space.size());
  Eigen::SparseMatrix<double> B(dim, dim);
  B.setFromTriplets(entries.begin(), entries.end());
  return B;
}

Eigen::MatrixXd ihara_bass_matrix(const SparseGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (const auto& [u, v] : g.edges()) {
    C(u, v) = 1.0;
    C(v, u) = 1.0;
  }
  for (Eigen::Index v = 0; v < n; ++v) {
    C(v, n + v) = 1.0 - static_cast<double>(g.degree(static_cast<Vertex>(v)));
    C(n + v, v) = 1.0;
  }
  return C;
}

Eigen::VectorXd lift_companion_vector(const OrientedEdgeSpace& space, const Eigen::VectorXd& y,
                                      double lambda) {
  const double denom = lambda * lambda - 1.0;
  if (std::abs(denom) < 1e-12) throw InvalidArgument("cannot lift an eigenvector at lambda = +-1");
  Eigen::VectorXd xi(static_cast<Eigen::Index>(space.size()));
  for (std::size_t e = 0; e < space.size(); ++e)
    xi(static_cast<Eigen::Index>(e)) = (lambda * y(space.head(e)) - y(space.tail(e))) / denom;
  return xi;
}

double default_e1(std::size_t n) {
  if (n < 3) throw InvalidArgument("e1(n) needs n >= 3");
  return 1.0 / std::sqrt(std::log(static_cast<double>(n)));
}

bool is_real_eigenvalue(std::complex<double> lambda) {
  return std::abs(lambda.imag()) <= std::max(1e-8, 1e-3 * std::abs(lambda));
}

std::size_t count_informative(std::span<const std::complex<double>> sorted, double e1,
                              std::size_t k_cap) {
  if (sorted.empty() || !is_real_eigenvalue(sorted[0]) || sorted[0].real() <= 0.0) return 0;
  const double cutoff = std::sqrt(sorted[0].real()) + e1;
  std::size_t K = 0;
  for (const auto& lambda : sorted) {
    if (!(std::abs(lambda) > cutoff)) break;
    if (is_real_eigenvalue(lambda)) ++K;
  }
  return std::min(K, k_cap);
}

Eigen::MatrixXd vertex_aggregates(const Eigen::MatrixXd& eigenvectors,
                                  const OrientedEdgeSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.num_vertices());
  Eigen::MatrixXd agg = Eigen::MatrixXd::Zero(n, eigenvectors.cols());
  for (std::size_t e = 0; e < space.size(); ++e)
    agg.row(space.head(e)) += eigenvectors.row(static_cast<Eigen::Index>(e));
  return agg;
}

namespace {

void orient(Eigen::Ref<Eigen::VectorXd> x) {
  const double big = x.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (std::abs(x(i)) > 1e-10 * big) {
      if (x(i) < 0) x = -x;
      return;
    }
}

}  // namespace

NbSpectrum top_spectrum(const OrientedEdgeSpace& space, const SparseGraph& g,
                        const SpectrumOptions& opt) {
  if (space.size() == 0) throw InvalidArgument("non-backtracking spectrum needs at least one edge");
  NbSpectrum spec;
  spec.e1 = opt.e1_override ? *opt.e1_override : default_e1(g.num_vertices());
  const std::size_t k_cap = opt.k_cap;

  KrylovOptions kopt;
  kopt.krylov_dim = std::max<std::size_t>(4 * k_cap + 10, 30);
  kopt.tol = opt.tol;
  kopt.max_restarts = opt.max_restarts;
  kopt.seed = opt.seed;
  kopt.guard = opt.guard;
  kopt.wanted = [&](std::span<const std::complex<double>> ritz) -> std::size_t {
    if (ritz.empty() || ritz[0].real() <= 0.0) return 1;
    const double cutoff = std::sqrt(ritz[0].real()) + spec.e1;
    std::size_t above = 0;
    while (above < ritz.size() && std::abs(ritz[above]) > cutoff) ++above;
    return std::clamp<std::size_t>(above, 1, k_cap + 2);
  };

  NonBacktrackingOperator B(space);
  KrylovResult kr;
  if (opt.use_ihara_bass) {
    IharaBassOperator C(g);
    kr = krylov_schur(C, kopt);
  } else {
    kr = krylov_schur(B, kopt);
  }
  spec.computed_values = kr.values;
  spec.matvecs = kr.matvecs;
  spec.restarts = kr.restarts;

  if (!is_real_eigenvalue(kr.values[0]) || kr.values[0].real() <= 0.0)
    throw DegenerateSpectrum("leading non-backtracking eigenvalue is not positive");
  spec.cutoff = std::sqrt(kr.values[0].real()) + spec.e1;
  spec.K = count_informative(kr.values, spec.e1, k_cap);

  const auto dim = static_cast<Eigen::Index>(space.size());
  spec.eigenvectors.resize(dim, static_cast<Eigen::Index>(spec.K));
  Eigen::VectorXd Bx(dim);
  std::size_t k = 0;
  for (std::size_t i = 0; i < kr.values.size() && k < spec.K; ++i) {
    if (!is_real_eigenvalue(kr.values[i])) continue;
    const double lambda = kr.values[i].real();
    Eigen::VectorXd xi;
    if (opt.use_ihara_bass) {
      const Eigen::VectorXd y = kr.vectors.col(static_cast<Eigen::Index>(i)).head(
          static_cast<Eigen::Index>(g.num_vertices()));
      xi = lift_companion_vector(space, y, lambda);
    } else {
      xi = kr.vectors.col(static_cast<Eigen::Index>(i));
    }
    xi.normalize();
    orient(xi);
    B.apply({xi.data(), space.size()}, {Bx.data(), space.size()});
    spec.residuals.push_back((Bx - lambda * xi).norm());
    spec.lambdas.push_back(lambda);
    spec.eigenvectors.col(static_cast<Eigen::Index>(k)) = xi;
    ++k;
  }
  for (std::size_t i = 0; i + 1 < spec.lambdas.size(); ++i)
    if (std::abs(spec.lambdas[i] - spec.lambdas[i + 1]) <= 1e-6 * std::abs(spec.lambdas[i]))
      spec.near_multiplicity = true;
  spec.vertex_aggregates = vertex_aggregates(spec.eigenvectors, space);
  return spec;
}

void write_aggregates(const Eigen::MatrixXd& aggregates, const std::filesystem::path& path) {
  static_assert(std::endian::native == std::endian::little, "little-endian host assumed");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (Eigen::Index v = 0; v < aggregates.rows(); ++v)
    for (Eigen::Index k = 0; k < aggregates.cols(); ++k) {
      const double value = aggregates(v, k);
      out.write(reinterpret_cast<const char*>(&value), sizeof value);
    }
}

Eigen::MatrixXd read_aggregates(const std::filesystem::path& path, std::size_t n, std::size_t K) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error("cannot read " + path.string());
  const auto bytes = static_cast<std::size_t>(in.tellg());
  if (bytes != n * K * sizeof(double))
    throw ParseError(path.string(), "expected " + std::to_string(n * K * sizeof(double)) +
                                        " bytes, found " + std::to_string(bytes));
  in.seekg(0);
  Eigen::MatrixXd agg(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(K));
  for (Eigen::Index v = 0; v < agg.rows(); ++v)
    for (Eigen::Index k = 0; k < agg.cols(); ++k) {
      double value = 0.0;
      in.read(reinterpret_cast<char*>(&value), sizeof value);
      agg(v, k) = value;
    }
  return agg;
}

}  // namespace graphon
