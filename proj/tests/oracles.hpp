#pragma once

// Slow reference implementations used by the unit and acceptance tests.
// They share no code with the library beyond the graph container.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "graphon/graph.hpp"

namespace oracle {

using graphon::SparseGraph;
using graphon::Vertex;

inline SparseGraph random_graph(std::mt19937_64& rng, std::size_t n, double p) {
  std::bernoulli_distribution coin(p);
  std::vector<graphon::Edge> edges;
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = u + 1; v < n; ++v)
      if (coin(rng)) edges.emplace_back(u, v);
  return SparseGraph(n, edges);
}

// Oriented edges listed as (tail, head) pairs straight from the adjacency.
inline std::vector<std::pair<Vertex, Vertex>> oriented_edges(const SparseGraph& g) {
  std::vector<std::pair<Vertex, Vertex>> out;
  for (const auto& [u, v] : g.edges()) {
    out.emplace_back(u, v);
    out.emplace_back(v, u);
  }
  return out;
}

// B(e, f) = 1 when e = (a -> b), f = (b -> c) and c != a.
inline Eigen::MatrixXd dense_nonbacktracking(const SparseGraph& g) {
  const auto e = oriented_edges(g);
  const auto m = static_cast<Eigen::Index>(e.size());
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto [a, b] = e[static_cast<std::size_t>(i)];
      const auto [c, d] = e[static_cast<std::size_t>(j)];
      if (b == c && d != a) B(i, j) = 1.0;
    }
  return B;
}

inline std::vector<std::complex<double>> dense_eigenvalues(const Eigen::MatrixXd& A) {
  if (A.rows() == 0) return {};
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + A.rows());
  std::sort(ev.begin(), ev.end(), [](auto x, auto y) { return std::abs(x) > std::abs(y); });
  return ev;
}

// Distance from z to the nearest entry of `pool`.
inline double nearest(std::complex<double> z, const std::vector<std::complex<double>>& pool) {
  double best = 1e300;
  for (const auto& p : pool) best = std::min(best, std::abs(z - p));
  return best;
}

// Sum over centers w and ordered tuples of pairwise distinct neighbors of w
// of prod_l b[label_l](i_l), by direct recursion.
inline double star_count(const SparseGraph& g, const std::vector<unsigned>& labels,
                         const Eigen::MatrixXd& b) {
  double total = 0.0;
  for (Vertex w = 0; w < g.num_vertices(); ++w) {
    std::vector<Vertex> nb;
    for (Vertex v = 0; v < g.num_vertices(); ++v)
      if (v != w && g.adjacent(w, v)) nb.push_back(v);
    std::vector<bool> used(nb.size(), false);
    std::function<double(std::size_t)> rec = [&](std::size_t depth) -> double {
      if (depth == labels.size()) return 1.0;
      double s = 0.0;
      for (std::size_t i = 0; i < nb.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        s += b(nb[i], labels[depth]) * rec(depth + 1);
        used[i] = false;
      }
      return s;
    };
    total += rec(0);
  }
  return total;
}

// Sum over all ordered adjacent pairs (i, j) of b(i) b(j).
inline double pair_count(const SparseGraph& g, const Eigen::VectorXd& b) {
  double s = 0.0;
  for (Vertex i = 0; i < g.num_vertices(); ++i)
    for (Vertex j = 0; j < g.num_vertices(); ++j)
      if (i != j && g.adjacent(i, j)) s += b(i) * b(j);
  return s;
}

// Minimum over all permutations of p cells of the midpoint L2 distance.
inline double exact_cell_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const auto p = static_cast<int>(a.rows());
  std::vector<int> perm(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) perm[static_cast<std::size_t>(i)] = i;
  double best = 1e300;
  do {
    double s = 0.0;
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) {
        const double d = a(i, j) - b(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
        s += d * d;
      }
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best) / p;
}

}  // namespace oracle
