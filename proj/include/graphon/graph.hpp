#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "graphon/graphon_model.hpp"

namespace graphon {

using Vertex = std::uint32_t;
using Edge = std::pair<Vertex, Vertex>;

/// Simple undirected graph on vertices 0..n-1. Edges are stored once with
/// u < v in lexicographic order; adjacency is CSR with sorted neighbors.
class SparseGraph {
 public:
  SparseGraph() = default;
  /// Canonicalizes the edge list. Throws InvalidArgument on self-loops,
  /// duplicates or out-of-range endpoints.
  SparseGraph(std::size_t n, std::vector<Edge> edges);

  std::size_t num_vertices() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }

  std::span<const Vertex> neighbors(Vertex v) const {
    return {neighbors_.data() + offsets_[v], neighbors_.data() + offsets_[v + 1]};
  }
  std::size_t degree(Vertex v) const { return offsets_[v + 1] - offsets_[v]; }
  bool adjacent(Vertex u, Vertex v) const;

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<Vertex> neighbors_;
};

struct LatentAssignment {
  std::vector<double> latents;
};

struct SampledGraph {
  SparseGraph graph;
  LatentAssignment latents;
};

/// Draws X_v ~ U[0,1] and joins each pair independently with probability
/// min(Q(X_u, X_v)/n, 1). Runs blockwise with geometric skipping over the
/// pairs of each block pair, O(n + |E|) expected time.
SampledGraph sample_graph(const StepGraphon& g, std::size_t n, std::uint64_t seed);

struct EdgeSplit {
  SparseGraph g1;
  SparseGraph g2;
};

/// Sends each edge to G1 with probability 1 - epsilon, else to G2. Both keep
/// the full vertex set.
EdgeSplit split_edges(const SparseGraph& g, double epsilon, std::uint64_t seed);

struct DegreeStats {
  double mean = 0.0;
  std::size_t max = 0;
  std::vector<std::size_t> histogram;
};

DegreeStats degree_stats(const SparseGraph& g);

/// Edge-list format: header "n m", then "u v" per line with u < v.
void write_edge_list(const SparseGraph& g, const std::filesystem::path& path);
SparseGraph read_edge_list(const std::filesystem::path& path);
void write_latents(const LatentAssignment& x, const std::filesystem::path& path);
LatentAssignment read_latents(const std::filesystem::path& path);

}  // namespace graphon
