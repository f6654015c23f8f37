#include "graphon/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "graphon/error.hpp"
#include "graphon/rng.hpp"

namespace graphon {

SparseGraph::SparseGraph(std::size_t n, std::vector<Edge> edges)
    : n_(n), edges_(std::move(edges)) {
  if (n_ > std::numeric_limits<Vertex>::max())
    throw InvalidArgument("vertex count exceeds the 32-bit vertex id range");
  for (auto& [u, v] : edges_) {
    if (u == v) throw InvalidArgument("self-loop at vertex " + std::to_string(u));
    if (u >= n_ || v >= n_) throw InvalidArgument("edge endpoint out of range");
    if (u > v) std::swap(u, v);
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
    throw InvalidArgument("duplicate edge");

  offsets_.assign(n_ + 1, 0);
  for (const auto& [u, v] : edges_) {
    ++offsets_[u + 1];
    ++offsets_[v + 1];
  }
  for (std::size_t v = 0; v < n_; ++v) offsets_[v + 1] += offsets_[v];
  neighbors_.resize(offsets_[n_]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  // Edges are sorted, so each vertex receives its lower neighbors in order
  // before its upper neighbors, also in order.
  for (const auto& [u, v] : edges_) neighbors_[fill[v]++] = u;
  for (const auto& [u, v] : edges_) neighbors_[fill[u]++] = v;
  for (std::size_t v = 0; v < n_; ++v)
    std::sort(neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
              neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]));
}

bool SparseGraph::adjacent(Vertex u, Vertex v) const {
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

namespace {

// Number of failures before the next success of Bernoulli(p) trials.
std::uint64_t geometric_skip(Engine& rng, double log_q) {
  const double u = 1.0 - uniform01(rng);  // (0, 1]
  const double k = std::floor(std::log(u) / log_q);
  if (!(k < 9.0e18)) return std::numeric_limits<std::uint64_t>::max() / 2;
  return static_cast<std::uint64_t>(k);
}

}  // namespace

SampledGraph sample_graph(const StepGraphon& g, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("sample_graph needs n >= 2");
  SampledGraph out;
  auto& x = out.latents.latents;
  x.resize(n);
  Engine latent_rng = make_engine(seed, "latents");
  for (auto& xv : x) xv = uniform01(latent_rng);

  const std::size_t k = g.blocks();
  std::vector<std::vector<Vertex>> bucket(k);
  for (std::size_t v = 0; v < n; ++v) bucket[g.block_of(x[v])].push_back(static_cast<Vertex>(v));

  std::vector<Edge> edges;
  const double nd = static_cast<double>(n);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a; b < k; ++b) {
      const double p = std::min(g.values()(static_cast<Eigen::Index>(a),
                                           static_cast<Eigen::Index>(b)) / nd, 1.0);
      if (p <= 0.0) continue;
      Engine rng = make_engine(seed, "edges", a * k + b);
      const double log_q = std::log1p(-p);
      const auto& ba = bucket[a];
      const auto& bb = bucket[b];
      auto next = [&]() -> std::uint64_t { return p >= 1.0 ? 0 : geometric_skip(rng, log_q); };
      if (a == b) {
        // Pairs (row, col) with col < row, walked in row-major order.
        const std::uint64_t s = ba.size();
        std::uint64_t row = 1;
        std::uint64_t col = next();
        while (row < s) {
          while (col >= row && row < s) {
            col -= row;
            ++row;
          }
          if (row >= s) break;
          edges.emplace_back(ba[col], ba[row]);
          col += 1 + next();
        }
      } else {
        const std::uint64_t total = static_cast<std::uint64_t>(ba.size()) * bb.size();
        for (std::uint64_t idx = next(); idx < total; idx += 1 + next())
          edges.emplace_back(ba[idx / bb.size()], bb[idx % bb.size()]);
      }
    }
  }
  out.graph = SparseGraph(n, std::move(edges));
  return out;
}

EdgeSplit split_edges(const SparseGraph& g, double epsilon, std::uint64_t seed) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0,1)");
  Engine rng = make_engine(seed, "split");
  std::vector<Edge> e1;
  std::vector<Edge> e2;
  e1.reserve(g.num_edges());
  for (const auto& e : g.edges()) {
    if (uniform01(rng) < 1.0 - epsilon)
      e1.push_back(e);
    else
      e2.push_back(e);
  }
  return {SparseGraph(g.num_vertices(), std::move(e1)),
          SparseGraph(g.num_vertices(), std::move(e2))};
}

DegreeStats degree_stats(const SparseGraph& g) {
  DegreeStats st;
  const std::size_t n = g.num_vertices();
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t d = g.degree(static_cast<Vertex>(v));
    st.max = std::max(st.max, d);
    if (st.histogram.size() <= d) st.histogram.resize(d + 1, 0);
    ++st.histogram[d];
  }
  st.mean = n == 0 ? 0.0 : 2.0 * static_cast<double>(g.num_edges()) / static_cast<double>(n);
  return st;
}

void write_edge_list(const SparseGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << g.num_vertices() << ' ' << g.num_edges() << '\n';
  for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

SparseGraph read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  std::size_t n = 0;
  std::size_t m = 0;
  if (!std::getline(in, line) || !(std::istringstream(line) >> n >> m))
    throw ParseError(path.string() + ":1", "expected header 'n m'");
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::string where = path.string() + ":" + std::to_string(i + 2);
    if (!std::getline(in, line)) throw ParseError(where, "missing edge line");
    std::istringstream ls(line);
    std::uint64_t u = 0;
    std::uint64_t v = 0;
    if (!(ls >> u >> v)) throw ParseError(where, "expected 'u v'");
    if (u >= v || v >= n) throw ParseError(where, "edge must satisfy u < v < n");
    edges.emplace_back(static_cast<Vertex>(u), static_cast<Vertex>(v));
  }
  return SparseGraph(n, std::move(edges));
}

void write_latents(const LatentAssignment& x, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  for (double v : x.latents) out << v << '\n';
}

LatentAssignment read_latents(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  LatentAssignment x;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    double v = 0.0;
    if (!(ls >> v) || v < 0.0 || v > 1.0)
      throw ParseError(path.string() + ":" + std::to_string(lineno), "expected a latent in [0,1]");
    x.latents.push_back(v);
  }
  return x;
}

}  // namespace graphon
