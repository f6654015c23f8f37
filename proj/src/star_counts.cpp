#include "graphon/star_counts.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "graphon/error.hpp"
#include "graphon/parallel.hpp"

namespace graphon {

using nlohmann::json;

unsigned order(const MultiIndex& alpha) {
  unsigned total = 0;
  for (unsigned a : alpha) total += a;
  return total;
}

std::vector<unsigned> leaf_labels(const MultiIndex& alpha) {
  std::vector<unsigned> labels;
  for (std::size_t i = 0; i < alpha.size(); ++i) labels.insert(labels.end(), alpha[i], static_cast<unsigned>(i));
  return labels;
}

MultiIndexGrid::MultiIndexGrid(std::size_t K, unsigned N) : K_(K), N_(N), strides_(K) {
  for (std::size_t i = K; i-- > 0;) {
    strides_[i] = size_;
    size_ *= N + 1;
  }
}

std::size_t MultiIndexGrid::index(const MultiIndex& alpha) const {
  if (alpha.size() != K_) throw InvalidArgument("multi-index has the wrong dimension");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < K_; ++i) {
    if (alpha[i] > N_) throw InvalidArgument("multi-index exceeds the grid cap");
    idx += alpha[i] * strides_[i];
  }
  return idx;
}

MultiIndex MultiIndexGrid::at(std::size_t idx) const {
  MultiIndex alpha(K_);
  for (std::size_t i = 0; i < K_; ++i) {
    alpha[i] = static_cast<unsigned>(idx / strides_[i]);
    idx %= strides_[i];
  }
  return alpha;
}

double count_pair(const SparseGraph& g2, const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (static_cast<std::size_t>(b.size()) != g2.num_vertices())
    throw InvalidArgument("aggregate length differs from the vertex count");
  double sum = 0.0;
  for (const auto& [u, v] : g2.edges()) sum += b(u) * b(v);
  return 2.0 * sum;
}

double normalize_pair(double a_kk, double epsilon, double lambda_k) {
  if (lambda_k == 0.0) throw InvalidArgument("lambda_k must be nonzero");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  return a_kk / (epsilon * lambda_k);
}

namespace {

// Set partitions of {0..L-1} as restricted growth strings.
std::vector<std::vector<unsigned>> set_partitions(unsigned L) {
  std::vector<std::vector<unsigned>> out;
  if (L == 0) return {{}};
  std::vector<unsigned> a(L, 0), b(L, 1);
  for (;;) {
    out.push_back(a);
    unsigned j = L - 1;
    while (j > 0 && a[j] == b[j]) --j;
    if (j == 0) break;
    ++a[j];
    for (unsigned i = j + 1; i < L; ++i) {
      a[i] = 0;
      b[i] = std::max(b[i - 1], a[i - 1] + 1);
    }
  }
  return out;
}

double factorial(unsigned k) {
  double f = 1.0;
  for (unsigned i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

double count_star(const SparseGraph& g2, const MultiIndex& alpha,
                  const Eigen::MatrixXd& aggregates) {
  const std::size_t K = alpha.size();
  if (static_cast<std::size_t>(aggregates.cols()) < K ||
      static_cast<std::size_t>(aggregates.rows()) != g2.num_vertices())
    throw InvalidArgument("aggregates do not match the graph and multi-index");
  const unsigned L = order(alpha);
  const std::size_t n = g2.num_vertices();
  if (L == 0) return static_cast<double>(n);
  const auto labels = leaf_labels(alpha);

  // Each partition becomes a coefficient and a list of block signatures;
  // a block's power sum depends only on how many leaves of each label it holds.
  std::map<MultiIndex, std::size_t> signature_ids;
  std::vector<MultiIndex> signatures;
  struct Term {
    double coefficient;
    std::vector<std::size_t> blocks;
  };
  std::vector<Term> terms;
  for (const auto& rgs : set_partitions(L)) {
    const unsigned nblocks = *std::max_element(rgs.begin(), rgs.end()) + 1;
    std::vector<MultiIndex> beta(nblocks, MultiIndex(K, 0));
    for (unsigned l = 0; l < L; ++l) ++beta[rgs[l]][labels[l]];
    Term t{1.0, {}};
    for (const auto& b : beta) {
      const unsigned size = order(b);
      t.coefficient *= ((size - 1) % 2 ? -1.0 : 1.0) * factorial(size - 1);
      auto [it, inserted] = signature_ids.try_emplace(b, signatures.size());
      if (inserted) signatures.push_back(b);
      t.blocks.push_back(it->second);
    }
    terms.push_back(std::move(t));
  }

  const std::size_t chunk = 4096;
  std::vector<double> partial(chunk_count(n, chunk), 0.0);
  for_each_chunk(n, chunk, [&](std::size_t begin, std::size_t end, std::size_t c) {
    std::vector<double> S(signatures.size());
    double acc = 0.0;
    for (std::size_t w = begin; w < end; ++w) {
      const auto nb = g2.neighbors(static_cast<Vertex>(w));
      if (nb.size() < L) continue;  // no injective tuple exists
      std::fill(S.begin(), S.end(), 0.0);
      for (Vertex j : nb)
        for (std::size_t s = 0; s < signatures.size(); ++s) {
          double prod = 1.0;
          for (std::size_t i = 0; i < K; ++i)
            for (unsigned r = 0; r < signatures[s][i]; ++r) prod *= aggregates(j, static_cast<Eigen::Index>(i));
          S[s] += prod;
        }
      double center = 0.0;
      for (const auto& t : terms) {
        double prod = t.coefficient;
        for (std::size_t b : t.blocks) prod *= S[b];
        center += prod;
      }
      acc += center;
    }
    partial[c] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double normalize_star(double a_alpha, const MultiIndex& alpha, std::size_t n, double epsilon,
                      const std::vector<double>& lambdas, const std::vector<double>& p_diag) {
  if (lambdas.size() < alpha.size() || p_diag.size() < alpha.size())
    throw InvalidArgument("normalization needs one lambda and one P_kk per coordinate");
  const unsigned L = order(alpha);
  double denom = std::pow(epsilon, static_cast<double>(L));
  for (std::size_t i = 0; i < alpha.size(); ++i)
    denom *= std::pow(std::sqrt(p_diag[i]) * lambdas[i], static_cast<double>(alpha[i]));
  return a_alpha * std::pow(static_cast<double>(n), 0.5 * L - 1.0) / denom;
}

double MomentTable::at(const MultiIndex& alpha) const {
  return entries.at(MultiIndexGrid(K, N).index(alpha));
}

MomentTable moment_table(const SparseGraph& g2, const Eigen::MatrixXd& aggregates,
                         const std::vector<double>& lambdas, double epsilon, unsigned N,
                         const MomentTableOptions& options) {
  const std::size_t K = static_cast<std::size_t>(aggregates.cols());
  const std::size_t n = g2.num_vertices();
  if (N < 1) throw InvalidArgument("moment table needs N >= 1");
  if (lambdas.size() != K) throw InvalidArgument("one lambda per aggregate column expected");
  if (static_cast<std::size_t>(aggregates.rows()) != n)
    throw InvalidArgument("aggregates do not match the graph");
  double cells = 1.0;
  for (std::size_t i = 0; i < K; ++i) cells *= N + 1.0;
  if (cells > static_cast<double>(options.max_entries))
    throw MemoryGuard("moment table with K = " + std::to_string(K) + ", N = " + std::to_string(N) +
                      " has " + std::to_string(cells) + " entries, cap is " +
                      std::to_string(options.max_entries));

  MomentTable table;
  table.K = K;
  table.N = N;
  table.n = n;
  table.epsilon = epsilon;
  table.lambdas = lambdas;
  const MultiIndexGrid grid(K, N);
  table.entries.assign(grid.size(), 0.0);

  table.valid = true;
  for (std::size_t k = 0; k < K; ++k) {
    const double a = count_pair(g2, aggregates.col(static_cast<Eigen::Index>(k)));
    table.pair_diagonal.push_back(normalize_pair(a, epsilon, lambdas[k]));
    if (!(table.pair_diagonal.back() > 0.0)) table.valid = false;
  }
  if (!table.valid) return table;

  std::vector<std::vector<unsigned>> digits(grid.size());
  for (std::size_t idx = 0; idx < grid.size(); ++idx) digits[idx] = grid.at(idx);

  const std::size_t chunk = options.chunk_size;
  const std::size_t chunks = chunk_count(n, chunk);
  std::vector<std::vector<double>> partial(chunks);
  for_each_chunk(n, chunk, [&](std::size_t begin, std::size_t end, std::size_t c) {
    std::vector<double> acc(grid.size(), 0.0);
    std::vector<double> coef(grid.size());
    for (std::size_t w = begin; w < end; ++w) {
      std::fill(coef.begin(), coef.end(), 0.0);
      coef[0] = 1.0;
      for (Vertex j : g2.neighbors(static_cast<Vertex>(w))) {
        // Multiply by (1 + sum_i t_i B_i(j)), truncated at degree N per axis.
        // Descending order keeps the lower-index inputs untouched.
        for (std::size_t idx = grid.size(); idx-- > 1;) {
          double add = 0.0;
          for (std::size_t i = 0; i < K; ++i)
            if (digits[idx][i] > 0) add += aggregates(j, static_cast<Eigen::Index>(i)) * coef[idx - grid.stride(i)];
          coef[idx] += add;
        }
      }
      for (std::size_t idx = 0; idx < grid.size(); ++idx) acc[idx] += coef[idx];
    }
    partial[c] = std::move(acc);
  });

  std::vector<double> A(grid.size(), 0.0);
  for (const auto& p : partial)
    for (std::size_t idx = 0; idx < grid.size(); ++idx) A[idx] += p[idx];
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    double multiplicity = 1.0;
    for (unsigned a : digits[idx]) multiplicity *= factorial(a);
    table.entries[idx] = normalize_star(multiplicity * A[idx], digits[idx], n, epsilon, lambdas,
                                        table.pair_diagonal);
  }
  return table;
}

void to_json(json& j, const MomentTable& t) {
  json entries = json::array();
  const MultiIndexGrid grid(t.K, t.N);
  for (std::size_t idx = 0; idx < t.entries.size(); ++idx)
    entries.push_back(json{{"alpha", grid.at(idx)}, {"value", t.entries[idx]}});
  j = json{{"K", t.K},
           {"N", t.N},
           {"n", t.n},
           {"epsilon", t.epsilon},
           {"lambdas", t.lambdas},
           {"valid", t.valid},
           {"P_diag", t.pair_diagonal},
           {"entries", entries}};
}

MomentTable moment_table_from_json(const json& j) {
  MomentTable t;
  try {
    t.K = j.at("K").get<std::size_t>();
    t.N = j.at("N").get<unsigned>();
    t.n = j.at("n").get<std::size_t>();
    t.epsilon = j.at("epsilon").get<double>();
    t.lambdas = j.at("lambdas").get<std::vector<double>>();
    t.valid = j.at("valid").get<bool>();
    t.pair_diagonal = j.at("P_diag").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ParseError("moment table", e.what());
  }
  const MultiIndexGrid grid(t.K, t.N);
  t.entries.assign(grid.size(), 0.0);
  const auto& entries = j.at("entries");
  if (entries.size() != grid.size())
    throw ParseError("moment table.entries", "expected " + std::to_string(grid.size()) + " entries");
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto alpha = entries[e].at("alpha").get<MultiIndex>();
    t.entries[grid.index(alpha)] = entries[e].at("value").get<double>();
  }
  return t;
}

}  // namespace graphon
