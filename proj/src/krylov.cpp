#include "graphon/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <lapacke.h>

#include "graphon/rng.hpp"

namespace graphon {

namespace {

bool magnitude_before(const std::complex<double>& a, const std::complex<double>& b) {
  const double ma = std::abs(a);
  const double mb = std::abs(b);
  if (ma != mb) return ma > mb;
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

class Arnoldi {
 public:
  Arnoldi(const LinearOperator& op, std::size_t m, std::uint64_t seed)
      : op_(op),
        dim_(op.size()),
        m_(m),
        V_(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(m + 1)),
        H_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m + 1), static_cast<Eigen::Index>(m))),
        rng_(make_engine(seed, "krylov-start")) {
    V_.col(0) = random_orthogonal(0);
  }

  // Extends the decomposition A V_k = V_k H_k + v_k b^T from k to m columns.
  void expand(std::size_t k) {
    Eigen::VectorXd w(static_cast<Eigen::Index>(dim_));
    for (std::size_t j = k; j < m_; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      op_.apply({V_.col(jj).data(), dim_}, {w.data(), dim_});
      ++matvecs_;
      const double w_norm = w.norm();
      auto basis = V_.leftCols(jj + 1);
      Eigen::VectorXd h = basis.transpose() * w;
      w.noalias() -= basis * h;
      // One reorthogonalization pass (DGKS) is enough in double precision.
      const Eigen::VectorXd h2 = basis.transpose() * w;
      w.noalias() -= basis * h2;
      h += h2;
      H_.col(jj).head(jj + 1) = h;
      const double beta = w.norm();
      if (j + 1 == dim_) {
        H_(jj + 1, jj) = 0.0;
        V_.col(jj + 1).setZero();
        complete_ = true;
        return;
      }
      if (beta <= 1e-12 * std::max(w_norm, 1e-300)) {
        // Invariant subspace: continue from a fresh direction.
        H_(jj + 1, jj) = 0.0;
        V_.col(jj + 1) = random_orthogonal(j + 1);
      } else {
        H_(jj + 1, jj) = beta;
        V_.col(jj + 1) = w / beta;
      }
    }
  }

  // Krylov-Schur restart keeping `keep` leading Schur vectors (adjusted to
  // avoid splitting a conjugate pair). Returns the new decomposition size.
  std::size_t restart(std::size_t keep) {
    const auto m = static_cast<lapack_int>(m_);
    Eigen::MatrixXd T = H_.topLeftCorner(m, m);
    Eigen::MatrixXd Z(m, m);
    std::vector<double> wr(m_), wi(m_);
    lapack_int sdim = 0;
    lapack_int info = LAPACKE_dgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, m, T.data(), m, &sdim,
                                    wr.data(), wi.data(), Z.data(), m);
    if (info != 0) throw Error("Schur decomposition failed (dgees info " + std::to_string(info) + ")");

    std::vector<std::size_t> order(m_);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return magnitude_before({wr[a], wi[a]}, {wr[b], wi[b]});
    });
    lapack_int selected = 0;
    for (;;) {
      std::vector<lapack_logical> select(m_, 0);
      for (std::size_t i = 0; i < keep; ++i) select[order[i]] = 1;
      Eigen::MatrixXd Tw = T;
      Eigen::MatrixXd Zw = Z;
      std::vector<double> wr2(m_), wi2(m_);
      double s = 0.0;
      double sep = 0.0;
      // Direct Fortran call: LAPACKE_dtrsen leaves IWORK null for JOB = 'N',
      // which some reference LAPACK builds still write to.
      lapack_int lwork = std::max<lapack_int>(1, m);
      lapack_int liwork = std::max<lapack_int>(1, m);
      std::vector<double> work(static_cast<std::size_t>(lwork));
      std::vector<lapack_int> iwork(static_cast<std::size_t>(liwork));
      const char job = 'N';
      const char compq = 'V';
      LAPACK_dtrsen(&job, &compq, select.data(), &m, Tw.data(), &m, Zw.data(), &m, wr2.data(),
                    wi2.data(), &selected, &s, &sep, work.data(), &lwork, iwork.data(), &liwork,
                    &info);
      if (info != 0) throw Error("Schur reordering failed (dtrsen info " + std::to_string(info) + ")");
      if (selected < m || keep <= 1) {
        T = std::move(Tw);
        Z = std::move(Zw);
        break;
      }
      --keep;
    }

    const Eigen::Index p = selected;
    const double beta = H_(m, m - 1);
    V_.leftCols(p) = V_.leftCols(m) * Z.leftCols(p);
    V_.col(p) = V_.col(m);
    const Eigen::RowVectorXd b = beta * Z.row(m - 1).head(p);
    H_.setZero();
    H_.topLeftCorner(p, p) = T.topLeftCorner(p, p);
    H_.row(p).head(p) = b;
    return static_cast<std::size_t>(p);
  }

  const Eigen::MatrixXd& H() const { return H_; }
  const Eigen::MatrixXd& V() const { return V_; }
  std::size_t matvecs() const { return matvecs_; }
  bool complete() const { return complete_; }

 private:
  Eigen::VectorXd random_orthogonal(std::size_t k) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim_));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = standard_normal(rng_);
    if (k > 0) {
      auto basis = V_.leftCols(static_cast<Eigen::Index>(k));
      for (int pass = 0; pass < 2; ++pass) v -= basis * (basis.transpose() * v);
    }
    return v / v.norm();
  }

  const LinearOperator& op_;
  std::size_t dim_;
  std::size_t m_;
  Eigen::MatrixXd V_;
  Eigen::MatrixXd H_;
  Engine rng_;
  std::size_t matvecs_ = 0;
  bool complete_ = false;
};

struct RitzData {
  std::vector<std::complex<double>> values;
  std::vector<Eigen::VectorXcd> vectors;
  std::vector<double> residuals;
};

RitzData ritz(const Eigen::MatrixXd& H, std::size_t m) {
  const auto mm = static_cast<Eigen::Index>(m);
  Eigen::EigenSolver<Eigen::MatrixXd> es(H.topLeftCorner(mm, mm), true);
  if (es.info() != Eigen::Success) throw Error("projected eigenproblem failed");
  std::vector<Eigen::Index> order(m);
  std::iota(order.begin(), order.end(), 0);
  const auto ev = es.eigenvalues();
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return magnitude_before(ev(a), ev(b)); });
  RitzData out;
  const double beta = std::abs(H(mm, mm - 1));
  for (Eigen::Index i : order) {
    out.values.push_back(ev(i));
    Eigen::VectorXcd y = es.eigenvectors().col(i);
    y.normalize();
    out.residuals.push_back(beta * std::abs(y(mm - 1)));
    out.vectors.push_back(std::move(y));
  }
  return out;
}

}  // namespace

void sort_by_magnitude(std::vector<std::complex<double>>& values) {
  std::sort(values.begin(), values.end(), magnitude_before);
}

KrylovResult krylov_schur(const LinearOperator& op, const KrylovOptions& opt) {
  const std::size_t dim = op.size();
  if (dim == 0) throw InvalidArgument("operator has dimension 0");
  const std::size_t m = std::min(std::max<std::size_t>(opt.krylov_dim, 3), dim);
  Arnoldi arnoldi(op, m, opt.seed);

  KrylovResult result;
  std::size_t k = 0;
  std::size_t wanted = opt.min_wanted;
  for (std::size_t restart = 0;; ++restart) {
    arnoldi.expand(k);
    RitzData rz = ritz(arnoldi.H(), m);

    wanted = std::max(opt.min_wanted, opt.wanted ? opt.wanted(rz.values) : std::size_t{0});
    wanted = std::min(wanted, m);
    // Never split a conjugate pair.
    if (wanted > 0 && wanted < m && rz.values[wanted - 1].imag() != 0.0 &&
        rz.values[wanted] == std::conj(rz.values[wanted - 1]))
      ++wanted;
    const std::size_t guarded = std::min(m, wanted + opt.guard);

    bool done = arnoldi.complete();
    if (!done) {
      done = true;
      for (std::size_t i = 0; i < guarded && done; ++i) {
        const double scale = std::max(std::abs(rz.values[i]), 1e-12);
        const double tol = i < wanted ? opt.tol : opt.guard_tol;
        done = rz.residuals[i] <= tol * scale;
      }
    }

    if (done || restart >= opt.max_restarts) {
      const auto mm = static_cast<Eigen::Index>(m);
      result.values.assign(rz.values.begin(), rz.values.begin() + static_cast<std::ptrdiff_t>(wanted));
      result.residual_estimates.assign(rz.residuals.begin(),
                                       rz.residuals.begin() + static_cast<std::ptrdiff_t>(wanted));
      result.ritz_values = rz.values;
      result.vectors.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(wanted));
      for (std::size_t i = 0; i < wanted; ++i) {
        Eigen::VectorXd x = arnoldi.V().leftCols(mm) * rz.vectors[i].real();
        const double nrm = x.norm();
        if (nrm > 0) x /= nrm;
        result.vectors.col(static_cast<Eigen::Index>(i)) = x;
      }
      result.restarts = restart;
      result.matvecs = arnoldi.matvecs();
      result.converged = done;
      if (!done)
        throw ConvergenceError("Krylov-Schur did not converge in " +
                                   std::to_string(opt.max_restarts) + " restarts",
                               std::move(result));
      return result;
    }

    const std::size_t keep = std::clamp(guarded + (m - guarded) / 2, std::size_t{1}, m - 1);
    k = arnoldi.restart(keep);
  }
}

}  // namespace graphon
