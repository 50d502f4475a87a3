#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <optional>
#include <vector>

#include "hkflow/oracle.hpp"

namespace hkflow {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Rows of shift * Id - L_g, optionally bordered by a gauge row/column.
SpMat assemble(const MetricField& m, double shift, bool gauged) {
  const PeriodicGrid& g = m.grid();
  const int d = g.dim();
  const double h = g.spacing();
  const double inv_h2 = 1.0 / (h * h);
  const double inv_2h = 0.5 / h;
  const auto n = static_cast<Eigen::Index>(g.size());

  std::optional<ChristoffelField> gamma;
  if (m.kind() == HessianKind::LeviCivita) gamma = christoffel(m.base());

  std::vector<Triplet> trip;
  trip.reserve(g.size() * (1 + 2 * d + 2 * d * (d - 1)) + (gauged ? 2 * g.size() : 0));
  for (std::size_t c = 0; c < g.size(); ++c) {
    const auto row = static_cast<Eigen::Index>(c);
    const SmallSym inv = m.inverse().at(c);
    trip.emplace_back(row, row, shift);
    for (int i = 0; i < d; ++i) {
      const double a = inv(i, i) * inv_h2;
      trip.emplace_back(row, row, 2.0 * a);
      trip.emplace_back(row, static_cast<Eigen::Index>(g.neighbor(c, i, +1)), -a);
      trip.emplace_back(row, static_cast<Eigen::Index>(g.neighbor(c, i, -1)), -a);
      for (int j = i + 1; j < d; ++j) {
        // 2 g^{ij} times the cross stencil 1/(4h^2).
        const double b = 0.5 * inv(i, j) * inv_h2;
        trip.emplace_back(row, static_cast<Eigen::Index>(g.neighbor2(c, i, +1, j, +1)), -b);
        trip.emplace_back(row, static_cast<Eigen::Index>(g.neighbor2(c, i, +1, j, -1)), b);
        trip.emplace_back(row, static_cast<Eigen::Index>(g.neighbor2(c, i, -1, j, +1)), b);
        trip.emplace_back(row, static_cast<Eigen::Index>(g.neighbor2(c, i, -1, j, -1)), -b);
      }
    }
    if (gamma) {
      // + g^{ij} Gamma^k_ij d_k
      for (int k = 0; k < d; ++k) {
        double s = 0.0;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) s += inv(i, j) * (*gamma)(c, k, i, j);
        const double e = s * inv_2h;
        trip.emplace_back(row, static_cast<Eigen::Index>(g.neighbor(c, k, +1)), e);
        trip.emplace_back(row, static_cast<Eigen::Index>(g.neighbor(c, k, -1)), -e);
      }
    }
    if (gauged) {
      trip.emplace_back(row, n, 1.0);
      trip.emplace_back(n, row, 1.0);
    }
  }
  const Eigen::Index dim = gauged ? n + 1 : n;
  SpMat a(dim, dim);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

double row_norm(const SpMat& a) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(a.rows());
  for (Eigen::Index k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it) rows[it.row()] += std::abs(it.value());
  return rows.maxCoeff();
}

// Normwise backward error |b - Ax| / (|A| |x| + |b|) in the max norm, which
// stays meaningful when |b| is far below the roundoff level of A x.
Eigen::VectorXd solve_refined(const SpMat& a, const Eigen::VectorXd& b, double tol,
                              int max_iters) {
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw LinearSolveFailed(INFINITY, 0);
  const double anorm = row_norm(a);
  const double bnorm = b.lpNorm<Eigen::Infinity>();
  auto backward = [&](const Eigen::VectorXd& x) {
    return (b - a * x).lpNorm<Eigen::Infinity>() /
           (anorm * x.lpNorm<Eigen::Infinity>() + bnorm);
  };
  Eigen::VectorXd x = lu.solve(b);
  double rel = backward(x);
  int iters = 1;
  while (!(rel <= tol) && iters < max_iters) {
    x += lu.solve(b - a * x);
    rel = backward(x);
    ++iters;
  }
  if (!(rel <= tol)) throw LinearSolveFailed(rel, iters);
  return x;
}

bool all_zero(const ScalarField& u) {
  for (double v : u.values())
    if (v != 0.0) return false;
  return true;
}

}  // namespace

ScalarField linear_solve(const MetricField& m, double shift, const ScalarField& rhs,
                         double tol, int max_iters) {
  require_same_grid(m.grid(), rhs.grid(), "linear_solve");
  if (shift < 0.0) throw LinearSolveFailed(INFINITY, 0);
  if (shift == 0.0) return linear_solve_gauged(m, rhs, tol, max_iters).u;
  if (all_zero(rhs)) return ScalarField(rhs.grid(), 0.0);

  const SpMat a = assemble(m, shift, false);
  const Eigen::Map<const Eigen::VectorXd> b(rhs.values().data(),
                                            static_cast<Eigen::Index>(rhs.size()));
  const Eigen::VectorXd x = solve_refined(a, b, tol, max_iters);
  return ScalarField(rhs.grid(), std::vector<double>(x.data(), x.data() + x.size()));
}

GaugedSolution linear_solve_gauged(const MetricField& m, const ScalarField& rhs, double tol,
                                   int max_iters) {
  require_same_grid(m.grid(), rhs.grid(), "linear_solve_gauged");
  if (all_zero(rhs)) return {ScalarField(rhs.grid(), 0.0), 0.0};

  const SpMat a = assemble(m, 0.0, true);
  const auto n = static_cast<Eigen::Index>(rhs.size());
  Eigen::VectorXd b(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) b[i] = rhs[static_cast<std::size_t>(i)];
  b[n] = 0.0;
  const Eigen::VectorXd x = solve_refined(a, b, tol, max_iters);
  return {ScalarField(rhs.grid(), std::vector<double>(x.data(), x.data() + n)), x[n]};
}

}  // namespace hkflow
