#include "hkflow/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace hkflow {

namespace {

SymTensorField pointwise_inverse(const SymTensorField& t) {
  SymTensorField out(t.grid());
  for (std::size_t c = 0; c < t.grid().size(); ++c) out.set(c, t.at(c).inverse());
  return out;
}

// d_m t_ab for every component, central differences.
// Layout: [cell][m][packed ab].
std::vector<double> tensor_gradient(const SymTensorField& t) {
  const PeriodicGrid& g = t.grid();
  const int d = g.dim();
  const int nc = t.components();
  const double inv_2h = 0.5 / g.spacing();
  std::vector<double> out(g.size() * d * nc);
  const auto data = t.data();
  for (std::size_t c = 0; c < g.size(); ++c)
    for (int m = 0; m < d; ++m) {
      const std::size_t p = g.neighbor(c, m, +1), q = g.neighbor(c, m, -1);
      for (int k = 0; k < nc; ++k)
        out[(c * d + m) * nc + k] = (data[p * nc + k] - data[q * nc + k]) * inv_2h;
    }
  return out;
}

bool is_constant(const SymTensorField& t) {
  const SmallSym m = t.mean();
  const double scale = std::max(1.0, t.max_abs());
  for (std::size_t c = 0; c < t.grid().size(); ++c) {
    const SmallSym v = t.at(c);
    for (int k = 0; k < t.components(); ++k)
      if (std::abs(v.c[k] - m.c[k]) > 1e-12 * scale) return false;
  }
  return true;
}

}  // namespace

MetricField::MetricField(SymTensorField base, ScalarField potential,
                         SymTensorField assembled, HessianKind kind)
    : base_(std::move(base)),
      potential_(std::move(potential)),
      assembled_(std::move(assembled)),
      inverse_(assembled_.grid()),
      min_eig_(0.0),
      kind_(kind) {
  const SpdReport spd = spd_check(assembled_);
  if (!spd.ok) throw NotPositiveDefinite(spd.min_eig);
  min_eig_ = spd.min_eig;
  inverse_ = pointwise_inverse(assembled_);
}

MetricField assemble_metric(const SymTensorField& base, const ScalarField& potential) {
  require_same_grid(base.grid(), potential.grid(), "assemble_metric");
  SymTensorField g = base + discrete_hessian(potential);
  return MetricField(base, potential, std::move(g), HessianKind::Affine);
}

MetricField assemble_riemannian_metric(const SymTensorField& base,
                                       const ScalarField& potential) {
  require_same_grid(base.grid(), potential.grid(), "assemble_riemannian_metric");
  SymTensorField g = base + levi_civita_hessian(base, potential);
  return MetricField(base, potential, std::move(g), HessianKind::LeviCivita);
}

// ----------------------------------------------------------- ChristoffelField

ChristoffelField::ChristoffelField(PeriodicGrid grid)
    : grid_(std::move(grid)),
      data_(grid_.size() * grid_.dim() * grid_.dim() * grid_.dim(), 0.0) {}

double ChristoffelField::contraction(std::size_t cell, int i) const {
  double s = 0.0;
  for (int k = 0; k < grid_.dim(); ++k) s += (*this)(cell, k, k, i);
  return s;
}

double ChristoffelField::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

// ------------------------------------------------------------------ operators

KoszulData koszul_forms(const MetricField& m) {
  const PeriodicGrid& g = m.grid();
  std::vector<double> ld(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) ld[c] = std::log(m.assembled().at(c).det());
  ScalarField log_det(g, std::move(ld));

  VectorField alpha = discrete_gradient(log_det);
  for (std::size_t c = 0; c < g.size(); ++c)
    for (int k = 0; k < g.dim(); ++k) alpha(c, k) *= 0.5;
  SymTensorField kappa = 0.5 * discrete_hessian(log_det);
  SymTensorField beta = -2.0 * kappa;
  return KoszulData{std::move(alpha), std::move(kappa), std::move(beta), std::move(log_det)};
}

ScalarField elliptic_apply(const MetricField& m, const ScalarField& u) {
  require_same_grid(m.grid(), u.grid(), "elliptic_apply");
  const SymTensorField hess = m.kind() == HessianKind::Affine
                                  ? discrete_hessian(u)
                                  : levi_civita_hessian(christoffel(m.base()), u);
  std::vector<double> v(u.size());
  for (std::size_t c = 0; c < u.size(); ++c)
    v[c] = trace_with_inverse(m.inverse().at(c), hess.at(c));
  return ScalarField(u.grid(), std::move(v));
}

ChristoffelField christoffel(const SymTensorField& g) {
  const PeriodicGrid& grid = g.grid();
  const int d = grid.dim();
  const int nc = g.components();
  const std::vector<double> dg = tensor_gradient(g);
  auto dgc = [&](std::size_t c, int m, int a, int b) {
    return dg[(c * d + m) * nc + packed_index(d, a, b)];
  };
  ChristoffelField out(grid);
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const SmallSym inv = g.at(c).inverse();
    for (int j = 0; j < d; ++j)
      for (int k = j; k < d; ++k) {
        // Lowered symbols Gamma_{l jk}.
        std::array<double, 3> low{};
        for (int l = 0; l < d; ++l)
          low[l] = 0.5 * (dgc(c, j, l, k) + dgc(c, k, l, j) - dgc(c, l, j, k));
        for (int i = 0; i < d; ++i) {
          double s = 0.0;
          for (int l = 0; l < d; ++l) s += inv(i, l) * low[l];
          out(c, i, j, k) = s;
          out(c, i, k, j) = s;
        }
      }
  }
  return out;
}

ChristoffelField gamma_tensor(const MetricField& m) { return christoffel(m.assembled()); }

double hessian_curvature(const MetricField& m) {
  const PeriodicGrid& grid = m.grid();
  const int d = grid.dim();
  if (d == 1) return 0.0;
  if (!is_constant(m.base()))
    throw InvalidField("hessian_curvature needs a constant base tensor");

  const int nc = grid.tensor_components();
  const SymTensorField hess = discrete_hessian(m.potential());
  // phi_{ikp} = D_p (Hess phi)_{ik}
  const std::vector<double> third = tensor_gradient(hess);
  auto phi3 = [&](std::size_t c, int i, int k, int p) {
    return third[(c * d + p) * nc + packed_index(d, i, k)];
  };
  // phi_{ijkl} = (Hess (Hess phi)_{ij})_{kl}
  std::vector<SymTensorField> fourth;
  fourth.reserve(nc);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) fourth.push_back(discrete_hessian(component(hess, i, j)));
  auto phi4 = [&](std::size_t c, int i, int j, int k, int l) {
    return fourth[packed_index(d, i, j)](c, k, l);
  };

  const ChristoffelField gamma = gamma_tensor(m);
  double worst = 0.0;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const SmallSym g = m.assembled().at(c);
    const SmallSym ginv = m.inverse().at(c);
    auto q = [&](int i, int j, int k, int l) {
      double s = 0.0;
      for (int p = 0; p < d; ++p)
        for (int r = 0; r < d; ++r) s += ginv(p, r) * phi3(c, i, k, p) * phi3(c, j, l, r);
      return 0.5 * phi4(c, i, j, k, l) - 0.5 * s;
    };
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l) {
            // R_ijkl = g_ia (gamma^a_lm gamma^m_jk - gamma^a_km gamma^m_jl)
            double r = 0.0;
            for (int a = 0; a < d; ++a) {
              double up = 0.0;
              for (int mm = 0; mm < d; ++mm)
                up += gamma(c, a, l, mm) * gamma(c, mm, j, k) -
                      gamma(c, a, k, mm) * gamma(c, mm, j, l);
              r += g(i, a) * up;
            }
            const double target = 0.5 * (q(i, j, k, l) - q(j, i, k, l));
            worst = std::max(worst, std::abs(r - target));
          }
  }
  return worst;
}

ShimaPair shima_residual(const MetricField& m) {
  const PeriodicGrid& grid = m.grid();
  const KoszulData kd = koszul_forms(m);
  std::vector<double> tr(grid.size()), norm(grid.size()), vol(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const SmallSym inv = m.inverse().at(c);
    tr[c] = trace_with_inverse(inv, kd.kappa.at(c));
    double s = 0.0;
    for (int i = 0; i < grid.dim(); ++i)
      for (int j = 0; j < grid.dim(); ++j) s += inv(i, j) * kd.alpha(c, i) * kd.alpha(c, j);
    norm[c] = s;
    vol[c] = std::sqrt(m.assembled().at(c).det());
  }
  const ScalarField w(grid, std::move(vol));
  return {integrate(ScalarField(grid, std::move(tr)), w),
          integrate(ScalarField(grid, std::move(norm)), w)};
}

SymTensorField levi_civita_hessian(const ChristoffelField& gamma, const ScalarField& u) {
  require_same_grid(gamma.grid(), u.grid(), "levi_civita_hessian");
  const PeriodicGrid& grid = u.grid();
  const int d = grid.dim();
  SymTensorField out = discrete_hessian(u);
  const VectorField du = discrete_gradient(u);
  for (std::size_t c = 0; c < grid.size(); ++c)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) s += gamma(c, k, i, j) * du(c, k);
        out(c, i, j) -= s;
      }
  return out;
}

SymTensorField levi_civita_hessian(const SymTensorField& g, const ScalarField& u) {
  const SpdReport spd = spd_check(g);
  if (!spd.ok) throw NotPositiveDefinite(spd.min_eig);
  return levi_civita_hessian(christoffel(g), u);
}

namespace {

// Largest generalized eigenvalue of (e, g) for SPD g, via Cholesky.
double max_generalized_eigenvalue(const SmallSym& g, const SmallSym& e) {
  const int d = g.dim;
  double l[3][3] = {};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = g(i, j);
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = (i == j) ? std::sqrt(s) : s / l[j][j];
    }
  // w = L^{-1} E, then M = w L^{-T} = L^{-1} (L^{-1} E)^T.
  double w[3][3] = {};
  for (int col = 0; col < d; ++col)
    for (int i = 0; i < d; ++i) {
      double s = e(i, col);
      for (int k = 0; k < i; ++k) s -= l[i][k] * w[k][col];
      w[i][col] = s / l[i][i];
    }
  SmallSym neg{d, {}};
  for (int row = 0; row < d; ++row)
    for (int i = row; i < d; ++i) {
      // M(row, i) = (L^{-1} w^T)(i, row) computed by substitution on column row of w^T
      double tmp[3] = {};
      for (int r = 0; r <= i; ++r) {
        double s = w[row][r];
        for (int k = 0; k < r; ++k) s -= l[r][k] * tmp[k];
        tmp[r] = s / l[r][r];
      }
      neg(row, i) = -tmp[i];
    }
  return -neg.min_eigenvalue();
}

bool positive_along(const SmallSym& g, const SmallSym& e, double t) {
  return (g - t * e).positive_definite();
}

}  // namespace

double class_positivity_time(const SymTensorField& g0, const SymTensorField& eta) {
  require_same_grid(g0.grid(), eta.grid(), "class_positivity_time");
  const SmallSym g = g0.mean();
  const SmallSym e = eta.mean();
  if (!g.positive_definite()) throw NotPositiveDefinite(g.min_eigenvalue());

  const double mu = max_generalized_eigenvalue(g, e);
  if (!(mu > 0.0)) return kNeverDegenerates;
  const double candidate = 1.0 / mu;
  constexpr double rel_tol = 1e-10;
  if (positive_along(g, e, candidate * (1.0 - rel_tol)) &&
      !positive_along(g, e, candidate * (1.0 + rel_tol)))
    return candidate;

  // Bisection fallback on the SPD predicate.
  double lo = 0.0, hi = 1.0;
  while (positive_along(g, e, hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return kNeverDegenerates;
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (positive_along(g, e, mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace hkflow
