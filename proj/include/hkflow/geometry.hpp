#pragma once

// Hessian metrics on the flat torus: assembly g = base + Hess(phi), Koszul
// forms, the difference tensor gamma (= Levi-Civita Christoffel symbols in
// affine charts), curvature identities and class positivity times.

#include <limits>
#include <vector>

#include "hkflow/grid.hpp"

namespace hkflow {

/// How the potential enters the metric.
enum class HessianKind {
  Affine,      ///< base + flat-connection Hessian of the potential
  LeviCivita,  ///< base + Levi-Civita Hessian of the potential w.r.t. base
};

/// A positive-definite metric assembled from a base tensor and a potential.
/// Instances are only produced by the assembly functions, which reject
/// non-metrics, so every MetricField is SPD.
class MetricField {
 public:
  const SymTensorField& base() const { return base_; }
  const ScalarField& potential() const { return potential_; }
  const SymTensorField& assembled() const { return assembled_; }
  /// Pointwise inverse of the assembled tensor.
  const SymTensorField& inverse() const { return inverse_; }
  double min_eig() const { return min_eig_; }
  HessianKind kind() const { return kind_; }
  const PeriodicGrid& grid() const { return assembled_.grid(); }

 private:
  MetricField(SymTensorField base, ScalarField potential, SymTensorField assembled,
              HessianKind kind);

  friend MetricField assemble_metric(const SymTensorField&, const ScalarField&);
  friend MetricField assemble_riemannian_metric(const SymTensorField&, const ScalarField&);

  SymTensorField base_;
  ScalarField potential_;
  SymTensorField assembled_;
  SymTensorField inverse_;
  double min_eig_;
  HessianKind kind_;
};

/// g = base + discrete_hessian(potential). Throws NotPositiveDefinite.
MetricField assemble_metric(const SymTensorField& base, const ScalarField& potential);
/// g = base + levi_civita_hessian(base, potential). Throws NotPositiveDefinite.
MetricField assemble_riemannian_metric(const SymTensorField& base, const ScalarField& potential);

struct KoszulData {
  VectorField alpha;
  SymTensorField kappa;
  SymTensorField beta;
  ScalarField log_det_g;
};

/// Storage for Gamma^i_{jk}; symmetric in (j, k).
class ChristoffelField {
 public:
  explicit ChristoffelField(PeriodicGrid grid);

  const PeriodicGrid& grid() const { return grid_; }
  double operator()(std::size_t cell, int i, int j, int k) const {
    return data_[offset(cell, i, j, k)];
  }
  double& operator()(std::size_t cell, int i, int j, int k) {
    return data_[offset(cell, i, j, k)];
  }
  /// Gamma^k_{k i}.
  double contraction(std::size_t cell, int i) const;
  double max_abs() const;

 private:
  std::size_t offset(std::size_t cell, int i, int j, int k) const {
    const int d = grid_.dim();
    return ((cell * d + i) * d + j) * d + k;
  }
  PeriodicGrid grid_;
  std::vector<double> data_;
};

KoszulData koszul_forms(const MetricField& m);

/// L_g u = g^{ij} (Hess u)_{ij}, where Hess is the Hessian the metric was
/// assembled with (flat for affine metrics, Levi-Civita of the base otherwise).
ScalarField elliptic_apply(const MetricField& m, const ScalarField& u);

/// Levi-Civita symbols of an arbitrary SPD tensor field, central differences.
ChristoffelField christoffel(const SymTensorField& g);
/// gamma = Levi-Civita connection minus the flat one, for the assembled metric.
ChristoffelField gamma_tensor(const MetricField& m);

/// Max over cells/indices of |R_ijkl - (Q_ijkl - Q_jikl)/2|, with R built
/// from gamma via R(X,Y) = -[gamma_X, gamma_Y] and Q from third and fourth
/// differences of the potential. Requires a constant base tensor.
double hessian_curvature(const MetricField& m);

struct ShimaPair {
  double lhs;  ///< integral of Tr_g kappa dV_g
  double rhs;  ///< integral of |alpha|_g^2 dV_g
};
ShimaPair shima_residual(const MetricField& m);

/// (Hess u)_ij - Gamma^k_ij d_k u for the Levi-Civita connection of g.
SymTensorField levi_civita_hessian(const SymTensorField& g, const ScalarField& u);
SymTensorField levi_civita_hessian(const ChristoffelField& gamma, const ScalarField& u);

/// Largest t with mean(g0) - t * mean(eta) positive definite; +infinity when
/// eta has no positive direction.
double class_positivity_time(const SymTensorField& g0, const SymTensorField& eta);

inline constexpr double kNeverDegenerates = std::numeric_limits<double>::infinity();

}  // namespace hkflow
