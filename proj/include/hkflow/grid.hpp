#pragma once

// Periodic lattice on the flat torus R^n / Z^n and the discrete calculus
// used by every other module. Cells are stored in row-major order: the last
// axis varies fastest.

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "hkflow/errors.hpp"
#include "hkflow/small_sym.hpp"

namespace hkflow {

class PeriodicGrid {
 public:
  PeriodicGrid(int dim, int points_per_axis);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double spacing() const { return h_; }
  std::size_t size() const { return size_; }
  int tensor_components() const { return packed_size(dim_); }

  /// Cell reached from `cell` by `offset` (+1 or -1) steps along `axis`.
  std::size_t neighbor(std::size_t cell, int axis, int offset) const {
    return (offset > 0 ? (*plus_) : (*minus_))[cell * dim_ + axis];
  }
  /// Diagonal neighbour cell + sa e_a + sb e_b.
  std::size_t neighbor2(std::size_t cell, int a, int sa, int b, int sb) const {
    return neighbor(neighbor(cell, a, sa), b, sb);
  }

  std::array<int, 3> multi_index(std::size_t cell) const;
  std::array<double, 3> coords(std::size_t cell) const;

  friend bool operator==(const PeriodicGrid& a, const PeriodicGrid& b) {
    return a.dim_ == b.dim_ && a.n_ == b.n_;
  }

 private:
  int dim_;
  int n_;
  double h_;
  std::size_t size_;
  std::shared_ptr<const std::vector<std::size_t>> plus_;
  std::shared_ptr<const std::vector<std::size_t>> minus_;
};

void require_same_grid(const PeriodicGrid& a, const PeriodicGrid& b,
                       const char* where);

class ScalarField {
 public:
  explicit ScalarField(PeriodicGrid grid, double value = 0.0);
  ScalarField(PeriodicGrid grid, std::vector<double> values);

  /// Samples fn(x) at every lattice node x = i h.
  static ScalarField sample(const PeriodicGrid& grid,
                            const std::function<double(const std::array<double, 3>&)>& fn);

  const PeriodicGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);
  ScalarField& operator+=(double s);
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

  double max_abs() const;

 private:
  PeriodicGrid grid_;
  std::vector<double> values_;
};

class SymTensorField {
 public:
  explicit SymTensorField(PeriodicGrid grid);
  SymTensorField(PeriodicGrid grid, std::vector<double> packed);
  static SymTensorField constant(const PeriodicGrid& grid, const SmallSym& value);
  static SymTensorField identity(const PeriodicGrid& grid, double scale = 1.0);

  const PeriodicGrid& grid() const { return grid_; }
  int components() const { return grid_.tensor_components(); }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  double operator()(std::size_t cell, int i, int j) const {
    return data_[cell * components() + packed_index(grid_.dim(), i, j)];
  }
  double& operator()(std::size_t cell, int i, int j) {
    return data_[cell * components() + packed_index(grid_.dim(), i, j)];
  }
  SmallSym at(std::size_t cell) const;
  void set(std::size_t cell, const SmallSym& v);

  /// Cell average of every component.
  SmallSym mean() const;

  SymTensorField& operator+=(const SymTensorField& o);
  SymTensorField& operator-=(const SymTensorField& o);
  SymTensorField& operator*=(double s);
  friend SymTensorField operator+(SymTensorField a, const SymTensorField& b) { return a += b; }
  friend SymTensorField operator-(SymTensorField a, const SymTensorField& b) { return a -= b; }
  friend SymTensorField operator*(double s, SymTensorField a) { return a *= s; }

  double max_abs() const;

 private:
  PeriodicGrid grid_;
  std::vector<double> data_;
};

class VectorField {
 public:
  explicit VectorField(PeriodicGrid grid);

  const PeriodicGrid& grid() const { return grid_; }
  double operator()(std::size_t cell, int k) const { return data_[cell * grid_.dim() + k]; }
  double& operator()(std::size_t cell, int k) { return data_[cell * grid_.dim() + k]; }
  std::span<const double> data() const { return data_; }
  double max_abs() const;

 private:
  PeriodicGrid grid_;
  std::vector<double> data_;
};

struct Extrema {
  double sup;
  double inf;
  double osc;
};

struct SpdReport {
  bool ok;
  double min_eig;
};

/// Second central differences; the mixed entries use the 4-point cross.
SymTensorField discrete_hessian(const ScalarField& u);
/// Central first differences.
VectorField discrete_gradient(const ScalarField& u);
ScalarField det_field(const SymTensorField& t);
/// Pointwise Tr(g1^{-1} g2). Throws NotPositiveDefinite if g1 is not SPD.
ScalarField trace_pair(const SymTensorField& g1, const SymTensorField& g2);
/// Midpoint rule: sum u_i w_i h^dim.
double integrate(const ScalarField& u, const ScalarField& weight);
double integrate(const ScalarField& u);
Extrema sup_osc(const ScalarField& u);
SpdReport spd_check(const SymTensorField& t);

/// Component (i, j) of a tensor field as a scalar field.
ScalarField component(const SymTensorField& t, int i, int j);

}  // namespace hkflow
