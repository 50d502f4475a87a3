#include "hkflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hkflow {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x))
      throw InvalidField(std::string(what) + " contains a non-finite entry");
}

}  // namespace

PeriodicGrid::PeriodicGrid(int dim, int points_per_axis)
    : dim_(dim), n_(points_per_axis) {
  if (dim < 1 || dim > 3) throw InvalidField("grid dimension must be 1, 2 or 3");
  if (points_per_axis < 4) throw InvalidField("grid needs at least 4 points per axis");
  h_ = 1.0 / n_;
  size_ = 1;
  for (int k = 0; k < dim_; ++k) size_ *= static_cast<std::size_t>(n_);

  std::vector<std::size_t> plus(size_ * dim_), minus(size_ * dim_);
  std::array<std::size_t, 3> stride{1, 1, 1};
  for (int k = dim_ - 2; k >= 0; --k) stride[k] = stride[k + 1] * n_;
  for (std::size_t cell = 0; cell < size_; ++cell) {
    for (int k = 0; k < dim_; ++k) {
      const std::size_t ik = (cell / stride[k]) % n_;
      const std::size_t base = cell - ik * stride[k];
      plus[cell * dim_ + k] = base + ((ik + 1) % n_) * stride[k];
      minus[cell * dim_ + k] = base + ((ik + n_ - 1) % n_) * stride[k];
    }
  }
  plus_ = std::make_shared<const std::vector<std::size_t>>(std::move(plus));
  minus_ = std::make_shared<const std::vector<std::size_t>>(std::move(minus));
}

std::array<int, 3> PeriodicGrid::multi_index(std::size_t cell) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int k = dim_ - 1; k >= 0; --k) {
    idx[k] = static_cast<int>(cell % n_);
    cell /= n_;
  }
  return idx;
}

std::array<double, 3> PeriodicGrid::coords(std::size_t cell) const {
  const auto idx = multi_index(cell);
  return {idx[0] * h_, idx[1] * h_, idx[2] * h_};
}

void require_same_grid(const PeriodicGrid& a, const PeriodicGrid& b,
                       const char* where) {
  if (!(a == b)) throw GridMismatch(where);
}

// ---------------------------------------------------------------- ScalarField

ScalarField::ScalarField(PeriodicGrid grid, double value)
    : grid_(std::move(grid)), values_(grid_.size(), value) {
  if (!std::isfinite(value)) throw InvalidField("non-finite fill value");
}

ScalarField::ScalarField(PeriodicGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw InvalidField("scalar field length does not match the grid");
  require_finite(values_, "scalar field");
}

ScalarField ScalarField::sample(
    const PeriodicGrid& grid,
    const std::function<double(const std::array<double, 3>&)>& fn) {
  std::vector<double> v(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) v[c] = fn(grid.coords(c));
  return ScalarField(grid, std::move(v));
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(grid_, o.grid_, "ScalarField::+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(grid_, o.grid_, "ScalarField::-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField& ScalarField::operator+=(double s) {
  for (double& v : values_) v += s;
  return *this;
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

// ------------------------------------------------------------- SymTensorField

SymTensorField::SymTensorField(PeriodicGrid grid)
    : grid_(std::move(grid)), data_(grid_.size() * grid_.tensor_components(), 0.0) {}

SymTensorField::SymTensorField(PeriodicGrid grid, std::vector<double> packed)
    : grid_(std::move(grid)), data_(std::move(packed)) {
  if (data_.size() != grid_.size() * grid_.tensor_components())
    throw InvalidField("tensor field length does not match the grid");
  require_finite(data_, "tensor field");
}

SymTensorField SymTensorField::constant(const PeriodicGrid& grid, const SmallSym& value) {
  if (value.dim != grid.dim()) throw InvalidField("tensor order does not match grid dimension");
  SymTensorField t(grid);
  for (std::size_t c = 0; c < grid.size(); ++c) t.set(c, value);
  require_finite(t.data_, "tensor field");
  return t;
}

SymTensorField SymTensorField::identity(const PeriodicGrid& grid, double scale) {
  return constant(grid, SmallSym::identity(grid.dim(), scale));
}

SmallSym SymTensorField::at(std::size_t cell) const {
  SmallSym s{grid_.dim(), {}};
  const int nc = components();
  for (int k = 0; k < nc; ++k) s.c[k] = data_[cell * nc + k];
  return s;
}

void SymTensorField::set(std::size_t cell, const SmallSym& v) {
  const int nc = components();
  for (int k = 0; k < nc; ++k) data_[cell * nc + k] = v.c[k];
}

SmallSym SymTensorField::mean() const {
  SmallSym s{grid_.dim(), {}};
  const int nc = components();
  for (std::size_t c = 0; c < grid_.size(); ++c)
    for (int k = 0; k < nc; ++k) s.c[k] += data_[c * nc + k];
  for (int k = 0; k < nc; ++k) s.c[k] /= static_cast<double>(grid_.size());
  return s;
}

SymTensorField& SymTensorField::operator+=(const SymTensorField& o) {
  require_same_grid(grid_, o.grid_, "SymTensorField::+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

SymTensorField& SymTensorField::operator-=(const SymTensorField& o) {
  require_same_grid(grid_, o.grid_, "SymTensorField::-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

SymTensorField& SymTensorField::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

double SymTensorField::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

// ---------------------------------------------------------------- VectorField

VectorField::VectorField(PeriodicGrid grid)
    : grid_(std::move(grid)), data_(grid_.size() * grid_.dim(), 0.0) {}

double VectorField::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

// ------------------------------------------------------------------ operators

SymTensorField discrete_hessian(const ScalarField& u) {
  const PeriodicGrid& g = u.grid();
  const int dim = g.dim();
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  const double inv_4h2 = 0.25 * inv_h2;
  SymTensorField out(g);
  for (std::size_t c = 0; c < g.size(); ++c) {
    for (int k = 0; k < dim; ++k) {
      out(c, k, k) =
          (u[g.neighbor(c, k, +1)] - 2.0 * u[c] + u[g.neighbor(c, k, -1)]) * inv_h2;
      for (int l = k + 1; l < dim; ++l) {
        out(c, k, l) = (u[g.neighbor2(c, k, +1, l, +1)] - u[g.neighbor2(c, k, +1, l, -1)] -
                        u[g.neighbor2(c, k, -1, l, +1)] + u[g.neighbor2(c, k, -1, l, -1)]) *
                       inv_4h2;
      }
    }
  }
  return out;
}

VectorField discrete_gradient(const ScalarField& u) {
  const PeriodicGrid& g = u.grid();
  const double inv_2h = 0.5 / g.spacing();
  VectorField out(g);
  for (std::size_t c = 0; c < g.size(); ++c)
    for (int k = 0; k < g.dim(); ++k)
      out(c, k) = (u[g.neighbor(c, k, +1)] - u[g.neighbor(c, k, -1)]) * inv_2h;
  return out;
}

ScalarField det_field(const SymTensorField& t) {
  const PeriodicGrid& g = t.grid();
  std::vector<double> v(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) v[c] = t.at(c).det();
  return ScalarField(g, std::move(v));
}

ScalarField trace_pair(const SymTensorField& g1, const SymTensorField& g2) {
  require_same_grid(g1.grid(), g2.grid(), "trace_pair");
  const PeriodicGrid& g = g1.grid();
  std::vector<double> v(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) {
    const SmallSym a = g1.at(c);
    if (!a.positive_definite()) throw NotPositiveDefinite(a.min_eigenvalue());
    v[c] = trace_with_inverse(a.inverse(), g2.at(c));
  }
  return ScalarField(g, std::move(v));
}

double integrate(const ScalarField& u, const ScalarField& weight) {
  require_same_grid(u.grid(), weight.grid(), "integrate");
  double s = 0.0;
  for (std::size_t c = 0; c < u.size(); ++c) s += u[c] * weight[c];
  return s * std::pow(u.grid().spacing(), u.grid().dim());
}

double integrate(const ScalarField& u) {
  double s = 0.0;
  for (double v : u.values()) s += v;
  return s * std::pow(u.grid().spacing(), u.grid().dim());
}

Extrema sup_osc(const ScalarField& u) {
  const auto [lo, hi] = std::minmax_element(u.values().begin(), u.values().end());
  return {*hi, *lo, *hi - *lo};
}

SpdReport spd_check(const SymTensorField& t) {
  bool ok = true;
  double min_eig = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < t.grid().size(); ++c) {
    const SmallSym s = t.at(c);
    ok = ok && s.positive_definite();
    min_eig = std::min(min_eig, s.min_eigenvalue());
  }
  return {ok, min_eig};
}

ScalarField component(const SymTensorField& t, int i, int j) {
  std::vector<double> v(t.grid().size());
  for (std::size_t c = 0; c < v.size(); ++c) v[c] = t(c, i, j);
  return ScalarField(t.grid(), std::move(v));
}

}  // namespace hkflow
