#pragma once

#include <cmath>
#include <numbers>

#include "hkflow/grid.hpp"

namespace testing {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Symbol of the 3-point second difference on exp(2 pi i k x): -(2 pi k)^2 sinc^2.
inline double second_diff_symbol(int k, double h) {
  const double s = std::sin(kPi * k * h) / (kPi * k * h);
  return -(kTwoPi * k) * (kTwoPi * k) * s * s;
}

inline double first_diff_symbol(int k, double h) {
  return std::sin(kTwoPi * k * h) / h;
}

inline hkflow::ScalarField sine(const hkflow::PeriodicGrid& g, double amp, int axis = 0, int k = 1) {
  return hkflow::ScalarField::sample(
      g, [=](const auto& x) { return amp * std::sin(kTwoPi * k * x[axis]); });
}

inline hkflow::SymTensorField conformal(const hkflow::PeriodicGrid& g, double scale, double amp,
                                        int axis = 0) {
  hkflow::SymTensorField t(g);
  for (std::size_t c = 0; c < g.size(); ++c)
    t.set(c, hkflow::SmallSym::identity(g.dim(),
                                        scale + amp * std::sin(kTwoPi * g.coords(c)[axis])));
  return t;
}

inline double sup_diff(const hkflow::ScalarField& a, const hkflow::ScalarField& b) {
  double m = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) m = std::max(m, std::abs(a[c] - b[c]));
  return m;
}

}  // namespace testing
