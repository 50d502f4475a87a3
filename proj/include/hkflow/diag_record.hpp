#pragma once

namespace hkflow {

/// One row of monitored estimates along a run. Column order of series.csv.
struct DiagRecord {
  double t = 0.0;
  double dt = 0.0;
  double sup_phi = 0.0;
  double inf_phi = 0.0;
  double sup_phi_dot = 0.0;
  double inf_phi_dot = 0.0;
  double osc_phi_dot = 0.0;
  double min_eig_g = 0.0;
  double sup_tr_g0_g = 0.0;
  double sup_tr_g_g0 = 0.0;
  double shima_lhs = 0.0;
  double shima_rhs = 0.0;
  double beta_bar_min = 0.0;
  double residual_norm = 0.0;
};

}  // namespace hkflow
