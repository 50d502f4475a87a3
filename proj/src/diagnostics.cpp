#include "hkflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hkflow {

ScalarField beta_bar(const MetricField& m) {
  return trace_pair(m.assembled(), koszul_forms(m).beta);
}

DiagRecord record(const FlowState& state, const FlowSpec& spec) {
  DiagRecord r;
  r.t = state.t;
  r.dt = state.dt_last;

  const Extrema phi = sup_osc(state.phi);
  r.sup_phi = phi.sup;
  r.inf_phi = phi.inf;

  const Extrema dot = sup_osc(state.phi_dot);
  r.sup_phi_dot = dot.sup;
  r.inf_phi_dot = dot.inf;
  r.osc_phi_dot = dot.osc;

  const MetricField& m = state.metric;
  r.min_eig_g = m.min_eig();
  r.sup_tr_g0_g = sup_osc(trace_pair(spec.reference_metric(), m.assembled())).sup;
  r.sup_tr_g_g0 = sup_osc(trace_pair(m.assembled(), spec.reference_metric())).sup;

  const ShimaPair shima = shima_residual(m);
  r.shima_lhs = shima.lhs;
  r.shima_rhs = shima.rhs;
  r.beta_bar_min = sup_osc(beta_bar(m)).inf;
  r.residual_norm = residual_norm(spec, state.phi_dot);
  return r;
}

DecayFit fit_exponential(std::span<const std::pair<double, double>> series, double t_lo,
                         double t_hi) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [t, y] : series) {
    if (t < t_lo || t > t_hi) continue;
    if (!(y > 0.0))
      throw NonPositiveOrdinate("exponential fit needs positive ordinates (t = " +
                                std::to_string(t) + ")");
    pts.emplace_back(t, std::log(y));
  }
  if (pts.size() < kMinFitSamples)
    throw InsufficientData("exponential fit needs at least " +
                           std::to_string(kMinFitSamples) + " samples, got " +
                           std::to_string(pts.size()));

  const double n = static_cast<double>(pts.size());
  double mt = 0.0, my = 0.0;
  for (const auto& [t, ly] : pts) {
    mt += t;
    my += ly;
  }
  mt /= n;
  my /= n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (const auto& [t, ly] : pts) {
    stt += (t - mt) * (t - mt);
    sty += (t - mt) * (ly - my);
    syy += (ly - my) * (ly - my);
  }
  if (stt == 0.0) throw InsufficientData("exponential fit needs distinct abscissae");
  const double slope = sty / stt;
  const double intercept = my - slope * mt;
  // A constant series is fitted exactly.
  const double r2 = syy == 0.0 ? 1.0 : (sty * sty) / (stt * syy);
  return {-slope, std::exp(intercept), r2, t_lo, t_hi};
}

DecayFit fit_exponential_tail(std::span<const std::pair<double, double>> series,
                              double fraction) {
  if (series.empty()) throw InsufficientData("empty series");
  const double t0 = series.front().first;
  const double t1 = series.back().first;
  return fit_exponential(series, t1 - fraction * (t1 - t0), t1);
}

double trace_evolution_residual(const FlowState& prev, const FlowState& next,
                                const FlowSpec& spec) {
  if (!(prev.phi.grid() == next.phi.grid()) || !(prev.phi.grid() == spec.grid()))
    throw StateMismatch("states live on different grids");
  const double dt = next.t - prev.t;
  if (!(dt > 0.0)) throw StateMismatch("states are not in increasing time order");

  const MetricField& m = prev.metric;
  const KoszulData kd = koszul_forms(m);
  const ScalarField bb_prev = trace_pair(m.assembled(), kd.beta);
  const ScalarField bb_next = beta_bar(next.metric);
  const ScalarField lap = elliptic_apply(m, bb_prev);

  const int d = spec.grid().dim();
  double worst = 0.0;
  for (std::size_t c = 0; c < bb_prev.size(); ++c) {
    const SmallSym inv = m.inverse().at(c);
    const SmallSym b = kd.beta.at(c);
    // |beta|_g^2 = g^{li} g^{jk} beta_ij beta_kl
    double norm2 = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k)
          for (int l = 0; l < d; ++l) norm2 += inv(l, i) * inv(j, k) * b(i, j) * b(k, l);
    const double defect = (bb_next[c] - bb_prev[c]) / dt - lap[c] - norm2;
    worst = std::max(worst, std::abs(defect));
  }
  return worst;
}

ComparisonResult comparison_probe(const FlowSpec& spec, const ScalarField& phi_low,
                                  const ScalarField& phi_high, int steps, double dt,
                                  Stepper stepper) {
  auto gap_of = [](const ScalarField& lo, const ScalarField& hi) {
    double g = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < lo.size(); ++c) g = std::max(g, lo[c] - hi[c]);
    return g;
  };

  ComparisonResult out{false, gap_of(phi_low, phi_high), false, 0};
  try {
    FlowState lo = make_state(spec, 0.0, phi_low);
    FlowState hi = make_state(spec, 0.0, phi_high);
    for (int k = 0; k < steps; ++k) {
      lo = step(stepper, spec, lo, dt);
      hi = step(stepper, spec, hi, dt);
      out.worst_gap = std::max(out.worst_gap, gap_of(lo.phi, hi.phi));
      out.steps_completed = k + 1;
    }
  } catch (const Error&) {
    out.step_failed = true;
  }
  out.violated = out.worst_gap > kComparisonTolerance;
  return out;
}

namespace {

struct Quantity {
  const char* name;
  double (*get)(const DiagRecord&);
};

const Quantity kQuantities[] = {
    {"sup_abs_phi", [](const DiagRecord& r) { return std::max(std::abs(r.sup_phi), std::abs(r.inf_phi)); }},
    {"osc_phi", [](const DiagRecord& r) { return r.sup_phi - r.inf_phi; }},
    {"sup_abs_phi_dot", [](const DiagRecord& r) { return std::max(std::abs(r.sup_phi_dot), std::abs(r.inf_phi_dot)); }},
    {"osc_phi_dot", [](const DiagRecord& r) { return r.osc_phi_dot; }},
    {"inv_min_eig_g", [](const DiagRecord& r) { return 1.0 / r.min_eig_g; }},
    {"sup_tr_g0_g", [](const DiagRecord& r) { return r.sup_tr_g0_g; }},
    {"sup_tr_g_g0", [](const DiagRecord& r) { return r.sup_tr_g_g0; }},
    {"residual_norm", [](const DiagRecord& r) { return r.residual_norm; }},
};

constexpr double kMonotoneSlack = 1e-10;
constexpr double kSaturation = 1e-3;

}  // namespace

BoundsReport bounds_report(std::span<const DiagRecord> history) {
  if (history.empty()) throw EmptyHistory();
  BoundsReport rep;
  const std::size_t n = history.size();
  const auto late = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(n)));
  // A quantity counts as uniformly bounded when the final 10% of the run adds
  // at most kSaturation (relative) to the maximum reached before it; this
  // accepts quantities that saturate from below.
  for (const Quantity& q : kQuantities) {
    double early = -INFINITY, tail = -INFINITY;
    for (std::size_t k = 0; k < n; ++k) {
      double& slot = k < late ? early : tail;
      slot = std::max(slot, q.get(history[k]));
    }
    rep.maxima[q.name] = std::max(early, tail);
    rep.flags[std::string(q.name) + "_uniformly_bounded"] =
        n < 10 || tail <= early + kSaturation * std::abs(early) + 1e-12;
  }

  const auto skip = static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(n)));
  bool sup_down = true, inf_up = true, abs_down = true;
  for (std::size_t k = std::max<std::size_t>(skip, 1); k < n; ++k) {
    const DiagRecord& a = history[k - 1];
    const DiagRecord& b = history[k];
    sup_down = sup_down && b.sup_phi_dot <= a.sup_phi_dot + kMonotoneSlack;
    inf_up = inf_up && b.inf_phi_dot >= a.inf_phi_dot - kMonotoneSlack;
    const double sa = std::max(std::abs(a.sup_phi_dot), std::abs(a.inf_phi_dot));
    const double sb = std::max(std::abs(b.sup_phi_dot), std::abs(b.inf_phi_dot));
    abs_down = abs_down && sb <= sa + kMonotoneSlack;
  }
  rep.flags["sup_phi_dot_nonincreasing"] = sup_down;
  rep.flags["inf_phi_dot_nondecreasing"] = inf_up;
  rep.flags["sup_abs_phi_dot_nonincreasing"] = abs_down;
  return rep;
}

const std::vector<std::string>& diag_columns() {
  static const std::vector<std::string> cols = {
      "t",           "dt",          "sup_phi",   "inf_phi",      "sup_phi_dot",
      "inf_phi_dot", "osc_phi_dot", "min_eig_g", "sup_tr_g0_g",  "sup_tr_g_g0",
      "shima_lhs",   "shima_rhs",   "beta_bar_min", "residual_norm"};
  return cols;
}

std::vector<double> diag_values(const DiagRecord& r) {
  return {r.t,           r.dt,          r.sup_phi,   r.inf_phi,     r.sup_phi_dot,
          r.inf_phi_dot, r.osc_phi_dot, r.min_eig_g, r.sup_tr_g0_g, r.sup_tr_g_g0,
          r.shima_lhs,   r.shima_rhs,   r.beta_bar_min, r.residual_norm};
}

}  // namespace hkflow
