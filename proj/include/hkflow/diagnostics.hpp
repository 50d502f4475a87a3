#pragma once

// Monitored estimates along a run: C0 and phi_dot bounds, trace bounds, the
// Shima integral identity, the trace-of-beta evolution defect, exponential
// decay fits and comparison-principle probes.

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hkflow/diag_record.hpp"
#include "hkflow/flow.hpp"

namespace hkflow {

DiagRecord record(const FlowState& state, const FlowSpec& spec);

struct DecayFit {
  double rate;       ///< fitted exponential rate (minus the slope of log y)
  double amplitude;  ///< y(0) of the fitted exponential
  double r_squared;
  double t_lo;
  double t_hi;
};

inline constexpr std::size_t kMinFitSamples = 10;

/// Least-squares fit of log y = log A - rate t over samples with
/// t_lo <= t <= t_hi. Throws InsufficientData, NonPositiveOrdinate.
DecayFit fit_exponential(std::span<const std::pair<double, double>> series, double t_lo,
                         double t_hi);
/// Same, over the last `fraction` of the sampled time span.
DecayFit fit_exponential_tail(std::span<const std::pair<double, double>> series,
                              double fraction = 0.6);

/// Pointwise trace of beta(g) with respect to g.
ScalarField beta_bar(const MetricField& m);

/// Sup-norm of (bbar_next - bbar_prev)/dt - L_g bbar - |beta|_g^2 with the
/// coefficients taken from `prev`. Throws StateMismatch.
double trace_evolution_residual(const FlowState& prev, const FlowState& next,
                                const FlowSpec& spec);

struct ComparisonResult {
  bool violated;
  double worst_gap;      ///< max over steps of sup(phi_low - phi_high)
  bool step_failed;      ///< a step was rejected before `steps` completed
  int steps_completed;
};

inline constexpr double kComparisonTolerance = 1e-8;

/// Co-evolves two ordered initial potentials with identical fixed steps.
ComparisonResult comparison_probe(const FlowSpec& spec, const ScalarField& phi_low,
                                  const ScalarField& phi_high, int steps, double dt = 1e-3,
                                  Stepper stepper = Stepper::SemiImplicit);

struct BoundsReport {
  std::map<std::string, double> maxima;
  std::map<std::string, bool> flags;
};

/// Per-quantity maxima over the run plus uniform-boundedness and
/// monotonicity flags. Throws EmptyHistory.
BoundsReport bounds_report(std::span<const DiagRecord> history);

/// Column names of series.csv in DiagRecord order.
const std::vector<std::string>& diag_columns();
std::vector<double> diag_values(const DiagRecord& r);

}  // namespace hkflow
