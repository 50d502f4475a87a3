#pragma once

// Run configuration, orchestration and file formats.
//
// Config files are `key = value` lines; `#` starts a comment. Field entries
// take a preset name followed by `param=value` pairs, e.g.
//
//   kind = TwistedCalabi
//   dim = 2
//   N = 64
//   f = sin_cos amp=0.2 kx=1 ky=1

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "hkflow/flow.hpp"
#include "hkflow/oracle.hpp"

namespace hkflow {

/// A named analytic preset (or raw-array file) producing a field.
struct FieldRecipe {
  std::string preset;
  std::map<std::string, std::string> params;
};

struct RunConfig {
  FlowKind kind = FlowKind::TwistedCalabi;
  int dim = 1;
  int n = 32;
  double lambda = 0.0;
  FieldRecipe f{"zero", {}};
  FieldRecipe w{"zero", {}};
  FieldRecipe g0{"identity", {}};
  FieldRecipe eta{"zero", {}};
  FieldRecipe g{"zero", {}};  ///< fixed metric of RiemannianPMA
  bool g0_given = false;
  StepController controller;
  Stepper stepper = Stepper::SemiImplicit;
  std::filesystem::path out_dir = "out";
  long snapshot_every = 0;  ///< 0 disables periodic snapshots
  std::uint64_t seed = 1;
  bool oracle_check = false;
  NewtonConfig newton;
  std::filesystem::path base_dir = ".";  ///< resolves relative file recipes
};

/// Parses and fully validates a config. Throws ParseError, ValidationError.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text,
                            const std::filesystem::path& base_dir = ".");

PeriodicGrid make_grid(const RunConfig& cfg);
ScalarField build_scalar(const FieldRecipe& r, const PeriodicGrid& grid,
                         const std::filesystem::path& base_dir);
SymTensorField build_tensor(const FieldRecipe& r, const PeriodicGrid& grid,
                            const std::filesystem::path& base_dir);
/// FlowSpec described by a config; validated.
FlowSpec build_spec(const RunConfig& cfg);

// ------------------------------------------------------------------ snapshots

inline constexpr char kSnapshotMagic[8] = {'H', 'K', 'F', 'L', 'O', 'W', '1', '\0'};

struct Snapshot {
  FlowKind kind;
  double lambda;
  double t;
  long step_count;
  double dt_last;
  ScalarField phi;
  ScalarField f;
  ScalarField w;
  SymTensorField g0;
  SymTensorField eta;
};

/// Throws IoError.
void save_snapshot(const FlowState& state, const FlowSpec& spec,
                   const std::filesystem::path& path);
/// Throws IoError, FormatError.
Snapshot load_snapshot(const std::filesystem::path& path);
/// Overlays the snapshot's fields on a config-built spec and rebuilds the
/// state. Throws FormatError when the snapshot does not match the config.
std::pair<FlowSpec, FlowState> restore(const Snapshot& snap, const RunConfig& cfg);

// ------------------------------------------------------------------- commands

struct CommandOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<long> max_steps;
  bool quiet = false;
};

/// `run`: integrates the configured flow and writes series.csv,
/// outcome.txt, snapshots and (optionally) oracle_diff.txt.
int run_command(RunConfig cfg, const CommandOptions& opts = {});
/// `resume`: continues a run from a snapshot.
int resume_command(const std::filesystem::path& snapshot, RunConfig cfg,
                   const CommandOptions& opts = {});
/// `oracle`: Newton solve of the stationary equation only.
int oracle_command(RunConfig cfg, const CommandOptions& opts = {});
/// `verify`: invariant probe suite on the configured flow.
int verify_command(RunConfig cfg, const CommandOptions& opts = {});

/// Sup-norm distance after removing the volume average of each potential.
double normalized_distance(const FlowSpec& spec, const ScalarField& a, const ScalarField& b);

}  // namespace hkflow
