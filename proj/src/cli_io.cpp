#include "hkflow/cli_io.hpp"

#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "hkflow/diagnostics.hpp"

namespace hkflow {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
}

bool parse_long(const std::string& s, long& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtol(s.c_str(), &end, 10);
  return errno == 0 && end == s.c_str() + s.size();
}

double to_double(const std::string& key, const std::string& v) {
  double d;
  if (!parse_double(v, d)) throw ValidationError(key, "expected a real number, got '" + v + "'");
  return d;
}

long to_long(const std::string& key, const std::string& v) {
  long l;
  if (!parse_long(v, l)) throw ValidationError(key, "expected an integer, got '" + v + "'");
  return l;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError(key, "expected true/false, got '" + v + "'");
}

FieldRecipe parse_recipe(const std::string& key, const std::string& value, int line) {
  std::istringstream in(value);
  FieldRecipe r;
  in >> r.preset;
  if (r.preset.empty()) throw ParseError(line, "empty field recipe for '" + key + "'");
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ParseError(line, "recipe parameter '" + tok + "' is not of the form name=value");
    if (!r.params.emplace(tok.substr(0, eq), tok.substr(eq + 1)).second)
      throw ParseError(line, "duplicate recipe parameter '" + tok.substr(0, eq) + "'");
  }
  return r;
}

// Reads recipe parameters and rejects any that were not consumed.
class Params {
 public:
  Params(const FieldRecipe& r, std::string field) : r_(r), field_(std::move(field)) {}

  double real(const std::string& name, double fallback) {
    used_.insert(name);
    const auto it = r_.params.find(name);
    return it == r_.params.end() ? fallback : to_double(field_ + "." + name, it->second);
  }
  int integer(const std::string& name, int fallback) {
    used_.insert(name);
    const auto it = r_.params.find(name);
    return it == r_.params.end() ? fallback
                                 : static_cast<int>(to_long(field_ + "." + name, it->second));
  }
  std::string text(const std::string& name) {
    used_.insert(name);
    const auto it = r_.params.find(name);
    if (it == r_.params.end()) throw ValidationError(field_, "preset needs '" + name + "='");
    return it->second;
  }
  void done() const {
    for (const auto& [k, v] : r_.params)
      if (!used_.count(k))
        throw ValidationError(field_, "unknown parameter '" + k + "' for preset '" +
                                          r_.preset + "'");
  }

 private:
  const FieldRecipe& r_;
  std::string field_;
  std::set<std::string> used_;
};

int checked_axis(int axis, const PeriodicGrid& grid, const std::string& field) {
  if (axis < 0 || axis >= grid.dim())
    throw ValidationError(field, "axis " + std::to_string(axis) + " outside the grid");
  return axis;
}

std::vector<double> read_raw(const fs::path& path, std::size_t count, const std::string& field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(field, "cannot open raw array '" + path.string() + "'");
  std::vector<double> out(count);
  for (double& v : out) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8))
      throw ValidationError(field, "raw array '" + path.string() + "' is too short");
    std::uint64_t bits = 0;
    for (int k = 7; k >= 0; --k) bits = (bits << 8) | b[k];
    v = std::bit_cast<double>(bits);
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw ValidationError(field, "raw array '" + path.string() + "' is too long");
  return out;
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

PeriodicGrid make_grid(const RunConfig& cfg) { return PeriodicGrid(cfg.dim, cfg.n); }

ScalarField build_scalar(const FieldRecipe& r, const PeriodicGrid& grid,
                         const fs::path& base_dir) {
  const std::string& p = r.preset;
  Params prm(r, p);
  ScalarField out(grid);
  if (p == "zero") {
  } else if (p == "constant") {
    out = ScalarField(grid, prm.real("value", 0.0));
  } else if (p == "sine" || p == "cosine") {
    const double amp = prm.real("amp", 1.0);
    const int k = prm.integer("k", 1);
    const int axis = checked_axis(prm.integer("axis", 0), grid, p);
    const bool sine = p == "sine";
    out = ScalarField::sample(grid, [&](const auto& x) {
      const double a = kTwoPi * k * x[axis];
      return amp * (sine ? std::sin(a) : std::cos(a));
    });
  } else if (p == "sin_cos") {
    if (grid.dim() < 2) throw ValidationError(p, "needs dim >= 2");
    const double amp = prm.real("amp", 1.0);
    const int kx = prm.integer("kx", 1), ky = prm.integer("ky", 1);
    out = ScalarField::sample(grid, [&](const auto& x) {
      return amp * std::sin(kTwoPi * kx * x[0]) * std::cos(kTwoPi * ky * x[1]);
    });
  } else if (p == "product_sine") {
    const double amp = prm.real("amp", 1.0);
    const int k = prm.integer("k", 1);
    const int d = grid.dim();
    out = ScalarField::sample(grid, [&](const auto& x) {
      double v = amp;
      for (int a = 0; a < d; ++a) v *= std::sin(kTwoPi * k * x[a]);
      return v;
    });
  } else if (p == "file") {
    out = ScalarField(grid, read_raw(base_dir / prm.text("path"), grid.size(), p));
  } else {
    throw ValidationError("recipe", "unknown scalar preset '" + p + "'");
  }
  prm.done();
  return out;
}

SymTensorField build_tensor(const FieldRecipe& r, const PeriodicGrid& grid,
                            const fs::path& base_dir) {
  const std::string& p = r.preset;
  Params prm(r, p);
  const int d = grid.dim();
  SymTensorField out(grid);
  if (p == "zero") {
  } else if (p == "identity") {
    out = SymTensorField::identity(grid, prm.real("scale", 1.0));
  } else if (p == "diag") {
    std::istringstream in(prm.text("values"));
    SmallSym s = SmallSym::zero(d);
    std::string item;
    int i = 0;
    while (std::getline(in, item, ',')) {
      if (i >= d) throw ValidationError(p, "more diagonal values than dimensions");
      s(i, i) = to_double(p + ".values", trim(item));
      ++i;
    }
    if (i != d) throw ValidationError(p, "needs exactly dim diagonal values");
    out = SymTensorField::constant(grid, s);
  } else if (p == "conformal_sine") {
    const double scale = prm.real("scale", 1.0);
    const double amp = prm.real("amp", 0.0);
    const int k = prm.integer("k", 1);
    const int axis = checked_axis(prm.integer("axis", 0), grid, p);
    for (std::size_t c = 0; c < grid.size(); ++c)
      out.set(c, SmallSym::identity(d, scale + amp * std::sin(kTwoPi * k * grid.coords(c)[axis])));
  } else if (p == "file") {
    out = SymTensorField(grid, read_raw(base_dir / prm.text("path"),
                                        grid.size() * grid.tensor_components(), p));
  } else {
    throw ValidationError("recipe", "unknown tensor preset '" + p + "'");
  }
  prm.done();
  return out;
}

FlowSpec build_spec(const RunConfig& cfg) {
  const PeriodicGrid grid = make_grid(cfg);
  FlowSpec spec(cfg.kind, grid);
  spec.lambda = cfg.lambda;
  spec.f = build_scalar(cfg.f, grid, cfg.base_dir);
  spec.eta = build_tensor(cfg.eta, grid, cfg.base_dir);
  spec.base_metric_riemannian = build_tensor(cfg.g, grid, cfg.base_dir);
  if (cfg.kind == FlowKind::RiemannianPMA && !cfg.g0_given)
    spec.g0 = spec.base_metric_riemannian;
  else
    spec.g0 = build_tensor(cfg.g0, grid, cfg.base_dir);

  if (cfg.w.preset == "neg_log_det_g0") {
    // Omega^2 = 1: the unnormalized flow without a volume-form twist.
    Params(cfg.w, "w").done();
    std::vector<double> v(grid.size());
    for (std::size_t c = 0; c < grid.size(); ++c) v[c] = -std::log(spec.g0.at(c).det());
    spec.omega_log = ScalarField(grid, std::move(v));
  } else {
    spec.omega_log = build_scalar(cfg.w, grid, cfg.base_dir);
  }
  spec.validate();
  return spec;
}

RunConfig parse_config_text(const std::string& text, const fs::path& base_dir) {
  RunConfig cfg;
  cfg.base_dir = base_dir;
  std::set<std::string> seen;
  bool have_kind = false, have_dim = false, have_n = false;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ParseError(line, "missing key");
    if (value.empty()) throw ParseError(line, "missing value for '" + key + "'");
    if (!seen.insert(key).second) throw ParseError(line, "duplicate key '" + key + "'");

    StepController& c = cfg.controller;
    if (key == "kind") {
      cfg.kind = parse_flow_kind(value);
      have_kind = true;
    } else if (key == "dim") {
      cfg.dim = static_cast<int>(to_long(key, value));
      have_dim = true;
    } else if (key == "N") {
      cfg.n = static_cast<int>(to_long(key, value));
      have_n = true;
    } else if (key == "lambda") {
      cfg.lambda = to_double(key, value);
    } else if (key == "f") {
      cfg.f = parse_recipe(key, value, line);
    } else if (key == "w") {
      cfg.w = parse_recipe(key, value, line);
    } else if (key == "g0") {
      cfg.g0 = parse_recipe(key, value, line);
      cfg.g0_given = true;
    } else if (key == "eta") {
      cfg.eta = parse_recipe(key, value, line);
    } else if (key == "g") {
      cfg.g = parse_recipe(key, value, line);
    } else if (key == "dt_init") {
      c.dt_init = to_double(key, value);
    } else if (key == "dt_min") {
      c.dt_min = to_double(key, value);
    } else if (key == "dt_max") {
      c.dt_max = to_double(key, value);
    } else if (key == "safety") {
      c.safety = to_double(key, value);
    } else if (key == "tol_converge") {
      c.tol_converge = to_double(key, value);
    } else if (key == "t_max") {
      c.t_max = to_double(key, value);
    } else if (key == "max_steps") {
      c.max_steps = to_long(key, value);
    } else if (key == "stepper") {
      cfg.stepper = parse_stepper(value);
    } else if (key == "out") {
      cfg.out_dir = value;
    } else if (key == "snapshot_every") {
      cfg.snapshot_every = to_long(key, value);
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(to_long(key, value));
    } else if (key == "oracle_check") {
      cfg.oracle_check = to_bool(key, value);
    } else if (key == "newton_tol") {
      cfg.newton.tol_residual = to_double(key, value);
    } else if (key == "newton_max_iters") {
      cfg.newton.max_iters = static_cast<int>(to_long(key, value));
    } else {
      throw ParseError(line, "unknown key '" + key + "'");
    }
  }

  if (!have_kind) throw ValidationError("kind", "missing");
  if (!have_dim) throw ValidationError("dim", "missing");
  if (!have_n) throw ValidationError("N", "missing");
  if (cfg.dim < 1 || cfg.dim > 3) throw ValidationError("dim", "must be 1, 2 or 3");
  if (cfg.n < 4) throw ValidationError("N", "must be at least 4");
  if (cfg.snapshot_every < 0) throw ValidationError("snapshot_every", "must be non-negative");
  if (cfg.kind == FlowKind::RiemannianPMA && cfg.g.preset == "zero")
    throw ValidationError("g", "RiemannianPMA needs the fixed metric g");
  cfg.controller.validate();
  cfg.newton.validate();
  try {
    (void)build_spec(cfg);
  } catch (const InvalidField& e) {
    throw ValidationError("field", e.what());
  }
  return cfg;
}

RunConfig parse_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

// ------------------------------------------------------------------ snapshots

namespace {

void put_u64(std::ostream& out, std::uint64_t bits) {
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 8);
}
void put_u32(std::ostream& out, std::uint32_t bits) {
  unsigned char b[4];
  for (int k = 0; k < 4; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
  out.write(reinterpret_cast<const char*>(b), 4);
}
void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
void put_array(std::ostream& out, std::span<const double> v) {
  for (double x : v) put_f64(out, x);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("8 more bytes", "end of file");
  std::uint64_t bits = 0;
  for (int k = 7; k >= 0; --k) bits = (bits << 8) | b[k];
  return bits;
}
std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("4 more bytes", "end of file");
  std::uint32_t bits = 0;
  for (int k = 3; k >= 0; --k) bits = (bits << 8) | b[k];
  return bits;
}
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }
std::vector<double> get_array(std::istream& in, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = get_f64(in);
  return v;
}

}  // namespace

void save_snapshot(const FlowState& state, const FlowSpec& spec, const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write snapshot '" + path.string() + "'");
  out.write(kSnapshotMagic, sizeof kSnapshotMagic);
  put_u32(out, static_cast<std::uint32_t>(spec.grid().dim()));
  put_u32(out, static_cast<std::uint32_t>(spec.grid().n()));
  put_f64(out, state.t);
  put_u32(out, static_cast<std::uint32_t>(spec.kind));
  put_f64(out, spec.lambda);
  put_u64(out, static_cast<std::uint64_t>(state.step_count));
  put_f64(out, state.dt_last);
  put_array(out, state.phi.values());
  put_array(out, spec.f.values());
  put_array(out, spec.omega_log.values());
  put_array(out, spec.g0.data());
  put_array(out, spec.eta.data());
  if (!out) throw IoError("failed while writing snapshot '" + path.string() + "'");
}

Snapshot load_snapshot(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read snapshot '" + path.string() + "'");
  char magic[8];
  if (!in.read(magic, 8)) throw FormatError("magic HKFLOW1", "truncated header");
  if (std::memcmp(magic, kSnapshotMagic, 8) != 0)
    throw FormatError("magic HKFLOW1", "'" + std::string(magic, strnlen(magic, 8)) + "'");
  const auto dim = static_cast<int>(get_u32(in));
  const auto n = static_cast<int>(get_u32(in));
  if (dim < 1 || dim > 3 || n < 4)
    throw FormatError("dim in 1..3 and N >= 4",
                      "dim " + std::to_string(dim) + ", N " + std::to_string(n));
  const double t = get_f64(in);
  const auto kind_code = get_u32(in);
  if (kind_code > 3) throw FormatError("flow kind code 0..3", std::to_string(kind_code));
  const double lambda = get_f64(in);
  const auto steps = static_cast<long>(get_u64(in));
  const double dt_last = get_f64(in);

  const PeriodicGrid grid(dim, n);
  const std::size_t cells = grid.size();
  const std::size_t tens = cells * grid.tensor_components();
  try {
    ScalarField phi(grid, get_array(in, cells));
    ScalarField f(grid, get_array(in, cells));
    ScalarField w(grid, get_array(in, cells));
    SymTensorField g0(grid, get_array(in, tens));
    SymTensorField eta(grid, get_array(in, tens));
    if (in.peek() != std::char_traits<char>::eof())
      throw FormatError("end of file", "trailing bytes");
    return Snapshot{static_cast<FlowKind>(kind_code), lambda, t, steps, dt_last,
                    std::move(phi), std::move(f), std::move(w), std::move(g0), std::move(eta)};
  } catch (const InvalidField& e) {
    throw FormatError("finite arrays", e.what());
  }
}

std::pair<FlowSpec, FlowState> restore(const Snapshot& snap, const RunConfig& cfg) {
  if (snap.phi.grid().dim() != cfg.dim || snap.phi.grid().n() != cfg.n)
    throw FormatError("grid dim " + std::to_string(cfg.dim) + " N " + std::to_string(cfg.n),
                      "dim " + std::to_string(snap.phi.grid().dim()) + " N " +
                          std::to_string(snap.phi.grid().n()));
  if (snap.kind != cfg.kind)
    throw FormatError(std::string(to_string(cfg.kind)), std::string(to_string(snap.kind)));
  if (snap.lambda != cfg.lambda)
    throw FormatError("lambda " + std::to_string(cfg.lambda),
                      "lambda " + std::to_string(snap.lambda));
  FlowSpec spec = build_spec(cfg);
  spec.f = snap.f;
  spec.omega_log = snap.w;
  spec.g0 = snap.g0;
  spec.eta = snap.eta;
  spec.validate();
  FlowState state = make_state(spec, snap.t, snap.phi, snap.dt_last, snap.step_count);
  return {std::move(spec), std::move(state)};
}

// ------------------------------------------------------------------- commands

namespace {

std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class SeriesWriter {
 public:
  explicit SeriesWriter(const fs::path& path) : out_(path, std::ios::trunc) {
    if (!out_) throw IoError("cannot write '" + path.string() + "'");
    const auto& cols = diag_columns();
    for (std::size_t k = 0; k < cols.size(); ++k) out_ << (k ? "," : "") << cols[k];
    out_ << '\n';
  }
  void write(const DiagRecord& r) {
    const auto vals = diag_values(r);
    for (std::size_t k = 0; k < vals.size(); ++k) out_ << (k ? "," : "") << full(vals[k]);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

fs::path prepare_out(const RunConfig& cfg, const CommandOptions& opts) {
  const fs::path dir = opts.out_dir ? *opts.out_dir : cfg.out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

std::string snapshot_name(long step) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "snapshot_%08ld.bin", step);
  return buf;
}

bool has_oracle(const FlowSpec& spec) {
  if (spec.kind == FlowKind::NormalizedLambda) return true;
  if (spec.kind == FlowKind::TwistedCalabi) return true;
  return spec.kind == FlowKind::RiemannianPMA;
}

EllipticSolution solve_oracle(const FlowSpec& spec, const NewtonConfig& cfg) {
  if (spec.lambda > 0.0) return newton_solve(spec, cfg);
  return newton_solve_normalized(spec, cfg);
}

int drive(const FlowSpec& spec, const RunConfig& cfg, const CommandOptions& opts,
          std::optional<FlowState> start) {
  const fs::path dir = prepare_out(cfg, opts);
  StepController ctl = cfg.controller;
  if (opts.max_steps) ctl.max_steps = *opts.max_steps;

  SeriesWriter series(dir / "series.csv");
  DiagHooks hooks;
  hooks.keep_history = false;
  hooks.on_record = [&](const DiagRecord& r, const FlowState& s) {
    series.write(r);
    if (cfg.snapshot_every > 0 && s.step_count > 0 && s.step_count % cfg.snapshot_every == 0)
      save_snapshot(s, spec, dir / snapshot_name(s.step_count));
    if (!opts.quiet && s.step_count % 100 == 0)
      std::cout << "step " << s.step_count << "  t " << full(s.t) << "  residual "
                << r.residual_norm << '\n';
  };
  const RunOutcome out = run(spec, ctl, cfg.stepper, hooks, std::move(start));
  save_snapshot(out.final, spec, dir / "final.bin");

  {
    std::ofstream o(dir / "outcome.txt", std::ios::trunc);
    o << "status " << to_string(out.status) << '\n'
      << "t " << full(out.final.t) << '\n'
      << "steps " << out.final.step_count << '\n'
      << "residual " << full(residual_norm(spec, out.final.phi_dot)) << '\n'
      << "min_eig_g " << full(out.final.metric.min_eig()) << '\n';
    if (out.status == RunStatus::BlowUp)
      o << "failing_min_eig " << full(out.failing_min_eig) << '\n';
    if (!o) throw IoError("cannot write outcome.txt");
  }
  if (!opts.quiet)
    std::cout << "status " << to_string(out.status) << " at t " << full(out.final.t)
              << " after " << out.final.step_count << " steps\n";

  if (cfg.oracle_check && out.status == RunStatus::Converged && has_oracle(spec)) {
    const EllipticSolution sol = solve_oracle(spec, cfg.newton);
    const double diff = normalized_distance(spec, out.final.phi, sol.phi);
    std::ofstream o(dir / "oracle_diff.txt", std::ios::trunc);
    o << "sup_norm_difference " << full(diff) << '\n'
      << "oracle_iterations " << sol.iterations << '\n'
      << "oracle_residual " << full(sol.final_residual) << '\n'
      << "oracle_c " << full(sol.c) << '\n';
    if (!opts.quiet) std::cout << "oracle difference " << diff << '\n';
  }
  return 0;
}

}  // namespace

double normalized_distance(const FlowSpec& spec, const ScalarField& a, const ScalarField& b) {
  const double shift = spec.mean_adjusted() ? volume_average(spec, a) - volume_average(spec, b)
                                            : 0.0;
  double m = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) m = std::max(m, std::abs(a[c] - b[c] - shift));
  return m;
}

int run_command(RunConfig cfg, const CommandOptions& opts) {
  const FlowSpec spec = build_spec(cfg);
  return drive(spec, cfg, opts, std::nullopt);
}

int resume_command(const fs::path& snapshot, RunConfig cfg, const CommandOptions& opts) {
  auto [spec, state] = restore(load_snapshot(snapshot), cfg);
  return drive(spec, cfg, opts, std::move(state));
}

int oracle_command(RunConfig cfg, const CommandOptions& opts) {
  const FlowSpec spec = build_spec(cfg);
  if (!has_oracle(spec))
    throw ValidationError("kind", "MaximalTime has no stationary equation");
  const fs::path dir = prepare_out(cfg, opts);
  const EllipticSolution sol = solve_oracle(spec, cfg.newton);
  const FlowState st = make_state(spec, 0.0, sol.phi, 0.0, sol.iterations);
  save_snapshot(st, spec, dir / "oracle_solution.bin");
  std::ofstream o(dir / "oracle.txt", std::ios::trunc);
  o << "iterations " << sol.iterations << '\n'
    << "residual " << full(sol.final_residual) << '\n'
    << "c " << full(sol.c) << '\n';
  if (!opts.quiet)
    std::cout << "Newton converged in " << sol.iterations << " iterations, residual "
              << sol.final_residual << ", c " << full(sol.c) << '\n';
  return 0;
}

int verify_command(RunConfig cfg, const CommandOptions& opts) {
  const FlowSpec spec = build_spec(cfg);
  const fs::path dir = prepare_out(cfg, opts);
  const PeriodicGrid& grid = spec.grid();
  std::ofstream o(dir / "verify.txt", std::ios::trunc);
  bool all = true;
  auto report = [&](const std::string& name, bool ok, double value) {
    all = all && ok;
    o << (ok ? "PASS " : "FAIL ") << name << ' ' << full(value) << '\n';
    if (!opts.quiet) std::cout << (ok ? "PASS " : "FAIL ") << name << "  " << value << '\n';
  };

  // Short run; the geometric identities are checked on its final state.
  StepController ctl = cfg.controller;
  ctl.max_steps = std::min<long>(opts.max_steps.value_or(ctl.max_steps), 50);
  if (spec.kind == FlowKind::MaximalTime) {
    // Stay well inside [0, T): the identities below lose their constants as
    // the metric degenerates.
    const double T = class_positivity_time(spec.g0, spec.eta);
    if (std::isfinite(T)) ctl.t_max = std::min(ctl.t_max, 0.5 * T);
  }
  const RunOutcome out = run(spec, ctl, Stepper::SemiImplicit);
  const FlowState& s0 = out.final;
  const double h = grid.spacing();

  {
    bool positive = true;
    for (const DiagRecord& r : out.history) positive = positive && r.min_eig_g > 0.0;
    report("recorded_metrics_positive", positive, out.history.back().min_eig_g);
  }
  if (spec.kind == FlowKind::TwistedCalabi) {
    const BoundsReport rep = bounds_report(out.history);
    report("phi_dot_sup_nonincreasing", rep.flags.at("sup_phi_dot_nonincreasing"),
           rep.maxima.at("sup_abs_phi_dot"));
    report("phi_dot_inf_nondecreasing", rep.flags.at("inf_phi_dot_nondecreasing"),
           rep.maxima.at("sup_abs_phi_dot"));
  }
  // alpha_i = Gamma^k_{ki}, up to the O(h^2) gap between the two stencils.
  {
    const KoszulData kd = koszul_forms(s0.metric);
    const ChristoffelField gam = gamma_tensor(s0.metric);
    double worst = 0.0;
    for (std::size_t c = 0; c < grid.size(); ++c)
      for (int i = 0; i < grid.dim(); ++i)
        worst = std::max(worst, std::abs(kd.alpha(c, i) - gam.contraction(c, i)));
    report("koszul_contraction", worst <= 100.0 * h * h, worst);
  }
  // The integral identity needs a Hessian metric, which g + LC-Hess phi is not.
  if (s0.metric.kind() == HessianKind::Affine) {
    const ShimaPair sp = shima_residual(s0.metric);
    report("shima_rhs_nonnegative", sp.rhs >= 0.0, sp.rhs);
    report("shima_gap", std::abs(sp.lhs - sp.rhs) <= 100.0 * h * h * (1.0 + sp.rhs),
           std::abs(sp.lhs - sp.rhs));
  }
  // (det g/det g0)^(1/n) <= Tr_{g0} g / n <= (det g/det g0) (Tr_g g0)^(n-1).
  {
    const int n = grid.dim();
    const SymTensorField& g0 = spec.reference_metric();
    const SymTensorField& g = s0.metric.assembled();
    const ScalarField t12 = trace_pair(g0, g);
    const ScalarField t21 = trace_pair(g, g0);
    double worst = -INFINITY;
    for (std::size_t c = 0; c < grid.size(); ++c) {
      const double ratio = g.at(c).det() / g0.at(c).det();
      worst = std::max(worst, std::pow(ratio, 1.0 / n) - t12[c] / n);
      worst = std::max(worst, t12[c] / n - ratio * std::pow(t21[c], n - 1));
    }
    report("volume_trace_inequality", worst <= 1e-12, worst);
  }
  // Order preservation on seeded random ordered pairs.
  {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> amp(0.0, 0.01);
    double worst = -INFINITY;
    bool ok = true;
    for (int pair = 0; pair < 2; ++pair) {
      const double a = amp(rng), b = amp(rng);
      const ScalarField hi = ScalarField::sample(grid, [&](const auto& x) {
        return a * (1.0 - std::cos(kTwoPi * x[0])) + b;
      });
      const ComparisonResult r = comparison_probe(spec, ScalarField(grid), hi, 20, 1e-3);
      worst = std::max(worst, r.worst_gap);
      ok = ok && !r.violated && !r.step_failed;
    }
    report("comparison_principle", ok, worst);
  }
  return all ? 0 : 1;
}

}  // namespace hkflow
