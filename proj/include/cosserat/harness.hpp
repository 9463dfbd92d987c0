#pragma once

/**
 * \file harness.hpp
 * \brief Batch driver: runs a case through the network and/or reference
 * solver, compares the two on a common lattice, certifies both fields and
 * writes every artifact to an output directory.
 *
 * Difference grids are network minus reference.
 */

#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cosserat/errors.hpp"
#include "cosserat/field_grid.hpp"
#include "cosserat/network.hpp"
#include "cosserat/nnsolver.hpp"
#include "cosserat/refsolver.hpp"
#include "cosserat/stability.hpp"

namespace cosserat {

enum class ExitCode : int { ok = 0, solver_failure = 1, certification_failure = 2, io_error = 3 };

struct FieldError
{
  double relative_l2 = 0.0;
  double max_abs = 0.0;
};

struct DifferenceGrid
{
  std::size_t nx = 0, ny = 0;
  std::vector<Vec2> X;
  std::vector<double> u_x, u_y, u_mag, phi;
};

struct ComparisonReport
{
  FieldError u_x, u_y, u_mag, phi;
  DifferenceGrid difference;
  double energy_nn = 0.0;
  double energy_ref = 0.0;

  double energy_relative_difference() const
  {
    return std::abs(energy_nn - energy_ref) / std::max(std::abs(energy_ref), 1e-12);
  }
};

namespace detail {
inline FieldError field_error(const std::vector<double>& a, const std::vector<double>& b)
{
  double num = 0.0, den = 0.0, mx = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    num += d * d;
    den += b[k] * b[k];
    mx = std::max(mx, std::abs(d));
  }
  return {std::sqrt(num) / std::max(std::sqrt(den), 1e-12), mx};
}
} // namespace detail

/// Error norms of `nn` against `ref`; both must share the same lattice.
inline ComparisonReport compare(const FieldGrid& nn, const FieldGrid& ref, double energy_nn = 0.0,
                                double energy_ref = 0.0)
{
  if (nn.nx != ref.nx || nn.ny != ref.ny || nn.samples.size() != ref.samples.size())
    throw GridMismatch("grids have different dimensions");
  const std::size_t N = nn.samples.size();
  std::vector<double> a[4], b[4];
  for (auto& v : a)
    v.reserve(N);
  for (auto& v : b)
    v.reserve(N);
  ComparisonReport r;
  r.difference.nx = nn.nx;
  r.difference.ny = nn.ny;
  for (std::size_t k = 0; k < N; ++k) {
    const FieldSample& s = nn.samples[k];
    const FieldSample& t = ref.samples[k];
    if (std::abs(s.X.x - t.X.x) > 1e-12 || std::abs(s.X.y - t.X.y) > 1e-12)
      throw GridMismatch("grids differ at point " + std::to_string(k));
    const double va[4] = {s.u.x, s.u.y, norm(s.u), s.phi};
    const double vb[4] = {t.u.x, t.u.y, norm(t.u), t.phi};
    for (int c = 0; c < 4; ++c) {
      a[c].push_back(va[c]);
      b[c].push_back(vb[c]);
    }
    r.difference.X.push_back(s.X);
    r.difference.u_x.push_back(va[0] - vb[0]);
    r.difference.u_y.push_back(va[1] - vb[1]);
    r.difference.u_mag.push_back(va[2] - vb[2]);
    r.difference.phi.push_back(va[3] - vb[3]);
  }
  r.u_x = detail::field_error(a[0], b[0]);
  r.u_y = detail::field_error(a[1], b[1]);
  r.u_mag = detail::field_error(a[2], b[2]);
  r.phi = detail::field_error(a[3], b[3]);
  r.energy_nn = energy_nn;
  r.energy_ref = energy_ref;
  return r;
}

inline nlohmann::json to_json(const ComparisonReport& r)
{
  const auto fe = [](const FieldError& e) { return nlohmann::json{{"relative_l2", e.relative_l2}, {"max_abs", e.max_abs}}; };
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t k = 0; k < r.difference.X.size(); ++k)
    points.push_back({{"X", r.difference.X[k].x},
                      {"Y", r.difference.X[k].y},
                      {"u_x", r.difference.u_x[k]},
                      {"u_y", r.difference.u_y[k]},
                      {"u_mag", r.difference.u_mag[k]},
                      {"phi", r.difference.phi[k]}});
  return {{"errors", {{"u_x", fe(r.u_x)}, {"u_y", fe(r.u_y)}, {"u_mag", fe(r.u_mag)}, {"phi", fe(r.phi)}}},
          {"energy_nn", r.energy_nn},
          {"energy_ref", r.energy_ref},
          {"energy_relative_difference", r.energy_relative_difference()},
          {"difference", {{"convention", "nn_minus_ref"}, {"nx", r.difference.nx}, {"ny", r.difference.ny}, {"points", points}}}};
}

inline void write_json(const nlohmann::json& j, const std::string& path)
{
  auto os = detail::open_for_write(path);
  os << j.dump(2) << '\n';
  if (!os)
    throw IoError("write failed for '" + path + "'");
}

inline void export_report(const ComparisonReport& r, const std::string& path) { write_json(to_json(r), path); }
inline void export_report(const StabilityReport& r, const std::string& path) { write_json(to_json(r), path); }

/// Parses "pi/3", "pi/4", "pi/6" (any "pi/<n>") or a plain value in radians.
inline double parse_angle(const std::string& text)
{
  if (text.rfind("pi/", 0) == 0) {
    try {
      std::size_t used = 0;
      const double n = std::stod(text.substr(3), &used);
      if (used == text.size() - 3 && n != 0.0)
        return std::numbers::pi / n;
    } catch (const std::exception&) {
    }
    throw ConfigError("invalid angle '" + text + "'");
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v))
      return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("invalid angle '" + text + "'");
}

/// Artifact tag for a case: "pi3" for pi/3 and so on, else the angle in radians.
inline std::string case_name(double phi0)
{
  for (int n : {2, 3, 4, 6, 8, 12})
    if (std::abs(phi0 - std::numbers::pi / n) < 1e-12)
      return "pi" + std::to_string(n);
  std::ostringstream os;
  os << "phi0_" << phi0;
  return os.str();
}

struct SolverSelection
{
  bool nn = true;
  bool ref = true;
};

inline SolverSelection parse_solver(const std::string& s)
{
  if (s == "nn")
    return {true, false};
  if (s == "ref")
    return {false, true};
  if (s == "both")
    return {true, true};
  throw ConfigError("solver must be nn, ref or both");
}

struct RunConfig
{
  CaseSetup setup;
  SolverSelection solvers;
  MaterialParams material;
  TrainConfig train;
  std::size_t ref_nx = 25;
  std::size_t ref_ny = 5;
  LoadProgram program;
  StaggeredOptions staggered;
  StabilityConfig stability;
  GridSpec grid;
  FieldFormat format = FieldFormat::csv;
  std::string out_dir = ".";
  bool save_checkpoints = true;
};

struct RunOutcome
{
  ExitCode status = ExitCode::ok;
  std::optional<FieldGrid> nn_field, ref_field;
  std::optional<StabilityReport> nn_stability, ref_stability;
  std::optional<ComparisonReport> comparison;
  std::optional<TrainResult> training;
  std::optional<StaggeredResult> reference;
  std::vector<std::string> messages;
};

inline std::filesystem::path prepare_output_dir(const std::string& dir)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create output directory '" + dir + "'");
  const auto probe = std::filesystem::path(dir) / ".write_probe";
  {
    std::ofstream os(probe);
    if (!os)
      throw IoError("output directory '" + dir + "' is not writable");
  }
  std::filesystem::remove(probe, ec);
  return dir;
}

inline void write_training_history(const std::vector<HistoryEntry>& h, const std::string& path)
{
  auto os = detail::open_for_write(path);
  os << "epoch,loss\n";
  for (const auto& e : h)
    os << e.epoch << ',' << detail::fmt17(e.loss) << '\n';
  if (!os)
    throw IoError("write failed for '" + path + "'");
}

inline void write_reference_history(const std::vector<IncrementRecord>& h, const std::string& path)
{
  auto os = detail::open_for_write(path);
  os << "increment,load,energy,alternations\n";
  for (const auto& e : h)
    os << e.increment << ',' << detail::fmt17(e.load) << ',' << detail::fmt17(e.energy) << ',' << e.alternations
       << '\n';
  if (!os)
    throw IoError("write failed for '" + path + "'");
}

/**
 * Runs one case. Solver errors and failed certification are reported through
 * the returned status; I/O and configuration errors propagate as exceptions.
 */
inline RunOutcome run_case(const RunConfig& cfg, std::ostream* log = nullptr)
{
  cfg.setup.validate();
  cfg.material.validate();
  cfg.stability.validate();
  const auto dir = prepare_output_dir(cfg.out_dir);
  const std::string name = case_name(cfg.setup.phi0);
  const std::string ext = cfg.format == FieldFormat::csv ? ".csv" : ".json";
  MaterialParams p = cfg.material;
  p.D = cfg.setup.reference_director();

  RunOutcome out;
  bool solver_failed = false, cert_failed = false;
  const auto note = [&](const std::string& m) {
    out.messages.push_back(m);
    if (log)
      *log << m << '\n';
  };
  const auto certify = [&](const FieldGrid& g, const std::string& solver) {
    StabilityReport rep;
    try {
      rep = certify_field(g, p, cfg.stability);
    } catch (const InvalidField& e) {
      note(solver + ": certification rejected the field: " + e.what());
      cert_failed = true;
      return std::optional<StabilityReport>{};
    }
    export_report(rep, (dir / ("stability_" + solver + "_" + name + ".json")).string());
    note(solver + ": certification " + (rep.passed ? "passed" : "FAILED") + " (min LH " +
         detail::fmt17(rep.min_lh.value) + ", min rank-one " + detail::fmt17(rep.min_rank_one.value) + ")");
    if (!rep.passed)
      cert_failed = true;
    return std::optional<StabilityReport>{rep};
  };

  if (cfg.solvers.nn) {
    try {
      TrainResult tr = train(cfg.setup, cfg.train, p);
      note("nn: final energy " + detail::fmt17(tr.final_loss) + ", gradient norm " + detail::fmt17(tr.gradient_norm));
      write_training_history(tr.history, (dir / ("history_nn_" + name + ".csv")).string());
      if (cfg.save_checkpoints) {
        save_checkpoint({"deformation", cfg.train.seed, cfg.setup, tr.netU},
                        (dir / ("checkpoint_deformation_" + name + ".json")).string());
        save_checkpoint({"director", director_seed(cfg.train.seed), cfg.setup, tr.netPhi},
                        (dir / ("checkpoint_director_" + name + ".json")).string());
      }
      out.nn_field = sample_solution(tr.netU, tr.netPhi, cfg.setup, cfg.grid);
      export_fieldgrid(*out.nn_field, cfg.format, (dir / ("fieldgrid_nn_" + name + ext)).string());
      out.training = std::move(tr);
    } catch (const IoError&) {
      throw;
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      note(std::string("nn: solver failure: ") + e.what());
      solver_failed = true;
    }
    if (out.nn_field)
      out.nn_stability = certify(*out.nn_field, "nn");
  }

  if (cfg.solvers.ref) {
    try {
      const StructuredMesh mesh(cfg.ref_nx, cfg.ref_ny, cfg.setup.L, cfg.setup.W);
      LoadProgram program = cfg.program;
      program.delta_u_max = cfg.setup.delta_L;
      StaggeredResult sr = staggered_solve(cfg.setup, program, mesh, p, cfg.staggered);
      note("ref: final energy " + detail::fmt17(sr.final_energy));
      write_reference_history(sr.history, (dir / ("history_ref_" + name + ".csv")).string());
      out.ref_field = sample_discrete(sr.final_state, mesh, cfg.grid);
      export_fieldgrid(*out.ref_field, cfg.format, (dir / ("fieldgrid_ref_" + name + ext)).string());
      out.reference = std::move(sr);
    } catch (const IoError&) {
      throw;
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      note(std::string("ref: solver failure: ") + e.what());
      solver_failed = true;
    }
    if (out.ref_field)
      out.ref_stability = certify(*out.ref_field, "ref");
  }

  if (out.nn_field && out.ref_field) {
    out.comparison = compare(*out.nn_field, *out.ref_field, out.training->final_loss, out.reference->final_energy);
    export_report(*out.comparison, (dir / ("comparison_" + name + ".json")).string());
    const auto& c = *out.comparison;
    note("comparison: energy rel diff " + detail::fmt17(c.energy_relative_difference()) + ", u_x rel L2 " +
         detail::fmt17(c.u_x.relative_l2) + ", u_y rel L2 " + detail::fmt17(c.u_y.relative_l2) + ", phi max " +
         detail::fmt17(c.phi.max_abs));
  }

  out.status = solver_failed ? ExitCode::solver_failure
               : cert_failed ? ExitCode::certification_failure
                             : ExitCode::ok;
  return out;
}

/// Certifies a stored field file; returns the report and the exit status.
inline std::pair<StabilityReport, ExitCode> certify_file(const std::string& path, const MaterialParams& p,
                                                         const StabilityConfig& cfg)
{
  const FieldGrid g = import_fieldgrid(path);
  try {
    StabilityReport r = certify_field(g, p, cfg);
    return {r, r.passed ? ExitCode::ok : ExitCode::certification_failure};
  } catch (const InvalidField& e) {
    StabilityReport r;
    r.n_points = g.samples.size();
    r.passed = false;
    r.violations.push_back({e.point(), e.inverted() ? "inverted" : "director_norm", -1.0});
    return {r, ExitCode::certification_failure};
  }
}

} // namespace cosserat
