// Command-line front end: run a case with either or both solvers, run the
// mesh-independence study, or certify a stored field.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "cosserat/harness.hpp"

using namespace cosserat;

namespace {

struct CommonOptions
{
  std::string phi0 = "pi/3";
  std::string out = "out";
  double delta_L = 0.1;
  double mu = 1.0;
  double r = 2.0;
  double frank = 5e-4;
};

void add_common(CLI::App* app, CommonOptions& o)
{
  app->add_option("--phi0", o.phi0, "Reference director angle: radians or pi/<n>")->capture_default_str();
  app->add_option("--out", o.out, "Output directory")->capture_default_str();
  app->add_option("--delta-L", o.delta_L, "Prescribed end displacement")->capture_default_str();
  app->add_option("--mu", o.mu, "Shear modulus")->capture_default_str();
  app->add_option("--r", o.r, "Shape anisotropy")->capture_default_str();
  app->add_option("--frank", o.frank, "Frank coefficient")->capture_default_str();
}

CaseSetup make_case(const CommonOptions& o)
{
  CaseSetup c;
  c.phi0 = parse_angle(o.phi0);
  c.delta_L = o.delta_L;
  return c;
}

MaterialParams make_material(const CommonOptions& o, const CaseSetup& c)
{
  MaterialParams p;
  p.mu = o.mu;
  p.r = o.r;
  p.frank = o.frank;
  p.D = c.reference_director();
  return p;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Cosserat director elasticity: neural and reference solvers with stability certification"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML file with [run], [mesh-study] or [certify] sections; flags take precedence");
  bool deterministic = false;
  app.add_flag("--deterministic", deterministic, "Single-threaded linear algebra (bitwise reproducible runs)");

  // run
  CommonOptions run_opt;
  std::string solver = "both", format = "csv", optimizer = "adam_lbfgs", quadrature = "lobatto";
  RunConfig cfg;
  std::size_t ref_ny = 5;
  std::vector<double> continuation;
  auto* run = app.add_subcommand("run", "Solve one case and write fields, histories and reports");
  add_common(run, run_opt);
  run->add_option("--solver", solver, "nn, ref or both")->check(CLI::IsMember({"nn", "ref", "both"}))->capture_default_str();
  run->add_option("--seed", cfg.train.seed, "Network initialisation seed")->capture_default_str();
  run->add_option("--epochs", cfg.train.epochs, "Adam epochs")->capture_default_str();
  run->add_option("--learning-rate", cfg.train.learning_rate, "Adam learning rate")->capture_default_str();
  run->add_option("--final-learning-rate", cfg.train.final_learning_rate,
                  "Learning rate reached at the last Adam epoch (geometric decay)")
    ->capture_default_str();
  run->add_option("--optimizer", optimizer, "adam or adam_lbfgs")
    ->check(CLI::IsMember({"adam", "adam_lbfgs"}))
    ->capture_default_str();
  run->add_option("--lbfgs-iterations", cfg.train.lbfgs_iterations, "Quasi-Newton finisher iterations")
    ->capture_default_str();
  run->add_option("--quadrature", quadrature, "Training quadrature: lobatto, gauss or midpoint")
    ->check(CLI::IsMember({"lobatto", "gauss", "midpoint"}))
    ->capture_default_str();
  run->add_option("--cells-x", cfg.train.cells_x, "Quadrature cells along X")->capture_default_str();
  run->add_option("--cells-y", cfg.train.cells_y, "Quadrature cells along Y")->capture_default_str();
  run->add_option("--continuation", continuation, "Load fractions trained before the final load");
  run->add_option("--log-every", cfg.train.log_every, "Training progress interval (0 disables)")->capture_default_str();
  run->add_option("--ny", ref_ny, "Reference mesh elements across the width (nx = 5 ny)")->capture_default_str();
  run->add_option("--increments", cfg.program.n_increments, "Reference load increments")->capture_default_str();
  run->add_option("--format", format, "Field file format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  run->add_option("--grid-nx", cfg.grid.nx, "Evaluation lattice points along X")->capture_default_str();
  run->add_option("--grid-ny", cfg.grid.ny, "Evaluation lattice points along Y")->capture_default_str();
  run->add_flag("!--no-checkpoints", cfg.save_checkpoints, "Do not write network checkpoints");

  // mesh-study
  CommonOptions study_opt;
  std::vector<std::size_t> ny_list{5, 10, 15, 20};
  std::size_t study_increments = 300;
  auto* study = app.add_subcommand("mesh-study", "Final director statistics on refined reference meshes");
  add_common(study, study_opt);
  study->add_option("--ny", ny_list, "Elements across the width for each mesh")->capture_default_str();
  study->add_option("--increments", study_increments, "Load increments")->capture_default_str();

  // certify
  CommonOptions cert_opt;
  std::string field;
  std::size_t n_angles = 32;
  auto* cert = app.add_subcommand("certify", "Check a stored field against the pointwise stability conditions");
  add_common(cert, cert_opt);
  cert->add_option("--field", field, "Field grid file (.csv or .json)")->required();
  cert->add_option("--angles", n_angles, "Directions per angular scan")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::io_error);
  }
  if (deterministic)
    Eigen::setNbThreads(1);

  try {
    if (*run) {
      cfg.setup = make_case(run_opt);
      cfg.material = make_material(run_opt, cfg.setup);
      cfg.solvers = parse_solver(solver);
      cfg.train.optimizer = optimizer == "adam" ? OptimizerKind::adam : OptimizerKind::adam_lbfgs;
      cfg.train.quadrature = quadrature == "lobatto" ? QuadratureKind::lobatto_grid
                             : quadrature == "gauss" ? QuadratureKind::gauss_grid
                                                     : QuadratureKind::uniform_grid;
      cfg.train.continuation = continuation;
      if (cfg.train.log_every > 0)
        cfg.train.on_log = [](std::size_t epoch, double loss) {
          std::cout << "  epoch " << epoch << "  loss " << loss << std::endl;
        };
      cfg.ref_ny = ref_ny;
      cfg.ref_nx = 5 * ref_ny;
      cfg.format = format == "csv" ? FieldFormat::csv : FieldFormat::json;
      cfg.out_dir = run_opt.out;
      const RunOutcome r = run_case(cfg, &std::cout);
      return static_cast<int>(r.status);
    }
    if (*study) {
      const CaseSetup c = make_case(study_opt);
      const MaterialParams p = make_material(study_opt, c);
      const auto dir = prepare_output_dir(study_opt.out);
      LoadProgram program;
      program.n_increments = study_increments;
      program.delta_u_max = c.delta_L;
      std::vector<MeshStudyRow> rows;
      try {
        rows = mesh_independence_study(c, p, ny_list, program, {}, [](const MeshStudyRow& r) {
          std::cout << "ny " << r.ny << "  nx " << r.nx << "  phi min/mean/max " << r.min_phi << " / " << r.mean_phi
                    << " / " << r.max_phi << "  energy " << r.energy << std::endl;
        });
      } catch (const StageDiverged& e) {
        std::cerr << e.what() << '\n';
        return static_cast<int>(ExitCode::solver_failure);
      }
      write_mesh_study_csv(rows, (dir / "mesh_study.csv").string());
      return 0;
    }
    const CaseSetup c = make_case(cert_opt);
    const MaterialParams p = make_material(cert_opt, c);
    StabilityConfig sc;
    sc.n_angles = n_angles;
    const auto [rep, code] = certify_file(field, p, sc);
    const auto dir = prepare_output_dir(cert_opt.out);
    export_report(rep, (dir / "stability_certify.json").string());
    std::cout << (rep.passed ? "passed" : "FAILED") << ": " << rep.n_points << " points, " << rep.violations.size()
              << " violations\n";
    return static_cast<int>(code);
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
  }
  return static_cast<int>(ExitCode::io_error);
}
