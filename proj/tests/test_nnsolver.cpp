#include <gtest/gtest.h>

#include <numbers>

#include "cosserat/nnsolver.hpp"
#include "test_support.hpp"

using namespace cosserat;
using namespace cosserat::testing;

namespace {

CaseSetup make_case(double phi0, double delta_L = 0.1)
{
  CaseSetup c;
  c.phi0 = phi0;
  c.delta_L = delta_L;
  return c;
}

MaterialParams material_for(const CaseSetup& c)
{
  MaterialParams p;
  p.D = c.reference_director();
  return p;
}

TrainConfig short_config(std::size_t epochs)
{
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.optimizer = OptimizerKind::adam;
  cfg.cells_x = 10;
  cfg.cells_y = 3;
  cfg.seed = 3;
  return cfg;
}

} // namespace

TEST(Quadrature, WeightsSumToArea)
{
  const CaseSetup c = make_case(0.0);
  for (auto kind : {QuadratureKind::gauss_grid, QuadratureKind::uniform_grid}) {
    const QuadratureSet q = make_quadrature(c, kind, 50, 10);
    EXPECT_NEAR(q.total_weight(), 0.2, 1e-14);
    EXPECT_NO_THROW(q.validate(0.2));
    for (const auto& p : q.points) {
      EXPECT_GT(p.X.x, 0.0);
      EXPECT_LT(p.X.x, 1.0);
      EXPECT_GT(p.X.y, 0.0);
      EXPECT_LT(p.X.y, 0.2);
    }
  }
  EXPECT_EQ(make_quadrature(c, QuadratureKind::gauss_grid, 50, 10).points.size(), 2000u);
  EXPECT_EQ(make_quadrature(c, QuadratureKind::uniform_grid, 50, 10).points.size(), 500u);
}

TEST(Quadrature, RulesIntegrateCubicsExactly)
{
  const CaseSetup c = make_case(0.0);
  for (auto kind : {QuadratureKind::gauss_grid, QuadratureKind::lobatto_grid}) {
    const QuadratureSet q = make_quadrature(c, kind, 3, 2);
    double s = 0.0;
    for (const auto& p : q.points)
      s += p.weight * p.X.x * p.X.x * p.X.x * p.X.y * p.X.y * p.X.y;
    // int_0^1 x^3 dx * int_0^0.2 y^3 dy
    EXPECT_NEAR(s, 0.25 * std::pow(0.2, 4) / 4.0, 1e-17);
  }
}

TEST(Quadrature, LobattoRuleSamplesEdges)
{
  const CaseSetup c = make_case(0.0);
  const QuadratureSet q = make_quadrature(c, QuadratureKind::lobatto_grid, 50, 10);
  ASSERT_EQ(q.points.size(), 101u * 21u);
  EXPECT_NEAR(q.total_weight(), 0.2, 1e-14);
  EXPECT_NO_THROW(q.validate(0.2));
  // same points as the default evaluation lattice
  const GridSpec lattice;
  for (std::size_t j = 0; j < 21; ++j)
    for (std::size_t i = 0; i < 101; ++i) {
      const Vec2 X = q.points[j * 101 + i].X;
      EXPECT_NEAR(X.x, lattice.point(i, j).x, 1e-15);
      EXPECT_NEAR(X.y, lattice.point(i, j).y, 1e-15);
    }
  EXPECT_EQ(q.points.back().X, (Vec2{1.0, 0.2}));
  // corner weight h_x h_y / 36, edge-midpoint weight 4 h_x h_y / 36
  EXPECT_NEAR(q.points.front().weight, 0.02 * 0.02 / 36.0, 1e-18);
  EXPECT_NEAR(q.points[1].weight, 4.0 * 0.02 * 0.02 / 36.0, 1e-18);
}

TEST(Quadrature, InvalidRulesAreRejected)
{
  const CaseSetup c = make_case(0.0);
  EXPECT_THROW(make_quadrature(c, QuadratureKind::gauss_grid, 0, 10), ConfigError);
  QuadratureSet q = make_quadrature(c, QuadratureKind::uniform_grid, 4, 2);
  EXPECT_THROW(q.validate(0.3), ConfigError);
  q.points[0].weight = 0.0;
  EXPECT_THROW(q.validate(0.2), ConfigError);
}

TEST(EnergyLoss, ZeroNetworksUnloadedIsZero)
{
  for (double phi0 : {0.0, std::numbers::pi / 3, 2.0}) {
    const CaseSetup c = make_case(phi0, 0.0);
    const NetworkParams U = zero_params(2), P = zero_params(1);
    const EnergyLoss loss(c, make_quadrature(c, QuadratureKind::gauss_grid), material_for(c), U, P);
    EXPECT_LE(std::abs(loss.value(U, P)), 1e-15);
  }
}

TEST(EnergyLoss, ZeroNetworksGiveHomogeneousRamp)
{
  const CaseSetup c = make_case(std::numbers::pi / 3);
  const MaterialParams p = material_for(c);
  const NetworkParams U = zero_params(2), P = zero_params(1);
  const EnergyLoss loss(c, make_quadrature(c, QuadratureKind::gauss_grid), p, U, P);
  // energy density of diag(1.1, 1) with the director at pi/3, evaluated in extended precision
  const double expect = 0.2 * 0.010158570195675140;
  EXPECT_LE(rel_err(loss.value(U, P), expect), 1e-12);
  EXPECT_LE(rel_err(homogeneous_ramp_energy(c, p), expect), 1e-14);
}

TEST(EnergyLoss, MatchesIndependentQuadratureSum)
{
  const CaseSetup c = make_case(std::numbers::pi / 4);
  const MaterialParams p = material_for(c);
  NetworkParams U = init_params(11, 2), P = init_params(12, 1);
  for (auto& l : U.layers)
    l.W *= 0.5;
  const QuadratureSet q = make_quadrature(c, QuadratureKind::gauss_grid, 8, 3);
  const EnergyLoss loss(c, q, p, U, P);
  double expect = 0.0;
  const auto samples = quadrature_samples(U, P, c, q);
  for (std::size_t k = 0; k < samples.size(); ++k)
    expect += q.points[k].weight * energy_density({samples[k].F, samples[k].d, samples[k].gradd}, p);
  EXPECT_LE(rel_err(loss.value(U, P), expect), 1e-12);
}

TEST(EnergyLoss, PackUnpackRoundTrip)
{
  const CaseSetup c = make_case(0.5);
  const NetworkParams U = init_params(1, 2), P = init_params(2, 1);
  const EnergyLoss loss(c, make_quadrature(c, QuadratureKind::uniform_grid, 4, 2), material_for(c), U, P);
  const auto flat = loss.pack(U, P);
  EXPECT_EQ(flat.size(), loss.parameter_count());
  NetworkParams U2 = zero_params(2), P2 = zero_params(1);
  loss.unpack(flat, U2, P2);
  EXPECT_TRUE(U2 == U);
  EXPECT_TRUE(P2 == P);
  EXPECT_THROW(EnergyLoss(c, loss.quadrature(), material_for(c), P, U), ShapeMismatch);
}

TEST(EnergyLoss, InvertedQuadraturePointIsNamed)
{
  const CaseSetup c = make_case(0.0);
  NetworkParams U = zero_params(2);
  U.layers.back().b << -50.0, 0.0;
  const NetworkParams P = zero_params(1);
  const EnergyLoss loss(c, make_quadrature(c, QuadratureKind::uniform_grid, 4, 2), material_for(c), U, P);
  try {
    loss.value(U, P);
    FAIL() << "expected NonPositiveJacobian";
  } catch (const NonPositiveJacobian& e) {
    EXPECT_LT(e.jacobian(), 0.0);
    EXPECT_NE(e.where().find("quadrature point 0"), std::string::npos);
  }
}

TEST(Train, ConfigValidation)
{
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.continuation = {0.5, 1.5};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.epochs = 0;
  cfg.optimizer = OptimizerKind::adam;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Train, HistoryIsBitwiseReproducible)
{
  const CaseSetup c = make_case(std::numbers::pi / 3);
  TrainConfig cfg = short_config(40);
  cfg.optimizer = OptimizerKind::adam_lbfgs;
  cfg.lbfgs_iterations = 20;
  const TrainResult a = train(c, cfg, material_for(c));
  const TrainResult b = train(c, cfg, material_for(c));
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t k = 0; k < a.history.size(); ++k) {
    EXPECT_EQ(a.history[k].epoch, b.history[k].epoch);
    EXPECT_EQ(a.history[k].loss, b.history[k].loss);
  }
  EXPECT_TRUE(a.netU == b.netU);
  EXPECT_TRUE(a.netPhi == b.netPhi);
  EXPECT_EQ(a.final_loss, b.final_loss);
  cfg.seed = 4;
  EXPECT_NE(train(c, cfg, material_for(c)).history.front().loss, a.history.front().loss);
}

TEST(Train, HistoryDecreasesOverWindows)
{
  const CaseSetup c = make_case(std::numbers::pi / 3);
  TrainConfig cfg = short_config(1200);
  cfg.final_learning_rate = 1e-5;
  const TrainResult r = train(c, cfg, material_for(c));
  ASSERT_EQ(r.history.size(), 1200u);
  for (std::size_t k = 0; k + 500 < r.history.size(); ++k)
    EXPECT_LE(r.history[k + 500].loss, r.history[k].loss + 1e-6);
  for (std::size_t k = 0; k < r.history.size(); ++k)
    EXPECT_EQ(r.history[k].epoch, k);
}

TEST(Train, LearningRateSchedule)
{
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.final_learning_rate = 0.0;
  EXPECT_EQ(detail::scheduled_rate(cfg, 0, 100), 1e-3);
  EXPECT_EQ(detail::scheduled_rate(cfg, 99, 100), 1e-3);
  cfg.final_learning_rate = 1e-5;
  EXPECT_EQ(detail::scheduled_rate(cfg, 0, 101), 1e-3);
  EXPECT_NEAR(detail::scheduled_rate(cfg, 50, 101), 1e-4, 1e-16);
  EXPECT_NEAR(detail::scheduled_rate(cfg, 100, 101), 1e-5, 1e-18);
  cfg.final_learning_rate = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Train, ImprovesOnHomogeneousRamp)
{
  const CaseSetup c = make_case(std::numbers::pi / 3);
  const MaterialParams p = material_for(c);
  TrainConfig cfg = short_config(200);
  cfg.optimizer = OptimizerKind::adam_lbfgs;
  cfg.lbfgs_iterations = 200;
  const TrainResult r = train(c, cfg, p);
  EXPECT_LT(r.final_loss, homogeneous_ramp_energy(c, p));
  EXPECT_GT(r.final_loss, 0.0);
}

TEST(Train, UnloadedBodyReachesGroundState)
{
  const CaseSetup c = make_case(std::numbers::pi / 6, 0.0);
  TrainConfig cfg = short_config(300);
  cfg.optimizer = OptimizerKind::adam_lbfgs;
  cfg.lbfgs_iterations = 2000;
  const TrainResult r = train(c, cfg, material_for(c));
  EXPECT_LE(r.final_loss, 1e-8);
}

TEST(Train, ContinuationStagesExtendHistory)
{
  const CaseSetup c = make_case(std::numbers::pi / 4);
  TrainConfig cfg = short_config(30);
  cfg.continuation = {0.5};
  cfg.continuation_epochs = 20;
  const TrainResult r = train(c, cfg, material_for(c));
  EXPECT_EQ(r.history.size(), 50u);
}

TEST(Train, UnrecoverableStepsAreReported)
{
  const CaseSetup c = make_case(std::numbers::pi / 3);
  TrainConfig cfg = short_config(50);
  cfg.learning_rate = 50.0;
  cfg.max_backoffs = 0;
  try {
    train(c, cfg, material_for(c));
    FAIL() << "expected DivergedTraining";
  } catch (const DivergedTraining& e) {
    EXPECT_LT(e.epoch(), 50u);
  }
}

TEST(SampleSolution, GridMatchesPointwiseEvaluation)
{
  const CaseSetup c = make_case(std::numbers::pi / 6);
  const NetworkParams U = init_params(5, 2), P = init_params(6, 1);
  const GridSpec spec;
  const FieldGrid g = sample_solution(U, P, c, spec);
  ASSERT_EQ(g.samples.size(), 101u * 21u);
  for (std::size_t k : {0u, 100u, 101u, 1000u, 2120u}) {
    const auto& s = g.samples[k];
    const auto u = displacement(U, c, s.X);
    const auto d = director(P, c, s.X);
    EXPECT_LE(norm(s.u - u.u), 1e-13);
    EXPECT_LE(frobenius_norm(s.F - (Mat2::identity() + u.gradu)), 1e-13);
    EXPECT_LE(std::abs(s.phi - d.phi), 1e-13);
  }
  EXPECT_EQ(g.samples.back().X, (Vec2{1.0, 0.2}));
  EXPECT_LE(norm(g.samples.back().u - Vec2{0.1, 0.0}), 1e-14);
  EXPECT_EQ(g.samples.front().phi, c.phi0);
  EXPECT_TRUE(sample_solution(U, P, c, {0, 0}).samples.empty());
}
